// Copyright 2026 The octoarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "octoarm/errors.hpp"
#include "octoarm/se3.hpp"
#include "octoarm/rod.hpp"
#include "octoarm/muscles.hpp"
#include "octoarm/statics.hpp"
#include "octoarm/tasks.hpp"
#include "octoarm/energy_shaping.hpp"
#include "octoarm/dynamics.hpp"
#include "octoarm/config.hpp"
#include "octoarm/harness.hpp"
#include "octoarm/validation.hpp"
