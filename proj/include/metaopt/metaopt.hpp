// Copyright 2026 The metaopt Authors.
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

#include "metaopt/analysis.hpp"
#include "metaopt/constraints.hpp"
#include "metaopt/core.hpp"
#include "metaopt/drivers.hpp"
#include "metaopt/meta_learner.hpp"
#include "metaopt/optimism_bmg.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/rng.hpp"
#include "metaopt/trajectory.hpp"
#include "metaopt/update_rules.hpp"
