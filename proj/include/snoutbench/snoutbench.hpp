// Copyright 2026 The snoutbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "snoutbench/baselines.hpp"
#include "snoutbench/budget.hpp"
#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/experiment.hpp"
#include "snoutbench/fleet.hpp"
#include "snoutbench/qbs.hpp"
#include "snoutbench/query.hpp"
#include "snoutbench/random.hpp"
#include "snoutbench/rule.hpp"
#include "snoutbench/search.hpp"
