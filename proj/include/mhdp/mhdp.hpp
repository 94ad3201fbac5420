// Copyright 2026 The Authors.
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

// Umbrella header.

#pragma once

#include "mhdp/corpus.hpp"
#include "mhdp/corpus_io.hpp"
#include "mhdp/crf.hpp"
#include "mhdp/error.hpp"
#include "mhdp/eval.hpp"
#include "mhdp/exact.hpp"
#include "mhdp/information_gain.hpp"
#include "mhdp/model.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/parallel.hpp"
#include "mhdp/planner.hpp"
#include "mhdp/recognition.hpp"
#include "mhdp/report.hpp"
#include "mhdp/rng.hpp"
