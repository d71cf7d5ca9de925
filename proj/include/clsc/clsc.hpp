// Copyright 2026 The CLSC Authors.
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

#include "clsc/classifier.hpp"
#include "clsc/clsc_loss.hpp"
#include "clsc/config.hpp"
#include "clsc/dataset_io.hpp"
#include "clsc/encoder.hpp"
#include "clsc/error.hpp"
#include "clsc/experiments.hpp"
#include "clsc/graph_lp.hpp"
#include "clsc/metrics.hpp"
#include "clsc/model.hpp"
#include "clsc/synth.hpp"
#include "clsc/train.hpp"
#include "clsc/types.hpp"
