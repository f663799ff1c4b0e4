// Copyright 2026 The gercodes Authors
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

#include "gercodes/codebook.hpp"
#include "gercodes/codetrie.hpp"
#include "gercodes/dataset.hpp"
#include "gercodes/embedding.hpp"
#include "gercodes/error.hpp"
#include "gercodes/eval.hpp"
#include "gercodes/experiment.hpp"
#include "gercodes/hkc.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/parallel.hpp"
#include "gercodes/rng.hpp"
#include "gercodes/synthetic.hpp"
#include "gercodes/tinyger.hpp"
#include "gercodes/tokenizer.hpp"
