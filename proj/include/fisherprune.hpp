/* Copyright 2026 The fisherprune Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FISHERPRUNE_FISHERPRUNE_HPP_
#define FISHERPRUNE_FISHERPRUNE_HPP_

#include "fisherprune/common.hpp"
#include "fisherprune/config.hpp"
#include "fisherprune/data.hpp"
#include "fisherprune/fisher.hpp"
#include "fisherprune/harness.hpp"
#include "fisherprune/mask.hpp"
#include "fisherprune/network.hpp"
#include "fisherprune/pruning.hpp"
#include "fisherprune/quantization.hpp"
#include "fisherprune/serialize.hpp"
#include "fisherprune/tensor.hpp"

#endif  // FISHERPRUNE_FISHERPRUNE_HPP_
