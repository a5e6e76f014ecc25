/* Copyright 2026 The qbcf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef QBCF_STATS_CORE_HPP
#define QBCF_STATS_CORE_HPP

// Random streams, normal special functions, Cholesky and the variate
// generators shared by the estimation modules.

#include "qbcf/linalg.hpp"
#include "qbcf/normal.hpp"
#include "qbcf/random_stream.hpp"
#include "qbcf/samplers.hpp"

#endif  // QBCF_STATS_CORE_HPP
