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

#ifndef QBCF_QBCF_HPP
#define QBCF_QBCF_HPP

#include "qbcf/bootstrap.hpp"
#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/first_stage.hpp"
#include "qbcf/format.hpp"
#include "qbcf/mnp_gibbs.hpp"
#include "qbcf/nelder_mead.hpp"
#include "qbcf/parallel.hpp"
#include "qbcf/probit_oracle.hpp"
#include "qbcf/quantile.hpp"
#include "qbcf/quasi_bayes.hpp"
#include "qbcf/simulation.hpp"
#include "qbcf/stats_core.hpp"

#endif  // QBCF_QBCF_HPP
