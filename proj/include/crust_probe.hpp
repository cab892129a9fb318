/*******************************************************************************
* Copyright 2026 The crust-probe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#ifndef CRUST_PROBE_HPP
#define CRUST_PROBE_HPP

#include "crust_probe/core.hpp"
#include "crust_probe/io.hpp"
#include "crust_probe/survey.hpp"
#include "crust_probe/geo.hpp"
#include "crust_probe/tiles.hpp"
#include "crust_probe/thickness.hpp"
#include "crust_probe/synth.hpp"
#include "crust_probe/autoencoder.hpp"
#include "crust_probe/svm.hpp"
#include "crust_probe/evaluation.hpp"

#endif // CRUST_PROBE_HPP
