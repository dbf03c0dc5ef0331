// Copyright 2026 The Strada Authors. All Rights Reserved.
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

#include "strada/checkpoint.hpp"
#include "strada/config_io.hpp"
#include "strada/convgru.hpp"
#include "strada/data/clip.hpp"
#include "strada/data/dataset.hpp"
#include "strada/data/image.hpp"
#include "strada/data/raster.hpp"
#include "strada/data/sampling.hpp"
#include "strada/data/synthetic.hpp"
#include "strada/error.hpp"
#include "strada/evaluate.hpp"
#include "strada/grad_check.hpp"
#include "strada/lane_net.hpp"
#include "strada/loss.hpp"
#include "strada/metrics.hpp"
#include "strada/network_config.hpp"
#include "strada/ops.hpp"
#include "strada/optim.hpp"
#include "strada/serialize.hpp"
#include "strada/tensor.hpp"
#include "strada/train.hpp"
