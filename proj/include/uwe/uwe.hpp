// Copyright 2026 The uwe Authors
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

// Convenience header pulling in the whole library.

#include "uwe/autodiff.hpp"
#include "uwe/checkpoint.hpp"
#include "uwe/config.hpp"
#include "uwe/data.hpp"
#include "uwe/dsffnet.hpp"
#include "uwe/errors.hpp"
#include "uwe/fft.hpp"
#include "uwe/fourier.hpp"
#include "uwe/gac.hpp"
#include "uwe/gradcheck.hpp"
#include "uwe/image_io.hpp"
#include "uwe/inference.hpp"
#include "uwe/losses.hpp"
#include "uwe/metrics.hpp"
#include "uwe/model.hpp"
#include "uwe/nn.hpp"
#include "uwe/ops.hpp"
#include "uwe/optim.hpp"
#include "uwe/tensor.hpp"
#include "uwe/train.hpp"
