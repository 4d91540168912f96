// Copyright (c) 2026 The mixemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIXEMB_CHECKPOINT_H_
#define MIXEMB_CHECKPOINT_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mixemb/tensor.h"

namespace mixemb {

// On-disk format: <dir>/meta.json (tensor names, shapes, offsets, dtype,
// config echo) + <dir>/tensors.bin (little-endian 64-bit floats).
void save_checkpoint(const std::string& dir,
                     const std::vector<std::pair<std::string, Tensor>>& tensors,
                     const nlohmann::json& extra);

struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  nlohmann::json extra;
};

Checkpoint load_checkpoint(const std::string& dir);

// SHA-256 over meta.json and tensors.bin, hex encoded.
std::string checkpoint_hash(const std::string& dir);

}  // namespace mixemb

#endif  // MIXEMB_CHECKPOINT_H_
