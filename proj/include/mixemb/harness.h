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

#ifndef MIXEMB_HARNESS_H_
#define MIXEMB_HARNESS_H_

namespace mixemb {

// Entry point shared by the CLI binary and the acceptance suite.
// Exit codes: 0 success, 1 usage error, 2 runtime/data error.
int run_cli(int argc, char** argv);

}  // namespace mixemb

#endif  // MIXEMB_HARNESS_H_
