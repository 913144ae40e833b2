// Copyright 2026 The voxshield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOXSHIELD_CLI_H_
#define VOXSHIELD_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace voxshield {

// Entry point behind the voxshield binary. Returns the process exit code:
// 0 on success, 1 on any failure (with a message on `err`).
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads `key = value` lines ('#' comments) and turns them into `--key=value`
// arguments. Throws Error(kMalformedLine) naming the line.
std::vector<std::string> ConfigFileArguments(const std::string& path);

}  // namespace voxshield

#endif  // VOXSHIELD_CLI_H_
