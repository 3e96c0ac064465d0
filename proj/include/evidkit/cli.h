// Copyright 2026 The evidkit Authors.
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

#ifndef EVIDKIT_CLI_H_
#define EVIDKIT_CLI_H_

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace evidkit::cli {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (without the program name). Files go to the
// directory given by --out; a metadata.json describing the run is written
// next to them.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

}  // namespace evidkit::cli

#endif  // EVIDKIT_CLI_H_
