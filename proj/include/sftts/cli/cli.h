// Copyright 2026 The sftts Authors.
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

// The `sftts` command line: toygen, prepare, train, synth, analyze, metrics,
// inspect. Kept as a library so tests can drive it in-process.

#ifndef SFTTS_CLI_CLI_H_
#define SFTTS_CLI_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace sftts::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Default corpus directory when --corpus is not given.
inline constexpr char kCorpusRootEnv[] = "SFTTS_CORPUS_ROOT";

inline constexpr char kVersion[] = "0.1.0";

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sftts::cli

#endif  // SFTTS_CLI_CLI_H_
