/*
 * Copyright 2026 The cfclust Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: `fit`, `explain`, `sweep` and `eval`.
//
// Exit codes: 0 success, 2 usage, 3 data, 4 fit failure, 5 solver failure.
// Each command prints a one-line JSON summary on standard output.

#ifndef CFCLUST_CLI_H_
#define CFCLUST_CLI_H_

#include <ostream>

namespace cfclust {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitFit = 4;
inline constexpr int kExitSolve = 5;

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfclust

#endif  // CFCLUST_CLI_H_
