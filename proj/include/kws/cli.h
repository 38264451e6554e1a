// kws/cli.h

// Copyright 2026  The kws-confusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: one binary, subcommands gen-corpus, featurize, augment,
// train, eval, detect and det-curve. Settings resolve flag > config file >
// built-in default. Exit status: 0 success, 1 invalid input, 2 runtime failure.

#ifndef KWS_CLI_H_
#define KWS_CLI_H_

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kws {

/// `[section]` headers and `key = value` lines; '#' and ';' start comments.
/// Keys outside any section go to section "".
using ConfigFile = std::map<std::string, std::map<std::string, std::string>>;
ConfigFile parse_config_text(std::string_view text);
ConfigFile load_config(const std::string& path);

/// args excludes the program name. Normal output goes to `out`; the resolved
/// configuration and diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kws

#endif  // KWS_CLI_H_
