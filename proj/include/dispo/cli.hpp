#pragma once
// dispo command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 incomplete cells, 4 missing data, 5 render failure.

#include <iosfwd>
#include <string>
#include <vector>

#include "dispo/harness.hpp"

namespace dispo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIncomplete = 3;
inline constexpr int kExitMissingData = 4;
inline constexpr int kExitRender = 5;

struct CliHooks {
    /// Replaces make_provider for `run`, `simulate` and `demo`.
    ProviderFactory provider_factory;
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliHooks& hooks = {});

}  // namespace dispo
