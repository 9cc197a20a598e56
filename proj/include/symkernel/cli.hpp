#pragma once

#include <string>
#include <vector>

namespace symkernel {

/// Entry point behind the symkernelc binary; args exclude argv[0].
/// Exit codes: 0 ok, 2 usage, 3 parse, 4 constraint, 5 not-representable.
int run_cli(const std::vector<std::string>& args);

}  // namespace symkernel
