#pragma once

#include <stdexcept>
#include <string>

namespace procache {

// Bad configuration or parameters supplied by the user (CLI exit code 2).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A runtime invariant was broken, e.g. a policy produced an action that
// violates the cache capacity (CLI exit code 3).
struct invariant_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace procache
