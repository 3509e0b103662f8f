#pragma once

#include <stdexcept>
#include <string>

namespace linkage {

/// Base class for all toolkit errors. Messages carry enough location
/// detail (file, row, column, stage) to act on without a debugger.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace linkage
