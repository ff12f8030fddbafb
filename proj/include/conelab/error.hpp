#pragma once

#include <stdexcept>
#include <string>

namespace conelab {

// Numerical or precondition failure raised by any module. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conelab
