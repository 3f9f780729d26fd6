#pragma once

#include <stdexcept>
#include <string>

namespace posebias {

// Every contract violation in the library surfaces as this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace posebias
