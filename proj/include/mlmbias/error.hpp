#pragma once

#include <stdexcept>
#include <string>

namespace mlmbias {

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlmbias
