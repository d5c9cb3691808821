#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svkit {

enum class ErrorCategory {
  config,        // malformed or incompatible configuration
  validation,    // model parameters violate an invariant
  nonexistence,  // a requested moment does not exist for the given nu
  numeric,       // non-finite or degenerate numerical state
  io,            // file could not be read or written
  precondition,  // input shape/size requirement not met
};

std::string_view category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace svkit
