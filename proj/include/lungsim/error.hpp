#pragma once

#include <stdexcept>
#include <string>

namespace lungsim {

/// Broad failure classes. The CLI maps each one to its own exit code.
enum class ErrorKind {
  io = 3,             // file missing, unreadable or unwritable
  format = 4,         // malformed header, payload or table
  unsupported = 5,    // valid file using a feature we do not read
  invalid_argument = 6,
  domain = 7,         // value outside a table or model range
  segmentation = 8,   // no lung found, empty masks
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Offending header key, config key or parameter name; may be empty.
  const std::string& field() const noexcept { return field_; }

private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace lungsim
