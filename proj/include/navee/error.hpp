#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace navee {

enum class ErrorKind {
  InputShape,
  LayerIndex,
  EmptyInput,
  LabelDomain,
  StrategyConfig,
  Ordering,
  ConfigValidation,
  TraceBinding,
  ReportShape,
  Domain,
  UnsupportedBackend,
  Parse,
  Validation,
  Fingerprint,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure the library reports carries a kind so the CLI can map it to
// an exit code and tests can assert on the category rather than the text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace navee
