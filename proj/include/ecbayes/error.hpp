#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecbayes {

enum class ErrorKind {
  domain,            // argument outside the mathematical domain
  insufficient_data, // too few samples or draws
  parse,             // malformed ensemble / posterior file
  config,            // schema violation in an analysis config
  improper_posterior,
  convergence,
  elicitation,       // guided elicitation undefined for the given inputs
  not_found,
  usage,
};

/// Snake-case name of the kind, as used in API error bodies.
std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. The kind drives CLI exit codes and
/// HTTP status mapping; the optional stage names the pipeline step that failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Error(ErrorKind kind, std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

/// Re-throws `e` prefixed with a stage label, keeping its kind.
[[noreturn]] void rethrow_with_stage(const Error& e, std::string stage);

}  // namespace ecbayes
