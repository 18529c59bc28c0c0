#include "ecbayes/error.hpp"

namespace ecbayes {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::parse: return "parse";
    case ErrorKind::config: return "config";
    case ErrorKind::improper_posterior: return "improper_posterior";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::elicitation: return "elicitation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::usage: return "usage";
  }
  return "error";
}

void rethrow_with_stage(const Error& e, std::string stage) {
  if (!e.stage().empty()) throw e;
  throw Error(e.kind(), std::move(stage), e.what());
}

}  // namespace ecbayes
