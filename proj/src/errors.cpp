#include "ddsde/errors.hpp"

namespace ddsde {

const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::domain_error: return "domain_error";
    case errc::resolution_error: return "resolution_error";
    case errc::config_error: return "config_error";
    case errc::io_error: return "io_error";
    case errc::data_mismatch: return "data_mismatch";
    case errc::not_applicable: return "not_applicable";
    case errc::internal_error: return "internal_error";
  }
  return "unknown";
}

void fail(errc code, const std::string& msg) {
  throw Error(code, std::string(errc_name(code)) + ": " + msg);
}

}  // namespace ddsde
