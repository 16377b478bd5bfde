#pragma once

#include <stdexcept>
#include <string>

namespace ddsde {

enum class errc {
  invalid_argument = 1,
  domain_error = 2,
  resolution_error = 3,
  config_error = 4,
  io_error = 5,
  data_mismatch = 6,
  not_applicable = 7,
  internal_error = 8,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

[[noreturn]] void fail(errc code, const std::string& msg);

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace ddsde
