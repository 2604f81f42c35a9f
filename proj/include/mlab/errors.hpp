#pragma once

#include <stdexcept>
#include <string>

namespace mlab {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes:
// config errors are caller mistakes detectable up front, numeric errors are
// runtime failures of an otherwise valid run, misuse is a violated API
// precondition, io covers files and formats.
enum class errc : int {
  ok = 0,
  config = 2,
  numeric = 3,
  misuse = 4,
  io = 5,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

struct config_error : error {
  explicit config_error(const std::string& w) : error(errc::config, w) {}
};

struct numeric_error : error {
  explicit numeric_error(const std::string& w) : error(errc::numeric, w) {}
};

struct misuse_error : error {
  explicit misuse_error(const std::string& w) : error(errc::misuse, w) {}
};

struct io_error : error {
  explicit io_error(const std::string& w) : error(errc::io, w) {}
};

}  // namespace mlab
