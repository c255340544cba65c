#pragma once

#include <stdexcept>
#include <string>

namespace icma {

// Categories map one-to-one onto CLI exit codes and C API status values.
enum class ErrorKind {
  config = 2,
  data = 3,
  numerical = 4,
  bootstrap = 5,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace icma
