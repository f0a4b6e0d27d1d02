#pragma once

// PASS/FAIL reporting for the acceptance binaries.

#include <cstdarg>
#include <cstdio>
#include <string>

namespace mist::acceptance {

inline std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

class Criteria {
 public:
  explicit Criteria(std::string id) : id_(std::move(id)) {}

  bool check(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s [%s] %s: %s\n", ok ? "PASS" : "FAIL", id_.c_str(), name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures_ += !ok;
    return ok;
  }
  /// Reported, not gated.
  void info(const std::string& name, const std::string& detail) {
    std::printf("INFO [%s] %s: %s\n", id_.c_str(), name.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  int finish() const {
    std::printf("%s: %d check(s) failed\n", id_.c_str(), failures_);
    return failures_ == 0 ? 0 : 1;
  }

 private:
  std::string id_;
  int failures_ = 0;
};

}  // namespace mist::acceptance
