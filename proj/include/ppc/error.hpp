#pragma once

#include <stdexcept>
#include <string>

namespace ppc {

/// Out-of-range or non-finite argument, bad dimensions, unstable settings.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

/// A population response with zero total activity carries no posterior.
class DegenerateActivity : public std::runtime_error {
 public:
  explicit DegenerateActivity(const std::string& what) : std::runtime_error(what) {}
};

/// A grid belief whose mass vanished after multiplying in a likelihood.
class DegenerateBelief : public std::runtime_error {
 public:
  explicit DegenerateBelief(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidParameter(msg);
}

}  // namespace detail
}  // namespace ppc
