#pragma once

#include <stdexcept>
#include <string>

namespace mdqn {

// Bad or inconsistent run configuration (unknown key, impossible board, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Replay sampling attempted before the buffer reached its burn-in size.
class SamplingGated : public UsageError {
 public:
  using UsageError::UsageError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdqn
