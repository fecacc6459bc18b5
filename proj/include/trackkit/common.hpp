#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace trackkit {

// Shared numerical tolerances. One knob per concern so every solver and
// test agrees on what "feasible" means.
namespace tol {
inline constexpr double feasibility = 1e-8;
inline constexpr double symmetry = 1e-10;
inline constexpr double eigen_offdiag = 1e-12;
inline constexpr double simplex_sum = 1e-10;
inline constexpr double support_zero = 1e-10;
}  // namespace tol

// Optional wall-clock budget for a single model solve. Expired deadlines
// make iterative searches stop and return their incumbent.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds)
      : enabled_(seconds > 0.0),
        end_(std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(seconds))) {}

  bool expired() const { return enabled_ && std::chrono::steady_clock::now() >= end_; }

 private:
  bool enabled_ = false;
  std::chrono::steady_clock::time_point end_{};
};

class TrackkitError : public std::runtime_error {
 public:
  explicit TrackkitError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public TrackkitError {
 public:
  explicit ParseError(const std::string& msg) : TrackkitError(msg) {}
};

class DataError : public TrackkitError {
 public:
  explicit DataError(const std::string& msg) : TrackkitError(msg) {}
};

class SolverError : public TrackkitError {
 public:
  explicit SolverError(const std::string& msg) : TrackkitError(msg) {}
};

class ConfigError : public TrackkitError {
 public:
  explicit ConfigError(const std::string& msg) : TrackkitError(msg) {}
};

}  // namespace trackkit
