#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace descsys {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable machine-readable name, used in CLI reports.
  [[nodiscard]] virtual const char* kind() const noexcept = 0;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "DimensionMismatch"; }
};

/// Columns of a least-squares operand are dependent at the rank tolerance.
class RankDeficient : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "RankDeficient"; }
};

/// A rank decision behind a Jordan structure sits too close to the cutoff.
class IllConditionedStructure : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "IllConditionedStructure"; }
};

class ReconstructionFailure : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "ReconstructionFailure"; }
};

/// One failed regularity probe: the sample point and sigma_min / sigma_max of sF - G.
struct FailedProbe {
  std::complex<double> point;
  double rcond = 0.0;
};

/// det(sF - G) vanished at every probe point, so the pencil is not regular.
class SingularPencil : public Error {
 public:
  SingularPencil(const std::string& what, std::vector<FailedProbe> probes)
      : Error(what), probes_(std::move(probes)) {}
  [[nodiscard]] const char* kind() const noexcept override { return "SingularPencil"; }
  [[nodiscard]] const std::vector<FailedProbe>& probes() const noexcept { return probes_; }

 private:
  std::vector<FailedProbe> probes_;
};

}  // namespace descsys
