#include "qtl/qsim.hpp"

#include <cmath>
#include <string>

#include "qtl/error.hpp"

namespace qtl::qsim {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_finite(std::span<const double> angles) {
  for (double a : angles) {
    if (!std::isfinite(a)) throw ConfigError("rotation angle is not finite");
  }
}
}  // namespace

Gate1Q rx(double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  return {{complex_t(c, 0), complex_t(0, -s), complex_t(0, -s), complex_t(c, 0)}};
}

Gate1Q ry(double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  return {{complex_t(c, 0), complex_t(-s, 0), complex_t(s, 0), complex_t(c, 0)}};
}

Gate1Q rz(double theta) {
  const complex_t e0 = std::exp(complex_t(0, -theta / 2.0));
  const complex_t e1 = std::exp(complex_t(0, theta / 2.0));
  return {{e0, 0, 0, e1}};
}

Gate1Q hadamard() {
  return {{complex_t(kInvSqrt2, 0), complex_t(kInvSqrt2, 0),
           complex_t(kInvSqrt2, 0), complex_t(-kInvSqrt2, 0)}};
}

Gate1Q matmul(const Gate1Q& a, const Gate1Q& b) {
  return {{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
           a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
}

Gate1Q rot(double phi, double theta, double omega) {
  return matmul(rz(omega), matmul(ry(theta), rz(phi)));
}

Gate1Q make_rotation(RotationKind kind, std::span<const double> angles) {
  check_finite(angles);
  const auto expect = [&](std::size_t n, const char* name) {
    if (angles.size() != n) {
      throw ConfigError(std::string(name) + " takes " + std::to_string(n) +
                        " angle(s), got " + std::to_string(angles.size()));
    }
  };
  switch (kind) {
    case RotationKind::RX:
      expect(1, "RX");
      return rx(angles[0]);
    case RotationKind::RY:
      expect(1, "RY");
      return ry(angles[0]);
    case RotationKind::RZ:
      expect(1, "RZ");
      return rz(angles[0]);
    case RotationKind::H:
      expect(0, "H");
      return hadamard();
    case RotationKind::Rot:
      expect(3, "Rot");
      return rot(angles[0], angles[1], angles[2]);
  }
  throw ConfigError("unknown rotation kind");
}

bool is_unitary(const Gate1Q& g, double tol) {
  // U * U^dagger == I elementwise.
  const auto& m = g.m;
  const complex_t a = m[0] * std::conj(m[0]) + m[1] * std::conj(m[1]);
  const complex_t b = m[0] * std::conj(m[2]) + m[1] * std::conj(m[3]);
  const complex_t c = m[2] * std::conj(m[0]) + m[3] * std::conj(m[1]);
  const complex_t d = m[2] * std::conj(m[2]) + m[3] * std::conj(m[3]);
  return std::abs(a - 1.0) < tol && std::abs(b) < tol && std::abs(c) < tol &&
         std::abs(d - 1.0) < tol;
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < kMinQubits || n_qubits > kMaxQubits) {
    throw ConfigError("n_qubits must be in [" + std::to_string(kMinQubits) +
                      ", " + std::to_string(kMaxQubits) + "], got " +
                      std::to_string(n_qubits));
  }
  amp_.assign(std::size_t{1} << n_qubits, complex_t(0, 0));
  amp_[0] = complex_t(1, 0);
}

void StateVector::check_qubit(int qubit, const char* what) const {
  if (qubit < 0 || qubit >= n_qubits_) {
    throw ConfigError(std::string(what) + " qubit index " +
                      std::to_string(qubit) + " out of range [0, " +
                      std::to_string(n_qubits_) + ")");
  }
}

void StateVector::apply_1q(int qubit, const Gate1Q& gate) {
  check_qubit(qubit, "gate");
  const std::size_t mask = std::size_t{1} << (n_qubits_ - 1 - qubit);
  const std::size_t n = amp_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & mask) == 0) {
      const complex_t a = amp_[i];
      const complex_t b = amp_[i | mask];
      amp_[i] = gate.m[0] * a + gate.m[1] * b;
      amp_[i | mask] = gate.m[2] * a + gate.m[3] * b;
    }
  }
}

void StateVector::apply_cnot(int control, int target) {
  check_qubit(control, "control");
  check_qubit(target, "target");
  if (control == target) {
    throw ConfigError("cnot control and target must differ, both are " +
                      std::to_string(control));
  }
  const std::size_t cmask = std::size_t{1} << (n_qubits_ - 1 - control);
  const std::size_t tmask = std::size_t{1} << (n_qubits_ - 1 - target);
  const std::size_t n = amp_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & cmask) && !(i & tmask)) {
      std::swap(amp_[i], amp_[i | tmask]);
    }
  }
}

double StateVector::expect_z(int qubit) const {
  check_qubit(qubit, "observable");
  const std::size_t mask = std::size_t{1} << (n_qubits_ - 1 - qubit);
  double acc = 0.0;
  for (std::size_t i = 0; i < amp_.size(); ++i) {
    const double p = std::norm(amp_[i]);
    acc += (i & mask) ? -p : p;
  }
  return acc;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const complex_t& a : amp_) acc += std::norm(a);
  return std::sqrt(acc);
}

StateVector init_zero(int n_qubits) { return StateVector(n_qubits); }

}  // namespace qtl::qsim
