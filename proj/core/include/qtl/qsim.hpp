#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qtl::qsim {

using complex_t = std::complex<double>;

inline constexpr int kMinQubits = 1;
inline constexpr int kMaxQubits = 12;

/// 2x2 single-qubit unitary, row-major: {m00, m01, m10, m11}.
struct Gate1Q {
  std::array<complex_t, 4> m;
};

// Standard rotation matrices. RY(pi) is [[0,-1],[1,0]]; RZ is
// diag(e^{-i t/2}, e^{+i t/2}).
Gate1Q rx(double theta);
Gate1Q ry(double theta);
Gate1Q rz(double theta);
Gate1Q hadamard();

/// Three-parameter rotation RZ(omega) * RY(theta) * RZ(phi); phi acts first
/// in circuit order.
Gate1Q rot(double phi, double theta, double omega);

enum class RotationKind { RX, RY, RZ, H, Rot };

/// Builds a gate from a kind tag and its angle list (H takes none, Rot takes
/// three, the rest one). Throws ConfigError on a wrong angle count or a
/// non-finite angle.
Gate1Q make_rotation(RotationKind kind, std::span<const double> angles);

Gate1Q matmul(const Gate1Q& a, const Gate1Q& b);
bool is_unitary(const Gate1Q& g, double tol = 1e-12);

// Exact n-qubit register, amplitudes indexed with qubit 0 as the most
// significant bit. Gate application mutates in place; callers that need the
// previous state copy first (value semantics, cheap at <= 12 qubits).
class StateVector {
 public:
  /// |0...0> on n qubits. Throws ConfigError outside [1, 12].
  explicit StateVector(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  std::size_t size() const { return amp_.size(); }

  std::span<const complex_t> amplitudes() const { return amp_; }
  std::span<complex_t> amplitudes() { return amp_; }

  void apply_1q(int qubit, const Gate1Q& gate);
  void apply_cnot(int control, int target);

  /// <Z_qubit>, in [-1, 1].
  double expect_z(int qubit) const;

  double norm() const;

  /// Bit value of `qubit` within basis index `idx` (qubit 0 = MSB).
  bool bit(std::size_t idx, int qubit) const {
    return (idx >> (n_qubits_ - 1 - qubit)) & 1u;
  }

 private:
  void check_qubit(int qubit, const char* what) const;

  int n_qubits_;
  std::vector<complex_t> amp_;
};

/// |0...0> on n qubits; same contract as the constructor.
StateVector init_zero(int n_qubits);

}  // namespace qtl::qsim
