#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qtl/error.hpp"
#include "qtl/qsim.hpp"
#include "qtl/rng.hpp"

using namespace qtl;
using oracles::cx;

namespace {

constexpr double kPi = 3.14159265358979323846;

qsim::StateVector random_state(int n, std::uint64_t seed) {
  qsim::StateVector s(n);
  Rng rng(seed);
  double norm2 = 0.0;
  for (cx& a : s.amplitudes()) {
    a = cx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    norm2 += std::norm(a);
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (cx& a : s.amplitudes()) a *= inv;
  return s;
}

double max_abs_diff(std::span<const cx> a, std::span<const cx> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("statevector starts in the all-zeros basis state") {
  for (int n = 1; n <= 12; ++n) {
    qsim::StateVector s(n);
    CHECK(s.size() == std::size_t(1) << n);
    CHECK(s.amplitudes()[0] == cx(1.0));
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.amplitudes()[i] == cx(0.0));
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(qsim::StateVector(0), ConfigError);
  CHECK_THROWS_AS(qsim::StateVector(13), ConfigError);
  CHECK_THROWS_AS(qsim::StateVector(-3), ConfigError);
}

TEST_CASE("qubit 0 is the most significant bit of the amplitude index") {
  // RY(pi) maps |0> to |1> with amplitude +1.
  qsim::StateVector s(3);
  s.apply_1q(0, qsim::ry(kPi));
  CHECK(std::abs(s.amplitudes()[0b100] - cx(1.0)) < 1e-15);

  qsim::StateVector t(3);
  t.apply_1q(2, qsim::ry(kPi));
  CHECK(std::abs(t.amplitudes()[0b001] - cx(1.0)) < 1e-15);
}

TEST_CASE("gate matrices match their defining formulas") {
  const qsim::Gate1Q g = qsim::ry(kPi);
  CHECK(std::abs(g.m[0]) < 1e-15);
  CHECK(std::abs(g.m[1] + 1.0) < 1e-15);
  CHECK(std::abs(g.m[2] - 1.0) < 1e-15);
  CHECK(std::abs(g.m[3]) < 1e-15);

  const double t = 0.73;
  const qsim::Gate1Q z = qsim::rz(t);
  CHECK(std::abs(z.m[0] - std::exp(cx(0.0, -t / 2))) < 1e-15);
  CHECK(std::abs(z.m[3] - std::exp(cx(0.0, t / 2))) < 1e-15);
  CHECK(std::abs(z.m[1]) == 0.0);
  CHECK(std::abs(z.m[2]) == 0.0);

  const qsim::Gate1Q h = qsim::hadamard();
  const double is2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(h.m[0] - is2) < 1e-15);
  CHECK(std::abs(h.m[3] + is2) < 1e-15);

  // Rot is the explicit matrix product, phi applied first.
  const qsim::Gate1Q rot = qsim::rot(0.3, -1.1, 2.4);
  const qsim::Gate1Q ref =
      qsim::matmul(qsim::rz(2.4), qsim::matmul(qsim::ry(-1.1), qsim::rz(0.3)));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(rot.m[i] - ref.m[i]) < 1e-15);

  for (const qsim::Gate1Q& u :
       {qsim::rx(0.4), qsim::ry(-2.2), qsim::rz(5.0), qsim::hadamard(), rot}) {
    CHECK(qsim::is_unitary(u));
  }
}

TEST_CASE("make_rotation validates angle counts and finiteness") {
  const double one[] = {0.5};
  const double three[] = {0.1, 0.2, 0.3};
  CHECK(qsim::is_unitary(qsim::make_rotation(qsim::RotationKind::RX, one)));
  CHECK(qsim::is_unitary(qsim::make_rotation(qsim::RotationKind::H, {})));
  CHECK(qsim::is_unitary(qsim::make_rotation(qsim::RotationKind::Rot, three)));
  CHECK_THROWS_AS(qsim::make_rotation(qsim::RotationKind::RX, three), ConfigError);
  CHECK_THROWS_AS(qsim::make_rotation(qsim::RotationKind::Rot, one), ConfigError);
  CHECK_THROWS_AS(qsim::make_rotation(qsim::RotationKind::H, one), ConfigError);
  const double bad[] = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(qsim::make_rotation(qsim::RotationKind::RY, bad), ConfigError);
}

TEST_CASE("single-qubit application matches the dense Kronecker oracle") {
  for (int n = 1; n <= 3; ++n) {
    const std::size_t dim = std::size_t(1) << n;
    for (int q = 0; q < n; ++q) {
      int gate_id = 0;
      for (const qsim::Gate1Q& g :
           {qsim::rx(0.7), qsim::ry(-1.3), qsim::rz(2.1), qsim::hadamard(),
            qsim::rot(0.3, 0.9, -0.5)}) {
        qsim::StateVector s =
            random_state(n, 1000 * n + 100 * q + std::uint64_t(gate_id++));
        const oracles::Mat m = oracles::dense_1q(n, q, oracles::gate_mat(g));
        const std::vector<cx> want =
            oracles::apply_dense(m, dim, s.amplitudes());
        s.apply_1q(q, g);
        CHECK(max_abs_diff(s.amplitudes(), want) < 1e-12);
      }
    }
  }
}

TEST_CASE("cnot matches the dense Kronecker oracle") {
  for (int n = 2; n <= 3; ++n) {
    const std::size_t dim = std::size_t(1) << n;
    for (int c = 0; c < n; ++c) {
      for (int t = 0; t < n; ++t) {
        if (c == t) continue;
        qsim::StateVector s = random_state(n, 77 * n + 7 * c + std::uint64_t(t));
        const oracles::Mat m = oracles::dense_cnot(n, c, t);
        const std::vector<cx> want =
            oracles::apply_dense(m, dim, s.amplitudes());
        s.apply_cnot(c, t);
        CHECK(max_abs_diff(s.amplitudes(), want) < 1e-12);
      }
    }
  }
}

TEST_CASE("cnot truth table on basis states") {
  qsim::StateVector s(2);
  s.apply_1q(0, qsim::ry(kPi));  // |10>
  s.apply_cnot(0, 1);
  CHECK(std::abs(std::norm(s.amplitudes()[0b11]) - 1.0) < 1e-15);
  s.apply_cnot(1, 0);  // control now set, flips qubit 0 back
  CHECK(std::abs(std::norm(s.amplitudes()[0b01]) - 1.0) < 1e-15);
}

TEST_CASE("long random circuits preserve the norm") {
  qsim::StateVector s(5);
  Rng rng(42);
  for (int step = 0; step < 50; ++step) {
    const int q = static_cast<int>(rng.uniform_int(5));
    switch (rng.uniform_int(4)) {
      case 0: s.apply_1q(q, qsim::rx(rng.uniform(-kPi, kPi))); break;
      case 1: s.apply_1q(q, qsim::ry(rng.uniform(-kPi, kPi))); break;
      case 2:
        s.apply_1q(q, qsim::rot(rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi),
                                rng.uniform(-kPi, kPi)));
        break;
      default: {
        const int t = (q + 1 + static_cast<int>(rng.uniform_int(4))) % 5;
        s.apply_cnot(q, t);
      }
    }
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("expect_z agrees with the dense Z observable") {
  // On |0> it is +1; RY(theta) gives cos(theta).
  qsim::StateVector s(1);
  CHECK(s.expect_z(0) == doctest::Approx(1.0).epsilon(1e-15));
  s.apply_1q(0, qsim::ry(0.9));
  CHECK(s.expect_z(0) == doctest::Approx(std::cos(0.9)).epsilon(1e-12));

  for (int n = 1; n <= 3; ++n) {
    const std::size_t dim = std::size_t(1) << n;
    qsim::StateVector r = random_state(n, 9000 + std::uint64_t(n));
    for (int q = 0; q < n; ++q) {
      const std::vector<cx> zs =
          oracles::apply_dense(oracles::dense_z(n, q), dim, r.amplitudes());
      cx want(0.0);
      for (std::size_t i = 0; i < dim; ++i)
        want += std::conj(r.amplitudes()[i]) * zs[i];
      CHECK(std::abs(r.expect_z(q) - want.real()) < 1e-12);
      CHECK(std::abs(want.imag()) < 1e-12);
    }
  }
}

TEST_CASE("index and qubit validation") {
  qsim::StateVector s(2);
  CHECK_THROWS_AS(s.apply_1q(2, qsim::hadamard()), ConfigError);
  CHECK_THROWS_AS(s.apply_1q(-1, qsim::hadamard()), ConfigError);
  CHECK_THROWS_AS(s.apply_cnot(0, 0), ConfigError);
  CHECK_THROWS_AS(s.apply_cnot(0, 5), ConfigError);
  CHECK_THROWS_AS(s.expect_z(7), ConfigError);
}
