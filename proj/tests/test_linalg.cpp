#include <doctest.h>

#include <cmath>

#include "msk/linalg.hpp"
#include "oracles.hpp"

using namespace msk;

TEST_CASE("eigh: identity and analytic 2x2") {
  SymMatrix eye = SymMatrix::from_dense(Matrix::Identity(2, 2));
  auto d = eigh(eye);
  CHECK(d.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(d.eigenvalues(1) == doctest::Approx(1.0));
  CHECK((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(2, 2)).norm() < 1e-12);

  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  auto d2 = eigh(SymMatrix::from_dense(a));
  CHECK(d2.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(d2.eigenvalues(1) == doctest::Approx(1.0));
  double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(d2.eigenvectors(0, 0) - s) < 1e-12);
  CHECK(std::abs(d2.eigenvectors(1, 0) - s) < 1e-12);
  // sign convention: first of the tied-magnitude entries is nonnegative
  CHECK(std::abs(d2.eigenvectors(0, 1) - s) < 1e-12);
  CHECK(std::abs(d2.eigenvectors(1, 1) + s) < 1e-12);
}

TEST_CASE("eigh: reconstruction on random symmetric 64x64") {
  Matrix g = oracles::random_gaussian(64, 64, 0);
  SymMatrix a = SymMatrix::from_dense(g);
  auto d = eigh(a);
  CHECK((d.reconstruct() - a.dense()).norm() <= 1e-10 * a.dense().norm());
  CHECK((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(64, 64)).norm() <
        1e-8 * 64);
  for (int i = 1; i < 64; ++i) CHECK(d.eigenvalues(i) <= d.eigenvalues(i - 1));
}

TEST_CASE("eigh: deterministic and rejects bad input") {
  Matrix g = oracles::random_gaussian(16, 16, 3);
  auto d1 = eigh(SymMatrix::from_dense(g));
  auto d2 = eigh(SymMatrix::from_dense(g));
  CHECK((d1.eigenvectors - d2.eigenvectors).norm() == 0.0);

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(SymMatrix::from_dense(bad), InputError);
  CHECK_THROWS_AS(SymMatrix::from_dense(Matrix::Zero(2, 3)), InputError);
}

TEST_CASE("eigh: recovers a known distinct spectrum and its eigenspaces") {
  Vector lam(8);
  lam << 9, 7, 5, 3, 2, 1, 0.5, 0.25;
  std::uint64_t seed = 11;
  Matrix q = oracles::random_orthogonal(8, seed);
  Matrix a = q * lam.asDiagonal() * q.transpose();
  auto d = eigh(SymMatrix::from_dense(a));
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(d.eigenvalues(i) - lam(i)) <= 1e-9 * lam(i));
    CHECK(std::abs(q.col(i).dot(d.eigenvectors.col(i))) >= 1.0 - 1e-8);
  }
}

TEST_CASE("eigh: permutation invariance of the sorted spectrum") {
  Vector lam(12);
  for (int i = 0; i < 12; ++i) lam(i) = std::pow(0.7, i);
  Matrix a = oracles::with_spectrum(lam, 5);
  auto base = eigh(SymMatrix::from_dense(a));

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
  perm.setIdentity();
  std::vector<int> idx = {7, 3, 11, 0, 5, 9, 1, 10, 2, 8, 4, 6};
  for (int i = 0; i < 12; ++i) perm.indices()(i) = idx[i];
  Matrix shuffled = perm.transpose() * a * perm;
  auto d = eigh(SymMatrix::from_dense(shuffled));
  CHECK((d.eigenvalues - base.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solve_spd: identity, diagonal, and random instances") {
  Vector b(2);
  b << 3, 4;
  Vector x = solve_spd(SymMatrix::from_dense(Matrix::Identity(2, 2)), b, 0.0);
  CHECK((x - b).norm() < 1e-12);

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 2;
  diag(1, 1) = 4;
  Vector b2(2);
  b2 << 3, 5;
  Vector x2 = solve_spd(SymMatrix::from_dense(diag), b2, 1.0);
  CHECK(std::abs(x2(0) - 1.0) < 1e-12);
  CHECK(std::abs(x2(1) - 1.0) < 1e-12);

  Matrix spd = oracles::random_spd(32, 7);
  Vector b3 = oracles::random_gaussian(32, 1, 8).col(0);
  Vector x3 = solve_spd(SymMatrix::from_dense(spd), b3, 1e-3);
  Matrix shifted = spd;
  shifted.diagonal().array() += 1e-3;
  CHECK((shifted * x3 - b3).norm() <= 1e-8 * b3.norm());
}

TEST_CASE("solve_spd: multiply-back identity up to n = 512") {
  for (int n : {16, 128, 512}) {
    Matrix spd = oracles::random_spd(n, 100 + n);
    Vector b = oracles::random_gaussian(n, 1, 200 + n).col(0);
    Vector x = solve_spd(SymMatrix::from_dense(spd), b, 0.0);
    CHECK((spd * x - b).norm() <= 1e-8 * b.norm());
  }
}

TEST_CASE("solve_spd: reports smallest eigenvalue when singular") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 1.0;  // rank deficient
  try {
    solve_spd(SymMatrix::from_dense(a), Vector::Ones(3), 0.0);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("smallest eigenvalue") != std::string::npos);
  }
}

TEST_CASE("frobenius_distance: trivial and brute-force oracle") {
  Matrix a = oracles::random_spd(16, 21);
  SymMatrix sa = SymMatrix::from_dense(a);
  CHECK(frobenius_distance(sa, sa) == 0.0);

  SymMatrix eye = SymMatrix::from_dense(Matrix::Identity(2, 2));
  SymMatrix zero = SymMatrix::from_dense(Matrix::Zero(2, 2));
  CHECK(frobenius_distance(eye, zero) == doctest::Approx(std::sqrt(2.0)));

  Matrix b = oracles::random_spd(16, 22);
  double got = frobenius_distance(sa, SymMatrix::from_dense(b));
  CHECK(std::abs(got - oracles::frobenius_brute(a, b)) < 1e-12);

  CHECK_THROWS_AS(frobenius_distance(sa, SymMatrix::from_dense(Matrix::Zero(4, 4))),
                  InputError);
}

TEST_CASE("clamp_floor and pseudo_solve") {
  Vector lam(4);
  lam << 2.0, 1.0, 1e-20, -1e-18;
  Matrix a = oracles::with_spectrum(lam, 31);
  auto d = eigh(SymMatrix::from_dense(a));
  auto clamped = clamp_floor(d);
  CHECK(clamped.eigenvalues.minCoeff() >= 1e-12 * 2.0 * (1.0 - 1e-12));

  // pseudo_solve inverts only the well-conditioned part
  Vector b = oracles::random_gaussian(4, 1, 32).col(0);
  Vector x = pseudo_solve(d, b, 0.0);
  Vector proj = d.eigenvectors.transpose() * b;
  Vector expect = d.eigenvectors.col(0) * proj(0) / lam(0) +
                  d.eigenvectors.col(1) * proj(1) / lam(1);
  CHECK((x - expect).norm() < 1e-10);

  // with a ridge, matches the full inverse
  Matrix spd = oracles::random_spd(8, 33);
  auto dspd = eigh(SymMatrix::from_dense(spd));
  Vector b8 = oracles::random_gaussian(8, 1, 34).col(0);
  Vector x8 = pseudo_solve(dspd, b8, 0.5);
  Matrix shifted = spd;
  shifted.diagonal().array() += 0.5;
  CHECK((shifted * x8 - b8).norm() <= 1e-10 * b8.norm());
}
