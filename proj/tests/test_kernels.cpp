#include <doctest.h>

#include <cmath>

#include "msk/experiments.hpp"
#include "msk/kernels.hpp"
#include "oracles.hpp"

using namespace msk;

namespace {

Matrix circle_grid(int n, double phase = 0.0) {
  Matrix pts(n, 2);
  for (int i = 0; i < n; ++i) {
    double t = phase + 2.0 * M_PI * i / n;
    pts(i, 0) = std::cos(t);
    pts(i, 1) = std::sin(t);
  }
  return pts;
}

}  // namespace

TEST_CASE("kernel_eval: closed-form spot checks") {
  Vector x(2), z(2);
  x << 1, 0;
  z << 0, 1;
  KernelSpec lap = LaplaceKernel{1.0};
  CHECK(kernel_eval(lap, x, x) == doctest::Approx(1.0));
  CHECK(kernel_eval(lap, x, z) == doctest::Approx(std::exp(-std::sqrt(2.0))));
  KernelSpec gauss = GaussianKernel{2.0};
  CHECK(kernel_eval(gauss, x, z) == doctest::Approx(std::exp(-2.0 / 8.0)));

  MercerCircleKernel mc;
  mc.truncation = 1;
  mc.eigenvalues = {1.0, 0.5, 0.5};
  CHECK(kernel_eval(KernelSpec{mc}, x, x) == doctest::Approx(2.0));

  CHECK_THROWS_AS(kernel_eval(lap, x, Vector::Ones(3)), InputError);
}

TEST_CASE("kernel_eval: exact symmetry") {
  Dataset data = sample_sphere(2, 12, 5);
  KernelSpec ntk = NtkReluKernel{3, 0.7};
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.n(); ++j) {
      Vector xi = data.points.row(i).transpose();
      Vector xj = data.points.row(j).transpose();
      CHECK(kernel_eval(ntk, xi, xj) == kernel_eval(ntk, xj, xi));
    }
  }
}

TEST_CASE("NtkRelu: rotation invariance on the diagonal and off-sphere rejection") {
  Dataset data = sample_sphere(2, 100, 9);
  for (int L : {1, 2, 3}) {
    KernelSpec ntk = NtkReluKernel{L, 0.0};
    double expect = L + 1.0;  // Sigma recursion fixes the diagonal at 1 per layer
    double worst = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      Vector x = data.points.row(i).transpose();
      worst = std::max(worst, std::abs(kernel_eval(ntk, x, x) - expect));
    }
    CHECK(worst <= 1e-10);
  }
  Vector off(2);
  off << 1.5, 0.0;
  CHECK_THROWS_AS(kernel_eval(KernelSpec{NtkReluKernel{2, 0.0}}, off, off), InputError);
}

TEST_CASE("kernel_matrix: small cases and error propagation") {
  Matrix one(1, 2);
  one << 1, 0;
  KernelSpec lap = LaplaceKernel{1.0};
  SymMatrix k1 = kernel_matrix(lap, one, Normalization::none);
  CHECK(k1.n() == 1);
  CHECK(k1(0, 0) == doctest::Approx(1.0));

  Matrix two(2, 2);
  two << 1, 0, 1, 0;
  SymMatrix k2 = kernel_matrix(lap, two, Normalization::none);
  CHECK(k2(0, 1) == doctest::Approx(1.0));
  CHECK(k2(1, 1) == doctest::Approx(1.0));
  SymMatrix k2n = kernel_matrix(lap, two, Normalization::by_n);
  CHECK(k2n(0, 0) == doctest::Approx(0.5));

  Matrix off(2, 2);
  off << 1, 0, 2, 0;  // second point off the sphere
  try {
    kernel_matrix(KernelSpec{NtkReluKernel{2, 0.0}}, off, Normalization::none);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("pair") != std::string::npos);
  }
}

TEST_CASE("kernel_matrix: PSD after floor for every kernel family") {
  Dataset s2 = sample_sphere(3, 24, 13);
  Dataset s1 = sample_sphere(2, 24, 14);
  std::vector<KernelSpec> specs = {LaplaceKernel{0.7}, GaussianKernel{1.3},
                                   NtkReluKernel{2, 0.5},
                                   MercerCircleKernel::default_spectrum(8)};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Matrix& pts = (i >= 2) ? s1.points : s2.points;
    auto d = eigh(kernel_matrix(specs[i], pts, Normalization::none));
    CHECK(d.eigenvalues.minCoeff() >= -1e-8 * std::max(d.eigenvalues(0), 0.0));
  }
}

TEST_CASE("MercerCircle: top eigenvalue of the normalized matrix approaches lambda_1") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(8);
  Matrix grid = circle_grid(128);
  auto d = eigh(kernel_matrix(KernelSpec{mc}, grid, Normalization::by_n));
  CHECK(std::abs(d.eigenvalues(0) - 1.0) <= 0.05);  // lambda_1 = 1
}

TEST_CASE("mercer_feature_matrix: quadrature orthonormality and Gram law") {
  MercerCircleKernel r0;
  r0.truncation = 0;
  r0.eigenvalues = {1.0};
  Matrix single(1, 2);
  single << 1, 0;
  Matrix phi0 = mercer_feature_matrix(r0, single);
  CHECK(phi0.rows() == 1);
  CHECK(phi0.cols() == 1);
  CHECK(phi0(0, 0) == doctest::Approx(1.0));

  MercerCircleKernel r1;
  r1.truncation = 1;
  r1.eigenvalues = {1.0, 1.0, 1.0};
  Matrix grid4 = circle_grid(4, 0.3);
  Matrix phi = mercer_feature_matrix(r1, grid4);
  CHECK((phi.transpose() * phi - Matrix::Identity(3, 3)).norm() < 1e-12);

  MercerCircleKernel r4 = MercerCircleKernel::default_spectrum(4);
  Dataset iid = sample_sphere(2, 256, 17);
  Matrix phi4 = mercer_feature_matrix(r4, iid.points);
  CHECK((phi4.transpose() * phi4 - Matrix::Identity(9, 9)).norm() <= 0.2);
}

TEST_CASE("MercerCircle: exact finite-rank factorization of the kernel matrix") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(6);
  Dataset data = sample_sphere(2, 40, 19);
  SymMatrix K = kernel_matrix(KernelSpec{mc}, data.points, Normalization::none);
  Matrix phi = mercer_feature_matrix(mc, data.points);
  Vector lam(13);
  for (int i = 0; i < 13; ++i) lam(i) = mc.eigenvalues[i];
  Matrix rebuilt = static_cast<double>(data.n()) * phi * lam.asDiagonal() * phi.transpose();
  CHECK((rebuilt - K.dense()).norm() < 1e-10 * K.dense().norm());
}
