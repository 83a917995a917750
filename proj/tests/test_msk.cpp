#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "msk/experiments.hpp"
#include "msk/krr.hpp"
#include "msk/msk.hpp"
#include "oracles.hpp"

using namespace msk;

TEST_CASE("spectrum maps: variants and validation") {
  Vector lam(5);
  lam << 4.0, 2.0, 1.0, 0.5, 0.25;

  CHECK((SpectrumMap::identity().apply(lam) - lam).norm() == 0.0);

  Vector flat = SpectrumMap::flatten_top_k(2).apply(lam);
  CHECK(flat(0) == 1.0);
  CHECK(flat(1) == 1.0);
  CHECK(flat(2) == 1.0);
  CHECK(flat(3) == 0.5);

  Vector shifted = SpectrumMap::shift(0.1).apply(lam);
  CHECK(shifted(0) == doctest::Approx(4.1));
  CHECK(shifted(4) == doctest::Approx(0.35));

  Vector powered = SpectrumMap::power(0.5).apply(lam);
  CHECK(powered(0) == doctest::Approx(2.0));
  CHECK(powered(2) == doctest::Approx(1.0));

  auto table = SpectrumMap::custom({{0.0, 0.0}, {1.0, 2.0}, {2.0, 2.5}});
  CHECK(table.apply_scalar(0.5) == doctest::Approx(1.0));
  CHECK(table.apply_scalar(5.0) == doctest::Approx(2.5));  // constant extrapolation

  CHECK_THROWS_AS(SpectrumMap::power(1.5), InputError);
  CHECK_THROWS_AS(SpectrumMap::shift(0.0), InputError);
  CHECK_THROWS_AS(SpectrumMap::custom({{0.0, 1.0}, {1.0, 0.5}}), InputError);
  CHECK_THROWS_AS(SpectrumMap::flatten_top_k(3).apply_scalar(1.0), InputError);

  // monotone maps keep a descending spectrum descending
  for (const auto& g : {SpectrumMap::shift(0.3), SpectrumMap::power(0.7),
                        SpectrumMap::flatten_top_k(2)}) {
    Vector mapped = g.apply(lam);
    for (int i = 1; i < mapped.size(); ++i) CHECK(mapped(i) <= mapped(i - 1) + 1e-15);
  }
}

TEST_CASE("build_msk_matrix: identity and constant maps") {
  Matrix spd = oracles::random_spd(24, 40);
  SymMatrix K = SymMatrix::from_dense(spd);
  SymMatrix same = build_msk_matrix(K, SpectrumMap::identity());
  CHECK(frobenius_distance(K, same) <= 1e-10 * spd.norm());

  auto const_map = SpectrumMap::custom({{0.0, 3.0}, {1000.0, 3.0}}, "const_3");
  SymMatrix scaled = build_msk_matrix(K, const_map);
  CHECK((scaled.dense() - 3.0 * Matrix::Identity(24, 24)).norm() <= 1e-10 * 3.0 * 24);
}

TEST_CASE("build_msk_matrix: power map takes square roots of the spectrum") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(8);
  Dataset data = sample_sphere(2, 256, 0);
  SymMatrix K = kernel_matrix(KernelSpec{mc}, data.points, Normalization::by_n);
  auto d = eigh(K);
  SymMatrix Kg = build_msk_matrix(K, SpectrumMap::power(0.5));
  auto dg = eigh(Kg);
  const int rank = 2 * 8 + 1;
  for (int i = 0; i < rank; ++i) {
    double expect = std::sqrt(std::max(d.eigenvalues(i), 0.0));
    CHECK(std::abs(dg.eigenvalues(i) - expect) <= 1e-9 * std::max(1.0, expect));
  }
}

TEST_CASE("build_msk_matrix: negative mapped eigenvalue is rejected") {
  Vector lam(3);
  lam << 1.0, 0.5, -0.3;
  SymMatrix K = SymMatrix::from_dense(oracles::with_spectrum(lam, 41));
  // flatten target is the negative eigenvalue
  CHECK_THROWS_AS(build_msk_matrix(K, SpectrumMap::flatten_top_k(2)), InputError);
}

TEST_CASE("build_msk_matrix: spectrum correctness and eigenspace preservation") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(4);
  Dataset data = sample_sphere(2, 64, 43);
  SymMatrix K = kernel_matrix(KernelSpec{mc}, data.points, Normalization::by_n);
  auto d = eigh(K);
  SpectrumMap g = SpectrumMap::power(0.5);
  SymMatrix Kg = build_msk_matrix(K, g);
  auto dg = eigh(Kg);

  // sorted spectrum equals sorted g(lambda) on the numerically meaningful part
  SpectralDecomposition mapped = remap_spectrum(d, g);
  Vector expect = mapped.eigenvalues;
  std::sort(expect.data(), expect.data() + expect.size(), std::greater<double>());
  for (int i = 0; i < 9; ++i) {
    CHECK(std::abs(dg.eigenvalues(i) - expect(i)) <= 1e-9 * std::max(1.0, expect(i)));
  }

  // per-cluster projectors agree (relative gap threshold 1e-6)
  int start = 0;
  while (start < 9) {
    int end = start + 1;
    while (end < d.n() &&
           std::abs(d.eigenvalues(end) - d.eigenvalues(start)) <=
               1e-6 * std::abs(d.eigenvalues(start))) {
      ++end;
    }
    Matrix Vc = d.eigenvectors.middleCols(start, end - start);
    Matrix Vg = dg.eigenvectors.middleCols(start, end - start);
    CHECK((Vc * Vc.transpose() - Vg * Vg.transpose()).norm() <= 1e-8 * (end - start));
    start = end;
  }
}

TEST_CASE("build_msk_matrix: composition through shared eigenvectors") {
  Matrix spd = oracles::random_spd(16, 44);
  SymMatrix K = SymMatrix::from_dense(spd);
  SpectrumMap g1 = SpectrumMap::power(0.5);
  SpectrumMap g2 = SpectrumMap::shift(0.2);
  SymMatrix twice = build_msk_matrix(build_msk_matrix(K, g1), g2);

  auto d = eigh(K);
  Vector composed = d.eigenvalues;
  for (int i = 0; i < composed.size(); ++i) {
    composed(i) = g2.apply_scalar(g1.apply_scalar(composed(i)));
  }
  Matrix expect = d.eigenvectors * composed.asDiagonal() * d.eigenvectors.transpose();
  CHECK((twice.dense() - expect).norm() <= 1e-8 * expect.norm());
}

TEST_CASE("msk_predict: identity map reduces to kernel ridge regression") {
  KernelSpec lap = LaplaceKernel{1.0};
  Dataset train = sample_sphere(2, 24, 47);
  train.labels = fourier_labels(train, 2);
  Dataset test = sample_sphere(2, 10, 48);

  Vector via_msk = msk_predict(lap, train, test.points, SpectrumMap::identity(), 0.1);
  KrrModel model = krr_fit(lap, train, 0.1);
  Vector via_krr = krr_predict(model, test.points);
  CHECK((via_msk - via_krr).cwiseAbs().maxCoeff() <= 1e-8);

  // nystrom fast path agrees as well for the identity map
  Vector via_fast = msk_predict(lap, train, test.points, SpectrumMap::identity(), 0.1,
                                PredictMode::nystrom_fast);
  CHECK((via_fast - via_krr).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("msk_predict: zero labels give zero predictions") {
  KernelSpec lap = LaplaceKernel{1.0};
  Dataset train = sample_sphere(3, 16, 49);
  train.labels = Vector::Zero(16);
  Dataset test = sample_sphere(3, 7, 50);
  for (const auto& g : {SpectrumMap::identity(), SpectrumMap::power(0.5),
                        SpectrumMap::shift(0.1)}) {
    Vector pred = msk_predict(lap, train, test.points, g, 0.0);
    CHECK(pred.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("msk_predict: reproduces an eigenfunction under a power map") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(8);
  Dataset train = sample_sphere(2, 512, 51);
  for (int i = 0; i < train.n(); ++i) {
    double t = std::atan2(train.points(i, 1), train.points(i, 0));
    train.labels(i) = std::sqrt(2.0) * std::cos(2.0 * t);
  }
  Dataset test = sample_sphere(2, 100, 52);
  Vector truth(test.n());
  for (int i = 0; i < test.n(); ++i) {
    double t = std::atan2(test.points(i, 1), test.points(i, 0));
    truth(i) = std::sqrt(2.0) * std::cos(2.0 * t);
  }

  Vector pred = msk_predict(KernelSpec{mc}, train, test.points, SpectrumMap::power(0.5), 1e-6);
  double mse = (pred - truth).squaredNorm() / test.n();
  CHECK(mse <= 1e-2);

  // oracle: direct ridge regression with the explicitly remapped kernel
  MercerCircleKernel mc_g = mc;
  for (auto& lam : mc_g.eigenvalues) lam = std::sqrt(lam);
  KrrModel oracle = krr_fit(KernelSpec{mc_g}, train, 1e-6);
  Vector oracle_pred = krr_predict(oracle, test.points);
  double oracle_mse = (oracle_pred - truth).squaredNorm() / test.n();
  CHECK(oracle_mse <= 1e-2);
}

TEST_CASE("msk_consistency_sweep: identity map leaves only reconstruction error") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(4);
  auto rows = msk_consistency_sweep(mc, SpectrumMap::identity(), {32, 64}, {1, 2, 3});
  for (const auto& row : rows) CHECK(row.mean_frobenius <= 1e-10);
}

TEST_CASE("msk_consistency_sweep: distances shrink with sample size") {
  MercerCircleKernel mc = MercerCircleKernel::default_spectrum(8);
  auto rows = msk_consistency_sweep(mc, SpectrumMap::power(0.5), {64, 256},
                                    {10, 11, 12, 13, 14});
  CHECK(rows[1].mean_frobenius < rows[0].mean_frobenius);
  CHECK_THROWS_AS(
      msk_consistency_sweep(mc, SpectrumMap::flatten_top_k(3), {32}, {1}),
      InputError);
}
