#include "msk/kernels.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msk {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSphereTol = 1e-6;

void require_same_dim(const Vector& x, const Vector& z) {
  if (x.size() != z.size()) {
    throw InputError("kernel_eval: dimension mismatch " + std::to_string(x.size()) +
                     " vs " + std::to_string(z.size()));
  }
}

void require_on_sphere(const Vector& x, const char* who) {
  if (std::abs(x.norm() - 1.0) > kSphereTol) {
    throw InputError(std::string(who) + ": input must lie on the unit sphere "
                     "(|norm - 1| = " + std::to_string(std::abs(x.norm() - 1.0)) + ")");
  }
}

double laplace_eval(const LaplaceKernel& k, const Vector& x, const Vector& z) {
  return std::exp(-(x - z).norm() / k.bandwidth);
}

double gaussian_eval(const GaussianKernel& k, const Vector& x, const Vector& z) {
  double d2 = (x - z).squaredNorm();
  return std::exp(-d2 / (2.0 * k.bandwidth * k.bandwidth));
}

// Arc-cosine tangent-kernel recursion. With a = S(x,x), b = S(z,z),
// c = S(x,z) of the previous layer and phi = arccos(c / sqrt(ab)):
//   S_next = (1/pi) sqrt(ab) (sin phi + (pi - phi) cos phi) + beta^2
//   Sdot   = (pi - phi) / pi
// and the kernel accumulates Theta = S^L + sum_l S^{l-1} prod_{l'>=l} Sdot^{l'}.
double ntk_relu_eval(const NtkReluKernel& k, const Vector& x, const Vector& z) {
  require_on_sphere(x, "NtkRelu");
  require_on_sphere(z, "NtkRelu");
  const double beta2 = k.bias_scale * k.bias_scale;
  const int L = k.depth;

  std::vector<double> sig_xz(L + 1), sig_xx(L + 1), sig_zz(L + 1), sdot(L + 1);
  sig_xx[0] = x.dot(x) + beta2;
  sig_zz[0] = z.dot(z) + beta2;
  sig_xz[0] = x.dot(z) + beta2;
  for (int l = 1; l <= L; ++l) {
    double a = sig_xx[l - 1], b = sig_zz[l - 1], c = sig_xz[l - 1];
    double root = std::sqrt(a * b);
    double cosphi = root > 0.0 ? c / root : 0.0;
    cosphi = std::min(1.0, std::max(-1.0, cosphi));
    double phi = std::acos(cosphi);
    sig_xz[l] = (root / kPi) * (std::sin(phi) + (kPi - phi) * cosphi) + beta2;
    sig_xx[l] = a + beta2;
    sig_zz[l] = b + beta2;
    sdot[l] = (kPi - phi) / kPi;
  }
  double theta = sig_xz[L];
  for (int l = 1; l <= L; ++l) {
    double term = sig_xz[l - 1];
    for (int lp = l; lp <= L; ++lp) term *= sdot[lp];
    theta += term;
  }
  return theta;
}

double mercer_circle_eval(const MercerCircleKernel& k, const Vector& x, const Vector& z) {
  require_on_sphere(x, "MercerCircle");
  require_on_sphere(z, "MercerCircle");
  if (x.size() != 2) throw InputError("MercerCircle: points must be on S^1 (d=2)");
  const int R = k.truncation;
  if (static_cast<int>(k.eigenvalues.size()) != 2 * R + 1) {
    throw InputError("MercerCircle: expected " + std::to_string(2 * R + 1) +
                     " eigenvalues, got " + std::to_string(k.eigenvalues.size()));
  }
  double tx = std::atan2(x(1), x(0));
  double tz = std::atan2(z(1), z(0));
  double acc = k.eigenvalues[0];
  for (int f = 1; f <= R; ++f) {
    double lc = k.eigenvalues[2 * f - 1];
    double ls = k.eigenvalues[2 * f];
    acc += 2.0 * (lc * std::cos(f * tx) * std::cos(f * tz) +
                  ls * std::sin(f * tx) * std::sin(f * tz));
  }
  return acc;
}

}  // namespace

MercerCircleKernel MercerCircleKernel::default_spectrum(int truncation) {
  MercerCircleKernel k;
  k.truncation = truncation;
  k.eigenvalues.resize(2 * truncation + 1);
  k.eigenvalues[0] = 1.0;
  for (int f = 1; f <= truncation; ++f) {
    double lam = std::pow(static_cast<double>(f), -4.0);
    k.eigenvalues[2 * f - 1] = lam;
    k.eigenvalues[2 * f] = lam;
  }
  return k;
}

std::string kernel_name(const KernelSpec& spec) {
  struct Visitor {
    std::string operator()(const LaplaceKernel&) const { return "laplace"; }
    std::string operator()(const GaussianKernel&) const { return "gaussian"; }
    std::string operator()(const NtkReluKernel&) const { return "ntk_relu"; }
    std::string operator()(const MercerCircleKernel&) const { return "mercer_circle"; }
  };
  return std::visit(Visitor{}, spec);
}

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& z) {
  require_same_dim(x, z);
  if (!x.allFinite() || !z.allFinite()) {
    throw InputError("kernel_eval: non-finite input");
  }
  struct Visitor {
    const Vector& x;
    const Vector& z;
    double operator()(const LaplaceKernel& k) const {
      if (k.bandwidth <= 0.0) throw InputError("Laplace: bandwidth must be > 0");
      return laplace_eval(k, x, z);
    }
    double operator()(const GaussianKernel& k) const {
      if (k.bandwidth <= 0.0) throw InputError("Gaussian: bandwidth must be > 0");
      return gaussian_eval(k, x, z);
    }
    double operator()(const NtkReluKernel& k) const {
      if (k.depth < 1) throw InputError("NtkRelu: depth must be >= 1");
      if (k.bias_scale < 0.0) throw InputError("NtkRelu: bias_scale must be >= 0");
      return ntk_relu_eval(k, x, z);
    }
    double operator()(const MercerCircleKernel& k) const {
      return mercer_circle_eval(k, x, z);
    }
  };
  return std::visit(Visitor{x, z}, spec);
}

SymMatrix kernel_matrix(const KernelSpec& spec, const Matrix& points,
                        Normalization normalization) {
  const int n = static_cast<int>(points.rows());
  if (n < 1) throw InputError("kernel_matrix: need at least one point");
  Matrix K(n, n);
  std::string first_error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      try {
        double v = kernel_eval(spec, points.row(i).transpose(), points.row(j).transpose());
        K(i, j) = v;
        K(j, i) = v;
      } catch (const std::exception& e) {
#pragma omp critical
        if (first_error.empty()) {
          first_error = "kernel_matrix at pair (" + std::to_string(i) + "," +
                        std::to_string(j) + "): " + e.what();
        }
        K(i, j) = K(j, i) = 0.0;
      }
    }
  }
  if (!first_error.empty()) throw InputError(first_error);
  if (normalization == Normalization::by_n) K /= static_cast<double>(n);
  return SymMatrix::from_symmetric(std::move(K));
}

SymMatrix kernel_matrix(const KernelSpec& spec, const Dataset& data,
                        Normalization normalization) {
  return kernel_matrix(spec, data.points, normalization);
}

Matrix kernel_cross(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      out(i, j) = kernel_eval(spec, a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return out;
}

Matrix mercer_feature_matrix(const MercerCircleKernel& spec, const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  const int R = spec.truncation;
  if (points.cols() != 2) throw InputError("mercer_feature_matrix: points must be on S^1");
  Matrix phi(n, 2 * R + 1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    Vector p = points.row(i).transpose();
    require_on_sphere(p, "mercer_feature_matrix");
    double t = std::atan2(p(1), p(0));
    phi(i, 0) = scale;
    for (int f = 1; f <= R; ++f) {
      phi(i, 2 * f - 1) = scale * sqrt2 * std::cos(f * t);
      phi(i, 2 * f) = scale * sqrt2 * std::sin(f * t);
    }
  }
  return phi;
}

}  // namespace msk
