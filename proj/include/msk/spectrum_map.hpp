#pragma once

#include <string>
#include <utility>
#include <vector>

#include "msk/linalg.hpp"

namespace msk {

/// Eigenvalue remap g. Nonnegative on the spectra it is applied to; FlattenTopK
/// is defined relative to the sorted spectrum it acts on (top k values become
/// the (k+1)-th), the other variants are pointwise.
class SpectrumMap {
 public:
  enum class Kind { identity, flatten_top_k, shift, power, custom };

  static SpectrumMap identity();
  static SpectrumMap flatten_top_k(int k);
  static SpectrumMap shift(double gamma_tilde);
  static SpectrumMap power(double exponent);  // exponent in (0, 1]
  /// Piecewise-linear monotone table of (input, output) pairs; outputs must be
  /// nonnegative and nondecreasing. Constant extrapolation outside the table.
  static SpectrumMap custom(std::vector<std::pair<double, double>> table,
                            std::string name = "custom");

  Kind kind() const { return kind_; }
  bool pointwise() const { return kind_ != Kind::flatten_top_k; }
  int flatten_k() const { return k_; }
  const std::string& name() const { return name_; }
  double lipschitz_hint() const { return lipschitz_hint_; }

  /// Pointwise application; InputError for flatten_top_k.
  double apply_scalar(double lambda) const;

  /// Apply to a descending spectrum. Entries with index >= first_fixed keep
  /// their value untouched (the below-floor passthrough used by the MSK
  /// builder); pass first_fixed = -1 to map everything.
  Vector apply(const Vector& sorted_descending, int first_fixed = -1) const;

 private:
  SpectrumMap() = default;
  Kind kind_ = Kind::identity;
  int k_ = 0;
  double param_ = 0.0;
  std::vector<std::pair<double, double>> table_;
  std::string name_;
  double lipschitz_hint_ = 1.0;
};

}  // namespace msk
