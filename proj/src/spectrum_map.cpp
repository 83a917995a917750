#include "msk/spectrum_map.hpp"

#include <algorithm>
#include <cmath>

namespace msk {

SpectrumMap SpectrumMap::identity() {
  SpectrumMap m;
  m.kind_ = Kind::identity;
  m.name_ = "identity";
  m.lipschitz_hint_ = 1.0;
  return m;
}

SpectrumMap SpectrumMap::flatten_top_k(int k) {
  if (k < 0) throw InputError("flatten_top_k: k must be >= 0");
  SpectrumMap m;
  m.kind_ = Kind::flatten_top_k;
  m.k_ = k;
  m.name_ = "flatten_top_" + std::to_string(k);
  m.lipschitz_hint_ = 1.0;
  return m;
}

SpectrumMap SpectrumMap::shift(double gamma_tilde) {
  if (gamma_tilde <= 0.0) throw InputError("shift: gamma_tilde must be > 0");
  SpectrumMap m;
  m.kind_ = Kind::shift;
  m.param_ = gamma_tilde;
  m.name_ = "shift_" + std::to_string(gamma_tilde);
  m.lipschitz_hint_ = 1.0;
  return m;
}

SpectrumMap SpectrumMap::power(double exponent) {
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw InputError("power: exponent must be in (0, 1]");
  }
  SpectrumMap m;
  m.kind_ = Kind::power;
  m.param_ = exponent;
  m.name_ = "power_" + std::to_string(exponent);
  // lambda^a has unbounded slope at 0; hint reflects a unit-scale spectrum.
  m.lipschitz_hint_ = 1.0 / exponent;
  return m;
}

SpectrumMap SpectrumMap::custom(std::vector<std::pair<double, double>> table,
                                std::string name) {
  if (table.empty()) throw InputError("custom: table must be nonempty");
  std::sort(table.begin(), table.end());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].second < 0.0) throw InputError("custom: outputs must be nonnegative");
    if (i > 0 && table[i].second < table[i - 1].second) {
      throw InputError("custom: outputs must be monotone nondecreasing");
    }
  }
  SpectrumMap m;
  m.kind_ = Kind::custom;
  m.table_ = std::move(table);
  m.name_ = std::move(name);
  double lip = 0.0;
  for (std::size_t i = 1; i < m.table_.size(); ++i) {
    double dx = m.table_[i].first - m.table_[i - 1].first;
    double dy = m.table_[i].second - m.table_[i - 1].second;
    if (dx > 0.0) lip = std::max(lip, dy / dx);
  }
  m.lipschitz_hint_ = lip > 0.0 ? lip : 1.0;
  return m;
}

double SpectrumMap::apply_scalar(double lambda) const {
  switch (kind_) {
    case Kind::identity:
      return lambda;
    case Kind::shift:
      return lambda + param_;
    case Kind::power:
      return lambda > 0.0 ? std::pow(lambda, param_) : 0.0;
    case Kind::custom: {
      if (lambda <= table_.front().first) return table_.front().second;
      if (lambda >= table_.back().first) return table_.back().second;
      auto hi = std::upper_bound(table_.begin(), table_.end(),
                                 std::make_pair(lambda, 0.0));
      auto lo = hi - 1;
      double t = (lambda - lo->first) / (hi->first - lo->first);
      return lo->second + t * (hi->second - lo->second);
    }
    case Kind::flatten_top_k:
      throw InputError("flatten_top_k has no pointwise form; apply it to a spectrum");
  }
  throw InputError("SpectrumMap: unknown kind");
}

Vector SpectrumMap::apply(const Vector& sorted_descending, int first_fixed) const {
  const int n = static_cast<int>(sorted_descending.size());
  int limit = (first_fixed < 0 || first_fixed > n) ? n : first_fixed;
  Vector out = sorted_descending;
  if (kind_ == Kind::flatten_top_k) {
    if (k_ >= n) {
      throw InputError("flatten_top_k: k = " + std::to_string(k_) +
                       " requires a spectrum longer than k");
    }
    double target = sorted_descending(k_);
    for (int i = 0; i < std::min(k_, limit); ++i) out(i) = target;
    return out;
  }
  for (int i = 0; i < limit; ++i) out(i) = apply_scalar(sorted_descending(i));
  return out;
}

}  // namespace msk
