#include "exmix/ingest.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace exmix {

void validate(const RawDataset& raw) {
  if (raw.rows.rows() < 2) throw InputError("dataset needs at least 2 rows");
  if (raw.rows.cols() < 1) throw InputError("dataset needs at least 1 column");
  if (!raw.feature_names.empty() &&
      raw.feature_names.size() != static_cast<std::size_t>(raw.rows.cols())) {
    throw InputError("feature name count does not match column count");
  }
  for (Eigen::Index i = 0; i < raw.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.rows.cols(); ++j) {
      if (!std::isfinite(raw.rows(i, j))) {
        throw InputError("non-finite value at row " + std::to_string(i) + ", column " +
                         std::to_string(j));
      }
    }
  }
}

RawDataset sign_double(const RawDataset& raw) {
  const auto n = raw.rows.rows();
  const auto d = raw.rows.cols();
  RawDataset out;
  out.rows.resize(n, 2 * d);
  out.feature_names.reserve(static_cast<std::size_t>(2 * d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = raw.rows.col(j).mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dev = raw.rows(i, j) - mean;
      out.rows(i, 2 * j) = std::max(dev, 0.0);
      out.rows(i, 2 * j + 1) = std::max(-dev, 0.0);
    }
    const std::string base = j < static_cast<Eigen::Index>(raw.feature_names.size())
                                 ? raw.feature_names[static_cast<std::size_t>(j)]
                                 : "f" + std::to_string(j);
    out.feature_names.push_back(base + "+");
    out.feature_names.push_back(base + "-");
  }
  return out;
}

StandardizedDataset empirical_pareto_transform(const RawDataset& raw) {
  const auto n = raw.rows.rows();
  const auto d = raw.rows.cols();
  StandardizedDataset out;
  out.source = "empirical-ranks";
  out.v.resize(n, d);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return raw.rows(a, j) < raw.rows(b, j);
    });
    // Tied values share the strict count of the first member of their run.
    Eigen::Index strict = 0;
    for (Eigen::Index pos = 0; pos < n; ++pos) {
      const auto i = order[static_cast<std::size_t>(pos)];
      if (pos > 0 && raw.rows(order[static_cast<std::size_t>(pos - 1)], j) < raw.rows(i, j)) {
        strict = pos;
      }
      out.v(i, j) = static_cast<double>(n) / static_cast<double>(n - strict);
    }
  }
  return out;
}

MarginalTransform::MarginalTransform(const RawDataset& reference)
    : n_(reference.n()), sorted_(reference.d()) {
  for (std::size_t j = 0; j < sorted_.size(); ++j) {
    auto col = reference.rows.col(static_cast<Eigen::Index>(j));
    sorted_[j].assign(col.begin(), col.end());
    std::sort(sorted_[j].begin(), sorted_[j].end());
  }
}

double MarginalTransform::transform(std::size_t column, double x) const {
  const auto& s = sorted_.at(column);
  const double n = static_cast<double>(n_);
  if (x > s.back()) return n;
  const auto lo = std::lower_bound(s.begin(), s.end(), x);
  double strict = static_cast<double>(lo - s.begin());
  if (lo != s.begin() && *lo != x) {
    // Between two distinct order statistics a < x < b: interpolate the strict
    // count between c(a) and c(b).
    const double b = *lo;
    const double a = *(lo - 1);
    const auto a_first = std::lower_bound(s.begin(), s.end(), a);
    const double ca = static_cast<double>(a_first - s.begin());
    strict = ca + (strict - ca) * (x - a) / (b - a);
  }
  return n / (n - strict);
}

StandardizedDataset MarginalTransform::apply(const RawDataset& raw) const {
  if (raw.d() != d()) throw InputError("column count differs from the reference sample");
  StandardizedDataset out;
  out.source = "reference-ranks";
  out.v.resize(raw.rows.rows(), raw.rows.cols());
  for (Eigen::Index i = 0; i < raw.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.rows.cols(); ++j) {
      out.v(i, j) = transform(static_cast<std::size_t>(j), raw.rows(i, j));
    }
  }
  return out;
}

std::vector<double> radii(const RowMatrix& v) {
  std::vector<double> out(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index i = 0; i < v.rows(); ++i) out[static_cast<std::size_t>(i)] = v.row(i).sum();
  return out;
}

double default_extreme_quantile(std::size_t n) {
  const double k = std::ceil(std::sqrt(static_cast<double>(n)));
  return 1.0 - k / static_cast<double>(n);
}

ExtremeSubset select_extremes_above(const StandardizedDataset& std_data, double r0) {
  ExtremeSubset out;
  out.r0 = r0;
  const auto r = radii(std_data.v);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > r0) out.indices.push_back(i);
  }
  if (out.indices.empty()) {
    throw EmptyExtremeSet("no row has radius above r0 = " + std::to_string(r0));
  }
  return out;
}

ExtremeSubset select_extremes(const StandardizedDataset& std_data, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw InputError("extreme quantile must lie in (0, 1)");
  }
  auto r = radii(std_data.v);
  if (r.empty()) throw EmptyExtremeSet("empty dataset");
  std::sort(r.begin(), r.end());
  const double pos = quantile * static_cast<double>(r.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, r.size() - 1);
  const double r0 = r[lo] + (pos - static_cast<double>(lo)) * (r[hi] - r[lo]);
  return select_extremes_above(std_data, r0);
}

ExtremeSubset select_top(const StandardizedDataset& std_data, std::size_t n0) {
  auto r = radii(std_data.v);
  if (n0 == 0 || n0 >= r.size()) throw InputError("top-n0 selection needs 0 < n0 < n");
  std::vector<double> sorted = r;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n0),
                   sorted.end(), std::greater<>());
  return select_extremes_above(std_data, sorted[n0]);
}

RowMatrix gather_rows(const RowMatrix& m, const std::vector<std::size_t>& indices) {
  RowMatrix out(static_cast<Eigen::Index>(indices.size()), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(indices[r]));
  }
  return out;
}

}  // namespace exmix
