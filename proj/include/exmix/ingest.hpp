#pragma once

#include "exmix/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace exmix {

struct RawDataset {
  RowMatrix rows;
  std::vector<std::string> feature_names;

  std::size_t n() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows.cols()); }
};

// Unit-Pareto scale values; every entry lies in [1, n] when produced by the
// empirical rank transform.
struct StandardizedDataset {
  RowMatrix v;
  std::string source;

  std::size_t n() const { return static_cast<std::size_t>(v.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(v.cols()); }
};

struct ExtremeSubset {
  std::vector<std::size_t> indices;  // ascending row indices
  double r0 = 0.0;                   // sum-norm threshold, every selected radius is > r0

  std::size_t n0() const { return indices.size(); }
};

// Checks shape and finiteness; throws InputError naming the offending row.
void validate(const RawDataset& raw);

// Splits every feature into its positive and negative excursion around the
// column mean: columns (2j, 2j+1) = (max(x - mean, 0), max(mean - x, 0)).
RawDataset sign_double(const RawDataset& raw);

// V(i,j) = n / (n - c(i,j)), c(i,j) = #{i' : X(i',j) < X(i,j)}.
StandardizedDataset empirical_pareto_transform(const RawDataset& raw);

// Applies the rank transform learned on a reference sample to new rows. Values
// between reference order statistics get a linearly interpolated strict count;
// values above the reference maximum map to n.
class MarginalTransform {
 public:
  explicit MarginalTransform(const RawDataset& reference);

  StandardizedDataset apply(const RawDataset& raw) const;
  double transform(std::size_t column, double x) const;
  std::size_t d() const { return sorted_.size(); }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<double>> sorted_;
};

// Sum-norm of every row.
std::vector<double> radii(const RowMatrix& v);

// 1 - ceil(sqrt(n)) / n.
double default_extreme_quantile(std::size_t n);

// r0 = linearly interpolated empirical quantile of the radii; keeps rows with
// radius > r0. Throws InputError unless 0 < quantile < 1, EmptyExtremeSet if
// nothing survives.
ExtremeSubset select_extremes(const StandardizedDataset& std_data, double quantile);

// Same with an absolute threshold.
ExtremeSubset select_extremes_above(const StandardizedDataset& std_data, double r0);

// Keeps the n0 rows of largest radius: r0 is the (n0+1)-th largest radius and
// rows tied with it are dropped, so fewer than n0 rows may come back.
ExtremeSubset select_top(const StandardizedDataset& std_data, std::size_t n0);

RowMatrix gather_rows(const RowMatrix& m, const std::vector<std::size_t>& indices);

}  // namespace exmix
