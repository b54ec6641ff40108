#pragma once

#include "exmix/types.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace exmix {

// A nonempty set of 0-based feature indices, kept sorted and unique.
class Face {
 public:
  Face() = default;
  explicit Face(std::vector<int> members);

  const std::vector<int>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(int j) const;
  // Non-strict inclusion.
  bool subset_of(const Face& other) const;
  bool nested_with(const Face& other) const { return subset_of(other) || other.subset_of(*this); }
  std::string to_string() const;

  auto operator<=>(const Face&) const = default;

 private:
  std::vector<int> members_;
};

struct MassTable {
  std::map<Face, double> mass;            // count / k
  std::map<Face, std::size_t> counts;
  std::size_t k = 0;
  double eps = 0.0;
  double scale = 0.0;                     // t = n / k
  std::size_t n_region = 0;               // rows with sup-norm >= t

  double total() const;
};

// Support of the angular measure: K faces of size >= 2, then d1 singletons.
// Components are indexed faces first, singletons after.
struct SupportSet {
  std::size_t d = 0;
  std::vector<Face> faces;
  std::vector<int> singletons;
  std::vector<double> face_mass;
  std::vector<double> singleton_mass;
  std::vector<Face> dropped_nested;  // faces removed by the non-nesting rule

  std::size_t K() const { return faces.size(); }
  std::size_t d1() const { return singletons.size(); }
  std::size_t components() const { return faces.size() + singletons.size(); }
  // Members of component k (a face, or the single coordinate of a singleton).
  std::vector<int> members(std::size_t k) const;
  // Faces and singletons as one list of faces, in component order.
  std::vector<Face> component_faces() const;
};

// Rectangle containing v / t: {j : v_j / t > eps}. Throws BelowScale when the
// sup-norm of v / t is below 1.
Face assign_rectangle(std::span<const double> v, double t, double eps);

// Empirical mass of every thickened rectangle at scale t = n / k.
MassTable estimate_mass(const RowMatrix& vhat, std::size_t k, double eps);

// Faces with mass > mu_min. Nested survivors are resolved by keeping the
// maximal face, singletons covered by a surviving face are dropped. Faces are
// ordered by descending mass (ties by face order). Throws EmptySupport.
SupportSet recover_support(const MassTable& mass, double mu_min, std::size_t d);

// Adds every coordinate that no face or singleton covers as a zero-mass
// singleton, so the moment constraint can be satisfied.
SupportSet complete_coverage(SupportSet support);

// True when both describe the same set of faces and singletons, in any order.
bool same_support(const SupportSet& a, const SupportSet& b);

}  // namespace exmix
