#include "exmix/damex.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace exmix {

Face::Face(std::vector<int> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.empty()) throw InputError("a face needs at least one member");
  if (members_.front() < 0) throw InputError("face members must be nonnegative");
}

bool Face::contains(int j) const {
  return std::binary_search(members_.begin(), members_.end(), j);
}

bool Face::subset_of(const Face& other) const {
  return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                       members_.end());
}

std::string Face::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < members_.size(); ++i) os << (i ? "," : "") << members_[i];
  os << '}';
  return os.str();
}

double MassTable::total() const {
  double s = 0.0;
  for (const auto& [face, m] : mass) s += m;
  return s;
}

std::vector<int> SupportSet::members(std::size_t k) const {
  if (k < faces.size()) return faces[k].members();
  return {singletons.at(k - faces.size())};
}

std::vector<Face> SupportSet::component_faces() const {
  std::vector<Face> out = faces;
  for (int j : singletons) out.emplace_back(std::vector<int>{j});
  return out;
}

Face assign_rectangle(std::span<const double> v, double t, double eps) {
  double sup = 0.0;
  std::vector<int> members;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = v[j] / t;
    sup = std::max(sup, x);
    if (x > eps) members.push_back(static_cast<int>(j));
  }
  if (sup < 1.0) throw BelowScale("point lies below the scale t, in no rectangle");
  return Face(std::move(members));
}

MassTable estimate_mass(const RowMatrix& vhat, std::size_t k, double eps) {
  const auto n = static_cast<std::size_t>(vhat.rows());
  if (k < 1 || k > n) throw InputError("tail size k must satisfy 1 <= k <= n");
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0, 1)");
  MassTable table;
  table.k = k;
  table.eps = eps;
  table.scale = static_cast<double>(n) / static_cast<double>(k);
  for (Eigen::Index i = 0; i < vhat.rows(); ++i) {
    if (vhat.row(i).maxCoeff() < table.scale) continue;
    ++table.counts[assign_rectangle(row_span(vhat, i), table.scale, eps)];
    ++table.n_region;
  }
  for (const auto& [face, count] : table.counts) {
    table.mass[face] = static_cast<double>(count) / static_cast<double>(k);
  }
  return table;
}

SupportSet recover_support(const MassTable& mass, double mu_min, std::size_t d) {
  if (mu_min < 0.0) throw InputError("mu_min must be nonnegative");
  std::vector<std::pair<Face, double>> kept;
  for (const auto& [face, m] : mass.mass) {
    if (m > mu_min) kept.emplace_back(face, m);
  }
  SupportSet out;
  out.d = d;
  // A sub-face of a surviving face is what thickening produces when one of the
  // face's coordinates is small, and the mixture explains it through the
  // larger face's Dirichlet component, so only maximal faces are retained.
  std::vector<std::pair<Face, double>> maximal;
  for (const auto& [face, m] : kept) {
    const bool covered = std::any_of(kept.begin(), kept.end(), [&](const auto& other) {
      return other.first != face && face.subset_of(other.first);
    });
    if (covered) {
      out.dropped_nested.push_back(face);
    } else {
      maximal.emplace_back(face, m);
    }
  }
  std::stable_sort(maximal.begin(), maximal.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [face, m] : maximal) {
    if (face.size() >= 2) {
      out.faces.push_back(face);
      out.face_mass.push_back(m);
    }
  }
  std::vector<std::pair<int, double>> singles;
  for (const auto& [face, m] : maximal) {
    if (face.size() == 1) singles.emplace_back(face.members().front(), m);
  }
  std::sort(singles.begin(), singles.end());
  for (const auto& [j, m] : singles) {
    if (j >= static_cast<int>(d)) throw InputError("face member outside [0, d)");
    out.singletons.push_back(j);
    out.singleton_mass.push_back(m);
  }
  for (const auto& f : out.faces) {
    if (f.members().back() >= static_cast<int>(d)) throw InputError("face member outside [0, d)");
  }
  if (out.components() == 0) throw EmptySupport("no face has mass above mu_min");
  return out;
}

SupportSet complete_coverage(SupportSet support) {
  std::vector<bool> covered(support.d, false);
  for (const auto& f : support.faces) {
    for (int j : f.members()) covered[static_cast<std::size_t>(j)] = true;
  }
  for (int j : support.singletons) covered[static_cast<std::size_t>(j)] = true;
  std::vector<std::pair<int, double>> singles;
  for (std::size_t i = 0; i < support.singletons.size(); ++i) {
    singles.emplace_back(support.singletons[i], support.singleton_mass[i]);
  }
  for (std::size_t j = 0; j < support.d; ++j) {
    if (!covered[j]) singles.emplace_back(static_cast<int>(j), 0.0);
  }
  std::sort(singles.begin(), singles.end());
  support.singletons.clear();
  support.singleton_mass.clear();
  for (const auto& [j, m] : singles) {
    support.singletons.push_back(j);
    support.singleton_mass.push_back(m);
  }
  return support;
}

bool same_support(const SupportSet& a, const SupportSet& b) {
  if (a.d != b.d) return false;
  const std::set<Face> fa(a.faces.begin(), a.faces.end());
  const std::set<Face> fb(b.faces.begin(), b.faces.end());
  const std::set<int> sa(a.singletons.begin(), a.singletons.end());
  const std::set<int> sb(b.singletons.begin(), b.singletons.end());
  return fa == fb && sa == sb;
}

}  // namespace exmix
