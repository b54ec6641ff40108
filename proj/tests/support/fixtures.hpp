#pragma once

#include "exmix/damex.hpp"
#include "exmix/mixture.hpp"
#include "oracles.hpp"

#include <vector>

namespace fixture {

inline exmix::SupportSet support(std::size_t d, std::vector<std::vector<int>> faces, std::vector<int> singletons) {
  exmix::SupportSet s;
  s.d = d;
  for (auto& f : faces) s.faces.emplace_back(std::move(f));
  s.singletons = std::move(singletons);
  s.face_mass.assign(s.faces.size(), 0.0);
  s.singleton_mass.assign(s.singletons.size(), 0.0);
  return s;
}

inline oracle::Model to_oracle(const exmix::ThetaParams& theta) {
  oracle::Model m;
  m.d = theta.d();
  m.n_faces = theta.K();
  for (const auto& f : theta.support().component_faces()) m.components.push_back(f.members());
  for (Eigen::Index k = 0; k < theta.rho().rows(); ++k) {
    m.rho.emplace_back();
    for (Eigen::Index j = 0; j < theta.rho().cols(); ++j) m.rho.back().push_back(theta.rho()(k, j));
  }
  m.nu.assign(theta.nu().data(), theta.nu().data() + theta.nu().size());
  m.lambda.assign(theta.lambda().data(), theta.lambda().data() + theta.lambda().size());
  return m;
}

inline std::vector<double> row(const exmix::RowMatrix& v, Eigen::Index i) {
  return {v.row(i).data(), v.row(i).data() + v.cols()};
}

}  // namespace fixture
