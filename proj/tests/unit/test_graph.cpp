#include "exmix/errors.hpp"
#include "exmix/eval.hpp"
#include "exmix/graph.hpp"
#include "exmix/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <vector>

using namespace exmix;

namespace {

PosteriorMatrix posterior(std::initializer_list<std::initializer_list<double>> rows) {
  PosteriorMatrix g{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()),
                                    static_cast<Eigen::Index>(rows.begin()->size()))};
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) g.gamma(i, j++) = x;
    ++i;
  }
  return g;
}

// Each row is the indicator of its block mixed with a uniform random row.
PosteriorMatrix noisy_blocks(std::size_t blocks, std::size_t per_block, double noise, std::uint64_t seed,
                             std::vector<std::size_t>& truth) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(blocks * per_block);
  PosteriorMatrix g{Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(blocks))};
  truth.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(i) % blocks;
    truth.push_back(b);
    Eigen::VectorXd r(static_cast<Eigen::Index>(blocks));
    for (auto& x : r) x = u(rng);
    r /= r.sum();
    g.gamma.row(i) = noise * r.transpose();
    g.gamma(i, static_cast<Eigen::Index>(b)) += 1.0 - noise;
  }
  return g;
}

double distance(const Layout2D& l, std::size_t a, std::size_t b) {
  return std::hypot(l.coords[a][0] - l.coords[b][0], l.coords[a][1] - l.coords[b][1]);
}

// Balanced start/end tags, ignoring the prolog and self-closing tags.
bool tags_balanced(const std::string& xml) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z_][\w:.-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(xml.begin(), xml.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3].length() > 0) continue;
    if (m[1].length() == 0) {
      stack.push_back(m[2]);
    } else {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t c = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++c;
  return c;
}

}  // namespace

TEST_CASE("similarity of small posteriors") {
  const auto g = similarity_matrix(posterior({{1, 0}, {0, 1}, {0.5, 0.5}}));
  CHECK(g.weights(0, 1) == 0.0);
  CHECK(g.weights(0, 2) == 0.5);
  CHECK(g.weights(1, 2) == 0.5);
  CHECK(g.weights.diagonal().isZero());
  CHECK(g.self(0) == 1.0);
  CHECK(g.self(2) == 0.5);
  CHECK(g.edge_count() == 2);
  CHECK(g.node_ids == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(similarity_matrix(posterior({{1, 0}}), {4, 5}), LengthMismatch);
}

TEST_CASE("similarity is symmetric, bounded and dominated by self weights") {
  std::vector<std::size_t> truth;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = similarity_matrix(noisy_blocks(4, 6, 0.6, seed, truth));
    CHECK((g.weights - g.weights.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.weights.minCoeff() >= 0.0);
    CHECK(g.weights.maxCoeff() <= 1.0);
    for (Eigen::Index i = 0; i < g.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.weights.cols(); ++j) {
        if (i != j) CHECK(g.weights(i, j) <= std::sqrt(g.self(i) * g.self(j)) + 1e-15);
      }
    }
  }
}

TEST_CASE("hard assignment and neighbor ranking") {
  const auto a = hard_assign(posterior({{0.2, 0.8}, {0.5, 0.5}, {0.9, 0.1}}));
  CHECK(a.labels == std::vector<std::size_t>{1, 0, 0});
  CHECK(a.n_clusters == 2);

  const auto g = similarity_matrix(posterior({{1, 0}, {0.5, 0.5}, {0.9, 0.1}, {0, 1}}));
  CHECK(rank_neighbors(g, 0, 3) == std::vector<std::size_t>{2, 1, 3});
  CHECK(rank_neighbors(g, 0, 1) == std::vector<std::size_t>{2});
  CHECK(rank_neighbors(g, 1, 3) == std::vector<std::size_t>{0, 2, 3});  // ties by position
  CHECK_THROWS_AS(rank_neighbors(g, 0, 0), InputError);
  CHECK_THROWS_AS(rank_neighbors(g, 0, 4), InputError);
  CHECK_THROWS_AS(rank_neighbors(g, 4, 1), InputError);
}

TEST_CASE("thresholding edges") {
  const auto g = similarity_matrix(posterior({{1, 0}, {0.5, 0.5}, {0.9, 0.1}, {0, 1}}));
  const auto t = threshold_edges(g, 0.5);
  CHECK(t.edge_threshold == 0.5);
  CHECK(t.weights(0, 3) == 0.0);
  CHECK(t.weights(0, 2) == 0.9);
  CHECK(t.weights(1, 3) == 0.5);
  CHECK(t.edge_count() < g.edge_count());
  CHECK(threshold_edges(g, 0.0).weights == g.weights);
  CHECK_THROWS_AS(threshold_edges(g, -0.1), InputError);
}

TEST_CASE("spectral clustering separates two cliques") {
  std::vector<std::size_t> truth;
  const auto g = similarity_matrix(noisy_blocks(2, 8, 0.0, 1, truth));
  const auto c = spectral_clustering(g, 2, 7);
  CHECK(c.method == ClusterMethod::Spectral);
  CHECK(c.labels[0] == 0);
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(c.labels[i] == truth[i]);
  CHECK_THROWS_AS(spectral_clustering(g, 0, 0), InputError);
  CHECK_THROWS_AS(spectral_clustering(g, 17, 0), InputError);
}

TEST_CASE("spectral clustering recovers noisy blocks") {
  std::vector<std::size_t> truth;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = similarity_matrix(noisy_blocks(3, 20, 0.5, seed, truth));
    const auto c = spectral_clustering(g, 3, seed);
    CHECK(purity(c.labels, truth) >= 0.95);
  }
}

TEST_CASE("spectral clustering is deterministic and labels by first appearance") {
  std::vector<std::size_t> truth;
  const auto g = similarity_matrix(noisy_blocks(3, 10, 0.5, 4, truth));
  const auto a = spectral_clustering(g, 3, 21);
  CHECK(a.labels == spectral_clustering(g, 3, 21).labels);
  std::size_t next = 0;
  for (auto l : a.labels) {
    CHECK(l <= next);
    if (l == next) ++next;
  }
}

TEST_CASE("layout: determinism, range, attraction and repulsion") {
  std::vector<std::size_t> truth;
  const auto g = similarity_matrix(noisy_blocks(3, 6, 0.3, 2, truth));
  const auto a = fr_layout(g, 50, 9);
  const auto b = fr_layout(g, 50, 9);
  REQUIRE(a.coords.size() == g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    CHECK(a.coords[i] == b.coords[i]);
    for (double x : a.coords[i]) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  CHECK_THROWS_AS(fr_layout(g, 0, 9), InputError);

  // nodes 0 and 1 share a component, node 2 is on its own
  const auto pair = similarity_matrix(posterior({{1, 0}, {1, 0}, {0, 1}}));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto l = fr_layout(pair, 100, seed);
    CHECK(distance(l, 0, 1) < distance(l, 0, 2));
    CHECK(distance(l, 0, 1) < distance(l, 1, 2));
  }

  // with no edges only repulsion acts
  const auto lone = similarity_matrix(PosteriorMatrix{Eigen::MatrixXd::Identity(8, 8)});
  const auto l = fr_layout(lone, 50, 3);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) CHECK(distance(l, i, j) > 1e-3);
  }
}

TEST_CASE("relabeling the nodes permutes every output") {
  std::vector<std::size_t> truth;
  const auto base = noisy_blocks(3, 8, 0.4, 6, truth);
  const auto n = base.gamma.rows();
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);

  PosteriorMatrix shuffled{Eigen::MatrixXd(n, base.gamma.cols())};
  std::vector<std::size_t> ids(perm.size()), shuffled_truth(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    shuffled.gamma.row(static_cast<Eigen::Index>(p)) = base.gamma.row(static_cast<Eigen::Index>(perm[p]));
    ids[p] = perm[p];
    shuffled_truth[p] = truth[perm[p]];
  }
  const auto g = similarity_matrix(base);
  const auto h = similarity_matrix(shuffled, ids);
  for (std::size_t p = 0; p < perm.size(); ++p) {
    for (std::size_t q = 0; q < perm.size(); ++q) {
      CHECK(h.weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) ==
            doctest::Approx(g.weights(static_cast<Eigen::Index>(perm[p]), static_cast<Eigen::Index>(perm[q])))
                .epsilon(1e-14));
    }
  }

  const auto cg = spectral_clustering(g, 3, 1);
  const auto ch = spectral_clustering(h, 3, 1);
  std::vector<std::size_t> pulled(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) pulled[p] = cg.labels[perm[p]];
  CHECK(purity(ch.labels, pulled) == 1.0);
  CHECK(purity(pulled, ch.labels) == 1.0);

  const auto lg = fr_layout(g, 50, 4);
  const auto lh = fr_layout(h, 50, 4);
  for (std::size_t p = 0; p < perm.size(); ++p) {
    CHECK(lh.coords[p][0] == doctest::Approx(lg.coords[perm[p]][0]).epsilon(1e-6));
    CHECK(lh.coords[p][1] == doctest::Approx(lg.coords[perm[p]][1]).epsilon(1e-6));
  }
}

TEST_CASE("graph exports") {
  const auto g = threshold_edges(similarity_matrix(posterior({{1, 0}, {0.5, 0.5}, {0.9, 0.1}, {0, 1}}), {10, 11, 12, 13}), 0.2);
  GraphExport e{g, hard_assign(posterior({{1, 0}, {0.5, 0.5}, {0.9, 0.1}, {0, 1}})), fr_layout(g, 20, 0),
                {"{0,1}", "{0,1}", "{0,1}", "{2}"}};

  const auto ml = render_graph(e, GraphFormat::GraphML);
  CHECK(ml.rfind("<?xml", 0) == 0);
  CHECK(tags_balanced(ml));
  CHECK(count(ml, "<node ") == 4);
  CHECK(count(ml, "<edge ") == g.edge_count());
  CHECK(count(ml, "<key ") >= 4);

  const auto dot = render_graph(e, GraphFormat::Dot);
  CHECK(count(dot, " -- ") == g.edge_count());
  CHECK(dot.find("n13") != std::string::npos);

  const auto json = render_graph(e, GraphFormat::Json);
  const auto back = parse_graph_json(json);
  CHECK(back.graph.node_ids == g.node_ids);
  CHECK(back.graph.weights == g.weights);
  CHECK(back.graph.self == g.self);
  CHECK(back.assignment.labels == e.assignment.labels);
  CHECK(back.node_faces == e.node_faces);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.layout.coords[i] == e.layout.coords[i]);
  CHECK(render_graph(back, GraphFormat::Json) == json);
  CHECK_THROWS_AS(parse_graph_json("{"), ParseError);

  CHECK(parse_graph_format("graphml") == GraphFormat::GraphML);
  CHECK(parse_graph_format("dot") == GraphFormat::Dot);
  CHECK(format_extension(GraphFormat::Json) == "json");
  CHECK_THROWS_AS(parse_graph_format("png"), UnsupportedFormat);

  auto bad = e;
  bad.node_faces.pop_back();
  CHECK_THROWS_AS(render_graph(bad, GraphFormat::Json), LengthMismatch);
}
