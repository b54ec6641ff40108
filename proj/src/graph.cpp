#include "exmix/graph.hpp"

#include "exmix/errors.hpp"
#include "exmix/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace exmix {

namespace {

std::string number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* method_name(ClusterMethod m) {
  return m == ClusterMethod::Spectral ? "spectral" : "hard-argmax";
}

double squared_distance(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::MatrixXd& c, Eigen::Index k) {
  return (x.row(i) - c.row(k)).squaredNorm();
}

struct KMeansRun {
  std::vector<std::size_t> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const Eigen::MatrixXd& x, std::size_t k, Rng& rng) {
  const auto n = x.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd centers(kk, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index c = 1; c < kk; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index p = 0; p < c; ++p) best = std::min(best, squared_distance(x, i, centers, p));
      dist[static_cast<std::size_t>(i)] = best;
    }
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<Eigen::Index> draw(dist.begin(), dist.end());
      pick = draw(rng);
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
  }

  KMeansRun run;
  run.labels.assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < 300; ++it) {
    bool changed = it == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < kk; ++c) {
        const double dd = squared_distance(x, i, centers, c);
        if (dd < best_d) {
          best_d = dd;
          best = static_cast<std::size_t>(c);
        }
      }
      if (run.labels[static_cast<std::size_t>(i)] != best) changed = true;
      run.labels[static_cast<std::size_t>(i)] = best;
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto l = run.labels[static_cast<std::size_t>(i)];
      sums.row(static_cast<Eigen::Index>(l)) += x.row(i);
      ++counts[l];
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      // An emptied cluster keeps its previous center.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    run.inertia += squared_distance(x, i, centers, static_cast<Eigen::Index>(run.labels[static_cast<std::size_t>(i)]));
  }
  return run;
}

std::vector<std::size_t> relabel_by_appearance(const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> order;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (auto l : labels) {
    auto it = std::find(order.begin(), order.end(), l);
    if (it == order.end()) {
      order.push_back(l);
      it = order.end() - 1;
    }
    out.push_back(static_cast<std::size_t>(it - order.begin()));
  }
  return out;
}

}  // namespace

std::size_t SimilarityGraph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < weights.cols(); ++j) count += weights(i, j) > 0.0;
  }
  return count;
}

SimilarityGraph similarity_matrix(const PosteriorMatrix& gamma, std::vector<std::size_t> node_ids) {
  const auto n = gamma.gamma.rows();
  if (node_ids.empty()) {
    node_ids.resize(static_cast<std::size_t>(n));
    std::iota(node_ids.begin(), node_ids.end(), std::size_t{0});
  }
  if (node_ids.size() != static_cast<std::size_t>(n)) throw LengthMismatch("node ids do not match the posterior rows");
  SimilarityGraph g;
  g.node_ids = std::move(node_ids);
  g.weights = (gamma.gamma * gamma.gamma.transpose()).cwiseMax(0.0).cwiseMin(1.0);
  g.weights = (g.weights + g.weights.transpose()) / 2.0;
  g.self = g.weights.diagonal();
  g.weights.diagonal().setZero();
  return g;
}

ClusterAssignment hard_assign(const PosteriorMatrix& gamma) {
  ClusterAssignment out;
  out.method = ClusterMethod::HardArgmax;
  out.n_clusters = static_cast<std::size_t>(gamma.gamma.cols());
  for (Eigen::Index i = 0; i < gamma.gamma.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < gamma.gamma.cols(); ++k) {
      if (gamma.gamma(i, k) > gamma.gamma(i, best)) best = k;
    }
    out.labels.push_back(static_cast<std::size_t>(best));
  }
  return out;
}

std::vector<std::size_t> rank_neighbors(const SimilarityGraph& graph, std::size_t i, std::size_t l) {
  const auto n = graph.n();
  if (i >= n) throw InputError("node position out of range");
  if (l < 1 || l > n - 1) throw InputError("neighbor count must lie in [1, n - 1]");
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) others.push_back(j);
  }
  const auto ii = static_cast<Eigen::Index>(i);
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return graph.weights(ii, static_cast<Eigen::Index>(a)) > graph.weights(ii, static_cast<Eigen::Index>(b));
  });
  others.resize(l);
  return others;
}

SimilarityGraph threshold_edges(SimilarityGraph graph, double eps) {
  if (!(eps >= 0.0)) throw InputError("edge threshold must be nonnegative");
  graph.weights = (graph.weights.array() < eps).select(0.0, graph.weights);
  graph.edge_threshold = eps;
  return graph;
}

ClusterAssignment spectral_clustering(const SimilarityGraph& graph, std::size_t n_clusters,
                                      std::uint64_t seed, int restarts) {
  const auto n = static_cast<Eigen::Index>(graph.n());
  if (n == 0) throw InputError("spectral clustering of an empty graph");
  if (n_clusters < 1) throw InputError("n_clusters must be at least 1");
  if (static_cast<Eigen::Index>(n_clusters) > n) throw InputError("more clusters than nodes");
  if (restarts < 1) throw InputError("k-means restarts must be at least 1");
  ClusterAssignment out;
  out.method = ClusterMethod::Spectral;
  out.n_clusters = n_clusters;
  if (n_clusters == 1) {
    out.labels.assign(static_cast<std::size_t>(n), 0);
    return out;
  }

  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = graph.weights.row(i).sum();
    inv_sqrt(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * graph.weights * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("eigensolver did not converge");
  Eigen::MatrixXd embed = solver.eigenvectors().leftCols(static_cast<Eigen::Index>(n_clusters));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }

  Rng rng(derive_seed(seed, "kmeans"));
  KMeansRun best;
  for (int r = 0; r < restarts; ++r) {
    auto run = kmeans_once(embed, n_clusters, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  out.labels = relabel_by_appearance(best.labels);
  return out;
}

Layout2D fr_layout(const SimilarityGraph& graph, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw InputError("layout iterations must be at least 1");
  const auto n = graph.n();
  Layout2D out;
  out.coords.resize(n);
  const std::uint64_t base = derive_seed(seed, "layout");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(base, std::to_string(graph.node_ids[i])));
    out.coords[i] = {unif(rng), unif(rng)};
  }
  if (n == 0) return out;
  if (n == 1) {
    out.coords[0] = {0.5, 0.5};
    return out;
  }

  const double k = 1.0 / std::sqrt(static_cast<double>(n));
  auto extent = [&](int axis) {
    double lo = out.coords[0][axis], hi = lo;
    for (const auto& p : out.coords) {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
    return std::pair{lo, hi};
  };
  const auto [x_lo, x_hi] = extent(0);
  const auto [y_lo, y_hi] = extent(1);
  double temperature = 0.1 * std::max(x_hi - x_lo, y_hi - y_lo);
  const double cooling = temperature / (iterations + 1);

  std::vector<std::array<double, 2>> disp(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double dx_total = 0.0, dy_total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dx = out.coords[i][0] - out.coords[j][0];
        const double dy = out.coords[i][1] - out.coords[j][1];
        const double dist = std::max(std::hypot(dx, dy), 0.01);
        const double w = graph.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double f = k * k / (dist * dist) - w * dist / k;
        dx_total += dx * f;
        dy_total += dy * f;
      }
      disp[i] = {dx_total, dy_total};
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::max(std::hypot(disp[i][0], disp[i][1]), 0.01);
      out.coords[i][0] += disp[i][0] * temperature / len;
      out.coords[i][1] += disp[i][1] * temperature / len;
    }
    temperature -= cooling;
  }

  const auto [a_lo, a_hi] = extent(0);
  const auto [b_lo, b_hi] = extent(1);
  const double span = std::max(a_hi - a_lo, b_hi - b_lo);
  for (auto& p : out.coords) {
    p[0] = span > 0.0 ? (p[0] - a_lo) / span : 0.5;
    p[1] = span > 0.0 ? (p[1] - b_lo) / span : 0.5;
  }
  return out;
}

GraphFormat parse_graph_format(std::string_view name) {
  if (name == "graphml") return GraphFormat::GraphML;
  if (name == "dot") return GraphFormat::Dot;
  if (name == "json") return GraphFormat::Json;
  throw UnsupportedFormat("unknown graph format '" + std::string(name) + "' (expected graphml, dot or json)");
}

std::string format_extension(GraphFormat format) {
  switch (format) {
    case GraphFormat::GraphML: return "graphml";
    case GraphFormat::Dot: return "dot";
    case GraphFormat::Json: return "json";
  }
  return "";
}

std::string render_graph(const GraphExport& g, GraphFormat format) {
  const auto n = g.graph.n();
  if (g.assignment.labels.size() != n || g.layout.coords.size() != n || g.node_faces.size() != n) {
    throw LengthMismatch("graph, assignment, layout and faces disagree on the node count");
  }
  std::ostringstream os;
  const auto& w = g.graph.weights;
  if (format == GraphFormat::Json) {
    nlohmann::json j;
    j["directed"] = false;
    j["edge_threshold"] = g.graph.edge_threshold;
    j["cluster_method"] = method_name(g.assignment.method);
    j["n_clusters"] = g.assignment.n_clusters;
    j["nodes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
      j["nodes"].push_back({{"id", g.graph.node_ids[i]},
                            {"cluster", g.assignment.labels[i]},
                            {"x", g.layout.coords[i][0]},
                            {"y", g.layout.coords[i][1]},
                            {"face", g.node_faces[i]},
                            {"self_weight", g.graph.self(static_cast<Eigen::Index>(i))}});
    }
    j["edges"] = nlohmann::json::array();
    for (Eigen::Index a = 0; a < w.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < w.cols(); ++b) {
        if (w(a, b) > 0.0) {
          j["edges"].push_back({{"source", g.graph.node_ids[static_cast<std::size_t>(a)]},
                                {"target", g.graph.node_ids[static_cast<std::size_t>(b)]},
                                {"weight", w(a, b)}});
        }
      }
    }
    return j.dump(1) + "\n";
  }
  if (format == GraphFormat::Dot) {
    os << "graph extremes {\n";
    for (std::size_t i = 0; i < n; ++i) {
      os << "  n" << g.graph.node_ids[i] << " [cluster=" << g.assignment.labels[i]
         << ", x=" << number(g.layout.coords[i][0]) << ", y=" << number(g.layout.coords[i][1])
         << ", pos=\"" << number(g.layout.coords[i][0]) << "," << number(g.layout.coords[i][1])
         << "!\", face=\"" << g.node_faces[i] << "\"];\n";
    }
    for (Eigen::Index a = 0; a < w.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < w.cols(); ++b) {
        if (w(a, b) > 0.0) {
          os << "  n" << g.graph.node_ids[static_cast<std::size_t>(a)] << " -- n"
             << g.graph.node_ids[static_cast<std::size_t>(b)] << " [weight=" << number(w(a, b)) << "];\n";
        }
      }
    }
    os << "}\n";
    return os.str();
  }
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
     << "    xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
     << "    xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
        "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
     << "  <key id=\"cluster\" for=\"node\" attr.name=\"cluster\" attr.type=\"int\"/>\n"
     << "  <key id=\"x\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n"
     << "  <key id=\"y\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n"
     << "  <key id=\"face\" for=\"node\" attr.name=\"face\" attr.type=\"string\"/>\n"
     << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
     << "  <graph id=\"extremes\" edgedefault=\"undirected\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "    <node id=\"n" << g.graph.node_ids[i] << "\">"
       << "<data key=\"cluster\">" << g.assignment.labels[i] << "</data>"
       << "<data key=\"x\">" << number(g.layout.coords[i][0]) << "</data>"
       << "<data key=\"y\">" << number(g.layout.coords[i][1]) << "</data>"
       << "<data key=\"face\">" << xml_escape(g.node_faces[i]) << "</data></node>\n";
  }
  for (Eigen::Index a = 0; a < w.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < w.cols(); ++b) {
      if (w(a, b) > 0.0) {
        os << "    <edge source=\"n" << g.graph.node_ids[static_cast<std::size_t>(a)] << "\" target=\"n"
           << g.graph.node_ids[static_cast<std::size_t>(b)] << "\"><data key=\"weight\">"
           << number(w(a, b)) << "</data></edge>\n";
      }
    }
  }
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

GraphExport parse_graph_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
  try {
    GraphExport g;
    const auto& nodes = j.at("nodes");
    const auto n = nodes.size();
    const auto nn = static_cast<Eigen::Index>(n);
    g.graph.weights = Eigen::MatrixXd::Zero(nn, nn);
    g.graph.self.resize(nn);
    g.graph.edge_threshold = j.at("edge_threshold").get<double>();
    g.assignment.method = j.at("cluster_method").get<std::string>() == "spectral" ? ClusterMethod::Spectral
                                                                                    : ClusterMethod::HardArgmax;
    g.assignment.n_clusters = j.at("n_clusters").get<std::size_t>();
    std::map<std::size_t, Eigen::Index> position;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = nodes[i];
      const auto id = node.at("id").get<std::size_t>();
      g.graph.node_ids.push_back(id);
      position[id] = static_cast<Eigen::Index>(i);
      g.assignment.labels.push_back(node.at("cluster").get<std::size_t>());
      g.layout.coords.push_back({node.at("x").get<double>(), node.at("y").get<double>()});
      g.node_faces.push_back(node.at("face").get<std::string>());
      g.graph.self(static_cast<Eigen::Index>(i)) = node.at("self_weight").get<double>();
    }
    for (const auto& e : j.at("edges")) {
      const auto a = position.at(e.at("source").get<std::size_t>());
      const auto b = position.at(e.at("target").get<std::size_t>());
      const double w = e.at("weight").get<double>();
      g.graph.weights(a, b) = w;
      g.graph.weights(b, a) = w;
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  } catch (const std::out_of_range&) {
    throw ParseError("graph JSON: edge refers to an unknown node");
  }
}

}  // namespace exmix
