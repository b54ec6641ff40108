#pragma once

#include "exmix/em.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace exmix {

// w(i, j) = sum_k gamma_ik gamma_jk, the posterior probability that i and j
// share a component. The diagonal of `weights` is zero; self-similarities
// live in `self`.
struct SimilarityGraph {
  Eigen::MatrixXd weights;
  Eigen::VectorXd self;
  std::vector<std::size_t> node_ids;  // original row indices
  double edge_threshold = 0.0;

  std::size_t n() const { return node_ids.size(); }
  std::size_t edge_count() const;
};

enum class ClusterMethod { HardArgmax, Spectral };

struct ClusterAssignment {
  std::vector<std::size_t> labels;  // in [0, n_clusters)
  ClusterMethod method = ClusterMethod::HardArgmax;
  std::size_t n_clusters = 0;
};

struct Layout2D {
  std::vector<std::array<double, 2>> coords;
};

// node_ids default to 0..n-1.
SimilarityGraph similarity_matrix(const PosteriorMatrix& gamma, std::vector<std::size_t> node_ids = {});

// Row-wise argmax; ties go to the smallest component index.
ClusterAssignment hard_assign(const PosteriorMatrix& gamma);

// Up to l other nodes of i (positions, not ids) by decreasing weight, ties by
// position.
std::vector<std::size_t> rank_neighbors(const SimilarityGraph& graph, std::size_t i, std::size_t l);

// Zeroes every off-diagonal weight below eps.
SimilarityGraph threshold_edges(SimilarityGraph graph, double eps);

// Symmetric normalized Laplacian, its n_clusters lowest eigenvectors with
// rows scaled to unit length, then k-means++ with `restarts` seeded runs.
// Labels are numbered by first appearance. Throws ConvergenceFailure if the
// eigensolver fails.
ClusterAssignment spectral_clustering(const SimilarityGraph& graph, std::size_t n_clusters,
                                      std::uint64_t seed, int restarts = 10);

// Force-directed layout: attraction w d^2 / k, repulsion k^2 / d with
// k = 1 / sqrt(n), linearly decreasing step. Node starting points depend only
// on the seed and the node id. Output is scaled into [0, 1]^2.
Layout2D fr_layout(const SimilarityGraph& graph, int iterations, std::uint64_t seed);

enum class GraphFormat { GraphML, Dot, Json };

// Throws UnsupportedFormat.
GraphFormat parse_graph_format(std::string_view name);
std::string format_extension(GraphFormat format);

struct GraphExport {
  SimilarityGraph graph;
  ClusterAssignment assignment;
  Layout2D layout;
  std::vector<std::string> node_faces;  // face of the hard-assigned component
};

std::string render_graph(const GraphExport& g, GraphFormat format);
// Inverse of render_graph for the JSON format.
GraphExport parse_graph_json(std::string_view text);

}  // namespace exmix
