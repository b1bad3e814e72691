#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egf/attachment.hpp"
#include "egf/graph.hpp"
#include "egf/learning.hpp"

namespace egf {

/// Barabasi-Albert growth: complete seed clique on m_attach + 1 nodes, then
/// every new node wires to m_attach distinct existing nodes chosen with
/// degree-proportional probability. Unit weights, symmetric adjacency.
Graph generate_ba(int n, int m_attach, Rng& rng);

/// Random unit-norm mix of the `bandwidth` eigenvectors of a symmetric shift
/// matrix with the largest eigenvalues (the lowest-variation basis under the
/// adjacency ordering where variation decreases as the eigenvalue grows).
Eigen::VectorXd bandlimited_signal(const Eigen::MatrixXd& a_plus, int bandwidth, Rng& rng);

/// k-nearest-neighbour graph over point rows, Gaussian-kernel weights
/// exp(-d^2 / s^2) with s the mean selected-neighbour distance, symmetrized
/// entrywise by max. Distance ties break toward the smaller index.
Graph knn_graph(const Eigen::MatrixXd& points, int k);

/// Uniformly random points in the unit square, one per row.
Eigen::MatrixXd uniform_points(int n, int dim, Rng& rng);

/// knn_graph over uniform 2-D points: the synthetic sensor network.
Graph sensor_graph(int n, int k, Rng& rng);

/// Sign of the Fiedler vector (eigenvector of the second-smallest eigenvalue
/// of the combinatorial Laplacian); zero entries map to +1. The graph must be
/// symmetric and connected.
Eigen::VectorXd spectral_bipartition(const Graph& g);

/// Median number of neighbours (nonzero off-diagonal entries per row).
int median_degree(const Graph& g);

/// Median nonzero edge weight.
double median_edge_weight(const Graph& g);

struct DenoisingSpec {
    int realizations = 200;
    double snr_db = 20.0;  ///< +infinity means noiseless
    int bandwidth = 10;
};

/// Fixed existing graph plus per-realization expansions. Each sample carries
/// its own bandlimited target (drawn from that realization's symmetrized
/// expanded adjacency), the noisy observation, the realized attachments and an
/// all-ones mask.
struct DenoisingInstance {
    Graph graph;
    std::vector<TrainingSample> samples;
    double snr_db = 0.0;
};

DenoisingInstance make_denoising_instance(const Graph& g, const AttachmentModel& model_in,
                                          const AttachmentModel& model_out,
                                          const DenoisingSpec& spec, Rng& rng);

struct SSLSpec {
    int realizations = 200;
    double observed_fraction = 0.1;
    double labeled_fraction_incoming = 1.0;
};

/// Two-class node labelling task. Samples observe the same masked existing
/// labels; per realization the incoming node's attachments are resampled, its
/// ground-truth class is the majority class among its realized edges (ties go
/// to +1), and its label is revealed for the configured fraction of samples.
struct SSLInstance {
    Graph graph;
    Eigen::VectorXd labels;         ///< +-1 per existing node
    Eigen::VectorXd observed_mask;  ///< 0/1 per existing node
    std::vector<TrainingSample> samples;
    double labeled_fraction_incoming = 1.0;
};

SSLInstance make_ssl_instance(const Graph& g, const AttachmentModel& model_in,
                              const AttachmentModel& model_out, const SSLSpec& spec, Rng& rng);

struct ExternalData {
    Graph graph;
    Eigen::MatrixXd signals;  ///< one column per sample
    std::vector<std::string> sample_ids;
};

/// Edge list: `src dst weight` per line, `#` starts a comment. Signal CSV:
/// header `node,<id>,...`, then one row per node. Parse failures raise input
/// errors naming the offending line.
ExternalData load_external(const std::string& edge_list_path, const std::string& signal_csv_path);

void save_edge_list(const Graph& g, const std::string& path);
void save_signal_csv(const Eigen::MatrixXd& signals, const std::string& path);

}  // namespace egf
