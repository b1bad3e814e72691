#include "egf/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace egf {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols()) throw InputError(std::string(who) + ": matrix not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw UnsupportedError(std::string(who) + ": matrix not symmetric");
}

double lower_median(std::vector<double> values) {
    if (values.empty()) throw InputError("median: empty value set");
    const std::size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    return values[mid];
}

}  // namespace

Graph generate_ba(int n, int m_attach, Rng& rng) {
    if (m_attach < 1 || n <= m_attach) throw InputError("generate_ba: need n > m_attach >= 1");
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    const int seed_size = m_attach + 1;
    for (int i = 0; i < seed_size; ++i)
        for (int j = 0; j < seed_size; ++j)
            if (i != j) adj(i, j) = 1.0;
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < seed_size; ++i) degree[static_cast<std::size_t>(i)] = m_attach;
    for (int v = seed_size; v < n; ++v) {
        std::vector<double> weights(degree.begin(), degree.begin() + v);
        for (int pick = 0; pick < m_attach; ++pick) {
            std::discrete_distribution<int> dist(weights.begin(), weights.end());
            const int u = dist(rng);
            weights[static_cast<std::size_t>(u)] = 0.0;  // distinct endpoints
            adj(v, u) = adj(u, v) = 1.0;
            degree[static_cast<std::size_t>(u)] += 1.0;
        }
        degree[static_cast<std::size_t>(v)] = m_attach;
    }
    return Graph(n, std::move(adj));
}

Eigen::VectorXd bandlimited_signal(const Eigen::MatrixXd& a_plus, int bandwidth, Rng& rng) {
    require_symmetric(a_plus, "bandlimited_signal");
    const Eigen::Index size = a_plus.rows();
    if (bandwidth < 1 || bandwidth > size)
        throw InputError("bandlimited_signal: bandwidth out of range");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_plus);
    if (eig.info() != Eigen::Success)
        throw NumericalError("bandlimited_signal: eigendecomposition failed");
    // Eigenvalues come out ascending; the low-variation basis sits at the top.
    const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(bandwidth);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd coeff(bandwidth);
    Eigen::VectorXd t;
    double norm = 0.0;
    do {
        for (int i = 0; i < bandwidth; ++i) coeff(i) = normal(rng);
        t = basis * coeff;
        norm = t.norm();
    } while (norm < 1e-12);
    return t / norm;
}

Graph knn_graph(const Eigen::MatrixXd& points, int k) {
    const int n = static_cast<int>(points.rows());
    if (n < 2) throw InputError("knn_graph: need at least 2 points");
    if (k < 1 || k >= n) throw InputError("knn_graph: need 1 <= k < n");
    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist(i, j) = (points.row(i) - points.row(j)).norm();

    std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
    double dist_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> order;
        order.reserve(static_cast<std::size_t>(n - 1));
        for (int j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
            return a < b;
        });
        order.resize(static_cast<std::size_t>(k));
        for (int j : order) dist_sum += dist(i, j);
        neighbours[static_cast<std::size_t>(i)] = std::move(order);
    }
    const double sigma_d = dist_sum / static_cast<double>(n * k);
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : neighbours[static_cast<std::size_t>(i)]) {
            const double d = dist(i, j);
            const double w = sigma_d > 0.0 ? std::exp(-d * d / (sigma_d * sigma_d)) : 1.0;
            adj(i, j) = std::max(adj(i, j), w);
            adj(j, i) = std::max(adj(j, i), w);
        }
    // Scale to unit spectral radius so polynomial filters stay stable and
    // I - A acts as a smoothness (high-pass) operator on the kernel graph.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(adj, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("knn_graph: eigendecomposition failed");
    const double radius =
        std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
    if (radius > 0.0) adj /= radius;
    return Graph(n, std::move(adj));
}

Eigen::MatrixXd uniform_points(int n, int dim, Rng& rng) {
    if (n < 1 || dim < 1) throw InputError("uniform_points: invalid shape");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd points(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) points(i, j) = unif(rng);
    return points;
}

Graph sensor_graph(int n, int k, Rng& rng) { return knn_graph(uniform_points(n, 2, rng), k); }

Eigen::VectorXd spectral_bipartition(const Graph& g) {
    require_symmetric(g.adj, "spectral_bipartition");
    // Connectivity check on the support.
    std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < g.n; ++v)
            if (!seen[static_cast<std::size_t>(v)] && g.adj(u, v) > 0.0) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                stack.push_back(v);
            }
    }
    if (reached != g.n) throw InputError("spectral_bipartition: graph is disconnected");

    const Eigen::MatrixXd lap =
        Eigen::MatrixXd(g.adj.rowwise().sum().asDiagonal()) - g.adj;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    if (eig.info() != Eigen::Success)
        throw NumericalError("spectral_bipartition: eigendecomposition failed");
    Eigen::VectorXd fiedler = eig.eigenvectors().col(1);
    // Canonical orientation: first entry of meaningful magnitude positive.
    for (Eigen::Index i = 0; i < fiedler.size(); ++i)
        if (std::abs(fiedler(i)) > 1e-12) {
            if (fiedler(i) < 0.0) fiedler = -fiedler;
            break;
        }
    Eigen::VectorXd labels(g.n);
    for (int i = 0; i < g.n; ++i) labels(i) = fiedler(i) < 0.0 ? -1.0 : 1.0;
    return labels;
}

int median_degree(const Graph& g) {
    std::vector<double> degrees(static_cast<std::size_t>(g.n), 0.0);
    for (int i = 0; i < g.n; ++i) {
        int count = 0;
        for (int j = 0; j < g.n; ++j)
            if (j != i && g.adj(i, j) > 0.0) ++count;
        degrees[static_cast<std::size_t>(i)] = count;
    }
    return static_cast<int>(lower_median(std::move(degrees)));
}

double median_edge_weight(const Graph& g) {
    std::vector<double> weights;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (i != j && g.adj(i, j) > 0.0) weights.push_back(g.adj(i, j));
    return lower_median(std::move(weights));
}

DenoisingInstance make_denoising_instance(const Graph& g, const AttachmentModel& model_in,
                                          const AttachmentModel& model_out,
                                          const DenoisingSpec& spec, Rng& rng) {
    if (spec.realizations < 1) throw InputError("make_denoising_instance: need realizations >= 1");
    model_in.validate();
    model_out.validate();
    const double snr_linear = std::pow(10.0, spec.snr_db / 10.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenoisingInstance inst;
    inst.graph = g;
    inst.snr_db = spec.snr_db;
    inst.samples.reserve(static_cast<std::size_t>(spec.realizations));
    for (int r = 0; r < spec.realizations; ++r) {
        const Eigen::VectorXd b = sample_attachment(model_in, rng);
        const Eigen::VectorXd a = sample_attachment(model_out, rng);
        // Both edge directions superimposed; symmetrized only to furnish an
        // orthonormal low-variation basis for the target.
        Eigen::MatrixXd combined = Eigen::MatrixXd::Zero(g.n + 1, g.n + 1);
        combined.topLeftCorner(g.n, g.n) = g.adj;
        combined.topRightCorner(g.n, 1) = b;
        combined.bottomLeftCorner(1, g.n) = a.transpose();
        const Eigen::MatrixXd sym = 0.5 * (combined + combined.transpose());
        const Eigen::VectorXd t_full = bandlimited_signal(sym, spec.bandwidth, rng);

        const double sigma2 = std::isinf(spec.snr_db)
                                  ? 0.0
                                  : t_full.squaredNorm() / ((g.n + 1) * snr_linear);
        const double stddev = std::sqrt(sigma2);
        Eigen::VectorXd x_full = t_full;
        if (stddev > 0.0)
            for (Eigen::Index i = 0; i < x_full.size(); ++i) x_full(i) += stddev * normal(rng);

        TrainingSample sample;
        sample.signal = ExpandedSignal{x_full.head(g.n), x_full(g.n)};
        sample.target = NoisyTarget{t_full.head(g.n), t_full(g.n), sigma2};
        sample.mask = SampleMask::all(g.n + 1);
        sample.b = b;
        sample.a = a;
        inst.samples.push_back(std::move(sample));
    }
    return inst;
}

SSLInstance make_ssl_instance(const Graph& g, const AttachmentModel& model_in,
                              const AttachmentModel& model_out, const SSLSpec& spec, Rng& rng) {
    if (spec.realizations < 1) throw InputError("make_ssl_instance: need realizations >= 1");
    if (spec.observed_fraction <= 0.0 || spec.observed_fraction > 1.0)
        throw InputError("make_ssl_instance: observed_fraction out of (0, 1]");
    if (spec.labeled_fraction_incoming < 0.0 || spec.labeled_fraction_incoming > 1.0)
        throw InputError("make_ssl_instance: labeled_fraction_incoming out of [0, 1]");
    model_in.validate();
    model_out.validate();

    SSLInstance inst;
    inst.graph = g;
    inst.labels = spectral_bipartition(g);
    inst.labeled_fraction_incoming = spec.labeled_fraction_incoming;

    std::vector<int> nodes(static_cast<std::size_t>(g.n));
    std::iota(nodes.begin(), nodes.end(), 0);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const int observed =
        std::max(1, static_cast<int>(std::lround(spec.observed_fraction * g.n)));
    inst.observed_mask = Eigen::VectorXd::Zero(g.n);
    for (int i = 0; i < observed; ++i) inst.observed_mask(nodes[static_cast<std::size_t>(i)]) = 1.0;

    // Exactly this many incoming samples carry their label, assigned to a
    // random subset of the realizations.
    const int labeled_count = static_cast<int>(
        std::lround(spec.labeled_fraction_incoming * spec.realizations));
    std::vector<int> order(static_cast<std::size_t>(spec.realizations));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> labeled(static_cast<std::size_t>(spec.realizations), 0);
    for (int i = 0; i < labeled_count; ++i) labeled[static_cast<std::size_t>(order[i])] = 1;

    const Eigen::VectorXd observed_labels = inst.labels.cwiseProduct(inst.observed_mask);
    inst.samples.reserve(static_cast<std::size_t>(spec.realizations));
    for (int r = 0; r < spec.realizations; ++r) {
        const Eigen::VectorXd b = sample_attachment(model_in, rng);
        const Eigen::VectorXd a = sample_attachment(model_out, rng);
        // Majority class over the realized edges in either direction; a tie
        // falls to +1.
        double score = 0.0;
        for (int l = 0; l < g.n; ++l) {
            if (b(l) > 0.0) score += inst.labels(l);
            if (a(l) > 0.0) score += inst.labels(l);
        }
        const double truth = score < 0.0 ? -1.0 : 1.0;
        const bool has_label = labeled[static_cast<std::size_t>(r)] != 0;

        TrainingSample sample;
        sample.signal = ExpandedSignal{observed_labels, has_label ? truth : 0.0};
        // The regression target coincides with the input: labelled entries
        // reconstruct themselves, the smoothness penalty spreads the rest.
        // Ground truth for evaluation lives in `labels`, not here.
        sample.target = NoisyTarget{observed_labels, has_label ? truth : 0.0, 0.0};
        Eigen::VectorXd d(g.n + 1);
        d.head(g.n) = inst.observed_mask;
        d(g.n) = has_label ? 1.0 : 0.0;
        sample.mask = SampleMask{std::move(d)};
        sample.b = b;
        sample.a = a;
        inst.samples.push_back(std::move(sample));
    }
    return inst;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw InputError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

ExternalData load_external(const std::string& edge_list_path, const std::string& signal_csv_path) {
    std::ifstream edges(edge_list_path);
    if (!edges) throw InputError("load_external: cannot open " + edge_list_path);
    struct EdgeRec {
        int src, dst;
        double weight;
    };
    std::vector<EdgeRec> records;
    int max_node = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(edges, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        long src = 0, dst = 0;
        double weight = 0.0;
        if (!(ss >> src)) {
            if (ss.eof()) continue;  // blank or comment-only line
            parse_fail(edge_list_path, lineno, "malformed source node");
        }
        if (!(ss >> dst)) parse_fail(edge_list_path, lineno, "malformed destination node");
        if (!(ss >> weight)) parse_fail(edge_list_path, lineno, "malformed weight");
        std::string rest;
        if (ss >> rest) parse_fail(edge_list_path, lineno, "trailing token '" + rest + "'");
        if (src < 0 || dst < 0) parse_fail(edge_list_path, lineno, "negative node id");
        if (!std::isfinite(weight) || weight < 0.0)
            parse_fail(edge_list_path, lineno, "weight must be finite and non-negative");
        records.push_back({static_cast<int>(src), static_cast<int>(dst), weight});
        max_node = std::max(max_node, static_cast<int>(std::max(src, dst)));
    }
    if (records.empty()) throw InputError("load_external: no edges in " + edge_list_path);
    const int n = max_node + 1;
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    // `src dst w` carries signal src -> dst, i.e. row dst, column src.
    for (const EdgeRec& e : records) adj(e.dst, e.src) = e.weight;

    std::ifstream csv(signal_csv_path);
    if (!csv) throw InputError("load_external: cannot open " + signal_csv_path);
    lineno = 0;
    if (!std::getline(csv, line)) throw InputError("load_external: empty " + signal_csv_path);
    ++lineno;
    std::vector<std::string> header;
    {
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2) parse_fail(signal_csv_path, lineno, "header needs node id + samples");
    ExternalData out;
    out.sample_ids.assign(header.begin() + 1, header.end());
    const int cols = static_cast<int>(out.sample_ids.size());
    out.signals = Eigen::MatrixXd::Zero(n, cols);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    while (std::getline(csv, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) parse_fail(signal_csv_path, lineno, "missing node id");
        int node = 0;
        try {
            std::size_t pos = 0;
            node = std::stoi(cell, &pos);
            if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            parse_fail(signal_csv_path, lineno, "malformed node id '" + cell + "'");
        }
        if (node < 0 || node >= n)
            parse_fail(signal_csv_path, lineno, "node id outside the graph's node range");
        if (seen[static_cast<std::size_t>(node)])
            parse_fail(signal_csv_path, lineno, "duplicate row for node " + std::to_string(node));
        seen[static_cast<std::size_t>(node)] = 1;
        for (int c = 0; c < cols; ++c) {
            if (!std::getline(ss, cell, ','))
                parse_fail(signal_csv_path, lineno, "expected " + std::to_string(cols) + " values");
            try {
                std::size_t pos = 0;
                out.signals(node, c) = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                parse_fail(signal_csv_path, lineno, "malformed value '" + cell + "'");
            }
        }
        if (std::getline(ss, cell, ','))
            parse_fail(signal_csv_path, lineno, "too many values on row");
    }
    for (int i = 0; i < n; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw InputError(signal_csv_path + ": missing row for node " + std::to_string(i));
    out.graph = Graph(n, std::move(adj));
    return out;
}

void save_edge_list(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("save_edge_list: cannot open " + path);
    out << "# src dst weight\n" << std::setprecision(17);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (g.adj(i, j) != 0.0) out << j << ' ' << i << ' ' << g.adj(i, j) << '\n';
    if (!out) throw InputError("save_edge_list: write failed for " + path);
}

void save_signal_csv(const Eigen::MatrixXd& signals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("save_signal_csv: cannot open " + path);
    out << "node";
    for (Eigen::Index c = 0; c < signals.cols(); ++c) out << ",s" << c;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < signals.rows(); ++i) {
        out << i;
        for (Eigen::Index c = 0; c < signals.cols(); ++c) out << ',' << signals(i, c);
        out << '\n';
    }
    if (!out) throw InputError("save_signal_csv: write failed for " + path);
}

}  // namespace egf
