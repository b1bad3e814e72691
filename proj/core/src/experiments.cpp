#include "egf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "egf/baselines.hpp"
#include "egf/oracle.hpp"

namespace egf {

namespace {

std::string trim(const std::string& s) {
    const std::size_t lo = s.find_first_not_of(" \t\r\n");
    if (lo == std::string::npos) return "";
    const std::size_t hi = s.find_last_not_of(" \t\r\n");
    return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "inf" || v == "+inf" || v == "infinity")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': malformed number '" + v + "'");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        std::size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': malformed integer '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': malformed unsigned integer '" + v + "'");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(parse_double(key, cell));
    if (out.empty()) throw InputError("config key '" + key + "': empty list");
    return out;
}

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string fmt_list(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(vs[i]);
    }
    return out;
}

/// Compact form for setting labels: "5", "0.5", "inf".
std::string fmt_setting_value(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd summarize(const std::vector<double>& values) {
    if (values.empty()) throw InputError("summarize: no values");
    MeanStd out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

}  // namespace

double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
    if (y.size() != t.size()) throw InputError("nmse: shape mismatch");
    const double denom = t.squaredNorm();
    if (denom == 0.0) throw InputError("nmse: zero-norm reference signal");
    return (y - t).squaredNorm() / denom;
}

double ssl_error(const Eigen::VectorXd& y, const Eigen::VectorXd& labels,
                 const Eigen::VectorXd& eval_mask) {
    if (y.size() != labels.size() || y.size() != eval_mask.size())
        throw InputError("ssl_error: shape mismatch");
    long evaluated = 0, wrong = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (eval_mask(i) == 0.0) continue;
        ++evaluated;
        const double predicted = y(i) < 0.0 ? -1.0 : 1.0;
        if (predicted != labels(i)) ++wrong;
    }
    if (evaluated == 0) throw InputError("ssl_error: empty evaluation mask");
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(evaluated);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "task") {
        if (v == "denoise") task = Task::denoise;
        else if (v == "ssl") task = Task::ssl;
        else throw InputError("config key 'task': expected denoise or ssl, got '" + v + "'");
    } else if (key == "graph") {
        if (v == "ba") graph = GraphKind::ba;
        else if (v == "sensor") graph = GraphKind::sensor;
        else if (v == "external") graph = GraphKind::external;
        else throw InputError("config key 'graph': expected ba, sensor or external");
    } else if (key == "attachment") {
        if (v == "uniform") attachment = AttachmentKind::uniform;
        else if (v == "preferential") attachment = AttachmentKind::preferential;
        else throw InputError("config key 'attachment': expected uniform or preferential");
    } else if (key == "n") n = static_cast<int>(parse_long(key, v));
    else if (key == "ba_m") ba_m = static_cast<int>(parse_long(key, v));
    else if (key == "knn_k") knn_k = static_cast<int>(parse_long(key, v));
    else if (key == "edge_list") edge_list = v;
    else if (key == "signal_csv") signal_csv = v;
    else if (key == "order_in") order_in = static_cast<int>(parse_long(key, v));
    else if (key == "order_out") order_out = static_cast<int>(parse_long(key, v));
    else if (key == "snr_db") snr_db = parse_double_list(key, v);
    else if (key == "label_fractions") label_fractions = parse_double_list(key, v);
    else if (key == "realizations") realizations = static_cast<int>(parse_long(key, v));
    else if (key == "test_realizations") test_realizations = static_cast<int>(parse_long(key, v));
    else if (key == "split") split = parse_double(key, v);
    else if (key == "folds") folds = static_cast<int>(parse_long(key, v));
    else if (key == "moment_samples") moment_samples = parse_long(key, v);
    else if (key == "validate_draws") validate_draws = parse_long(key, v);
    else if (key == "bandwidth") bandwidth = static_cast<int>(parse_long(key, v));
    else if (key == "observed_fraction") observed_fraction = parse_double(key, v);
    else if (key == "seed") seed = parse_u64(key, v);
    else throw InputError("unknown config key '" + key + "'");
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected key = value");
        cfg.set(trim(stripped.substr(0, eq)), stripped.substr(eq + 1));
    }
    return cfg;
}

void ExperimentConfig::apply_full_scale() {
    if (task == Task::denoise) {
        n = 100;
        realizations = 1000;
    } else {
        n = 200;
        realizations = 500;
    }
}

void ExperimentConfig::validate() const {
    if (n < 2) throw InputError("config: n must be >= 2");
    if (graph == GraphKind::ba && (ba_m < 1 || ba_m >= n))
        throw InputError("config: need 1 <= ba_m < n");
    if (graph == GraphKind::sensor && (knn_k < 1 || knn_k >= n))
        throw InputError("config: need 1 <= knn_k < n");
    if (graph == GraphKind::external && edge_list.empty())
        throw InputError("config: external graph needs edge_list");
    if (order_in < 0 || order_out < 0) throw InputError("config: orders must be >= 0");
    if (!(split > 0.0 && split < 1.0)) throw InputError("config: split must be in (0, 1)");
    if (folds < 2) throw InputError("config: folds must be >= 2");
    if (realizations < 2 * folds) throw InputError("config: too few realizations for the folds");
    if (test_realizations < 1) throw InputError("config: test_realizations must be >= 1");
    if (moment_samples < 2) throw InputError("config: moment_samples must be >= 2");
    if (validate_draws < 100) throw InputError("config: validate_draws must be >= 100");
    if (bandwidth < 1 || bandwidth > n) throw InputError("config: bandwidth out of range");
    if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
        throw InputError("config: observed_fraction out of (0, 1]");
    for (double s : snr_db)
        if (std::isnan(s)) throw InputError("config: snr_db must not be NaN");
    for (double f : label_fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw InputError("config: label_fractions out of [0, 1]");
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream ss;
    ss << "attachment=" << (attachment == AttachmentKind::uniform ? "uniform" : "preferential")
       << '\n'
       << "ba_m=" << ba_m << '\n'
       << "bandwidth=" << bandwidth << '\n'
       << "edge_list=" << edge_list << '\n'
       << "folds=" << folds << '\n'
       << "graph="
       << (graph == GraphKind::ba ? "ba" : graph == GraphKind::sensor ? "sensor" : "external")
       << '\n'
       << "knn_k=" << knn_k << '\n'
       << "label_fractions=" << fmt_list(label_fractions) << '\n'
       << "moment_samples=" << moment_samples << '\n'
       << "n=" << n << '\n'
       << "observed_fraction=" << fmt_double(observed_fraction) << '\n'
       << "order_in=" << order_in << '\n'
       << "order_out=" << order_out << '\n'
       << "realizations=" << realizations << '\n'
       << "seed=" << seed << '\n'
       << "signal_csv=" << signal_csv << '\n'
       << "snr_db=" << fmt_list(snr_db) << '\n'
       << "split=" << fmt_double(split) << '\n'
       << "task=" << (task == Task::denoise ? "denoise" : "ssl") << '\n'
       << "test_realizations=" << test_realizations << '\n'
       << "validate_draws=" << validate_draws << '\n';
    return ss.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

bool ValidationReport::all_pass() const {
    for (const ValidationCheck& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

Graph build_graph(const ExperimentConfig& cfg, Rng& rng) {
    switch (cfg.graph) {
        case GraphKind::ba:
            return generate_ba(cfg.n, cfg.ba_m, rng);
        case GraphKind::sensor:
            return sensor_graph(cfg.n, cfg.knn_k, rng);
        case GraphKind::external:
            return load_external(cfg.edge_list, cfg.signal_csv).graph;
    }
    throw InputError("build_graph: unknown graph kind");
}

AttachmentModel make_attachment_model(const ExperimentConfig& cfg, const Graph& g) {
    const int budget = std::max(1, median_degree(g));
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(g.n, median_edge_weight(g));
    return cfg.attachment == AttachmentKind::uniform ? uniform_model(g.n, budget, w)
                                                     : preferential_model(g, budget, w);
}

Eigen::MatrixXd dense_krylov(const Eigen::MatrixXd& adj, const Eigen::VectorXd& x, int order) {
    Eigen::MatrixXd out(x.size(), order + 1);
    out.col(0) = x;
    for (int k = 1; k <= order; ++k) out.col(k) = adj * out.col(k - 1);
    return out;
}

Eigen::VectorXd bank_predict(const Graph& g, const Eigen::VectorXd& b, const Eigen::VectorXd& a,
                             const ExpandedSignal& s, const FilterBank& bank) {
    return apply_incoming(g, b, s, bank.h_in) + apply_outgoing(g, a, s, bank.h_out);
}

Eigen::VectorXd single_predict(const Graph& g, const Eigen::VectorXd& b, const Eigen::VectorXd& a,
                               const Eigen::VectorXd& x_full, const Eigen::VectorXd& h) {
    return apply_single_filter(combined_expanded(g, b, a), x_full, h);
}

/// Per-sample masked normal equations for the single-filter ridge methods,
/// cached once so cross-validation folds re-average.
struct RidgeCache {
    std::vector<Eigen::MatrixXd> grams;
    std::vector<Eigen::VectorXd> rhs;
    int order = 0;
};

RidgeCache build_ridge_cache(const TrainingSet& ts, int order, bool on_existing_graph) {
    RidgeCache cache;
    cache.order = order;
    const Graph& g = *ts.graph;
    for (const TrainingSample& s : ts.samples) {
        Eigen::MatrixXd design;
        Eigen::VectorXd d, target;
        if (on_existing_graph) {
            design = krylov_matrix(g, s.signal.x, order);
            d = s.mask.existing();
            target = s.target.t;
        } else {
            design = dense_krylov(combined_expanded(g, s.b, s.a), s.signal.full(), order);
            d = s.mask.d;
            target = s.target.full();
        }
        const Eigen::MatrixXd masked = d.asDiagonal() * design;
        cache.grams.push_back(design.transpose() * masked);
        cache.rhs.push_back(masked.transpose() * target);
    }
    return cache;
}

Eigen::VectorXd ridge_fit(const RidgeCache& cache, const std::vector<int>& indices, double gamma) {
    if (indices.empty()) throw InputError("ridge_fit: empty index set");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(cache.order + 1, cache.order + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cache.order + 1);
    for (int idx : indices) {
        gram += cache.grams[static_cast<std::size_t>(idx)];
        rhs += cache.rhs[static_cast<std::size_t>(idx)];
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    gram *= inv;
    rhs *= inv;
    gram.diagonal().array() += gamma;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ridge_fit: normal equations not positive definite");
    const Eigen::VectorXd h = llt.solve(rhs);
    if (!h.allFinite()) throw NumericalError("ridge_fit: non-finite solution");
    return h;
}

using RidgeMetric = std::function<double(const TrainingSample&, const Eigen::VectorXd&)>;

/// gamma-only k-fold cross-validation for the single-filter methods; ties
/// break toward the larger gamma, mirroring the filter-bank harness.
double ridge_cross_validate(const TrainingSet& ts, const RidgeCache& cache,
                            const std::vector<double>& gammas, int folds, Rng& rng,
                            const RidgeMetric& metric, std::vector<CvTraceRow>* trace) {
    if (ts.size() < folds) throw InputError("ridge_cross_validate: fewer samples than folds");
    std::vector<int> order(static_cast<std::size_t>(ts.size()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> fold_train(static_cast<std::size_t>(folds)),
        fold_val(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        const int lo = static_cast<int>(static_cast<long>(f) * ts.size() / folds);
        const int hi = static_cast<int>(static_cast<long>(f + 1) * ts.size() / folds);
        for (int i = 0; i < ts.size(); ++i)
            ((i >= lo && i < hi) ? fold_val[static_cast<std::size_t>(f)]
                                 : fold_train[static_cast<std::size_t>(f)])
                .push_back(order[static_cast<std::size_t>(i)]);
    }
    double best_gamma = gammas.front();
    double best_metric = std::numeric_limits<double>::infinity();
    bool have_best = false;
    for (double gamma : gammas) {
        double sum = 0.0;
        long count = 0;
        for (int f = 0; f < folds; ++f) {
            const Eigen::VectorXd h = ridge_fit(cache, fold_train[static_cast<std::size_t>(f)], gamma);
            for (int idx : fold_val[static_cast<std::size_t>(f)]) {
                sum += metric(ts.samples[static_cast<std::size_t>(idx)], h);
                ++count;
            }
        }
        const double mean = sum / static_cast<double>(count);
        if (trace) trace->push_back({RegularizerWeights{gamma, 0.0, 0.0}, mean});
        const bool improves = !have_best || mean < best_metric - 1e-15 ||
                              (mean <= best_metric + 1e-15 && gamma > best_gamma);
        if (improves) {
            best_gamma = gamma;
            best_metric = mean;
            have_best = true;
        }
    }
    return best_gamma;
}

std::vector<int> all_indices(int count) {
    std::vector<int> out(static_cast<std::size_t>(count));
    std::iota(out.begin(), out.end(), 0);
    return out;
}

struct OutputSink {
    std::vector<ResultRow> rows;
    std::vector<std::string> trace_lines;
    std::vector<std::string> filter_lines;
    std::vector<std::string> notes;

    void add_trace(const std::string& setting, const std::string& method,
                   const std::vector<CvTraceRow>& trace) {
        for (const CvTraceRow& row : trace) {
            std::ostringstream ss;
            ss.precision(17);
            ss << setting << ',' << method << ',' << row.reg.gamma << ',' << row.reg.alpha << ','
               << row.reg.beta << ',' << row.mean_metric;
            trace_lines.push_back(ss.str());
        }
    }

    void add_filter(const std::string& setting, const std::string& method,
                    const std::string& name, const Eigen::VectorXd& h) {
        std::ostringstream ss;
        ss.precision(17);
        ss << setting << ' ' << method << ' ' << name << ':';
        for (Eigen::Index i = 0; i < h.size(); ++i) ss << ' ' << h(i);
        filter_lines.push_back(ss.str());
    }
};

void write_outputs(const ExperimentConfig& cfg, const std::string& out_dir,
                   const OutputSink& sink) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "results.csv");
        if (!out) throw InputError("write_outputs: cannot open results.csv");
        out << "setting,method,metric,mean,std,config_hash,seed\n";
        out.precision(17);
        for (const ResultRow& r : sink.rows)
            out << r.setting << ',' << r.method << ',' << r.metric << ',' << r.mean << ','
                << r.stddev << ',' << r.config_hash << ',' << r.seed << '\n';
    }
    {
        std::ofstream out(fs::path(out_dir) / "cv_trace.csv");
        if (!out) throw InputError("write_outputs: cannot open cv_trace.csv");
        out << "setting,method,gamma,alpha,beta,mean_metric\n";
        for (const std::string& line : sink.trace_lines) out << line << '\n';
    }
    {
        std::ofstream out(fs::path(out_dir) / "filters.txt");
        if (!out) throw InputError("write_outputs: cannot open filters.txt");
        for (const std::string& line : sink.filter_lines) out << line << '\n';
    }
    {
        std::ofstream out(fs::path(out_dir) / "manifest.txt");
        if (!out) throw InputError("write_outputs: cannot open manifest.txt");
        out << cfg.canonical();
        out << "config_hash=" << cfg.hash() << '\n';
        for (const std::string& note : sink.notes) out << "note: " << note << '\n';
    }
}

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

SplitIndices split_indices(int count, double ratio, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int train_count =
        std::min(count - 1, std::max(1, static_cast<int>(std::lround(ratio * count))));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + train_count);
    out.test.assign(order.begin() + train_count, order.end());
    return out;
}

}  // namespace

std::vector<ResultRow> run_denoising(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (cfg.task != Task::denoise) throw InputError("run_denoising: config task is not denoise");

    Rng graph_rng(mix_seed(cfg.seed, 1));
    const Graph g = build_graph(cfg, graph_rng);
    const AttachmentModel model = make_attachment_model(cfg, g);

    Rng moment_rng(mix_seed(cfg.seed, 2));
    const MomentStatistics stats_in = estimate_moments(model, cfg.moment_samples, moment_rng);
    const MomentStatistics stats_out = estimate_moments(model, cfg.moment_samples, moment_rng);

    OutputSink sink;
    sink.notes.push_back("test evaluation resamples both attachments and noise per evaluation case");
    sink.notes.push_back("single-filter methods use order order_in on the combined expansion");
    const std::uint64_t cfg_hash = cfg.hash();

    const CvGrid grid = CvGrid::defaults(Task::denoise);

    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        const std::string setting = "snr=" + fmt_setting_value(snr);

        Rng inst_rng(mix_seed(cfg.seed, 100 + si));
        const DenoisingInstance inst = make_denoising_instance(
            g, model, model, DenoisingSpec{cfg.realizations, snr, cfg.bandwidth}, inst_rng);

        Rng split_rng(mix_seed(cfg.seed, 200 + si));
        const SplitIndices split = split_indices(cfg.realizations, cfg.split, split_rng);
        TrainingSet train{&g, {}};
        for (int idx : split.train) train.samples.push_back(inst.samples[static_cast<std::size_t>(idx)]);

        // Shared test realizations: every method sees the same noise redraws.
        // The attachments stay the test sample's own — its target was drawn
        // from that expansion, so swapping the edges would sever the signal
        // from the graph.
        struct EvalCase {
            Eigen::VectorXd b, a, x_full;
        };
        Rng eval_rng(mix_seed(cfg.seed, 300 + si));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<std::vector<EvalCase>> eval_cases;
        for (int idx : split.test) {
            const TrainingSample& s = inst.samples[static_cast<std::size_t>(idx)];
            const Eigen::VectorXd t_full = s.target.full();
            const double stddev = std::sqrt(s.target.sigma2);
            std::vector<EvalCase> cases;
            for (int r = 0; r < cfg.test_realizations; ++r) {
                EvalCase c;
                c.b = sample_attachment(model, eval_rng);
                c.a = sample_attachment(model, eval_rng);
                c.x_full = t_full;
                for (Eigen::Index i = 0; i < c.x_full.size(); ++i)
                    c.x_full(i) += stddev * normal(eval_rng);
                cases.push_back(std::move(c));
            }
            eval_cases.push_back(std::move(cases));
        }

        using Predictor = std::function<Eigen::VectorXd(const EvalCase&)>;
        auto evaluate = [&](const std::string& method, const Predictor& predict) {
            std::vector<double> nmse_vals, plus_sq_errors, plus_refs;
            double plus_energy = 0.0;
            for (std::size_t ti = 0; ti < split.test.size(); ++ti) {
                const TrainingSample& s = inst.samples[static_cast<std::size_t>(split.test[ti])];
                const Eigen::VectorXd t_full = s.target.full();
                for (const EvalCase& c : eval_cases[ti]) {
                    const Eigen::VectorXd y = predict(c);
                    nmse_vals.push_back(nmse(y, t_full));
                    const double diff = y(g.n) - s.target.t_plus;
                    plus_sq_errors.push_back(diff * diff);
                    plus_refs.push_back(s.target.t_plus * s.target.t_plus);
                    plus_energy += s.target.t_plus * s.target.t_plus;
                }
            }
            // Incoming-node error, normalized per case by that case's own
            // t_plus^2. The denominator is floored at 1% of the average
            // incoming-signal energy: the raw per-case ratio has no finite
            // mean because t_plus can land arbitrarily close to zero.
            plus_energy /= static_cast<double>(plus_sq_errors.size());
            if (plus_energy == 0.0) throw InputError("evaluate: zero incoming-signal energy");
            const double floor = 0.01 * plus_energy;
            for (std::size_t i = 0; i < plus_sq_errors.size(); ++i)
                plus_sq_errors[i] /= std::max(plus_refs[i], floor);
            const MeanStd m1 = summarize(nmse_vals);
            const MeanStd m2 = summarize(plus_sq_errors);
            sink.rows.push_back({setting, method, "nmse", m1.mean, m1.stddev, cfg_hash, cfg.seed});
            sink.rows.push_back(
                {setting, method, "nmse_plus", m2.mean, m2.stddev, cfg_hash, cfg.seed});
        };

        const FoldMetric bank_metric = [&](const TrainingSample& s, const FilterBank& bank) {
            return nmse(bank_predict(g, s.b, s.a, s.signal, bank), s.target.full());
        };

        auto run_bank_method = [&](const std::string& method, const SampleQuadratics& cache,
                                   std::uint64_t cv_stream) {
            Rng cv_rng(mix_seed(cfg.seed, cv_stream + si));
            std::vector<CvTraceRow> trace;
            const RegularizerWeights best = cross_validate(train, cache, grid, cfg.folds,
                                                           Task::denoise, cv_rng, bank_metric,
                                                           &trace);
            sink.add_trace(setting, method, trace);
            const auto [qm, psi] = cache.average(all_indices(train.size()));
            (void)psi;
            const FilterBank bank = solve_denoising(qm, best);
            sink.add_filter(setting, method, "h_in", bank.h_in);
            sink.add_filter(setting, method, "h_out", bank.h_out);
            evaluate(method, [&, bank](const EvalCase& c) {
                const ExpandedSignal sig{c.x_full.head(g.n), c.x_full(g.n)};
                return bank_predict(g, c.b, c.a, sig, bank);
            });
        };

        // proposed: stochastic-attachment moments estimated once.
        try {
            const SampleQuadratics cache = build_sample_quadratics(
                train, stats_in, stats_out, cfg.order_in, cfg.order_out, Task::denoise);
            run_bank_method("prop", cache, 400);
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " prop: " + e.what());
        }

        // kc1: one ridge filter on the realized combined expansions.
        try {
            const RidgeCache cache = build_ridge_cache(train, cfg.order_in, false);
            Rng cv_rng(mix_seed(cfg.seed, 500 + si));
            std::vector<CvTraceRow> trace;
            const RidgeMetric metric = [&](const TrainingSample& s, const Eigen::VectorXd& h) {
                return nmse(single_predict(g, s.b, s.a, s.signal.full(), h), s.target.full());
            };
            const double gamma =
                ridge_cross_validate(train, cache, grid.gammas, cfg.folds, cv_rng, metric, &trace);
            sink.add_trace(setting, "kc1", trace);
            const Eigen::VectorXd h = ridge_fit(cache, all_indices(train.size()), gamma);
            sink.add_filter(setting, "kc1", "h", h);
            evaluate("kc1", [&, h](const EvalCase& c) {
                return single_predict(g, c.b, c.a, c.x_full, h);
            });
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " kc1: " + e.what());
        }

        // kc2: the filter-bank pipeline fed each sample's realized attachments
        // as deterministic moments.
        try {
            SampleQuadratics cache;
            cache.order_in = cfg.order_in;
            cache.order_out = cfg.order_out;
            for (const TrainingSample& s : train.samples)
                cache.quadratics.push_back(build_quadratic_model(
                    g, s.target, s.mask, deterministic_moments(s.b), deterministic_moments(s.a),
                    cfg.order_in, cfg.order_out));
            run_bank_method("kc2", cache, 600);
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " kc2: " + e.what());
        }

        // it: ridge filter on the existing graph, transferred unchanged.
        try {
            const RidgeCache cache = build_ridge_cache(train, cfg.order_in, true);
            Rng cv_rng(mix_seed(cfg.seed, 700 + si));
            std::vector<CvTraceRow> trace;
            // Transference trains blind to the expansion: tune on the
            // existing graph only.
            const RidgeMetric metric = [&](const TrainingSample& s, const Eigen::VectorXd& h) {
                return nmse(krylov_matrix(g, s.signal.x, cfg.order_in) * h, s.target.t);
            };
            const double gamma =
                ridge_cross_validate(train, cache, grid.gammas, cfg.folds, cv_rng, metric, &trace);
            sink.add_trace(setting, "it", trace);
            const Eigen::VectorXd h = ridge_fit(cache, all_indices(train.size()), gamma);
            sink.add_filter(setting, "it", "h", h);
            evaluate("it", [&, h](const EvalCase& c) {
                return single_predict(g, c.b, c.a, c.x_full, h);
            });
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " it: " + e.what());
        }
    }

    write_outputs(cfg, out_dir, sink);
    return sink.rows;
}

std::vector<ResultRow> run_ssl(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (cfg.task != Task::ssl) throw InputError("run_ssl: config task is not ssl");

    Rng graph_rng(mix_seed(cfg.seed, 1));
    const Graph g = build_graph(cfg, graph_rng);
    const AttachmentModel model = make_attachment_model(cfg, g);

    Rng moment_rng(mix_seed(cfg.seed, 2));
    const MomentStatistics stats_in = estimate_moments(model, cfg.moment_samples, moment_rng);
    const MomentStatistics stats_out = estimate_moments(model, cfg.moment_samples, moment_rng);

    OutputSink sink;
    sink.notes.push_back("incoming ground-truth label ties resolve to +1");
    sink.notes.push_back("errors measured on unlabeled existing nodes only");
    const std::uint64_t cfg_hash = cfg.hash();

    const CvGrid grid = CvGrid::defaults(Task::ssl);

    for (std::size_t fi = 0; fi < cfg.label_fractions.size(); ++fi) {
        const double fraction = cfg.label_fractions[fi];
        const std::string setting = "frac=" + fmt_setting_value(fraction);

        Rng inst_rng(mix_seed(cfg.seed, 100 + fi));
        const SSLInstance inst = make_ssl_instance(
            g, model, model, SSLSpec{cfg.realizations, cfg.observed_fraction, fraction}, inst_rng);
        const Eigen::VectorXd unlabeled =
            Eigen::VectorXd::Ones(g.n) - inst.observed_mask;

        Rng split_rng(mix_seed(cfg.seed, 200 + fi));
        const SplitIndices split = split_indices(cfg.realizations, cfg.split, split_rng);
        TrainingSet train{&g, {}};
        for (int idx : split.train) train.samples.push_back(inst.samples[static_cast<std::size_t>(idx)]);

        auto sample_error = [&](const Eigen::VectorXd& y_full) {
            return ssl_error(y_full.head(g.n), inst.labels, unlabeled);
        };

        using Predictor = std::function<Eigen::VectorXd(const TrainingSample&)>;
        auto evaluate = [&](const std::string& method, const Predictor& predict) {
            std::vector<double> errors;
            for (int idx : split.test) {
                const TrainingSample& s = inst.samples[static_cast<std::size_t>(idx)];
                errors.push_back(sample_error(predict(s)));
            }
            const MeanStd m = summarize(errors);
            sink.rows.push_back(
                {setting, method, "ssl_error", m.mean, m.stddev, cfg_hash, cfg.seed});
        };

        const FoldMetric bank_metric = [&](const TrainingSample& s, const FilterBank& bank) {
            return sample_error(bank_predict(g, s.b, s.a, s.signal, bank));
        };

        auto run_bank_method = [&](const std::string& method, const SampleQuadratics& cache,
                                   std::uint64_t cv_stream) {
            Rng cv_rng(mix_seed(cfg.seed, cv_stream + fi));
            std::vector<CvTraceRow> trace;
            const RegularizerWeights best = cross_validate(train, cache, grid, cfg.folds,
                                                           Task::ssl, cv_rng, bank_metric, &trace);
            sink.add_trace(setting, method, trace);
            const auto [qm, psi] = cache.average(all_indices(train.size()));
            const FilterBank bank = solve_ssl(qm, psi, best);
            sink.add_filter(setting, method, "h_in", bank.h_in);
            sink.add_filter(setting, method, "h_out", bank.h_out);
            evaluate(method, [&, bank](const TrainingSample& s) {
                return bank_predict(g, s.b, s.a, s.signal, bank);
            });
        };

        try {
            // Samples share the graph, labels and mask; the closed forms only
            // depend on (t_plus, d_plus), so build each distinct combination
            // once and reuse it.
            SampleQuadratics cache;
            cache.order_in = cfg.order_in;
            cache.order_out = cfg.order_out;
            std::map<std::pair<double, double>, std::pair<QuadraticModel, DirichletPair>> memo;
            for (const TrainingSample& s : train.samples) {
                const std::pair<double, double> key{s.target.t_plus, s.mask.d_plus()};
                auto it = memo.find(key);
                if (it == memo.end()) {
                    QuadraticModel qm =
                        build_quadratic_model(g, s.target, s.mask, stats_in, stats_out,
                                              cfg.order_in, cfg.order_out);
                    DirichletPair psi = build_dirichlet_pair(g, s.target, stats_in, stats_out,
                                                             cfg.order_in, cfg.order_out);
                    it = memo.emplace(key, std::make_pair(std::move(qm), std::move(psi))).first;
                }
                cache.quadratics.push_back(it->second.first);
                cache.dirichlets.push_back(it->second.second);
            }
            run_bank_method("prop", cache, 400);
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " prop: " + e.what());
        }

        try {
            const RidgeCache cache = build_ridge_cache(train, cfg.order_in, false);
            Rng cv_rng(mix_seed(cfg.seed, 500 + fi));
            std::vector<CvTraceRow> trace;
            const RidgeMetric metric = [&](const TrainingSample& s, const Eigen::VectorXd& h) {
                return sample_error(single_predict(g, s.b, s.a, s.signal.full(), h));
            };
            const double gamma =
                ridge_cross_validate(train, cache, grid.gammas, cfg.folds, cv_rng, metric, &trace);
            sink.add_trace(setting, "kc1", trace);
            const Eigen::VectorXd h = ridge_fit(cache, all_indices(train.size()), gamma);
            sink.add_filter(setting, "kc1", "h", h);
            evaluate("kc1", [&, h](const TrainingSample& s) {
                return single_predict(g, s.b, s.a, s.signal.full(), h);
            });
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " kc1: " + e.what());
        }

        try {
            SampleQuadratics cache;
            cache.order_in = cfg.order_in;
            cache.order_out = cfg.order_out;
            for (const TrainingSample& s : train.samples) {
                const MomentStatistics det_in = deterministic_moments(s.b);
                const MomentStatistics det_out = deterministic_moments(s.a);
                cache.quadratics.push_back(build_quadratic_model(
                    g, s.target, s.mask, det_in, det_out, cfg.order_in, cfg.order_out));
                cache.dirichlets.push_back(build_dirichlet_pair(g, s.target, det_in, det_out,
                                                                cfg.order_in, cfg.order_out));
            }
            run_bank_method("kc2", cache, 600);
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " kc2: " + e.what());
        }

        try {
            const RidgeCache cache = build_ridge_cache(train, cfg.order_in, true);
            Rng cv_rng(mix_seed(cfg.seed, 700 + fi));
            std::vector<CvTraceRow> trace;
            // Transference tunes without the incoming node.
            const RidgeMetric metric = [&](const TrainingSample& s, const Eigen::VectorXd& h) {
                return sample_error(krylov_matrix(g, s.signal.x, cfg.order_in) * h);
            };
            const double gamma =
                ridge_cross_validate(train, cache, grid.gammas, cfg.folds, cv_rng, metric, &trace);
            sink.add_trace(setting, "it", trace);
            const Eigen::VectorXd h = ridge_fit(cache, all_indices(train.size()), gamma);
            sink.add_filter(setting, "it", "h", h);
            evaluate("it", [&, h](const TrainingSample& s) {
                return single_predict(g, s.b, s.a, s.signal.full(), h);
            });
        } catch (const std::exception& e) {
            sink.notes.push_back("failure " + setting + " it: " + e.what());
        }
    }

    write_outputs(cfg, out_dir, sink);
    return sink.rows;
}

void run_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    Rng rng(mix_seed(cfg.seed, 1));
    const Graph g = build_graph(cfg, rng);
    save_edge_list(g, (fs::path(out_dir) / "edge_list.txt").string());

    // Smooth signal batch over the (symmetrized if needed) existing graph.
    const Eigen::MatrixXd sym = 0.5 * (g.adj + g.adj.transpose());
    const int cols = std::min(cfg.realizations, 32);
    const int bandwidth = std::min(cfg.bandwidth, g.n);
    Eigen::MatrixXd signals(g.n, cols);
    Rng sig_rng(mix_seed(cfg.seed, 2));
    for (int c = 0; c < cols; ++c) signals.col(c) = bandlimited_signal(sym, bandwidth, sig_rng);
    save_signal_csv(signals, (fs::path(out_dir) / "signals.csv").string());

    std::ofstream manifest(fs::path(out_dir) / "manifest.txt");
    if (!manifest) throw InputError("run_gen_data: cannot open manifest.txt");
    manifest << cfg.canonical() << "config_hash=" << cfg.hash() << '\n'
             << "note: signals are unit-norm smooth mixes over the symmetrized adjacency\n";
}

ValidationReport run_validation(const ExperimentConfig& cfg, const std::string& corrupt) {
    cfg.validate();
    if (!corrupt.empty() && corrupt != "delta" && corrupt != "theta" && corrupt != "psi_in" &&
        corrupt != "psi_out")
        throw InputError("run_validation: unknown corruption target '" + corrupt + "'");
    ValidationReport report;
    auto push = [&](const std::string& name, double statistic, double threshold) {
        report.checks.push_back({name, statistic, threshold, statistic < threshold});
    };

    // Structured expansion powers against dense repeated multiplication.
    {
        Rng rng(mix_seed(cfg.seed, 9001));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 5;
            Eigen::MatrixXd adj(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) adj(i, j) = i == j ? 0.0 : unif(rng);
            const Graph g(n, adj);
            Eigen::VectorXd attach(n);
            for (int i = 0; i < n; ++i) attach(i) = unif(rng);
            for (Direction dir : {Direction::incoming, Direction::outgoing}) {
                const ExpandedAdjacency e = expand(g, dir, attach);
                const Eigen::MatrixXd dense = e.materialize();
                Eigen::MatrixXd ref = Eigen::MatrixXd::Identity(n + 1, n + 1);
                for (int k = 0; k <= 6; ++k) {
                    const Eigen::MatrixXd structured = expanded_power(e, k);
                    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
                    worst = std::max(worst, (structured - ref).cwiseAbs().maxCoeff() / scale);
                    ref = dense * ref;
                }
            }
        }
        push("expanded_power_vs_dense", worst, 1e-10);
    }

    // Small seeded instance shared by the remaining checks.
    Rng rng(mix_seed(cfg.seed, 9002));
    const Graph g = generate_ba(8, 2, rng);
    const int order_in = 2, order_out = 2;
    AttachmentModel model;
    model.scheme = AttachmentScheme::bernoulli;
    model.p = Eigen::VectorXd::Constant(g.n, 0.3);
    model.w = Eigen::VectorXd::LinSpaced(g.n, 0.4, 1.1);
    const MomentStatistics stats = analytic_bernoulli_moments(model);

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd t(g.n);
    for (int i = 0; i < g.n; ++i) t(i) = normal(rng);
    const NoisyTarget target{t, normal(rng), 0.1};
    Eigen::VectorXd d = Eigen::VectorXd::Ones(g.n + 1);
    d(3) = 0.0;  // exercise a nontrivial mask
    const SampleMask mask{d};

    // Noise-moment identity, exact noiseless path.
    {
        Eigen::MatrixXd c(g.n, g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) c(i, j) = normal(rng);
        const Eigen::MatrixXd closed = expected_gram(g, c, t, 0.0, order_in, order_out);
        const Eigen::MatrixXd lt = krylov_matrix(g, t, order_in);
        const Eigen::MatrixXd mt = krylov_matrix(g, t, order_out);
        const Eigen::MatrixXd exact = lt.transpose() * c * mt;
        const double rel = (closed - exact).cwiseAbs().maxCoeff() /
                           std::max(1.0, exact.cwiseAbs().maxCoeff());
        push("noise_moment_identity_exact", rel, 1e-12);

        // Noisy path against sampling.
        const long draws = std::min<long>(cfg.validate_draws, 100000);
        Rng mc_rng(mix_seed(cfg.seed, 9003));
        const OracleReport rep =
            mc_expected_gram(g, c, t, target.sigma2, order_in, order_out, draws, mc_rng);
        const Eigen::MatrixXd noisy =
            expected_gram(g, c, t, target.sigma2, order_in, order_out);
        push("noise_moment_identity_mc", rep.max_abs_z(noisy), 4.0);
    }

    // Expected quadratic model and smoothness matrices against sampling.
    {
        QuadraticModel qm =
            build_quadratic_model(g, target, mask, stats, stats, order_in, order_out);
        Eigen::MatrixXd psi_in = build_psi_in(g, target, stats, order_in);
        Eigen::MatrixXd psi_out = build_psi_out(g, target, stats, order_out);
        if (corrupt == "delta") qm.delta(0, 0) += 1.0;
        if (corrupt == "theta") qm.theta(0) += 1.0;
        if (corrupt == "psi_in") psi_in(0, 0) += 1.0;
        if (corrupt == "psi_out") psi_out(0, 0) += 1.0;

        Rng mc_rng(mix_seed(cfg.seed, 9004));
        const MomentMatrixReports reps = mc_moment_matrices(
            g, target, mask, model, model, order_in, order_out, cfg.validate_draws, mc_rng);
        push("delta_vs_mc", reps.delta.max_abs_z(qm.delta), 4.0);
        push("theta_vs_mc", reps.theta.max_abs_z(qm.theta), 4.0);
        push("psi_in_vs_mc", reps.psi_in.max_abs_z(psi_in), 4.0);
        push("psi_out_vs_mc", reps.psi_out.max_abs_z(psi_out), 4.0);
    }

    return report;
}

}  // namespace egf
