// Acceptance harness: end-to-end checks of the closed-form moment machinery,
// the solvers and the desk-scale experiments. Prints one pass/fail line per
// criterion and exits nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "egf/baselines.hpp"
#include "egf/datasets.hpp"
#include "egf/experiments.hpp"
#include "egf/oracle.hpp"

using namespace egf;

namespace {

// Pinned tolerances.
constexpr double kMomentZBand = 4.0;       // entrywise |z| band at 1e6 draws
constexpr double kGramZBand = 3.0;         // noise-identity MC band at 1e5 draws
constexpr double kExactRel = 1e-12;        // noiseless identity, relative
constexpr double kBlockPowerRel = 1e-10;   // closed-form powers vs dense, relative
constexpr double kGradientRel = 1e-6;      // stationarity of the closed form
constexpr double kDescentTol = 1e-6;       // descent fallback vs closed form
constexpr double kCollapseTol = 1e-9;      // deterministic-moment collapse
constexpr long kMomentDraws = 1000000;
constexpr long kGramDraws = 100000;

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", criterion, name.c_str(),
                pass ? "pass" : "FAIL", detail.empty() ? "" : " — ", detail.c_str());
    if (!pass) ++failures;
}

Graph random_graph(int n, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj(i, j) = i == j ? 0.0 : 0.4 * unif(rng);
    return Graph(n, adj);
}

Eigen::VectorXd random_vector(int n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct MomentInstance {
    Graph g{0, Eigen::MatrixXd()};
    NoisyTarget target;
    SampleMask mask;
    AttachmentModel model_in, model_out;
    MomentStatistics stats_in, stats_out;
};

MomentInstance seeded_instance() {
    MomentInstance inst;
    Rng rng(17);
    inst.g = generate_ba(8, 2, rng);
    inst.target = NoisyTarget{random_vector(8, rng), 0.7, 0.1};
    inst.mask = SampleMask::all(9);
    inst.mask.d(3) = 0.0;
    inst.model_in.p = Eigen::VectorXd::Constant(8, 0.3);
    inst.model_in.w = Eigen::VectorXd::LinSpaced(8, 0.4, 1.1);
    inst.model_in.scheme = AttachmentScheme::bernoulli;
    inst.model_out = inst.model_in;
    inst.model_out.p = Eigen::VectorXd::Constant(8, 0.45);
    inst.stats_in = analytic_bernoulli_moments(inst.model_in);
    inst.stats_out = analytic_bernoulli_moments(inst.model_out);
    return inst;
}

void criterion_1() {
    const MomentInstance inst = seeded_instance();
    const QuadraticModel qm = build_quadratic_model(inst.g, inst.target, inst.mask,
                                                    inst.stats_in, inst.stats_out, 2, 2);
    const DirichletPair psi =
        build_dirichlet_pair(inst.g, inst.target, inst.stats_in, inst.stats_out, 2, 2);
    Rng rng(2024);
    const MomentMatrixReports reports =
        mc_moment_matrices(inst.g, inst.target, inst.mask, inst.model_in, inst.model_out, 2, 2,
                           kMomentDraws, rng);
    const double z_delta = reports.delta.max_abs_z(qm.delta);
    const double z_theta = reports.theta.max_abs_z(qm.theta);
    const double z_in = reports.psi_in.max_abs_z(psi.psi_in);
    const double z_out = reports.psi_out.max_abs_z(psi.psi_out);
    const double worst = std::max(std::max(z_delta, z_theta), std::max(z_in, z_out));
    std::ostringstream detail;
    detail << "max |z| over all matrix entries at 1e6 draws: " << worst;
    report(1, "moment-oracle equivalence", worst < kMomentZBand, detail.str());
}

void criterion_2() {
    Rng rng(31);
    const Graph g = random_graph(6, rng);
    Eigen::MatrixXd c(6, 6);
    c.setRandom();
    const Eigen::VectorXd t = random_vector(6, rng);

    const Eigen::MatrixXd noiseless = expected_gram(g, c, t, 0.0, 2, 3);
    const Eigen::MatrixXd lt = krylov_matrix(g, t, 2);
    const Eigen::MatrixXd mt = krylov_matrix(g, t, 3);
    const Eigen::MatrixXd exact = lt.transpose() * c * mt;
    const double rel =
        (noiseless - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();

    const double sigma2 = 0.25;
    const Eigen::MatrixXd closed = expected_gram(g, c, t, sigma2, 2, 3);
    Rng mc_rng(32);
    const OracleReport mc = mc_expected_gram(g, c, t, sigma2, 2, 3, kGramDraws, mc_rng);
    const double z = mc.max_abs_z(closed);

    std::ostringstream detail;
    detail << "noiseless relative error " << rel << ", noisy max |z| " << z << " at 1e5 draws";
    report(2, "expected-gram identity", rel < kExactRel && z < kGramZBand, detail.str());
}

void criterion_3() {
    Rng rng(47);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Graph g = random_graph(5, rng);
        const Eigen::VectorXd attach = random_vector(5, rng).cwiseAbs();
        for (Direction dir : {Direction::incoming, Direction::outgoing}) {
            const ExpandedAdjacency e = expand(g, dir, attach);
            const Eigen::MatrixXd dense = e.materialize();
            Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(6, 6);
            for (int k = 1; k <= 6; ++k) {
                pw = dense * pw;
                const double scale = std::max(1.0, pw.cwiseAbs().maxCoeff());
                worst = std::max(worst,
                                 (expanded_power(e, k) - pw).cwiseAbs().maxCoeff() / scale);
            }
        }
    }
    std::ostringstream detail;
    detail << "max relative deviation " << worst;
    report(3, "expanded-power block structure", worst < kBlockPowerRel, detail.str());
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& h) {
    const double eps = 1e-6;
    Eigen::VectorXd grad(h.size());
    for (int i = 0; i < h.size(); ++i) {
        Eigen::VectorXd hp = h, hm = h;
        hp(i) += eps;
        hm(i) -= eps;
        grad(i) = (f(hp) - f(hm)) / (2.0 * eps);
    }
    return grad;
}

void criterion_4() {
    double worst_grad = 0.0, worst_gap = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        Rng rng(100 + static_cast<std::uint64_t>(instance));
        const int dim = 6;
        Eigen::MatrixXd b(dim, dim);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) b(i, j) = normal(rng);
        QuadraticModel qm;
        qm.order_in = 2;
        qm.order_out = 2;
        qm.delta = b.transpose() * b + 0.05 * Eigen::MatrixXd::Identity(dim, dim);
        qm.theta = random_vector(dim, rng);
        qm.constant = 1.0;
        const RegularizerWeights reg{0.6, 0.35, 0.55};

        std::function<double(const Eigen::VectorXd&)> obj;
        std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
        Eigen::VectorXd h_star;
        if (instance % 2 == 0) {
            h_star = solve_denoising(qm, reg).stacked();
            obj = [&](const Eigen::VectorXd& h) { return denoising_objective(h, qm, reg); };
            grad = [&](const Eigen::VectorXd& h) { return denoising_gradient(h, qm, reg); };
        } else {
            Eigen::MatrixXd pi(3, 3), po(3, 3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    pi(i, j) = normal(rng);
                    po(i, j) = normal(rng);
                }
            static DirichletPair psi;  // keeps the lambdas' referent alive per loop
            psi = DirichletPair{pi.transpose() * pi, po.transpose() * po};
            h_star = solve_ssl(qm, psi, reg).stacked();
            obj = [&qm, &reg](const Eigen::VectorXd& h) {
                return ssl_objective(h, qm, psi, reg);
            };
            grad = [&qm, &reg](const Eigen::VectorXd& h) {
                return ssl_gradient(h, qm, psi, reg);
            };
        }
        const double rel_grad =
            fd_gradient(obj, h_star).norm() / (1.0 + std::abs(obj(h_star)));
        worst_grad = std::max(worst_grad, rel_grad);
        const Eigen::VectorXd descended =
            descent_fallback(obj, grad, Eigen::VectorXd::Zero(dim));
        worst_gap = std::max(worst_gap, (descended - h_star).norm());
    }
    std::ostringstream detail;
    detail << "max relative gradient " << worst_grad << ", max descent gap " << worst_gap;
    report(4, "solver optimality", worst_grad < kGradientRel && worst_gap < kDescentTol,
           detail.str());
}

void criterion_5() {
    Rng rng(55);
    const Graph g = random_graph(6, rng);
    // Shared realized attachments so the analytic pipeline and the
    // known-connectivity baseline see identical information.
    const Eigen::VectorXd b = random_vector(6, rng).cwiseAbs();
    const Eigen::VectorXd a = random_vector(6, rng).cwiseAbs();
    TrainingSet ts;
    ts.graph = &g;
    for (int i = 0; i < 8; ++i) {
        TrainingSample s;
        s.b = b;
        s.a = a;
        s.signal.x = random_vector(6, rng);
        s.signal.x_plus = random_vector(1, rng)(0);
        s.target = NoisyTarget{s.signal.x, s.signal.x_plus, 0.0};
        s.mask = SampleMask::all(7);
        ts.samples.push_back(std::move(s));
    }
    const RegularizerWeights reg{0.7, 0.45, 0.5};
    const MomentStatistics stats_in = deterministic_moments(b);
    const MomentStatistics stats_out = deterministic_moments(a);
    const auto [qm, psi] = average_quadratic(ts, stats_in, stats_out, 2, 2, Task::denoise);
    const Eigen::VectorXd prop = solve_denoising(qm, reg).stacked();
    const Eigen::VectorXd kc2 = train_kc2(ts, 2, 2, reg, Task::denoise).stacked();
    const double gap = (prop - kc2).cwiseAbs().maxCoeff();

    // The quadratic model evaluates to the exact mean sample loss.
    double worst_mse = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd h = random_vector(6, rng);
        double exact = 0.0;
        for (const TrainingSample& s : ts.samples) {
            const Eigen::MatrixXd w = build_design_matrix(g, s.b, s.a, s.signal, 2, 2);
            exact += (w * h - s.target.full()).squaredNorm();
        }
        exact /= static_cast<double>(ts.size());
        worst_mse = std::max(worst_mse, std::abs(qm.mse(h) - exact) / (1.0 + exact));
    }
    std::ostringstream detail;
    detail << "filter gap " << gap << ", MSE-model relative error " << worst_mse;
    report(5, "deterministic collapse", gap < kCollapseTol && worst_mse < kCollapseTol,
           detail.str());
}

struct RowTable {
    std::vector<ResultRow> rows;
    double get(const std::string& setting, const std::string& method,
               const std::string& metric) const {
        for (const ResultRow& r : rows)
            if (r.setting == setting && r.method == method && r.metric == metric) return r.mean;
        throw std::runtime_error("missing row " + setting + " " + method + " " + metric);
    }
};

void criterion_6(std::string* seed1_dir) {
    bool pass = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg;
        cfg.task = Task::denoise;
        cfg.n = 50;
        cfg.realizations = 200;
        cfg.snr_db = {5.0, 10.0, 20.0};
        cfg.seed = seed;
        const std::string out = "acceptance_out/den_seed" + std::to_string(seed);
        if (seed == 1) *seed1_dir = out;
        RowTable t{run_denoising(cfg, out)};
        const double p5 = t.get("snr=5", "prop", "nmse");
        const double p10 = t.get("snr=10", "prop", "nmse");
        const double p20 = t.get("snr=20", "prop", "nmse");
        const bool monotone = p5 > p10 && p10 > p20;
        bool near_kc2 = true;
        for (const std::string snr : {"snr=5", "snr=10", "snr=20"})
            near_kc2 = near_kc2 &&
                       t.get(snr, "prop", "nmse") <= 2.0 * t.get(snr, "kc2", "nmse");
        const double ratio =
            t.get("snr=5", "it", "nmse_plus") / t.get("snr=5", "prop", "nmse_plus");
        const bool transfer_gap = ratio >= 2.0;
        const bool high_snr = p20 < 1e-2;
        if (!(monotone && near_kc2 && transfer_gap && high_snr)) pass = false;
        detail << "seed " << seed << ": nmse(5,10,20)=(" << p5 << "," << p10 << "," << p20
               << ") it/prop incoming-error ratio " << ratio << "; ";
    }
    report(6, "desk-scale denoising", pass, detail.str());
}

void criterion_7(std::string* seed1_dir) {
    bool pass = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg;
        cfg.task = Task::ssl;
        cfg.graph = GraphKind::sensor;
        cfg.n = 100;
        cfg.realizations = 200;
        cfg.observed_fraction = 0.1;
        cfg.label_fractions = {1.0, 0.5};
        cfg.seed = seed;
        const std::string out = "acceptance_out/ssl_seed" + std::to_string(seed);
        if (seed == 1) *seed1_dir = out;
        RowTable t{run_ssl(cfg, out)};
        for (const std::string frac : {"frac=1", "frac=0.5"}) {
            const double prop = t.get(frac, "prop", "ssl_error");
            const double kc2 = t.get(frac, "kc2", "ssl_error");
            const double it = t.get(frac, "it", "ssl_error");
            if (!(std::abs(prop - kc2) <= 3.0 && prop <= it + 1.0)) pass = false;
            detail << "seed " << seed << " " << frac << ": prop " << prop << " kc2 " << kc2
                   << " it " << it << "; ";
        }
    }
    report(7, "desk-scale node labelling", pass, detail.str());
}

void criterion_8(const std::string& den_dir, const std::string& ssl_dir) {
    bool pass = true;
    const std::vector<std::string> files = {"results.csv", "cv_trace.csv", "filters.txt",
                                            "manifest.txt"};
    {
        ExperimentConfig cfg;
        cfg.task = Task::denoise;
        cfg.n = 50;
        cfg.realizations = 200;
        cfg.snr_db = {5.0, 10.0, 20.0};
        cfg.seed = 1;
        run_denoising(cfg, "acceptance_out/den_rerun");
        for (const std::string& f : files)
            if (slurp(den_dir + "/" + f) != slurp("acceptance_out/den_rerun/" + f)) pass = false;
    }
    {
        ExperimentConfig cfg;
        cfg.task = Task::ssl;
        cfg.graph = GraphKind::sensor;
        cfg.n = 100;
        cfg.realizations = 200;
        cfg.observed_fraction = 0.1;
        cfg.label_fractions = {1.0, 0.5};
        cfg.seed = 1;
        run_ssl(cfg, "acceptance_out/ssl_rerun");
        for (const std::string& f : files)
            if (slurp(ssl_dir + "/" + f) != slurp("acceptance_out/ssl_rerun/" + f)) pass = false;
    }
    {
        // The sampling oracle itself is reproducible from its seed.
        const MomentInstance inst = seeded_instance();
        Rng r1(9), r2(9);
        const MomentMatrixReports a = mc_moment_matrices(
            inst.g, inst.target, inst.mask, inst.model_in, inst.model_out, 2, 2, 2000, r1);
        const MomentMatrixReports b = mc_moment_matrices(
            inst.g, inst.target, inst.mask, inst.model_in, inst.model_out, 2, 2, 2000, r2);
        if ((a.delta.estimate - b.delta.estimate).cwiseAbs().maxCoeff() != 0.0) pass = false;
        if ((a.psi_out.estimate - b.psi_out.estimate).cwiseAbs().maxCoeff() != 0.0) pass = false;
    }
    report(8, "bit-identical reruns", pass, "");
}

}  // namespace

int main() {
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4();
        criterion_5();
        std::string den_dir, ssl_dir;
        criterion_6(&den_dir);
        criterion_7(&ssl_dir);
        criterion_8(den_dir, ssl_dir);
    } catch (const std::exception& e) {
        std::printf("acceptance harness aborted: %s\n", e.what());
        return 1;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
