#include "egf/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace egf {

void RegularizerWeights::validate(Task task) const {
    if (!(gamma > 0.0)) throw InputError("RegularizerWeights: gamma must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("RegularizerWeights: alpha must be in (0, 1)");
    if (task == Task::ssl && !(beta > 0.0 && beta < 1.0))
        throw InputError("RegularizerWeights: beta must be in (0, 1)");
}

std::pair<QuadraticModel, DirichletPair> SampleQuadratics::average(
    const std::vector<int>& indices) const {
    if (indices.empty()) throw InputError("SampleQuadratics::average: empty index set");
    QuadraticModel avg = quadratics[indices[0]];
    avg.delta.setZero();
    avg.theta.setZero();
    avg.constant = 0.0;
    DirichletPair psi;
    const bool has_psi = !dirichlets.empty();
    if (has_psi) {
        psi.psi_in = Eigen::MatrixXd::Zero(order_in + 1, order_in + 1);
        psi.psi_out = Eigen::MatrixXd::Zero(order_out + 1, order_out + 1);
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (int idx : indices) {
        avg.delta += quadratics[idx].delta;
        avg.theta += quadratics[idx].theta;
        avg.constant += quadratics[idx].constant;
        if (has_psi) {
            psi.psi_in += dirichlets[idx].psi_in;
            psi.psi_out += dirichlets[idx].psi_out;
        }
    }
    avg.delta *= inv;
    avg.theta *= inv;
    avg.constant *= inv;
    if (has_psi) {
        psi.psi_in *= inv;
        psi.psi_out *= inv;
    }
    return {avg, psi};
}

SampleQuadratics build_sample_quadratics(const TrainingSet& ts,
                                         const MomentStatistics& stats_in,
                                         const MomentStatistics& stats_out, int order_in,
                                         int order_out, Task task) {
    if (ts.graph == nullptr || ts.size() == 0)
        throw InputError("build_sample_quadratics: empty training set");
    SampleQuadratics cache;
    cache.order_in = order_in;
    cache.order_out = order_out;
    cache.quadratics.reserve(ts.size());
    for (const TrainingSample& s : ts.samples) {
        cache.quadratics.push_back(build_quadratic_model(*ts.graph, s.target, s.mask, stats_in,
                                                         stats_out, order_in, order_out));
        if (task == Task::ssl)
            cache.dirichlets.push_back(build_dirichlet_pair(*ts.graph, s.target, stats_in,
                                                            stats_out, order_in, order_out));
    }
    return cache;
}

std::pair<QuadraticModel, DirichletPair> average_quadratic(
    const TrainingSet& ts, const MomentStatistics& stats_in,
    const MomentStatistics& stats_out, int order_in, int order_out, Task task) {
    const SampleQuadratics cache =
        build_sample_quadratics(ts, stats_in, stats_out, order_in, order_out, task);
    std::vector<int> all(ts.size());
    std::iota(all.begin(), all.end(), 0);
    return cache.average(all);
}

namespace {

Eigen::MatrixXd lambda_matrix(int order_in, int order_out, double alpha) {
    Eigen::VectorXd diag(order_in + order_out + 2);
    diag.head(order_in + 1).setConstant(1.0 / (2.0 * alpha));
    diag.tail(order_out + 1).setConstant(1.0 / (2.0 * (1.0 - alpha)));
    return diag.asDiagonal();
}

Eigen::MatrixXd omega_matrix(const DirichletPair& psi, double beta) {
    const Eigen::Index l1 = psi.psi_in.rows();
    const Eigen::Index m1 = psi.psi_out.rows();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(l1 + m1, l1 + m1);
    omega.topLeftCorner(l1, l1) = psi.psi_in / (2.0 * beta);
    omega.bottomRightCorner(m1, m1) = psi.psi_out / (2.0 * (1.0 - beta));
    return omega;
}

// Shared closed-form path: stationarity of (1/2g) MSE + h' P h is
// (sym(Delta) + 2 g sym(P)) h = theta. Cholesky with a small jitter allowance
// decides PSD; on failure fall back to descent.
FilterBank solve_quadratic(const QuadraticModel& qm, const Eigen::MatrixXd& penalty,
                           double gamma,
                           const std::function<double(const Eigen::VectorXd&)>& objective,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient) {
    const Eigen::MatrixXd sym_delta = (qm.delta + qm.delta.transpose()) / 2.0;
    Eigen::MatrixXd system = sym_delta + 2.0 * gamma * (penalty + penalty.transpose()) / 2.0;
    const double scale = std::max(1.0, system.diagonal().cwiseAbs().maxCoeff());
    system.diagonal().array() += 1e-10 * scale;

    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd h = llt.solve(qm.theta);
        const double residual = (system * h - qm.theta).norm();
        if (!h.allFinite() || residual > 1e-6 * std::max(1.0, qm.theta.norm()))
            throw NumericalError("solve: system is singular within tolerance (residual " +
                                 std::to_string(residual) + ")");
        return FilterBank::from_stacked(h, qm.order_in, qm.order_out);
    }
    const Eigen::VectorXd h0 = Eigen::VectorXd::Zero(qm.delta.rows());
    return FilterBank::from_stacked(descent_fallback(objective, gradient, h0), qm.order_in,
                                    qm.order_out);
}

}  // namespace

double denoising_objective(const Eigen::VectorXd& h, const QuadraticModel& qm,
                           const RegularizerWeights& reg) {
    reg.validate(Task::denoise);
    const Eigen::VectorXd h_in = h.head(qm.order_in + 1);
    const Eigen::VectorXd h_out = h.tail(qm.order_out + 1);
    return qm.mse(h) / (2.0 * reg.gamma) + h_in.squaredNorm() / (2.0 * reg.alpha) +
           h_out.squaredNorm() / (2.0 * (1.0 - reg.alpha));
}

Eigen::VectorXd denoising_gradient(const Eigen::VectorXd& h, const QuadraticModel& qm,
                                   const RegularizerWeights& reg) {
    Eigen::VectorXd g =
        ((qm.delta + qm.delta.transpose()) * h - 2.0 * qm.theta) / (2.0 * reg.gamma);
    g.head(qm.order_in + 1) += h.head(qm.order_in + 1) / reg.alpha;
    g.tail(qm.order_out + 1) += h.tail(qm.order_out + 1) / (1.0 - reg.alpha);
    return g;
}

double ssl_objective(const Eigen::VectorXd& h, const QuadraticModel& qm,
                     const DirichletPair& dirichlet, const RegularizerWeights& reg) {
    reg.validate(Task::ssl);
    const Eigen::MatrixXd lam = lambda_matrix(qm.order_in, qm.order_out, reg.alpha);
    const Eigen::MatrixXd omega = omega_matrix(dirichlet, reg.beta);
    return qm.mse(h) / (2.0 * reg.gamma) + h.dot(lam * h) + h.dot(omega * h);
}

Eigen::VectorXd ssl_gradient(const Eigen::VectorXd& h, const QuadraticModel& qm,
                             const DirichletPair& dirichlet, const RegularizerWeights& reg) {
    const Eigen::MatrixXd lam = lambda_matrix(qm.order_in, qm.order_out, reg.alpha);
    const Eigen::MatrixXd omega = omega_matrix(dirichlet, reg.beta);
    return ((qm.delta + qm.delta.transpose()) * h - 2.0 * qm.theta) / (2.0 * reg.gamma) +
           2.0 * lam * h + (omega + omega.transpose()) * h;
}

FilterBank solve_denoising(const QuadraticModel& qm, const RegularizerWeights& reg) {
    reg.validate(Task::denoise);
    const Eigen::MatrixXd lam = lambda_matrix(qm.order_in, qm.order_out, reg.alpha);
    return solve_quadratic(
        qm, lam, reg.gamma,
        [&](const Eigen::VectorXd& h) { return denoising_objective(h, qm, reg); },
        [&](const Eigen::VectorXd& h) { return denoising_gradient(h, qm, reg); });
}

FilterBank solve_ssl(const QuadraticModel& qm, const DirichletPair& dirichlet,
                     const RegularizerWeights& reg) {
    reg.validate(Task::ssl);
    const Eigen::MatrixXd penalty = lambda_matrix(qm.order_in, qm.order_out, reg.alpha) +
                                    omega_matrix(dirichlet, reg.beta);
    return solve_quadratic(
        qm, penalty, reg.gamma,
        [&](const Eigen::VectorXd& h) { return ssl_objective(h, qm, dirichlet, reg); },
        [&](const Eigen::VectorXd& h) { return ssl_gradient(h, qm, dirichlet, reg); });
}

Eigen::VectorXd descent_fallback(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    const Eigen::VectorXd& h0, const DescentOptions& opts) {
    Eigen::VectorXd h = h0;
    double f = objective(h);
    Eigen::VectorXd best_h = h;
    double best_f = f;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        const Eigen::VectorXd g = gradient(h);
        const double gnorm = g.norm();
        if (gnorm < opts.tol * (1.0 + std::abs(f))) break;
        double step = opts.initial_step;
        bool accepted = false;
        while (step > 1e-20) {
            const Eigen::VectorXd trial = h - step * g;
            const double f_trial = objective(trial);
            if (f_trial <= f - opts.armijo * step * gnorm * gnorm) {
                h = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted)
            throw NumericalError("descent_fallback: no descent step found (diverging objective)");
        if (f < best_f) {
            best_f = f;
            best_h = h;
        }
    }
    return best_h;
}

CvGrid CvGrid::defaults(Task task) {
    CvGrid grid;
    // 7 log-spaced points in [1e-3, 10].
    for (int i = 0; i < 7; ++i)
        grid.gammas.push_back(std::pow(10.0, -3.0 + 4.0 * i / 6.0));
    for (double v : {0.1, 0.3, 0.5, 0.7, 0.9}) grid.alphas.push_back(v);
    if (task == Task::ssl)
        for (double v : {0.1, 0.3, 0.5, 0.7, 0.9}) grid.betas.push_back(v);
    else
        grid.betas = {0.5};
    return grid;
}

RegularizerWeights cross_validate(const TrainingSet& ts, const SampleQuadratics& cache,
                                  const CvGrid& grid, int folds, Task task, Rng& rng,
                                  const FoldMetric& metric, std::vector<CvTraceRow>* trace) {
    if (folds < 2) throw InputError("cross_validate: folds must be >= 2");
    if (grid.gammas.empty() || grid.alphas.empty() || grid.betas.empty())
        throw InputError("cross_validate: empty grid");
    if (ts.size() < folds) throw InputError("cross_validate: fewer samples than folds");

    std::vector<int> order(ts.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    // Contiguous folds over the shuffled order.
    std::vector<std::vector<int>> fold_train(folds), fold_val(folds);
    for (int f = 0; f < folds; ++f) {
        const int lo = static_cast<int>(static_cast<long>(f) * ts.size() / folds);
        const int hi = static_cast<int>(static_cast<long>(f + 1) * ts.size() / folds);
        for (int i = 0; i < ts.size(); ++i)
            ((i >= lo && i < hi) ? fold_val[f] : fold_train[f]).push_back(order[i]);
    }

    RegularizerWeights best;
    double best_metric = std::numeric_limits<double>::infinity();
    bool have_best = false;
    auto better = [&](const RegularizerWeights& cand, double m) {
        if (!have_best) return true;
        if (m < best_metric - 1e-15) return true;
        if (m > best_metric + 1e-15) return false;
        // Ties: strongest regularization wins.
        if (cand.gamma != best.gamma) return cand.gamma > best.gamma;
        if (std::abs(cand.alpha - 0.5) != std::abs(best.alpha - 0.5))
            return std::abs(cand.alpha - 0.5) < std::abs(best.alpha - 0.5);
        return std::abs(cand.beta - 0.5) < std::abs(best.beta - 0.5);
    };

    for (double gamma : grid.gammas)
        for (double alpha : grid.alphas)
            for (double beta : grid.betas) {
                const RegularizerWeights reg{gamma, alpha, beta};
                reg.validate(task);
                double sum = 0.0;
                long count = 0;
                for (int f = 0; f < folds; ++f) {
                    const auto [qm, psi] = cache.average(fold_train[f]);
                    const FilterBank bank = (task == Task::ssl)
                                                ? solve_ssl(qm, psi, reg)
                                                : solve_denoising(qm, reg);
                    for (int idx : fold_val[f]) {
                        sum += metric(ts.samples[idx], bank);
                        ++count;
                    }
                }
                const double mean = sum / static_cast<double>(count);
                if (trace) trace->push_back({reg, mean});
                if (better(reg, mean)) {
                    best = reg;
                    best_metric = mean;
                    have_best = true;
                }
            }
    return best;
}

}  // namespace egf
