#include "egf/attachment.hpp"

#include <numeric>
#include <vector>

namespace egf {

void AttachmentModel::validate() const {
    if (n() < 1) throw InputError("AttachmentModel: empty probability vector");
    if (w.size() != p.size()) throw InputError("AttachmentModel: p/w length mismatch");
    if (!p.allFinite() || !w.allFinite())
        throw InputError("AttachmentModel: non-finite entries");
    if ((p.array() < 0.0).any() || (w.array() < 0.0).any())
        throw InputError("AttachmentModel: p and w must be >= 0");
    if (scheme == AttachmentScheme::bernoulli) {
        if ((p.array() > 1.0).any())
            throw InputError("AttachmentModel: bernoulli probabilities must be <= 1");
    } else {
        if (budget < 1 || budget > n())
            throw InputError("AttachmentModel: fixed budget must be in [1, n]");
        if (p.sum() <= 0.0)
            throw InputError("AttachmentModel: fixed_budget weights sum to zero");
    }
}

MomentStatistics deterministic_moments(const Eigen::VectorXd& realized) {
    MomentStatistics stats;
    stats.mu = realized;
    stats.sigma = Eigen::MatrixXd::Zero(realized.size(), realized.size());
    stats.sample_count = 0;
    return stats;
}

AttachmentModel uniform_model(int n, int budget, const Eigen::VectorXd& w) {
    if (n < 1) throw InputError("uniform_model: n must be >= 1");
    if (budget > n) throw InputError("uniform_model: budget exceeds node count");
    AttachmentModel model;
    model.p = Eigen::VectorXd::Constant(n, 1.0 / n);
    model.w = w;
    model.budget = budget;
    model.scheme = AttachmentScheme::fixed_budget;
    model.validate();
    return model;
}

AttachmentModel preferential_model(const Graph& g, int budget, const Eigen::VectorXd& w) {
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (g.adj(i, j) > 0.0) {
                degree(i) += 1.0;  // in-degree of i
                degree(j) += 1.0;  // out-degree of j
            }
    const double total = degree.sum();
    if (total <= 0.0) throw InputError("preferential_model: graph has no edges");
    AttachmentModel model;
    model.p = degree / total;
    model.w = w;
    model.budget = budget;
    model.scheme = AttachmentScheme::fixed_budget;
    model.validate();
    return model;
}

Eigen::VectorXd sample_attachment(const AttachmentModel& model, Rng& rng) {
    model.validate();
    const int n = model.n();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (model.scheme == AttachmentScheme::bernoulli) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int l = 0; l < n; ++l)
            if (unif(rng) < model.p(l)) out(l) = model.w(l);
        return out;
    }
    // Weighted draw without replacement: renormalize over the remaining pool.
    std::vector<double> weights(model.p.data(), model.p.data() + n);
    for (int drawn = 0; drawn < model.budget; ++drawn) {
        std::discrete_distribution<int> dist(weights.begin(), weights.end());
        const int pick = dist(rng);
        out(pick) = model.w(pick);
        weights[pick] = 0.0;
    }
    return out;
}

MomentStatistics estimate_moments(const AttachmentModel& model, long samples, Rng& rng) {
    if (samples < 2) throw InputError("estimate_moments: need at least 2 samples");
    const int n = model.n();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(n, n);
    for (long s = 0; s < samples; ++s) {
        const Eigen::VectorXd draw = sample_attachment(model, rng);
        sum += draw;
        sum_outer.selfadjointView<Eigen::Lower>().rankUpdate(draw);
    }
    MomentStatistics stats;
    stats.mu = sum / static_cast<double>(samples);
    Eigen::MatrixXd outer = Eigen::MatrixXd(sum_outer.selfadjointView<Eigen::Lower>());
    stats.sigma = (outer - static_cast<double>(samples) * stats.mu * stats.mu.transpose()) /
                  static_cast<double>(samples - 1);
    stats.sigma = ((stats.sigma + stats.sigma.transpose()) / 2.0).eval();
    stats.sample_count = samples;
    return stats;
}

MomentStatistics analytic_bernoulli_moments(const AttachmentModel& model) {
    model.validate();
    if (model.scheme != AttachmentScheme::bernoulli)
        throw UnsupportedError(
            "analytic_bernoulli_moments: no closed form for fixed_budget; use estimate_moments");
    MomentStatistics stats;
    stats.mu = model.w.cwiseProduct(model.p);
    stats.sigma = model.w.array().square().matrix()
                      .cwiseProduct(model.p.cwiseProduct(
                          (Eigen::VectorXd::Ones(model.n()) - model.p)))
                      .asDiagonal();
    stats.sample_count = 0;
    return stats;
}

}  // namespace egf
