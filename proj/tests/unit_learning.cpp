#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "egf/learning.hpp"

using namespace egf;

namespace {

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

TrainingSample make_sample(const Graph& g, Rng& rng, double noise) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TrainingSample s;
    s.b = random_vector(g.n, rng).cwiseAbs();
    s.a = random_vector(g.n, rng).cwiseAbs();
    s.target = NoisyTarget{random_vector(g.n, rng), normal(rng), noise * noise};
    s.signal.x = s.target.t;
    for (int i = 0; i < g.n; ++i) s.signal.x(i) += noise * normal(rng);
    s.signal.x_plus = s.target.t_plus + noise * normal(rng);
    s.mask = SampleMask::all(g.n + 1);
    return s;
}

TrainingSet make_set(const Graph& g, int count, Rng& rng, double noise = 0.1) {
    TrainingSet ts;
    ts.graph = &g;
    for (int i = 0; i < count; ++i) ts.samples.push_back(make_sample(g, rng, noise));
    return ts;
}

/// Synthetic strictly convex quadratic model with the given filter orders.
QuadraticModel synthetic_model(int order_in, int order_out, Rng& rng) {
    const int dim = order_in + order_out + 2;
    Eigen::MatrixXd b(dim, dim);
    b.setRandom();
    QuadraticModel qm;
    qm.order_in = order_in;
    qm.order_out = order_out;
    qm.delta = b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    qm.theta = random_vector(dim, rng);
    qm.constant = 2.0;
    return qm;
}

DirichletPair synthetic_dirichlet(int order_in, int order_out) {
    Eigen::MatrixXd pin(order_in + 1, order_in + 1), pout(order_out + 1, order_out + 1);
    pin.setRandom();
    pout.setRandom();
    return DirichletPair{pin.transpose() * pin, pout.transpose() * pout};
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

}  // namespace

TEST_CASE("average_quadratic: single sample and duplicated samples") {
    Rng rng(1);
    const Graph g = random_graph(6, rng);
    TrainingSet one = make_set(g, 1, rng);
    const MomentStatistics stats = deterministic_moments(Eigen::VectorXd::Ones(6) * 0.3);
    const auto [qm1, psi1] = average_quadratic(one, stats, stats, 2, 2, Task::denoise);
    const QuadraticModel direct = build_quadratic_model(g, one.samples[0].target,
                                                        one.samples[0].mask, stats, stats, 2, 2);
    CHECK((qm1.delta - direct.delta).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((qm1.theta - direct.theta).cwiseAbs().maxCoeff() < 1e-14);

    TrainingSet dup = one;
    for (int i = 0; i < 3; ++i) dup.samples.push_back(one.samples[0]);
    const auto [qmd, psid] = average_quadratic(dup, stats, stats, 2, 2, Task::denoise);
    CHECK((qmd.delta - qm1.delta).cwiseAbs().maxCoeff() < 1e-13);

    TrainingSet two = make_set(g, 2, rng);
    const auto [qm2, psi2] = average_quadratic(two, stats, stats, 2, 2, Task::denoise);
    const QuadraticModel qa = build_quadratic_model(g, two.samples[0].target,
                                                    two.samples[0].mask, stats, stats, 2, 2);
    const QuadraticModel qb = build_quadratic_model(g, two.samples[1].target,
                                                    two.samples[1].mask, stats, stats, 2, 2);
    CHECK((qm2.delta - 0.5 * (qa.delta + qb.delta)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((qm2.theta - 0.5 * (qa.theta + qb.theta)).cwiseAbs().maxCoeff() < 1e-13);

    TrainingSet empty;
    empty.graph = &g;
    CHECK_THROWS_AS(average_quadratic(empty, stats, stats, 2, 2, Task::denoise), InputError);
}

TEST_CASE("denoising_objective: literal evaluations") {
    Rng rng(2);
    QuadraticModel qm = synthetic_model(1, 1, rng);
    const RegularizerWeights reg{2.0, 0.5, 0.5};
    CHECK(denoising_objective(Eigen::VectorXd::Zero(4), qm, reg) ==
          doctest::Approx(qm.constant / (2.0 * reg.gamma)));

    QuadraticModel plain;
    plain.order_in = 1;
    plain.order_out = 1;
    plain.delta = Eigen::MatrixXd::Identity(4, 4);
    plain.theta = Eigen::VectorXd::Zero(4);
    plain.constant = 0.0;
    const RegularizerWeights half{0.5, 0.5, 0.5};
    const Eigen::VectorXd h = random_vector(4, rng);
    CHECK(denoising_objective(h, plain, half) == doctest::Approx(2.0 * h.squaredNorm()));

    CHECK_THROWS_AS(denoising_objective(h, plain, RegularizerWeights{0.0, 0.5, 0.5}),
                    InputError);
    CHECK_THROWS_AS(denoising_objective(h, plain, RegularizerWeights{1.0, 1.0, 0.5}),
                    InputError);
}

TEST_CASE("objective gradients match finite differences") {
    Rng rng(3);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    const DirichletPair psi = synthetic_dirichlet(2, 2);
    const RegularizerWeights reg{0.7, 0.3, 0.6};
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd h = random_vector(6, rng);
        const Eigen::VectorXd gd = denoising_gradient(h, qm, reg);
        const Eigen::VectorXd gd_fd =
            fd_gradient([&](const Eigen::VectorXd& v) { return denoising_objective(v, qm, reg); }, h);
        CHECK((gd - gd_fd).norm() / (1.0 + gd_fd.norm()) < 1e-5);

        const Eigen::VectorXd gs = ssl_gradient(h, qm, psi, reg);
        const Eigen::VectorXd gs_fd = fd_gradient(
            [&](const Eigen::VectorXd& v) { return ssl_objective(v, qm, psi, reg); }, h);
        CHECK((gs - gs_fd).norm() / (1.0 + gs_fd.norm()) < 1e-5);
    }
}

TEST_CASE("ssl_objective: zero Dirichlet matrices reduce to the denoising objective") {
    Rng rng(4);
    const QuadraticModel qm = synthetic_model(2, 1, rng);
    DirichletPair zero{Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(2, 2)};
    const RegularizerWeights reg{1.3, 0.4, 0.5};
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd h = random_vector(5, rng);
        CHECK(ssl_objective(h, qm, zero, reg) ==
              doctest::Approx(denoising_objective(h, qm, reg)));
    }
    CHECK(ssl_objective(Eigen::VectorXd::Zero(5), qm, zero, reg) ==
          doctest::Approx(qm.constant / (2.0 * reg.gamma)));
}

TEST_CASE("solve_denoising: zero theta gives zero filters; shrinkage grows with gamma") {
    Rng rng(5);
    QuadraticModel qm = synthetic_model(2, 2, rng);
    const RegularizerWeights reg{1.0, 0.5, 0.5};
    qm.theta.setZero();
    CHECK(solve_denoising(qm, reg).stacked().isZero(1e-12));

    qm = synthetic_model(2, 2, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double gamma : {1e-2, 1.0, 1e2, 1e4, 1e6}) {
        const double norm = solve_denoising(qm, RegularizerWeights{gamma, 0.5, 0.5})
                                .stacked()
                                .norm();
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("solve_denoising: stationarity and local optimality") {
    Rng rng(6);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    const RegularizerWeights reg{0.8, 0.4, 0.5};
    const Eigen::VectorXd h = solve_denoising(qm, reg).stacked();
    const double obj = denoising_objective(h, qm, reg);
    CHECK(denoising_gradient(h, qm, reg).norm() / (1.0 + std::abs(obj)) < 1e-8);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd probe = h + 0.01 * random_vector(6, rng);
        CHECK(denoising_objective(probe, qm, reg) >= obj - 1e-12);
    }
}

TEST_CASE("solve_ssl: zero Dirichlet coincides with solve_denoising, optimality holds") {
    Rng rng(7);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    const RegularizerWeights reg{0.9, 0.5, 0.5};
    DirichletPair zero{Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3)};
    const Eigen::VectorXd h_zero = solve_ssl(qm, zero, reg).stacked();
    const Eigen::VectorXd h_den = solve_denoising(qm, reg).stacked();
    CHECK((h_zero - h_den).cwiseAbs().maxCoeff() < 1e-10);

    const DirichletPair psi = synthetic_dirichlet(2, 2);
    const Eigen::VectorXd h = solve_ssl(qm, psi, reg).stacked();
    const double obj = ssl_objective(h, qm, psi, reg);
    CHECK(ssl_gradient(h, qm, psi, reg).norm() / (1.0 + std::abs(obj)) < 1e-8);

    QuadraticModel flat = qm;
    flat.theta.setZero();
    CHECK(solve_ssl(flat, psi, reg).stacked().isZero(1e-12));
}

TEST_CASE("descent_fallback: reaches the closed form and stops at the optimum") {
    Rng rng(8);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    const RegularizerWeights reg{1.1, 0.45, 0.5};
    const Eigen::VectorXd h_star = solve_denoising(qm, reg).stacked();
    const auto obj = [&](const Eigen::VectorXd& h) { return denoising_objective(h, qm, reg); };
    const auto grad = [&](const Eigen::VectorXd& h) { return denoising_gradient(h, qm, reg); };

    const Eigen::VectorXd from_zero =
        descent_fallback(obj, grad, Eigen::VectorXd::Zero(6));
    CHECK((from_zero - h_star).norm() < 1e-6);

    DescentOptions opts;
    opts.max_iters = 1;
    const Eigen::VectorXd from_star = descent_fallback(obj, grad, h_star, opts);
    CHECK((from_star - h_star).norm() < 1e-12);

    // On an indefinite perturbation descent still decreases the objective.
    QuadraticModel indef = qm;
    indef.delta -= 0.3 * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::VectorXd h0 = random_vector(6, rng);
    DescentOptions few;
    few.max_iters = 50;
    const Eigen::VectorXd better = descent_fallback(
        [&](const Eigen::VectorXd& h) { return denoising_objective(h, indef, reg); },
        [&](const Eigen::VectorXd& h) { return denoising_gradient(h, indef, reg); }, h0, few);
    CHECK(denoising_objective(better, indef, reg) <= denoising_objective(h0, indef, reg));
}

TEST_CASE("training MSE of the regularized solution is non-decreasing in gamma") {
    Rng rng(9);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    double prev_mse = -std::numeric_limits<double>::infinity();
    for (double gamma : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
        const Eigen::VectorXd h = solve_denoising(qm, RegularizerWeights{gamma, 0.5, 0.5})
                                      .stacked();
        const double mse = qm.mse(h);
        CHECK(mse >= prev_mse - 1e-10);
        prev_mse = mse;
    }
}

TEST_CASE("alpha limits silence the corresponding filter") {
    Rng rng(10);
    const QuadraticModel qm = synthetic_model(2, 2, rng);
    const FilterBank tiny_alpha = solve_denoising(qm, RegularizerWeights{1.0, 1e-8, 0.5});
    CHECK(tiny_alpha.h_in.norm() < 1e-5);
    const FilterBank big_alpha = solve_denoising(qm, RegularizerWeights{1.0, 1.0 - 1e-8, 0.5});
    CHECK(big_alpha.h_out.norm() < 1e-5);
}

TEST_CASE("cross_validate: single grid point is returned unchanged") {
    Rng rng(11);
    const Graph g = random_graph(6, rng);
    const TrainingSet ts = make_set(g, 12, rng);
    const MomentStatistics stats = deterministic_moments(Eigen::VectorXd::Constant(6, 0.4));
    const SampleQuadratics cache =
        build_sample_quadratics(ts, stats, stats, 2, 2, Task::denoise);
    CvGrid grid;
    grid.gammas = {0.37};
    grid.alphas = {0.21};
    grid.betas = {0.5};
    Rng cv_rng(100);
    const RegularizerWeights reg = cross_validate(
        ts, cache, grid, 3, Task::denoise, cv_rng,
        [](const TrainingSample&, const FilterBank&) { return 0.0; });
    CHECK(reg.gamma == doctest::Approx(0.37));
    CHECK(reg.alpha == doctest::Approx(0.21));
}

TEST_CASE("cross_validate: picks the grid point with the lower validation metric") {
    Rng rng(12);
    const Graph g = random_graph(6, rng);
    const TrainingSet ts = make_set(g, 15, rng);
    const MomentStatistics stats = deterministic_moments(Eigen::VectorXd::Constant(6, 0.4));
    const SampleQuadratics cache =
        build_sample_quadratics(ts, stats, stats, 2, 2, Task::denoise);
    CvGrid grid;
    grid.gammas = {0.25, 4.0};
    grid.alphas = {0.5};
    grid.betas = {0.5};
    Rng cv_rng(200);
    // Metric engineered to separate the two gammas deterministically.
    const RegularizerWeights reg = cross_validate(
        ts, cache, grid, 3, Task::denoise, cv_rng,
        [](const TrainingSample&, const FilterBank& fb) {
            return std::abs(fb.h_in.norm() - 0.0);  // favors the stronger shrinkage
        });
    CHECK(reg.gamma == doctest::Approx(4.0));
}

TEST_CASE("cross_validate: flat metric breaks ties toward the strongest regularization") {
    Rng rng(13);
    const Graph g = random_graph(6, rng);
    const TrainingSet ts = make_set(g, 10, rng);
    const MomentStatistics stats = deterministic_moments(Eigen::VectorXd::Constant(6, 0.4));
    const SampleQuadratics cache = build_sample_quadratics(ts, stats, stats, 2, 2, Task::ssl);
    CvGrid grid;
    grid.gammas = {0.01, 0.1, 1.0};
    grid.alphas = {0.1, 0.5, 0.9};
    grid.betas = {0.3, 0.5, 0.7};
    Rng cv_rng(300);
    const RegularizerWeights reg = cross_validate(
        ts, cache, grid, 2, Task::ssl, cv_rng,
        [](const TrainingSample&, const FilterBank&) { return 1.0; });
    CHECK(reg.gamma == doctest::Approx(1.0));
    CHECK(reg.alpha == doctest::Approx(0.5));
    CHECK(reg.beta == doctest::Approx(0.5));
}

TEST_CASE("cross_validate: deterministic given the seed; rejects undersized sets") {
    Rng rng(14);
    const Graph g = random_graph(6, rng);
    const TrainingSet ts = make_set(g, 10, rng);
    const MomentStatistics stats = deterministic_moments(Eigen::VectorXd::Constant(6, 0.4));
    const SampleQuadratics cache =
        build_sample_quadratics(ts, stats, stats, 2, 2, Task::denoise);
    const CvGrid grid = CvGrid::defaults(Task::denoise);
    const FoldMetric metric = [&](const TrainingSample& s, const FilterBank& fb) {
        const Eigen::MatrixXd w = build_design_matrix(g, s.b, s.a, s.signal, 2, 2);
        return (w * fb.stacked() - s.target.full()).squaredNorm();
    };
    std::vector<CvTraceRow> trace_a, trace_b;
    Rng r1(77), r2(77);
    const RegularizerWeights a = cross_validate(ts, cache, grid, 5, Task::denoise, r1, metric,
                                                &trace_a);
    const RegularizerWeights b = cross_validate(ts, cache, grid, 5, Task::denoise, r2, metric,
                                                &trace_b);
    CHECK(a.gamma == b.gamma);
    CHECK(a.alpha == b.alpha);
    REQUIRE(trace_a.size() == trace_b.size());
    for (std::size_t i = 0; i < trace_a.size(); ++i)
        CHECK(trace_a[i].mean_metric == trace_b[i].mean_metric);

    TrainingSet small = make_set(g, 3, rng);
    const SampleQuadratics small_cache =
        build_sample_quadratics(small, stats, stats, 2, 2, Task::denoise);
    Rng r3(1);
    CHECK_THROWS_AS(cross_validate(small, small_cache, grid, 5, Task::denoise, r3, metric),
                    InputError);
}

TEST_CASE("default grids match the documented resolution") {
    const CvGrid den = CvGrid::defaults(Task::denoise);
    CHECK(den.gammas.size() == 7);
    CHECK(den.gammas.front() == doctest::Approx(1e-3));
    CHECK(den.gammas.back() == doctest::Approx(10.0));
    CHECK(den.alphas.size() == 5);
    CHECK(den.alphas.front() == doctest::Approx(0.1));
    CHECK(den.alphas.back() == doctest::Approx(0.9));

    const CvGrid ssl = CvGrid::defaults(Task::ssl);
    CHECK(ssl.betas.size() == 5);
}
