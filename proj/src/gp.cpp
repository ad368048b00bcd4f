#include "llmsaea/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "llmsaea/rng.hpp"

namespace llmsaea {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTinyKernel = 1e-200;

// Noise-free SE kernel matrix.
Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& inv_sq_ls, double signal)
{
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = signal;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double q = ((X.row(i) - X.row(j)).array().square() * inv_sq_ls.transpose().array()).sum();
            K(i, j) = K(j, i) = signal * std::exp(-0.5 * q);
        }
    }
    return K;
}

Eigen::VectorXd inverse_squared_lengthscales(const GPParams& params, Eigen::Index d)
{
    return (-2.0 * params.head(d).array()).exp().matrix();
}

} // namespace

namespace {

// Squared coordinate differences of every pair i < j, one row per pair.
struct PairTable {
    Eigen::MatrixXd sq_diff; // pairs x d
    std::vector<Eigen::Index> first, second;

    explicit PairTable(const Eigen::MatrixXd& X)
    {
        const Eigen::Index n = X.rows();
        const Eigen::Index pairs = n * (n - 1) / 2;
        sq_diff.resize(pairs, X.cols());
        first.reserve(static_cast<std::size_t>(pairs));
        second.reserve(static_cast<std::size_t>(pairs));
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j, ++p) {
                sq_diff.row(p) = (X.row(i) - X.row(j)).array().square();
                first.push_back(i);
                second.push_back(j);
            }
    }
};

// Factorization at one hyperparameter point, kept so the gradient can follow
// an accepted value without refactorizing.
struct LikelihoodState {
    GPParams params;
    Eigen::VectorXd inv_sq;
    double signal = 0.0;
    Eigen::ArrayXd kv;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;
    Eigen::VectorXd alpha;
    double value = kNegInf;
};

double evaluate_likelihood(const TrainingSet& data, const PairTable& pairs, const GPParams& params, double nugget,
                           LikelihoodState& st)
{
    const auto& y = data.targets();
    const Eigen::Index n = data.inputs().rows();
    const Eigen::Index d = data.inputs().cols();
    if (params.size() != d + 1)
        throw std::invalid_argument("gp_log_marginal_likelihood: parameter vector has wrong length");

    st.params = params;
    st.value = kNegInf;
    st.inv_sq = inverse_squared_lengthscales(params, d);
    st.signal = std::exp(params[d]);
    st.kv = st.signal * (-0.5 * (pairs.sq_diff * st.inv_sq).array()).exp();
    // subnormal kernel entries carry no information and stall the factorization
    st.kv = (st.kv < kTinyKernel).select(0.0, st.kv);

    Eigen::MatrixXd K(n, n);
    K.diagonal().setConstant(st.signal + nugget);
    for (std::size_t p = 0; p < pairs.first.size(); ++p)
        K(pairs.second[p], pairs.first[p]) = st.kv[static_cast<Eigen::Index>(p)];

    st.llt.compute(K);
    if (st.llt.info() != Eigen::Success)
        return kNegInf;
    st.alpha = st.llt.solve(y);
    const double log_det_half = st.llt.matrixLLT().diagonal().array().log().sum();
    const double lml =
        -0.5 * y.dot(st.alpha) - log_det_half - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (std::isfinite(lml))
        st.value = lml;
    return st.value;
}

void likelihood_gradient(const PairTable& pairs, const LikelihoodState& st, Eigen::VectorXd& gradient)
{
    const auto& L = st.llt.matrixLLT();
    const Eigen::Index n = L.rows();
    const Eigen::Index d = st.inv_sq.size();
    // K^-1 = L^-T L^-1, lower triangle only
    Eigen::MatrixXd Linv = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Linv(j, j) = 1.0;
        auto col = Linv.col(j).tail(n - j);
        L.bottomRightCorner(n - j, n - j).triangularView<Eigen::Lower>().solveInPlace(col);
    }
    Eigen::MatrixXd Kinv = Eigen::MatrixXd::Zero(n, n);
    Kinv.selfadjointView<Eigen::Lower>().rankUpdate(Linv.transpose());
    // M = (alpha alpha^T - K^-1) o Kf, off-diagonal pairs counted twice
    Eigen::VectorXd m(st.kv.size());
    for (std::size_t p = 0; p < pairs.first.size(); ++p) {
        const Eigen::Index i = pairs.first[p], j = pairs.second[p];
        m[static_cast<Eigen::Index>(p)] = (st.alpha[i] * st.alpha[j] - Kinv(j, i)) * st.kv[static_cast<Eigen::Index>(p)];
    }
    const double diag = st.signal * (st.alpha.squaredNorm() - Kinv.trace());
    gradient.resize(d + 1);
    gradient.head(d) = (pairs.sq_diff.transpose() * m).cwiseProduct(st.inv_sq);
    gradient[d] = 0.5 * diag + m.sum();
}

double log_marginal_likelihood(const TrainingSet& data, const PairTable& pairs, const GPParams& params, double nugget,
                               Eigen::VectorXd* gradient)
{
    LikelihoodState st;
    const double v = evaluate_likelihood(data, pairs, params, nugget, st);
    if (gradient && std::isfinite(v))
        likelihood_gradient(pairs, st, *gradient);
    return v;
}

} // namespace

double gp_log_marginal_likelihood(const TrainingSet& data, const GPParams& params, double nugget,
                                  Eigen::VectorXd* gradient)
{
    return log_marginal_likelihood(data, PairTable(data.inputs()), params, nugget, gradient);
}

BoxMaximizeResult maximize_in_box(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fn,
                                  Eigen::VectorXd x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                  std::size_t max_evaluations)
{
    const Eigen::Index n = x.size();
    x = x.cwiseMax(lower).cwiseMin(upper);
    Eigen::VectorXd g(n), g_new(n);
    double f = fn(x, &g);
    std::size_t evals = 1;
    if (!std::isfinite(f))
        return {x, f, evals};

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n); // inverse Hessian of -f
    auto free_direction = [&](Eigen::VectorXd dir) {
        for (Eigen::Index i = 0; i < n; ++i)
            if ((x[i] <= lower[i] && dir[i] < 0.0) || (x[i] >= upper[i] && dir[i] > 0.0))
                dir[i] = 0.0;
        return dir;
    };

    bool fresh_h = true;
    while (evals < max_evaluations) {
        const Eigen::VectorXd pg = free_direction(g);
        if (pg.lpNorm<Eigen::Infinity>() < 1e-4)
            break;
        Eigen::VectorXd dir = free_direction(H * g);
        if (dir.dot(g) <= 0.0) {
            dir = pg;
            H.setIdentity();
            fresh_h = true;
        }
        const double longest = dir.lpNorm<Eigen::Infinity>();
        double step = longest > 2.0 ? 2.0 / longest : 1.0;

        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = kNegInf;
        for (int tries = 0; tries < 30 && evals < max_evaluations; ++tries) {
            x_new = (x + step * dir).cwiseMax(lower).cwiseMin(upper);
            f_new = fn(x_new, nullptr);
            ++evals;
            if (std::isfinite(f_new) && f_new >= f + 1e-4 * g.dot(x_new - x) && f_new >= f) {
                fn(x_new, &g_new);
                accepted = true;
                break;
            }
            // maximizer of the quadratic through f, the slope and f_new, kept in [0.1, 0.5] of the step
            const double slope = g.dot(dir);
            double next = 0.5 * step;
            if (std::isfinite(f_new)) {
                const double curvature = (f_new - f - slope * step) / (step * step);
                if (curvature < 0.0)
                    next = std::clamp(-slope / (2.0 * curvature), 0.1 * step, 0.5 * step);
            }
            step = next;
        }
        if (!accepted) {
            if (fresh_h)
                break;
            H.setIdentity();
            fresh_h = true;
            continue;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g - g_new; // gradient change of -f
        const double improvement = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            if (fresh_h)
                H *= sy / yv.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
            fresh_h = false;
        }
        if (improvement < 1e-6 * (1.0 + std::abs(f)))
            break;
    }
    return {x, f, evals};
}

GPModel GPModel::fit(TrainingSet data, const GPConfig& config, std::uint64_t seed, const GPParams* warm_start)
{
    const Eigen::Index d = static_cast<Eigen::Index>(data.dim());
    Eigen::VectorXd lower(d + 1), upper(d + 1);
    lower.head(d).setConstant(std::log(config.min_lengthscale));
    upper.head(d).setConstant(std::log(config.max_lengthscale));
    lower[d] = std::log(config.min_signal_variance);
    upper[d] = std::log(config.max_signal_variance);

    Rng rng(seed);
    std::vector<GPParams> starts;
    GPParams first(d + 1);
    first.head(d).setConstant(std::log(0.5 * std::sqrt(static_cast<double>(d))));
    first[d] = 0.0;
    if (warm_start && warm_start->size() == d + 1 && warm_start->allFinite())
        first = *warm_start;
    starts.push_back(first.cwiseMax(lower).cwiseMin(upper));
    for (std::size_t s = 1; s < std::max<std::size_t>(config.restarts, 1); ++s) {
        GPParams p(d + 1);
        for (Eigen::Index c = 0; c < d; ++c)
            p[c] = rng.uniform(std::log(0.05), std::log(5.0)) + std::log(std::sqrt(static_cast<double>(d)));
        p[d] = rng.uniform(std::log(0.5), std::log(2.0));
        starts.push_back(p.cwiseMax(lower).cwiseMin(upper));
    }

    const PairTable pairs(data.inputs());
    // smallest nugget that factorizes at some start
    double nugget = config.initial_nugget;
    for (;;) {
        bool ok = false;
        for (const auto& p : starts)
            ok = ok || std::isfinite(log_marginal_likelihood(data, pairs, p, nugget, nullptr));
        if (ok)
            break;
        nugget *= 10.0;
        if (nugget > config.max_nugget * (1.0 + 1e-9))
            throw TrainingError(fmt::format("GP: kernel matrix not positive definite with nugget up to {}",
                                            config.max_nugget));
    }

    GPModel model;
    model.nugget_ = nugget;
    LikelihoodState state;
    const auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
        // a gradient request for the last evaluated point reuses its factorization
        if (!(grad && state.params.size() == p.size() && state.params == p))
            evaluate_likelihood(data, pairs, p, nugget, state);
        if (grad && std::isfinite(state.value))
            likelihood_gradient(pairs, state, *grad);
        return state.value;
    };
    double best = kNegInf;
    GPParams best_params = starts.front();
    // every start gets a short probe, the leader continues up to the per-start cap
    const std::size_t probe = config.probe_evaluations == 0
                                  ? config.max_evaluations
                                  : std::min(config.probe_evaluations, config.max_evaluations);
    std::size_t leader_evals = 0;
    for (const auto& p : starts) {
        model.start_lml_.push_back(log_marginal_likelihood(data, pairs, p, nugget, nullptr));
        if (!std::isfinite(model.start_lml_.back()))
            continue;
        auto res = maximize_in_box(objective, p, lower, upper, probe);
        if (res.value > best) {
            best = res.value;
            best_params = res.x;
            leader_evals = res.evaluations;
        }
    }
    if (std::isfinite(best) && leader_evals >= probe && probe < config.max_evaluations) {
        auto res = maximize_in_box(objective, best_params, lower, upper, config.max_evaluations - leader_evals);
        if (res.value > best) {
            best = res.value;
            best_params = res.x;
        }
    }
    model.params_ = best_params;
    model.lml_ = best;
    model.data_ = std::move(data);
    model.factorize();
    return model;
}

GPModel GPModel::with_params(TrainingSet data, const GPParams& params, const GPConfig& config)
{
    GPModel model;
    model.params_ = params;
    model.nugget_ = config.initial_nugget;
    model.data_ = std::move(data);
    for (;;) {
        model.lml_ = gp_log_marginal_likelihood(model.data_, params, model.nugget_);
        if (std::isfinite(model.lml_))
            break;
        model.nugget_ *= 10.0;
        if (model.nugget_ > config.max_nugget * (1.0 + 1e-9))
            throw TrainingError("GP: kernel matrix not positive definite at the given hyperparameters");
    }
    model.factorize();
    return model;
}

void GPModel::factorize()
{
    const Eigen::Index d = static_cast<Eigen::Index>(data_.dim());
    inv_sq_lengthscale_ = inverse_squared_lengthscales(params_, d);
    signal_variance_ = std::exp(params_[d]);
    Eigen::MatrixXd K = se_kernel(data_.inputs(), inv_sq_lengthscale_, signal_variance_);
    K.diagonal().array() += nugget_;
    chol_.compute(K);
    if (chol_.info() != Eigen::Success)
        throw TrainingError(fmt::format("GP: Cholesky failed at the optimum with nugget {}", nugget_));
    alpha_ = chol_.solve(data_.targets());
}

GPPrediction GPModel::predict(std::span<const double> x) const
{
    const Eigen::VectorXd u = data_.normalize(x);
    const auto& X = data_.inputs();
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double q = ((X.row(i).transpose() - u).array().square() * inv_sq_lengthscale_.array()).sum();
        k[i] = signal_variance_ * std::exp(-0.5 * q);
    }
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(k);
    const double var = std::max(0.0, signal_variance_ - v.squaredNorm());
    return {data_.target_mean() + data_.unstandardize(mean), data_.unstandardize(std::sqrt(var))};
}

} // namespace llmsaea
