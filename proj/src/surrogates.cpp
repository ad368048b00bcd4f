#include "llmsaea/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace llmsaea {

TrainingSet TrainingSet::build(std::span<const std::vector<double>> inputs, std::span<const double> targets)
{
    if (inputs.size() != targets.size())
        throw std::invalid_argument("TrainingSet: inputs and targets differ in length");
    if (inputs.empty())
        throw TrainingError("TrainingSet: no data");

    // collapse duplicates, keep the lowest target, preserve first-seen order
    std::map<std::vector<double>, std::size_t> seen;
    std::vector<std::size_t> keep;
    std::vector<double> best_target;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto [it, inserted] = seen.emplace(inputs[i], keep.size());
        if (inserted) {
            keep.push_back(i);
            best_target.push_back(targets[i]);
        } else {
            best_target[it->second] = std::min(best_target[it->second], targets[i]);
        }
    }
    if (keep.size() < 2)
        throw TrainingError(fmt::format("TrainingSet: need at least 2 distinct points, got {}", keep.size()));

    const std::size_t n = keep.size();
    const std::size_t d = inputs[keep.front()].size();
    TrainingSet ts;
    Eigen::MatrixXd raw(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        if (inputs[keep[r]].size() != d)
            throw std::invalid_argument("TrainingSet: ragged inputs");
        for (std::size_t c = 0; c < d; ++c)
            raw(r, c) = inputs[keep[r]][c];
    }
    ts.offset_ = raw.colwise().minCoeff().transpose();
    ts.scale_ = (raw.colwise().maxCoeff().transpose() - ts.offset_);
    for (Eigen::Index c = 0; c < ts.scale_.size(); ++c)
        if (!(ts.scale_[c] > 0.0))
            ts.scale_[c] = 1.0;
    ts.inputs_ = (raw.rowwise() - ts.offset_.transpose()).array().rowwise() / ts.scale_.transpose().array();

    ts.raw_targets_ = Eigen::Map<const Eigen::VectorXd>(best_target.data(), static_cast<Eigen::Index>(n));
    ts.target_mean_ = ts.raw_targets_.mean();
    const double var = (ts.raw_targets_.array() - ts.target_mean_).square().sum() / static_cast<double>(n);
    ts.target_std_ = var > 0.0 ? std::sqrt(var) : 1.0;
    ts.targets_ = (ts.raw_targets_.array() - ts.target_mean_) / ts.target_std_;
    return ts;
}

TrainingSet TrainingSet::from_population(const Population& population)
{
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    xs.reserve(population.size());
    ys.reserve(population.size());
    for (const auto& m : population.members) {
        xs.push_back(m.x);
        ys.push_back(m.f);
    }
    return build(xs, ys);
}

Eigen::VectorXd TrainingSet::normalize(std::span<const double> x) const
{
    if (x.size() != dim())
        throw std::invalid_argument("TrainingSet::normalize: dimension mismatch");
    Eigen::VectorXd u(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        u[j] = (x[j] - offset_[j]) / scale_[j];
    return u;
}

std::vector<double> TrainingSet::denormalize(const Eigen::VectorXd& u) const
{
    std::vector<double> x(static_cast<std::size_t>(u.size()));
    for (Eigen::Index j = 0; j < u.size(); ++j)
        x[j] = offset_[j] + u[j] * scale_[j];
    return x;
}

// ---------------------------------------------------------------- RBF

RbfModel RbfModel::fit(TrainingSet data)
{
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index d = static_cast<Eigen::Index>(data.dim());
    const Eigen::Index m = n + d + 1;
    const auto& X = data.inputs();

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (X.row(i) - X.row(j)).norm();
            A(i, j) = A(j, i) = r * r * r;
        }
        A(i, n) = A(n, i) = 1.0;
        for (Eigen::Index c = 0; c < d; ++c)
            A(i, n + 1 + c) = A(n + 1 + c, i) = X(i, c);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs.head(n) = data.targets();

    RbfModel model;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd sol;
    if (lu.isInvertible()) {
        sol = lu.solve(rhs);
    } else {
        sol = A.completeOrthogonalDecomposition().solve(rhs);
        model.regularized_ = true;
    }
    model.residual_ = (A * sol - rhs).lpNorm<Eigen::Infinity>();
    if (!model.regularized_ && model.residual_ > 1e-8) {
        sol = A.completeOrthogonalDecomposition().solve(rhs);
        model.residual_ = (A * sol - rhs).lpNorm<Eigen::Infinity>();
        model.regularized_ = true;
    }
    if (!sol.allFinite())
        throw TrainingError("RBF: interpolation system produced non-finite weights");
    model.weights_ = sol.head(n);
    model.tail_ = sol.tail(d + 1);
    model.data_ = std::move(data);
    return model;
}

double RbfModel::predict(std::span<const double> x) const
{
    const Eigen::VectorXd u = data_.normalize(x);
    const auto& X = data_.inputs();
    double s = tail_[0] + tail_.tail(u.size()).dot(u);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double r = (X.row(i).transpose() - u).norm();
        s += weights_[i] * r * r * r;
    }
    return data_.target_mean() + data_.unstandardize(s);
}

// ---------------------------------------------------------------- PRS

std::size_t PrsModel::basis_size(std::size_t dim, int degree)
{
    return degree == 1 ? dim + 1 : 1 + dim + dim * (dim + 1) / 2;
}

Eigen::VectorXd PrsModel::features(const Eigen::VectorXd& u, int degree)
{
    const Eigen::Index d = u.size();
    Eigen::VectorXd phi(static_cast<Eigen::Index>(basis_size(static_cast<std::size_t>(d), degree)));
    Eigen::Index k = 0;
    phi[k++] = 1.0;
    for (Eigen::Index i = 0; i < d; ++i)
        phi[k++] = u[i];
    if (degree == 2)
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = i; j < d; ++j)
                phi[k++] = u[i] * u[j];
    return phi;
}

PrsModel PrsModel::fit(TrainingSet data, int degree)
{
    if (degree != 1 && degree != 2)
        throw ConfigError(fmt::format("PRS degree must be 1 or 2, got {}", degree));
    PrsModel model;
    const std::size_t n = data.size();
    if (degree == 2 && n < basis_size(data.dim(), 2)) {
        degree = 1;
        model.downgraded_ = true;
    }
    model.degree_ = degree;

    const Eigen::Index m = static_cast<Eigen::Index>(basis_size(data.dim(), degree));
    Eigen::MatrixXd Phi(static_cast<Eigen::Index>(n), m);
    for (Eigen::Index r = 0; r < Phi.rows(); ++r)
        Phi.row(r) = features(data.inputs().row(r).transpose(), degree).transpose();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
    if (qr.rank() == m) {
        model.coefficients_ = qr.solve(data.targets());
    } else {
        constexpr double kRidge = 1e-8;
        Eigen::MatrixXd gram = Phi.transpose() * Phi;
        gram.diagonal().array() += kRidge;
        model.coefficients_ = gram.ldlt().solve(Phi.transpose() * data.targets());
        model.ridge_ = true;
    }
    if (!model.coefficients_.allFinite())
        throw TrainingError("PRS: least-squares solve produced non-finite coefficients");
    model.data_ = std::move(data);
    return model;
}

double PrsModel::predict(std::span<const double> x) const
{
    const double s = features(data_.normalize(x), degree_).dot(coefficients_);
    return data_.target_mean() + data_.unstandardize(s);
}

// ---------------------------------------------------------------- KNN

KnnModel KnnModel::fit(TrainingSet data, std::size_t k)
{
    const std::size_t n = data.size();
    if (k == 0)
        k = std::min<std::size_t>(5, n);
    if (k < 1 || k > n)
        throw ConfigError(fmt::format("KNN: k = {} outside [1, {}]", k, n));
    KnnModel model;
    model.k_ = k;
    model.data_ = std::move(data);
    return model;
}

std::vector<KnnModel::Neighbor> KnnModel::neighbors(std::span<const double> x) const
{
    const Eigen::VectorXd u = data_.normalize(x);
    const auto& X = data_.inputs();
    std::vector<Neighbor> all(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        all[static_cast<std::size_t>(i)] = {static_cast<std::size_t>(i), (X.row(i).transpose() - u).norm()};
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k_), all.end(), closer);
    all.resize(k_);
    return all;
}

double KnnModel::predict(std::span<const double> x) const
{
    const auto nn = neighbors(x);
    const auto& y = data_.raw_targets();
    if (nn.front().distance == 0.0)
        return y[static_cast<Eigen::Index>(nn.front().index)];
    double wsum = 0.0, acc = 0.0;
    for (const auto& nb : nn) {
        const double w = 1.0 / nb.distance;
        wsum += w;
        acc += w * y[static_cast<Eigen::Index>(nb.index)];
    }
    return acc / wsum;
}

} // namespace llmsaea
