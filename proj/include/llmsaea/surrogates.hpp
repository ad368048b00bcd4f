#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llmsaea/evolution.hpp"

namespace llmsaea {

/// Raised when a surrogate cannot be fitted at all.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deduplicated training data in normalized coordinates.
///
/// Inputs are mapped per dimension onto [0, 1] using the data range
/// (constant dimensions get unit scale); targets are standardized.
/// Duplicate inputs collapse to the lowest target.
class TrainingSet {
public:
    static TrainingSet build(std::span<const std::vector<double>> inputs, std::span<const double> targets);
    static TrainingSet from_population(const Population& population);

    std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(inputs_.cols()); }

    /// n x D normalized inputs, one row per point.
    const Eigen::MatrixXd& inputs() const { return inputs_; }
    /// Standardized targets.
    const Eigen::VectorXd& targets() const { return targets_; }
    /// Targets in original units.
    const Eigen::VectorXd& raw_targets() const { return raw_targets_; }

    Eigen::VectorXd normalize(std::span<const double> x) const;
    std::vector<double> denormalize(const Eigen::VectorXd& u) const;
    double unstandardize(double y) const { return y * target_std_; }
    double target_mean() const { return target_mean_; }
    double target_std() const { return target_std_; }

private:
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd targets_;
    Eigen::VectorXd raw_targets_;
    Eigen::VectorXd offset_;
    Eigen::VectorXd scale_;
    double target_mean_ = 0.0;
    double target_std_ = 1.0;
};

/// Cubic RBF interpolant phi(r) = r^3 with a linear polynomial tail.
class RbfModel {
public:
    static RbfModel fit(TrainingSet data);

    double predict(std::span<const double> x) const;
    /// True when the augmented system was singular and a minimum-norm
    /// least-squares solution was used instead of the exact solve.
    bool regularized() const { return regularized_; }
    double residual() const { return residual_; }
    const TrainingSet& data() const { return data_; }

private:
    TrainingSet data_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd tail_; // constant, then one coefficient per dimension
    bool regularized_ = false;
    double residual_ = 0.0;
};

/// Polynomial response surface over the full monomial basis of degree 1 or 2.
class PrsModel {
public:
    /// Degree 2 drops to degree 1 when there are fewer points than basis terms.
    static PrsModel fit(TrainingSet data, int degree = 2);

    double predict(std::span<const double> x) const;
    int degree() const { return degree_; }
    bool downgraded() const { return downgraded_; }
    bool ridge() const { return ridge_; }
    const Eigen::VectorXd& coefficients() const { return coefficients_; }

    static std::size_t basis_size(std::size_t dim, int degree);
    static Eigen::VectorXd features(const Eigen::VectorXd& u, int degree);

private:
    TrainingSet data_;
    Eigen::VectorXd coefficients_;
    int degree_ = 2;
    bool downgraded_ = false;
    bool ridge_ = false;
};

/// Inverse-distance-weighted k-nearest-neighbour regressor in normalized space.
class KnnModel {
public:
    struct Neighbor {
        std::size_t index;
        double distance;
    };

    /// k = 0 selects the default min(5, n).
    static KnnModel fit(TrainingSet data, std::size_t k = 0);

    double predict(std::span<const double> x) const;
    /// The k nearest training points ordered by (distance, index).
    std::vector<Neighbor> neighbors(std::span<const double> x) const;

    std::size_t k() const { return k_; }
    const TrainingSet& data() const { return data_; }

private:
    TrainingSet data_;
    std::size_t k_ = 1;
};

} // namespace llmsaea
