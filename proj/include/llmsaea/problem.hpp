#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace llmsaea {

/// Raised for invalid user configuration (unknown names, malformed files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Objective = std::function<double(std::span<const double>)>;

/// Box-constrained single-objective black-box problem.
///
/// Immutable after construction; evaluate() may be called concurrently.
class Problem {
public:
    Problem(std::string name, std::vector<double> lower, std::vector<double> upper, Objective objective,
            std::optional<double> optimum_value = std::nullopt);

    const std::string& name() const { return name_; }
    std::size_t dim() const { return lower_.size(); }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    std::optional<double> optimum_value() const { return optimum_; }

    double evaluate(std::span<const double> x) const;

    bool contains(std::span<const double> x) const;

private:
    std::string name_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    Objective objective_;
    std::optional<double> optimum_;
};

enum class ClassicalFunction { Ellipsoid, Rosenbrock, Ackley, Griewank, Rastrigin };

ClassicalFunction parse_classical(std::string_view name);
std::string_view to_string(ClassicalFunction f);

/// Standard formulation on its conventional SAEA box:
/// Ellipsoid and Rastrigin [-5.12, 5.12], Rosenbrock [-2.048, 2.048],
/// Ackley [-32.768, 32.768], Griewank [-600, 600].
Problem make_classical(ClassicalFunction f, std::size_t dim);
Problem make_classical(std::string_view name, std::size_t dim);

namespace functions {
// Raw formulas, exposed for composition and for tests.
double sphere(std::span<const double> x);
double ellipsoid(std::span<const double> x);      // sum_j j * x_j^2, j 1-based
double elliptic(std::span<const double> x);       // sum_j (1e6)^((j-1)/(D-1)) x_j^2
double rosenbrock(std::span<const double> x);
double rastrigin(std::span<const double> x);
double ackley(std::span<const double> x);
double griewank(std::span<const double> x);
double schwefel_1_2(std::span<const double> x);
double weierstrass(std::span<const double> x);
double hybrid(std::span<const double> x);
} // namespace functions

enum class BaseFunction { Sphere, Elliptic, Rosenbrock, Rastrigin, Ackley, Griewank, Schwefel12, Weierstrass, Hybrid };

BaseFunction parse_base_function(std::string_view name);
std::string_view to_string(BaseFunction f);
double evaluate_base(BaseFunction f, std::span<const double> z);

/// CEC-style transformed problem: f(x) = base(R (x - shift)) + bias.
struct ShiftedRotatedSpec {
    BaseFunction base = BaseFunction::Sphere;
    std::size_t dim = 0;
    double bias = 0.0;
    std::vector<double> shift;
    std::vector<double> rotation; // row-major dim x dim; empty means identity
    double lower = -100.0;
    double upper = 100.0;
    std::string name;
};

ShiftedRotatedSpec parse_shifted_rotated(std::string_view json_text);
Problem make_shifted_rotated(const ShiftedRotatedSpec& spec);
Problem load_shifted_rotated(const std::filesystem::path& spec_file);

/// Resolves "Ellipsoid" style names or "file:<path>" references.
Problem make_problem(std::string_view name, std::size_t dim);

} // namespace llmsaea
