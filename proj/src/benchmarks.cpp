#include "llmsaea/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace llmsaea {

namespace {

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

Problem::Problem(std::string name, std::vector<double> lower, std::vector<double> upper, Objective objective,
                 std::optional<double> optimum_value)
    : name_(std::move(name)), lower_(std::move(lower)), upper_(std::move(upper)), objective_(std::move(objective)),
      optimum_(optimum_value)
{
    if (lower_.empty())
        throw ConfigError("problem '" + name_ + "' has zero dimensions");
    if (lower_.size() != upper_.size())
        throw ConfigError("problem '" + name_ + "' bound vectors differ in length");
    for (std::size_t j = 0; j < lower_.size(); ++j)
        if (!(lower_[j] < upper_[j]))
            throw ConfigError(fmt::format("problem '{}' has empty box in dimension {}", name_, j));
    if (!objective_)
        throw ConfigError("problem '" + name_ + "' has no objective");
}

double Problem::evaluate(std::span<const double> x) const
{
    if (x.size() != dim())
        throw std::invalid_argument(fmt::format("{}: expected {} coordinates, got {}", name_, dim(), x.size()));
    return objective_(x);
}

bool Problem::contains(std::span<const double> x) const
{
    if (x.size() != dim())
        return false;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j] < lower_[j] || x[j] > upper_[j])
            return false;
    return true;
}

namespace functions {

double sphere(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return s;
}

double ellipsoid(std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        s += static_cast<double>(j + 1) * x[j] * x[j];
    return s;
}

double elliptic(std::span<const double> x)
{
    const std::size_t d = x.size();
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double e = d > 1 ? static_cast<double>(j) / static_cast<double>(d - 1) : 0.0;
        s += std::pow(1e6, e) * x[j] * x[j];
    }
    return s;
}

double rosenbrock(std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
        const double a = x[j + 1] - x[j] * x[j];
        const double b = 1.0 - x[j];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

double rastrigin(std::span<const double> x)
{
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x)
        s += v * v - 10.0 * std::cos(kTwoPi * v);
    return s;
}

double ackley(std::span<const double> x)
{
    const double d = static_cast<double>(x.size());
    double sq = 0.0, cs = 0.0;
    for (double v : x) {
        sq += v * v;
        cs += std::cos(kTwoPi * v);
    }
    return -20.0 * std::exp(-0.2 * std::sqrt(sq / d)) - std::exp(cs / d) + 20.0 + std::numbers::e;
}

double griewank(std::span<const double> x)
{
    double s = 0.0, p = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        s += x[j] * x[j] / 4000.0;
        p *= std::cos(x[j] / std::sqrt(static_cast<double>(j + 1)));
    }
    return s - p + 1.0;
}

double schwefel_1_2(std::span<const double> x)
{
    double s = 0.0, partial = 0.0;
    for (double v : x) {
        partial += v;
        s += partial * partial;
    }
    return s;
}

double weierstrass(std::span<const double> x)
{
    constexpr double a = 0.5, b = 3.0;
    constexpr int kmax = 20;
    double s = 0.0, offset = 0.0;
    for (int k = 0; k <= kmax; ++k)
        offset += std::pow(a, k) * std::cos(std::numbers::pi * std::pow(b, k));
    for (double v : x)
        for (int k = 0; k <= kmax; ++k)
            s += std::pow(a, k) * std::cos(kTwoPi * std::pow(b, k) * (v + 0.5));
    return s - static_cast<double>(x.size()) * offset;
}

double hybrid(std::span<const double> x)
{
    // four contiguous segments: rastrigin | weierstrass | griewank | sphere
    using Fn = double (*)(std::span<const double>);
    constexpr Fn parts[] = {rastrigin, weierstrass, griewank, sphere};
    const std::size_t d = x.size();
    const std::size_t seg = (d + 3) / 4;
    double s = 0.0;
    for (std::size_t p = 0, start = 0; p < 4 && start < d; ++p, start += seg)
        s += parts[p](x.subspan(start, std::min(seg, d - start)));
    return s;
}

} // namespace functions

ClassicalFunction parse_classical(std::string_view name)
{
    const std::string n = lowercase(name);
    if (n == "ellipsoid")
        return ClassicalFunction::Ellipsoid;
    if (n == "rosenbrock")
        return ClassicalFunction::Rosenbrock;
    if (n == "ackley")
        return ClassicalFunction::Ackley;
    if (n == "griewank")
        return ClassicalFunction::Griewank;
    if (n == "rastrigin")
        return ClassicalFunction::Rastrigin;
    throw ConfigError("unknown classical benchmark '" + std::string(name) + "'");
}

std::string_view to_string(ClassicalFunction f)
{
    switch (f) {
    case ClassicalFunction::Ellipsoid: return "Ellipsoid";
    case ClassicalFunction::Rosenbrock: return "Rosenbrock";
    case ClassicalFunction::Ackley: return "Ackley";
    case ClassicalFunction::Griewank: return "Griewank";
    case ClassicalFunction::Rastrigin: return "Rastrigin";
    }
    return "?";
}

Problem make_classical(ClassicalFunction f, std::size_t dim)
{
    if (dim < 1)
        throw ConfigError("benchmark dimension must be at least 1");
    double bound = 0.0;
    Objective obj;
    switch (f) {
    case ClassicalFunction::Ellipsoid: bound = 5.12; obj = functions::ellipsoid; break;
    case ClassicalFunction::Rosenbrock: bound = 2.048; obj = functions::rosenbrock; break;
    case ClassicalFunction::Ackley: bound = 32.768; obj = functions::ackley; break;
    case ClassicalFunction::Griewank: bound = 600.0; obj = functions::griewank; break;
    case ClassicalFunction::Rastrigin: bound = 5.12; obj = functions::rastrigin; break;
    }
    return Problem(std::string(to_string(f)), std::vector<double>(dim, -bound), std::vector<double>(dim, bound),
                   std::move(obj), 0.0);
}

Problem make_classical(std::string_view name, std::size_t dim) { return make_classical(parse_classical(name), dim); }

BaseFunction parse_base_function(std::string_view name)
{
    const std::string n = lowercase(name);
    if (n == "sphere")
        return BaseFunction::Sphere;
    if (n == "elliptic")
        return BaseFunction::Elliptic;
    if (n == "rosenbrock")
        return BaseFunction::Rosenbrock;
    if (n == "rastrigin")
        return BaseFunction::Rastrigin;
    if (n == "ackley")
        return BaseFunction::Ackley;
    if (n == "griewank")
        return BaseFunction::Griewank;
    if (n == "schwefel_1_2" || n == "schwefel")
        return BaseFunction::Schwefel12;
    if (n == "weierstrass")
        return BaseFunction::Weierstrass;
    if (n == "hybrid")
        return BaseFunction::Hybrid;
    throw ConfigError("unknown base function '" + std::string(name) + "'");
}

std::string_view to_string(BaseFunction f)
{
    switch (f) {
    case BaseFunction::Sphere: return "sphere";
    case BaseFunction::Elliptic: return "elliptic";
    case BaseFunction::Rosenbrock: return "rosenbrock";
    case BaseFunction::Rastrigin: return "rastrigin";
    case BaseFunction::Ackley: return "ackley";
    case BaseFunction::Griewank: return "griewank";
    case BaseFunction::Schwefel12: return "schwefel_1_2";
    case BaseFunction::Weierstrass: return "weierstrass";
    case BaseFunction::Hybrid: return "hybrid";
    }
    return "?";
}

double evaluate_base(BaseFunction f, std::span<const double> z)
{
    switch (f) {
    case BaseFunction::Sphere: return functions::sphere(z);
    case BaseFunction::Elliptic: return functions::elliptic(z);
    case BaseFunction::Rosenbrock: {
        // CEC convention: optimum of the shifted Rosenbrock sits at z = 0
        std::vector<double> shifted(z.begin(), z.end());
        for (double& v : shifted)
            v += 1.0;
        return functions::rosenbrock(shifted);
    }
    case BaseFunction::Rastrigin: return functions::rastrigin(z);
    case BaseFunction::Ackley: return functions::ackley(z);
    case BaseFunction::Griewank: return functions::griewank(z);
    case BaseFunction::Schwefel12: return functions::schwefel_1_2(z);
    case BaseFunction::Weierstrass: return functions::weierstrass(z);
    case BaseFunction::Hybrid: return functions::hybrid(z);
    }
    return 0.0;
}

ShiftedRotatedSpec parse_shifted_rotated(std::string_view json_text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed shifted/rotated spec: ") + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("shifted/rotated spec must be a JSON object");

    ShiftedRotatedSpec spec;
    try {
        spec.base = parse_base_function(doc.at("base").get<std::string>());
        spec.dim = doc.at("dim").get<std::size_t>();
        spec.bias = doc.value("bias", 0.0);
        spec.shift = doc.at("shift").get<std::vector<double>>();
        if (doc.contains("rotation") && !doc["rotation"].is_null())
            spec.rotation = doc["rotation"].get<std::vector<double>>();
        spec.lower = doc.value("lower", -100.0);
        spec.upper = doc.value("upper", 100.0);
        spec.name = doc.value("name", std::string("shifted_") + std::string(to_string(spec.base)));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed shifted/rotated spec: ") + e.what());
    }

    if (spec.dim == 0)
        throw ConfigError("shifted/rotated spec: dim must be positive");
    if (spec.shift.size() != spec.dim)
        throw ConfigError(fmt::format("shifted/rotated spec: shift has {} entries, dim is {}", spec.shift.size(), spec.dim));
    if (!spec.rotation.empty() && spec.rotation.size() != spec.dim * spec.dim)
        throw ConfigError(fmt::format("shifted/rotated spec: rotation has {} entries, expected {}x{}",
                                      spec.rotation.size(), spec.dim, spec.dim));
    if (!(spec.lower < spec.upper))
        throw ConfigError("shifted/rotated spec: lower must be below upper");
    return spec;
}

Problem make_shifted_rotated(const ShiftedRotatedSpec& spec)
{
    const std::size_t d = spec.dim;
    if (spec.shift.size() != d || (!spec.rotation.empty() && spec.rotation.size() != d * d))
        throw ConfigError("shifted/rotated spec: dimension mismatch");

    auto shared = std::make_shared<const ShiftedRotatedSpec>(spec);
    Objective obj = [shared](std::span<const double> x) {
        const std::size_t n = shared->dim;
        std::vector<double> diff(n), z(n);
        for (std::size_t j = 0; j < n; ++j)
            diff[j] = x[j] - shared->shift[j];
        if (shared->rotation.empty()) {
            z = diff;
        } else {
            for (std::size_t r = 0; r < n; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < n; ++c)
                    acc += shared->rotation[r * n + c] * diff[c];
                z[r] = acc;
            }
        }
        return evaluate_base(shared->base, z) + shared->bias;
    };
    return Problem(spec.name, std::vector<double>(d, spec.lower), std::vector<double>(d, spec.upper), std::move(obj),
                   spec.bias);
}

Problem load_shifted_rotated(const std::filesystem::path& spec_file)
{
    std::ifstream in(spec_file);
    if (!in)
        throw ConfigError("cannot open shifted/rotated spec '" + spec_file.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return make_shifted_rotated(parse_shifted_rotated(buf.str()));
}

Problem make_problem(std::string_view name, std::size_t dim)
{
    constexpr std::string_view prefix = "file:";
    if (name.starts_with(prefix)) {
        Problem p = load_shifted_rotated(std::filesystem::path(std::string(name.substr(prefix.size()))));
        if (dim != 0 && p.dim() != dim)
            throw ConfigError(fmt::format("problem file '{}' has dim {}, requested {}", name, p.dim(), dim));
        return p;
    }
    return make_classical(name, dim);
}

} // namespace llmsaea
