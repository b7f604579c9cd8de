// types.hpp: shared numeric aliases and error types

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vmisim {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Cartesian axis label (0 -> x, 1 -> y, 2 -> z).
inline char axis_name(int nu) { return "xyz"[nu]; }

inline int axis_index(char c) {
    switch (c) {
    case 'x': return 0;
    case 'y': return 1;
    case 'z': return 2;
    default: throw std::invalid_argument(std::string("unknown Cartesian index '") + c + "'");
    }
}

// Invalid physical input (model, pulse, geometry). Maps to CLI exit code 2.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Schema violations collected while parsing a run configuration. Exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string out;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) out += "; ";
            out += p[i];
        }
        return out;
    }
    std::vector<std::string> problems_;
};

// Singular resolvents, non-converged quadrature. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::string term = {})
        : std::runtime_error(term.empty() ? what : what + " [term " + term + "]"),
          term_(std::move(term)) {}

    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

} // namespace vmisim
