#include "dpm/forcing.hpp"

#include "dpm/error.hpp"

#include <cmath>
#include <numbers>

namespace dpm {

namespace {

double apply(Factor f, double arg) {
    switch (f) {
    case Factor::one: return 1.0;
    case Factor::sin: return std::sin(arg);
    case Factor::cos: return std::cos(arg);
    }
    return 1.0;
}

}  // namespace

const char* to_string(Factor f) {
    switch (f) {
    case Factor::one: return "one";
    case Factor::sin: return "sin";
    case Factor::cos: return "cos";
    }
    return "one";
}

Factor factor_from_string(const std::string& name) {
    for (Factor f : {Factor::one, Factor::sin, Factor::cos}) {
        if (name == to_string(f)) return f;
    }
    throw InvalidInput("unknown forcing factor '" + name + "'");
}

ForcingSpec ForcingSpec::constant(const Vec3& value) {
    ForcingSpec spec;
    if (value != Vec3{}) spec.terms.push_back(ForcingTerm{value, {}, {}, Factor::one, 0.0});
    return spec;
}

ForcingSpec ForcingSpec::rotational(double amplitude) {
    const double a = amplitude * std::numbers::pi;
    ForcingSpec spec;
    spec.terms.push_back(
        ForcingTerm{{a, 0.0, 0.0}, {Factor::sin, Factor::cos, Factor::one}, {1.0, 1.0, 0.0}});
    spec.terms.push_back(
        ForcingTerm{{0.0, -a, 0.0}, {Factor::cos, Factor::sin, Factor::one}, {1.0, 1.0, 0.0}});
    return spec;
}

ForcingSpec ForcingSpec::confined_vortex(double amplitude) {
    const double a = amplitude * std::numbers::pi / 2.0;
    ForcingSpec spec;
    spec.terms.push_back(
        ForcingTerm{{a, 0.0, 0.0}, {Factor::one, Factor::sin, Factor::one}, {0.0, 2.0, 0.0}});
    spec.terms.push_back(
        ForcingTerm{{-a, 0.0, 0.0}, {Factor::cos, Factor::sin, Factor::one}, {2.0, 2.0, 0.0}});
    spec.terms.push_back(
        ForcingTerm{{0.0, -a, 0.0}, {Factor::sin, Factor::one, Factor::one}, {2.0, 0.0, 0.0}});
    spec.terms.push_back(
        ForcingTerm{{0.0, a, 0.0}, {Factor::sin, Factor::cos, Factor::one}, {2.0, 2.0, 0.0}});
    return spec;
}

double ForcingSpec::component(int axis, const Vec3& x, double t) const {
    double sum = 0.0;
    for (const auto& term : terms) {
        if (term.amplitude[axis] == 0.0) continue;
        double value = term.amplitude[axis] * apply(term.time, term.omega * t);
        for (int a = 0; a < 3; ++a) {
            value *= apply(term.space[a], term.wavenumber[a] * std::numbers::pi * x[a]);
        }
        sum += value;
    }
    return sum;
}

Vec3 ForcingSpec::operator()(const Vec3& x, double t) const {
    return {component(0, x, t), component(1, x, t), component(2, x, t)};
}

bool ForcingSpec::is_zero() const {
    for (const auto& term : terms) {
        if (term.amplitude != Vec3{}) return false;
    }
    return true;
}

ForcingSpec ForcingSpec::scaled(double factor) const {
    ForcingSpec out = *this;
    for (auto& term : out.terms) {
        for (double& a : term.amplitude) a *= factor;
    }
    return out;
}

}  // namespace dpm
