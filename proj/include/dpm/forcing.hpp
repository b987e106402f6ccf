#pragma once

#include "dpm/lattice.hpp"

#include <array>
#include <string>
#include <vector>

namespace dpm {

enum class Factor { one, sin, cos };

const char* to_string(Factor f);
Factor factor_from_string(const std::string& name);

/// amplitude * prod_a f_a(k_a pi x_a) * g(omega t).
struct ForcingTerm {
    Vec3 amplitude{};
    std::array<Factor, 3> space{Factor::one, Factor::one, Factor::one};
    std::array<double, 3> wavenumber{};
    Factor time = Factor::one;
    double omega = 0.0;

    bool operator==(const ForcingTerm&) const = default;
};

/// Body force as a finite sum of separable sinusoidal terms.
struct ForcingSpec {
    std::vector<ForcingTerm> terms;

    static ForcingSpec constant(const Vec3& value);
    /// (pi sin(pi x) cos(pi y), -pi cos(pi x) sin(pi y)): solenoidal, tangential
    /// on the walls of the unit square.
    static ForcingSpec rotational(double amplitude = 1.0);

    /// Curl of psi = sin^2(pi x) sin^2(pi y): solenoidal and zero on the
    /// walls of the unit square.
    static ForcingSpec confined_vortex(double amplitude = 1.0);

    Vec3 operator()(const Vec3& x, double t) const;
    double component(int axis, const Vec3& x, double t) const;
    bool is_zero() const;
    ForcingSpec scaled(double factor) const;

    bool operator==(const ForcingSpec&) const = default;
};

}  // namespace dpm
