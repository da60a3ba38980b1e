#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mobrate {

struct QuadResult {
    double value = 0.0;
    double error = 0.0; // absolute error estimate
    bool converged = true;
};

// Adaptive 31-point Gauss-Kronrod on [a, b].
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel_tol = 1e-9, unsigned max_depth = 25) {
    if (a == b) return {};
    double err = 0.0, l1 = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &err, &l1);
    const bool ok = std::isfinite(v) && err <= rel_tol * std::max(l1, std::numeric_limits<double>::min()) * 1.000001;
    return {v, err, ok};
}

// Accumulates error and convergence from inner integrals of a nested scheme.
struct NestedTracker {
    double worst_rel_error = 0.0;
    bool converged = true;

    double take(const QuadResult& r) {
        if (r.value != 0.0) worst_rel_error = std::max(worst_rel_error, r.error / std::abs(r.value));
        converged = converged && r.converged;
        return r.value;
    }

    QuadResult finish(const QuadResult& outer) const {
        return {outer.value, outer.error + worst_rel_error * std::abs(outer.value), outer.converged && converged};
    }

    // Judges the nested result by its propagated error rather than by every inner flag;
    // inner integrals over slivers can miss their own relative target harmlessly.
    QuadResult finish(const QuadResult& outer, double rel_tol, double slack = 10.0) const {
        const double err = outer.error + worst_rel_error * std::abs(outer.value);
        return {outer.value, err, std::isfinite(outer.value) && err <= slack * rel_tol * std::abs(outer.value)};
    }
};

} // namespace mobrate
