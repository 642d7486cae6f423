#pragma once

// Test-only numerical oracles. These deliberately avoid the library's solver
// paths: golden-section search instead of Newton, RK4 instead of closed
// forms, dense double sums instead of recursions.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

// Golden-section minimizer of a convex function on [lo, hi].
inline double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                              double tol = 1e-12, int max_iter = 500) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Golden section alone bottoms out near sqrt(machine eps); refine by
// bisecting the sign of a central-difference derivative, which is accurate to
// ~eps^(2/3) in function units.
inline double convex_minimize(const std::function<double(double)>& f, double lo, double hi) {
    const double x0 = golden_minimize(f, lo, hi, 1e-9);
    const double scale = 1.0 + std::abs(x0);
    const double h = 3e-6 * scale;
    const auto slope = [&](double x) { return f(x + h) - f(x - h); };
    double a = x0 - 1e-3 * scale, b = x0 + 1e-3 * scale;
    a = std::max(a, lo + h);
    b = std::min(b, hi - h);
    // Widen until the derivative changes sign across [a, b].
    for (int i = 0; i < 60 && !(slope(a) < 0.0 && slope(b) > 0.0); ++i) {
        a = std::max(lo + h, a - (b - a));
        b = std::min(hi - h, b + (b - a));
    }
    if (!(slope(a) < 0.0 && slope(b) > 0.0)) return x0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (a + b);
        if (slope(mid) < 0.0) a = mid;
        else b = mid;
    }
    return 0.5 * (a + b);
}

// Classical fixed-step RK4 for dx/dt = f(t, x).
inline double rk4(const std::function<double(double, double)>& f, double x0, double t0, double t1,
                  int steps) {
    double x = x0;
    const double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * h;
        const double k1 = f(t, x);
        const double k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
        const double k4 = f(t + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// Bisection on a sign-changing function.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Brute-force integrated-form intensity: initial decay + full double sum over
// events (O(grid * events)).
inline double intensity_double_sum(double alpha, double lambda0, double lambda_inf,
                                   const std::vector<std::pair<double, double>>& d_and_times,
                                   double t) {
    double lam = std::exp(-alpha * t) * lambda0 + (1.0 - std::exp(-alpha * t)) * lambda_inf;
    for (const auto& [dlj, s] : d_and_times) {
        if (s <= t) lam += dlj * std::exp(-alpha * (t - s));
    }
    return lam;
}

// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace oracles
