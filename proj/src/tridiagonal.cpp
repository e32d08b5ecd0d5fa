#include "robustqm/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robustqm/errors.hpp"

namespace robustqm::linalg {

namespace {

double pivot_guard(const SymTridiag& t) {
    double scale = 0.0;
    for (double d : t.diag) scale = std::max(scale, std::abs(d));
    for (double o : t.off) scale = std::max(scale, std::abs(o));
    return std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
}

} // namespace

std::size_t count_below(const SymTridiag& t, double x) {
    const double guard = pivot_guard(t) * 1e-3;
    std::size_t count = 0;
    double q = t.diag[0] - x;
    for (std::size_t i = 0;; ++i) {
        if (std::abs(q) < guard) q = -guard;
        if (q < 0.0) ++count;
        if (i + 1 == t.size()) break;
        q = t.diag[i + 1] - x - t.off[i] * t.off[i] / q;
    }
    return count;
}

std::vector<double> lowest_eigenvalues(const SymTridiag& t, std::size_t k) {
    const std::size_t n = t.size();
    if (n == 0 || t.off.size() + 1 != n) throw DomainError("malformed tridiagonal matrix");
    k = std::min(k, n);
    // Gershgorin enclosure
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.off[i]) : 0.0);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    const double span = std::max(hi - lo, 1.0);
    lo -= 1e-10 * span;
    hi += 1e-10 * span;

    std::vector<double> values(k);
    double floor_bound = lo;
    for (std::size_t j = 0; j < k; ++j) {
        // smallest x with count_below(x) > j
        double a = floor_bound, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            if (count_below(t, mid) > j)
                b = mid;
            else
                a = mid;
            if (b - a <= 2.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(a), std::abs(b)))
                break;
        }
        values[j] = 0.5 * (a + b);
        floor_bound = a;
    }
    return values;
}

std::vector<double> multiply(const SymTridiag& t, std::span<const double> x) {
    const std::size_t n = t.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = t.diag[i] * x[i];
        if (i > 0) acc += t.off[i - 1] * x[i - 1];
        if (i + 1 < n) acc += t.off[i] * x[i + 1];
        y[i] = acc;
    }
    return y;
}

std::vector<double> eigenvector(const SymTridiag& t, double eigenvalue, int max_iter) {
    const std::size_t n = t.size();
    const double guard = pivot_guard(t);
    // shift slightly off the eigenvalue so the factorization stays regular
    const double shift = eigenvalue + 8.0 * guard;

    // LU of (T - shift) with partial pivoting; the pivoted factor has a
    // second super-diagonal.
    std::vector<double> d(n), u1(n, 0.0), u2(n, 0.0), l(n, 0.0);
    std::vector<bool> swapped(n, false);
    {
        std::vector<double> a(t.diag);
        for (auto& v : a) v -= shift;
        double cur_d = a[0];
        double cur_u = n > 1 ? t.off[0] : 0.0;
        double cur_u2 = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double below = t.off[i];
            const double next_d = a[i + 1];
            const double next_u = i + 2 < n ? t.off[i + 1] : 0.0;
            if (std::abs(cur_d) >= std::abs(below)) {
                if (cur_d == 0.0) cur_d = guard;
                const double m = below / cur_d;
                d[i] = cur_d;
                u1[i] = cur_u;
                u2[i] = cur_u2;
                l[i] = m;
                cur_d = next_d - m * cur_u;
                cur_u = next_u;
                cur_u2 = 0.0;
            } else {
                swapped[i] = true;
                const double m = cur_d / below;
                d[i] = below;
                u1[i] = next_d;
                u2[i] = next_u;
                l[i] = m;
                cur_d = cur_u - m * next_d;
                cur_u = -m * next_u;
                cur_u2 = 0.0;
            }
        }
        d[n - 1] = cur_d == 0.0 ? guard : cur_d;
    }

    auto solve = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (swapped[i]) std::swap(x[i], x[i + 1]);
            x[i + 1] -= l[i] * x[i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = x[ii];
            if (ii + 1 < n) acc -= u1[ii] * x[ii + 1];
            if (ii + 2 < n) acc -= u2[ii] * x[ii + 2];
            double piv = d[ii];
            if (std::abs(piv) < guard) piv = std::copysign(guard, piv == 0.0 ? 1.0 : piv);
            x[ii] = acc / piv;
        }
    };
    auto normalize = [](std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        s = std::sqrt(s);
        for (double& v : x) v /= s;
    };

    std::vector<double> x(n);
    // deterministic, non-symmetric start vector
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    normalize(x);

    double scale = 0.0;
    for (double v : t.diag) scale = std::max(scale, std::abs(v));
    const double tol = 1e-9 * std::max(scale, 1.0);
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        solve(x);
        normalize(x);
        auto tx = multiply(t, x);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(tx[i] - eigenvalue * x[i]));
        if (it >= 1 && residual <= tol) return x;
    }
    throw ConvergenceError("inverse iteration residual " + std::to_string(residual) +
                           " above tolerance for eigenvalue " + std::to_string(eigenvalue));
}

template <class T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper,
                       std::span<T> rhs) {
    const std::size_t n = diag.size();
    if (n == 0 || lower.size() + 1 != n || upper.size() + 1 != n || rhs.size() != n)
        throw LinearSolveError("tridiagonal system has inconsistent sizes");
    std::vector<T> c(n);
    T beta = diag[0];
    if (std::abs(beta) == 0.0) throw LinearSolveError("vanishing pivot at row 0");
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if (std::abs(beta) == 0.0 || !std::isfinite(std::abs(beta)))
            throw LinearSolveError("vanishing pivot at row " + std::to_string(i));
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

template void solve_tridiagonal<double>(std::span<const double>, std::span<const double>,
                                        std::span<const double>, std::span<double>);
template void solve_tridiagonal<std::complex<double>>(std::span<const std::complex<double>>,
                                                      std::span<const std::complex<double>>,
                                                      std::span<const std::complex<double>>,
                                                      std::span<std::complex<double>>);

} // namespace robustqm::linalg
