#pragma once

// Reference implementations used by the tests. Plain loops over
// std::vector; nothing here calls into the library under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
// Row-major dense matrix.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec column(const Mat& a, std::size_t j) {
    Vec c(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) c[i] = a(i, j);
    return c;
}

inline Vec multiply(const Mat& a, const Vec& x) {
    Vec y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) y[i] += a(i, j) * x[j];
    }
    return y;
}

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<Vec> solve(Mat m, Vec b) {
    const std::size_t n = m.rows;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m(i, k)) > std::abs(m(pivot, k))) pivot = i;
        }
        if (std::abs(m(pivot, k)) < 1e-300) return std::nullopt;
        if (pivot != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(pivot, j));
            std::swap(b[k], b[pivot]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= m(k, j) * x[j];
        x[k] = s / m(k, k);
    }
    return x;
}

inline double objective(const Mat& a, const Vec& y, const Vec& x, double l1, double l2) {
    const Vec ax = multiply(a, x);
    double r = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) r += (ax[i] - y[i]) * (ax[i] - y[i]);
    double n1 = 0.0;
    double n2 = 0.0;
    for (double v : x) {
        n1 += std::abs(v);
        n2 += v * v;
    }
    return r + l1 * n1 + l2 * n2;
}

// Exhaustive search over every sign pattern in {-1, 0, +1}^m. For each
// pattern the stationarity condition on the active set is linear:
//   (A_S^T A_S + l2 I) x_S = A_S^T y - l1 s_S / 2.
// Sign-consistent solutions are scored and the lowest objective wins.
inline Vec brute_force_elastic_net(const Mat& a, const Vec& y, double l1, double l2) {
    const std::size_t m = a.cols;
    std::vector<int> signs(m, -1);
    Vec best(m, 0.0);
    double best_value = objective(a, y, best, l1, l2);
    Mat gram(m, m);
    Vec aty(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec ci = column(a, i);
        aty[i] = dot(ci, y);
        for (std::size_t j = 0; j < m; ++j) gram(i, j) = dot(ci, column(a, j));
    }
    // Odometer over base-3 digits -1, 0, +1.
    auto advance = [&] {
        for (std::size_t d = 0; d < m; ++d) {
            if (signs[d] < 1) {
                ++signs[d];
                return true;
            }
            signs[d] = -1;
        }
        return false;
    };
    for (bool more = true; more; more = advance()) {
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < m; ++j) {
            if (signs[j] != 0) active.push_back(j);
        }
        if (active.empty()) continue;
        const std::size_t k = active.size();
        Mat g(k, k);
        Vec rhs(k);
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < k; ++q) {
                g(p, q) = gram(active[p], active[q]) + (p == q ? l2 : 0.0);
            }
            rhs[p] = aty[active[p]] - 0.5 * l1 * signs[active[p]];
        }
        const auto xs = solve(g, rhs);
        if (!xs) continue;
        bool consistent = true;
        for (std::size_t p = 0; p < k && consistent; ++p) {
            consistent = (*xs)[p] * signs[active[p]] > 0.0;
        }
        if (!consistent) continue;
        Vec x(m, 0.0);
        for (std::size_t p = 0; p < k; ++p) x[active[p]] = (*xs)[p];
        const double value = objective(a, y, x, l1, l2);
        if (value < best_value) {
            best_value = value;
            best = x;
        }
    }
    return best;
}

// Projected gradient on the split x = u - v with u, v >= 0, which turns the
// l1 term into a linear one. Step 1 / L with L the Lipschitz constant of
// the smooth part (estimated by power iteration).
inline Vec projected_gradient_elastic_net(const Mat& a, const Vec& y, double l1, double l2,
                                          int iterations = 200000) {
    const std::size_t m = a.cols;
    Mat g(m, m);
    Vec aty(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec ci = column(a, i);
        aty[i] = dot(ci, y);
        for (std::size_t j = 0; j < m; ++j) g(i, j) = dot(ci, column(a, j));
    }
    Vec v(m, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vec w(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) w[i] += g(i, j) * v[j];
        }
        lambda = std::sqrt(dot(w, w));
        for (std::size_t i = 0; i < m; ++i) v[i] = w[i] / lambda;
    }
    // Smooth part over (u, v): its Hessian has norm 2 * (2 lambda + l2).
    const double step = 1.0 / (2.0 * (2.0 * lambda + l2));
    Vec u(m, 0.0);
    Vec w(m, 0.0);
    for (int it = 0; it < iterations; ++it) {
        Vec x(m);
        for (std::size_t i = 0; i < m; ++i) x[i] = u[i] - w[i];
        for (std::size_t i = 0; i < m; ++i) {
            double gx = -aty[i];
            for (std::size_t j = 0; j < m; ++j) gx += g(i, j) * x[j];
            gx *= 2.0;
            u[i] = std::max(0.0, u[i] - step * (gx + l1 + 2.0 * l2 * u[i]));
            w[i] = std::max(0.0, w[i] - step * (-gx + l1 + 2.0 * l2 * w[i]));
        }
    }
    Vec x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = u[i] - w[i];
    return x;
}

// Largest violation of the subgradient optimality conditions
//   2 a_j^T (y - A x) - 2 l2 x_j = l1 sgn(x_j)   for x_j != 0
//   |2 a_j^T (y - A x)| <= l1                    for x_j == 0
inline double kkt_violation(const Mat& a, const Vec& y, const Vec& x, double l1, double l2) {
    const Vec ax = multiply(a, x);
    Vec r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - ax[i];
    double worst = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
        const double c = 2.0 * dot(column(a, j), r);
        if (x[j] != 0.0) {
            worst = std::max(worst, std::abs(c - 2.0 * l2 * x[j] - l1 * (x[j] > 0 ? 1.0 : -1.0)));
        } else {
            worst = std::max(worst, std::abs(c) - l1);
        }
    }
    return worst;
}

// Modified Gram-Schmidt on the columns.
inline Mat orthonormalize(Mat a) {
    for (std::size_t j = 0; j < a.cols; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.rows; ++i) s += a(i, j) * a(i, k);
            for (std::size_t i = 0; i < a.rows; ++i) a(i, j) -= s * a(i, k);
        }
        double n = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) n += a(i, j) * a(i, j);
        n = std::sqrt(n);
        for (std::size_t i = 0; i < a.rows; ++i) a(i, j) /= n;
    }
    return a;
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Free response of m q'' + c q' + k q = 0 (underdamped) from q(0) = q0,
// q'(0) = v0.
struct LinearOscillator {
    double m, c, k, q0, v0;

    [[nodiscard]] double position(double t) const {
        const double wn = std::sqrt(k / m);
        const double zeta = c / (2.0 * std::sqrt(k * m));
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        const double decay = std::exp(-zeta * wn * t);
        const double b = (v0 + zeta * wn * q0) / wd;
        return decay * (q0 * std::cos(wd * t) + b * std::sin(wd * t));
    }
    [[nodiscard]] double velocity(double t) const {
        const double h = 1e-6;
        return (position(t + h) - position(t - h)) / (2.0 * h);
    }
};

// Mechanical energy of the unforced Duffing oscillator.
inline double duffing_energy(double m, double k, double k3, double q, double qdot) {
    return 0.5 * m * qdot * qdot + 0.5 * k * q * q + 0.25 * k3 * q * q * q * q;
}

}  // namespace oracle
