#pragma once

// Brute-force reference implementations used only by the tests. None of
// them call into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<long double>>;

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Pearson r over the 0/1 vectors a 2x2 table expands to.
inline double phi_expanded(int n11, int n10, int n01, int n00) {
    std::vector<double> x, y;
    auto add = [&](int count, double a, double b) {
        for (int i = 0; i < count; ++i) {
            x.push_back(a);
            y.push_back(b);
        }
    };
    add(n11, 1, 1);
    add(n10, 1, 0);
    add(n01, 0, 1);
    add(n00, 0, 0);
    return pearson(x, y);
}

// Determinant by Gaussian elimination with partial pivoting.
inline long double det(Mat a) {
    const std::size_t n = a.size();
    long double d = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (a[piv][c] == 0) return 0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return d;
}

// Eigenvalues of a symmetric matrix with distinct eigenvalues, as sign
// changes of det(A - lambda I) on a fine grid refined by bisection.
// Descending order.
inline std::vector<double> eigenvalues_by_det(const std::vector<std::vector<double>>& a, int grid = 20000) {
    const std::size_t n = a.size();
    long double bound = 0;
    for (std::size_t i = 0; i < n; ++i) {
        long double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(static_cast<long double>(a[i][j]));
        bound = std::max(bound, row);
    }
    bound += 1;
    auto f = [&](long double lambda) {
        Mat m(n, std::vector<long double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j] - (i == j ? lambda : 0);
        return det(std::move(m));
    };
    std::vector<double> roots;
    long double prev_x = -bound, prev_f = f(prev_x);
    for (int g = 1; g <= grid; ++g) {
        const long double x = -bound + 2 * bound * g / grid;
        const long double fx = f(x);
        if ((prev_f < 0) != (fx < 0)) {
            long double lo = prev_x, hi = x, flo = prev_f;
            for (int it = 0; it < 200 && hi - lo > 1e-16L; ++it) {
                const long double mid = (lo + hi) / 2, fm = f(mid);
                if ((fm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(static_cast<double>((lo + hi) / 2));
        }
        prev_x = x;
        prev_f = fx;
    }
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
}

// Gauss-Jordan inverse.
inline Mat inverse(Mat a) {
    const std::size_t n = a.size();
    Mat inv(n, std::vector<long double>(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (a[piv][c] == 0) throw std::runtime_error("oracle: singular matrix");
        std::swap(a[piv], a[c]);
        std::swap(inv[piv], inv[c]);
        const long double d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const long double f = a[r][c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

struct OlsResult {
    std::vector<double> beta, se;
    double r2 = 0;
};

// Normal equations (X'X) b = X'y solved by Gauss-Jordan.
inline OlsResult ols(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t n = x.size(), q = x[0].size();
    Mat xtx(q, std::vector<long double>(q, 0));
    std::vector<long double> xty(q, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < q; ++a) {
            xty[a] += static_cast<long double>(x[i][a]) * y[i];
            for (std::size_t b = 0; b < q; ++b) xtx[a][b] += static_cast<long double>(x[i][a]) * x[i][b];
        }
    const Mat inv = inverse(xtx);
    OlsResult r;
    std::vector<long double> beta(q, 0);
    for (std::size_t a = 0; a < q; ++a)
        for (std::size_t b = 0; b < q; ++b) beta[a] += inv[a][b] * xty[b];
    long double ssr = 0, my = 0, sst = 0;
    for (double v : y) my += v;
    my /= n;
    for (std::size_t i = 0; i < n; ++i) {
        long double fit = 0;
        for (std::size_t a = 0; a < q; ++a) fit += beta[a] * x[i][a];
        ssr += (y[i] - fit) * (y[i] - fit);
        sst += (y[i] - my) * (y[i] - my);
    }
    const long double s2 = ssr / (n - q);
    for (std::size_t a = 0; a < q; ++a) {
        r.beta.push_back(static_cast<double>(beta[a]));
        r.se.push_back(static_cast<double>(std::sqrt(s2 * inv[a][a])));
    }
    r.r2 = static_cast<double>(1 - ssr / sst);
    return r;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        long double z = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L)), dp = 0;
        for (int it = 0; it < 100; ++it) {
            long double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const long double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            const long double dz = p1 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-19L) break;
        }
        x[i] = static_cast<double>(z);
        w[i] = static_cast<double>(2 / ((1 - z * z) * dp * dp));
    }
    return {x, w};
}

// Composite Gauss-Legendre integral of f over [a, b].
inline long double integrate(const std::function<long double(long double)>& f, long double a, long double b,
                             int panels = 400, int order = 20) {
    static const auto gl = gauss_legendre(order);
    const auto& [x, w] = gl;
    long double total = 0;
    const long double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const long double lo = a + k * h, mid = lo + h / 2;
        for (int i = 0; i < order; ++i) total += w[static_cast<std::size_t>(i)] * f(mid + h / 2 * x[static_cast<std::size_t>(i)]);
    }
    return total * h / 2;
}

// Two-sided Student-t tail by integrating the density over [0, |t|].
inline double t_two_sided_p(double t, double df) {
    const long double lc = std::lgamma((df + 1) / 2.0L) - std::lgamma(df / 2.0L) -
                           0.5L * std::log(df * std::numbers::pi_v<long double>);
    auto dens = [&](long double x) { return std::exp(lc - (df + 1) / 2.0L * std::log1p(x * x / df)); };
    const long double inner = integrate(dens, 0, std::fabs(t), 2000, 20);
    return static_cast<double>(1 - 2 * inner);
}

inline long double normal_cdf(long double x) { return 0.5L * std::erfc(-x / std::sqrt(2.0L)); }

// P(X > a, Y > b) for a standard bivariate normal with correlation rho.
inline double orthant(double a, double b, double rho) {
    const long double s = std::sqrt(1 - static_cast<long double>(rho) * rho);
    auto g = [&](long double x) {
        const long double dens = std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi_v<long double>);
        return dens * normal_cdf((rho * x - b) / s);
    };
    return static_cast<double>(integrate(g, a, a + 12.0L, 600, 20));
}

// Phi between two thresholded latent normals with liability correlation rho.
inline double implied_phi(double t1, double t2, double rho) {
    const double p1 = static_cast<double>(1 - normal_cdf(t1)), p2 = static_cast<double>(1 - normal_cdf(t2));
    const double p11 = orthant(t1, t2, rho);
    return (p11 - p1 * p2) / std::sqrt(p1 * (1 - p1) * p2 * (1 - p2));
}

// Quartimin by explicit loops over rows and ordered factor pairs.
inline double quartimin(const std::vector<std::vector<double>>& l) {
    long double q = 0;
    for (const auto& row : l)
        for (std::size_t j = 0; j < row.size(); ++j)
            for (std::size_t m = 0; m < row.size(); ++m)
                if (j != m) q += static_cast<long double>(row[j]) * row[j] * row[m] * row[m];
    return static_cast<double>(q);
}

// KMO by the textbook definition with an independent inverse.
inline double kmo(const std::vector<std::vector<double>>& r) {
    const std::size_t p = r.size();
    Mat m(p, std::vector<long double>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) m[i][j] = r[i][j];
    const Mat inv = inverse(m);
    long double sr = 0, sa = 0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j) continue;
            const long double partial = -inv[i][j] / std::sqrt(inv[i][i] * inv[j][j]);
            sr += static_cast<long double>(r[i][j]) * r[i][j];
            sa += partial * partial;
        }
    return static_cast<double>(sr / (sr + sa));
}

} // namespace oracle
