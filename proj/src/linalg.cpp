#include "certify/linalg.hpp"
#include "certify/parallel.hpp"

#include <cmath>
#include <algorithm>

namespace certify::la {

namespace {

// Right-looking blocked Cholesky step shared by the parallel and serial
// versions; the only difference is how the trailing update is scheduled.
constexpr std::size_t kPanel = 48;

bool factor_panel(Matrix& a, std::size_t k0, std::size_t k1) {
    for (std::size_t j = k0; j < k1; ++j) {
        double d = a(j, j);
        const double* rj = a.row(j);
        for (std::size_t p = k0; p < j; ++p) d -= rj[p] * rj[p];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a(j, j) = d;
        const double inv = 1.0 / d;
        for (std::size_t i = j + 1; i < a.rows(); ++i) {
            double s = a(i, j);
            const double* ri = a.row(i);
            for (std::size_t p = k0; p < j; ++p) s -= ri[p] * rj[p];
            a(i, j) = s * inv;
        }
    }
    return true;
}

template <bool Parallel>
bool cholesky_impl(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t k0 = 0; k0 < n; k0 += kPanel) {
        const std::size_t k1 = std::min(n, k0 + kPanel);
        if (!factor_panel(a, k0, k1)) return false;
        // Trailing update: A[i][j] -= sum_p L[i][p] L[j][p], p in panel.
        const std::size_t ntrail = n - k1;
        auto update_row = [&](std::size_t t) {
            const std::size_t i = k1 + t;
            const double* ri = a.row(i);
            double* wi = a.row(i);
            for (std::size_t j = k1; j <= i; ++j) {
                const double* rj = a.row(j);
                double s = 0.0;
                for (std::size_t p = k0; p < k1; ++p) s += ri[p] * rj[p];
                wi[j] -= s;
            }
        };
        if (Parallel)
            par::parallel_for(ntrail, update_row);
        else
            par::serial_for(ntrail, update_row);
    }
    return true;
}

} // namespace

bool cholesky(Matrix& a) { return cholesky_impl<true>(a); }
bool cholesky_serial(Matrix& a) { return cholesky_impl<false>(a); }

void cholesky_solve(const Matrix& chol, std::vector<double>& b) {
    const std::size_t n = chol.rows();
    if (b.size() != n) throw LinalgError("cholesky_solve: size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        const double* ri = chol.row(i);
        for (std::size_t j = 0; j < i; ++j) s -= ri[j] * b[j];
        b[i] = s / ri[i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= chol(j, ii) * b[j];
        b[ii] = s / chol(ii, ii);
    }
}

void cholesky_solve_many(const Matrix& chol, Matrix& b) {
    const std::size_t ncols = b.cols();
    par::parallel_for(ncols, [&](std::size_t c) {
        std::vector<double> col(b.rows());
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, c);
        cholesky_solve(chol, col);
        for (std::size_t i = 0; i < b.rows(); ++i) b(i, c) = col[i];
    });
}

namespace {

template <bool Parallel>
Matrix matmul_impl(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw LinalgError("matmul: shape mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    auto row_job = [&](std::size_t i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = ai[k];
            if (av == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += av * bk[j];
        }
    };
    if (Parallel)
        par::parallel_for(a.rows(), row_job);
    else
        par::serial_for(a.rows(), row_job);
    return c;
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) { return matmul_impl<true>(a, b); }
Matrix matmul_serial(const Matrix& a, const Matrix& b) { return matmul_impl<false>(a, b); }

std::vector<double> sym_eigenvalues(Matrix a) {
    // Householder reduction to tridiagonal form, then implicit-shift QL.
    const std::size_t n = a.rows();
    if (n == 0) return {};
    std::vector<double> d(n, 0.0), e(n, 0.0);

    for (std::size_t i = n; i-- > 1;) {
        const std::size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    g = e[j] - hh * f;
                    e[j] = g;
                    for (std::size_t k = 0; k <= j; ++k)
                        a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);

    // QL with implicit shifts on the tridiagonal (d, e).
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (++iter == 60) throw LinalgError("sym_eigenvalues: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (r == 0.0 && m >= l + 2) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

double sym_min_eigenvalue(const Matrix& a) {
    auto ev = sym_eigenvalues(a);
    return ev.empty() ? 0.0 : ev.front();
}

double max_psd_step(const Matrix& m, const Matrix& dm, double eps) {
    const std::size_t n = m.rows();
    auto psd_at = [&](double alpha) {
        Matrix t(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                t(i, j) = m(i, j) + alpha * dm(i, j) + (i == j ? eps : 0.0);
        return cholesky(t);
    };
    if (psd_at(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (psd_at(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

} // namespace certify::la
