// Dense linear algebra for small symmetric matrices (spin overlap matrices,
// quadrature Jacobi matrices). Everything is eigen-based through a cyclic
// Jacobi sweep, which is exact enough at these sizes (kappa <= 4 for spin
// work, <= 64 for quadrature nodes) and has no external dependencies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lpspin/errors.hpp"

namespace lpspin {

// General dense matrix, row-major. Used for rectangular blocks and for
// non-symmetric kappa x kappa objects like cross-replica overlaps.
struct mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    mat() = default;
    mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static mat identity(std::size_t n) {
        mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline mat matmul(const mat& x, const mat& y) {
    require_input(x.cols == y.rows, "matmul: inner dimensions differ");
    mat z(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) {
            double xik = x(i, k);
            if (xik == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

inline mat transpose(const mat& x) {
    mat z(x.cols, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) z(j, i) = x(i, j);
    return z;
}

inline mat mat_sub(const mat& x, const mat& y) {
    require_input(x.rows == y.rows && x.cols == y.cols, "mat_sub: shape mismatch");
    mat z(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] - y.a[i];
    return z;
}

// Symmetric dense matrix. Construction symmetrizes, so numerical asymmetry
// from accumulated products cannot leak into eigenvalue computations.
struct sym_matrix {
    std::size_t n = 0;
    std::vector<double> a;

    sym_matrix() = default;
    explicit sym_matrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}

    // Symmetrize as (M + M^T)/2.
    static sym_matrix from_general(const mat& m) {
        require_input(m.rows == m.cols, "sym_matrix: matrix not square");
        sym_matrix s(m.rows);
        for (std::size_t i = 0; i < s.n; ++i)
            for (std::size_t j = 0; j < s.n; ++j)
                s.a[i * s.n + j] = 0.5 * (m(i, j) + m(j, i));
        return s;
    }

    static sym_matrix diagonal(const std::vector<double>& d) {
        sym_matrix s(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) s(i, i) = d[i];
        return s;
    }

    static sym_matrix identity(std::size_t dim) {
        sym_matrix s(dim);
        for (std::size_t i = 0; i < dim; ++i) s(i, i) = 1.0;
        return s;
    }

    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    mat as_mat() const {
        mat m(n, n);
        m.a = a;
        return m;
    }
};

inline sym_matrix sym_add(const sym_matrix& x, const sym_matrix& y) {
    require_input(x.n == y.n, "sym_add: dimension mismatch");
    sym_matrix z(x.n);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] + y.a[i];
    return z;
}

inline sym_matrix sym_sub(const sym_matrix& x, const sym_matrix& y) {
    require_input(x.n == y.n, "sym_sub: dimension mismatch");
    sym_matrix z(x.n);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] - y.a[i];
    return z;
}

inline sym_matrix sym_scale(const sym_matrix& x, double c) {
    sym_matrix z(x.n);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = c * x.a[i];
    return z;
}

inline double trace(const sym_matrix& x) {
    double t = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) t += x(i, i);
    return t;
}

// Relative scale used by eigenvalue tolerances: the nuclear norm is
// approximated by the absolute diagonal sum, which the Jacobi iteration
// preserves in the limit. Floored at 1 so tiny matrices keep absolute tols.
inline double trace_scale(const sym_matrix& x) {
    double t = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) t += std::fabs(x(i, i));
    return std::max(1.0, t);
}

inline double hs_inner(const sym_matrix& x, const sym_matrix& y) {
    require_input(x.n == y.n, "hs_inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) s += x.a[i] * y.a[i];
    return s;
}

inline double hs_norm(const sym_matrix& x) { return std::sqrt(hs_inner(x, x)); }

inline double hs_norm(const mat& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

inline double inf_norm(const sym_matrix& x) {
    double m = 0.0;
    for (double v : x.a) m = std::max(m, std::fabs(v));
    return m;
}

inline double inf_norm(const mat& x) {
    double m = 0.0;
    for (double v : x.a) m = std::max(m, std::fabs(v));
    return m;
}

inline double sum_entries(const sym_matrix& x) {
    double s = 0.0;
    for (double v : x.a) s += v;
    return s;
}

inline sym_matrix hadamard(const sym_matrix& x, const sym_matrix& y) {
    require_input(x.n == y.n, "hadamard: dimension mismatch");
    sym_matrix z(x.n);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] * y.a[i];
    return z;
}

struct eig_result {
    std::vector<double> values; // ascending
    mat vectors;                // column j is the eigenvector of values[j]
};

// Cyclic Jacobi eigendecomposition. Sweeps rotate away every off-diagonal
// pair in fixed order until the off-diagonal Frobenius norm drops below
// 1e-14 relative to the matrix scale. Jacobi is unconditionally convergent;
// the sweep cap only guards against NaN input.
inline eig_result eig_sym(const sym_matrix& input) {
    const std::size_t n = input.n;
    require_input(n > 0, "eig_sym: empty matrix");
    std::vector<double> a = input.a;
    mat v = mat::identity(n);
    const double tol = 1e-14 * trace_scale(input);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a[i * n + j] * a[i * n + j];
        return std::sqrt(s);
    };

    const int max_sweeps = 100;
    int sweep = 0;
    while (off_norm() > tol) {
        require_numeric(sweep++ < max_sweeps,
                        "eig_sym: Jacobi failed to converge (non-finite input?)");
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::fabs(apq) <= 1e-300) continue;
                double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p];
                    double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k];
                    double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p);
                    double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    eig_result r;
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.values[i] = a[i * n + i];
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return r.values[x] < r.values[y]; });
    eig_result out;
    out.values.resize(n);
    out.vectors = mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = r.values[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

inline double lambda_min(const sym_matrix& x) { return eig_sym(x).values.front(); }
inline double lambda_max_small(const sym_matrix& x) { return eig_sym(x).values.back(); }

// PSD test with a relative slack of 1e-10: tiny negative eigenvalues from
// roundoff in accumulated Gram products are accepted.
inline bool is_psd(const sym_matrix& x) {
    return lambda_min(x) >= -1e-10 * trace_scale(x);
}

// Loewner order x <= y, again with the relative PSD slack on y - x.
inline bool loewner_leq(const sym_matrix& x, const sym_matrix& y) {
    return is_psd(sym_sub(y, x));
}

// Cheap sufficient condition for PSD: diagonal dominance with nonnegative
// diagonal. Never returns a false positive.
inline bool gershgorin_psd_certificate(const sym_matrix& x) {
    for (std::size_t i = 0; i < x.n; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < x.n; ++j)
            if (j != i) off += std::fabs(x(i, j));
        if (x(i, i) < off) return false;
    }
    return true;
}

// Symmetric PSD square root. Eigenvalues within the PSD slack of zero are
// clamped to zero; anything more negative is a caller error.
inline sym_matrix sqrt_psd(const sym_matrix& x) {
    eig_result e = eig_sym(x);
    double tol = 1e-10 * trace_scale(x);
    sym_matrix root(x.n);
    for (std::size_t j = 0; j < x.n; ++j) {
        double lam = e.values[j];
        require_domain(lam >= -tol, "sqrt_psd: matrix has a negative eigenvalue");
        if (lam < 0.0) lam = 0.0;
        double s = std::sqrt(lam);
        for (std::size_t i = 0; i < x.n; ++i)
            for (std::size_t k = 0; k < x.n; ++k)
                root(i, k) += s * e.vectors(i, j) * e.vectors(k, j);
    }
    // Re-symmetrize to kill roundoff asymmetry from the outer-product sum.
    return sym_matrix::from_general(root.as_mat());
}

// Inverse square root of a strictly positive definite matrix.
inline sym_matrix inv_sqrt_pd(const sym_matrix& x) {
    eig_result e = eig_sym(x);
    double tol = 1e-14 * trace_scale(x);
    sym_matrix root(x.n);
    for (std::size_t j = 0; j < x.n; ++j) {
        double lam = e.values[j];
        require_domain(lam > tol, "inv_sqrt_pd: matrix is numerically singular");
        double s = 1.0 / std::sqrt(lam);
        for (std::size_t i = 0; i < x.n; ++i)
            for (std::size_t k = 0; k < x.n; ++k)
                root(i, k) += s * e.vectors(i, j) * e.vectors(k, j);
    }
    return sym_matrix::from_general(root.as_mat());
}

// Largest eps such that lambda_min(A + s*P) > 0 is guaranteed for all
// 0 <= s < eps by the bound lambda_min(A + sP) >= lambda_min(A) - s*n*max|P|.
// Returns +inf for P = 0.
inline double pd_perturbation_threshold(const sym_matrix& a, const sym_matrix& p) {
    require_input(a.n == p.n, "pd_perturbation_threshold: dimension mismatch");
    double lam = lambda_min(a);
    if (lam <= 0.0) return 0.0;
    double pmax = inf_norm(p);
    if (pmax == 0.0) return std::numeric_limits<double>::infinity();
    return lam / (static_cast<double>(a.n) * pmax);
}

// Gram matrix wrapper: a symmetric matrix together with a flag recording
// whether positive semidefiniteness is known by construction (sums of outer
// products) rather than by a numerical test.
struct gram_matrix {
    sym_matrix base;
    bool certified_psd = false;
};

} // namespace lpspin
