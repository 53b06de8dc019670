// Core model objects: Gaussian coupling disorder G, vector spin
// configurations sigma (n sites, kappa components each), overlap matrices,
// the scaled Hamiltonian H_N(sigma) = N^{-1/2} sum_ij g_ij (sigma_i, sigma_j),
// its lp-penalized variant H_N - t sum_i |sigma_i|^p, gradients, and power
// iteration estimates of coupling operator norms.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/rng.hpp"

namespace lpspin {

struct spin_config {
    std::size_t n = 0;
    std::size_t kappa = 1;
    std::vector<double> s; // row-major: s[i * kappa + k]

    spin_config() = default;
    spin_config(std::size_t sites, std::size_t components)
        : n(sites), kappa(components), s(sites * components, 0.0) {
        require_input(sites >= 1 && components >= 1, "spin_config: empty shape");
    }

    double* row(std::size_t i) { return &s[i * kappa]; }
    const double* row(std::size_t i) const { return &s[i * kappa]; }

    double row_norm(std::size_t i) const {
        double acc = 0.0;
        const double* r = row(i);
        for (std::size_t k = 0; k < kappa; ++k) acc += r[k] * r[k];
        return std::sqrt(acc);
    }
};

inline double dot(const spin_config& a, const spin_config& b) {
    require_input(a.n == b.n && a.kappa == b.kappa, "dot: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.s.size(); ++i) acc += a.s[i] * b.s[i];
    return acc;
}

// sum_i |sigma_i|_2^2, the squared Frobenius norm of the configuration.
inline double frob_sq(const spin_config& x) {
    double acc = 0.0;
    for (double v : x.s) acc += v * v;
    return acc;
}

// Normalized squared 2,2-norm: (1/N) sum_i |sigma_i|_2^2 = tr R(sigma, sigma).
inline double norm22_sq(const spin_config& x) {
    return frob_sq(x) / static_cast<double>(x.n);
}

// Unnormalized penalty sum: sum_i |sigma_i|_2^p.
inline double pnorm_sum(const spin_config& x, double p) {
    require_input(p >= 1.0, "pnorm_sum: p must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) acc += std::pow(x.row_norm(i), p);
    return acc;
}

// p,2-norm: the p-th root of sum_i |sigma_i|_2^p, divided by N inside the
// root when normalized.
inline double norm_p2(const spin_config& x, double p, bool normalized) {
    double s = pnorm_sum(x, p);
    if (normalized) s /= static_cast<double>(x.n);
    return std::pow(s, 1.0 / p);
}

// Cross-replica overlap R(a, b)_{k,k'} = (1/N) sum_i a_i(k) b_i(k').
// Not symmetric in general.
inline mat overlap(const spin_config& a, const spin_config& b) {
    require_input(a.n == b.n && a.kappa == b.kappa, "overlap: shape mismatch");
    mat r(a.kappa, a.kappa);
    for (std::size_t i = 0; i < a.n; ++i) {
        const double* ra = a.row(i);
        const double* rb = b.row(i);
        for (std::size_t k = 0; k < a.kappa; ++k)
            for (std::size_t k2 = 0; k2 < a.kappa; ++k2) r(k, k2) += ra[k] * rb[k2];
    }
    double inv_n = 1.0 / static_cast<double>(a.n);
    for (double& v : r.a) v *= inv_n;
    return r;
}

// Self overlap R(sigma, sigma): a Gram matrix of the component columns, so
// positive semidefinite by construction.
inline gram_matrix overlap_self(const spin_config& a) {
    gram_matrix g;
    g.base = sym_matrix::from_general(overlap(a, a));
    g.certified_psd = true;
    return g;
}

// Gaussian coupling matrix. Entries are iid standard normals drawn from a
// counter-based stream, so (seed, replica) fully determines the matrix
// regardless of platform or thread schedule.
struct disorder {
    std::size_t n = 0;
    uint64_t seed = 0;
    uint64_t replica = 0;
    std::vector<double> g; // row-major n * n

    static disorder sample(std::size_t n, uint64_t seed, uint64_t replica = 0) {
        require_input(n >= 1, "disorder: need n >= 1");
        disorder d;
        d.n = n;
        d.seed = seed;
        d.replica = replica;
        d.g.resize(n * n);
        rng_stream rs(seed, replica);
        rs.fill_normal(d.g.data(), d.g.size());
        return d;
    }

    static disorder from_matrix(const mat& m) {
        require_input(m.rows == m.cols && m.rows >= 1, "disorder: matrix must be square");
        disorder d;
        d.n = m.rows;
        d.g = m.a;
        return d;
    }
};

inline disorder sample_disorder(uint64_t seed, std::size_t n, uint64_t replica = 0) {
    return disorder::sample(n, seed, replica);
}

// Unscaled energy sum_ij g_ij (sigma_i, sigma_j) = sum_k sigma(k)^T G sigma(k).
inline double hamiltonian_unscaled(const disorder& d, const spin_config& x) {
    require_input(d.n == x.n, "hamiltonian: site count mismatch");
    const std::size_t n = x.n, kap = x.kappa;
    double total = 0.0;
    std::vector<double> acc(kap);
    for (std::size_t i = 0; i < n; ++i) {
        const double* grow = &d.g[i * n];
        for (std::size_t k = 0; k < kap; ++k) acc[k] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double gij = grow[j];
            const double* rj = x.row(j);
            for (std::size_t k = 0; k < kap; ++k) acc[k] += gij * rj[k];
        }
        const double* ri = x.row(i);
        for (std::size_t k = 0; k < kap; ++k) total += ri[k] * acc[k];
    }
    return total;
}

// H_N(sigma) = N^{-1/2} sum_ij g_ij (sigma_i, sigma_j).
inline double hamiltonian(const disorder& d, const spin_config& x) {
    return hamiltonian_unscaled(d, x) / std::sqrt(static_cast<double>(x.n));
}

// H_N(sigma) - t sum_i |sigma_i|_2^p, the penalized energy for p > 2, t > 0.
inline double lagrangian_hamiltonian(const disorder& d, const spin_config& x, double p,
                                     double t) {
    require_input(t > 0.0, "lagrangian_hamiltonian: t must be > 0");
    require_input(p > 2.0, "lagrangian_hamiltonian: p must be > 2");
    return hamiltonian(d, x) - t * pnorm_sum(x, p);
}

// Symmetrized coupling S = G + G^T, the object every gradient computation
// touches. Stored densely once so each solver iteration is a single pass
// over S regardless of kappa.
struct sym_coupling {
    std::size_t n = 0;
    std::vector<double> s;

    static sym_coupling from_disorder(const disorder& d) {
        sym_coupling c;
        c.n = d.n;
        c.s.resize(d.n * d.n);
        for (std::size_t i = 0; i < d.n; ++i)
            for (std::size_t j = 0; j < d.n; ++j)
                c.s[i * d.n + j] = d.g[i * d.n + j] + d.g[j * d.n + i];
        return c;
    }

    // out = S x, shape n x kappa. One pass over S serves every component.
    void apply(const spin_config& x, spin_config& out) const {
        require_input(x.n == n, "sym_coupling: site count mismatch");
        if (out.n != n || out.kappa != x.kappa) out = spin_config(n, x.kappa);
        const std::size_t kap = x.kappa;
        for (std::size_t i = 0; i < n; ++i) {
            const double* srow = &s[i * n];
            double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
            if (kap <= 8) {
                for (std::size_t j = 0; j < n; ++j) {
                    double c = srow[j];
                    const double* rj = x.row(j);
                    for (std::size_t k = 0; k < kap; ++k) acc[k] += c * rj[k];
                }
                double* ri = out.row(i);
                for (std::size_t k = 0; k < kap; ++k) ri[k] = acc[k];
            } else {
                double* ri = out.row(i);
                for (std::size_t k = 0; k < kap; ++k) ri[k] = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    double c = srow[j];
                    const double* rj = x.row(j);
                    for (std::size_t k = 0; k < kap; ++k) ri[k] += c * rj[k];
                }
            }
        }
    }
};

// Gradient of the penalized Hamiltonian:
//   d/dsigma_i(k) = N^{-1/2} sum_j (g_ij + g_ji) sigma_j(k)
//                   - t p sigma_i(k) |sigma_i|_2^{p-2}.
// The penalty term is defined as exactly zero at sigma_i = 0 (it vanishes in
// the p > 2 regime where the penalty is used, and pinning it avoids 0 * inf).
inline spin_config grad_hamiltonian(const disorder& d, const spin_config& x, double p,
                                    double t) {
    require_input(d.n == x.n, "grad_hamiltonian: site count mismatch");
    require_input(t >= 0.0, "grad_hamiltonian: t must be >= 0");
    sym_coupling c = sym_coupling::from_disorder(d);
    spin_config g;
    c.apply(x, g);
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(x.n));
    for (double& v : g.s) v *= inv_sqrt_n;
    if (t > 0.0) {
        for (std::size_t i = 0; i < x.n; ++i) {
            double r = x.row_norm(i);
            if (r == 0.0) continue;
            double factor = t * p * std::pow(r, p - 2.0);
            const double* xi = x.row(i);
            double* gi = g.row(i);
            for (std::size_t k = 0; k < x.kappa; ++k) gi[k] -= factor * xi[k];
        }
    }
    return g;
}

// GOE matrix (G + G^T)/sqrt(2): off-diagonal variance 1, diagonal variance 2.
inline sym_matrix goe(const disorder& d) {
    const std::size_t n = d.n;
    sym_matrix m(n);
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(i, j) = (d.g[i * n + j] + d.g[j * n + i]) * inv_sqrt2;
    return m;
}

struct power_result {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {
// Reserved stream index for power iteration start vectors, outside the small
// integer range used for replicas and solver restarts.
constexpr uint64_t power_start_stream = 0x8000000000000007ull;
}

// Scaled operator norm |G|_2 / sqrt(N) via power iteration on G^T G. The
// stopping rule certifies the value through the eigenvalue residual
// |G^T G v - |Gv|^2 v| <= tol |Gv|^2, which stays sound when the two top
// singular values nearly coincide and direction convergence stalls; a change
// test alone can then need unbounded iterations. Non-convergence within the
// iteration budget is reported as a numeric error with the residual trace.
inline double opnorm_scaled(const disorder& d, double tol = 1e-8) {
    const std::size_t n = d.n;
    std::vector<double> v(n), w(n), u(n);
    rng_stream rs(d.seed ^ 0x9E3779B97F4A7C15ull, detail::power_start_stream + d.replica);
    rs.fill_normal(v.data(), n);
    auto normalize = [](std::vector<double>& x) {
        double s = 0.0;
        for (double t : x) s += t * t;
        s = std::sqrt(s);
        if (s == 0.0) {
            x[0] = 1.0;
            return;
        }
        for (double& t : x) t /= s;
    };
    normalize(v);
    long max_iter = std::max<long>(10 * static_cast<long>(n), 20000);
    double rel_residual = 1.0;
    for (long it = 1; it <= max_iter; ++it) {
        // w = G v
        for (std::size_t i = 0; i < n; ++i) {
            const double* grow = &d.g[i * n];
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * v[j];
            w[i] = acc;
        }
        double lam = 0.0;
        for (double t : w) lam += t * t; // Rayleigh quotient v . G^T G v
        // u = G^T w
        for (std::size_t j = 0; j < n; ++j) u[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* grow = &d.g[i * n];
            double wi = w[i];
            for (std::size_t j = 0; j < n; ++j) u[j] += grow[j] * wi;
        }
        double res = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double rj = u[j] - lam * v[j];
            res += rj * rj;
        }
        rel_residual = std::sqrt(res) / (lam + 1e-300);
        if (rel_residual < tol && it > 1)
            return std::sqrt(lam / static_cast<double>(n));
        v = u;
        normalize(v);
    }
    throw numeric_error("opnorm_scaled: power iteration did not converge (n=" +
                        std::to_string(n) + ", iterations=" + std::to_string(max_iter) +
                        ", last relative residual=" + std::to_string(rel_residual) + ")");
}

// Largest eigenvalue of a symmetric matrix via power iteration shifted by the
// Frobenius norm, which guarantees the shifted matrix is PSD with the target
// eigenvalue on top.
inline power_result lambda_max_sym(const sym_matrix& m, double tol = 1e-10,
                                   uint64_t seed = 0x91E10DA5ull) {
    const std::size_t n = m.n;
    require_input(n >= 1, "lambda_max_sym: empty matrix");
    double shift = 0.0;
    for (double v : m.a) shift += v * v;
    shift = std::sqrt(shift);
    std::vector<double> v(n), w(n);
    rng_stream rs(seed, detail::power_start_stream);
    rs.fill_normal(v.data(), n);
    double vn = 0.0;
    for (double t : v) vn += t * t;
    vn = std::sqrt(vn);
    for (double& t : v) t /= vn;
    power_result res;
    double prev = 0.0;
    long max_iter = std::max<long>(100, 10 * static_cast<long>(n));
    for (long it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &m.a[i * n];
            double acc = shift * v[i];
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
            w[i] = acc;
        }
        double wn = 0.0, ray = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wn += w[i] * w[i];
            ray += v[i] * w[i];
        }
        wn = std::sqrt(wn);
        res.value = ray - shift;
        res.iterations = static_cast<int>(it);
        if (it > 1 && std::fabs(ray - prev) <= tol * (std::fabs(ray) + 1.0)) {
            res.converged = true;
            return res;
        }
        prev = ray;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    }
    return res;
}

} // namespace lpspin
