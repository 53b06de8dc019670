// One-dimensional quadrature building blocks: Gauss-Hermite rules for
// Gaussian expectations (Golub-Welsch on the symmetric tridiagonal Jacobi
// matrix, eigensolved with the same cyclic Jacobi sweep as everything else)
// and composite Simpson panels with doubling for integrands on an interval.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"

namespace lpspin {

// How a Gaussian expectation layer should be evaluated: deterministic
// tensor-grid quadrature or Monte Carlo. nodes = 0 / samples = 0 pick the
// per-dimension defaults of the consumer. radius_sd bounds spatial grids in
// standard deviations where a consumer needs a truncated range.
struct quadrature_spec {
    enum class mode_t { grid, mc };
    mode_t mode = mode_t::grid;
    int nodes = 0;
    long samples = 0;
    double radius_sd = 8.0;
    uint64_t seed = 0;
};

struct gauss_hermite_rule {
    std::vector<double> nodes;   // ascending
    std::vector<double> weights; // sum to 1: sum_i w_i f(x_i) ~ E f(Z), Z ~ N(0,1)
};

// Golub-Welsch for the probabilists' Hermite weight: the Jacobi matrix has
// zero diagonal and off-diagonal sqrt(k), and the nodes are its eigenvalues.
// The weights come from the Christoffel identity w_i = 1 / sum_{k<n}
// p_k(x_i)^2 over the orthonormal polynomials rather than from squared
// eigenvector components: the eigenvector route carries an absolute error
// floor near machine-epsilon squared, which overstates the outermost weights
// by hundreds of orders of magnitude, and a log-sum of a fast-growing
// integrand then promotes that junk into the leading digits. The recurrence
// keeps every weight accurate in relative terms down to clean underflow.
inline gauss_hermite_rule compute_gauss_hermite(int n) {
    require_input(n >= 1, "gauss_hermite: need at least one node");
    sym_matrix j(static_cast<std::size_t>(n));
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(static_cast<double>(k));
        j(k - 1, k) = b;
        j(k, k - 1) = b;
    }
    eig_result e = eig_sym(j);
    gauss_hermite_rule rule;
    rule.nodes = e.values;
    rule.weights.resize(static_cast<std::size_t>(n));
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rule.nodes[static_cast<std::size_t>(i)];
        // sqrt(k+1) p_{k+1}(x) = x p_k(x) - sqrt(k) p_{k-1}(x), p_0 = 1.
        // The values blow up outside the oscillatory region, so the running
        // pair and the sum of squares share a scale factor that is peeled
        // off whenever the magnitude passes 1e140 and restored in the log.
        double prev = 0.0;
        double cur = 1.0;
        double sum_sq = 1.0;
        double log_scale = 0.0;
        for (int k = 0; k + 1 < n; ++k) {
            double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                          std::sqrt(static_cast<double>(k + 1));
            prev = cur;
            cur = next;
            sum_sq += cur * cur;
            if (std::fabs(cur) > 1e140) {
                prev *= 1e-140;
                cur *= 1e-140;
                sum_sq *= 1e-280;
                log_scale += 140.0 * std::log(10.0);
            }
        }
        double w = std::exp(-2.0 * log_scale - std::log(sum_sq));
        rule.weights[static_cast<std::size_t>(i)] = w;
        wsum += w;
    }
    // The exact weights sum to the zeroth moment, 1; normalize the rounding.
    for (int i = 0; i < n; ++i) rule.weights[static_cast<std::size_t>(i)] /= wsum;
    return rule;
}

inline const gauss_hermite_rule& gauss_hermite(int n) {
    static std::mutex m;
    static std::map<int, gauss_hermite_rule> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_hermite(n)).first;
    return it->second;
}

// Composite Simpson on [a, b] with n panels (n even), as a plain sum.
template <class Fn>
double simpson_panels(Fn&& f, double a, double b, int panels) {
    require_input(panels >= 2 && panels % 2 == 0, "simpson: panel count must be even >= 2");
    double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

struct integral_result {
    double value = 0.0;
    double last_change = 0.0; // |I_fine - I_coarse| on the final doubling
    int panels = 0;
};

// Panel doubling until successive Simpson values agree to rel_tol (relative
// to |value| + 1). Throws a numeric error carrying the context string when
// the doubling budget runs out.
template <class Fn>
integral_result simpson_to_stability(Fn&& f, double a, double b, double rel_tol,
                                     int start_panels, int max_doublings,
                                     const std::string& context) {
    int panels = std::max(2, start_panels + (start_panels % 2));
    double prev = simpson_panels(f, a, b, panels);
    for (int d = 0; d < max_doublings; ++d) {
        panels *= 2;
        double cur = simpson_panels(f, a, b, panels);
        double change = std::fabs(cur - prev);
        if (change <= rel_tol * (std::fabs(cur) + 1.0)) {
            return {cur, change, panels};
        }
        prev = cur;
    }
    throw numeric_error(context + ": Simpson refinement did not stabilize at " +
                        std::to_string(panels) + " panels");
}

} // namespace lpspin
