// Variational functional over one-path order parameters: multiplier and
// measure types, the zero- and positive-temperature terminal functions, the
// backward log-expectation recursion along a matrix path, assembly of the
// functional value, and a derivative-free minimization driver.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/nelder_mead.hpp"
#include "lpspin/quadrature.hpp"
#include "lpspin/rng.hpp"

namespace lpspin {

// Multiplier with one coefficient per ordered pair k <= k'. The quadratic
// form it induces is sum_{k<=k'} lambda_{k,k'} s(k) s(k'), so the matrix
// form carries the off-diagonal coefficients halved.
struct lagrange_multiplier {
    std::size_t kappa = 1;
    std::vector<double> v;

    lagrange_multiplier() : v(1, 0.0) {}
    explicit lagrange_multiplier(std::size_t k)
        : kappa(k), v(pair_count(k), 0.0) {
        require_input(k >= 1, "lagrange_multiplier: kappa must be >= 1");
    }

    static std::size_t pair_count(std::size_t k) { return k * (k + 1) / 2; }

    std::size_t index(std::size_t k, std::size_t kp) const {
        require_input(k <= kp && kp < kappa, "lagrange_multiplier: bad pair index");
        return k * kappa - k * (k - 1) / 2 + (kp - k);
    }

    double at(std::size_t k, std::size_t kp) const { return v[index(k, kp)]; }
    double& at(std::size_t k, std::size_t kp) { return v[index(k, kp)]; }

    sym_matrix to_matrix() const {
        sym_matrix m(kappa);
        for (std::size_t k = 0; k < kappa; ++k) {
            m(k, k) = at(k, k);
            for (std::size_t kp = k + 1; kp < kappa; ++kp) {
                m(k, kp) = 0.5 * at(k, kp);
                m(kp, k) = 0.5 * at(k, kp);
            }
        }
        return m;
    }

    double coeff_inf_norm() const {
        double m = 0.0;
        for (double c : v) m = std::max(m, std::fabs(c));
        return m;
    }

    // max over rows k of 2|lambda_{k,k}| + sum_{k' != k} |lambda_{k,k'}|,
    // the coefficient bound entering the smoothing-error envelope.
    double row_abs_bound() const {
        double best = 0.0;
        for (std::size_t k = 0; k < kappa; ++k) {
            double row = 2.0 * std::fabs(at(k, k));
            for (std::size_t kp = 0; kp < kappa; ++kp) {
                if (kp == k) continue;
                row += std::fabs(kp > k ? at(k, kp) : at(kp, k));
            }
            best = std::max(best, row);
        }
        return best;
    }
};

// Nondecreasing matrix path recorded at its knots. The implicit left knot is
// (0, 0); the first stored value must itself be zero and the last knot must
// sit at 1 with value equal to the constraint matrix.
struct path {
    std::size_t kappa = 1;
    std::vector<double> q;          // q_0 .. q_r with q_r = 1
    std::vector<sym_matrix> gamma;  // gamma_0 = 0, ..., gamma_r = D

    std::size_t levels() const { return q.empty() ? 0 : q.size() - 1; }
    const sym_matrix& endpoint() const { return gamma.back(); }

    void validate() const {
        require_input(q.size() == gamma.size(), "path: knot and value counts differ");
        require_input(q.size() >= 2, "path: need at least two knots");
        for (const sym_matrix& g : gamma)
            require_input(g.n == kappa, "path: value dimension mismatch");
        require_domain(q.front() >= -1e-15, "path: knots must lie in [0,1]");
        for (std::size_t j = 0; j + 1 < q.size(); ++j)
            require_domain(q[j + 1] >= q[j] - 1e-15, "path: knots must be nondecreasing");
        require_domain(std::fabs(q.back() - 1.0) <= 1e-12, "path: last knot must be 1");
        double scale = std::max(1.0, trace_scale(gamma.back()));
        require_domain(inf_norm(gamma.front()) <= 1e-12 * scale,
                       "path: first value must be zero");
        for (std::size_t j = 0; j + 1 < gamma.size(); ++j)
            require_domain(loewner_leq(gamma[j], gamma[j + 1]),
                           "path: values must be nondecreasing in the Loewner order");
    }
};

enum class measure_flavor { finite, probability };

// Nondecreasing weights attached to the same knots as a path. The finite
// flavor allows any nonnegative scale; the probability flavor requires the
// final weight to equal 1.
struct discrete_measure {
    std::vector<double> q;
    std::vector<double> w;
    measure_flavor flavor = measure_flavor::finite;

    void validate() const {
        require_input(q.size() == w.size(), "discrete_measure: knot and weight counts differ");
        require_input(!w.empty(), "discrete_measure: empty");
        require_domain(w.front() >= -1e-15, "discrete_measure: weights must be nonnegative");
        for (std::size_t j = 0; j + 1 < w.size(); ++j)
            require_domain(w[j + 1] >= w[j] - 1e-15,
                           "discrete_measure: weights must be nondecreasing");
        if (flavor == measure_flavor::probability)
            require_domain(std::fabs(w.back() - 1.0) <= 1e-12,
                           "discrete_measure: final weight must be 1");
    }
};

namespace detail {

inline void require_shared_knots(const std::vector<double>& a, const std::vector<double>& b,
                                 const char* what) {
    require_input(a.size() == b.size(), std::string(what) + ": knot counts differ");
    for (std::size_t j = 0; j < a.size(); ++j)
        require_input(std::fabs(a[j] - b[j]) <= 1e-12,
                      std::string(what) + ": knots differ between measure and path");
}

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double vec_norm(const std::vector<double>& a) { return std::sqrt(vec_dot(a, a)); }

inline void sym_apply_vec(const sym_matrix& m, const std::vector<double>& x,
                          std::vector<double>& out) {
    out.assign(m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        out[i] = s;
    }
}

// Dense Gaussian elimination with partial pivoting for the tiny Newton
// systems (dimension <= a few spins). Returns false on a negligible pivot.
inline bool solve_small(std::vector<double> a, std::vector<double> b,
                        std::size_t n, std::vector<double>& out) {
    double scale = 0.0;
    for (double c : a) scale = std::max(scale, std::fabs(c));
    if (scale == 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::fabs(a[i * n + col]) > std::fabs(a[piv * n + col])) piv = i;
        if (std::fabs(a[piv * n + col]) < 1e-14 * scale) return false;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            double f = a[i * n + col] / a[col * n + col];
            for (std::size_t j = col; j < n; ++j) a[i * n + j] -= f * a[col * n + j];
            b[i] -= f * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii * n + j] * out[j];
        out[ii] = s / a[ii * n + ii];
    }
    return true;
}

struct terminal_problem {
    sym_matrix lam_mat;
    double p = 3.0;
    double t = 1.0;
    const std::vector<double>* x = nullptr;

    double value(const std::vector<double>& s) const {
        double nrm = vec_norm(s);
        double quad = 0.0;
        for (std::size_t i = 0; i < lam_mat.n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < lam_mat.n; ++j) row += lam_mat(i, j) * s[j];
            quad += s[i] * row;
        }
        return vec_dot(s, *x) + quad - t * std::pow(nrm, p);
    }

    void grad(const std::vector<double>& s, std::vector<double>& g) const {
        double nrm = vec_norm(s);
        double pen = nrm > 0.0 ? t * p * std::pow(nrm, p - 2.0) : 0.0;
        g.assign(s.size(), 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < s.size(); ++j) row += lam_mat(i, j) * s[j];
            g[i] = (*x)[i] + 2.0 * row - pen * s[i];
        }
    }

    // Row-major Hessian; only valid away from the origin.
    void hess(const std::vector<double>& s, std::vector<double>& h) const {
        std::size_t k = s.size();
        double nrm = vec_norm(s);
        double r2 = t * p * std::pow(nrm, p - 2.0);
        double r4 = t * p * (p - 2.0) * std::pow(nrm, p - 4.0);
        h.assign(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                double v = 2.0 * lam_mat(i, j) - r4 * s[i] * s[j];
                if (i == j) v -= r2;
                h[i * k + j] = v;
            }
    }
};

// Any maximizer with a nonnegative value lies inside this radius: beyond it
// the norm penalty dominates both the linear and the quadratic term.
inline double terminal_search_radius(double lam_inf, double kappa, double p, double t,
                                     double x_norm) {
    double r1 = x_norm > 0.0 ? std::pow(2.0 * x_norm / t, 1.0 / (p - 1.0)) : 0.0;
    double r2 = lam_inf > 0.0
                    ? std::pow((kappa + 1.0) * lam_inf / t, 1.0 / (p - 2.0))
                    : 0.0;
    return std::max(r1, r2);
}

// Scalar case: stationary points of x s + lam s^2 - t s^p solve
// x + 2 lam s - t p s^{p-1} = 0 on each sign branch; the descending crossing
// is bracketed and bisected to machine precision.
inline void terminal_scalar_branch(double x, double lam, double p, double t,
                                   double& best_value, double& best_arg) {
    auto psi = [&](double s) { return x + 2.0 * lam * s - t * p * std::pow(s, p - 1.0); };
    double lo = 0.0;
    if (lam > 0.0) {
        double sc = std::pow(2.0 * lam / (t * p * (p - 1.0)), 1.0 / (p - 2.0));
        if (psi(sc) > psi(lo)) lo = sc;
    }
    if (psi(lo) <= 0.0) return;
    double hi = std::max(1.0, 2.0 * lo);
    int guard = 0;
    while (psi(hi) > 0.0 && guard++ < 200) hi *= 2.0;
    if (psi(hi) > 0.0) return;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (psi(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-16 * (1.0 + hi)) break;
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        double d = 2.0 * lam - t * p * (p - 1.0) * std::pow(s, p - 2.0);
        if (d == 0.0) break;
        double step = psi(s) / d;
        double s_new = s - step;
        if (!(s_new > 0.0)) break;
        s = s_new;
        if (std::fabs(step) <= 1e-17 * (1.0 + s)) break;
    }
    double val = x * s + lam * s * s - t * std::pow(s, p);
    if (val > best_value) {
        best_value = val;
        best_arg = s;
    }
}

} // namespace detail

struct terminal_result {
    double value = 0.0;
    std::vector<double> argmax;
};

// Pointwise supremum of (s, x) + sum_{k<=k'} lambda_{k,k'} s(k) s(k')
// - t ||s||_2^p over all of R^kappa. Always >= 0 (the origin competes).
// Scalar inputs use branch-wise root finding; higher dimensions run a
// multistart ascent from 3^kappa sign-sector seeds plus the origin, with a
// Newton polish down to gradient norm 1e-10.
inline terminal_result terminal_inf(const lagrange_multiplier& lam, double p, double t,
                                    const std::vector<double>& x) {
    require_domain(p > 2.0, "terminal_inf: requires p > 2");
    require_domain(t > 0.0, "terminal_inf: requires t > 0");
    require_input(x.size() == lam.kappa, "terminal_inf: point dimension mismatch");
    const std::size_t kappa = lam.kappa;

    terminal_result out;
    out.argmax.assign(kappa, 0.0);

    double radius = detail::terminal_search_radius(
        lam.coeff_inf_norm(), static_cast<double>(kappa), p, t, detail::vec_norm(x));
    if (radius == 0.0) return out;

    if (kappa == 1) {
        double lam00 = lam.at(0, 0);
        double best_value = 0.0, best_arg = 0.0;
        detail::terminal_scalar_branch(x[0], lam00, p, t, best_value, best_arg);
        double neg_value = 0.0, neg_arg = 0.0;
        detail::terminal_scalar_branch(-x[0], lam00, p, t, neg_value, neg_arg);
        if (neg_value > best_value) {
            best_value = neg_value;
            best_arg = -neg_arg;
        }
        out.value = best_value;
        out.argmax[0] = best_arg;
        require_numeric(std::fabs(best_arg) <= radius + 1e-6,
                        "terminal_inf: maximizer escaped the certified radius");
        return out;
    }

    detail::terminal_problem prob{lam.to_matrix(), p, t, &x};

    std::vector<double> best = out.argmax;
    double best_value = 0.0;

    std::vector<int> trit(kappa, -1);
    std::vector<double> sigma(kappa), grad(kappa), trial(kappa), hess, step;
    bool more = true;
    while (more) {
        double u_norm = 0.0;
        for (int c : trit) u_norm += static_cast<double>(c * c);
        u_norm = std::sqrt(u_norm);
        if (u_norm == 0.0) {
            sigma.assign(kappa, 0.0);
        } else {
            for (std::size_t i = 0; i < kappa; ++i)
                sigma[i] = 0.5 * radius * static_cast<double>(trit[i]) / u_norm;
        }

        double fval = prob.value(sigma);
        for (int it = 0; it < 400; ++it) {
            prob.grad(sigma, grad);
            double gn = detail::vec_norm(grad);
            if (gn <= 1e-12) break;
            double eta = 0.25 * (1.0 + detail::vec_norm(sigma)) / (1.0 + gn);
            bool accepted = false;
            for (int h = 0; h < 50; ++h) {
                for (std::size_t i = 0; i < kappa; ++i) trial[i] = sigma[i] + eta * grad[i];
                if (detail::vec_norm(trial) <= 3.0 * radius) {
                    double ftrial = prob.value(trial);
                    if (ftrial >= fval + 1e-4 * eta * gn * gn) {
                        sigma = trial;
                        fval = ftrial;
                        accepted = true;
                        break;
                    }
                }
                eta *= 0.5;
            }
            if (!accepted) break;
        }

        if (detail::vec_norm(sigma) > 1e-12) {
            for (int it = 0; it < 80; ++it) {
                prob.grad(sigma, grad);
                double gn = detail::vec_norm(grad);
                if (gn <= 1e-11) break;
                prob.hess(sigma, hess);
                std::vector<double> rhs(kappa);
                for (std::size_t i = 0; i < kappa; ++i) rhs[i] = -grad[i];
                if (!detail::solve_small(hess, rhs, kappa, step)) break;
                bool improved = false;
                double damp = 1.0;
                for (int h = 0; h < 20; ++h) {
                    for (std::size_t i = 0; i < kappa; ++i)
                        trial[i] = sigma[i] + damp * step[i];
                    prob.grad(trial, grad);
                    if (detail::vec_norm(grad) < gn &&
                        detail::vec_norm(trial) <= 3.0 * radius) {
                        sigma = trial;
                        improved = true;
                        break;
                    }
                    damp *= 0.5;
                }
                if (!improved) break;
            }
            fval = prob.value(sigma);
        }

        if (fval > best_value) {
            best_value = fval;
            best = sigma;
        }

        more = false;
        for (std::size_t i = 0; i < kappa; ++i) {
            if (trit[i] < 1) {
                ++trit[i];
                more = true;
                break;
            }
            trit[i] = -1;
        }
    }

    out.value = best_value;
    out.argmax = best;
    prob.grad(best, grad);
    bool origin_winner = detail::vec_norm(best) <= 1e-12;
    if (!origin_winner || detail::vec_norm(x) > 1e-10)
        require_numeric(detail::vec_norm(grad) <= 1e-8 * (1.0 + std::fabs(best_value)),
                        "terminal_inf: polish did not reach a stationary point");
    require_numeric(detail::vec_norm(best) <= radius + 1e-6,
                    "terminal_inf: maximizer escaped the certified radius");
    return out;
}

// Volume integral of exp(-||s||_2^p) over R^kappa:
//   (2 pi^{kappa/2} / Gamma(kappa/2)) Gamma(kappa/p) / p.
inline double radial_exp_power_integral(std::size_t kappa, double p) {
    require_domain(p > 0.0, "radial_exp_power_integral: requires p > 0");
    require_input(kappa >= 1, "radial_exp_power_integral: requires kappa >= 1");
    double k = static_cast<double>(kappa);
    double pi = std::acos(-1.0);
    double log_sphere = std::log(2.0) + 0.5 * k * std::log(pi) - std::lgamma(0.5 * k);
    return std::exp(log_sphere + std::lgamma(k / p) - std::log(p));
}

namespace detail {

template <class F>
double tensor_simpson(F&& f, const std::vector<double>& lo, const std::vector<double>& hi,
                      int panels) {
    std::size_t kappa = lo.size();
    std::vector<std::size_t> idx(kappa, 0);
    std::vector<double> pt(kappa);
    std::size_t m = static_cast<std::size_t>(panels) + 1;
    auto axis_weight = [&](std::size_t i) {
        if (i == 0 || i + 1 == m) return 1.0;
        return (i % 2 == 1) ? 4.0 : 2.0;
    };
    double total = 0.0;
    bool more = true;
    while (more) {
        double w = 1.0;
        for (std::size_t d = 0; d < kappa; ++d) {
            pt[d] = lo[d] + (hi[d] - lo[d]) * static_cast<double>(idx[d]) /
                                static_cast<double>(panels);
            w *= axis_weight(idx[d]);
        }
        total += w * f(pt);
        more = false;
        for (std::size_t d = 0; d < kappa; ++d) {
            if (++idx[d] < m) {
                more = true;
                break;
            }
            idx[d] = 0;
        }
    }
    for (std::size_t d = 0; d < kappa; ++d)
        total *= (hi[d] - lo[d]) / (3.0 * static_cast<double>(panels));
    return total;
}

} // namespace detail

// Soft-max analogue of terminal_inf at inverse temperature beta:
//   (1/beta) log Int exp(beta ((s,x) + sum lambda ss - t ||s||^p)) ds.
// The domain is truncated where the norm penalty exceeds every other term
// by 40/beta, making the discarded tail negligible next to the peak; the
// truncated integral is then refined until it is stable to 1e-8 in relative
// terms. Scalar inputs use adaptive panel doubling; kappa in {2,3} uses a
// tensor grid centered at the zero-temperature maximizer unless the spec
// asks for Monte Carlo, which is also the only route for kappa > 3.
inline double terminal_beta(const lagrange_multiplier& lam, double beta, double p, double t,
                            const std::vector<double>& x, const quadrature_spec& quad = {}) {
    require_domain(beta > 0.0, "terminal_beta: requires beta > 0");
    require_domain(p > 2.0, "terminal_beta: requires p > 2");
    require_domain(t > 0.0, "terminal_beta: requires t > 0");
    require_input(x.size() == lam.kappa, "terminal_beta: point dimension mismatch");
    const std::size_t kappa = lam.kappa;

    terminal_result peak = terminal_inf(lam, p, t, x);
    const double gstar = peak.value;
    detail::terminal_problem prob{lam.to_matrix(), p, t, &x};

    double x_norm = detail::vec_norm(x);
    double c_quad = 0.5 * (static_cast<double>(kappa) + 1.0) * lam.coeff_inf_norm();
    double radius = std::max(
        1.0, 2.0 * detail::terminal_search_radius(lam.coeff_inf_norm(),
                                                  static_cast<double>(kappa), p, t, x_norm));
    int guard = 0;
    while (t * std::pow(radius, p) <
               x_norm * radius + c_quad * radius * radius + gstar + 40.0 / beta &&
           guard++ < 200)
        radius *= 2.0;
    require_numeric(guard < 200, "terminal_beta: could not certify a truncation radius");

    if (kappa == 1 && quad.mode == quadrature_spec::mode_t::grid) {
        auto integrand = [&](double s) {
            std::vector<double> pt{s};
            return std::exp(beta * (prob.value(pt) - gstar));
        };
        integral_result ir = simpson_to_stability(integrand, -radius, radius, 1e-8, 512, 15,
                                                  "terminal_beta: scalar integral");
        return gstar + std::log(ir.value) / beta;
    }

    std::vector<double> lo(kappa), hi(kappa);
    double halfwidth = radius + detail::vec_norm(peak.argmax);
    for (std::size_t d = 0; d < kappa; ++d) {
        lo[d] = peak.argmax[d] - halfwidth;
        hi[d] = peak.argmax[d] + halfwidth;
    }
    auto integrand = [&](const std::vector<double>& pt) {
        return std::exp(beta * (prob.value(pt) - gstar));
    };

    if (quad.mode == quadrature_spec::mode_t::mc || kappa > 3) {
        long samples = quad.samples > 0 ? quad.samples : 100000;
        rng_stream rng(quad.seed, 0xBE7Aull);
        double volume = 1.0;
        for (std::size_t d = 0; d < kappa; ++d) volume *= hi[d] - lo[d];
        double acc = 0.0;
        std::vector<double> pt(kappa);
        for (long i = 0; i < samples; ++i) {
            for (std::size_t d = 0; d < kappa; ++d)
                pt[d] = lo[d] + (hi[d] - lo[d]) * rng.uniform01();
            acc += integrand(pt);
        }
        double integral = volume * acc / static_cast<double>(samples);
        require_numeric(integral > 0.0, "terminal_beta: Monte Carlo integral vanished");
        return gstar + std::log(integral) / beta;
    }

    int panels = 16;
    int max_doublings = kappa == 2 ? 7 : 3;
    double prev = detail::tensor_simpson(integrand, lo, hi, panels);
    for (int d = 0; d <= max_doublings; ++d) {
        panels *= 2;
        double cur = detail::tensor_simpson(integrand, lo, hi, panels);
        double change = std::fabs(cur - prev);
        if (change <= 1e-8 * (std::fabs(cur) + 1e-300))
            return gstar + std::log(cur) / beta;
        prev = cur;
    }
    throw numeric_error(
        "terminal_beta: tensor grid failed to stabilize to 1e-8 at " +
        std::to_string(panels) + " panels per axis; use the Monte Carlo mode");
}

// Lebesgue-Stieltjes term (1/2) sum_j zeta_j (||gamma_{j+1}||_HS^2 -
// ||gamma_j||_HS^2); exact, no quadrature.
inline double integral_term(const discrete_measure& zeta, const path& pi) {
    pi.validate();
    zeta.validate();
    detail::require_shared_knots(zeta.q, pi.q, "integral_term");
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < pi.gamma.size(); ++j) {
        double next = hs_inner(pi.gamma[j + 1], pi.gamma[j + 1]);
        double cur = hs_inner(pi.gamma[j], pi.gamma[j]);
        acc += zeta.w[j] * (next - cur);
    }
    return 0.5 * acc;
}

inline double multiplier_pairing(const lagrange_multiplier& lam, const sym_matrix& d) {
    require_input(lam.kappa == d.n, "multiplier_pairing: dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < lam.kappa; ++k)
        for (std::size_t kp = k; kp < lam.kappa; ++kp) acc += lam.at(k, kp) * d(k, kp);
    return acc;
}

struct recursion_result {
    double value = 0.0;
    double stderr_est = 0.0;        // zero in grid mode
    std::size_t terminal_evals = 0;
};

// Backward induction along the path: the innermost value is the terminal
// function at sqrt(2) times the accumulated Gaussian increments (increment j
// has covariance gamma_j - gamma_{j-1}), and layer l aggregates by
// (1/w_l) log E exp(w_l *) with w_l = 0 meaning a plain expectation. Layers
// integrate by tensor Gauss-Hermite (64 nodes for one spin component, 24 per
// axis for 2 or 3) or Monte Carlo (default for more components), with the
// log-sum shifted by the maximum so large weights cannot overflow.
inline recursion_result recursion_full(
    const std::function<double(const std::vector<double>&)>& terminal,
    const discrete_measure& weights, const path& pi, const quadrature_spec& quad = {}) {
    pi.validate();
    weights.validate();
    detail::require_shared_knots(weights.q, pi.q, "recursion");

    const std::size_t r = pi.levels();
    const std::size_t kappa = pi.kappa;
    const double degeneracy_tol =
        1e-13 * std::max(1.0, trace_scale(pi.endpoint()));

    std::vector<bool> degenerate(r + 1, false);
    std::vector<sym_matrix> inc_sqrt(r + 1);
    std::size_t live_layers = 0;
    for (std::size_t j = 1; j <= r; ++j) {
        sym_matrix c = sym_sub(pi.gamma[j], pi.gamma[j - 1]);
        if (hs_norm(c) <= degeneracy_tol) {
            degenerate[j] = true;
        } else {
            inc_sqrt[j] = sqrt_psd(c);
            ++live_layers;
        }
    }

    bool use_mc = quad.mode == quadrature_spec::mode_t::mc || kappa > 3;

    // Per-layer list of (shifted increment, weight): z = inc_sqrt * node.
    std::vector<std::vector<std::vector<double>>> layer_nodes(r + 1);
    std::vector<std::vector<double>> layer_wts(r + 1);
    recursion_result out;

    for (std::size_t j = 1; j <= r; ++j) {
        if (degenerate[j]) continue;
        std::vector<std::vector<double>> raw;
        std::vector<double> wts;
        if (!use_mc) {
            int n_axis = quad.nodes > 0 ? quad.nodes : (kappa == 1 ? 64 : 24);
            const gauss_hermite_rule& rule = gauss_hermite(n_axis);
            std::vector<std::size_t> idx(kappa, 0);
            bool more = true;
            while (more) {
                std::vector<double> w_node(kappa);
                double wt = 1.0;
                for (std::size_t d = 0; d < kappa; ++d) {
                    w_node[d] = rule.nodes[idx[d]];
                    wt *= rule.weights[idx[d]];
                }
                raw.push_back(std::move(w_node));
                wts.push_back(wt);
                more = false;
                for (std::size_t d = 0; d < kappa; ++d) {
                    if (++idx[d] < rule.nodes.size()) {
                        more = true;
                        break;
                    }
                    idx[d] = 0;
                }
            }
        } else {
            long total = quad.samples > 0 ? quad.samples : 100000;
            long per_layer = std::max<long>(
                2, static_cast<long>(std::floor(std::pow(
                       static_cast<double>(total),
                       1.0 / static_cast<double>(std::max<std::size_t>(1, live_layers))))));
            rng_stream rng(quad.seed, 0xAC00ull + j);
            for (long i = 0; i < per_layer; ++i) {
                std::vector<double> w_node(kappa);
                rng.fill_normal(w_node.data(), kappa);
                raw.push_back(std::move(w_node));
                wts.push_back(1.0 / static_cast<double>(per_layer));
            }
        }
        layer_nodes[j].reserve(raw.size());
        for (const std::vector<double>& w_node : raw) {
            std::vector<double> z(kappa, 0.0);
            for (std::size_t a = 0; a < kappa; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < kappa; ++b) s += inc_sqrt[j](a, b) * w_node[b];
                z[a] = s;
            }
            layer_nodes[j].push_back(std::move(z));
        }
        layer_wts[j] = std::move(wts);
    }

    const double sqrt2 = std::sqrt(2.0);
    std::vector<double> outer_values;

    std::function<double(std::size_t, const std::vector<double>&)> eval =
        [&](std::size_t l, const std::vector<double>& xx) -> double {
        if (l == r) {
            ++out.terminal_evals;
            return terminal(xx);
        }
        std::size_t layer = l + 1;
        double zeta = weights.w[l];
        if (degenerate[layer]) return eval(l + 1, xx);

        const std::vector<std::vector<double>>& nodes = layer_nodes[layer];
        const std::vector<double>& wts = layer_wts[layer];
        std::vector<double> vals(nodes.size());
        std::vector<double> shifted(kappa);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            for (std::size_t d = 0; d < kappa; ++d)
                shifted[d] = xx[d] + sqrt2 * nodes[i][d];
            vals[i] = eval(l + 1, shifted);
        }
        if (l == 0) outer_values = vals;
        if (zeta <= 1e-14) {
            double acc = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) acc += wts[i] * vals[i];
            return acc;
        }
        double vmax = *std::max_element(vals.begin(), vals.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            acc += wts[i] * std::exp(zeta * (vals[i] - vmax));
        return vmax + std::log(acc) / zeta;
    };

    std::vector<double> origin(kappa, 0.0);
    out.value = eval(0, origin);

    if (use_mc && !outer_values.empty() && !degenerate[1]) {
        double n = static_cast<double>(outer_values.size());
        double zeta0 = weights.w[0];
        double vmax = *std::max_element(outer_values.begin(), outer_values.end());
        if (zeta0 <= 1e-14) {
            double mean = 0.0;
            for (double v : outer_values) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : outer_values) var += (v - mean) * (v - mean);
            out.stderr_est = std::sqrt(var / (n * std::max(1.0, n - 1.0)));
        } else {
            double mean_e = 0.0;
            for (double v : outer_values) mean_e += std::exp(zeta0 * (v - vmax));
            mean_e /= n;
            double var_e = 0.0;
            for (double v : outer_values) {
                double e = std::exp(zeta0 * (v - vmax)) - mean_e;
                var_e += e * e;
            }
            var_e /= n * std::max(1.0, n - 1.0);
            out.stderr_est = std::sqrt(var_e) / (mean_e * zeta0);
        }
    }
    return out;
}

inline double recursion(const std::function<double(const std::vector<double>&)>& terminal,
                        const discrete_measure& weights, const path& pi,
                        const quadrature_spec& quad = {}) {
    return recursion_full(terminal, weights, pi, quad).value;
}

// Zero-temperature functional: recursion value minus the multiplier pairing
// with the endpoint minus the measure-weighted quadratic variation term.
inline double parisi_inf(const lagrange_multiplier& lam, double p, double t,
                         const discrete_measure& zeta, const path& pi,
                         const quadrature_spec& quad = {}) {
    require_input(zeta.flavor == measure_flavor::finite,
                  "parisi_inf: takes a finite-flavor measure");
    require_input(lam.kappa == pi.kappa, "parisi_inf: dimension mismatch");
    auto terminal = [&](const std::vector<double>& xx) {
        return terminal_inf(lam, p, t, xx).value;
    };
    double y0 = recursion(terminal, zeta, pi, quad);
    return y0 - multiplier_pairing(lam, pi.endpoint()) - integral_term(zeta, pi);
}

// Positive-temperature functional with probability weights alpha: the
// recursion runs with weights beta*alpha and the variation term carries the
// same scaling, so beta enters only through the terminal and that product.
inline double parisi_beta(const lagrange_multiplier& lam, double beta, double p, double t,
                          const discrete_measure& alpha, const path& pi,
                          const quadrature_spec& quad = {}) {
    require_domain(beta > 0.0, "parisi_beta: requires beta > 0");
    require_input(alpha.flavor == measure_flavor::probability,
                  "parisi_beta: takes a probability-flavor measure");
    require_input(lam.kappa == pi.kappa, "parisi_beta: dimension mismatch");
    discrete_measure scaled;
    scaled.q = alpha.q;
    scaled.flavor = measure_flavor::finite;
    scaled.w.resize(alpha.w.size());
    for (std::size_t j = 0; j < alpha.w.size(); ++j) scaled.w[j] = beta * alpha.w[j];
    auto terminal = [&](const std::vector<double>& xx) {
        return terminal_beta(lam, beta, p, t, xx);
    };
    double x0 = recursion(terminal, scaled, pi, quad);
    return x0 - multiplier_pairing(lam, pi.endpoint()) - integral_term(scaled, pi);
}

enum class functional_mode { zero_temperature, positive_temperature };

struct minimize_options {
    double beta = 0.0;             // required for the positive-temperature mode
    std::size_t reseeds = 8;
    std::uint64_t seed = 0;
    nelder_mead_options nm{1500, 1e-9, 1e-10, 0.25};
    quadrature_spec quad{};
};

struct minimize_result {
    lagrange_multiplier lambda;
    discrete_measure weights;
    path pi;
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> trace;     // best value after each accepted simplex move
    bool converged = false;
    std::size_t evals = 0;
};

// Minimizes the functional over (lambda, weights, path) at fixed level count
// r. Free coordinates map onto feasible parameters by construction: weights
// are cumulative sums of exponentials (normalized to end at 1 in the
// positive-temperature mode), knots are a cumulative softmax, and the path
// increments are D^{1/2} S_j D^{1/2} where the S_j are Gram factors jointly
// conjugated so they sum to the identity. One deterministic start plus
// seeded restarts; ties resolve to the lowest restart index.
inline minimize_result minimize_parisi(const sym_matrix& d_target, double p, double t,
                                       std::size_t r, functional_mode mode,
                                       const minimize_options& opts = {}) {
    require_input(r >= 1, "minimize_parisi: need at least one level");
    require_domain(is_psd(d_target), "minimize_parisi: constraint matrix must be PSD");
    if (mode == functional_mode::positive_temperature)
        require_domain(opts.beta > 0.0,
                       "minimize_parisi: positive-temperature mode needs beta > 0");
    require_domain(p > 2.0, "minimize_parisi: requires p > 2");
    require_domain(t > 0.0, "minimize_parisi: requires t > 0");

    const std::size_t kappa = d_target.n;
    const sym_matrix d_sqrt = sqrt_psd(d_target);
    const std::size_t n_lam = lagrange_multiplier::pair_count(kappa);
    const std::size_t n_u = mode == functional_mode::zero_temperature ? r : r + 1;
    const std::size_t n_t = r * kappa * kappa;
    const std::size_t n_v = r + 1;
    const std::size_t dim = n_lam + n_u + n_t + n_v;

    auto clamp_exp = [](double u) { return std::exp(std::min(25.0, std::max(-25.0, u))); };

    struct triple {
        lagrange_multiplier lam;
        discrete_measure w;
        path pi;
    };

    auto build = [&](const std::vector<double>& theta) -> std::optional<triple> {
        triple tr;
        tr.lam = lagrange_multiplier(kappa);
        for (std::size_t i = 0; i < n_lam; ++i) tr.lam.v[i] = theta[i];

        std::vector<double> wts(r + 1, 0.0);
        double acc = 0.0;
        for (std::size_t j = 0; j < n_u; ++j) {
            acc += clamp_exp(theta[n_lam + j]);
            wts[j] = acc;
        }
        if (mode == functional_mode::zero_temperature) {
            wts[r] = wts[r - 1];
        } else {
            for (std::size_t j = 0; j <= r; ++j) wts[j] /= acc;
            wts[r] = 1.0;
        }

        std::vector<mat> gram(r);
        sym_matrix m_total(kappa);
        for (std::size_t j = 0; j < r; ++j) {
            mat tj(kappa, kappa);
            for (std::size_t e = 0; e < kappa * kappa; ++e)
                tj.a[e] = theta[n_lam + n_u + j * kappa * kappa + e];
            gram[j] = matmul(tj, transpose(tj));
            for (std::size_t e = 0; e < kappa * kappa; ++e) m_total.a[e] += gram[j].a[e];
        }
        if (lambda_min(m_total) <= 1e-10 * std::max(1.0, trace_scale(m_total)))
            return std::nullopt;
        sym_matrix w_conj = inv_sqrt_pd(m_total);

        tr.pi.kappa = kappa;
        tr.pi.gamma.resize(r + 1, sym_matrix(kappa));
        sym_matrix part(kappa);
        for (std::size_t j = 0; j < r; ++j) {
            mat s_j = matmul(matmul(w_conj.as_mat(), gram[j]), w_conj.as_mat());
            part = sym_add(part, sym_matrix::from_general(s_j));
            if (j + 1 < r) {
                mat g = matmul(matmul(d_sqrt.as_mat(), part.as_mat()), d_sqrt.as_mat());
                tr.pi.gamma[j + 1] = sym_matrix::from_general(g);
            }
        }
        tr.pi.gamma[r] = d_target;

        std::vector<double> knots(r + 1);
        double total = 0.0;
        for (std::size_t j = 0; j <= r; ++j) {
            knots[j] = clamp_exp(theta[n_lam + n_u + n_t + j]);
            total += knots[j];
        }
        double run = 0.0;
        tr.pi.q.resize(r + 1);
        for (std::size_t j = 0; j <= r; ++j) {
            run += knots[j];
            tr.pi.q[j] = run / total;
        }
        tr.pi.q[r] = 1.0;

        tr.w.q = tr.pi.q;
        tr.w.w = wts;
        tr.w.flavor = mode == functional_mode::zero_temperature
                          ? measure_flavor::finite
                          : measure_flavor::probability;
        return tr;
    };

    auto objective = [&](const std::vector<double>& theta) -> double {
        std::optional<triple> tr = build(theta);
        if (!tr) return std::numeric_limits<double>::infinity();
        try {
            if (mode == functional_mode::zero_temperature)
                return parisi_inf(tr->lam, p, t, tr->w, tr->pi, opts.quad);
            return parisi_beta(tr->lam, opts.beta, p, t, tr->w, tr->pi, opts.quad);
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    minimize_result best;
    bool any_improved = false;
    for (std::size_t s = 0; s < std::max<std::size_t>(1, opts.reseeds); ++s) {
        std::vector<double> theta(dim, 0.0);
        if (s == 0) {
            for (std::size_t j = 0; j < r; ++j)
                for (std::size_t d = 0; d < kappa; ++d)
                    theta[n_lam + n_u + j * kappa * kappa + d * kappa + d] = 1.0;
        } else {
            rng_stream rng(opts.seed, s);
            for (std::size_t i = 0; i < n_lam; ++i) theta[i] = 0.3 * rng.normal();
            for (std::size_t j = 0; j < n_u; ++j) theta[n_lam + j] = 0.5 * rng.normal();
            for (std::size_t j = 0; j < r; ++j)
                for (std::size_t a = 0; a < kappa; ++a)
                    for (std::size_t b = 0; b < kappa; ++b)
                        theta[n_lam + n_u + j * kappa * kappa + a * kappa + b] =
                            (a == b ? 1.0 : 0.0) + 0.35 * rng.normal();
            for (std::size_t j = 0; j <= r; ++j)
                theta[n_lam + n_u + n_t + j] = 0.3 * rng.normal();
        }

        nelder_mead_result run = nelder_mead(objective, theta, opts.nm);
        best.evals += run.evals;
        if (run.improved) any_improved = true;
        if (run.value < best.value) {
            std::optional<triple> tr = build(run.x);
            if (tr) {
                best.value = run.value;
                best.lambda = tr->lam;
                best.weights = tr->w;
                best.pi = tr->pi;
                best.trace = run.trace;
            }
        }
    }
    best.converged = any_improved && std::isfinite(best.value);
    return best;
}

} // namespace lpspin
