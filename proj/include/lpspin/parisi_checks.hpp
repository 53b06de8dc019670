// Consistency checks tying the functional's ingredients together: two-sided
// bounds between the zero- and positive-temperature terminals, the PDE
// residual of the recursion's interior interpolation, a forward simulation
// of the controlled diffusion whose value functional reproduces the
// recursion, and a tail-growth diagnostic for the simulated paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/parisi.hpp"
#include "lpspin/quadrature.hpp"
#include "lpspin/rng.hpp"

namespace lpspin {

struct terminal_comparison_row {
    std::vector<double> x;
    double f_beta = 0.0;
    double f_inf = 0.0;
    double upper_on_f_beta = 0.0;  // shifted zero-temperature bound
    double upper_on_f_inf = 0.0;   // smoothed positive-temperature bound
    double slack_beta = 0.0;       // upper_on_f_beta - f_beta
    double slack_inf = 0.0;        // upper_on_f_inf - f_inf
    bool holds = false;
};

struct terminal_comparison {
    std::vector<terminal_comparison_row> rows;
    bool all_hold = true;
};

// Evaluates both terminals on a grid and checks the explicit two-sided
// envelope: the soft terminal at inverse temperature beta is dominated by
// the hard terminal run at penalty t - delta plus an entropy correction,
// and the hard terminal is dominated by the soft one plus a cube-averaging
// error with the fully assembled curvature constant.
inline terminal_comparison compare_terminals(const lagrange_multiplier& lam, double p,
                                             double t, double beta, double delta,
                                             const std::vector<std::vector<double>>& x_grid) {
    require_domain(beta > 0.0, "compare_terminals: requires beta > 0");
    require_domain(delta > 0.0 && delta < t, "compare_terminals: requires 0 < delta < t");
    require_input(!x_grid.empty(), "compare_terminals: empty grid");
    const double kappa = static_cast<double>(lam.kappa);

    double max_norm = 0.0;
    for (const std::vector<double>& x : x_grid) {
        require_input(x.size() == lam.kappa, "compare_terminals: point dimension mismatch");
        max_norm = std::max(max_norm, detail::vec_norm(x));
    }
    require_domain(max_norm > 0.0, "compare_terminals: grid must contain a nonzero point");
    require_domain(delta < std::pow(max_norm, 1.0 / (p - 1.0)),
                   "compare_terminals: delta too large for the grid radius");

    const double entropy = std::log(radial_exp_power_integral(lam.kappa, p)) / beta;
    terminal_comparison out;
    for (const std::vector<double>& x : x_grid) {
        terminal_comparison_row row;
        row.x = x;
        row.f_beta = terminal_beta(lam, beta, p, t, x);
        terminal_result hard = terminal_inf(lam, p, t, x);
        row.f_inf = hard.value;

        double shifted = terminal_inf(lam, p, t - delta, x).value;
        row.upper_on_f_beta =
            shifted - kappa * std::log(beta * delta) / (p * beta) + entropy;

        double rho = detail::vec_norm(hard.argmax);
        double curvature =
            (t * p * (p - 1.0) + t * p * (p - 2.0) * kappa) *
                (std::pow(2.0 * rho, p - 2.0) +
                 std::pow(2.0 * std::sqrt(kappa) * delta, p - 2.0)) +
            lam.row_abs_bound();
        row.upper_on_f_inf = row.f_beta + (kappa * delta * delta / 6.0) * curvature -
                             kappa * std::log(2.0 * delta) / beta;

        row.slack_beta = row.upper_on_f_beta - row.f_beta;
        row.slack_inf = row.upper_on_f_inf - row.f_inf;
        row.holds = row.slack_beta >= -1e-10 && row.slack_inf >= -1e-10;
        out.all_hold = out.all_hold && row.holds;
        out.rows.push_back(std::move(row));
    }
    return out;
}

namespace detail {

// Backward evaluator for a single spin component: value at level l and
// coordinate x, integrating the remaining Gaussian increments with a
// 64-node rule. Terminal values come through an arbitrary callable so
// callers can substitute a tabulated terminal.
struct scalar_backward {
    const path* pi = nullptr;
    std::vector<double> zeta;         // effective recursion weights
    std::function<double(double)> terminal;
    int nodes = 64;

    double increment_var(std::size_t layer) const {
        return 2.0 * (pi->gamma[layer](0, 0) - pi->gamma[layer - 1](0, 0));
    }

    double combine(double zeta_l, const std::vector<double>& vals,
                   const std::vector<double>& wts) const {
        if (zeta_l <= 1e-14) {
            double acc = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) acc += wts[i] * vals[i];
            return acc;
        }
        double vmax = *std::max_element(vals.begin(), vals.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            acc += wts[i] * std::exp(zeta_l * (vals[i] - vmax));
        return vmax + std::log(acc) / zeta_l;
    }

    double value_at(std::size_t l, double x) const {
        if (l == pi->levels()) return terminal(x);
        double var = increment_var(l + 1);
        if (var <= 1e-13) return value_at(l + 1, x);
        const gauss_hermite_rule& rule = gauss_hermite(nodes);
        double sd = std::sqrt(var);
        std::vector<double> vals(rule.nodes.size());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            vals[i] = value_at(l + 1, x + sd * rule.nodes[i]);
        return combine(zeta[l], vals, rule.weights);
    }

    // Value inside interval [q_j, q_{j+1}): the remaining piece of the
    // layer-j increment smooths with variance 2 pi'(q_{j+1} - s).
    double value_in_interval(std::size_t j, double s, double x) const {
        double dq = pi->q[j + 1] - pi->q[j];
        double slope = increment_var(j + 1) / dq;  // 2 pi'
        double var = slope * (pi->q[j + 1] - s);
        if (var <= 1e-13) return value_at(j + 1, x);
        const gauss_hermite_rule& rule = gauss_hermite(nodes);
        double sd = std::sqrt(var);
        std::vector<double> vals(rule.nodes.size());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            vals[i] = value_at(j + 1, x + sd * rule.nodes[i]);
        return combine(zeta[j], vals, rule.weights);
    }
};

// Clamped linear interpolation on a uniform grid.
struct scalar_table {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> f;

    double operator()(double x) const {
        double u = (x - x0) / dx;
        if (u <= 0.0) return f.front();
        double last = static_cast<double>(f.size() - 1);
        if (u >= last) return f.back();
        std::size_t i = static_cast<std::size_t>(u);
        double frac = u - static_cast<double>(i);
        return f[i] + frac * (f[i + 1] - f[i]);
    }
};

inline std::vector<double> effective_weights(const discrete_measure& weights, double beta) {
    std::vector<double> z = weights.w;
    if (std::isfinite(beta))
        for (double& w : z) w *= beta;
    return z;
}

inline std::function<double(double)> scalar_terminal(const lagrange_multiplier& lam,
                                                     double beta, double p, double t) {
    if (std::isfinite(beta)) {
        return [lam, beta, p, t](double x) {
            return terminal_beta(lam, beta, p, t, std::vector<double>{x});
        };
    }
    return [lam, p, t](double x) {
        return terminal_inf(lam, p, t, std::vector<double>{x}).value;
    };
}

inline scalar_table tabulate_terminal(const std::function<double(double)>& f, double lo,
                                      double hi, std::size_t n) {
    scalar_table tab;
    tab.x0 = lo;
    tab.dx = (hi - lo) / static_cast<double>(n - 1);
    tab.f.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        tab.f[i] = f(lo + tab.dx * static_cast<double>(i));
    return tab;
}

// Discrete Gaussian smoothing of uniform grid data, evaluated only at grid
// nodes. Keeping every kink of the stored layer values on a quadrature node
// makes the quadrature error a smooth O(dx^2) field in x; a scattered-node
// rule leaks an oscillating error that a second-difference stencil divides
// by hx^2. Weighted layers run in the log domain with a per-point shift,
// since an exponential tilt can move the dominating contributions far from
// the evaluation point.
struct conv_backward {
    const path* pi = nullptr;
    std::vector<double> zeta;    // effective recursion weights
    std::size_t j_interval = 0;  // interval whose interior is evaluated
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> base;    // level-(j+1) values on the grid
    std::vector<double> tilted;  // zeta[j] * base

    double increment_var(std::size_t layer) const {
        return 2.0 * (pi->gamma[layer](0, 0) - pi->gamma[layer - 1](0, 0));
    }

    // One smoothing row with the variance-dependent constants hoisted out of
    // the per-point loops. A negative c marks a row with no motion left.
    struct row_eval {
        const std::vector<double>* data = nullptr;
        const std::vector<double>* scaled = nullptr;
        double zl = 0.0;
        double c = -1.0;
        double mass = 1.0;
        std::ptrdiff_t t_max = 0;

        double at(std::ptrdiff_t i) const {
            const std::vector<double>& f = *data;
            const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(f.size());
            if (c < 0.0) return f[static_cast<std::size_t>(i)];
            if (zl <= 1e-14) {
                double acc = 0.0;
                for (std::ptrdiff_t t = -t_max; t <= t_max; ++t) {
                    std::ptrdiff_t k = std::min(n - 1, std::max<std::ptrdiff_t>(0, i + t));
                    double o = static_cast<double>(t);
                    acc += std::exp(-c * o * o) * f[static_cast<std::size_t>(k)];
                }
                return acc / mass;
            }
            const std::vector<double>& a = *scaled;
            double left0 = static_cast<double>(i + 1);
            double right0 = static_cast<double>(n - i);
            double m = a[0] - c * left0 * left0;
            m = std::max(m, a[static_cast<std::size_t>(n - 1)] - c * right0 * right0);
            for (std::ptrdiff_t k = 0; k < n; ++k) {
                double o = static_cast<double>(k - i);
                m = std::max(m, a[static_cast<std::size_t>(k)] - c * o * o);
            }
            double u = 0.0;
            for (std::ptrdiff_t k = 0; k < n; ++k) {
                double o = static_cast<double>(k - i);
                double e = a[static_cast<std::size_t>(k)] - c * o * o - m;
                if (e > -60.0) u += std::exp(e);
            }
            // Edge values continue the data beyond both ends of the grid.
            for (double t = 0.0;; t += 1.0) {
                double o = left0 + t;
                double e = a[0] - c * o * o - m;
                if (e <= -60.0) break;
                u += std::exp(e);
            }
            for (double t = 0.0;; t += 1.0) {
                double o = right0 + t;
                double e = a[static_cast<std::size_t>(n - 1)] - c * o * o - m;
                if (e <= -60.0) break;
                u += std::exp(e);
            }
            return (m + std::log(u) - std::log(mass)) / zl;
        }
    };

    row_eval row_for_var(double var, double zl) const {
        row_eval r;
        r.data = &base;
        r.scaled = &tilted;
        r.zl = zl;
        if (var <= 1e-13) return r;
        r.c = dx * dx / (2.0 * var);
        r.t_max = static_cast<std::ptrdiff_t>(std::sqrt(60.0 / r.c)) + 1;
        r.mass = 1.0;
        for (std::ptrdiff_t t = 1; t <= r.t_max; ++t) {
            double o = static_cast<double>(t);
            r.mass += 2.0 * std::exp(-r.c * o * o);
        }
        return r;
    }

    // Interior row at time s inside [q_j, q_{j+1}).
    row_eval row(double s) const {
        std::size_t j = j_interval;
        double dq = pi->q[j + 1] - pi->q[j];
        double var = increment_var(j + 1) / dq * (pi->q[j + 1] - s);
        return row_for_var(var, zeta[j]);
    }

    void build(const std::function<double(double)>& terminal, std::size_t j, double lo,
               double step, std::size_t count) {
        j_interval = j;
        x0 = lo;
        dx = step;
        base.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            base[i] = terminal(x0 + dx * static_cast<double>(i));
        for (std::size_t l = pi->levels(); l-- > j + 1;) {
            double var = increment_var(l + 1);
            if (var <= 1e-13) continue;
            std::vector<double> sc(count);
            for (std::size_t i = 0; i < count; ++i) sc[i] = zeta[l] * base[i];
            tilted = std::move(sc);
            row_eval r = row_for_var(var, zeta[l]);
            std::vector<double> next(count);
            for (std::size_t i = 0; i < count; ++i)
                next[i] = r.at(static_cast<std::ptrdiff_t>(i));
            base = std::move(next);
        }
        tilted.resize(count);
        for (std::size_t i = 0; i < count; ++i) tilted[i] = zeta[j] * base[i];
    }
};

} // namespace detail

struct pde_mesh {
    std::size_t interval = static_cast<std::size_t>(-1);  // default: last live one
    std::size_t ns = 200;
    std::size_t nx = 200;
    double x_halfwidth_sd = 4.0;  // in units of the driving noise's final SD
    double knot_margin = 0.1;     // fraction of the interval excluded at each end
};

struct pde_report {
    double max_residual = 0.0;
    double max_residual_refined = 0.0;  // both mesh steps halved
    bool mesh_too_coarse = false;       // refinement moved the residual by > 50%
    std::size_t interval = 0;
};

// Finite-difference residual of d_s V + pi' V_xx + w pi' (V_x)^2 = 0 for the
// interior interpolation of the recursion, on a mesh strictly inside one
// knot interval (time derivatives at the knots themselves are one-sided and
// are deliberately excluded). The terminal is an arbitrary scalar function
// here; the multiplier-driven overload below is the usual entry point.
inline pde_report pde_residual_with_terminal(const std::function<double(double)>& terminal,
                                             const std::vector<double>& zeta_eff,
                                             const path& pi, const pde_mesh& mesh = {}) {
    require_input(pi.kappa == 1, "pde_residual: implemented for a single spin component");
    pi.validate();
    require_input(zeta_eff.size() == pi.q.size(),
                  "pde_residual: weight count must match the knot count");
    require_input(mesh.ns >= 8 && mesh.nx >= 8, "pde_residual: mesh too small");

    detail::conv_backward bw;
    bw.pi = &pi;
    bw.zeta = zeta_eff;

    std::size_t j = mesh.interval;
    if (j == static_cast<std::size_t>(-1)) {
        bool found = false;
        for (std::size_t c = pi.levels(); c-- > 0;) {
            if (pi.q[c + 1] - pi.q[c] > 1e-9 && bw.increment_var(c + 1) > 1e-13) {
                j = c;
                found = true;
                break;
            }
        }
        require_domain(found, "pde_residual: path has no interval with motion");
    }
    require_input(j < pi.levels(), "pde_residual: interval index out of range");
    require_domain(pi.q[j + 1] - pi.q[j] > 1e-9 && bw.increment_var(j + 1) > 1e-13,
                   "pde_residual: chosen interval has no motion");

    const double sd_total = std::sqrt(2.0 * pi.endpoint()(0, 0));
    const double x_half = mesh.x_halfwidth_sd * sd_total;
    const double dq = pi.q[j + 1] - pi.q[j];
    const double pi_prime = 0.5 * bw.increment_var(j + 1) / dq;
    const double w_j = zeta_eff[j];
    const double s_lo = pi.q[j] + mesh.knot_margin * dq;
    const double s_hi = pi.q[j + 1] - mesh.knot_margin * dq;

    // Evaluation grid at an eighth of the base mesh step, so the nodes of
    // both the base mesh and the halved mesh land on stored grid points.
    const double step = 2.0 * x_half / static_cast<double>(mesh.nx - 1) / 8.0;

    // Margin beyond the mesh: smoothing reach plus however far the tilt
    // zeta * f can push the dominating contributions before the Gaussian
    // envelope wins, grown until the edges sit 45 nats below the interior.
    // Only the weights of the smoothing layers j..levels-1 tilt anything;
    // the weight at the last knot never enters the recursion.
    double zeta_top = 0.0;
    for (std::size_t l = j; l < pi.levels(); ++l) zeta_top = std::max(zeta_top, zeta_eff[l]);
    const double var_total = 2.0 * pi.endpoint()(0, 0);
    double interior_top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 128; ++k) {
        double x = -x_half + 2.0 * x_half * static_cast<double>(k) / 128.0;
        interior_top = std::max(interior_top, zeta_top * terminal(x));
    }
    double span = 16.0 * sd_total;
    bool contained = false;
    for (int guard = 0; guard < 4000 && !contained; ++guard) {
        double edge = std::max(zeta_top * terminal(x_half + span),
                               zeta_top * terminal(-x_half - span));
        contained = edge - span * span / (2.0 * var_total) <= interior_top - 45.0;
        if (!contained) span += sd_total;
    }
    require_domain(contained, "pde_residual: terminal outgrows every workable grid");

    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(std::ceil(span / step));
    const std::ptrdiff_t i0 = pad;
    const std::size_t count = 2 * static_cast<std::size_t>(pad) + 8 * (mesh.nx - 1) + 1;
    bw.build(terminal, j, -x_half - static_cast<double>(pad) * step, step, count);

    auto residual_on = [&](std::size_t ns, std::size_t nx, std::ptrdiff_t stride) {
        double hs = (s_hi - s_lo) / static_cast<double>(ns - 1);
        double hx = step * static_cast<double>(stride);
        std::vector<std::vector<double>> phi(ns, std::vector<double>(nx));
        for (std::size_t a = 0; a < ns; ++a) {
            double s = s_lo + hs * static_cast<double>(a);
            detail::conv_backward::row_eval r = bw.row(s);
            for (std::size_t b = 0; b < nx; ++b)
                phi[a][b] = r.at(i0 + stride * static_cast<std::ptrdiff_t>(b));
        }
        double worst = 0.0;
        for (std::size_t a = 1; a + 1 < ns; ++a)
            for (std::size_t b = 1; b + 1 < nx; ++b) {
                double d_s = (phi[a + 1][b] - phi[a - 1][b]) / (2.0 * hs);
                double d_x = (phi[a][b + 1] - phi[a][b - 1]) / (2.0 * hx);
                double d_xx = (phi[a][b + 1] - 2.0 * phi[a][b] + phi[a][b - 1]) / (hx * hx);
                double res = d_s + pi_prime * d_xx + w_j * pi_prime * d_x * d_x;
                worst = std::max(worst, std::fabs(res));
            }
        return worst;
    };

    pde_report out;
    out.interval = j;
    out.max_residual = residual_on(mesh.ns, mesh.nx, 8);
    out.max_residual_refined = residual_on(2 * (mesh.ns - 1) + 1, 2 * (mesh.nx - 1) + 1, 4);
    double rel_change = std::fabs(out.max_residual_refined - out.max_residual) /
                        std::max(out.max_residual, 1e-300);
    out.mesh_too_coarse = rel_change > 0.5 && out.max_residual_refined > out.max_residual &&
                          out.max_residual_refined > 1e-9;
    return out;
}

// Residual for the multiplier-driven terminal: beta = infinity runs the hard
// terminal with the weights taken as given; a finite beta runs the soft
// terminal with weights scaled by beta.
inline pde_report pde_residual(const lagrange_multiplier& lam, double beta, double p,
                               double t, const discrete_measure& weights, const path& pi,
                               const pde_mesh& mesh = {}) {
    require_input(lam.kappa == 1, "pde_residual: implemented for a single spin component");
    weights.validate();
    detail::require_shared_knots(weights.q, pi.q, "pde_residual");
    require_domain(!std::isfinite(beta) || beta > 0.0,
                   "pde_residual: beta must be positive or infinite");
    std::vector<double> zeta_eff = detail::effective_weights(weights, beta);
    return pde_residual_with_terminal(detail::scalar_terminal(lam, beta, p, t), zeta_eff,
                                      pi, mesh);
}

enum class ac_control { none, optimal };

struct ac_options {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    double grid_halfwidth_sd = 10.0;  // gradient table reach, in SDs of the noise
    std::size_t grid_x_points = 4001;
    std::size_t grid_time_rows = 201;
    std::uint64_t seed = 0;
};

struct ac_result {
    double estimate = 0.0;
    double stderr_est = 0.0;
    double reference = 0.0;          // recursion value of the same functional
    double mean_terminal = 0.0;      // average of the terminal part alone
    double mean_sq_final = 0.0;      // average squared endpoint, for diagnostics
    double exploded_fraction = 0.0;
};

// Simulates the controlled diffusion dX = 2 w pi' V_x dt + sqrt(2 pi') dW on
// the single live interval of a one-level path and averages the value
// functional terminal(X(1)) minus the quadratic control cost. With the
// optimal feedback (the tabulated gradient of the interior interpolation)
// the average reproduces the recursion value; with no control it gives the
// plain expectation lower bound. Paths pushed off the gradient table are
// clamped and counted; more than 0.1% of them is an error.
inline ac_result ac_simulate(const lagrange_multiplier& lam, double beta, double p, double t,
                             const discrete_measure& weights, const path& pi,
                             ac_control control, const ac_options& opts = {}) {
    require_input(lam.kappa == 1 && pi.kappa == 1,
                  "ac_simulate: implemented for a single spin component");
    require_input(pi.levels() == 1, "ac_simulate: implemented for one-level paths");
    pi.validate();
    weights.validate();
    detail::require_shared_knots(weights.q, pi.q, "ac_simulate");
    require_domain(!std::isfinite(beta) || beta > 0.0,
                   "ac_simulate: beta must be positive or infinite");
    require_input(opts.n_paths >= 2, "ac_simulate: need at least two paths");
    require_domain(opts.dt > 0.0 && opts.dt < 1.0, "ac_simulate: bad time step");

    detail::scalar_backward bw;
    bw.pi = &pi;
    bw.zeta = detail::effective_weights(weights, beta);
    const double var_total = bw.increment_var(1);
    require_domain(var_total > 1e-13, "ac_simulate: path carries no motion");

    const double q0 = pi.q[0];
    const double dq = 1.0 - q0;
    require_domain(dq > 1e-9, "ac_simulate: the live interval has zero width");
    const double pi_prime = 0.5 * var_total / dq;
    const double w0 = bw.zeta[0];
    const double sd_total = std::sqrt(var_total);

    // Terminal table wide enough for the gradient grid plus the widest
    // smoothing shift that the interior evaluation applies.
    const double x_half = opts.grid_halfwidth_sd * sd_total;
    const double reach = x_half + 12.0 * sd_total;
    std::function<double(double)> terminal_fn = detail::scalar_terminal(lam, beta, p, t);
    detail::scalar_table table =
        detail::tabulate_terminal(terminal_fn, -reach, reach, 16385);
    bw.terminal = [&table](double x) { return table(x); };

    ac_result out;
    {
        discrete_measure scaled = weights;
        scaled.w = bw.zeta;
        scaled.flavor = measure_flavor::finite;
        auto term_vec = [&](const std::vector<double>& xx) { return terminal_fn(xx[0]); };
        out.reference = recursion(term_vec, scaled, pi);
    }

    // Gradient table: V_x by centered differences of the interior value on a
    // (time row, x) grid, bilinearly interpolated during the simulation.
    const std::size_t rows = std::max<std::size_t>(3, opts.grid_time_rows);
    const std::size_t cols = std::max<std::size_t>(5, opts.grid_x_points);
    const double hs_row = dq / static_cast<double>(rows - 1);
    const double hx = 2.0 * x_half / static_cast<double>(cols - 1);
    std::vector<std::vector<double>> grad_v;
    if (control == ac_control::optimal) {
        grad_v.assign(rows, std::vector<double>(cols, 0.0));
        for (std::size_t a = 0; a < rows; ++a) {
            double s = q0 + hs_row * static_cast<double>(a);
            for (std::size_t b = 0; b < cols; ++b) {
                double x = -x_half + hx * static_cast<double>(b);
                double up = bw.value_in_interval(0, s, x + 0.5 * hx);
                double dn = bw.value_in_interval(0, s, x - 0.5 * hx);
                grad_v[a][b] = (up - dn) / hx;
            }
        }
    }
    auto grad_at = [&](double s, double x, bool& off_grid) {
        double u = (s - q0) / hs_row;
        double w = (x + x_half) / hx;
        if (w < 0.0 || w > static_cast<double>(cols - 1)) off_grid = true;
        u = std::min(std::max(u, 0.0), static_cast<double>(rows - 1));
        w = std::min(std::max(w, 0.0), static_cast<double>(cols - 1));
        std::size_t a = std::min(static_cast<std::size_t>(u), rows - 2);
        std::size_t b = std::min(static_cast<std::size_t>(w), cols - 2);
        double fu = u - static_cast<double>(a);
        double fw = w - static_cast<double>(b);
        double top = grad_v[a][b] + fw * (grad_v[a][b + 1] - grad_v[a][b]);
        double bot = grad_v[a + 1][b] + fw * (grad_v[a + 1][b + 1] - grad_v[a + 1][b]);
        return top + fu * (bot - top);
    };

    const std::size_t steps = static_cast<std::size_t>(std::ceil(dq / opts.dt));
    const double dt = dq / static_cast<double>(steps);
    const double diff = std::sqrt(2.0 * pi_prime * dt);

    double acc = 0.0, acc_sq = 0.0, acc_term = 0.0, acc_x2 = 0.0;
    std::size_t exploded = 0;
    for (std::size_t path_i = 0; path_i < opts.n_paths; ++path_i) {
        rng_stream rng(opts.seed, 0xACE0000000000000ull + path_i);
        double x = 0.0;
        double cost = 0.0;
        bool off_grid = false;
        for (std::size_t k = 0; k < steps; ++k) {
            double s = q0 + dt * static_cast<double>(k);
            if (control == ac_control::optimal) {
                double v = grad_at(s, x, off_grid);
                x += 2.0 * w0 * pi_prime * v * dt;
                cost += w0 * pi_prime * v * v * dt;
            }
            x += diff * rng.normal();
            if (x > reach) x = reach;
            if (x < -reach) x = -reach;
        }
        if (off_grid) ++exploded;
        double term = table(x);
        double val = term - cost;
        acc += val;
        acc_sq += val * val;
        acc_term += term;
        acc_x2 += x * x;
    }

    double n = static_cast<double>(opts.n_paths);
    out.estimate = acc / n;
    double var = std::max(0.0, acc_sq / n - out.estimate * out.estimate);
    out.stderr_est = std::sqrt(var / (n - 1.0));
    out.mean_terminal = acc_term / n;
    out.mean_sq_final = acc_x2 / n;
    out.exploded_fraction = static_cast<double>(exploded) / n;
    require_numeric(out.exploded_fraction <= 1e-3,
                    "ac_simulate: more than 0.1% of paths left the gradient table");
    return out;
}

struct moment_report {
    double slope = 0.0;      // log-log regression of E X(1)^2 on the weight scale
    double cap = 0.0;        // admissible growth exponent plus slack
    bool within_cap = false;
};

// Least-squares slope of log E X(1)^2 against log of the weight scale from a
// family of zero-temperature simulations, compared to the admissible growth
// exponent 2/(2 - eta) + 0.2 with eta = max(1 + 1/(p-1), 2/(p-1)).
inline moment_report moment_diagnostic(
    const std::vector<std::pair<double, double>>& scale_and_moment, double p) {
    require_input(scale_and_moment.size() >= 2, "moment_diagnostic: need at least two runs");
    require_domain(p > 2.0, "moment_diagnostic: requires p > 2");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double n = static_cast<double>(scale_and_moment.size());
    for (const auto& [scale, moment] : scale_and_moment) {
        require_domain(scale > 0.0 && moment > 0.0,
                       "moment_diagnostic: scales and moments must be positive");
        double lx = std::log(scale), ly = std::log(moment);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    require_domain(std::fabs(denom) > 1e-12, "moment_diagnostic: degenerate scale set");
    moment_report out;
    out.slope = (n * sxy - sx * sy) / denom;
    double eta = std::max(1.0 + 1.0 / (p - 1.0), 2.0 / (p - 1.0));
    require_domain(eta < 2.0, "moment_diagnostic: growth exponent out of range");
    out.cap = 2.0 / (2.0 - eta) + 0.2;
    out.within_cap = out.slope <= out.cap;
    return out;
}

} // namespace lpspin
