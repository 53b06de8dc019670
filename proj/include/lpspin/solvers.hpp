// Ground state solvers. All of them are Armijo backtracking gradient ascent
// in disguise; what changes is the feasible set:
//   maximize_sphere        sum |sigma_i|^p = 1, gradient step + radial rescale
//   lagrangian_max         unconstrained penalized energy H_N - t sum |sigma_i|^p
//   localized_lagrangian   penalized energy inside a 2,2-norm ball
//   constrained_lagrangian fixed self-overlap R(sigma, sigma) = D
// Each solver runs cfg.restarts independent ascents from streams keyed by
// (seed, restart), so results are deterministic and monotone in restarts.
//
// The sphere and unconstrained solvers exploit that the interaction energy is
// an exact quadratic along a ray: with S = G + G^T, u = S sigma and v = S d,
//   energy(sigma + eta d) = energy(sigma) + eta (d, u) + eta^2 (d, v) / 2,
// so a complete line search costs one S-multiply, and u updates incrementally
// after acceptance (recomputed periodically to stop drift).
//
// Also here: the exact overlap-correction matrix A with A R A^T equal to the
// truncated target, and the orthogonal lift that shifts a self-overlap by
// eps * I.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lpspin/asymptotics.hpp"
#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/model.hpp"
#include "lpspin/rng.hpp"

namespace lpspin {

struct solver_config {
    int restarts = 16;
    long max_iter = 5000;   // per restart
    double step0 = 0.1;     // initial trial step of every line search
    int max_halvings = 30;
    double grad_tol = 1e-8; // stop when |grad| <= grad_tol * (1 + |value|)
    uint64_t seed = 0;
};

struct ground_state_result {
    double value = 0.0;
    spin_config config;
    long iterations = 0;     // accumulated over restarts
    int restarts_used = 0;
    bool converged = false;  // convergence flag of the restart that won
};

namespace detail {

constexpr double armijo_c = 1e-4;
constexpr long refresh_interval = 256;

// Weight vector w_i(k) = sigma_i(k) |sigma_i|^{p-2}, the gradient of
// (1/p) sum_i |sigma_i|^p. Rows at exactly zero get weight zero, the
// subgradient choice consistent with the penalty convention.
inline void pnorm_weight(const spin_config& x, double p, spin_config& w) {
    if (w.n != x.n || w.kappa != x.kappa) w = spin_config(x.n, x.kappa);
    for (std::size_t i = 0; i < x.n; ++i) {
        double r = x.row_norm(i);
        const double* xi = x.row(i);
        double* wi = w.row(i);
        if (r == 0.0) {
            for (std::size_t k = 0; k < x.kappa; ++k) wi[k] = 0.0;
        } else {
            double f = std::pow(r, p - 2.0);
            for (std::size_t k = 0; k < x.kappa; ++k) wi[k] = f * xi[k];
        }
    }
}

inline double pnorm_sum_shifted(const spin_config& x, const spin_config& d, double eta,
                                double p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) {
        const double* xi = x.row(i);
        const double* di = d.row(i);
        double r2 = 0.0;
        for (std::size_t k = 0; k < x.kappa; ++k) {
            double v = xi[k] + eta * di[k];
            r2 += v * v;
        }
        acc += std::pow(r2, 0.5 * p);
    }
    return acc;
}

struct sphere_restart_result {
    double energy = 0.0; // unscaled quadratic sum at the final iterate
    bool converged = false;
    long iterations = 0;
};

// One ascent on the sphere sum |sigma_i|^p = target. sigma holds the start
// on entry and the final iterate on exit. Maximizes the scale-invariant
// quotient of the unscaled energy, which restricted to the sphere is the
// energy itself; every line-search trial is exact via the ray expansion.
inline sphere_restart_result sphere_ascent(const sym_coupling& coup, double p,
                                           double target, const solver_config& cfg,
                                           spin_config& sigma, spin_config& u,
                                           spin_config& w, spin_config& d,
                                           spin_config& v) {
    sphere_restart_result out;
    double f = pnorm_sum(sigma, p);
    double scale = std::pow(target / f, 1.0 / p);
    for (double& x : sigma.s) x *= scale;

    coup.apply(sigma, u);
    double h = 0.5 * dot(sigma, u);
    long since_refresh = 0;

    for (; out.iterations < cfg.max_iter; ++out.iterations) {
        pnorm_weight(sigma, p, w);
        // Gradient of the quotient at a sphere point: u - (2h/target) w.
        double wfac = 2.0 * h / target;
        for (std::size_t idx = 0; idx < d.s.size(); ++idx)
            d.s[idx] = u.s[idx] - wfac * w.s[idx];
        double gn2 = 0.0;
        for (double x : d.s) gn2 += x * x;
        if (std::sqrt(gn2) <= cfg.grad_tol * (1.0 + std::fabs(h))) {
            out.converged = true;
            break;
        }

        coup.apply(d, v);
        double a1 = dot(d, u);
        double a2 = dot(d, v);

        double eta = cfg.step0;
        bool accepted = false;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving, eta *= 0.5) {
            double f_trial = pnorm_sum_shifted(sigma, d, eta, p);
            if (!(f_trial > 0.0) || !std::isfinite(f_trial)) continue;
            double h_ray = h + eta * a1 + 0.5 * eta * eta * a2;
            double h_trial = h_ray * std::pow(target / f_trial, 2.0 / p);
            if (h_trial >= h + armijo_c * eta * gn2) {
                double cs = std::pow(target / f_trial, 1.0 / p);
                for (std::size_t idx = 0; idx < sigma.s.size(); ++idx) {
                    sigma.s[idx] = cs * (sigma.s[idx] + eta * d.s[idx]);
                    u.s[idx] = cs * (u.s[idx] + eta * v.s[idx]);
                }
                h = h_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break; // numerically stationary

        if (++since_refresh >= refresh_interval) {
            coup.apply(sigma, u);
            h = 0.5 * dot(sigma, u);
            since_refresh = 0;
        }
    }

    // Exact energy at the final iterate, free of incremental drift.
    coup.apply(sigma, u);
    out.energy = 0.5 * dot(sigma, u);
    return out;
}

} // namespace detail

// Maximize the unscaled energy sum_ij g_ij (sigma_i, sigma_j) over the sphere
// sum_i |sigma_i|_2^p = 1, for p >= 1. Returns the best of cfg.restarts
// ascents; the value is a lower bound for the true maximum by construction.
inline ground_state_result maximize_sphere_coupled(const sym_coupling& coup, double p,
                                                   std::size_t kappa,
                                                   const solver_config& cfg,
                                                   double pnorm_target = 1.0,
                                                   uint64_t stream_offset = 0) {
    require_input(p >= 1.0, "maximize_sphere: p must be >= 1");
    require_input(cfg.restarts >= 1, "maximize_sphere: need at least one restart");
    require_input(kappa >= 1, "maximize_sphere: kappa must be >= 1");
    const std::size_t n = coup.n;

    ground_state_result best;
    bool have_best = false;
    spin_config sigma(n, kappa), u(n, kappa), w(n, kappa), d(n, kappa), v(n, kappa);

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        rng_stream rs(cfg.seed, stream_offset + static_cast<uint64_t>(restart));
        rs.fill_normal(sigma.s.data(), sigma.s.size());
        detail::sphere_restart_result r =
            detail::sphere_ascent(coup, p, pnorm_target, cfg, sigma, u, w, d, v);
        best.iterations += r.iterations;
        if (!have_best || r.energy > best.value) {
            have_best = true;
            best.value = r.energy;
            best.config = sigma;
            best.converged = r.converged;
        }
        best.restarts_used = restart + 1;
    }
    return best;
}

inline ground_state_result maximize_sphere(const disorder& dis, double p, std::size_t kappa,
                                           const solver_config& cfg) {
    return maximize_sphere_coupled(sym_coupling::from_disorder(dis), p, kappa, cfg);
}

// Ground state energy via the unnormalized maximum: N^{2/p - 3/2} times the
// maximize_sphere value.
inline double gse(const disorder& dis, double p, std::size_t kappa,
                  const solver_config& cfg) {
    require_input(p > 2.0, "gse: p must be > 2");
    double gp = maximize_sphere(dis, p, kappa, cfg).value;
    return gp * std::pow(static_cast<double>(dis.n), 2.0 / p - 1.5);
}

// Same quantity solved directly: (1/N) max of H_N over the normalized sphere
// (1/N) sum |sigma_i|^p = 1. A genuinely separate optimization (different
// sphere, different starts); agreement with gse() checks the rescaling
// identity end to end.
inline double gse_direct(const disorder& dis, double p, std::size_t kappa,
                         const solver_config& cfg) {
    require_input(p > 2.0, "gse_direct: p must be > 2");
    const double nd = static_cast<double>(dis.n);
    sym_coupling coup = sym_coupling::from_disorder(dis);
    ground_state_result r = maximize_sphere_coupled(coup, p, kappa, cfg, nd,
                                                    /*stream_offset=*/1u << 20);
    // r.value is the unscaled energy at sum |sigma_i|^p = N; H_N adds N^{-1/2}.
    return r.value / std::sqrt(nd) / nd;
}

// Localization radius for the penalized problem: any sigma with nonnegative
// penalized energy satisfies (1/N) sum |sigma_i|^2 <= radius^2 with
// radius = (|G|_2 / (t sqrt(N)))^{1/(p-2)} on the realized disorder. Random
// restarts are drawn inside this ball.
inline double localization_radius(const disorder& dis, double p, double t) {
    require_input(p > 2.0 && t > 0.0, "localization_radius: needs p > 2, t > 0");
    return std::pow(opnorm_scaled(dis) / t, 1.0 / (p - 2.0));
}

namespace detail {

struct penalized_state {
    spin_config sigma, u, d, v;
    double h_unscaled = 0.0; // sum_ij g_ij (sigma_i, sigma_j)
    double pen = 0.0;        // sum_i |sigma_i|^p
};

// Shared ascent for the unconstrained and ball-localized penalized solvers.
// ball_22_sq < 0 disables the ball; otherwise trial points are radially
// projected onto (1/N) sum |sigma_i|^2 <= ball_22_sq, which scales the
// energy by c^2 and the penalty by c^p, keeping trials exact.
inline void penalized_ascent(const sym_coupling& coup, double p, double t,
                             double ball_22_sq, const solver_config& cfg,
                             penalized_state& st, long& iters_out, bool& converged_out) {
    const double sqrt_n = std::sqrt(static_cast<double>(coup.n));
    const double nd = static_cast<double>(coup.n);
    auto objective = [&](double h_uns, double pen) { return h_uns / sqrt_n - t * pen; };

    coup.apply(st.sigma, st.u);
    st.h_unscaled = 0.5 * dot(st.sigma, st.u);
    st.pen = pnorm_sum(st.sigma, p);
    double fval = objective(st.h_unscaled, st.pen);

    converged_out = false;
    long it = 0;
    long since_refresh = 0;
    spin_config w(st.sigma.n, st.sigma.kappa);

    for (; it < cfg.max_iter; ++it) {
        pnorm_weight(st.sigma, p, w);
        for (std::size_t idx = 0; idx < st.d.s.size(); ++idx)
            st.d.s[idx] = st.u.s[idx] / sqrt_n - t * p * w.s[idx];
        double gn2 = 0.0;
        for (double x : st.d.s) gn2 += x * x;
        if (std::sqrt(gn2) <= cfg.grad_tol * (1.0 + std::fabs(fval))) {
            converged_out = true;
            break;
        }

        coup.apply(st.d, st.v);
        double a1 = dot(st.d, st.u);
        double a2 = dot(st.d, st.v);

        double eta = cfg.step0;
        bool accepted = false;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving, eta *= 0.5) {
            double h_ray = st.h_unscaled + eta * a1 + 0.5 * eta * eta * a2;
            double frob = 0.0;
            for (std::size_t i = 0; i < st.sigma.s.size(); ++i) {
                double x = st.sigma.s[i] + eta * st.d.s[i];
                frob += x * x;
            }
            double c_proj = 1.0;
            if (ball_22_sq >= 0.0 && frob / nd > ball_22_sq)
                c_proj = std::sqrt(ball_22_sq * nd / frob);
            double pen_trial = pnorm_sum_shifted(st.sigma, st.d, eta, p);
            if (c_proj != 1.0) pen_trial *= std::pow(c_proj, p);
            double f_trial = objective(c_proj * c_proj * h_ray, pen_trial);
            if (!std::isfinite(f_trial)) continue;
            bool ok;
            if (c_proj == 1.0) {
                ok = f_trial >= fval + armijo_c * eta * gn2;
            } else {
                // Projected step: require sufficient increase against the
                // actual displacement, the standard projected-gradient rule.
                double move2 = 0.0;
                for (std::size_t i = 0; i < st.sigma.s.size(); ++i) {
                    double x = c_proj * (st.sigma.s[i] + eta * st.d.s[i]) - st.sigma.s[i];
                    move2 += x * x;
                }
                ok = f_trial >= fval + armijo_c * move2 / eta;
            }
            if (ok) {
                for (std::size_t i = 0; i < st.sigma.s.size(); ++i) {
                    st.sigma.s[i] = c_proj * (st.sigma.s[i] + eta * st.d.s[i]);
                    st.u.s[i] = c_proj * (st.u.s[i] + eta * st.v.s[i]);
                }
                st.h_unscaled = c_proj * c_proj * h_ray;
                st.pen = pen_trial;
                fval = f_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        if (++since_refresh >= refresh_interval) {
            coup.apply(st.sigma, st.u);
            st.h_unscaled = 0.5 * dot(st.sigma, st.u);
            st.pen = pnorm_sum(st.sigma, p);
            fval = objective(st.h_unscaled, st.pen);
            since_refresh = 0;
        }
    }
    // Leave exact values behind, free of incremental drift.
    coup.apply(st.sigma, st.u);
    st.h_unscaled = 0.5 * dot(st.sigma, st.u);
    st.pen = pnorm_sum(st.sigma, p);
    iters_out = it;
}

inline ground_state_result penalized_best_of_restarts(const disorder& dis, double p,
                                                      double t, std::size_t kappa,
                                                      const solver_config& cfg,
                                                      double ball_22_sq,
                                                      double init_radius) {
    const std::size_t n = dis.n;
    const double nd = static_cast<double>(n);
    sym_coupling coup = sym_coupling::from_disorder(dis);

    ground_state_result best;
    best.value = 0.0; // the zero configuration is always admissible
    best.config = spin_config(n, kappa);
    best.converged = true;

    penalized_state st;
    st.sigma = spin_config(n, kappa);
    st.d = spin_config(n, kappa);
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        rng_stream rs(cfg.seed, static_cast<uint64_t>(restart));
        rs.fill_normal(st.sigma.s.data(), st.sigma.s.size());
        double norm22 = std::sqrt(frob_sq(st.sigma) / nd);
        double target = init_radius * rs.uniform01();
        double scale = (norm22 > 0.0) ? target / norm22 : 0.0;
        for (double& x : st.sigma.s) x *= scale;

        long iters = 0;
        bool conv = false;
        penalized_ascent(coup, p, t, ball_22_sq, cfg, st, iters, conv);
        best.iterations += iters;
        double value = (st.h_unscaled / std::sqrt(nd) - t * st.pen) / nd;
        if (value > best.value) {
            best.value = value;
            best.config = st.sigma;
            best.converged = conv;
        }
        best.restarts_used = restart + 1;
    }
    return best;
}

} // namespace detail

// L(t) = (1/N) max over all configurations of H_N(sigma) - t sum |sigma_i|^p,
// for p > 2 and t > 0. Restarts start inside the localization ball; the zero
// configuration is always a candidate, so the value is >= 0.
inline ground_state_result lagrangian_max(const disorder& dis, double p, double t,
                                          std::size_t kappa, const solver_config& cfg) {
    require_input(p > 2.0, "lagrangian_max: p must be > 2");
    require_input(t > 0.0, "lagrangian_max: t must be > 0");
    double radius = localization_radius(dis, p, t);
    return detail::penalized_best_of_restarts(dis, p, t, kappa, cfg, -1.0, radius);
}

// L_u(t) = (1/N) max of the penalized energy over (1/N) sum |sigma_i|^2 <= u.
inline ground_state_result localized_lagrangian(const disorder& dis, double p, double t,
                                                double u, std::size_t kappa,
                                                const solver_config& cfg) {
    require_input(p > 2.0, "localized_lagrangian: p must be > 2");
    require_input(t > 0.0, "localized_lagrangian: t must be > 0");
    require_input(u > 0.0, "localized_lagrangian: ball size must be positive");
    return detail::penalized_best_of_restarts(dis, p, t, kappa, cfg, u, std::sqrt(u));
}

// L_D(t) = (1/N) max of the penalized energy subject to R(sigma, sigma) = D
// exactly. Parameterize sigma_i = S q_i with S = sqrt(D) and (1/N) Q^T Q = I,
// so the constraint holds by construction for every feasible Q, and ascend Q
// with tangent-projected gradients and a polar retraction.
inline ground_state_result constrained_lagrangian(const disorder& dis, double p, double t,
                                                  const sym_matrix& d_target,
                                                  const solver_config& cfg) {
    require_input(p > 2.0, "constrained_lagrangian: p must be > 2");
    require_input(t >= 0.0, "constrained_lagrangian: t must be >= 0");
    const std::size_t kappa = d_target.n;
    require_input(kappa >= 1, "constrained_lagrangian: empty overlap target");
    require_domain(dis.n >= kappa,
                   "constrained_lagrangian: infeasible, need at least kappa sites");
    const std::size_t n = dis.n;
    const double nd = static_cast<double>(n);
    const double sqrt_n = std::sqrt(nd);
    sym_matrix s_root = sqrt_psd(d_target);
    sym_coupling coup = sym_coupling::from_disorder(dis);

    // Rows of q right-multiplied by a kappa x kappa symmetric matrix.
    auto apply_small = [&](const spin_config& q, const sym_matrix& m, spin_config& out) {
        if (out.n != n || out.kappa != kappa) out = spin_config(n, kappa);
        for (std::size_t i = 0; i < n; ++i) {
            const double* qi = q.row(i);
            double* oi = out.row(i);
            for (std::size_t k = 0; k < kappa; ++k) {
                double acc = 0.0;
                for (std::size_t mm = 0; mm < kappa; ++mm) acc += m(k, mm) * qi[mm];
                oi[k] = acc;
            }
        }
    };

    spin_config polar_buf;
    auto polar_normalize = [&](spin_config& q) {
        sym_matrix gram = overlap_self(q).base; // Q^T Q / N
        sym_matrix wmat = inv_sqrt_pd(gram);
        apply_small(q, wmat, polar_buf);
        q = polar_buf;
    };

    spin_config sig_buf, u_buf;
    auto objective = [&](const spin_config& q, spin_config& sig, spin_config& u) {
        apply_small(q, s_root, sig);
        coup.apply(sig, u);
        double h_uns = 0.5 * dot(sig, u);
        return h_uns / sqrt_n - t * pnorm_sum(sig, p);
    };

    ground_state_result best;
    bool have_best = false;
    spin_config q(n, kappa), sig(n, kappa), u(n, kappa), grad_sig(n, kappa);
    spin_config grad_q(n, kappa), delta(n, kappa), trial(n, kappa), sig_t(n, kappa),
        u_t(n, kappa), w(n, kappa);

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        rng_stream rs(cfg.seed, static_cast<uint64_t>(restart));
        rs.fill_normal(q.s.data(), q.s.size());
        polar_normalize(q);
        double fval = objective(q, sig, u);
        bool converged = false;
        long it = 0;

        for (; it < cfg.max_iter; ++it) {
            // Gradient in sigma, pulled back to Q through the symmetric root.
            detail::pnorm_weight(sig, p, w);
            for (std::size_t idx = 0; idx < grad_sig.s.size(); ++idx)
                grad_sig.s[idx] = u.s[idx] / sqrt_n - t * p * w.s[idx];
            apply_small(grad_sig, s_root, grad_q);

            // Tangent projection: delta = grad - Q sym(Q^T grad) / N.
            mat qtg(kappa, kappa);
            for (std::size_t i = 0; i < n; ++i) {
                const double* qi = q.row(i);
                const double* gi = grad_q.row(i);
                for (std::size_t a = 0; a < kappa; ++a)
                    for (std::size_t b = 0; b < kappa; ++b) qtg(a, b) += qi[a] * gi[b];
            }
            sym_matrix sym_qtg = sym_matrix::from_general(qtg);
            for (double& x : sym_qtg.a) x /= nd;
            apply_small(q, sym_qtg, delta);
            for (std::size_t idx = 0; idx < delta.s.size(); ++idx)
                delta.s[idx] = grad_q.s[idx] - delta.s[idx];

            double gn2 = 0.0;
            for (double x : delta.s) gn2 += x * x;
            if (std::sqrt(gn2 / nd) <= cfg.grad_tol * (1.0 + std::fabs(fval / nd))) {
                converged = true;
                break;
            }

            double eta = cfg.step0;
            bool accepted = false;
            for (int halving = 0; halving <= cfg.max_halvings; ++halving, eta *= 0.5) {
                for (std::size_t idx = 0; idx < trial.s.size(); ++idx)
                    trial.s[idx] = q.s[idx] + eta * delta.s[idx];
                polar_normalize(trial);
                double f_trial = objective(trial, sig_t, u_t);
                if (!std::isfinite(f_trial)) continue;
                if (f_trial >= fval + detail::armijo_c * eta * gn2) {
                    q = trial;
                    sig = sig_t;
                    u = u_t;
                    fval = f_trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }

        best.iterations += it;
        if (!have_best || fval / nd > best.value) {
            // Re-polish the constraint and confirm the overlap really is D.
            polar_normalize(q);
            fval = objective(q, sig, u);
            mat r = overlap(sig, sig);
            double dev = 0.0;
            for (std::size_t a = 0; a < kappa; ++a)
                for (std::size_t b = 0; b < kappa; ++b)
                    dev = std::max(dev, std::fabs(r(a, b) - d_target(a, b)));
            require_numeric(dev <= 1e-8,
                            "constrained_lagrangian: overlap drifted off target by " +
                                std::to_string(dev));
            have_best = true;
            best.value = fval / nd;
            best.config = sig;
            best.converged = converged;
        }
        best.restarts_used = restart + 1;
    }
    return best;
}

struct overlap_correction {
    mat a;                 // the correcting matrix
    spin_config s_new;     // rows A sigma_i
    sym_matrix d_eps;      // eigenvalue truncation of D at sqrt(eps)
    double distortion = 0.0; // tr((A - I) R (A - I)^T)
    std::size_t kept_rank = 0;
};

// Constructive overlap correction: given a configuration whose self-overlap R
// is entrywise within eps of a PSD target D, build the matrix A for which
// A R A^T equals the truncation D_eps of D exactly. In the eigenbasis of D
// the kept block is B = Lambda^{1/2} Rtilde^{-1/2} Lambda^{-1/2} with
// Rtilde = Lambda^{-1/2} R' Lambda^{-1/2}; discarded directions map to zero.
inline overlap_correction correct_overlap(const spin_config& s, const sym_matrix& d_target,
                                          double eps) {
    const std::size_t kappa = s.kappa;
    require_input(d_target.n == kappa, "correct_overlap: dimension mismatch");
    double kap_d = static_cast<double>(kappa);
    require_input(eps > 0.0 && eps < 1.0 / (kap_d * kap_d),
                  "correct_overlap: eps must lie in (0, kappa^{-2})");
    sym_matrix r = overlap_self(s).base;
    require_domain(inf_norm(sym_sub(r, d_target)) < eps,
                   "correct_overlap: overlap is not within eps of the target");

    eig_result ed = eig_sym(d_target);
    // Reorder descending so the kept block sits in the leading corner.
    std::vector<double> lam(kappa);
    mat qrot(kappa, kappa);
    for (std::size_t j = 0; j < kappa; ++j) {
        lam[j] = ed.values[kappa - 1 - j];
        for (std::size_t i = 0; i < kappa; ++i) qrot(i, j) = ed.vectors(i, kappa - 1 - j);
    }
    double thresh = std::sqrt(eps);
    std::size_t m = 0;
    while (m < kappa && lam[m] >= thresh) ++m;

    overlap_correction out;
    out.kept_rank = m;
    out.d_eps = sym_matrix(kappa);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < kappa; ++i)
            for (std::size_t k = 0; k < kappa; ++k)
                out.d_eps(i, k) += lam[j] * qrot(i, j) * qrot(k, j);
    out.d_eps = sym_matrix::from_general(out.d_eps.as_mat());

    mat a_tilde(kappa, kappa);
    if (m > 0) {
        // Rotated overlap block and its normalized version.
        mat rp = matmul(matmul(transpose(qrot), r.as_mat()), qrot);
        sym_matrix rtilde(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                rtilde(i, j) = rp(i, j) / std::sqrt(lam[i] * lam[j]);
        rtilde = sym_matrix::from_general(rtilde.as_mat());
        require_domain(lambda_min(rtilde) > 0.1,
                       "correct_overlap: normalized overlap block is near-singular");
        sym_matrix rt_inv_root = inv_sqrt_pd(rtilde);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                a_tilde(i, j) = std::sqrt(lam[i]) * rt_inv_root(i, j) / std::sqrt(lam[j]);
    }
    out.a = matmul(matmul(qrot, a_tilde), transpose(qrot));

    out.s_new = spin_config(s.n, kappa);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double* si = s.row(i);
        double* oi = out.s_new.row(i);
        for (std::size_t k = 0; k < kappa; ++k) {
            double acc = 0.0;
            for (std::size_t mm = 0; mm < kappa; ++mm) acc += out.a(k, mm) * si[mm];
            oi[k] = acc;
        }
    }

    mat a_minus_i = mat_sub(out.a, mat::identity(kappa));
    mat m1 = matmul(matmul(a_minus_i, r.as_mat()), transpose(a_minus_i));
    for (std::size_t i = 0; i < kappa; ++i) out.distortion += m1(i, i);
    return out;
}

// Shift a self-overlap by eps * I: add sqrt(eps) tau(k) to component k, where
// the tau(k) are unit-overlap columns orthogonal to each other and to every
// sigma(k'). Needs N > 2 kappa so the orthogonal directions exist. The
// per-component overlap shift is exactly eps; the total squared displacement
// (1/N) sum |rho_i - sigma_i|^2 is kappa * eps.
inline spin_config lift_to_positive(const spin_config& s, double eps) {
    require_input(eps >= 0.0, "lift_to_positive: eps must be >= 0");
    require_input(s.n > 2 * s.kappa, "lift_to_positive: need N > 2 kappa");
    if (eps == 0.0) return s;
    const std::size_t n = s.n;
    const std::size_t kappa = s.kappa;

    // Orthonormal basis for span{sigma(1..kappa)}, grown one column at a time.
    // Projection against a non-orthogonal set would leave residue in the span,
    // so each sigma column is orthogonalized against the accepted ones first;
    // columns that are (numerically) dependent on earlier ones add nothing to
    // the span and are skipped.
    std::vector<std::vector<double>> basis;
    basis.reserve(2 * kappa);
    auto project_out = [&](std::vector<double>& v) {
        for (const auto& b : basis) {
            double proj = 0.0;
            for (std::size_t i = 0; i < n; ++i) proj += v[i] * b[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= proj * b[i];
        }
    };
    for (std::size_t k = 0; k < kappa; ++k) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = s.s[i * kappa + k];
        double pre = 0.0;
        for (double v : col) pre += v * v;
        pre = std::sqrt(pre);
        if (pre == 0.0) continue;
        project_out(col);
        project_out(col); // second pass scrubs the first pass's rounding
        double post = 0.0;
        for (double v : col) post += v * v;
        post = std::sqrt(post);
        if (post < 1e-8 * pre) continue;
        for (double& v : col) v /= post;
        basis.push_back(std::move(col));
    }

    rng_stream rs(0x6C696674ull, 0);
    std::vector<std::vector<double>> taus;
    while (taus.size() < kappa) {
        std::vector<double> cand(n);
        rs.fill_normal(cand.data(), n);
        double pre = 0.0;
        for (double v : cand) pre += v * v;
        pre = std::sqrt(pre);
        project_out(cand);
        project_out(cand);
        double post = 0.0;
        for (double v : cand) post += v * v;
        post = std::sqrt(post);
        if (post < 1e-8 * pre) continue; // near-degenerate draw, try again
        for (double& v : cand) v /= post;
        basis.push_back(cand);
        taus.push_back(std::move(cand));
    }

    spin_config rho = s;
    double scale = std::sqrt(eps * static_cast<double>(n)); // unit overlap: |tau|_2 = sqrt(N)
    for (std::size_t k = 0; k < kappa; ++k)
        for (std::size_t i = 0; i < n; ++i)
            rho.s[i * kappa + k] += scale * taus[k][i];
    return rho;
}

struct derivative_check {
    double lag = 0.0;       // L(t)
    double lag_prime = 0.0; // central difference derivative
    double ode_residual = 0.0;            // |L + t (p/2 - 1) L'| / (|L| + 1e-12)
    double optimizer_norm_residual = 0.0; // |(1/N) sum |rho_i|^p + L'| / (|L'| + 1e-12)
    double gse_value = 0.0;               // (L - t L') / (-L')^{2/p}
};

// Evaluate L(t) and its numerical t-derivative on one fixed disorder, and
// report the scale-invariant residuals of the two exact finite-N identities
// L = -t (p/2 - 1) L' and (1/N) sum |rho_i|^p = -L' at the maximizer rho.
// h <= 0 selects the default step 1e-4 * t.
inline derivative_check derivative_relation_check(const disorder& dis, double p, double t,
                                                  std::size_t kappa,
                                                  const solver_config& cfg, double h = 0.0) {
    require_input(t > 0.0, "derivative_relation_check: t must be > 0");
    if (h <= 0.0) h = 1e-4 * t;
    ground_state_result mid = lagrangian_max(dis, p, t, kappa, cfg);
    ground_state_result lo = lagrangian_max(dis, p, t - h, kappa, cfg);
    ground_state_result hi = lagrangian_max(dis, p, t + h, kappa, cfg);
    derivative_check out;
    out.lag = mid.value;
    out.lag_prime = (hi.value - lo.value) / (2.0 * h);
    out.ode_residual = std::fabs(out.lag + t * (0.5 * p - 1.0) * out.lag_prime) /
                       (std::fabs(out.lag) + 1e-12);
    double rho_pnorm = pnorm_sum(mid.config, p) / static_cast<double>(dis.n);
    out.optimizer_norm_residual =
        std::fabs(rho_pnorm + out.lag_prime) / (std::fabs(out.lag_prime) + 1e-12);
    out.gse_value = gse_identity(p, t, out.lag, out.lag_prime);
    return out;
}

struct equality_check {
    double scalar_value = 0.0;
    double vector_value = 0.0;
    double rel_gap = 0.0;
};

// Maximum of the quadratic form over the p,2-sphere with scalar spins versus
// kappa-vector spins. For 1 <= p <= 2 the two agree for every coupling matrix.
inline equality_check scalar_vector_equality_check(const mat& coupling, double p,
                                                   std::size_t kappa,
                                                   const solver_config& cfg) {
    require_input(p >= 1.0 && p <= 2.0, "scalar_vector_equality_check: needs 1 <= p <= 2");
    disorder dis = disorder::from_matrix(coupling);
    sym_coupling coup = sym_coupling::from_disorder(dis);
    equality_check out;
    out.scalar_value = maximize_sphere_coupled(coup, p, 1, cfg).value;
    out.vector_value = maximize_sphere_coupled(coup, p, kappa, cfg).value;
    out.rel_gap =
        std::fabs(out.scalar_value - out.vector_value) /
        (std::max(std::fabs(out.scalar_value), std::fabs(out.vector_value)) + 1e-300);
    return out;
}

} // namespace lpspin
