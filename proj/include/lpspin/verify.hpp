// Self-check suites behind the verify subcommand. Each suite returns one
// record per property; a failing record carries the full inputs of the
// first counterexample so the run can be reproduced directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lpspin/asymptotics.hpp"
#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/model.hpp"
#include "lpspin/parallel.hpp"
#include "lpspin/parisi.hpp"
#include "lpspin/parisi_checks.hpp"
#include "lpspin/rng.hpp"
#include "lpspin/serialize.hpp"

namespace lpspin {

struct check_result {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

template <class Fn>
inline void run_check(std::vector<check_result>& out, const std::string& name, Fn&& fn) {
    check_result r;
    r.name = name;
    try {
        std::string detail_text;
        r.pass = fn(detail_text);
        r.detail = detail_text;
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s + "]";
}

inline std::string describe_sym(const sym_matrix& m) {
    std::string s = "[";
    for (std::size_t i = 0; i < m.n; ++i) {
        if (i) s += "; ";
        for (std::size_t j = 0; j < m.n; ++j) {
            if (j) s += ", ";
            s += format_double(m(i, j));
        }
    }
    return s + "]";
}

inline sym_matrix random_sym(rng_stream& rng, std::size_t n, double scale) {
    mat g(n, n);
    for (double& e : g.a) e = scale * rng.normal();
    return sym_matrix::from_general(g);
}

inline sym_matrix random_psd(rng_stream& rng, std::size_t n, double scale) {
    mat g(n, n);
    for (double& e : g.a) e = scale * rng.normal();
    return sym_matrix::from_general(matmul(g, transpose(g)));
}

} // namespace detail

// Matrix-order invariants on random instances: the Hilbert-Schmidt norm of a
// PSD matrix never exceeds its trace, congruence preserves the Loewner
// order, diagonal dominance certifies positive semidefiniteness, and the
// perturbation threshold really protects positive semidefiniteness.
inline std::vector<check_result> verify_linalg(std::uint64_t seed, int workers = 1,
                                               std::size_t instances = 1000) {
    (void)workers;
    std::vector<check_result> out;

    detail::run_check(out, "linalg/trace-dominates-hs-norm", [&](std::string& d) {
        for (std::size_t i = 0; i < instances; ++i) {
            rng_stream rng(seed, 0x100000 + i);
            std::size_t n = 1 + static_cast<std::size_t>(rng.next_u32() % 6);
            sym_matrix r = detail::random_psd(rng, n, 1.0);
            double hs = hs_norm(r), tr = trace(r);
            if (hs > tr + 1e-10 * std::max(1.0, tr)) {
                d = "instance " + std::to_string(i) + ": hs=" + format_double(hs) +
                    " > trace=" + format_double(tr) + " for R=" + detail::describe_sym(r);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "linalg/congruence-preserves-loewner-order", [&](std::string& d) {
        for (std::size_t i = 0; i < instances; ++i) {
            rng_stream rng(seed, 0x110000 + i);
            std::size_t n = 1 + static_cast<std::size_t>(rng.next_u32() % 5);
            sym_matrix a = detail::random_psd(rng, n, 1.0);
            sym_matrix gap = detail::random_psd(rng, n, 0.7);
            sym_matrix b = sym_add(a, gap);
            mat m(n, n);
            for (double& e : m.a) e = rng.normal();
            sym_matrix ca = sym_matrix::from_general(
                matmul(matmul(transpose(m), a.as_mat()), m));
            sym_matrix cb = sym_matrix::from_general(
                matmul(matmul(transpose(m), b.as_mat()), m));
            if (!loewner_leq(ca, cb)) {
                d = "instance " + std::to_string(i) + ": M^T A M !<= M^T B M with A=" +
                    detail::describe_sym(a) + ", B=" + detail::describe_sym(b);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "linalg/gershgorin-certificate-implies-psd", [&](std::string& d) {
        for (std::size_t i = 0; i < instances; ++i) {
            rng_stream rng(seed, 0x120000 + i);
            std::size_t n = 1 + static_cast<std::size_t>(rng.next_u32() % 6);
            sym_matrix m = detail::random_sym(rng, n, 1.0);
            for (std::size_t k = 0; k < n; ++k) {
                double off = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != k) off += std::fabs(m(k, j));
                m(k, k) = off + rng.uniform01();
            }
            if (!gershgorin_psd_certificate(m)) {
                d = "instance " + std::to_string(i) +
                    ": dominant matrix not certified: " + detail::describe_sym(m);
                return false;
            }
            double lmin = lambda_min(m);
            if (lmin < -1e-10 * std::max(1.0, trace_scale(m))) {
                d = "instance " + std::to_string(i) + ": certificate held but lambda_min=" +
                    format_double(lmin) + " for " + detail::describe_sym(m);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "linalg/perturbation-threshold-protects-psd", [&](std::string& d) {
        for (std::size_t i = 0; i < instances; ++i) {
            rng_stream rng(seed, 0x130000 + i);
            std::size_t n = 1 + static_cast<std::size_t>(rng.next_u32() % 5);
            sym_matrix a = detail::random_psd(rng, n, 1.0);
            a = sym_add(a, sym_scale(sym_matrix::identity(n), 0.05));
            sym_matrix p = detail::random_sym(rng, n, 1.0);
            double c = pd_perturbation_threshold(a, p);
            if (!std::isfinite(c)) continue;  // P = 0 allows any size
            for (double sign : {1.0, -1.0}) {
                sym_matrix shifted = sym_add(a, sym_scale(p, sign * c));
                if (!is_psd(shifted)) {
                    d = "instance " + std::to_string(i) + ": A " +
                        (sign > 0 ? "+" : "-") + " cP lost PSD at c=" + format_double(c) +
                        ", A=" + detail::describe_sym(a) + ", P=" + detail::describe_sym(p);
                    return false;
                }
            }
        }
        return true;
    });

    return out;
}

// Model identities: the covariance of the scaled energy is the squared
// overlap norm, self-overlaps obey the trace bound, the radial identity ties
// the gradient to the energy and the norm penalty, and the symmetrized
// coupling has its spectral edge where random matrix theory puts it.
inline std::vector<check_result> verify_model(std::uint64_t seed, int workers = 1) {
    std::vector<check_result> out;

    detail::run_check(out, "model/covariance-identity", [&](std::string& d) {
        const std::size_t n = 6, kappa = 2, replicas = 10000;
        rng_stream cfg_rng(seed, 0x200000);
        spin_config s1(n, kappa), s2(n, kappa);
        for (double& e : s1.s) e = cfg_rng.normal();
        for (double& e : s2.s) e = cfg_rng.normal();
        mat r = overlap(s1, s2);
        double target = static_cast<double>(n) * hs_norm(r) * hs_norm(r);
        std::vector<double> products(replicas);
        parallel_for(replicas, workers, [&](std::size_t i) {
            disorder dis = sample_disorder(seed, n, i);
            products[i] = hamiltonian(dis, s1) * hamiltonian(dis, s2);
        });
        double mean = 0.0;
        for (double v : products) mean += v;
        mean /= static_cast<double>(replicas);
        double var = 0.0;
        for (double v : products) var += (v - mean) * (v - mean);
        double se = std::sqrt(var / (static_cast<double>(replicas) *
                                     static_cast<double>(replicas - 1)));
        if (std::fabs(mean - target) > 5.0 * se) {
            d = "mean=" + format_double(mean) + " target=" + format_double(target) +
                " stderr=" + format_double(se) + " at n=6 kappa=2 with seed " +
                std::to_string(seed);
            return false;
        }
        return true;
    });

    detail::run_check(out, "model/self-overlap-hs-below-trace", [&](std::string& d) {
        for (std::size_t i = 0; i < 400; ++i) {
            rng_stream rng(seed, 0x210000 + i);
            std::size_t n = 2 + rng.next_u32() % 15;
            std::size_t kappa = 1 + rng.next_u32() % 3;
            spin_config s(n, kappa);
            for (double& e : s.s) e = rng.normal();
            gram_matrix r = overlap_self(s);
            if (hs_norm(r.base) > trace(r.base) + 1e-12 * std::max(1.0, trace(r.base))) {
                d = "instance " + std::to_string(i) + ": ||R||_HS=" +
                    format_double(hs_norm(r.base)) + " > tr R=" + format_double(trace(r.base));
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "model/radial-identity", [&](std::string& d) {
        const double ps[3] = {2.5, 3.0, 4.0};
        for (std::size_t i = 0; i < 300; ++i) {
            rng_stream rng(seed, 0x220000 + i);
            std::size_t n = 2 + rng.next_u32() % 15;
            std::size_t kappa = 1 + rng.next_u32() % 3;
            double p = ps[rng.next_u32() % 3];
            double t = 2.0 * rng.uniform01();
            disorder dis = sample_disorder(seed ^ 0x5A5A, n, i);
            spin_config s(n, kappa);
            for (double& e : s.s) e = rng.normal();
            spin_config g = grad_hamiltonian(dis, s, p, t);
            double lhs = dot(g, s);
            double h = hamiltonian(dis, s);
            double rhs = 2.0 * h - t * p * pnorm_sum(s, p);
            if (std::fabs(lhs - rhs) > 1e-10 * (1.0 + std::fabs(h))) {
                d = "instance " + std::to_string(i) + ": n=" + std::to_string(n) +
                    " kappa=" + std::to_string(kappa) + " p=" + format_double(p) +
                    " t=" + format_double(t) + " lhs=" + format_double(lhs) +
                    " rhs=" + format_double(rhs);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "model/symmetrized-coupling-edge", [&](std::string& d) {
        const std::size_t n = 1024;
        disorder dis = sample_disorder(seed, n, 0);
        power_result pr = lambda_max_sym(goe(dis), 1e-6);
        double ratio = pr.value / std::sqrt(static_cast<double>(n));
        if (!(ratio >= 1.85 && ratio <= 2.1)) {
            d = "lambda_max/sqrt(N)=" + format_double(ratio) + " outside [1.85, 2.1] at N=" +
                std::to_string(n) + ", seed " + std::to_string(seed);
            return false;
        }
        return true;
    });

    return out;
}

// Terminal function properties: nonnegativity, the supremum property against
// random probes, maximizer localization, convexity in the tilt, the
// documented growth envelopes, both closed forms, the two-sided envelope
// between the hard and soft terminals, and recursion behavior in the
// weights.
inline std::vector<check_result> verify_terminals(std::uint64_t seed, int workers = 1) {
    (void)workers;
    std::vector<check_result> out;
    const double ps[3] = {2.5, 3.0, 4.0};

    detail::run_check(out, "terminals/nonnegative-sup-localized", [&](std::string& d) {
        const std::size_t counts[3] = {300, 100, 40};
        for (std::size_t kappa = 1; kappa <= 3; ++kappa) {
            for (std::size_t i = 0; i < counts[kappa - 1]; ++i) {
                rng_stream rng(seed, 0x300000 + kappa * 0x10000 + i);
                double p = ps[rng.next_u32() % 3];
                double t = 0.5 + 1.5 * rng.uniform01();
                lagrange_multiplier lam(kappa);
                for (double& c : lam.v) c = 0.5 * rng.normal();
                std::vector<double> x(kappa);
                for (double& e : x) e = 2.0 * rng.normal();
                terminal_result res = terminal_inf(lam, p, t, x);
                std::string stamp = "instance " + std::to_string(i) + " kappa=" +
                                    std::to_string(kappa) + " p=" + format_double(p) +
                                    " t=" + format_double(t) + " lambda=" +
                                    detail::join_doubles(lam.v) + " x=" +
                                    detail::join_doubles(x);
                if (res.value < -1e-12) {
                    d = stamp + ": negative value " + format_double(res.value);
                    return false;
                }
                double radius = detail::terminal_search_radius(
                    lam.coeff_inf_norm(), static_cast<double>(kappa), p, t,
                    detail::vec_norm(x));
                if (detail::vec_norm(res.argmax) > radius + 1e-6) {
                    d = stamp + ": maximizer norm " +
                        format_double(detail::vec_norm(res.argmax)) + " beyond radius " +
                        format_double(radius);
                    return false;
                }
                detail::terminal_problem prob{lam.to_matrix(), p, t, &x};
                for (int probe = 0; probe < 40; ++probe) {
                    std::vector<double> sp(kappa);
                    for (double& e : sp) e = rng.normal();
                    double scale = radius * rng.uniform01() /
                                   std::max(1e-12, detail::vec_norm(sp));
                    for (double& e : sp) e *= scale;
                    double val = prob.value(sp);
                    if (val > res.value + 1e-9 * (1.0 + std::fabs(res.value))) {
                        d = stamp + ": probe " + detail::join_doubles(sp) + " beats value " +
                            format_double(res.value) + " with " + format_double(val);
                        return false;
                    }
                }
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/midpoint-convexity-in-tilt", [&](std::string& d) {
        for (std::size_t kappa = 1; kappa <= 2; ++kappa) {
            for (std::size_t i = 0; i < 120; ++i) {
                rng_stream rng(seed, 0x310000 + kappa * 0x10000 + i);
                double p = ps[rng.next_u32() % 3];
                double t = 0.5 + 1.5 * rng.uniform01();
                lagrange_multiplier lam(kappa);
                for (double& c : lam.v) c = 0.4 * rng.normal();
                std::vector<double> xa(kappa), xb(kappa), xm(kappa);
                for (std::size_t k = 0; k < kappa; ++k) {
                    xa[k] = 2.5 * rng.normal();
                    xb[k] = 2.5 * rng.normal();
                    xm[k] = 0.5 * (xa[k] + xb[k]);
                }
                double fa = terminal_inf(lam, p, t, xa).value;
                double fb = terminal_inf(lam, p, t, xb).value;
                double fm = terminal_inf(lam, p, t, xm).value;
                if (fm > 0.5 * (fa + fb) + 1e-8) {
                    d = "instance " + std::to_string(i) + " kappa=" + std::to_string(kappa) +
                        ": f(mid)=" + format_double(fm) + " > avg=" +
                        format_double(0.5 * (fa + fb)) + " for xa=" +
                        detail::join_doubles(xa) + " xb=" + detail::join_doubles(xb);
                    return false;
                }
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/growth-envelopes", [&](std::string& d) {
        for (std::size_t kappa = 1; kappa <= 2; ++kappa) {
            rng_stream rng(seed, 0x320000 + kappa);
            double p = 3.0, t = 1.0;
            lagrange_multiplier lam(kappa);
            for (double& c : lam.v) c = 0.4 * rng.normal();
            double c_quad = 0.5 * (static_cast<double>(kappa) + 1.0) * lam.coeff_inf_norm();
            for (double mag : {1.0, 10.0, 100.0, 1000.0}) {
                for (int rep = 0; rep < 8; ++rep) {
                    std::vector<double> x(kappa);
                    for (double& e : x) e = rng.normal();
                    double nrm = detail::vec_norm(x);
                    for (double& e : x) e *= mag / std::max(nrm, 1e-12);
                    terminal_result res = terminal_inf(lam, p, t, x);
                    double radius = detail::terminal_search_radius(
                        lam.coeff_inf_norm(), static_cast<double>(kappa), p, t, mag);
                    double envelope = mag * radius + c_quad * radius * radius;
                    if (res.value > envelope + 1e-9 * (1.0 + envelope)) {
                        d = "kappa=" + std::to_string(kappa) + " |x|=" + format_double(mag) +
                            ": value " + format_double(res.value) + " exceeds envelope " +
                            format_double(envelope);
                        return false;
                    }
                    if (detail::vec_norm(res.argmax) > radius + 1e-6) {
                        d = "kappa=" + std::to_string(kappa) + " |x|=" + format_double(mag) +
                            ": maximizer beyond radius";
                        return false;
                    }
                }
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/fd-gradient-matches-argmax", [&](std::string& d) {
        lagrange_multiplier lam(1);
        for (double lam0 : {0.0, 0.3, -0.3}) {
            lam.v[0] = lam0;
            for (double x0 : {0.5, 1.0, 3.0}) {
                double h = 1e-5 * (1.0 + std::fabs(x0));
                double fp = terminal_inf(lam, 3.0, 1.0, {x0 + h}).value;
                double fm = terminal_inf(lam, 3.0, 1.0, {x0 - h}).value;
                double fd = (fp - fm) / (2.0 * h);
                double arg = terminal_inf(lam, 3.0, 1.0, {x0}).argmax[0];
                if (std::fabs(fd - arg) > 5e-4 * (1.0 + std::fabs(arg))) {
                    d = "lambda=" + format_double(lam0) + " x=" + format_double(x0) +
                        ": fd=" + format_double(fd) + " argmax=" + format_double(arg);
                    return false;
                }
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/soft-closed-form-at-origin", [&](std::string& d) {
        lagrange_multiplier lam(1);
        for (double beta : {10.0, 100.0}) {
            for (double p : {2.5, 3.0}) {
                for (double t : {0.7, 1.0}) {
                    double got = terminal_beta(lam, beta, p, t, {0.0});
                    double expect = std::log(2.0 * std::exp(std::lgamma(1.0 + 1.0 / p)) *
                                             std::pow(beta * t, -1.0 / p)) /
                                    beta;
                    if (std::fabs(got - expect) > 1e-6) {
                        d = "beta=" + format_double(beta) + " p=" + format_double(p) +
                            " t=" + format_double(t) + ": got " + format_double(got) +
                            " want " + format_double(expect);
                        return false;
                    }
                }
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/hard-closed-form-cubic", [&](std::string& d) {
        lagrange_multiplier lam(1);
        for (double x : {0.5, 1.0, 3.0}) {
            terminal_result res = terminal_inf(lam, 3.0, 1.0, {x});
            double expect = 2.0 * std::pow(x, 1.5) / (3.0 * std::sqrt(3.0));
            double arg_expect = std::sqrt(x / 3.0);
            if (std::fabs(res.value - expect) > 1e-10 ||
                std::fabs(res.argmax[0] - arg_expect) > 1e-8) {
                d = "x=" + format_double(x) + ": value " + format_double(res.value) +
                    " want " + format_double(expect) + ", argmax " +
                    format_double(res.argmax[0]) + " want " + format_double(arg_expect);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "terminals/two-sided-envelope", [&](std::string& d) {
        std::vector<std::vector<double>> grid{{0.0}, {1.0}, {3.0}};
        for (double lam0 : {0.0, 0.5, -0.5}) {
            lagrange_multiplier lam(1);
            lam.v[0] = lam0;
            for (double beta : {10.0, 100.0}) {
                for (double delta : {0.01, 0.1}) {
                    terminal_comparison cmp =
                        compare_terminals(lam, 3.0, 1.0, beta, delta, grid);
                    if (!cmp.all_hold) {
                        for (const terminal_comparison_row& row : cmp.rows) {
                            if (row.holds) continue;
                            d = "lambda=" + format_double(lam0) + " beta=" +
                                format_double(beta) + " delta=" + format_double(delta) +
                                " x=" + detail::join_doubles(row.x) + ": slack_beta=" +
                                format_double(row.slack_beta) + " slack_inf=" +
                                format_double(row.slack_inf);
                            return false;
                        }
                    }
                }
            }
        }
        return true;
    });

    path pi;
    pi.kappa = 1;
    pi.q = {0.3, 0.6, 1.0};
    pi.gamma = {sym_matrix(1), sym_matrix(1), sym_matrix(1)};
    pi.gamma[1](0, 0) = 0.4;
    pi.gamma[2](0, 0) = 1.0;
    lagrange_multiplier lam025(1);
    lam025.v[0] = 0.25;
    auto terminal = [&](const std::vector<double>& xx) {
        return terminal_inf(lam025, 3.0, 1.0, xx).value;
    };

    detail::run_check(out, "terminals/recursion-monotone-in-weights", [&](std::string& d) {
        discrete_measure za{pi.q, {0.5, 1.5, 1.5}, measure_flavor::finite};
        discrete_measure zb{pi.q, {0.9, 1.5, 1.5}, measure_flavor::finite};
        discrete_measure zc{pi.q, {0.9, 2.5, 2.5}, measure_flavor::finite};
        double va = recursion(terminal, za, pi);
        double vb = recursion(terminal, zb, pi);
        double vc = recursion(terminal, zc, pi);
        if (!(vb >= va - 1e-12 && vc >= vb - 1e-12)) {
            d = "values " + format_double(va) + ", " + format_double(vb) + ", " +
                format_double(vc) + " not nondecreasing in the weights";
            return false;
        }
        return true;
    });

    detail::run_check(out, "terminals/recursion-continuous-at-zero-weight",
                      [&](std::string& d) {
                          discrete_measure z0{pi.q, {0.0, 1.5, 1.5}, measure_flavor::finite};
                          discrete_measure z1{pi.q, {1e-9, 1.5, 1.5}, measure_flavor::finite};
                          double v0 = recursion(terminal, z0, pi);
                          double v1 = recursion(terminal, z1, pi);
                          if (std::fabs(v1 - v0) > 1e-6) {
                              d = "jump " + format_double(v1 - v0) +
                                  " between weight 0 and weight 1e-9";
                              return false;
                          }
                          return true;
                      });

    detail::run_check(out, "terminals/recursion-grid-matches-mc", [&](std::string& d) {
        path pi1;
        pi1.kappa = 1;
        pi1.q = {0.0, 1.0};
        pi1.gamma = {sym_matrix(1), sym_matrix(1)};
        pi1.gamma[1](0, 0) = 1.0;
        discrete_measure z{pi1.q, {1.0, 1.0}, measure_flavor::finite};
        double grid_value = recursion(terminal, z, pi1);
        quadrature_spec mc;
        mc.mode = quadrature_spec::mode_t::mc;
        mc.samples = 20000;
        mc.seed = seed;
        recursion_result mc_res = recursion_full(terminal, z, pi1, mc);
        double gap = std::fabs(grid_value - mc_res.value);
        if (gap > 5.0 * mc_res.stderr_est + 1e-6) {
            d = "grid " + format_double(grid_value) + " vs mc " +
                format_double(mc_res.value) + " +- " + format_double(mc_res.stderr_est);
            return false;
        }
        return true;
    });

    return out;
}

// PDE residual checks: the closed-form quadratic/heat case is reproduced to
// quadrature accuracy, and the interior interpolation of a generic
// functional solves its equation to discretization accuracy that improves
// under refinement.
inline std::vector<check_result> verify_pde(std::uint64_t seed) {
    (void)seed;
    std::vector<check_result> out;

    detail::run_check(out, "pde/heat-closed-form", [&](std::string& d) {
        path pi;
        pi.kappa = 1;
        pi.q = {0.25, 1.0};
        pi.gamma = {sym_matrix(1), sym_matrix(1)};
        pi.gamma[1](0, 0) = 0.7;
        std::vector<double> zeta{0.0, 0.0};
        pde_mesh mesh;
        mesh.ns = 64;
        mesh.nx = 64;
        pde_report rep = pde_residual_with_terminal(
            [](double x) { return 0.5 * x * x; }, zeta, pi, mesh);
        if (rep.max_residual > 1e-6) {
            d = "residual " + format_double(rep.max_residual) +
                " for the quadratic terminal with zero weight";
            return false;
        }
        return true;
    });

    detail::run_check(out, "pde/zero-temperature-residual", [&](std::string& d) {
        lagrange_multiplier lam(1);
        lam.v[0] = 0.25;
        path pi;
        pi.kappa = 1;
        pi.q = {0.0, 1.0};
        pi.gamma = {sym_matrix(1), sym_matrix(1)};
        pi.gamma[1](0, 0) = 1.0;
        discrete_measure z{pi.q, {1.0, 1.0}, measure_flavor::finite};
        pde_mesh mesh;
        mesh.ns = 160;
        mesh.nx = 160;
        pde_report rep = pde_residual(lam, std::numeric_limits<double>::infinity(), 3.0,
                                      1.0, z, pi, mesh);
        // The zero-temperature terminal has a kink at the origin, so the
        // second difference straddling it carries a larger truncation
        // constant than the smooth positive-temperature case.
        if (rep.max_residual > 2.5e-3) {
            d = "residual " + format_double(rep.max_residual) + " above 2.5e-3 on a 160^2 mesh";
            return false;
        }
        if (rep.max_residual_refined > 0.6 * rep.max_residual) {
            d = "refinement only moved the residual from " +
                format_double(rep.max_residual) + " to " +
                format_double(rep.max_residual_refined);
            return false;
        }
        if (rep.mesh_too_coarse) {
            d = "mesh flagged too coarse";
            return false;
        }
        return true;
    });

    detail::run_check(out, "pde/positive-temperature-residual", [&](std::string& d) {
        lagrange_multiplier lam(1);
        lam.v[0] = 0.25;
        path pi;
        pi.kappa = 1;
        pi.q = {0.0, 1.0};
        pi.gamma = {sym_matrix(1), sym_matrix(1)};
        pi.gamma[1](0, 0) = 1.0;
        discrete_measure alpha{pi.q, {0.1, 1.0}, measure_flavor::probability};
        pde_mesh mesh;
        mesh.ns = 80;
        mesh.nx = 80;
        pde_report rep = pde_residual(lam, 10.0, 3.0, 1.0, alpha, pi, mesh);
        if (rep.max_residual > 1e-2) {
            d = "residual " + format_double(rep.max_residual) + " above 1e-2 on an 80^2 mesh";
            return false;
        }
        return true;
    });

    return out;
}

// Controlled-diffusion checks: with no drift the endpoint second moment is
// the quadratic variation, the optimal feedback reproduces the recursion
// value, no control can beat it, and the endpoint moments grow with the
// weight scale no faster than the admissible exponent.
inline std::vector<check_result> verify_ac(std::uint64_t seed) {
    std::vector<check_result> out;

    lagrange_multiplier lam(1);
    lam.v[0] = 0.25;
    path pi;
    pi.kappa = 1;
    pi.q = {0.0, 1.0};
    pi.gamma = {sym_matrix(1), sym_matrix(1)};
    pi.gamma[1](0, 0) = 1.0;
    const double inf = std::numeric_limits<double>::infinity();

    detail::run_check(out, "ac/drift-free-second-moment", [&](std::string& d) {
        discrete_measure z{pi.q, {1.0, 1.0}, measure_flavor::finite};
        ac_options opts;
        opts.n_paths = 20000;
        opts.dt = 1e-3;
        opts.seed = seed;
        ac_result res = ac_simulate(lam, inf, 3.0, 1.0, z, pi, ac_control::none, opts);
        double target = 2.0 * pi.endpoint()(0, 0);
        double se = std::sqrt(2.0) * target / std::sqrt(static_cast<double>(opts.n_paths));
        if (std::fabs(res.mean_sq_final - target) > 5.0 * se) {
            d = "mean X(1)^2 = " + format_double(res.mean_sq_final) + " vs " +
                format_double(target) + " +- " + format_double(se);
            return false;
        }
        return true;
    });

    detail::run_check(out, "ac/optimal-control-attains-value", [&](std::string& d) {
        discrete_measure z{pi.q, {1.0, 1.0}, measure_flavor::finite};
        ac_options opts;
        opts.n_paths = 20000;
        opts.dt = 1e-3;
        opts.seed = seed;
        ac_result res = ac_simulate(lam, inf, 3.0, 1.0, z, pi, ac_control::optimal, opts);
        if (std::fabs(res.estimate - res.reference) > 4.0 * res.stderr_est) {
            d = "estimate " + format_double(res.estimate) + " vs reference " +
                format_double(res.reference) + " +- " + format_double(res.stderr_est);
            return false;
        }
        return true;
    });

    detail::run_check(out, "ac/zero-control-is-dominated", [&](std::string& d) {
        discrete_measure z{pi.q, {1.0, 1.0}, measure_flavor::finite};
        ac_options opts;
        opts.n_paths = 20000;
        opts.dt = 1e-3;
        opts.seed = seed;
        ac_result res = ac_simulate(lam, inf, 3.0, 1.0, z, pi, ac_control::none, opts);
        if (res.estimate > res.reference + 4.0 * res.stderr_est) {
            d = "uncontrolled estimate " + format_double(res.estimate) +
                " exceeds the value " + format_double(res.reference) + " +- " +
                format_double(res.stderr_est);
            return false;
        }
        return true;
    });

    detail::run_check(out, "ac/moment-growth-within-cap", [&](std::string& d) {
        std::vector<std::pair<double, double>> runs;
        for (double scale : {0.5, 1.0, 2.0}) {
            discrete_measure z{pi.q, {scale, scale}, measure_flavor::finite};
            ac_options opts;
            opts.n_paths = 10000;
            opts.dt = 2e-3;
            opts.seed = seed;
            ac_result res = ac_simulate(lam, inf, 3.0, 1.0, z, pi, ac_control::optimal, opts);
            runs.emplace_back(scale, res.mean_sq_final);
        }
        moment_report rep = moment_diagnostic(runs, 3.0);
        if (!rep.within_cap) {
            d = "slope " + format_double(rep.slope) + " above cap " + format_double(rep.cap);
            return false;
        }
        return true;
    });

    return out;
}

// Reference-value checks: Gaussian moments, limit constants and their
// regimes, the transform/inverse pair, invariance of the transform along the
// exact penalized-maximum profile, and the spectral edge ratio.
inline std::vector<check_result> verify_asymptotics(std::uint64_t seed, int workers = 1) {
    std::vector<check_result> out;

    detail::run_check(out, "asymptotics/gaussian-even-moments", [&](std::string& d) {
        double expect = 1.0;
        for (int k = 1; k <= 5; ++k) {
            expect *= 2.0 * k - 1.0;  // (2k-1)!!
            double got = gaussian_abs_moment(2.0 * k);
            if (std::fabs(got - expect) > 1e-10 * expect) {
                d = "E|g|^" + std::to_string(2 * k) + " = " + format_double(got) +
                    ", want " + format_double(expect);
                return false;
            }
        }
        return true;
    });

    detail::run_check(out, "asymptotics/limit-constants", [&](std::string& d) {
        limit_result r1 = limit_constant(1.0);
        limit_result r2 = limit_constant(2.0);
        if (std::fabs(r1.constant - std::sqrt(2.0)) > 1e-12 ||
            std::fabs(r2.constant - std::sqrt(2.0)) > 1e-12) {
            d = "endpoint constants " + format_double(r1.constant) + ", " +
                format_double(r2.constant) + " differ from sqrt(2)";
            return false;
        }
        limit_result near2 = limit_constant(2.0 - 1e-6);
        if (std::fabs(near2.constant - std::pow(2.0, -0.5)) > 1e-4) {
            d = "constant at p=2-1e-6 is " + format_double(near2.constant) +
                ", formula limit is 2^{-1/2}";
            return false;
        }
        limit_result var = scaling_descriptor(3.0);
        if (!var.variational || var.regime != gp_regime::p_above_two) {
            d = "p=3 descriptor not marked variational";
            return false;
        }
        return true;
    });

    detail::run_check(out, "asymptotics/transform-inverse-roundtrip", [&](std::string& d) {
        for (double p : {2.5, 3.0, 4.0})
            for (double t : {0.5, 1.0, 2.0})
                for (double lag : {0.1, 1.0, 5.0}) {
                    double g = gse_transform(lag, p, t);
                    double back = gse_transform_inverse(g, p, t);
                    if (std::fabs(back - lag) > 1e-12 * lag) {
                        d = "p=" + format_double(p) + " t=" + format_double(t) + " L=" +
                            format_double(lag) + ": roundtrip " + format_double(back);
                        return false;
                    }
                }
        return true;
    });

    detail::run_check(out, "asymptotics/transform-flat-on-exact-profile",
                      [&](std::string& d) {
                          for (double p : {2.5, 3.0}) {
                              double c = 0.37;
                              double ref = 0.0;
                              bool first = true;
                              for (double t : {0.5, 1.0, 2.0}) {
                                  double lag = c * std::pow(t, -2.0 / (p - 2.0));
                                  double g = gse_transform(lag, p, t);
                                  if (first) {
                                      ref = g;
                                      first = false;
                                  } else if (std::fabs(g - ref) > 1e-12 * std::fabs(ref)) {
                                      d = "p=" + format_double(p) + ": transform drifts from " +
                                          format_double(ref) + " to " + format_double(g) +
                                          " at t=" + format_double(t);
                                      return false;
                                  }
                              }
                          }
                          return true;
                      });

    detail::run_check(out, "asymptotics/spectral-edge-ratio", [&](std::string& d) {
        const std::size_t n = 1024, replicas = 8;
        std::vector<double> ratios(replicas);
        parallel_for(replicas, workers, [&](std::size_t i) {
            disorder dis = sample_disorder(seed, n, i);
            power_result pr = lambda_max_sym(goe(dis), 1e-6);
            ratios[i] = pr.value / goe_edge_reference(n);
        });
        double mean = 0.0;
        for (double r : ratios) mean += r;
        mean /= static_cast<double>(replicas);
        if (!(mean >= 0.93 && mean <= 1.05)) {
            d = "mean edge ratio " + format_double(mean) + " outside [0.93, 1.05]; ratios " +
                detail::join_doubles(ratios);
            return false;
        }
        return true;
    });

    return out;
}

inline std::vector<check_result> verify_all(std::uint64_t seed, int workers = 1) {
    std::vector<check_result> out;
    for (std::vector<check_result> part :
         {verify_linalg(seed, workers), verify_model(seed, workers),
          verify_terminals(seed, workers), verify_pde(seed), verify_ac(seed),
          verify_asymptotics(seed, workers)})
        out.insert(out.end(), part.begin(), part.end());
    return out;
}

} // namespace lpspin
