#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/model.hpp"
#include "lpspin/rng.hpp"

using namespace lpspin;

namespace {

spin_config random_config(uint64_t seed, uint64_t stream, std::size_t n, std::size_t kappa,
                          double scale = 1.0) {
    rng_stream rng(seed, stream);
    spin_config s(n, kappa);
    for (double& e : s.s) e = scale * rng.normal();
    return s;
}

} // namespace

TEST_CASE("disorder sampling is deterministic and well distributed") {
    disorder a = sample_disorder(0, 2);
    disorder b = sample_disorder(0, 2);
    REQUIRE(a.g == b.g);
    disorder c = sample_disorder(0, 2, 1);
    REQUIRE(a.g != c.g);

    disorder big = sample_disorder(7, 512);
    double mean = 0.0, sq = 0.0;
    for (double v : big.g) { mean += v; sq += v * v; }
    double count = static_cast<double>(big.g.size());
    mean /= count;
    double var = sq / count - mean * mean;
    REQUIRE(std::fabs(mean) < 4.0 / 512.0);
    REQUIRE(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0) / 512.0);

    REQUIRE_THROWS_AS(sample_disorder(0, 0), input_error);
}

TEST_CASE("overlap matches hand values") {
    spin_config z(3, 2);
    mat r0 = overlap(z, z);
    for (double v : r0.a) REQUIRE(v == 0.0);

    spin_config e1(1, 2);
    e1.s = {1.0, 0.0};
    gram_matrix r = overlap_self(e1);
    REQUIRE(r.base(0, 0) == Catch::Approx(1.0));
    REQUIRE(r.base(0, 1) == Catch::Approx(0.0));
    REQUIRE(r.base(1, 1) == Catch::Approx(0.0));
    REQUIRE(r.certified_psd);

    spin_config a = random_config(3, 0, 5, 2);
    gram_matrix ra = overlap_self(a);
    double n22 = norm_p2(a, 2.0, true);
    REQUIRE(trace(ra.base) == Catch::Approx(n22 * n22).epsilon(1e-12));
    REQUIRE(is_psd(ra.base));
    REQUIRE(hs_norm(ra.base) <= trace(ra.base) + 1e-12 * std::max(1.0, trace(ra.base)));
}

TEST_CASE("norms match hand values") {
    spin_config z(4, 2);
    REQUIRE(norm_p2(z, 3.0, false) == 0.0);

    spin_config ones(5, 1);
    for (double& e : ones.s) e = 1.0;
    for (double p : {1.0, 1.5, 2.0, 3.0})
        REQUIRE(norm_p2(ones, p, true) == Catch::Approx(1.0).margin(1e-14));

    spin_config two(2, 2);
    two.s = {3.0, 4.0, 0.0, 0.0};
    REQUIRE(norm_p2(two, 3.0, false) == Catch::Approx(5.0).epsilon(1e-14));
    REQUIRE(pnorm_sum(two, 3.0) == Catch::Approx(125.0).epsilon(1e-14));

    REQUIRE_THROWS_AS(norm_p2(two, 0.5, false), input_error);
}

TEST_CASE("energies match hand values and decompose over components") {
    mat g(1, 1);
    g(0, 0) = 1.7;
    disorder d1 = disorder::from_matrix(g);
    spin_config s1(1, 1);
    s1.s = {2.0};
    REQUIRE(hamiltonian_unscaled(d1, s1) == Catch::Approx(1.7 * 4.0));
    REQUIRE(hamiltonian(d1, s1) == Catch::Approx(1.7 * 4.0));

    spin_config s0(1, 1);
    REQUIRE(hamiltonian(d1, s0) == 0.0);

    // component decomposition: summing the energy of each column equals the
    // full vector-spin energy
    disorder d = sample_disorder(11, 4);
    spin_config s = random_config(11, 1, 4, 3);
    double full = hamiltonian(d, s);
    double split = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        spin_config col(4, 1);
        for (std::size_t i = 0; i < 4; ++i) col.s[i] = s.s[i * 3 + k];
        split += hamiltonian(d, col);
    }
    REQUIRE(full == Catch::Approx(split).margin(1e-12 * (1.0 + std::fabs(full))));
    REQUIRE(hamiltonian_unscaled(d, s) == Catch::Approx(full * 2.0).epsilon(1e-14));
}

TEST_CASE("penalized energy recombines from its parts") {
    mat g(1, 1);
    g(0, 0) = 0.9;
    disorder d1 = disorder::from_matrix(g);
    spin_config s1(1, 1);
    s1.s = {1.0};
    REQUIRE(lagrangian_hamiltonian(d1, s1, 3.0, 0.4) == Catch::Approx(0.9 - 0.4));

    disorder d = sample_disorder(12, 6);
    spin_config s = random_config(12, 2, 6, 2);
    double got = lagrangian_hamiltonian(d, s, 2.5, 1.3);
    double want = hamiltonian(d, s) - 1.3 * pnorm_sum(s, 2.5);
    REQUIRE(got == Catch::Approx(want).margin(1e-12 * (1.0 + std::fabs(want))));

    REQUIRE_THROWS_AS(lagrangian_hamiltonian(d, s, 2.0, 1.0), input_error);
    REQUIRE_THROWS_AS(lagrangian_hamiltonian(d, s, 3.0, 0.0), input_error);
}

TEST_CASE("covariance of the energy is the squared overlap norm") {
    const std::size_t n = 6, kappa = 2, replicas = 10000;
    spin_config s1 = random_config(100, 0, n, kappa);
    spin_config s2 = random_config(100, 1, n, kappa);
    mat r = overlap(s1, s2);
    double target = static_cast<double>(n) * hs_norm(r) * hs_norm(r);
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < replicas; ++i) {
        disorder dis = sample_disorder(555, n, i);
        double prod = hamiltonian(dis, s1) * hamiltonian(dis, s2);
        mean += prod;
        sq += prod * prod;
    }
    mean /= replicas;
    double var = sq / replicas - mean * mean;
    double se = std::sqrt(var / (replicas - 1.0));
    REQUIRE(std::fabs(mean - target) <= 5.0 * se);
}

TEST_CASE("gradient satisfies the radial identity") {
    const double ps[3] = {2.5, 3.0, 4.0};
    for (std::size_t trial = 0; trial < 300; ++trial) {
        rng_stream rng(200, trial);
        std::size_t n = 2 + rng.next_u32() % 63;
        std::size_t kappa = 1 + rng.next_u32() % 3;
        double p = ps[rng.next_u32() % 3];
        double t = 2.0 * rng.uniform01();
        disorder dis = sample_disorder(201, n, trial);
        spin_config s(n, kappa);
        for (double& e : s.s) e = rng.normal();
        spin_config grad = grad_hamiltonian(dis, s, p, t);
        double lhs = dot(grad, s);
        double h = hamiltonian(dis, s);
        double rhs = 2.0 * h - t * p * pnorm_sum(s, p);
        REQUIRE(std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(h)));
    }
}

TEST_CASE("gradient matches central finite differences") {
    const std::size_t n = 5, kappa = 2;
    disorder dis = sample_disorder(77, n);
    spin_config s = random_config(77, 0, n, kappa);
    double p = 3.0, t = 0.7, h = 1e-5;
    spin_config grad = grad_hamiltonian(dis, s, p, t);
    for (std::size_t idx = 0; idx < s.s.size(); ++idx) {
        spin_config up = s, dn = s;
        up.s[idx] += h;
        dn.s[idx] -= h;
        double fd = (lagrangian_hamiltonian(dis, up, p, t) -
                     lagrangian_hamiltonian(dis, dn, p, t)) /
                    (2.0 * h);
        REQUIRE(fd == Catch::Approx(grad.s[idx]).margin(1e-5 * (1.0 + std::fabs(grad.s[idx]))));
    }

    spin_config zero(n, kappa);
    spin_config gz = grad_hamiltonian(dis, zero, p, t);
    for (double v : gz.s) REQUIRE(v == 0.0);
}

TEST_CASE("symmetrized coupling applies the doubled matrix") {
    const std::size_t n = 30, kappa = 3;
    disorder dis = sample_disorder(88, n);
    sym_coupling coup = sym_coupling::from_disorder(dis);
    spin_config s = random_config(88, 0, n, kappa);
    spin_config u(n, kappa);
    coup.apply(s, u);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < kappa; ++k) {
            double want = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                want += (dis.g[i * n + j] + dis.g[j * n + i]) * s.s[j * kappa + k];
            REQUIRE(u.s[i * kappa + k] == Catch::Approx(want).margin(1e-10));
        }
    }
}

TEST_CASE("symmetrized Gaussian matrix has the expected form and edge") {
    mat sym_in(2, 2);
    sym_in(0, 0) = 1.0; sym_in(0, 1) = 0.5; sym_in(1, 0) = 0.5; sym_in(1, 1) = -2.0;
    disorder d2 = disorder::from_matrix(sym_in);
    sym_matrix bar = goe(d2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            REQUIRE(bar(i, j) == Catch::Approx(std::sqrt(2.0) * sym_in(i, j)).margin(1e-14));

    const std::size_t n = 1024;
    disorder dis = sample_disorder(4242, n);
    power_result pr = lambda_max_sym(goe(dis), 1e-6);
    double ratio = pr.value / std::sqrt(static_cast<double>(n));
    REQUIRE(ratio >= 1.85);
    REQUIRE(ratio <= 2.1);
}

TEST_CASE("scaled operator norm matches a dense eigensolve") {
    const std::size_t n = 24;
    disorder dis = sample_disorder(99, n);
    double got = opnorm_scaled(dis);
    mat g(n, n);
    g.a = dis.g;
    sym_matrix gtg = sym_matrix::from_general(matmul(transpose(g), g));
    double want = std::sqrt(lambda_max_small(gtg)) / std::sqrt(static_cast<double>(n));
    REQUIRE(got == Catch::Approx(want).epsilon(1e-6));
}
