#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/parisi.hpp"
#include "lpspin/parisi_checks.hpp"

using namespace lpspin;

namespace {

const double inf = std::numeric_limits<double>::infinity();

path unit_path(double d_val = 1.0) {
    path pi;
    pi.kappa = 1;
    pi.q = {0.0, 1.0};
    pi.gamma.resize(2, sym_matrix(1));
    pi.gamma[1](0, 0) = d_val;
    return pi;
}

discrete_measure flat_measure(double w0, measure_flavor flavor) {
    discrete_measure m;
    m.q = {0.0, 1.0};
    m.w = {w0, flavor == measure_flavor::probability ? 1.0 : w0};
    m.flavor = flavor;
    return m;
}

lagrange_multiplier scalar_multiplier(double value) {
    lagrange_multiplier lam(1);
    lam.v[0] = value;
    return lam;
}

} // namespace

TEST_CASE("two-sided terminal envelope holds across the sweep") {
    std::vector<std::vector<double>> grid{{0.5}, {1.0}, {3.0}};
    for (double lam_val : {0.0, 0.5, -0.5}) {
        lagrange_multiplier lam = scalar_multiplier(lam_val);
        for (double beta : {10.0, 100.0}) {
            for (double delta : {0.01, 0.1}) {
                terminal_comparison cmp = compare_terminals(lam, 3.0, 1.0, beta, delta, grid);
                REQUIRE(cmp.all_hold);
                REQUIRE(cmp.rows.size() == 3);
                for (const terminal_comparison_row& row : cmp.rows) {
                    REQUIRE(row.slack_beta >= -1e-10);
                    REQUIRE(row.slack_inf >= -1e-10);
                    REQUIRE(row.f_inf >= 0.0);
                }
            }
        }
    }
}

TEST_CASE("terminal envelope rejects bad parameters") {
    lagrange_multiplier lam = scalar_multiplier(0.2);
    std::vector<std::vector<double>> grid{{1.0}};
    REQUIRE_THROWS_AS(compare_terminals(lam, 3.0, 1.0, 0.0, 0.1, grid), domain_error);
    REQUIRE_THROWS_AS(compare_terminals(lam, 3.0, 1.0, 10.0, 1.5, grid), domain_error);
    REQUIRE_THROWS_AS(compare_terminals(lam, 3.0, 1.0, 10.0, 0.1, {}), input_error);
    std::vector<std::vector<double>> zero_grid{{0.0}};
    REQUIRE_THROWS_AS(compare_terminals(lam, 3.0, 1.0, 10.0, 0.1, zero_grid), domain_error);
}

TEST_CASE("recursion interpolation solves the equation on a constant terminal") {
    path pi = unit_path();
    std::vector<double> zeta{1.0, 1.0};
    pde_mesh mesh;
    mesh.ns = 64;
    mesh.nx = 64;
    pde_report rep = pde_residual_with_terminal([](double) { return 0.7; }, zeta, pi, mesh);
    REQUIRE(rep.max_residual <= 1e-10);
}

TEST_CASE("recursion interpolation reproduces the heat solution") {
    path pi = unit_path();
    std::vector<double> zeta{0.0, 0.0};
    pde_mesh mesh;
    mesh.ns = 64;
    mesh.nx = 64;
    pde_report rep =
        pde_residual_with_terminal([](double x) { return 0.5 * x * x; }, zeta, pi, mesh);
    REQUIRE(rep.max_residual <= 1e-6);
    REQUIRE_FALSE(rep.mesh_too_coarse);
}

TEST_CASE("equation residual is small and halves under refinement") {
    path pi = unit_path();
    discrete_measure alpha = flat_measure(0.1, measure_flavor::probability);
    pde_mesh mesh;
    mesh.ns = 200;
    mesh.nx = 200;
    pde_report rep = pde_residual(scalar_multiplier(0.25), 10.0, 3.0, 1.0, alpha, pi, mesh);
    REQUIRE(rep.max_residual <= 1e-3);
    REQUIRE(rep.max_residual_refined <= 0.6 * rep.max_residual);
    REQUIRE_FALSE(rep.mesh_too_coarse);
}

TEST_CASE("equation residual stays bounded at zero temperature") {
    // The terminal condition loses a derivative in the zero-temperature
    // limit, so the second difference straddling its kink carries a larger
    // truncation constant than the smooth case above. The residual still
    // shrinks at the h^2 rate.
    path pi = unit_path();
    discrete_measure w = flat_measure(1.0, measure_flavor::finite);
    pde_mesh mesh;
    mesh.ns = 160;
    mesh.nx = 160;
    pde_report rep = pde_residual(scalar_multiplier(0.25), inf, 3.0, 1.0, w, pi, mesh);
    REQUIRE(rep.max_residual <= 2.5e-3);
    REQUIRE(rep.max_residual_refined <= 0.6 * rep.max_residual);
    REQUIRE_FALSE(rep.mesh_too_coarse);
}

TEST_CASE("equation residual stays small on a coarse mesh") {
    path pi = unit_path();
    discrete_measure alpha = flat_measure(0.1, measure_flavor::probability);
    pde_mesh mesh;
    mesh.ns = 80;
    mesh.nx = 80;
    pde_report rep = pde_residual(scalar_multiplier(0.2), 10.0, 3.0, 1.0, alpha, pi, mesh);
    REQUIRE(rep.max_residual <= 1e-2);
    REQUIRE_FALSE(rep.mesh_too_coarse);
}

TEST_CASE("uncontrolled diffusion reproduces the plain expectation") {
    path pi = unit_path();
    discrete_measure zero_w = flat_measure(0.0, measure_flavor::finite);
    ac_options opts;
    opts.n_paths = 20000;
    opts.dt = 2e-3;
    opts.grid_x_points = 801;
    opts.grid_time_rows = 81;
    opts.seed = 31;
    ac_result r =
        ac_simulate(scalar_multiplier(0.25), inf, 3.0, 1.0, zero_w, pi, ac_control::none, opts);
    // with zero weight the reference is the plain expectation of the terminal
    REQUIRE(std::fabs(r.estimate - r.reference) <= 4.0 * r.stderr_est);
    REQUIRE(r.estimate == r.mean_terminal);
    REQUIRE(r.exploded_fraction == 0.0);
    // drift-free second moment of the endpoint is twice the total variance
    REQUIRE(r.mean_sq_final == Catch::Approx(2.0).margin(0.06));
}

TEST_CASE("optimal feedback attains the recursion value") {
    path pi = unit_path();
    discrete_measure w = flat_measure(1.0, measure_flavor::finite);
    ac_options opts;
    opts.n_paths = 30000;
    opts.dt = 2e-3;
    opts.grid_x_points = 1201;
    opts.grid_time_rows = 101;
    opts.seed = 37;
    lagrange_multiplier lam = scalar_multiplier(0.25);
    ac_result best = ac_simulate(lam, inf, 3.0, 1.0, w, pi, ac_control::optimal, opts);
    REQUIRE(std::fabs(best.estimate - best.reference) <= 4.0 * best.stderr_est);
    REQUIRE(best.exploded_fraction <= 1e-3);

    ac_result none = ac_simulate(lam, inf, 3.0, 1.0, w, pi, ac_control::none, opts);
    REQUIRE(none.estimate <= best.reference + 4.0 * none.stderr_est);
}

TEST_CASE("diffusion rejects malformed setups") {
    path pi = unit_path();
    discrete_measure w = flat_measure(1.0, measure_flavor::finite);
    ac_options opts;
    opts.n_paths = 1;
    REQUIRE_THROWS_AS(
        ac_simulate(scalar_multiplier(0.1), inf, 3.0, 1.0, w, pi, ac_control::none, opts),
        input_error);
    ac_options bad_dt;
    bad_dt.dt = 0.0;
    REQUIRE_THROWS_AS(
        ac_simulate(scalar_multiplier(0.1), inf, 3.0, 1.0, w, pi, ac_control::none, bad_dt),
        domain_error);
    path flat = unit_path(0.0);
    REQUIRE_THROWS_AS(
        ac_simulate(scalar_multiplier(0.1), inf, 3.0, 1.0, w, flat, ac_control::none),
        domain_error);
}

TEST_CASE("tail growth diagnostic measures the regression slope") {
    std::vector<std::pair<double, double>> data;
    for (double scale : {0.5, 1.0, 2.0, 4.0})
        data.emplace_back(scale, std::pow(scale, 1.7));
    moment_report rep = moment_diagnostic(data, 3.0);
    REQUIRE(rep.slope == Catch::Approx(1.7).epsilon(1e-12));
    REQUIRE(rep.cap == Catch::Approx(4.2).epsilon(1e-12));
    REQUIRE(rep.within_cap);

    std::vector<std::pair<double, double>> steep;
    for (double scale : {0.5, 1.0, 2.0})
        steep.emplace_back(scale, std::pow(scale, 9.0));
    REQUIRE_FALSE(moment_diagnostic(steep, 3.0).within_cap);

    REQUIRE_THROWS_AS(moment_diagnostic({{1.0, 1.0}}, 3.0), input_error);
    REQUIRE_THROWS_AS(moment_diagnostic({{1.0, 1.0}, {-1.0, 2.0}}, 3.0), domain_error);
    REQUIRE_THROWS_AS(moment_diagnostic(data, 2.0), domain_error);
}

TEST_CASE("simulated moments respect the admissible growth cap") {
    path pi = unit_path();
    ac_options opts;
    opts.n_paths = 8000;
    opts.dt = 2e-3;
    opts.grid_x_points = 801;
    opts.grid_time_rows = 61;
    lagrange_multiplier lam = scalar_multiplier(0.2);
    std::vector<std::pair<double, double>> data;
    for (double scale : {0.5, 1.0, 2.0}) {
        discrete_measure w = flat_measure(scale, measure_flavor::finite);
        opts.seed = 41 + static_cast<uint64_t>(scale * 10.0);
        ac_result r = ac_simulate(lam, inf, 3.0, 1.0, w, pi, ac_control::optimal, opts);
        data.emplace_back(scale, r.mean_sq_final);
    }
    REQUIRE(moment_diagnostic(data, 3.0).within_cap);
}
