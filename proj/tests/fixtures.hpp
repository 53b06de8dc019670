// Frozen reference values for the test suite. Every number here was produced
// by tools/oracles/oracle_values.cpp, a standalone program that shares no
// code with the library: closed-form stationary points where the cubic
// penalty admits them, composite Simpson quadrature everywhere else. Each
// quadrature value was computed at two resolutions; the digits quoted agreed
// between the runs to the tolerance noted next to the constant.
#pragma once

namespace fixtures {

// integral of exp(-|s|^3) over R and over R^2 (direct quadrature; the
// library computes the same quantities from the Gamma-function form).
inline constexpr double exp_cube_normalizer_1d = 1.7859590231382727;
inline constexpr double exp_cube_normalizer_2d = 2.8360579803974653;

// E|g|^3 and E|g|^5 for standard Gaussian g; also known in closed form as
// 2 sqrt(2/pi) and 8 sqrt(2/pi).
inline constexpr double gauss_abs_moment_3 = 1.5957691216050418;
inline constexpr double gauss_abs_moment_5 = 6.3830764864202134;

// max_s (x s + lam s^2 - |s|^3) at (lam, x) = (0.25, 1.3) and (-0.4, 2.2),
// from the closed-form quadratic stationarity conditions. Exact to rounding.
inline constexpr double hard_terminal_lam025_x13 = 0.6937695618753722;
inline constexpr double hard_terminal_lamm04_x22 = 1.0038518518518518;

// (1/10) log int exp(10 (s + 0.5 s^2 - |s|^3)) ds; resolutions agreed to
// 6e-16.
inline constexpr double soft_terminal_lam05_beta10_x1 = 0.52442252333243899;

// Two-component terminals with ordered-pair coefficients
// (l00, l01, l11) = (0.2, -0.1, 0.3), tilt x = (0.5, -1.0), t = 1, p = 3.
// Hard value from an eight-round zooming grid search (argmax to ~1e-8),
// soft value from a tensor Simpson rule (resolutions agreed to 2e-16).
inline constexpr double hard_terminal_2d_value = 0.59775810863688195;
inline constexpr double hard_terminal_2d_arg1 = 0.31771642483630064;
inline constexpr double hard_terminal_2d_arg2 = -0.65328863526338521;
inline constexpr double soft_terminal_2d_beta10 = 0.45707536418998618;

// Cascade values for one spin component, p = 3, t = 1, endpoint variance 1.
// cascade_x0_* is the backward recursion value at the root; functional_*
// subtracts the multiplier pairing and the weighted variance-increment sum.
// One level, weight 1, multiplier 0 (analytic terminal 2|x|^{3/2}/(3 sqrt 3)).
inline constexpr double cascade_x0_r1_lambda0 = 0.84069768753131702;
inline constexpr double functional_inf_r1_lambda0 = 0.34069768753131702;

// One level, weight 1, multiplier 0.25; resolutions agreed to 4e-14.
inline constexpr double cascade_x0_r1_lambda025 = 1.0335191493072331;
inline constexpr double functional_inf_r1_lambda025 = 0.2835191493072331;

// Two levels, weights (0.5, 1.5), variance knots (0.4, 1.0), multiplier
// 0.25; resolutions agreed to 2e-11.
inline constexpr double cascade_x0_r2_lambda025 = 1.2124855784082316;
inline constexpr double functional_inf_r2_lambda025 = 0.29248557840823153;

// Positive temperature: beta = 10, weights (0.4, 1.0), endpoint variance
// 0.25, multiplier 0.25; resolutions agreed to 4e-12.
inline constexpr double cascade_x0_beta10_r1 = 0.43579256316261106;
inline constexpr double functional_beta10_r1 = 0.24829256316261106;

} // namespace fixtures
