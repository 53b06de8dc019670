// Derivative-free simplex minimizer used by the functional minimization
// driver. Standard coefficients: reflection 1, expansion 2, contraction 0.5,
// shrink 0.5. The caller supplies the objective, an initial point, and an
// initial simplex scale; the run is deterministic for a fixed start.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "lpspin/errors.hpp"

namespace lpspin {

struct nelder_mead_options {
    std::size_t max_evals = 4000;
    double x_tol = 1e-9;   // simplex diameter below this stops the run
    double f_tol = 1e-10;  // value spread below this stops the run
    double scale = 0.25;   // initial simplex edge length per coordinate
};

struct nelder_mead_result {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evals = 0;
    bool converged = false;      // a tolerance fired within the budget
    bool improved = false;       // final value beat the starting vertex
    std::vector<double> trace;   // best value after each accepted move
};

inline nelder_mead_result nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& start, const nelder_mead_options& opts = {}) {
    const std::size_t dim = start.size();
    require_input(dim > 0, "nelder_mead: empty start point");

    struct vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<vertex> simplex(dim + 1);
    nelder_mead_result out;

    auto eval = [&](const std::vector<double>& x) {
        ++out.evals;
        double f = objective(x);
        if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
        return f;
    };

    simplex[0].x = start;
    simplex[0].f = eval(start);
    const double start_value = simplex[0].f;
    for (std::size_t i = 0; i < dim; ++i) {
        simplex[i + 1].x = start;
        double step = opts.scale * (1.0 + std::fabs(start[i]));
        simplex[i + 1].x[i] += step;
        simplex[i + 1].f = eval(simplex[i + 1].x);
    }

    auto by_value = [](const vertex& a, const vertex& b) { return a.f < b.f; };
    std::sort(simplex.begin(), simplex.end(), by_value);
    out.trace.push_back(simplex[0].f);

    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
    while (out.evals < opts.max_evals) {
        double diameter = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double lo = simplex[0].x[i], hi = lo;
            for (std::size_t v = 1; v <= dim; ++v) {
                lo = std::min(lo, simplex[v].x[i]);
                hi = std::max(hi, simplex[v].x[i]);
            }
            diameter = std::max(diameter, hi - lo);
        }
        double spread = simplex[dim].f - simplex[0].f;
        if (diameter < opts.x_tol || spread < opts.f_tol) {
            out.converged = true;
            break;
        }

        for (std::size_t i = 0; i < dim; ++i) {
            double c = 0.0;
            for (std::size_t v = 0; v < dim; ++v) c += simplex[v].x[i];
            centroid[i] = c / static_cast<double>(dim);
        }

        for (std::size_t i = 0; i < dim; ++i)
            xr[i] = centroid[i] + (centroid[i] - simplex[dim].x[i]);
        double fr = eval(xr);

        if (fr < simplex[0].f) {
            for (std::size_t i = 0; i < dim; ++i)
                xe[i] = centroid[i] + 2.0 * (centroid[i] - simplex[dim].x[i]);
            double fe = eval(xe);
            if (fe < fr) {
                simplex[dim] = {xe, fe};
            } else {
                simplex[dim] = {xr, fr};
            }
        } else if (fr < simplex[dim - 1].f) {
            simplex[dim] = {xr, fr};
        } else {
            bool outside = fr < simplex[dim].f;
            const std::vector<double>& toward = outside ? xr : simplex[dim].x;
            for (std::size_t i = 0; i < dim; ++i)
                xc[i] = centroid[i] + 0.5 * (toward[i] - centroid[i]);
            double fc = eval(xc);
            if (fc < (outside ? fr : simplex[dim].f)) {
                simplex[dim] = {xc, fc};
            } else {
                for (std::size_t v = 1; v <= dim; ++v) {
                    for (std::size_t i = 0; i < dim; ++i)
                        simplex[v].x[i] =
                            simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
                    simplex[v].f = eval(simplex[v].x);
                }
            }
        }

        std::sort(simplex.begin(), simplex.end(), by_value);
        out.trace.push_back(simplex[0].f);
    }

    out.x = simplex[0].x;
    out.value = simplex[0].f;
    out.improved = out.value < start_value;
    return out;
}

} // namespace lpspin
