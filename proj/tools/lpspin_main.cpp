// Batch experiment driver. Subcommands run grids of solver or functional
// evaluations, emit one CSV row per (parameter point, replica) plus an
// aggregate row per point, and never write timing into the CSV so identical
// configurations produce identical bytes. Wall time goes to stderr.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lpspin/asymptotics.hpp"
#include "lpspin/errors.hpp"
#include "lpspin/linalg.hpp"
#include "lpspin/model.hpp"
#include "lpspin/parallel.hpp"
#include "lpspin/parisi.hpp"
#include "lpspin/quadrature.hpp"
#include "lpspin/serialize.hpp"
#include "lpspin/solvers.hpp"
#include "lpspin/verify.hpp"

#ifndef LPSPIN_VERSION_STRING
#define LPSPIN_VERSION_STRING "0.0.0"
#endif

namespace {

using namespace lpspin;

const std::vector<std::string> k_header = {
    "subcommand", "n",     "p",      "kappa",        "t",
    "beta",       "r",     "replica", "seed",        "value",
    "stderr",     "ode_residual",    "identity_value", "converged",
    "label",      "version"};

struct row_builder {
    std::vector<std::string> f = std::vector<std::string>(k_header.size());

    row_builder(const std::string& subcommand) {
        f[0] = subcommand;
        f[15] = LPSPIN_VERSION_STRING;
    }
    row_builder& n(std::size_t v) { f[1] = std::to_string(v); return *this; }
    row_builder& p(double v) { f[2] = format_double(v); return *this; }
    row_builder& kappa(std::size_t v) { f[3] = std::to_string(v); return *this; }
    row_builder& t(double v) { f[4] = format_double(v); return *this; }
    row_builder& beta(double v) { f[5] = format_double(v); return *this; }
    row_builder& r(std::size_t v) { f[6] = std::to_string(v); return *this; }
    row_builder& replica(const std::string& v) { f[7] = v; return *this; }
    row_builder& seed(std::uint64_t v) { f[8] = std::to_string(v); return *this; }
    row_builder& value(double v) { f[9] = format_double(v); return *this; }
    row_builder& stderr_est(double v) { f[10] = format_double(v); return *this; }
    row_builder& ode_residual(double v) { f[11] = format_double(v); return *this; }
    row_builder& identity_value(double v) { f[12] = format_double(v); return *this; }
    row_builder& converged(bool v) { f[13] = v ? "1" : "0"; return *this; }
    row_builder& label(const std::string& v) { f[14] = v; return *this; }
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& field, const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        require_input(used == text.size(), "");
        return v;
    } catch (const std::exception&) {
        throw input_error("field " + field + ": '" + text + "' is not a number");
    }
}

std::uint64_t parse_u64_field(const std::string& field, const std::string& text) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(text, &used);
        require_input(used == text.size(), "");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw input_error("field " + field + ": '" + text + "' is not a nonnegative integer");
    }
}

std::vector<double> parse_double_list(const std::string& field, const std::string& text) {
    require_input(!text.empty(), "field " + field + ": empty list");
    std::vector<double> out;
    for (const std::string& tok : split_list(text)) out.push_back(parse_double_field(field, tok));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& field, const std::string& text) {
    require_input(!text.empty(), "field " + field + ": empty list");
    std::vector<std::size_t> out;
    for (const std::string& tok : split_list(text)) {
        std::uint64_t v = parse_u64_field(field, tok);
        require_input(v >= 1, "field " + field + ": entries must be >= 1");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Constraint matrix specification: "identity", "identity*<scale>", or
// semicolon-separated rows of comma-separated entries.
sym_matrix parse_d_spec(const std::string& spec, std::size_t kappa) {
    require_input(!spec.empty(), "field d: empty specification");
    if (spec.rfind("identity", 0) == 0) {
        double scale = 1.0;
        std::string rest = spec.substr(8);
        if (!rest.empty()) {
            require_input(rest[0] == '*', "field d: expected identity or identity*<scale>");
            scale = parse_double_field("d", rest.substr(1));
        }
        sym_matrix d = sym_matrix::identity(kappa);
        for (double& v : d.a) v *= scale;
        require_input(is_psd(d), "field d: matrix must be PSD");
        return d;
    }
    std::vector<std::string> rows;
    {
        std::string cur;
        for (char c : spec) {
            if (c == ';') {
                rows.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        rows.push_back(cur);
    }
    require_input(rows.size() == kappa,
                  "field d: expected " + std::to_string(kappa) + " rows");
    mat m(kappa, kappa);
    for (std::size_t i = 0; i < kappa; ++i) {
        std::vector<double> entries = parse_double_list("d", rows[i]);
        require_input(entries.size() == kappa,
                      "field d: row " + std::to_string(i) + " needs " +
                          std::to_string(kappa) + " entries");
        for (std::size_t j = 0; j < kappa; ++j) m(i, j) = entries[j];
    }
    sym_matrix d = sym_matrix::from_general(m);
    require_input(is_psd(d), "field d: matrix must be PSD");
    return d;
}

struct options {
    std::string config_path;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_path;
    std::string doc_path;
    std::string n_grid = "64";
    std::string p_list = "3";
    std::string kappa_list = "1";
    std::string t_grid = "1";
    int replicas = 8;
    int restarts = 16;
    int r_max = 3;
    double beta = 0.0;  // 0 means zero temperature / not set
    std::string quad_mode = "grid";
    long samples = 0;
    std::string d_spec = "identity";
};

quadrature_spec quad_from(const options& o) {
    quadrature_spec q;
    require_input(o.quad_mode == "grid" || o.quad_mode == "mc",
                  "field quad: must be grid or mc");
    q.mode = o.quad_mode == "mc" ? quadrature_spec::mode_t::mc : quadrature_spec::mode_t::grid;
    q.samples = o.samples;
    q.seed = o.seed;
    return q;
}

solver_config solver_from(const options& o) {
    solver_config cfg;
    require_input(o.restarts >= 1, "field restarts: must be >= 1");
    cfg.restarts = o.restarts;
    cfg.seed = o.seed;
    return cfg;
}

void write_output(const options& o, const std::vector<std::vector<std::string>>& rows) {
    std::string text = csv_row(k_header);
    for (const std::vector<std::string>& row : rows) text += csv_row(row);
    if (o.out_path.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(o.out_path, std::ios::binary);
    require_input(out.good(), "field out: cannot open " + o.out_path);
    out << text;
}

// The sphere maximum of the quadratic form grows at a p-dependent rate; each
// regime gets the normalization under which the value has a finite limit.
double gp_scale_factor(double p, std::size_t n) {
    double nn = static_cast<double>(n);
    if (p < 2.0) return std::pow(nn, -(p - 1.0) / p);
    if (p == 2.0) return std::pow(nn, -0.5);
    return std::pow(nn, 2.0 / p - 1.5);
}

void append_mean_row(std::vector<std::vector<std::string>>& rows, row_builder base,
                     const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    base.replica("mean").value(mean);
    if (values.size() > 1) {
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size() - 1);
        base.stderr_est(std::sqrt(var / static_cast<double>(values.size())));
    }
    rows.push_back(base.f);
}

int cmd_ground_state(const options& o) {
    std::vector<std::size_t> ns = parse_size_list("n-grid", o.n_grid);
    std::vector<double> ps = parse_double_list("p", o.p_list);
    std::vector<std::size_t> kappas = parse_size_list("kappa", o.kappa_list);
    require_input(o.replicas >= 1, "field replicas: must be >= 1");
    solver_config cfg = solver_from(o);

    struct task {
        std::size_t n, kappa, replica;
        double p;
    };
    std::vector<task> tasks;
    for (std::size_t n : ns)
        for (double p : ps)
            for (std::size_t kappa : kappas)
                for (int rep = 0; rep < o.replicas; ++rep)
                    tasks.push_back({n, kappa, static_cast<std::size_t>(rep), p});

    struct outcome {
        double value = 0.0;
        bool converged = false;
    };
    std::vector<outcome> results(tasks.size());
    parallel_for(tasks.size(), o.workers, [&](std::size_t i) {
        const task& tk = tasks[i];
        disorder dis = disorder::sample(tk.n, o.seed, tk.replica);
        ground_state_result r = maximize_sphere(dis, tk.p, tk.kappa, cfg);
        results[i] = {r.value * gp_scale_factor(tk.p, tk.n), r.converged};
    });

    std::vector<std::vector<std::string>> rows;
    std::size_t i = 0;
    while (i < tasks.size()) {
        std::vector<double> point_values;
        std::size_t first = i;
        for (; i < tasks.size() && tasks[i].n == tasks[first].n &&
               tasks[i].p == tasks[first].p && tasks[i].kappa == tasks[first].kappa;
             ++i) {
            row_builder b("ground-state");
            b.n(tasks[i].n).p(tasks[i].p).kappa(tasks[i].kappa);
            b.replica(std::to_string(tasks[i].replica)).seed(o.seed);
            b.value(results[i].value).converged(results[i].converged);
            rows.push_back(b.f);
            point_values.push_back(results[i].value);
        }
        row_builder mean_base("ground-state");
        mean_base.n(tasks[first].n).p(tasks[first].p).kappa(tasks[first].kappa).seed(o.seed);
        append_mean_row(rows, mean_base, point_values);
    }
    write_output(o, rows);
    return 0;
}

int cmd_lagrangian(const options& o) {
    std::vector<std::size_t> ns = parse_size_list("n-grid", o.n_grid);
    std::vector<double> ps = parse_double_list("p", o.p_list);
    std::vector<std::size_t> kappas = parse_size_list("kappa", o.kappa_list);
    std::vector<double> ts = parse_double_list("t-grid", o.t_grid);
    require_input(o.replicas >= 1, "field replicas: must be >= 1");
    solver_config cfg = solver_from(o);

    struct task {
        std::size_t n, kappa, replica;
        double p, t;
    };
    std::vector<task> tasks;
    for (std::size_t n : ns)
        for (double p : ps)
            for (std::size_t kappa : kappas)
                for (double t : ts)
                    for (int rep = 0; rep < o.replicas; ++rep)
                        tasks.push_back({n, kappa, static_cast<std::size_t>(rep), p, t});

    std::vector<derivative_check> results(tasks.size());
    parallel_for(tasks.size(), o.workers, [&](std::size_t i) {
        const task& tk = tasks[i];
        disorder dis = disorder::sample(tk.n, o.seed, tk.replica);
        results[i] = derivative_relation_check(dis, tk.p, tk.t, tk.kappa, cfg);
    });

    std::vector<std::vector<std::string>> rows;
    std::size_t i = 0;
    while (i < tasks.size()) {
        std::vector<double> point_values;
        std::size_t first = i;
        for (; i < tasks.size() && tasks[i].n == tasks[first].n &&
               tasks[i].p == tasks[first].p && tasks[i].kappa == tasks[first].kappa &&
               tasks[i].t == tasks[first].t;
             ++i) {
            row_builder b("lagrangian");
            b.n(tasks[i].n).p(tasks[i].p).kappa(tasks[i].kappa).t(tasks[i].t);
            b.replica(std::to_string(tasks[i].replica)).seed(o.seed);
            b.value(results[i].lag).ode_residual(results[i].ode_residual);
            b.identity_value(results[i].gse_value);
            rows.push_back(b.f);
            point_values.push_back(results[i].lag);
        }
        row_builder mean_base("lagrangian");
        mean_base.n(tasks[first].n).p(tasks[first].p).kappa(tasks[first].kappa);
        mean_base.t(tasks[first].t).seed(o.seed);
        append_mean_row(rows, mean_base, point_values);
    }
    write_output(o, rows);
    return 0;
}

std::string read_text_file(const std::string& field, const std::string& file_path) {
    std::ifstream in(file_path, std::ios::binary);
    require_input(in.good(), "field " + field + ": cannot open " + file_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_parisi(const options& o, const std::string& mode) {
    require_input(mode == "eval" || mode == "min", "parisi: mode must be eval or min");
    double p = parse_double_list("p", o.p_list).front();
    double t = parse_double_list("t-grid", o.t_grid).front();
    quadrature_spec quad = quad_from(o);
    std::vector<std::vector<std::string>> rows;

    if (mode == "eval") {
        require_input(!o.doc_path.empty(), "field doc: required for parisi eval");
        lagrange_multiplier lam;
        discrete_measure weights;
        path pi;
        parisi_doc_from_json(read_text_file("doc", o.doc_path), lam, weights, pi);
        double value = o.beta > 0.0 ? parisi_beta(lam, o.beta, p, t, weights, pi, quad)
                                    : parisi_inf(lam, p, t, weights, pi, quad);
        row_builder b("parisi");
        b.p(p).kappa(pi.kappa).t(t).r(pi.levels()).seed(o.seed).value(value).label("eval");
        if (o.beta > 0.0) b.beta(o.beta);
        rows.push_back(b.f);
        write_output(o, rows);
        return 0;
    }

    std::size_t kappa = parse_size_list("kappa", o.kappa_list).front();
    sym_matrix d = parse_d_spec(o.d_spec, kappa);
    require_input(o.r_max >= 1, "field r-max: must be >= 1");

    minimize_options opts;
    opts.beta = o.beta;
    opts.seed = o.seed;
    opts.quad = quad;
    functional_mode fmode = o.beta > 0.0 ? functional_mode::positive_temperature
                                         : functional_mode::zero_temperature;

    minimize_result best;
    for (std::size_t r = 1; r <= static_cast<std::size_t>(o.r_max); ++r) {
        minimize_result res = minimize_parisi(d, p, t, r, fmode, opts);
        row_builder b("parisi");
        b.p(p).kappa(kappa).t(t).r(r).seed(o.seed).value(res.value);
        b.converged(res.converged).label("min");
        if (o.beta > 0.0) b.beta(o.beta);
        rows.push_back(b.f);
        if (res.value < best.value) best = std::move(res);
    }

    std::string doc_path = o.doc_path;
    if (doc_path.empty())
        doc_path = o.out_path.empty() ? "parisi_min.doc.json" : o.out_path + ".doc.json";
    std::ofstream doc(doc_path, std::ios::binary);
    require_input(doc.good(), "field doc: cannot open " + doc_path);
    doc << parisi_doc_to_json(best.lambda, best.weights, best.pi) << "\n";
    std::fprintf(stderr, "best triple written to %s\n", doc_path.c_str());

    write_output(o, rows);
    return 0;
}

int cmd_asymptotics(const options& o) {
    std::vector<double> ps = parse_double_list("p", o.p_list);
    std::vector<std::vector<std::string>> rows;
    for (double p : ps) {
        limit_result r = scaling_descriptor(p);
        row_builder b("asymptotics");
        b.p(p).label(r.scaling);
        if (!r.variational) b.value(r.constant);
        rows.push_back(b.f);
    }
    write_output(o, rows);
    return 0;
}

int cmd_verify(const options& o, const std::string& suite_name) {
    std::vector<check_result> checks;
    std::string suite = suite_name.empty() ? "all" : suite_name;
    if (suite == "linalg")
        checks = verify_linalg(o.seed, o.workers);
    else if (suite == "model")
        checks = verify_model(o.seed, o.workers);
    else if (suite == "terminals")
        checks = verify_terminals(o.seed, o.workers);
    else if (suite == "pde")
        checks = verify_pde(o.seed);
    else if (suite == "ac")
        checks = verify_ac(o.seed);
    else if (suite == "asymptotics")
        checks = verify_asymptotics(o.seed, o.workers);
    else if (suite == "all")
        checks = verify_all(o.seed, o.workers);
    else
        throw input_error("verify: unknown suite '" + suite +
                          "' (linalg|model|terminals|pde|ac|asymptotics|all)");

    const check_result* first_failure = nullptr;
    for (const check_result& c : checks) {
        if (c.pass) {
            std::printf("PASS %s\n", c.name.c_str());
        } else {
            std::printf("FAIL %s: %s\n", c.name.c_str(), c.detail.c_str());
            if (!first_failure) first_failure = &c;
        }
    }
    if (first_failure) {
        std::printf("first counterexample: %s: %s\n", first_failure->name.c_str(),
                    first_failure->detail.c_str());
        return 3;
    }
    std::printf("all %zu checks passed\n", checks.size());
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"vector-spin sphere maxima, penalized maxima, and the variational functional"};
    app.get_formatter()->column_width(28);

    options o;
    std::string subcommand;
    std::string mode;
    app.add_option("subcommand", subcommand,
                   "ground-state | lagrangian | parisi | asymptotics | verify")
        ->required();
    app.add_option("mode", mode, "parisi: eval|min; verify: suite name (default all)");
    app.add_option("--config", o.config_path, "JSON or key=value config file; flags win");
    app.add_option("--seed", o.seed, "base seed for disorder and solver streams");
    app.add_option("--workers", o.workers, "worker threads for the task pool");
    app.add_option("--out", o.out_path, "CSV output path (default stdout)");
    app.add_option("--doc", o.doc_path, "parameter document path (in: eval, out: min)");
    app.add_option("--n-grid", o.n_grid, "comma-separated system sizes");
    app.add_option("--p", o.p_list, "comma-separated norm exponents");
    app.add_option("--kappa", o.kappa_list, "comma-separated spin dimensions");
    app.add_option("--t-grid", o.t_grid, "comma-separated penalty strengths");
    app.add_option("--replicas", o.replicas, "disorder replicas per parameter point");
    app.add_option("--restarts", o.restarts, "ascent restarts per solve");
    app.add_option("--r-max", o.r_max, "largest level count for parisi min");
    app.add_option("--beta", o.beta, "inverse temperature; omit for zero temperature");
    app.add_option("--quad", o.quad_mode, "quadrature mode: grid or mc");
    app.add_option("--samples", o.samples, "monte carlo sample count for --quad mc");
    app.add_option("--d", o.d_spec,
                   "constraint matrix: identity, identity*<s>, or rows 'a,b;c,d'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }

    // config supplies defaults for every flag not given on the command line
    if (!o.config_path.empty()) {
        std::map<std::string, std::string> cfg = load_config_file(o.config_path);
        auto absent = [&](const std::string& flag) { return app.count(flag) == 0; };
        for (const auto& [key, value] : cfg) {
            if (key == "seed") {
                if (absent("--seed")) o.seed = parse_u64_field(key, value);
            } else if (key == "workers") {
                if (absent("--workers")) o.workers = static_cast<int>(parse_u64_field(key, value));
            } else if (key == "out") {
                if (absent("--out")) o.out_path = value;
            } else if (key == "doc") {
                if (absent("--doc")) o.doc_path = value;
            } else if (key == "n-grid") {
                if (absent("--n-grid")) o.n_grid = value;
            } else if (key == "p") {
                if (absent("--p")) o.p_list = value;
            } else if (key == "kappa") {
                if (absent("--kappa")) o.kappa_list = value;
            } else if (key == "t-grid") {
                if (absent("--t-grid")) o.t_grid = value;
            } else if (key == "replicas") {
                if (absent("--replicas")) o.replicas = static_cast<int>(parse_u64_field(key, value));
            } else if (key == "restarts") {
                if (absent("--restarts")) o.restarts = static_cast<int>(parse_u64_field(key, value));
            } else if (key == "r-max") {
                if (absent("--r-max")) o.r_max = static_cast<int>(parse_u64_field(key, value));
            } else if (key == "beta") {
                if (absent("--beta")) o.beta = parse_double_field(key, value);
            } else if (key == "quad") {
                if (absent("--quad")) o.quad_mode = value;
            } else if (key == "samples") {
                if (absent("--samples")) o.samples = static_cast<long>(parse_u64_field(key, value));
            } else if (key == "d") {
                if (absent("--d")) o.d_spec = value;
            } else {
                throw input_error("config: unknown key '" + key + "'");
            }
        }
    }
    require_input(o.workers >= 1, "field workers: must be >= 1");

    auto started = std::chrono::steady_clock::now();
    int code;
    if (subcommand == "ground-state")
        code = cmd_ground_state(o);
    else if (subcommand == "lagrangian")
        code = cmd_lagrangian(o);
    else if (subcommand == "parisi")
        code = cmd_parisi(o, mode);
    else if (subcommand == "asymptotics")
        code = cmd_asymptotics(o);
    else if (subcommand == "verify")
        code = cmd_verify(o, mode);
    else
        throw input_error("unknown subcommand '" + subcommand +
                          "' (ground-state|lagrangian|parisi|asymptotics|verify)");
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    std::fprintf(stderr, "wall_seconds %.3f\n", elapsed.count());
    return code;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const lpspin::input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const lpspin::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const lpspin::numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
}
