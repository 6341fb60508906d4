#include "cli.hpp"

#include "gcirc/analysis.hpp"
#include "gcirc/catalog.hpp"
#include "gcirc/dsl.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gcirc::cli {

namespace {

using json = nlohmann::ordered_json;

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tabular output

using Cell = std::variant<double, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_field(const Cell& c)
{
    if (const double* d = std::get_if<double>(&c))
        return format_number(*d);
    if (const bool* b = std::get_if<bool>(&c))
        return *b ? "true" : "false";
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"')
            q += '"';
        q += ch;
    }
    return q + '"';
}

void write_csv(const Table& t, std::ostream& os)
{
    os << "# units: M, min\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << csv_field(row[i]);
        os << '\n';
    }
}

json to_json(const Table& t)
{
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>)
                        r[t.columns[i]] = std::isfinite(v) ? json(v) : json(nullptr);
                    else
                        r[t.columns[i]] = v;
                },
                row[i]);
        }
        rows.push_back(std::move(r));
    }
    return json{{"units", {{"concentration", "M"}, {"time", "min"}}}, {"columns", t.columns}, {"rows", rows}};
}

void write_table(const Table& t, const std::string& format, std::ostream& os)
{
    if (format == "json")
        os << to_json(t).dump(2) << '\n';
    else
        write_csv(t, os);
}

// ---------------------------------------------------------------------------
// Shared options

struct Common {
    std::string catalog;
    std::string circuit;
    std::vector<std::string> params;
    std::vector<std::string> sets;
    std::string format = "csv";
    std::string out;
    std::uint64_t seed = 0;
    SolverOptions solver;
    unsigned threads = 0;
};

void add_source_options(CLI::App* sub, Common& c)
{
    sub->add_option("--catalog", c.catalog, "Catalog circuit name")
        ->check(CLI::IsMember({"relay", "subtractor", "discrete-comparator", "bistable-comparator",
                               "type1-loop", "type2-loop"}));
    sub->add_option("--circuit", c.circuit, "Circuit description file (.gc)");
    sub->add_option("--param", c.params, "Catalog parameter override NAME=VALUE")->take_all();
    sub->add_option("--set", c.sets, "Clamp input ID=VALUE (molar)")->take_all();
}

void add_run_options(CLI::App* sub, Common& c)
{
    add_source_options(sub, c);
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out, "Output file (default: standard output)");
    sub->add_option("--seed", c.seed, "Seed for quasi-random sampling");
    sub->add_option("--rel-tol", c.solver.rel_tol, "Integrator relative tolerance");
    sub->add_option("--abs-tol", c.solver.abs_tol, "Integrator absolute tolerance (M)");
    sub->add_option("--horizon", c.solver.max_horizon, "Steady-state horizon (min)");
    sub->add_option("--steady-tol", c.solver.steady_tol, "Steady-state residual tolerance (M/min)");
    sub->add_option("--threads", c.threads, "Worker threads (default: GCIRC_THREADS or all cores)");
}

std::pair<std::string, double> split_assignment(const std::string& s, const char* what)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw usage_error(std::string(what) + " expects NAME=VALUE, got '" + s + "'");
    const std::string value = s.substr(eq + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw usage_error(std::string(what) + ": malformed number '" + value + "'");
    return {s.substr(0, eq), v};
}

struct Loaded {
    CircuitModel model;
    std::string label;
    std::optional<std::string> default_observable;
    std::map<std::string, double> parameters; ///< catalog only
};

void print_model_diagnostics(const std::vector<Diagnostic>& diags, const std::string& label, std::ostream& err)
{
    for (const auto& d : diags)
        err << label << ": " << to_string(d.code) << ": " << d.element << ": " << d.message << '\n';
}

std::optional<Loaded> load_circuit(const Common& c, std::ostream& err)
{
    if (c.catalog.empty() == c.circuit.empty())
        throw usage_error("give exactly one of --catalog or --circuit");

    Loaded l;
    if (!c.catalog.empty()) {
        std::map<std::string, double, std::less<>> overrides;
        for (const auto& p : c.params) {
            auto [name, v] = split_assignment(p, "--param");
            overrides[name] = v;
        }
        try {
            l.parameters = catalog::parameters(c.catalog, overrides);
        } catch (const std::invalid_argument& e) {
            throw usage_error(e.what());
        }
        try {
            l.model = catalog::build(c.catalog, overrides);
        } catch (const model_error& e) {
            print_model_diagnostics(e.diagnostics(), c.catalog, err);
            return std::nullopt;
        }
        l.label = c.catalog;
        l.default_observable = std::string(catalog::entry(c.catalog).output);
    } else {
        if (!c.params.empty())
            throw usage_error("--param applies to catalog circuits only");
        std::ifstream in(c.circuit, std::ios::binary);
        if (!in)
            throw usage_error("cannot read '" + c.circuit + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        auto r = dsl::parse(ss.str());
        if (!r.ok()) {
            for (const auto& d : r.diagnostics)
                err << c.circuit << ':' << d.line << ':' << d.column << ": " << d.code << ": " << d.message << '\n';
            return std::nullopt;
        }
        l.model = std::move(*r.model);
        l.label = c.circuit;
    }

    for (const auto& s : c.sets) {
        auto [id, v] = split_assignment(s, "--set");
        l.model = l.model.with_input(id, v);
    }
    if (auto diags = validate(l.model); !diags.empty()) {
        print_model_diagnostics(diags, l.label, err);
        return std::nullopt;
    }
    return l;
}

SolverOptions solver_options(const Common& c)
{
    SolverOptions o = c.solver;
    o.seed = c.seed;
    try {
        check_options(o);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    return o;
}

SweepOptions sweep_options(const Common& c)
{
    SweepOptions o;
    o.solver = solver_options(c);
    o.threads = c.threads ? c.threads : default_thread_count();
    return o;
}

std::string observable_or_default(const std::string& given, const Loaded& l)
{
    if (!given.empty())
        return given;
    if (l.default_observable)
        return *l.default_observable;
    throw usage_error("--observe is required for circuit files");
}

std::vector<double> linspace(double from, double to, std::size_t n)
{
    if (n == 0)
        throw usage_error("grid needs at least one point");
    if (!(std::isfinite(from) && std::isfinite(to)) || to < from)
        throw usage_error("grid bounds must be finite with from <= to");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

void emit(const Table& t, const Common& c, std::ostream& out)
{
    if (c.out.empty()) {
        write_table(t, c.format, out);
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f)
        throw usage_error("cannot write '" + c.out + "'");
    write_table(t, c.format, f);
}

std::size_t unsettled_cells(const SweepGrid& g)
{
    return static_cast<std::size_t>(std::count_if(g.flags.begin(), g.flags.end(), [](unsigned f) {
        return (f & (cell_not_converged | cell_newton_failed)) != 0;
    }));
}

void warn(std::size_t n, const char* what, std::ostream& err)
{
    if (n)
        err << "warning: " << n << ' ' << what << '\n';
}

Table grid_table(const SweepGrid& g)
{
    Table t;
    t.columns.push_back(g.axis1.input);
    if (g.axis2)
        t.columns.push_back(g.axis2->input);
    t.columns.push_back(g.observable);
    t.columns.push_back("flag");
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
            std::vector<Cell> row{g.axis1.values[i]};
            if (g.axis2)
                row.emplace_back(g.axis2->values[j]);
            row.emplace_back(g.at(i, j));
            row.emplace_back(flag_string(g.flag(i, j)));
            t.rows.push_back(std::move(row));
        }
    return t;
}

Table envelope_table(const Envelope& e, const std::string& observable)
{
    Table t{{"difference", observable + "_min", observable + "_max", "count"}, {}};
    for (std::size_t i = 0; i < e.differences.size(); ++i)
        t.rows.push_back({e.differences[i], e.min_values[i], e.max_values[i],
                          static_cast<double>(e.counts[i])});
    return t;
}

Table trajectories_table(const std::string& input, std::span<const double> levels,
                         const std::vector<Trajectory>& trs, const std::string& observable)
{
    Table t{{input, "time", observable}, {}};
    for (std::size_t k = 0; k < trs.size(); ++k) {
        const auto& tr = trs[k];
        const auto col = static_cast<std::size_t>(
            std::find(tr.species.begin(), tr.species.end(), observable) - tr.species.begin());
        for (std::size_t r = 0; r < tr.times.size(); ++r)
            t.rows.push_back({levels[k], tr.times[r], tr.states[r][col]});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Figures

struct FigureSet {
    std::vector<std::pair<std::string, Table>> files;
    json metadata;
    std::size_t warnings = 0;
};

constexpr double figure_horizon = 5e8; ///< minutes, closed-loop time courses
constexpr std::size_t figure_samples = 200;

FigureSet build_figures(const SweepOptions& so)
{
    FigureSet fs;
    json figs = json::array();
    auto note = [&](const std::string& file, const std::string& circuit, const std::string& what,
                    json axes, std::size_t warnings) {
        fs.warnings += warnings;
        figs.push_back({{"file", file},
                        {"circuit", circuit},
                        {"description", what},
                        {"parameters", catalog::parameters(circuit)},
                        {"axes", std::move(axes)},
                        {"warnings", warnings}});
    };
    auto axis = [](const std::string& id, double from, double to, std::size_t n) {
        return json{{"input", id}, {"from", from}, {"to", to}, {"points", n}};
    };

    {
        const auto model = catalog::relay_switch();
        const auto tf = linspace(0.0, 5e-3, 200);
        const auto zero = sweep_1d(model, "TF", tf, "P2", false, so);
        const auto up = sweep_1d(model, "TF", tf, "P2", true, so);
        Table t{{"TF", "P2_zero_start", "P2_continuation", "flag_zero_start", "flag_continuation"}, {}};
        for (std::size_t i = 0; i < tf.size(); ++i)
            t.rows.push_back({tf[i], zero.at(i), up.at(i), flag_string(zero.flag(i)), flag_string(up.flag(i))});
        fs.files.emplace_back("fig2.csv", std::move(t));
        note("fig2.csv", "relay", "steady P2 versus TF from the zero state and on an up-sweep continuation",
             json::array({axis("TF", 0.0, 5e-3, 200)}), unsettled_cells(zero) + unsettled_cells(up));
    }

    struct Surface {
        const char* a;
        const char* b;
        const char* circuit;
        const char* observable;
        double to;
        const char* what;
    };
    const Surface surfaces[] = {
        {"fig4a.csv", "fig4b.csv", "subtractor", "P1", 4e-6, "steady P1 over (TF1, TF2)"},
        {"fig6a.csv", "fig6b.csv", "discrete-comparator", "P3", 1e-5, "steady P3 over (TF1, TF2)"},
        {"fig8a.csv", "fig8b.csv", "bistable-comparator", "P1", 1e-5, "steady P1 over (TF1, TF2)"},
    };
    for (const auto& s : surfaces) {
        const auto model = catalog::build(s.circuit);
        const auto g = linspace(0.0, s.to, 41);
        const auto grid = sweep_2d(model, "TF1", "TF2", g, g, s.observable, so);
        const json axes = json::array({axis("TF1", 0.0, s.to, 41), axis("TF2", 0.0, s.to, 41)});
        fs.files.emplace_back(s.a, grid_table(grid));
        note(s.a, s.circuit, std::string(s.what) + " from the zero state", axes, unsettled_cells(grid));
        fs.files.emplace_back(s.b, envelope_table(difference_envelope(grid), s.observable));
        note(s.b, s.circuit, std::string("min and max of ") + s.observable + " per TF1 - TF2 bin", axes, 0);
    }

    struct Loop {
        const char* a;
        const char* b;
        const char* circuit;
    };
    const Loop loops[] = {{"fig11a.csv", "fig11b.csv", "type1-loop"}, {"fig12a.csv", "fig12b.csv", "type2-loop"}};
    const std::vector<double> levels{1e-6, 2e-6, 3e-6, 5e-6, 1e-5};
    std::vector<double> samples(figure_samples);
    for (std::size_t i = 0; i < figure_samples; ++i)
        samples[i] = figure_horizon * static_cast<double>(i + 1) / static_cast<double>(figure_samples);
    for (const auto& l : loops) {
        const auto model = catalog::build(l.circuit);
        const auto tin = linspace(0.0, 2e-5, 100);
        const auto curve = tracking_curve(model, tin, so);
        fs.files.emplace_back(l.a, grid_table(curve));
        note(l.a, l.circuit, "steady Pout versus Tin from the zero state",
             json::array({axis("Tin", 0.0, 2e-5, 100)}), unsettled_cells(curve));

        const auto trs = time_course_batch(model, levels, figure_horizon, samples, so.solver, "Tin", so.threads);
        const auto failed = static_cast<std::size_t>(
            std::count_if(trs.begin(), trs.end(), [](const Trajectory& t) { return !t.failure.empty(); }));
        fs.files.emplace_back(l.b, trajectories_table("Tin", levels, trs, "Pout"));
        note(l.b, l.circuit, "Pout time courses from the zero state",
             json{{"Tin", levels}, {"horizon", figure_horizon}, {"samples", figure_samples}}, failed);
    }

    const auto& o = so.solver;
    fs.metadata = json{{"generator", "gcirc figures"},
                       {"units", {{"concentration", "M"}, {"time", "min"}}},
                       {"solver",
                        {{"rel_tol", o.rel_tol},
                         {"abs_tol", o.abs_tol},
                         {"max_horizon", o.max_horizon},
                         {"steady_tol", o.steady_tol},
                         {"newton_max_iters", o.newton_max_iters},
                         {"seed", o.seed}}},
                       {"multistability_probe", so.probe_multistability},
                       {"figures", std::move(figs)},
                       {"warnings", fs.warnings}};
    return fs;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_check(const std::string& file, Common& c, std::ostream& err)
{
    if (!file.empty()) {
        if (!c.circuit.empty())
            throw usage_error("give the circuit file once");
        c.circuit = file;
    }
    return load_circuit(c, err) ? exit_ok : exit_diagnostics;
}

int cmd_simulate(Common& c, double t_end, std::size_t samples, std::ostream& out, std::ostream& err)
{
    auto l = load_circuit(c, err);
    if (!l)
        return exit_diagnostics;
    if (!(t_end > 0.0))
        throw usage_error("--t-end must be positive");
    if (samples == 0)
        throw usage_error("--samples must be positive");
    const CompiledCircuit circuit(l->model);
    std::vector<double> times(samples);
    for (std::size_t i = 0; i < samples; ++i)
        times[i] = t_end * static_cast<double>(i + 1) / static_cast<double>(samples);
    const auto tr = integrate(circuit, circuit.initial_state(), t_end, solver_options(c), times, false);
    Table t;
    t.columns.push_back("time");
    for (const auto& id : tr.species)
        t.columns.push_back(id);
    for (std::size_t r = 0; r < tr.times.size(); ++r) {
        std::vector<Cell> row{tr.times[r]};
        for (double v : tr.states[r])
            row.emplace_back(v);
        t.rows.push_back(std::move(row));
    }
    emit(t, c, out);
    if (!tr.failure.empty())
        err << "warning: integration stopped early: " << tr.failure << '\n';
    return exit_ok;
}

Table equilibrium_table(const CompiledCircuit& circuit, const std::vector<Equilibrium>& eqs)
{
    Table t;
    t.columns.push_back("index");
    for (const auto& id : circuit.state_ids())
        t.columns.push_back(id);
    for (const char* col : {"residual_norm", "stability", "leading_eigenvalue_real_part", "newton_converged"})
        t.columns.emplace_back(col);
    for (std::size_t k = 0; k < eqs.size(); ++k) {
        const auto& e = eqs[k];
        std::vector<Cell> row{static_cast<double>(k)};
        for (double v : e.state)
            row.emplace_back(v);
        row.emplace_back(e.residual_norm);
        row.emplace_back(std::string(to_string(e.stability)));
        row.emplace_back(e.leading_eigenvalue_real_part);
        row.emplace_back(e.newton_converged);
        t.rows.push_back(std::move(row));
    }
    return t;
}

int cmd_steady(Common& c, std::ostream& out, std::ostream& err)
{
    auto l = load_circuit(c, err);
    if (!l)
        return exit_diagnostics;
    const CompiledCircuit circuit(l->model);
    Equilibrium eq;
    try {
        eq = find_steady_state(circuit, circuit.initial_state(), solver_options(c));
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_diagnostics;
    }
    emit(equilibrium_table(circuit, {eq}), c, out);
    if (!eq.newton_converged)
        warn(1, "point returned without Newton refinement", err);
    return exit_ok;
}

struct GridArgs {
    std::string input, input2, observe;
    double from = 0.0, to = 0.0, from2 = 0.0, to2 = 0.0;
    std::size_t points = 0, points2 = 0;
    bool continuation = false;
};

void add_grid_options(CLI::App* sub, GridArgs& g, bool two_axes_required)
{
    sub->add_option("--input", g.input, "First swept input")->required();
    sub->add_option("--from", g.from, "First axis lower bound (M)")->required();
    sub->add_option("--to", g.to, "First axis upper bound (M)")->required();
    sub->add_option("--points", g.points, "First axis point count")->required();
    auto* i2 = sub->add_option("--input2", g.input2, "Second swept input");
    auto* f2 = sub->add_option("--from2", g.from2, "Second axis lower bound (M)");
    auto* t2 = sub->add_option("--to2", g.to2, "Second axis upper bound (M)");
    auto* p2 = sub->add_option("--points2", g.points2, "Second axis point count");
    if (two_axes_required) {
        i2->required();
        f2->required();
        t2->required();
        p2->required();
    } else {
        i2->needs(f2, t2, p2);
    }
    sub->add_option("--observe", g.observe, "Observed species (default: the catalog output)");
    sub->add_flag("--continuation", g.continuation, "Start each point from the previous equilibrium");
}

std::optional<SweepGrid> run_grid(Common& c, const GridArgs& g, std::ostream& err)
{
    auto l = load_circuit(c, err);
    if (!l)
        return std::nullopt;
    const auto so = sweep_options(c);
    const std::string obs = observable_or_default(g.observe, *l);
    const auto a1 = linspace(g.from, g.to, g.points);
    try {
        if (g.input2.empty())
            return sweep_1d(l->model, g.input, a1, obs, g.continuation, so);
        const auto a2 = linspace(g.from2, g.to2, g.points2);
        return sweep_2d(l->model, g.input, g.input2, a1, a2, obs, so, g.continuation);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
}

int cmd_sweep(Common& c, const GridArgs& g, std::ostream& out, std::ostream& err)
{
    auto grid = run_grid(c, g, err);
    if (!grid)
        return exit_diagnostics;
    emit(grid_table(*grid), c, out);
    warn(unsettled_cells(*grid), "cells did not settle", err);
    return exit_ok;
}

int cmd_envelope(Common& c, const GridArgs& g, std::ostream& out, std::ostream& err)
{
    auto grid = run_grid(c, g, err);
    if (!grid)
        return exit_diagnostics;
    Envelope env;
    try {
        env = difference_envelope(*grid);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    emit(envelope_table(env, grid->observable), c, out);
    warn(unsettled_cells(*grid), "cells did not settle", err);
    return exit_ok;
}

int cmd_switch_point(Common& c, const GridArgs& g, std::size_t coarse, std::ostream& out, std::ostream& err)
{
    auto l = load_circuit(c, err);
    if (!l)
        return exit_diagnostics;
    const std::string obs = observable_or_default(g.observe, *l);
    SwitchSearchOptions so;
    so.coarse_points = coarse;
    SwitchPointResult r;
    try {
        r = find_switch_point(l->model, g.input, obs, g.from, g.to, solver_options(c), so);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_diagnostics;
    }
    Table t{{"up_sweep_point", "down_sweep_point", "low_plateau", "high_plateau", "hysteretic", "up_crossed",
             "down_crossed"},
            {{r.up_sweep_point, r.down_sweep_point, r.low_plateau, r.high_plateau, r.hysteretic, r.up_crossed,
              r.down_crossed}}};
    emit(t, c, out);
    return exit_ok;
}

int cmd_equilibria(Common& c, std::size_t samples, std::ostream& out, std::ostream& err)
{
    auto l = load_circuit(c, err);
    if (!l)
        return exit_diagnostics;
    if (samples == 0)
        throw usage_error("--samples must be positive");
    const CompiledCircuit circuit(l->model);
    const auto so = sweep_options(c);
    const auto res = enumerate_equilibria(circuit, samples, so.solver, so.threads);
    emit(equilibrium_table(circuit, res.equilibria), c, out);
    warn(res.failures.size(), "starts did not converge", err);
    return exit_ok;
}

int cmd_figures(Common& c, const std::string& dir, std::ostream& err)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw usage_error("cannot create output directory '" + dir + "'");
    const auto set = build_figures(sweep_options(c));
    for (const auto& [name, table] : set.files) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f)
            throw usage_error("cannot write '" + name + "' in '" + dir + "'");
        write_csv(table, f);
    }
    std::ofstream meta(fs::path(dir) / "figures.json", std::ios::binary);
    meta << set.metadata.dump(2) << '\n';
    warn(set.warnings, "cells or time courses did not settle", err);
    return exit_ok;
}

} // namespace

const std::vector<std::string>& figure_files()
{
    static const std::vector<std::string> names{"fig2.csv",   "fig4a.csv",  "fig4b.csv",  "fig6a.csv",
                                                "fig6b.csv",  "fig8a.csv",  "fig8b.csv",  "fig11a.csv",
                                                "fig11b.csv", "fig12a.csv", "fig12b.csv"};
    return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gene-circuit simulation and analysis"};
    app.name(args.empty() ? "gcirc" : std::filesystem::path(args[0]).filename().string());
    app.require_subcommand(1);

    Common common;
    GridArgs grid;
    std::string check_file, figures_dir;
    double t_end = 0.0;
    std::size_t samples = 100, eq_samples = 64, coarse = 65;

    auto* check = app.add_subcommand("check", "Validate a circuit; prints diagnostics, nothing on success");
    check->add_option("file", check_file, "Circuit description file");
    add_source_options(check, common);

    auto* simulate = app.add_subcommand("simulate", "Time course from the circuit's initial state");
    add_run_options(simulate, common);
    simulate->add_option("--t-end", t_end, "End time (min)")->required();
    simulate->add_option("--samples", samples, "Evenly spaced output times after t=0");

    auto* steady = app.add_subcommand("steady", "Steady state from the circuit's initial state");
    add_run_options(steady, common);

    auto* sweep = app.add_subcommand("sweep", "Steady-state sweep over one or two inputs");
    add_run_options(sweep, common);
    add_grid_options(sweep, grid, false);

    auto* envelope = app.add_subcommand("envelope", "Min/max of a 2-D sweep per input-difference bin");
    add_run_options(envelope, common);
    add_grid_options(envelope, grid, true);

    auto* sp = app.add_subcommand("switch-point", "Mid-plateau switch point on up- and down-sweeps");
    add_run_options(sp, common);
    sp->add_option("--input", grid.input, "Swept input")->required();
    sp->add_option("--from", grid.from, "Interval lower end (M)")->required();
    sp->add_option("--to", grid.to, "Interval upper end (M)")->required();
    sp->add_option("--observe", grid.observe, "Observed species (default: the catalog output)");
    sp->add_option("--coarse-points", coarse, "Continuation scan points before bisection");

    auto* eqs = app.add_subcommand("equilibria", "Multistart equilibrium enumeration");
    add_run_options(eqs, common);
    eqs->add_option("--samples", eq_samples, "Number of starts");

    auto* figures = app.add_subcommand("figures", "Regenerate every figure dataset");
    figures->add_option("--out", figures_dir, "Output directory")->required();
    figures->add_option("--rel-tol", common.solver.rel_tol, "Integrator relative tolerance");
    figures->add_option("--threads", common.threads, "Worker threads");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*check)
            return cmd_check(check_file, common, err);
        if (*simulate)
            return cmd_simulate(common, t_end, samples, out, err);
        if (*steady)
            return cmd_steady(common, out, err);
        if (*sweep)
            return cmd_sweep(common, grid, out, err);
        if (*envelope)
            return cmd_envelope(common, grid, out, err);
        if (*sp)
            return cmd_switch_point(common, grid, coarse, out, err);
        if (*eqs)
            return cmd_equilibria(common, eq_samples, out, err);
        if (*figures)
            return cmd_figures(common, figures_dir, err);
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const model_error& e) {
        print_model_diagnostics(e.diagnostics(), "circuit", err);
        return exit_diagnostics;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_diagnostics;
    }
    return exit_usage;
}

} // namespace gcirc::cli
