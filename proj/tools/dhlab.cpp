#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhlab/dhlab.hpp"

namespace {

using namespace dhlab;
using nlohmann::json;
using model::Vector;

struct Options {
    std::string model = "hopf";
    std::uint64_t samples = 1000000;
    bool samples_set = false;
    int bins = 64;
    std::uint64_t seed = 1;
    std::vector<std::string> grid;
    std::string out = ".";
    std::string format = "csv";
    std::optional<double> tolerance;
    std::optional<double> area;
    unsigned threads = 0;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Loaded {
    model::HamiltonianModel model;
    std::optional<catalog::CatalogEntry> entry;
};

Loaded load_model(const Options& o)
{
    if (std::filesystem::exists(o.model) && !std::filesystem::is_directory(o.model)) {
        return {catalog::model_from_file(o.model), std::nullopt};
    }
    try {
        auto e = catalog::catalog_entry(o.model, o.area);
        return {e.model, e};
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
}

/// Grid from --grid lo:hi:n per axis, else the catalog default, else the window shrunk by 5% per side.
Grid make_grid(const Options& o, const Loaded& l)
{
    const int q = model::rank(l.model);
    if (!o.grid.empty()) {
        if (static_cast<int>(o.grid.size()) != q) throw UsageError("--grid must be given once per axis (" + std::to_string(q) + ")");
        Vector lo(q), hi(q);
        std::vector<int> bins;
        for (int a = 0; a < q; ++a) {
            const std::string& spec = o.grid[static_cast<std::size_t>(a)];
            const auto p1 = spec.find(':'), p2 = spec.rfind(':');
            if (p1 == std::string::npos || p1 == p2) throw UsageError("--grid expects lo:hi:n, got '" + spec + "'");
            try {
                lo(a) = std::stod(spec.substr(0, p1));
                hi(a) = std::stod(spec.substr(p1 + 1, p2 - p1 - 1));
                bins.push_back(std::stoi(spec.substr(p2 + 1)));
            } catch (const std::exception&) {
                throw UsageError("--grid expects lo:hi:n, got '" + spec + "'");
            }
        }
        try {
            return Grid(Box(lo, hi), bins);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
    }
    if (l.entry) return Grid::uniform(l.entry->default_grid, o.bins);
    const Box& w = model::window(l.model);
    const Vector pad = 0.05 * (w.hi - w.lo);
    return Grid::uniform(Box(w.lo + pad, w.hi - pad), o.bins);
}

unsigned threads(const Options& o) { return o.threads ? o.threads : default_threads(); }

std::string artifact(const Options& o, const Loaded& l, const std::string& command, const std::string& ext)
{
    std::filesystem::create_directories(o.out);
    return (std::filesystem::path(o.out) / (l.model.id + "_" + command + "_" + std::to_string(o.seed) + "." + ext)).string();
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

/// Gnuplot script plotting columns of a CSV artifact; `series` are (column, title) pairs.
void write_plot_script(const std::string& csv, const std::vector<std::pair<int, std::string>>& series, const std::string& errors = "")
{
    std::string s = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n";
    s += "plot ";
    const std::string name = std::filesystem::path(csv).filename().string();
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i) s += ", \\\n     ";
        s += "'" + name + "' using 1:" + std::to_string(series[i].first) + " with lines title '" + series[i].second + "'";
    }
    if (!errors.empty()) s += ", \\\n     '" + name + "' using 1:" + errors + " with yerrorbars title 'sigma'";
    s += "\n";
    write_file(csv.substr(0, csv.size() - 4) + ".gp", s);
}

void emit(const Options& o, const Loaded& l, const std::string& command, json summary, const std::string& csv,
          const json& rows_json)
{
    if (o.format == "csv" && !csv.empty()) {
        write_file(artifact(o, l, command, "csv"), csv);
    } else if (!rows_json.is_null()) {
        summary["rows"] = rows_json;
    }
    write_file(artifact(o, l, command, "json"), summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
}

json csv_rows_to_json(const std::string& csv)
{
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> cols;
    for (std::istringstream h(header); std::getline(h, line, ',');) cols.push_back(line);
    json rows = json::array();
    while (std::getline(in, line)) {
        json row;
        std::istringstream cells(line);
        std::string cell;
        for (std::size_t i = 0; i < cols.size() && std::getline(cells, cell, ','); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (!cell.empty() && end && *end == '\0') {
                row[cols[i]] = v;
            } else {
                row[cols[i]] = cell;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

json validation_json(const model::ValidationReport& v)
{
    return {{"passed", v.passed},
            {"max_skew_residual", v.max_skew_residual},
            {"min_abs_pfaffian", v.min_abs_pfaffian},
            {"max_moment_residual", v.max_moment_residual},
            {"effective", v.effective},
            {"invariant_factors", v.invariant_factors},
            {"locally_free", v.locally_free},
            {"symmetry_ok", v.symmetry_ok},
            {"messages", v.messages}};
}

int cmd_validate(const Options& o)
{
    const Loaded l = load_model(o);
    const auto v = model::validate_model(l.model, o.tolerance.value_or(1e-6));
    json s = validation_json(v);
    s["model"] = l.model.id;
    emit(o, l, "validate", s, "", nullptr);
    for (const auto& m : v.messages) std::cerr << l.model.id << ": " << m << "\n";
    return v.passed ? 0 : 1;
}

/// Refuses to run numerical commands on models that fail validation.
void require_valid(const Loaded& l)
{
    const auto v = model::validate_model(l.model);
    if (v.passed) return;
    std::string msg = "model '" + l.model.id + "' failed validation";
    for (const auto& m : v.messages) msg += "; " + m;
    throw DomainError(msg);
}

int cmd_compute_dh(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    const Grid grid = make_grid(o, l);
    const auto d = pushforward::dh_monte_carlo(l.model, grid, o.samples, o.seed, threads(o));
    const auto mc = pushforward::total_mass_check(d, l.model);
    const std::string csv = pushforward::to_csv(d);
    json s{{"model", l.model.id}, {"samples", o.samples}, {"seed", o.seed}, {"bins", grid.size()},
           {"total_mass", mc.total}, {"reference_volume", mc.reference}, {"mass_z", mc.z}};
    emit(o, l, "compute-dh", s, csv, csv_rows_to_json(csv));
    if (o.format == "csv") write_plot_script(artifact(o, l, "compute-dh", "csv"), {{grid.dim() + 2, "density"}}, std::to_string(grid.dim() + 2) + ":" + std::to_string(grid.dim() + 3));
    return 0;
}

int cmd_exact_dh(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    const auto exact = pushforward::dh_exact_linear(l.model);
    const Grid grid = make_grid(o, l);
    std::string csv = "t_1,density,bin_average\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Box c = grid.cell(k);
        const double t = grid.center(k)(0);
        csv += pushforward::format_double(t) + "," + pushforward::format_double(exact(t)) + "," +
               pushforward::format_double(exact.integrate(c.lo(0), c.hi(0)) / grid.cell_volume()) + "\n";
    }
    json s{{"model", l.model.id}, {"density", exact.to_json()}};
    emit(o, l, "exact-dh", s, csv, csv_rows_to_json(csv));
    if (o.format == "csv") write_plot_script(artifact(o, l, "exact-dh", "csv"), {{2, "exact density"}});
    return 0;
}

int cmd_volumes(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    const Grid grid = make_grid(o, l);
    reduction::SlabOptions slab;
    slab.samples = o.samples;
    slab.seed = o.seed;
    const auto rows = reduction::vol_functions_on_grid(l.model, grid, slab);
    const std::string csv = reduction::volume_table_csv(rows);
    json s{{"model", l.model.id}, {"iota", reduction::generic_iota(l.model).generic_value}, {"rows", rows.size()}};
    emit(o, l, "volumes", s, csv, csv_rows_to_json(csv));
    if (o.format == "csv") write_plot_script(artifact(o, l, "volumes", "csv"), {{grid.dim() + 1, "vol"}, {grid.dim() + 2, "vol_red"}});
    return 0;
}

int cmd_identity(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    const int points = o.samples_set ? static_cast<int>(o.samples) : 1000;
    const double tol = o.tolerance.value_or(model::is_weight_based(l.model) ? 1e-9 : 1e-7);
    const auto rep = identity::identity_batch(l.model, reduction::model_lattice(l.model), points, o.seed);
    json s = rep.to_json();
    s["tolerance"] = tol;
    s["pass"] = rep.residual_max < tol;
    emit(o, l, "identity", s, "", nullptr);
    return rep.residual_max < tol ? 0 : 1;
}

int cmd_fit(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    const Grid grid = make_grid(o, l);
    const auto d = pushforward::dh_monte_carlo(l.model, grid, o.samples, o.seed, threads(o));
    WallSet walls;
    if (const auto* t = model::torus_part(l.model)) {
        walls = polyfit::detect_walls(*t);
    } else if (grid.dim() == 1) {
        walls = polyfit::detect_breakpoints_empirical(d);
    }
    const int cap = model::real_dimension(l.model) / 2;
    const auto fits = polyfit::fit_chamber_polynomials(d, walls, cap);
    auto verdict = polyfit::polynomiality_verdict(fits, walls);
    verdict.report["model"] = l.model.id;
    verdict.report["degree_cap"] = cap;
    emit(o, l, "fit", verdict.report, "", nullptr);
    return verdict.polynomial ? 0 : 1;
}

int report(const Options& o, const Loaded& l, const std::string& command, const verify::VerificationReport& r)
{
    const std::string csv = verify::to_csv(r);
    emit(o, l, command, verify::summary_json(r), csv, csv_rows_to_json(csv));
    if (o.format == "csv") {
        const int q = r.grid.dim();
        write_plot_script(artifact(o, l, command, "csv"), {{q + 1, "dh_density"}, {q + 6, "product"}});
    }
    return r.verdict ? 0 : 1;
}

int cmd_verify(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    return report(o, l, "verify", verify::verify_main_theorem(l.model, make_grid(o, l), o.samples, o.seed, threads(o)));
}

int cmd_free_case(const Options& o)
{
    const Loaded l = load_model(o);
    require_valid(l);
    return report(o, l, "free-case", verify::verify_free_case(l.model, make_grid(o, l), o.samples, o.seed, threads(o)));
}

int cmd_catalog(const Options& o)
{
    json list = json::array();
    for (const auto& e : catalog::entries(o.area)) {
        json item{{"name", e.name}, {"description", e.description}, {"rank", model::rank(e.model)},
                  {"real_dimension", model::real_dimension(e.model)}, {"expect_valid", e.expect_valid}};
        if (e.expected) item["expected"] = {{"form", e.expected->form}, {"coefficients", e.expected->coefficients}, {"source", e.expected->source}};
        list.push_back(item);
        std::cout << e.name << "\t" << e.description << "\n";
    }
    if (o.format == "json") std::cout << list.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Duistermaat-Heckman measures of Hamiltonian actions: sampling, exact densities and verification"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "check the model's structural conditions"},
        {"compute-dh", "Monte Carlo histogram of the DH measure"},
        {"exact-dh", "exact DH density of a rank-one weight model"},
        {"volumes", "vol and vol_red tables on the grid"},
        {"identity", "pointwise density identity and frame lemmas"},
        {"fit", "chamber-wise polynomial fits of the DH density"},
        {"verify", "compare the DH density with vol * vol_red * affine density"},
        {"free-case", "free-case form of the comparison"},
        {"catalog", "list the built-in models"}};
    std::map<std::string, int (*)(const Options&)> handlers{
        {"validate", cmd_validate}, {"compute-dh", cmd_compute_dh}, {"exact-dh", cmd_exact_dh},
        {"volumes", cmd_volumes},   {"identity", cmd_identity},     {"fit", cmd_fit},
        {"verify", cmd_verify},     {"free-case", cmd_free_case},   {"catalog", cmd_catalog}};

    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--model", o.model, "catalog name or path to a JSON model config");
        sub->add_option_function<std::uint64_t>("--samples", [&](const std::uint64_t& n) {
            o.samples = n;
            o.samples_set = true;
        }, "Monte Carlo proposals (identity: number of points)")->check(CLI::PositiveNumber);
        sub->add_option("--bins", o.bins, "bins per axis")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--grid", o.grid, "lo:hi:n, once per axis");
        sub->add_option("--out", o.out, "artifact directory");
        sub->add_option("--format", o.format, "artifact format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--tolerance", o.tolerance, "residual tolerance (validate, identity)");
        sub->add_option("--threads", o.threads, "worker threads (default DHLAB_THREADS or hardware)");
        sub->add_option("--area", o.area, "leaf area for surface_product")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return handlers.at(name)(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.get_subcommands().front()->help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
