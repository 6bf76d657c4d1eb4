#include "fxsv/app.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fxsv/calibrate.hpp"
#include "fxsv/errors.hpp"
#include "fxsv/estimators.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/moments.hpp"
#include "fxsv/pipeline.hpp"
#include "json_io.hpp"

namespace fxsv {

namespace fs = std::filesystem;
using app::json;
using app::num;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_partial = 1;
constexpr int exit_invalid = 2;

struct GlobalOptions {
    bool vols_decimal = false;
    double grid_min = IntegrationGrid{}.w_min;
    double grid_max = IntegrationGrid{}.w_max;
    double grid_step = IntegrationGrid{}.dw;
    int jobs = 1;

    IntegrationGrid grid() const {
        IntegrationGrid g{grid_min, grid_max, grid_step};
        g.check();
        return g;
    }
};

struct InputOptions {
    std::string input;
    std::string date;
    std::string from;
    std::string to;
};

struct ModelOptions {
    std::string model = "heston";
    std::string start = "icm";
    std::string cost = "mse";
    bool feller = false;
    int max_iter = 0;
    bool stop_any = false;
};

// Runs fn(i) for i in [0, n) on a bounded pool; results are written by index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("--input,-i", in.input, "Quote CSV file or directory of surface JSON files")
        ->required();
    cmd->add_option("--date", in.date, "Single trade date (YYYY-MM-DD)");
    cmd->add_option("--from", in.from, "First trade date (inclusive)");
    cmd->add_option("--to", in.to, "Last trade date (inclusive)");
}

void add_model_options(CLI::App* cmd, ModelOptions& m, bool with_start = true) {
    cmd->add_option("--model", m.model, "heston|sz|bates2f|bates2f-feller|ouou");
    if (with_start) cmd->add_option("--start", m.start, "icm|durrleman|hist|twostage|evp|mevp");
    cmd->add_option("--cost", m.cost, "mse|mae|mape|mspe");
    cmd->add_flag("--feller", m.feller, "Penalize parameters violating the Feller condition");
    cmd->add_option("--max-iter", m.max_iter, "Nelder-Mead iteration cap (0 keeps the default)");
    cmd->add_flag("--stop-any", m.stop_any, "Stop on either tolerance instead of both");
}

PipelineConfig make_config(const ModelOptions& m, const GlobalOptions& g) {
    PipelineConfig c;
    const auto model = parse_model_kind(m.model);
    if (!model) raise(ErrorCode::InvalidArgument, "unknown model '" + m.model + "'");
    const auto start = parse_start_method(m.start);
    if (!start) raise(ErrorCode::InvalidArgument, "unknown start method '" + m.start + "'");
    const auto cost = parse_cost_kind(m.cost);
    if (!cost) raise(ErrorCode::InvalidArgument, "unknown cost '" + m.cost + "'");
    c.model = *model;
    c.start = *start;
    c.cost = *cost;
    c.feller = m.feller;
    if (m.max_iter > 0) c.max_iter = m.max_iter;
    c.stop_any = m.stop_any;
    c.grid = g.grid();
    return c;
}

std::vector<VolSurface> load_surfaces(const InputOptions& in, const GlobalOptions& g,
                                      std::vector<std::string>* warnings = nullptr) {
    std::vector<VolSurface> surfaces;
    if (fs::is_directory(in.input)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(in.input)) {
            const auto name = e.path().filename().string();
            if (e.path().extension() == ".json" && name.rfind("surface_", 0) == 0) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream is(f);
            json j;
            try {
                is >> j;
            } catch (const json::exception& e) {
                raise(ErrorCode::ParseError, f.string() + ": " + e.what());
            }
            surfaces.push_back(app::surface_from_json(j));
        }
        std::sort(surfaces.begin(), surfaces.end(),
                  [](const VolSurface& a, const VolSurface& b) { return a.date < b.date; });
    } else {
        IngestResult r = ingest_csv(in.input, IngestOptions{g.vols_decimal});
        if (warnings) *warnings = r.warnings;
        surfaces = build_surfaces(r.rows);
    }
    std::optional<Date> lo;
    std::optional<Date> hi;
    if (!in.date.empty()) lo = hi = parse_date(in.date);
    if (!in.from.empty()) lo = parse_date(in.from);
    if (!in.to.empty()) hi = parse_date(in.to);
    std::vector<VolSurface> out;
    for (auto& s : surfaces) {
        if (lo && s.date < *lo) continue;
        if (hi && s.date > *hi) continue;
        out.push_back(std::move(s));
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorCode::InvalidArgument, "cannot write " + path.string());
    os << text;
}

void emit(const json& j, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << app::dump(j);
    } else {
        write_file(out_path, app::dump(j));
    }
}

// ----------------------------------------------------------------------------
// Summary statistics
// ----------------------------------------------------------------------------

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fmt12(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string summary_csv(const std::vector<json>& results) {
    std::map<std::string, std::vector<double>> columns;
    std::vector<std::string> order;
    auto push = [&](const std::string& name, const json& v) {
        if (!v.is_number()) return;
        if (!columns.count(name)) order.push_back(name);
        columns[name].push_back(v.get<double>());
    };
    for (const auto& r : results) {
        if (r.contains("params")) {
            for (const auto& [k, v] : r.at("params").items()) push(k, v);
        }
        for (const char* k : {"cost", "rmse_vol", "rmse_vega", "iterations"}) {
            if (r.contains(k)) push(k, r.at(k));
        }
    }
    std::ostringstream os;
    os << "name,n,mean,sd,min,q1,median,q3,max\n";
    for (const auto& name : order) {
        const auto& v = columns[name];
        const double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (const double x : v) mean += x;
        mean /= n;
        double ss = 0.0;
        for (const double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : std::nan("");
        os << name << ',' << v.size() << ',' << fmt12(mean) << ',' << fmt12(sd) << ','
           << fmt12(quantile(v, 0.0)) << ',' << fmt12(quantile(v, 0.25)) << ','
           << fmt12(quantile(v, 0.5)) << ',' << fmt12(quantile(v, 0.75)) << ','
           << fmt12(quantile(v, 1.0)) << '\n';
    }
    return os.str();
}

std::string result_file_name(const DateResult& r, const PipelineConfig& c) {
    return format_date(r.date) + "_" + std::string(model_kind_name(c.model)) + "_" +
           std::string(start_method_name(c.start)) + "_" + std::string(cost_kind_name(c.cost)) +
           (c.feller ? "_feller" : "") + ".json";
}

json failure_json(const Date& d, const std::string& msg) {
    json f;
    f["date"] = format_date(d);
    f["error"] = msg;
    return f;
}

// ----------------------------------------------------------------------------
// Subcommands
// ----------------------------------------------------------------------------

int cmd_ingest(const InputOptions& in, const GlobalOptions& g, const std::string& out_dir,
               std::ostream& out) {
    std::vector<std::string> warnings;
    const auto surfaces = load_surfaces(in, g, &warnings);
    fs::create_directories(out_dir);
    json files = json::array();
    for (const auto& s : surfaces) {
        const std::string name = "surface_" + format_date(s.date) + ".json";
        write_file(fs::path(out_dir) / name, app::dump(app::surface_to_json(s)));
        files.push_back(name);
    }
    json report;
    report["input"] = in.input;
    report["surfaces"] = files;
    report["warnings"] = warnings;
    write_file(fs::path(out_dir) / "validation.json", app::dump(report));
    out << app::dump(report);
    return exit_ok;
}

int cmd_surface(const InputOptions& in, const GlobalOptions& g, const std::string& out_path,
                std::ostream& out) {
    json arr = json::array();
    for (const auto& s : load_surfaces(in, g)) arr.push_back(app::surface_to_json(s));
    emit(arr, out_path, out);
    return exit_ok;
}

int cmd_vix(const InputOptions& in, const GlobalOptions& g, const std::string& out_path,
            std::ostream& out, std::ostream& err) {
    const auto prepared = prepare_contexts(load_surfaces(in, g));
    std::ostringstream os;
    os << "date,tenor,tau,v2,v2_corrected,mu2,skew,kurt\n";
    for (const auto& ctx : prepared.contexts) {
        const auto ts = variance_term_structure(ctx.surface, ctx.hist_heston.rho, ctx.hist_heston.omega);
        const auto moments = surface_moments(ctx.surface);
        const std::string date = format_date(ctx.surface.date);
        for (std::size_t i = 0; i < ctx.surface.slices.size(); ++i) {
            const auto& m = moments[i];
            os << date << ',' << tenor_label(ctx.surface.slices[i].tenor) << ',' << fmt12(ts.tau[i]) << ','
               << fmt12(ts.v2[i]) << ',' << fmt12(ts.v2_corrected[i]) << ',' << fmt12(m.central.mu2) << ','
               << fmt12(m.shape.skew) << ',' << fmt12(m.shape.kurt) << '\n';
        }
    }
    for (const auto& f : prepared.failures) err << "error: " << format_date(f.date) << ": " << f.error << "\n";
    if (out_path.empty()) {
        out << os.str();
    } else {
        write_file(out_path, os.str());
    }
    return prepared.failures.empty() ? exit_ok : exit_partial;
}

struct EstimateOptions {
    std::string method = "icm";
    std::string tenor = "3M";
    double window = 1.0;
    std::string average = "sma";
};

int cmd_estimate(const InputOptions& in, const GlobalOptions& g, const ModelOptions& m,
                 const EstimateOptions& e, const std::string& out_path, std::ostream& out) {
    const auto prepared = prepare_contexts(load_surfaces(in, g));
    json arr = json::array();
    std::vector<double> vix_history;
    bool failed = !prepared.failures.empty();
    for (const auto& ctx : prepared.contexts) {
        vix_history.push_back(ctx.vix_1m);
        json j;
        j["date"] = format_date(ctx.surface.date);
        j["method"] = e.method;
        try {
            if (e.method == "gs") {
                const auto avg = e.average == "ewma" ? MovingAverage::EWMA : MovingAverage::SMA;
                const GsEstimate gs = guillaume_schoutens(vix_history, e.window, avg);
                j["v0"] = num(gs.v0);
                j["theta"] = num(gs.theta);
            } else if (e.method == "gr") {
                ModelOptions mo = m;
                mo.model = "heston";
                mo.start = "hist";
                const StartPoint sp = build_start(ctx, make_config(mo, g));
                const auto tenor = parse_tenor(e.tenor);
                const TenorSlice* slice = tenor ? ctx.surface.find(*tenor) : nullptr;
                if (!slice) raise(ErrorCode::InvalidArgument, "tenor '" + e.tenor + "' not on the surface");
                const OptionSpec s1 = cell_spec(ctx.surface, *slice, Pillar::P25);
                const OptionSpec s2 = cell_spec(ctx.surface, *slice, Pillar::P10);
                const double p1 = gk_price(s1, slice->smile.vol(Pillar::P25));
                const double p2 = gk_price(s2, slice->smile.vol(Pillar::P10));
                const auto& f = sp.variance_fit;
                const GrEstimate gr = gauthier_rivaille(p1, p2, s1, s2, f.v0, f.theta, f.kappa);
                j["omega"] = num(gr.omega);
                j["rho"] = num(gr.rho);
            } else {
                ModelOptions mo = m;
                mo.start = e.method;
                const StartPoint sp = build_start(ctx, make_config(mo, g));
                j["model"] = m.model;
                j["omega"] = num(sp.omega);
                j["rho"] = num(sp.rho);
                j["params"] = app::params_to_json(sp.params);
                j["flags"] = sp.flags;
            }
        } catch (const Error& err) {
            j["error"] = err.what();
            failed = true;
        }
        arr.push_back(j);
    }
    emit(arr, out_path, out);
    return failed ? exit_partial : exit_ok;
}

struct RunOutput {
    std::vector<std::optional<DateResult>> results;
    std::vector<std::string> errors;
};

RunOutput run_dates(const std::vector<DateContext>& contexts, const PipelineConfig& config, int jobs) {
    RunOutput out;
    out.results.resize(contexts.size());
    out.errors.resize(contexts.size());
    parallel_for(contexts.size(), jobs, [&](std::size_t i) {
        try {
            out.results[i] = run_date(contexts[i], config);
        } catch (const Error& e) {
            out.errors[i] = e.what();
        } catch (const std::exception& e) {
            out.errors[i] = e.what();
        }
    });
    return out;
}

json manifest_json(const InputOptions& in, const PipelineConfig& c, const GlobalOptions& g) {
    json j;
    j["input"] = in.input;
    j["date"] = in.date;
    j["from"] = in.from;
    j["to"] = in.to;
    j["model"] = std::string(model_kind_name(c.model));
    j["start"] = std::string(start_method_name(c.start));
    j["cost"] = std::string(cost_kind_name(c.cost));
    j["feller"] = c.feller;
    j["max_iter"] = c.max_iter ? *c.max_iter : default_iteration_cap(c.model);
    j["stop_any"] = c.stop_any;
    j["grid"] = {{"min", num(c.grid.w_min)}, {"max", num(c.grid.w_max)}, {"step", num(c.grid.dw)}};
    j["vols_decimal"] = g.vols_decimal;
    j["deterministic"] = true;
    return j;
}

int cmd_calibrate(const InputOptions& in, const GlobalOptions& g, const ModelOptions& m,
                  const std::string& out_dir, std::ostream& out) {
    const PipelineConfig config = make_config(m, g);
    const auto prepared = prepare_contexts(load_surfaces(in, g));
    const RunOutput run = run_dates(prepared.contexts, config, g.jobs);
    json arr = json::array();
    bool failed = !prepared.failures.empty();
    for (std::size_t i = 0; i < run.results.size(); ++i) {
        if (run.results[i]) {
            json j = app::date_result_to_json(*run.results[i], config);
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                write_file(fs::path(out_dir) / result_file_name(*run.results[i], config), app::dump(j));
            }
            arr.push_back(j);
        } else {
            arr.push_back(failure_json(prepared.contexts[i].surface.date, run.errors[i]));
            failed = true;
        }
    }
    for (const auto& f : prepared.failures) arr.push_back(failure_json(f.date, f.error));
    if (out_dir.empty()) out << app::dump(arr);
    return failed ? exit_partial : exit_ok;
}

int cmd_pipeline(const InputOptions& in, const GlobalOptions& g, const ModelOptions& m,
                 const std::string& out_dir, std::ostream& out) {
    const PipelineConfig config = make_config(m, g);
    const auto prepared = prepare_contexts(load_surfaces(in, g));
    const RunOutput run = run_dates(prepared.contexts, config, g.jobs);
    fs::create_directories(out_dir);

    std::vector<json> results;
    json files = json::array();
    json failures = json::array();
    for (std::size_t i = 0; i < run.results.size(); ++i) {
        if (run.results[i]) {
            const json j = app::date_result_to_json(*run.results[i], config);
            const std::string name = result_file_name(*run.results[i], config);
            write_file(fs::path(out_dir) / name, app::dump(j));
            files.push_back(name);
            results.push_back(j);
        } else {
            failures.push_back(failure_json(prepared.contexts[i].surface.date, run.errors[i]));
        }
    }
    for (const auto& f : prepared.failures) failures.push_back(failure_json(f.date, f.error));
    write_file(fs::path(out_dir) / "summary.csv", summary_csv(results));
    json manifest = manifest_json(in, config, g);
    manifest["results"] = files;
    manifest["failures"] = failures;
    write_file(fs::path(out_dir) / "manifest.json", app::dump(manifest));
    out << app::dump(manifest);
    return failures.empty() ? exit_ok : exit_partial;
}

int cmd_risk(const InputOptions& in, const GlobalOptions& g, const ModelOptions& m,
             const std::string& out_path, std::ostream& out) {
    ModelOptions mo = m;
    mo.model = "heston";
    const PipelineConfig config = make_config(mo, g);
    const auto prepared = prepare_contexts(load_surfaces(in, g));
    std::vector<json> rows(prepared.contexts.size());
    std::atomic<bool> failed{!prepared.failures.empty()};
    parallel_for(prepared.contexts.size(), g.jobs, [&](std::size_t i) {
        const auto& ctx = prepared.contexts[i];
        json j;
        j["date"] = format_date(ctx.surface.date);
        j["start"] = mo.start;
        try {
            const StartPoint sp = build_start(ctx, config);
            CalibrationOptions opts = pipeline_options(config);
            const CalibrationRisk r = calibration_risk(ctx.surface, sp.params, opts);
            json risk = json::object();
            for (std::size_t k = 0; k < r.names.size(); ++k) risk[r.names[k]] = num(r.risk[k]);
            j["risk"] = risk;
            json runs = json::object();
            const char* labels[] = {"mse", "mae", "mape"};
            for (std::size_t k = 0; k < 3; ++k) runs[labels[k]] = app::result_to_json(r.runs[k]);
            j["runs"] = runs;
        } catch (const Error& e) {
            j["error"] = e.what();
            failed = true;
        }
        rows[i] = j;
    });
    json arr = json::array();
    for (auto& r : rows) arr.push_back(std::move(r));
    emit(arr, out_path, out);
    return failed ? exit_partial : exit_ok;
}

int cmd_report(const std::string& dir, const std::string& out_path, std::ostream& out) {
    if (!fs::is_directory(dir)) raise(ErrorCode::InvalidArgument, "not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".json" && name != "manifest.json" && name != "validation.json" &&
            name.rfind("surface_", 0) != 0) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<json> results;
    for (const auto& f : files) {
        std::ifstream is(f);
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            raise(ErrorCode::ParseError, f.string() + ": " + e.what());
        }
        if (j.is_object() && j.contains("params")) results.push_back(j);
    }
    const std::string csv = summary_csv(results);
    if (out_path.empty()) {
        out << csv;
    } else {
        write_file(out_path, csv);
    }
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"FX stochastic-volatility calibration toolkit", "fxsv"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_flag("--vols-decimal", g.vols_decimal, "Quoted vols are decimals rather than percent");
    app.add_option("--grid-min", g.grid_min, "Log-frequency grid lower bound");
    app.add_option("--grid-max", g.grid_max, "Log-frequency grid upper bound");
    app.add_option("--grid-step", g.grid_step, "Log-frequency grid step");
    app.add_option("--jobs,-j", g.jobs, "Worker threads for per-date work")->check(CLI::PositiveNumber);

    InputOptions in;
    ModelOptions m;
    EstimateOptions est;
    std::string out_path;
    std::string report_dir;

    auto* ingest = app.add_subcommand("ingest", "Validate a quote CSV and write per-date surface files");
    add_input_options(ingest, in);
    ingest->add_option("--out,-o", out_path, "Output directory")->required();

    auto* surface = app.add_subcommand("surface", "Print strikes, rates and vols per date");
    add_input_options(surface, in);
    surface->add_option("--out,-o", out_path, "Output file (stdout when omitted)");

    auto* vix = app.add_subcommand("vix", "Implied variance term structure and implied moments");
    add_input_options(vix, in);
    vix->add_option("--out,-o", out_path, "Output file (stdout when omitted)");

    auto* estimate = app.add_subcommand("estimate", "Closed-form parameter estimators");
    add_input_options(estimate, in);
    add_model_options(estimate, m, false);
    estimate->add_option("--method", est.method, "icm|durrleman|hist|gr|gs");
    estimate->add_option("--tenor", est.tenor, "Tenor of the two puts used by gr");
    estimate->add_option("--window", est.window, "Moving-average window in years for gs");
    estimate->add_option("--average", est.average, "sma|ewma for gs");
    estimate->add_option("--out,-o", out_path, "Output file (stdout when omitted)");

    auto* calibrate = app.add_subcommand("calibrate", "Full-surface calibration per date");
    add_input_options(calibrate, in);
    add_model_options(calibrate, m);
    calibrate->add_option("--out,-o", out_path, "Directory for per-date result files");

    auto* risk = app.add_subcommand("risk", "Calibration risk across MSE, MAE and MAPE");
    add_input_options(risk, in);
    add_model_options(risk, m);
    risk->add_option("--out,-o", out_path, "Output file (stdout when omitted)");

    auto* report = app.add_subcommand("report", "Summary statistics over per-date result files");
    report->add_option("--dir", report_dir, "Directory of result JSON files")->required();
    report->add_option("--out,-o", out_path, "Output CSV (stdout when omitted)");

    auto* pipeline = app.add_subcommand("pipeline", "End-to-end run over a date range");
    add_input_options(pipeline, in);
    add_model_options(pipeline, m);
    pipeline->add_option("--out,-o", out_path, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_invalid;
    }

    try {
        if (*ingest) return cmd_ingest(in, g, out_path, out);
        if (*surface) return cmd_surface(in, g, out_path, out);
        if (*vix) return cmd_vix(in, g, out_path, out, err);
        if (*estimate) return cmd_estimate(in, g, m, est, out_path, out);
        if (*calibrate) return cmd_calibrate(in, g, m, out_path, out);
        if (*risk) return cmd_risk(in, g, m, out_path, out);
        if (*report) return cmd_report(report_dir, out_path, out);
        if (*pipeline) return cmd_pipeline(in, g, m, out_path, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_invalid;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_invalid;
    }
    return exit_invalid;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace fxsv
