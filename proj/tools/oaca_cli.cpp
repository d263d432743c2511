// Command-line front end: ingest, stratify, match, rake, oaca, simulate,
// report and run-all.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oaca/oaca.hpp"

namespace fs = std::filesystem;
using namespace oaca;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConvergence = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool quiet = false;
};

struct CorpusInput {
    std::string path;
    std::string window;
    bool skip_bad_lines = false;
    std::string errors_out;
};

struct RakeFlags {
    std::optional<double> tolerance;
    std::optional<std::size_t> max_iterations;
    std::optional<double> max_weight_ratio;
    bool full_cross = false;
    bool per_year = false;
};

nlohmann::json load_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidConfig(path + ": " + e.what());
    }
}

PipelineConfig base_config(const Globals& g) {
    if (g.config_path.empty()) return {};
    return pipeline_config_from_json(load_json(g.config_path));
}

YearWindow parse_window(const std::string& text) {
    auto p = parse_periods(text);
    if (p.size() != 1) throw UsageError("--window expects YYYY-YYYY");
    return {p[0].first, p[0].last};
}

void apply(const RakeFlags& f, PipelineConfig& c) {
    if (f.tolerance) c.rake.tolerance = *f.tolerance;
    if (f.max_iterations) c.rake.max_iterations = *f.max_iterations;
    if (f.max_weight_ratio) c.rake.max_weight_ratio = *f.max_weight_ratio;
    if (f.full_cross) c.rake.full_cross = true;
    if (f.per_year) c.rake.per_year = true;
}

void add_input_flags(CLI::App* cmd, CorpusInput& in, bool required = true) {
    auto* opt = cmd->add_option("--in", in.path, "Publication records, one JSON object per line");
    if (required) opt->required();
    cmd->add_option("--window", in.window, "Study window YYYY-YYYY (default 2010-2020)");
    cmd->add_flag("--skip-bad-lines", in.skip_bad_lines, "Drop invalid lines instead of rejecting the file");
    cmd->add_option("--errors-out", in.errors_out, "CSV report of dropped lines (with --skip-bad-lines)");
}

void add_rake_flags(CLI::App* cmd, RakeFlags& f) {
    cmd->add_option("--tolerance", f.tolerance, "Sup-norm margin discrepancy threshold (default 1e-8)");
    cmd->add_option("--max-iterations", f.max_iterations, "Sweep cap (default 1000)");
    cmd->add_option("--max-weight-ratio", f.max_weight_ratio, "Cap on weight / mean weight");
    cmd->add_flag("--full-cross", f.full_cross, "Calibrate on the full stratum cross-classification");
    cmd->add_flag("--per-year", f.per_year, "Rake each publication year separately");
}

Corpus load_corpus(const CorpusInput& in, PipelineConfig& config, const Globals& g) {
    if (!in.window.empty()) config.window = parse_window(in.window);
    std::ifstream file(in.path, std::ios::binary);
    if (!file) throw IoError("cannot open " + in.path);
    auto result = parse_publications(file, ParseOptions{config.window, in.skip_bad_lines});
    if (!result.errors.empty()) {
        if (!g.quiet) std::cerr << "skipped " << result.errors.size() << " bad lines\n";
        if (!in.errors_out.empty()) write_file_atomic(in.errors_out, format_line_errors(result.errors));
    }
    return std::move(result.corpus);
}

std::vector<Route> parse_routes(const std::string& s) {
    if (s == "both") return {Route::FullGoldOA, Route::HybridGoldOA};
    auto r = parse_route(s);
    if (!r) throw UsageError("--route expects full, hybrid or both");
    return {*r};
}

void apply_slices(const std::string& spec, ReportSlicing& slicing) {
    slicing.overall = slicing.per_year = slicing.per_discipline = false;
    bool periods = false;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "all") {
            slicing.overall = slicing.per_year = slicing.per_discipline = periods = true;
        } else if (item == "overall") slicing.overall = true;
        else if (item == "per_year" || item == "per-year") slicing.per_year = true;
        else if (item == "per_discipline" || item == "per-discipline") slicing.per_discipline = true;
        else if (item == "periods" || item == "per_discipline_period") periods = true;
        else throw UsageError("unknown slice '" + item + "'");
    }
    if (!periods) slicing.periods.clear();
}

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-")
        std::cout << content;
    else
        write_file_atomic(out, content);
}

SimConfig sim_config(const Globals& g, const std::string& preset_name, std::optional<std::size_t> n) {
    SimConfig c = preset_name.empty() ? SimConfig{} : preset(preset_name);
    if (!g.config_path.empty()) {
        auto j = load_json(g.config_path);
        if (!preset_name.empty() && j.is_object() && !j.contains("preset")) j["preset"] = preset_name;
        c = sim_config_from_json(j);
    }
    if (g.seed) c.seed = *g.seed;
    if (n) c.n_records = *n;
    validate(c);
    return c;
}

std::string rake_report_json(const WeightVector& w, Route route) {
    auto j = convergence_report(w);
    nlohmann::ordered_json out;
    out["route"] = to_string(route);
    for (auto& [k, v] : j.items()) out[k] = v;
    return out.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open access citation advantage with matched, raked control groups"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path,
                   "JSON config: pipeline settings, or the simulation config for 'simulate'");
    app.add_option("--seed", g.seed, "Simulation seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");

    CorpusInput input;
    RakeFlags rake_flags;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and report its size and digest");
    add_input_flags(ingest, input);
    std::string ingest_out;
    ingest->add_option("--out", ingest_out, "Write the normalized corpus as JSON Lines");

    // stratify
    auto* stratify = app.add_subcommand("stratify", "Per-stratum record counts by OA status (CSV)");
    add_input_flags(stratify, input);
    std::string stratify_out;
    stratify->add_option("--out", stratify_out, "Output CSV (default stdout)");

    // match
    auto* match = app.add_subcommand("match", "Build OA samples and matched control pools");
    add_input_flags(match, input);
    std::string match_route = "both";
    match->add_option("--route", match_route, "full, hybrid or both");

    // rake
    auto* rake = app.add_subcommand("rake", "Raking weights for a route's control pool");
    add_input_flags(rake, input);
    std::string rake_route = "full";
    rake->add_option("--route", rake_route, "full or hybrid")->required();
    add_rake_flags(rake, rake_flags);
    std::string rake_out, rake_report;
    rake->add_option("--out", rake_out, "Weights CSV (id, weight); default stdout");
    rake->add_option("--report", rake_report, "Convergence report JSON; default stderr");

    // oaca
    auto* oac = app.add_subcommand("oaca", "Naive and adjusted OACA per slice");
    add_input_flags(oac, input);
    std::string oaca_route = "both", oaca_slice = "all", oaca_periods, oaca_baseline, oaca_out, oaca_summary,
                reference_table;
    bool allow_nonconverged = false;
    oac->add_option("--route", oaca_route, "full, hybrid or both");
    oac->add_option("--slice", oaca_slice, "Comma list of overall, per_year, per_discipline, periods, or all");
    oac->add_option("--periods", oaca_periods, "Discipline periods, e.g. 2010-2012,2018-2020");
    oac->add_option("--baseline", oaca_baseline, "naive, raked or both");
    oac->add_option("--out", oaca_out, "Results CSV; default stdout");
    oac->add_option("--summary", oaca_summary, "JSON summary");
    oac->add_option("--reference-table", reference_table, "External reference values CSV");
    oac->add_flag("--allow-nonconverged", allow_nonconverged, "Accept best-effort raking weights");
    add_rake_flags(oac, rake_flags);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus");
    std::string sim_preset, sim_out;
    std::optional<std::size_t> sim_n;
    bool dump_config = false;
    simulate->add_option("--preset", sim_preset, "null, confounded-null, planted-30 or paper-shape");
    simulate->add_option("--n", sim_n, "Number of records");
    simulate->add_option("--out", sim_out, "Output JSON Lines; default stdout");
    simulate->add_flag("--dump-config", dump_config, "Print the effective configuration instead of generating");

    // report
    auto* report = app.add_subcommand("report", "Render a chart or table from a results CSV");
    std::string report_in, report_figure, report_out;
    report->add_option("--in", report_in, "Results CSV from 'oaca'")->required();
    report->add_option("--figure", report_figure, "trend or disciplines")->required();
    report->add_option("--out", report_out, "Output path")->required();

    // run-all
    auto* run_all = app.add_subcommand("run-all", "Simulate (or ingest) and run every stage");
    add_input_flags(run_all, input, false);
    std::string run_preset = "paper-shape", out_dir;
    std::optional<std::size_t> run_n;
    run_all->add_option("--preset", run_preset, "Simulation preset when --in is not given");
    run_all->add_option("--n", run_n, "Number of simulated records (default 20000)");
    run_all->add_option("--out-dir", out_dir, "Directory for all outputs")->required();
    run_all->add_flag("--allow-nonconverged", allow_nonconverged, "Accept best-effort raking weights");
    add_rake_flags(run_all, rake_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    auto info = [&](const std::string& msg) {
        if (!g.quiet) std::cerr << msg << "\n";
    };

    try {
        set_threads(g.threads);

        if (*ingest) {
            auto config = base_config(g);
            auto corpus = load_corpus(input, config, g);
            std::cout << "records=" << corpus.size() << " digest=" << corpus.source_digest() << "\n";
            if (!ingest_out.empty()) write_file_atomic(ingest_out, serialize_publications(corpus));
        } else if (*stratify) {
            auto config = base_config(g);
            auto corpus = load_corpus(input, config, g);
            Stratifier s(config.window, config.fundings_zero_class);
            emit(stratify_out, format_strata_csv(tally_strata(corpus, s)));
        } else if (*match) {
            auto config = base_config(g);
            auto corpus = load_corpus(input, config, g);
            Stratifier s(config.window, config.fundings_zero_class);
            const auto keys = corpus_keys(corpus, s);
            std::vector<CohortPair> cohorts;
            for (auto route : parse_routes(match_route)) {
                cohorts.push_back(build_cohort(corpus, keys, route));
                std::cout << format_cohort_summary(cohorts.back()) << "\n";
            }
            std::cout << "double_candidates=" << double_candidates(cohorts) << "\n";
        } else if (*rake) {
            auto config = base_config(g);
            apply(rake_flags, config);
            auto corpus = load_corpus(input, config, g);
            auto routes = parse_routes(rake_route);
            if (routes.size() != 1) throw UsageError("rake needs a single --route");
            Stratifier s(config.window, config.fundings_zero_class);
            const auto keys = corpus_keys(corpus, s);
            const auto cohort = build_cohort(corpus, keys, routes[0]);
            const auto w = rake_cohort(cohort, keys, s, config.rake);
            emit(rake_out, format_weights_csv(corpus, w));
            const auto rep = rake_report_json(w, routes[0]);
            if (rake_report.empty())
                std::cerr << rep;
            else
                write_file_atomic(rake_report, rep);
            if (!w.converged) {
                std::cerr << "raking did not converge\n";
                return kExitNonConvergence;
            }
        } else if (*oac) {
            auto config = base_config(g);
            apply(rake_flags, config);
            if (allow_nonconverged) config.allow_nonconverged = true;
            apply_slices(oaca_slice, config.slicing);
            if (!oaca_periods.empty()) config.slicing.periods = parse_periods(oaca_periods);
            if (!oaca_baseline.empty()) {
                auto b = parse_baseline(oaca_baseline);
                if (!b) throw UsageError("--baseline expects naive, raked or both");
                config.slicing.baseline = *b;
            }
            auto corpus = load_corpus(input, config, g);
            std::optional<ReferenceTable> refs;
            if (!reference_table.empty()) refs = parse_reference_csv(read_file(reference_table));
            const auto routes = parse_routes(oaca_route);
            auto result = run_pipeline(corpus, config, routes, refs ? &*refs : nullptr);
            for (const auto& w : result.report.warnings) info("warning: " + w);
            emit(oaca_out, format_results_csv(result.report.rows));
            if (!oaca_summary.empty())
                write_file_atomic(oaca_summary, summary_json(corpus, result).dump(2) + "\n");
        } else if (*simulate) {
            auto c = sim_config(g, sim_preset, sim_n);
            if (dump_config) {
                std::cout << to_json(c).dump(2) << "\n";
                return kExitOk;
            }
            auto corpus = generate(c);
            emit(sim_out, serialize_publications(corpus));
            info("generated " + std::to_string(corpus.size()) + " records (seed " + std::to_string(c.seed) + ")");
        } else if (*report) {
            const auto rows = parse_results_csv(read_file(report_in));
            if (report_figure == "trend") {
                render_trend_chart(trend_series(rows), report_out);
            } else if (report_figure == "disciplines") {
                for (const auto& d : render_discipline_table(rows, report_out)) info("missing discipline: " + d);
            } else {
                throw UsageError("--figure expects trend or disciplines");
            }
        } else if (*run_all) {
            auto config = base_config(g);
            apply(rake_flags, config);
            if (allow_nonconverged) config.allow_nonconverged = true;
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            Corpus corpus;
            if (!input.path.empty()) {
                corpus = load_corpus(input, config, g);
            } else {
                Globals sim_globals = g;
                sim_globals.config_path.clear();
                if (!sim_globals.seed) sim_globals.seed = 42;
                auto c = sim_config(sim_globals, run_preset, run_n ? run_n : std::optional<std::size_t>(20000));
                c.years = config.window;
                c.year_weights.clear();
                corpus = generate(c);
                write_file_atomic(dir / "corpus.jsonl", serialize_publications(corpus));
                write_file_atomic(dir / "sim_config.json", to_json(c).dump(2) + "\n");
            }
            auto result = run_pipeline(corpus, config);
            write_file_atomic(dir / "strata.csv", format_strata_csv(tally_strata(corpus, result.stratifier)));
            for (const auto& cc : result.cohorts) {
                write_file_atomic(dir / ("weights_" + std::string(to_string(cc.cohort.route)) + ".csv"),
                                  format_weights_csv(corpus, cc.weights));
                info(format_cohort_summary(cc.cohort));
            }
            write_file_atomic(dir / "references.csv", format_reference_csv(result.refs));
            write_file_atomic(dir / "results.csv", format_results_csv(result.report.rows));
            write_file_atomic(dir / "summary.json", summary_json(corpus, result).dump(2) + "\n");
            render_trend_chart(trend_series(result.report.rows), dir / "trend.svg");
            render_discipline_table(result.report.rows, dir / "disciplines.csv");
            for (const auto& row : result.report.rows)
                if (row.slice == SliceKind::Overall)
                    info(std::string(to_string(row.route)) + (row.adjusted ? " adjusted" : " naive") +
                         " OACA = " + format_fixed(row.oaca_pct, 2) + "%");
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
