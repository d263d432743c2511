#pragma once

// End-to-end estimation: stratify, match, rake, score.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oaca/cohort.hpp"
#include "oaca/error.hpp"
#include "oaca/io.hpp"
#include "oaca/metrics.hpp"
#include "oaca/rake.hpp"
#include "oaca/record.hpp"
#include "oaca/stratify.hpp"

namespace oaca {

struct PipelineConfig {
    YearWindow window{};
    bool fundings_zero_class = true;
    RakeSettings rake{};
    bool allow_nonconverged = false;
    ReportSlicing slicing{};
};

/// Reads the pipeline section of a --config document. Unknown keys are errors.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
    PipelineConfig c;
    auto number = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number()) throw InvalidConfig(key + ": expected a number");
        return v.get<double>();
    };
    auto boolean = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_boolean()) throw InvalidConfig(key + ": expected true or false");
        return v.get<bool>();
    };
    for (const auto& [key, v] : j.items()) {
        if (key == "window") {
            if (!v.is_string()) throw InvalidConfig("window: expected \"YYYY-YYYY\"");
            auto periods = parse_periods(v.get<std::string>());
            if (periods.size() != 1) throw InvalidConfig("window: expected one year range");
            c.window = {periods[0].first, periods[0].last};
        } else if (key == "fundings_zero_class") c.fundings_zero_class = boolean(v, key);
        else if (key == "tolerance") c.rake.tolerance = number(v, key);
        else if (key == "max_iterations") {
            if (!v.is_number_unsigned()) throw InvalidConfig("max_iterations: expected a positive integer");
            c.rake.max_iterations = v.get<std::size_t>();
        } else if (key == "max_weight_ratio") c.rake.max_weight_ratio = number(v, key);
        else if (key == "full_cross") c.rake.full_cross = boolean(v, key);
        else if (key == "per_year") c.rake.per_year = boolean(v, key);
        else if (key == "allow_nonconverged") c.allow_nonconverged = boolean(v, key);
        else if (key == "periods") {
            if (!v.is_string()) throw InvalidConfig("periods: expected \"YYYY-YYYY,YYYY-YYYY\"");
            c.slicing.periods = parse_periods(v.get<std::string>());
        } else if (key == "baseline") {
            if (!v.is_string() || !parse_baseline(v.get<std::string>()))
                throw InvalidConfig("baseline: expected naive, raked or both");
            c.slicing.baseline = *parse_baseline(v.get<std::string>());
        } else {
            throw InvalidConfig("unknown config key '" + key + "'");
        }
    }
    return c;
}

struct PipelineResult {
    Stratifier stratifier;
    std::vector<StratumKey> keys;
    std::vector<CalibratedCohort> cohorts;
    ReferenceTable refs;
    OacaReport report;
};

inline CalibratedCohort calibrate(const CohortPair& cohort, std::span<const StratumKey> keys, const Stratifier& s,
                                  const PipelineConfig& config) {
    CalibratedCohort cc{cohort, rake_cohort(cohort, keys, s, config.rake)};
    if (!cc.weights.converged && !config.allow_nonconverged)
        throw NonConvergence(std::string(to_string(cohort.route)) + ": raking did not converge after " +
                             std::to_string(cc.weights.iterations_used) + " sweeps (discrepancy " +
                             format_double(cc.weights.final_discrepancy) + ")");
    return cc;
}

/// Runs every stage for the given routes. `external_refs` replaces the
/// corpus-derived reference table when set.
inline PipelineResult run_pipeline(const Corpus& corpus, const PipelineConfig& config,
                                   std::span<const Route> routes = kRoutes,
                                   const ReferenceTable* external_refs = nullptr) {
    PipelineResult out;
    out.stratifier = Stratifier(config.window, config.fundings_zero_class);
    out.keys = corpus_keys(corpus, out.stratifier);
    for (auto route : routes) {
        auto cohort = build_cohort(corpus, out.keys, route);
        out.cohorts.push_back(calibrate(cohort, out.keys, out.stratifier, config));
    }
    out.refs = external_refs ? *external_refs : build_reference_table(corpus);
    out.report = oaca_report(corpus, out.cohorts, out.refs, config.slicing);
    return out;
}

inline std::string format_weights_csv(const Corpus& corpus, const WeightVector& w) {
    std::string out = "id,weight\n";
    for (std::size_t k = 0; k < w.ids.size(); ++k)
        out += csv_field(corpus[w.ids[k]].id) + "," + format_double(w.weights[k]) + "\n";
    return out;
}

inline nlohmann::ordered_json convergence_report(const WeightVector& w) {
    static constexpr double probs[] = {0.0, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0};
    static constexpr const char* names[] = {"min", "p01", "p25", "p50", "p75", "p99", "max"};
    nlohmann::ordered_json j;
    j["iterations"] = w.iterations_used;
    j["final_discrepancy"] = w.final_discrepancy;
    j["converged"] = w.converged;
    j["n_weights"] = w.weights.size();
    j["weight_sum"] = w.sum();
    const auto q = weight_quantiles(w.weights, probs);
    nlohmann::ordered_json quant = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < q.size(); ++i) quant[names[i]] = q[i];
    j["weight_quantiles"] = quant;
    j["zeroed_categories"] = w.zeroed_categories.size();
    return j;
}

inline nlohmann::ordered_json summary_json(const Corpus& corpus, const PipelineResult& r) {
    nlohmann::ordered_json j;
    j["n_records"] = corpus.size();
    j["source_digest"] = corpus.source_digest();
    std::vector<CohortPair> pairs;
    for (const auto& cc : r.cohorts) pairs.push_back(cc.cohort);
    j["double_candidates"] = double_candidates(pairs);
    nlohmann::ordered_json routes = nlohmann::ordered_json::array();
    for (const auto& cc : r.cohorts) {
        nlohmann::ordered_json rj;
        rj["route"] = to_string(cc.cohort.route);
        rj["oa_sample"] = cc.cohort.oa_sample.size();
        rj["control_pool"] = cc.cohort.control_pool.size();
        rj["excluded_oa"] = cc.cohort.excluded_oa.size();
        rj["strata"] = cc.cohort.strata.size();
        rj["raking"] = convergence_report(cc.weights);
        for (const auto& row : r.report.rows) {
            if (row.route != cc.cohort.route || row.slice != SliceKind::Overall) continue;
            nlohmann::ordered_json o;
            o["mncs_oa"] = row.mncs_oa;
            o["mncs_ctrl"] = row.mncs_ctrl;
            o["oaca_pct"] = row.oaca_pct;
            o["n_oa"] = row.n_oa;
            o["effective_n_ctrl"] = row.effective_n_ctrl;
            rj[row.adjusted ? "adjusted" : "naive"] = o;
        }
        routes.push_back(rj);
    }
    j["routes"] = routes;
    j["warnings"] = r.report.warnings.size();
    return j;
}

}  // namespace oaca
