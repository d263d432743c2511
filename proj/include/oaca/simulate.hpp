#pragma once

// Seeded synthetic corpora with known OA citation effects.
//
// Model, per record:
//   year, discipline, doc type      categorical draws
//   journal impact                  log-normal(mu[d], sigma[d]); k = its impact class
//   countries                       1 + Poisson(countries_extra_mean * exp(slope * (k - 3)))
//   fundings                        Poisson(fundings_mean * exp(slope * (k - 3)))
//   ERC / EU27 / patent flags       Bernoulli(logistic(logit(p) + slope * (k - 3)))
//   OA route                        multinomial logit: eta_r = log(base_r / base_non)
//                                     + impact_coef_r * (k - 3) + discipline_coef_r[d]
//   citations                       NegBin(mean = lambda(d, y, t) * impact_effect[k] * (1 + delta_r),
//                                          size = dispersion)
//
// Why the true OACA is 100 * delta_r: inside one normalization cell every
// record shares the same divisor, and given its stratum an OA record's
// expected citations are exactly (1 + delta_r) times those of a non-OA record
// in the same stratum, because OA status depends only on stratum features.
// A control group with the OA sample's stratum composition therefore has an
// MNCS smaller by exactly the factor 1 + delta_r, so
// OACA = 100 * ((1 + delta_r) - 1) = 100 * delta_r. Raking on the eight
// margins reaches that composition: the OA/non-OA odds of a stratum factor
// into one term per impact class and one per discipline, both margins.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "oaca/error.hpp"
#include "oaca/parallel.hpp"
#include "oaca/record.hpp"
#include "oaca/stratify.hpp"

namespace oaca {

struct RouteAssignment {
    /// Probability of the route for a record of impact class 3 with zero discipline coefficient.
    double base_probability = 0.0;
    double impact_coef = 0.0;
    std::array<double, kDisciplineCount> discipline_coef{};
};

struct SimConfig {
    std::uint64_t seed = 42;
    std::size_t n_records = 10000;
    YearWindow years{};
    /// Empty means uniform over the window.
    std::vector<double> year_weights;
    std::array<double, kDisciplineCount> discipline_weights = filled<kDisciplineCount>(1.0);
    std::array<double, kDocTypeCount> doc_type_weights{0.8, 0.1, 0.1};

    std::array<double, kDisciplineCount> impact_mu = filled<kDisciplineCount>(0.1);
    std::array<double, kDisciplineCount> impact_sigma = filled<kDisciplineCount>(0.55);

    double countries_extra_mean = 0.8;
    double countries_impact_slope = 0.0;
    double fundings_mean = 1.0;
    double fundings_impact_slope = 0.0;
    double erc_probability = 0.03;
    double erc_impact_slope = 0.0;
    double eu27_probability = 0.35;
    double eu27_impact_slope = 0.0;
    double patent_probability = 0.05;
    double patent_impact_slope = 0.0;

    RouteAssignment full{0.15, 0.0, {}};
    RouteAssignment hybrid{0.08, 0.0, {}};

    double lambda_base = 8.0;
    std::array<double, kDisciplineCount> discipline_citation_factor = filled<kDisciplineCount>(1.0);
    std::array<double, kDocTypeCount> doc_type_citation_factor{1.0, 1.6, 0.5};
    /// Baseline mean grows by this fraction per year of age before the window end.
    double age_slope = 0.15;
    std::array<double, 5> impact_effect{0.5, 0.8, 1.0, 1.4, 2.0};
    double delta_full = 0.0;
    double delta_hybrid = 0.0;
    /// Negative-binomial size; smaller is more over-dispersed.
    double dispersion = 2.0;

    template <std::size_t N>
    static constexpr std::array<double, N> filled(double v) {
        std::array<double, N> a{};
        for (auto& x : a) x = v;
        return a;
    }
};

inline double true_oaca(const SimConfig& config, Route route) {
    return 100.0 * (route == Route::FullGoldOA ? config.delta_full : config.delta_hybrid);
}

inline void validate(const SimConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) { throw InvalidConfig(field + ": " + why); };
    auto probability = [&](const char* field, double p) {
        if (!(p >= 0.0 && p <= 1.0)) fail(field, "must be a probability in [0, 1]");
    };
    auto weights = [&](const char* field, const auto& w) {
        double sum = 0.0;
        for (double x : w) {
            if (!(x >= 0.0) || !std::isfinite(x)) fail(field, "weights must be finite and nonnegative");
            sum += x;
        }
        if (!(sum > 0.0)) fail(field, "weights must not all be zero");
    };
    if (c.years.first > c.years.last) fail("years", "first year after last year");
    if (c.n_records > 0xFFFFFFFFull) fail("n_records", "too many records");
    if (!c.year_weights.empty()) {
        if (c.year_weights.size() != c.years.size()) fail("year_weights", "length must match the year window");
        weights("year_weights", c.year_weights);
    }
    weights("discipline_weights", c.discipline_weights);
    weights("doc_type_weights", c.doc_type_weights);
    for (double s : c.impact_sigma)
        if (!(s >= 0.0) || !std::isfinite(s)) fail("impact_sigma", "must be finite and nonnegative");
    for (double m : c.impact_mu)
        if (!std::isfinite(m)) fail("impact_mu", "must be finite");
    if (!(c.countries_extra_mean >= 0.0)) fail("countries_extra_mean", "must be nonnegative");
    if (!(c.fundings_mean >= 0.0)) fail("fundings_mean", "must be nonnegative");
    probability("erc_probability", c.erc_probability);
    probability("eu27_probability", c.eu27_probability);
    probability("patent_probability", c.patent_probability);
    probability("full.base_probability", c.full.base_probability);
    probability("hybrid.base_probability", c.hybrid.base_probability);
    if (!(c.full.base_probability + c.hybrid.base_probability < 1.0))
        fail("base_probability", "full + hybrid must be below 1");
    if (!(c.lambda_base > 0.0) || !std::isfinite(c.lambda_base)) fail("lambda_base", "must be positive");
    for (double f : c.discipline_citation_factor)
        if (!(f > 0.0) || !std::isfinite(f)) fail("discipline_citation_factor", "must be positive");
    for (double f : c.doc_type_citation_factor)
        if (!(f > 0.0) || !std::isfinite(f)) fail("doc_type_citation_factor", "must be positive");
    if (!(c.age_slope >= 0.0)) fail("age_slope", "must be nonnegative");
    for (double f : c.impact_effect)
        if (!(f > 0.0) || !std::isfinite(f)) fail("impact_effect", "must be positive");
    if (!(c.delta_full > -1.0)) fail("delta_full", "must exceed -1");
    if (!(c.delta_hybrid > -1.0)) fail("delta_hybrid", "must exceed -1");
    if (!(c.dispersion > 0.0) || !std::isfinite(c.dispersion)) fail("dispersion", "must be positive");
}

/// Baseline citation mean of a normalization cell.
inline double baseline_lambda(const SimConfig& c, Discipline d, int year, DocType t) {
    return c.lambda_base * c.discipline_citation_factor[d.index] *
           c.doc_type_citation_factor[static_cast<std::size_t>(t)] *
           (1.0 + c.age_slope * static_cast<double>(c.years.last - year));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for one block of records.
inline std::mt19937_64 block_stream(std::uint64_t seed, std::uint64_t block) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ (block * 0xd1b54a32d192ed03ULL + 1)));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline bool draw_flag(std::mt19937_64& rng, double p, double slope, int impact_class) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    const double q = logistic(std::log(p / (1.0 - p)) + slope * (impact_class - 3));
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < q;
}

inline long long draw_poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long long>(mean)(rng);
}

inline long long draw_negative_binomial(std::mt19937_64& rng, double mean, double size) {
    if (mean <= 0.0) return 0;
    const double rate = std::gamma_distribution<double>(size, mean / size)(rng);
    return draw_poisson(rng, rate);
}

}  // namespace detail

inline Corpus generate(const SimConfig& c) {
    validate(c);
    std::vector<PublicationRecord> records(c.n_records);
    std::vector<double> year_w = c.year_weights;
    if (year_w.empty()) year_w.assign(c.years.size(), 1.0);

    const double base_non = 1.0 - c.full.base_probability - c.hybrid.base_probability;
    const double log_full = c.full.base_probability > 0.0 ? std::log(c.full.base_probability / base_non) : -INFINITY;
    const double log_hybrid =
        c.hybrid.base_probability > 0.0 ? std::log(c.hybrid.base_probability / base_non) : -INFINITY;

    for_each_block(c.n_records, [&](std::size_t block, std::size_t begin, std::size_t end) {
        auto rng = detail::block_stream(c.seed, block);
        std::discrete_distribution<int> year_dist(year_w.begin(), year_w.end());
        std::discrete_distribution<int> disc_dist(c.discipline_weights.begin(), c.discipline_weights.end());
        std::discrete_distribution<int> type_dist(c.doc_type_weights.begin(), c.doc_type_weights.end());
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = begin; i < end; ++i) {
            auto& r = records[i];
            r.id = "P" + std::to_string(i);
            r.pub_year = c.years.first + year_dist(rng);
            r.discipline = Discipline{static_cast<std::uint8_t>(disc_dist(rng))};
            r.doc_type = static_cast<DocType>(type_dist(rng));
            const auto d = r.discipline.index;
            r.journal_impact = std::exp(c.impact_mu[d] + c.impact_sigma[d] * normal(rng));
            const int k = classify_impact(r.journal_impact);
            const double centered = k - 3;
            r.n_countries = 1 + static_cast<int>(detail::draw_poisson(
                                    rng, c.countries_extra_mean * std::exp(c.countries_impact_slope * centered)));
            r.n_fundings = static_cast<int>(
                detail::draw_poisson(rng, c.fundings_mean * std::exp(c.fundings_impact_slope * centered)));
            r.has_erc_funding = detail::draw_flag(rng, c.erc_probability, c.erc_impact_slope, k);
            r.has_eu27_address = detail::draw_flag(rng, c.eu27_probability, c.eu27_impact_slope, k);
            r.cited_by_patent = detail::draw_flag(rng, c.patent_probability, c.patent_impact_slope, k);

            const double e_full = std::exp(log_full + c.full.impact_coef * centered + c.full.discipline_coef[d]);
            const double e_hybrid =
                std::exp(log_hybrid + c.hybrid.impact_coef * centered + c.hybrid.discipline_coef[d]);
            const double denom = 1.0 + e_full + e_hybrid;
            const double u = unit(rng);
            double delta = 0.0;
            if (u < e_full / denom) {
                r.oa_status = OaStatus::FullGoldOA;
                delta = c.delta_full;
            } else if (u < (e_full + e_hybrid) / denom) {
                r.oa_status = OaStatus::HybridGoldOA;
                delta = c.delta_hybrid;
            } else {
                r.oa_status = OaStatus::NonOA;
            }
            const double mean = baseline_lambda(c, r.discipline, r.pub_year, r.doc_type) *
                                c.impact_effect[static_cast<std::size_t>(k - 1)] * (1.0 + delta);
            r.citations = detail::draw_negative_binomial(rng, mean, c.dispersion);
        }
    });
    return Corpus(std::move(records), "sim-" + std::to_string(c.seed), c.years);
}

// ---------------------------------------------------------------------------
// Presets

inline SimConfig preset_null() { return SimConfig{}; }

inline SimConfig preset_confounded_null() {
    SimConfig c;
    c.full.impact_coef = 0.6;
    c.hybrid.impact_coef = 0.6;
    c.countries_impact_slope = 0.15;
    c.fundings_impact_slope = 0.2;
    c.patent_impact_slope = 0.4;
    return c;
}

inline SimConfig preset_planted_30() {
    SimConfig c = preset_confounded_null();
    c.delta_full = 0.30;
    c.delta_hybrid = 0.30;
    return c;
}

/// Full OA concentrated in low impact classes and life sciences, hybrid in
/// high impact classes; a citation penalty for full OA and a bonus for hybrid.
inline SimConfig preset_paper_shape() {
    SimConfig c = preset_confounded_null();
    c.full.base_probability = 0.18;
    c.full.impact_coef = -0.7;
    c.hybrid.base_probability = 0.07;
    c.hybrid.impact_coef = 0.7;
    for (std::size_t d = 0; d < kDisciplineCount; ++d) {
        if (d < 9) c.full.discipline_coef[d] = 0.5;        // LS
        else if (d < 20) c.full.discipline_coef[d] = -0.3;  // PE
        else c.full.discipline_coef[d] = -0.1;             // SH
    }
    for (std::size_t d = 0; d < kDisciplineCount; ++d) c.impact_mu[d] = d < 9 ? 0.25 : (d < 20 ? 0.1 : -0.1);
    c.delta_full = -0.15;
    c.delta_hybrid = 0.30;
    return c;
}

inline std::vector<std::string> preset_names() { return {"null", "confounded-null", "planted-30", "paper-shape"}; }

inline SimConfig preset(const std::string& name) {
    if (name == "null") return preset_null();
    if (name == "confounded-null") return preset_confounded_null();
    if (name == "planted-30") return preset_planted_30();
    if (name == "paper-shape") return preset_paper_shape();
    throw InvalidConfig("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON form. Per-discipline arrays accept either 27 numbers or one number
// applied to every discipline. Unknown keys are rejected.

namespace detail {

template <std::size_t N>
void read_array(const nlohmann::json& j, const char* field, std::array<double, N>& out) {
    if (j.is_number()) {
        out.fill(j.get<double>());
        return;
    }
    if (!j.is_array() || j.size() != N)
        throw InvalidConfig(std::string(field) + ": expected a number or an array of " + std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) {
        if (!j[i].is_number()) throw InvalidConfig(std::string(field) + ": element " + std::to_string(i) + " is not a number");
        out[i] = j[i].get<double>();
    }
}

inline double read_number(const nlohmann::json& j, const char* field) {
    if (!j.is_number()) throw InvalidConfig(std::string(field) + ": expected a number");
    return j.get<double>();
}

/// Keys present in `j` override `r`; the rest keep their values.
inline void read_route(const nlohmann::json& j, const char* field, RouteAssignment& r) {
    if (!j.is_object()) throw InvalidConfig(std::string(field) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "base_probability") r.base_probability = read_number(value, "base_probability");
        else if (key == "impact_coef") r.impact_coef = read_number(value, "impact_coef");
        else if (key == "discipline_coef") read_array(value, "discipline_coef", r.discipline_coef);
        else throw InvalidConfig(std::string(field) + ": unknown key '" + key + "'");
    }
}

}  // namespace detail

/// Reads a config. A "preset" key selects the starting point that the other
/// keys then override.
inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidConfig("simulation config must be a JSON object");
    SimConfig c;
    if (auto it = j.find("preset"); it != j.end()) {
        if (!it->is_string()) throw InvalidConfig("preset: expected a string");
        c = preset(it->get<std::string>());
    }
    using detail::read_array;
    using detail::read_number;
    for (const auto& [key, v] : j.items()) {
        if (key == "preset") continue;
        if (key == "seed") {
            if (!v.is_number_unsigned()) throw InvalidConfig("seed: expected a nonnegative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "n_records") {
            if (!v.is_number_unsigned()) throw InvalidConfig("n_records: expected a nonnegative integer");
            c.n_records = v.get<std::size_t>();
        } else if (key == "year_first") {
            if (!v.is_number_integer()) throw InvalidConfig("year_first: expected an integer");
            c.years.first = v.get<int>();
        } else if (key == "year_last") {
            if (!v.is_number_integer()) throw InvalidConfig("year_last: expected an integer");
            c.years.last = v.get<int>();
        } else if (key == "year_weights") {
            if (!v.is_array()) throw InvalidConfig("year_weights: expected an array");
            c.year_weights.clear();
            for (const auto& x : v) c.year_weights.push_back(read_number(x, "year_weights"));
        } else if (key == "discipline_weights") read_array(v, "discipline_weights", c.discipline_weights);
        else if (key == "doc_type_weights") read_array(v, "doc_type_weights", c.doc_type_weights);
        else if (key == "impact_mu") read_array(v, "impact_mu", c.impact_mu);
        else if (key == "impact_sigma") read_array(v, "impact_sigma", c.impact_sigma);
        else if (key == "countries_extra_mean") c.countries_extra_mean = read_number(v, "countries_extra_mean");
        else if (key == "countries_impact_slope") c.countries_impact_slope = read_number(v, "countries_impact_slope");
        else if (key == "fundings_mean") c.fundings_mean = read_number(v, "fundings_mean");
        else if (key == "fundings_impact_slope") c.fundings_impact_slope = read_number(v, "fundings_impact_slope");
        else if (key == "erc_probability") c.erc_probability = read_number(v, "erc_probability");
        else if (key == "erc_impact_slope") c.erc_impact_slope = read_number(v, "erc_impact_slope");
        else if (key == "eu27_probability") c.eu27_probability = read_number(v, "eu27_probability");
        else if (key == "eu27_impact_slope") c.eu27_impact_slope = read_number(v, "eu27_impact_slope");
        else if (key == "patent_probability") c.patent_probability = read_number(v, "patent_probability");
        else if (key == "patent_impact_slope") c.patent_impact_slope = read_number(v, "patent_impact_slope");
        else if (key == "full") detail::read_route(v, "full", c.full);
        else if (key == "hybrid") detail::read_route(v, "hybrid", c.hybrid);
        else if (key == "lambda_base") c.lambda_base = read_number(v, "lambda_base");
        else if (key == "discipline_citation_factor") read_array(v, "discipline_citation_factor", c.discipline_citation_factor);
        else if (key == "doc_type_citation_factor") read_array(v, "doc_type_citation_factor", c.doc_type_citation_factor);
        else if (key == "age_slope") c.age_slope = read_number(v, "age_slope");
        else if (key == "impact_effect") read_array(v, "impact_effect", c.impact_effect);
        else if (key == "delta_full") c.delta_full = read_number(v, "delta_full");
        else if (key == "delta_hybrid") c.delta_hybrid = read_number(v, "delta_hybrid");
        else if (key == "dispersion") c.dispersion = read_number(v, "dispersion");
        else throw InvalidConfig("unknown key '" + key + "'");
    }
    validate(c);
    return c;
}

inline nlohmann::ordered_json to_json(const SimConfig& c) {
    auto route = [](const RouteAssignment& r) {
        nlohmann::ordered_json j;
        j["base_probability"] = r.base_probability;
        j["impact_coef"] = r.impact_coef;
        j["discipline_coef"] = r.discipline_coef;
        return j;
    };
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["n_records"] = c.n_records;
    j["year_first"] = c.years.first;
    j["year_last"] = c.years.last;
    if (!c.year_weights.empty()) j["year_weights"] = c.year_weights;
    j["discipline_weights"] = c.discipline_weights;
    j["doc_type_weights"] = c.doc_type_weights;
    j["impact_mu"] = c.impact_mu;
    j["impact_sigma"] = c.impact_sigma;
    j["countries_extra_mean"] = c.countries_extra_mean;
    j["countries_impact_slope"] = c.countries_impact_slope;
    j["fundings_mean"] = c.fundings_mean;
    j["fundings_impact_slope"] = c.fundings_impact_slope;
    j["erc_probability"] = c.erc_probability;
    j["erc_impact_slope"] = c.erc_impact_slope;
    j["eu27_probability"] = c.eu27_probability;
    j["eu27_impact_slope"] = c.eu27_impact_slope;
    j["patent_probability"] = c.patent_probability;
    j["patent_impact_slope"] = c.patent_impact_slope;
    j["full"] = route(c.full);
    j["hybrid"] = route(c.hybrid);
    j["lambda_base"] = c.lambda_base;
    j["discipline_citation_factor"] = c.discipline_citation_factor;
    j["doc_type_citation_factor"] = c.doc_type_citation_factor;
    j["age_slope"] = c.age_slope;
    j["impact_effect"] = c.impact_effect;
    j["delta_full"] = c.delta_full;
    j["delta_hybrid"] = c.delta_hybrid;
    j["dispersion"] = c.dispersion;
    return j;
}

}  // namespace oaca
