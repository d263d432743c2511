#pragma once

// Raking-ratio calibration (iterative proportional fitting on record weights).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oaca/cohort.hpp"
#include "oaca/error.hpp"
#include "oaca/parallel.hpp"
#include "oaca/record.hpp"
#include "oaca/stratify.hpp"

namespace oaca {

/// Target distribution of one calibration margin.
struct MarginSpec {
    std::string feature;
    std::vector<std::string> categories;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
};

struct RakingProblem {
    /// Corpus positions of the pool records; may be empty for abstract problems.
    std::vector<RecordIndex> pool;
    /// categories[m][i] is the category of pool record i on margin m.
    std::vector<std::vector<std::uint32_t>> categories;
    std::vector<MarginSpec> margins;
    double tolerance = 1e-8;
    std::size_t max_iterations = 1000;
    double total_weight = 1.0;
    /// Caps weight / mean weight after raking; margins are no longer exact then.
    std::optional<double> max_weight_ratio;

    std::size_t pool_size() const noexcept { return categories.empty() ? pool.size() : categories.front().size(); }
};

struct WeightVector {
    std::vector<RecordIndex> ids;
    std::vector<double> weights;
    std::size_t iterations_used = 0;
    double final_discrepancy = 0.0;
    bool converged = false;
    /// (margin, category) pairs with pool mass but zero target; their records end with weight 0.
    std::vector<std::pair<std::size_t, std::size_t>> zeroed_categories;

    double sum() const {
        CompensatedSum s;
        for (double w : weights) s.add(w);
        return s.value();
    }
};

namespace detail {

/// Weighted mass per category of one margin. Per-block partial sums are
/// combined in block order so the result does not depend on thread count.
inline std::vector<double> category_mass(const std::vector<std::uint32_t>& cats, const std::vector<double>& w,
                                         std::size_t n_categories) {
    const std::size_t n = w.size();
    std::vector<std::vector<double>> partial(block_count(n), std::vector<double>(n_categories, 0.0));
    for_each_block(n, [&](std::size_t b, std::size_t begin, std::size_t end) {
        auto& acc = partial[b];
        for (std::size_t i = begin; i < end; ++i) acc[cats[i]] += w[i];
    });
    std::vector<double> mass(n_categories, 0.0);
    for (const auto& p : partial)
        for (std::size_t c = 0; c < n_categories; ++c) mass[c] += p[c];
    return mass;
}

inline double sum_in_block_order(const std::vector<double>& mass) {
    double total = 0.0;
    for (double m : mass) total += m;
    return total;
}

inline double sup_discrepancy(const RakingProblem& p, const std::vector<double>& w) {
    double worst = 0.0;
    for (std::size_t m = 0; m < p.margins.size(); ++m) {
        const auto mass = category_mass(p.categories[m], w, p.margins[m].size());
        const double total = sum_in_block_order(mass);
        for (std::size_t c = 0; c < mass.size(); ++c) {
            const double prop = total > 0.0 ? mass[c] / total : 0.0;
            worst = std::max(worst, std::abs(prop - p.margins[m].targets[c]));
        }
    }
    return worst;
}

inline void scale_to(std::vector<double>& w, double total) {
    CompensatedSum s;
    for (double x : w) s.add(x);
    const double current = s.value();
    if (current <= 0.0) return;
    const double k = total / current;
    for (double& x : w) x *= k;
}

inline void validate(const RakingProblem& p) {
    if (p.margins.empty()) throw InfeasibleTargets("raking problem has no margins");
    if (p.categories.size() != p.margins.size())
        throw DomainViolation("raking problem: category assignments do not match margin count");
    if (!(p.total_weight > 0.0) || !std::isfinite(p.total_weight))
        throw InfeasibleTargets("total_weight must be positive and finite");
    if (!(p.tolerance > 0.0)) throw InfeasibleTargets("tolerance must be positive");
    const std::size_t n = p.pool_size();
    if (n == 0) throw EmptySample("raking pool is empty");
    if (!p.pool.empty() && p.pool.size() != n) throw DomainViolation("pool ids do not match category assignments");
    for (std::size_t m = 0; m < p.margins.size(); ++m) {
        const auto& margin = p.margins[m];
        if (p.categories[m].size() != n) throw DomainViolation("margin " + margin.feature + ": assignment length mismatch");
        double sum = 0.0;
        for (double t : margin.targets) {
            if (!(t >= 0.0) || !std::isfinite(t))
                throw InfeasibleTargets("margin " + margin.feature + " has a negative or non-finite target");
            sum += t;
        }
        // Allow for rounding in long lists of proportions.
        const double slack = 1e-12 + static_cast<double>(margin.size()) * std::numeric_limits<double>::epsilon();
        if (std::abs(sum - 1.0) > slack) throw InfeasibleTargets("margin " + margin.feature + " targets do not sum to 1");
        std::vector<std::size_t> count(margin.size(), 0);
        for (auto c : p.categories[m]) {
            if (c >= margin.size()) throw DomainViolation("margin " + margin.feature + ": category out of range");
            ++count[c];
        }
        for (std::size_t c = 0; c < margin.size(); ++c)
            if (margin.targets[c] > 0.0 && count[c] == 0) throw StructuralZero(margin.feature, c);
    }
}

inline void trim_weights(std::vector<double>& w, double total, double max_ratio) {
    const double cap = max_ratio * total / static_cast<double>(w.size());
    for (int round = 0; round < 100; ++round) {
        bool clipped = false;
        for (double& x : w) {
            if (x > cap) {
                x = cap;
                clipped = true;
            }
        }
        scale_to(w, total);
        if (!clipped) break;
    }
}

}  // namespace detail

/// Starts from uniform weights summing to total_weight and sweeps the margins
/// in order, scaling each record by target / current proportion of its
/// category. Stops once the largest margin discrepancy (in proportion units)
/// is within tolerance, or after max_iterations sweeps with converged=false.
inline WeightVector rake_weights(const RakingProblem& problem) {
    detail::validate(problem);
    const std::size_t n = problem.pool_size();
    WeightVector out;
    out.ids = problem.pool;
    auto& w = out.weights;
    w.assign(n, problem.total_weight / static_cast<double>(n));

    std::vector<double> factor;
    for (std::size_t sweep = 1; sweep <= problem.max_iterations; ++sweep) {
        for (std::size_t m = 0; m < problem.margins.size(); ++m) {
            const auto& margin = problem.margins[m];
            const auto& cats = problem.categories[m];
            const auto mass = detail::category_mass(cats, w, margin.size());
            const double total = detail::sum_in_block_order(mass);
            factor.assign(margin.size(), 1.0);
            for (std::size_t c = 0; c < margin.size(); ++c) {
                if (margin.targets[c] == 0.0)
                    factor[c] = 0.0;
                else if (mass[c] > 0.0)
                    factor[c] = margin.targets[c] * total / mass[c];
            }
            for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) w[i] *= factor[cats[i]];
            });
        }
        out.iterations_used = sweep;
        out.final_discrepancy = detail::sup_discrepancy(problem, w);
        if (out.final_discrepancy <= problem.tolerance) {
            out.converged = true;
            break;
        }
    }
    detail::scale_to(w, problem.total_weight);

    if (problem.max_weight_ratio) {
        detail::trim_weights(w, problem.total_weight, *problem.max_weight_ratio);
        out.final_discrepancy = detail::sup_discrepancy(problem, w);
        out.converged = out.final_discrepancy <= problem.tolerance;
    }

    for (std::size_t m = 0; m < problem.margins.size(); ++m) {
        std::vector<bool> has_mass(problem.margins[m].size(), false);
        for (auto c : problem.categories[m]) has_mass[c] = true;
        for (std::size_t c = 0; c < has_mass.size(); ++c)
            if (has_mass[c] && problem.margins[m].targets[c] == 0.0) out.zeroed_categories.emplace_back(m, c);
    }
    return out;
}

/// Empirical distribution of each requested feature over `sample`.
inline std::vector<MarginSpec> compute_margins(std::span<const RecordIndex> sample, std::span<const StratumKey> keys,
                                               const Stratifier& s,
                                               std::span<const Feature> features = kFeatures) {
    if (sample.empty()) throw EmptySample("cannot compute margins of an empty sample");
    std::vector<MarginSpec> margins;
    for (auto f : features) {
        MarginSpec m;
        m.feature = std::string(to_string(f));
        const std::size_t k = s.category_count(f);
        for (std::size_t c = 0; c < k; ++c) m.categories.push_back(s.category_label(f, c));
        std::vector<std::size_t> count(k, 0);
        for (auto i : sample) ++count[s.category(keys[i], f)];
        m.targets.resize(k);
        const double n = static_cast<double>(sample.size());
        for (std::size_t c = 0; c < k; ++c) m.targets[c] = static_cast<double>(count[c]) / n;
        margins.push_back(std::move(m));
    }
    return margins;
}

inline std::vector<MarginSpec> compute_margins(std::span<const RecordIndex> sample, const Corpus& corpus,
                                               const Stratifier& s = Stratifier{}) {
    return compute_margins(sample, corpus_keys(corpus, s), s);
}

struct RakeSettings {
    double tolerance = 1e-8;
    std::size_t max_iterations = 1000;
    std::optional<double> max_weight_ratio;
    /// Calibrate on the single full cross-classification instead of the 8 margins.
    bool full_cross = false;
    /// Rake each publication year separately.
    bool per_year = false;
};

/// Marginal calibration problem for a subset of the cohort. Targets come from
/// `oa`, the pool is `controls`, and the weights sum to |oa|.
inline RakingProblem make_raking_problem(std::span<const RecordIndex> oa, std::span<const RecordIndex> controls,
                                         std::span<const StratumKey> keys, const Stratifier& s,
                                         const RakeSettings& settings, std::span<const Feature> features = kFeatures) {
    RakingProblem p;
    p.pool.assign(controls.begin(), controls.end());
    p.margins = compute_margins(oa, keys, s, features);
    for (auto f : features) {
        std::vector<std::uint32_t> cats;
        cats.reserve(controls.size());
        for (auto i : controls) cats.push_back(static_cast<std::uint32_t>(s.category(keys[i], f)));
        p.categories.push_back(std::move(cats));
    }
    p.tolerance = settings.tolerance;
    p.max_iterations = settings.max_iterations;
    p.max_weight_ratio = settings.max_weight_ratio;
    p.total_weight = static_cast<double>(oa.size());
    return p;
}

inline RakingProblem make_raking_problem(const CohortPair& cohort, std::span<const StratumKey> keys,
                                         const Stratifier& s, const RakeSettings& settings = {}) {
    return make_raking_problem(cohort.oa_sample, cohort.control_pool, keys, s, settings);
}

/// One margin whose categories are the cohort's strata, in key order.
inline RakingProblem make_full_cross_problem(const CohortPair& cohort, const RakeSettings& settings = {}) {
    RakingProblem p;
    p.pool = cohort.control_pool;
    MarginSpec m;
    m.feature = "stratum";
    std::vector<std::pair<RecordIndex, std::uint32_t>> assignment;
    assignment.reserve(cohort.control_pool.size());
    std::uint32_t ordinal = 0;
    const double n_oa = static_cast<double>(cohort.oa_sample.size());
    for (const auto& [key, members] : cohort.strata) {
        m.categories.push_back(to_string(key));
        m.targets.push_back(static_cast<double>(members.oa.size()) / n_oa);
        for (auto i : members.controls) assignment.emplace_back(i, ordinal);
        ++ordinal;
    }
    std::sort(assignment.begin(), assignment.end());
    std::vector<std::uint32_t> cats;
    cats.reserve(assignment.size());
    for (const auto& a : assignment) cats.push_back(a.second);
    p.categories.push_back(std::move(cats));
    p.margins.push_back(std::move(m));
    p.tolerance = settings.tolerance;
    p.max_iterations = settings.max_iterations;
    p.max_weight_ratio = settings.max_weight_ratio;
    p.total_weight = n_oa;
    return p;
}

/// Closed-form cell weights n_oa(s) / n_ctrl(s), scaled to `total_weight`
/// (defaults to |oa_sample|). Aligned with cohort.control_pool.
inline WeightVector post_stratification_weights(const CohortPair& cohort, std::optional<double> total_weight = {}) {
    const double n_oa = static_cast<double>(cohort.oa_sample.size());
    const double scale = total_weight ? *total_weight / n_oa : 1.0;
    std::vector<std::pair<RecordIndex, double>> cell;
    cell.reserve(cohort.control_pool.size());
    for (const auto& [key, members] : cohort.strata) {
        const double w = static_cast<double>(members.oa.size()) / static_cast<double>(members.controls.size()) * scale;
        for (auto i : members.controls) cell.emplace_back(i, w);
    }
    std::sort(cell.begin(), cell.end());
    WeightVector out;
    out.ids.reserve(cell.size());
    out.weights.reserve(cell.size());
    for (const auto& [i, w] : cell) {
        out.ids.push_back(i);
        out.weights.push_back(w);
    }
    out.iterations_used = 1;
    out.converged = true;
    return out;
}

/// Calibrated weights for a cohort's control pool, aligned with
/// cohort.control_pool. With per_year the problem is split by publication
/// year, each slice summing to its own OA count.
inline WeightVector rake_cohort(const CohortPair& cohort, std::span<const StratumKey> keys, const Stratifier& s,
                                const RakeSettings& settings = {}) {
    if (settings.full_cross) return rake_weights(make_full_cross_problem(cohort, settings));
    if (!settings.per_year) return rake_weights(make_raking_problem(cohort, keys, s, settings));

    static constexpr std::array<Feature, 7> kWithinYear{Feature::Discipline, Feature::Impact, Feature::Countries,
                                                        Feature::Fundings,   Feature::Erc,    Feature::Eu27,
                                                        Feature::Patent};
    std::map<int, std::pair<std::vector<RecordIndex>, std::vector<RecordIndex>>> by_year;
    for (auto i : cohort.oa_sample) by_year[keys[i].year].first.push_back(i);
    for (auto i : cohort.control_pool) by_year[keys[i].year].second.push_back(i);

    std::vector<std::pair<RecordIndex, double>> merged;
    WeightVector out;
    out.converged = true;
    for (const auto& [year, sides] : by_year) {
        auto p = make_raking_problem(sides.first, sides.second, keys, s, settings, kWithinYear);
        auto wv = rake_weights(p);
        for (std::size_t k = 0; k < wv.ids.size(); ++k) merged.emplace_back(wv.ids[k], wv.weights[k]);
        out.iterations_used = std::max(out.iterations_used, wv.iterations_used);
        out.final_discrepancy = std::max(out.final_discrepancy, wv.final_discrepancy);
        out.converged = out.converged && wv.converged;
        for (auto zc : wv.zeroed_categories) out.zeroed_categories.push_back(zc);
    }
    std::sort(merged.begin(), merged.end());
    for (const auto& [i, w] : merged) {
        out.ids.push_back(i);
        out.weights.push_back(w);
    }
    return out;
}

/// Weight distribution at the given probabilities (nearest-rank on sorted weights).
inline std::vector<double> weight_quantiles(std::vector<double> w, std::span<const double> probs) {
    std::vector<double> out;
    if (w.empty()) return out;
    std::sort(w.begin(), w.end());
    for (double p : probs) {
        const double pos = p * static_cast<double>(w.size() - 1);
        out.push_back(w[static_cast<std::size_t>(std::llround(pos))]);
    }
    return out;
}

}  // namespace oaca
