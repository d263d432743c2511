#pragma once

// Exact-stratum matching of OA publications against non-OA "doubles".

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "oaca/error.hpp"
#include "oaca/record.hpp"
#include "oaca/stratify.hpp"

namespace oaca {

struct StratumMembers {
    std::vector<RecordIndex> oa;
    std::vector<RecordIndex> controls;
};

/// OA sample of one route and its matched control pool. All index vectors are
/// sorted ascending; `strata` holds only strata that contribute to both sides.
struct CohortPair {
    Route route = Route::FullGoldOA;
    std::vector<RecordIndex> oa_sample;
    std::vector<RecordIndex> control_pool;
    std::map<StratumKey, StratumMembers> strata;
    std::vector<RecordIndex> excluded_oa;

    friend bool operator==(const CohortPair& a, const CohortPair& b) {
        if (a.route != b.route || a.oa_sample != b.oa_sample || a.control_pool != b.control_pool ||
            a.excluded_oa != b.excluded_oa || a.strata.size() != b.strata.size())
            return false;
        return std::equal(a.strata.begin(), a.strata.end(), b.strata.begin(), [](const auto& x, const auto& y) {
            return x.first == y.first && x.second.oa == y.second.oa && x.second.controls == y.second.controls;
        });
    }
};

/// Stratum key of every corpus record, computed once and shared by both routes.
inline std::vector<StratumKey> corpus_keys(const Corpus& corpus, const Stratifier& s) {
    std::vector<StratumKey> keys;
    keys.reserve(corpus.size());
    for (const auto& r : corpus) keys.push_back(s.key(r));
    return keys;
}

inline CohortPair build_cohort(const Corpus& corpus, std::span<const StratumKey> keys, Route route) {
    const OaStatus wanted = status_of(route);
    std::unordered_map<StratumKey, StratumMembers> groups;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto status = corpus[i].oa_status;
        if (status == wanted)
            groups[keys[i]].oa.push_back(static_cast<RecordIndex>(i));
        else if (status == OaStatus::NonOA)
            groups[keys[i]].controls.push_back(static_cast<RecordIndex>(i));
    }

    CohortPair out;
    out.route = route;
    std::size_t n_route = 0;
    for (auto& [key, members] : groups) {
        if (members.oa.empty()) continue;
        n_route += members.oa.size();
        if (members.controls.empty()) {
            out.excluded_oa.insert(out.excluded_oa.end(), members.oa.begin(), members.oa.end());
            continue;
        }
        out.oa_sample.insert(out.oa_sample.end(), members.oa.begin(), members.oa.end());
        out.control_pool.insert(out.control_pool.end(), members.controls.begin(), members.controls.end());
        out.strata.emplace(key, std::move(members));
    }
    if (n_route == 0) throw EmptyOaSample(std::string("no ") + std::string(to_string(route)) + " records in corpus");
    std::sort(out.oa_sample.begin(), out.oa_sample.end());
    std::sort(out.control_pool.begin(), out.control_pool.end());
    std::sort(out.excluded_oa.begin(), out.excluded_oa.end());
    return out;
}

inline CohortPair build_cohort(const Corpus& corpus, Route route, const Stratifier& s = Stratifier{}) {
    const auto keys = corpus_keys(corpus, s);
    return build_cohort(corpus, keys, route);
}

/// Every non-OA record: the unmatched, unweighted comparison group.
inline std::vector<RecordIndex> naive_baseline(const Corpus& corpus) {
    std::vector<RecordIndex> out;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].oa_status == OaStatus::NonOA) out.push_back(static_cast<RecordIndex>(i));
    return out;
}

/// All OA records of a route, matched or not.
inline std::vector<RecordIndex> route_records(const Corpus& corpus, Route route) {
    std::vector<RecordIndex> out;
    const OaStatus wanted = status_of(route);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].oa_status == wanted) out.push_back(static_cast<RecordIndex>(i));
    return out;
}

/// Number of distinct non-OA records eligible for at least one route.
inline std::size_t double_candidates(std::span<const CohortPair> cohorts) {
    std::vector<RecordIndex> all;
    for (const auto& c : cohorts) all.insert(all.end(), c.control_pool.begin(), c.control_pool.end());
    std::sort(all.begin(), all.end());
    return static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
}

inline std::string format_cohort_summary(const CohortPair& c) {
    return "route=" + std::string(to_string(c.route)) + " oa_sample=" + std::to_string(c.oa_sample.size()) +
           " control_pool=" + std::to_string(c.control_pool.size()) +
           " excluded_oa=" + std::to_string(c.excluded_oa.size()) + " strata=" + std::to_string(c.strata.size());
}

}  // namespace oaca
