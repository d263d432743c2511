#pragma once

// Field-normalized citation scores and the OA citation advantage.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oaca/cohort.hpp"
#include "oaca/error.hpp"
#include "oaca/io.hpp"
#include "oaca/parallel.hpp"
#include "oaca/rake.hpp"
#include "oaca/record.hpp"

namespace oaca {

/// Normalization cell: discipline x publication year x document type.
struct CellKey {
    Discipline discipline{};
    int pub_year = 0;
    DocType doc_type = DocType::Article;

    friend bool operator==(const CellKey&, const CellKey&) = default;
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline CellKey cell_of(const PublicationRecord& r) { return {r.discipline, r.pub_year, r.doc_type}; }

inline std::string to_string(const CellKey& c) {
    return to_string(c.discipline) + "/" + std::to_string(c.pub_year) + "/" + std::string(to_string(c.doc_type));
}

struct CellReference {
    double expected_citations = 0.0;
    std::size_t n_records = 0;
};

class ReferenceTable {
public:
    void set(const CellKey& cell, CellReference ref) { cells_[cell] = ref; }

    const CellReference* find(const CellKey& cell) const {
        auto it = cells_.find(cell);
        return it == cells_.end() ? nullptr : &it->second;
    }

    double expected(const CellKey& cell) const {
        const auto* ref = find(cell);
        if (!ref) throw MissingCell("no reference value for cell " + to_string(cell));
        return ref->expected_citations;
    }

    /// Cells whose mean is zero: every publication in them is uncited.
    std::vector<CellKey> zero_cells() const {
        std::vector<CellKey> out;
        for (const auto& [cell, ref] : cells_)
            if (ref.expected_citations == 0.0) out.push_back(cell);
        return out;
    }

    std::size_t size() const noexcept { return cells_.size(); }
    const std::map<CellKey, CellReference>& cells() const noexcept { return cells_; }

    friend bool operator==(const ReferenceTable& a, const ReferenceTable& b) {
        if (a.cells_.size() != b.cells_.size()) return false;
        return std::equal(a.cells_.begin(), a.cells_.end(), b.cells_.begin(), [](const auto& x, const auto& y) {
            return x.first == y.first && x.second.expected_citations == y.second.expected_citations;
        });
    }

private:
    std::map<CellKey, CellReference> cells_;
};

/// Mean citations of all corpus publications (OA and non-OA) per cell.
inline ReferenceTable build_reference_table(const Corpus& corpus) {
    std::map<CellKey, std::pair<CompensatedSum, std::size_t>> acc;
    for (const auto& r : corpus) {
        auto& a = acc[cell_of(r)];
        a.first.add(static_cast<double>(r.citations));
        ++a.second;
    }
    ReferenceTable table;
    for (const auto& [cell, a] : acc) table.set(cell, {a.first.value() / static_cast<double>(a.second), a.second});
    return table;
}

inline std::string format_reference_csv(const ReferenceTable& table) {
    std::string out = "discipline,pub_year,doc_type,expected_citations,n_records\n";
    for (const auto& [cell, ref] : table.cells()) {
        out += to_string(cell.discipline) + "," + std::to_string(cell.pub_year) + "," +
               std::string(to_string(cell.doc_type)) + "," + format_double(ref.expected_citations) + "," +
               std::to_string(ref.n_records) + "\n";
    }
    return out;
}

/// Reads an external reference table. The n_records column is optional.
inline ReferenceTable parse_reference_csv(const std::string& text) {
    ReferenceTable table;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() < 4) throw MalformedLine(line_no, "reference table row needs 4 columns");
        auto d = parse_discipline(f[0]);
        if (!d) throw UnknownEnumValue("discipline", f[0]);
        long long year = 0;
        if (!parse_int(f[1], year)) throw MalformedLine(line_no, "bad pub_year");
        auto t = parse_doc_type(f[2]);
        if (!t) throw UnknownEnumValue("doc_type", f[2]);
        double expected = 0.0;
        if (!parse_double(f[3], expected) || !(expected >= 0.0))
            throw MalformedLine(line_no, "bad expected_citations");
        long long n = 0;
        if (f.size() > 4 && !f[4].empty() && !parse_int(f[4], n)) throw MalformedLine(line_no, "bad n_records");
        table.set({*d, static_cast<int>(year), *t}, {expected, static_cast<std::size_t>(n)});
    }
    return table;
}

inline double ncs(const PublicationRecord& r, const ReferenceTable& refs) {
    const auto cell = cell_of(r);
    const double expected = refs.expected(cell);
    if (expected <= 0.0) throw ZeroExpectedCitations("cell " + to_string(cell) + " has zero expected citations");
    return static_cast<double>(r.citations) / expected;
}

/// Mean of per-publication normalized scores; with weights, the weighted
/// mean sum(w * ncs) / sum(w). Weights must be aligned with `sample`.
inline double mncs(std::span<const RecordIndex> sample, const Corpus& corpus, const ReferenceTable& refs,
                   std::span<const double> weights = {}) {
    if (sample.empty()) throw EmptySample("MNCS of an empty sample");
    const bool weighted = !weights.empty();
    if (weighted && weights.size() != sample.size())
        throw WeightSampleMismatch("weights cover " + std::to_string(weights.size()) + " records, sample has " +
                                   std::to_string(sample.size()));
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double w = weighted ? weights[k] : 1.0;
        num.add(w * ncs(corpus[sample[k]], refs));
        den.add(w);
    }
    if (!(den.value() > 0.0)) throw WeightSampleMismatch("weights sum to zero");
    return num.value() / den.value();
}

inline double mncs(std::span<const RecordIndex> sample, const Corpus& corpus, const ReferenceTable& refs,
                   const WeightVector& weights) {
    if (!std::equal(sample.begin(), sample.end(), weights.ids.begin(), weights.ids.end()))
        throw WeightSampleMismatch("weight ids do not match the sample");
    return mncs(sample, corpus, refs, weights.weights);
}

/// Percentage advantage of the OA score over the control score.
inline double oaca(double mncs_oa, double mncs_ctrl) {
    if (!(mncs_ctrl > 0.0) || !std::isfinite(mncs_ctrl))
        throw ZeroDenominator("control MNCS must be positive, got " + format_double(mncs_ctrl));
    return 100.0 * (mncs_oa - mncs_ctrl) / mncs_ctrl;
}

enum class SliceKind { Overall, PerYear, PerDiscipline, PerDisciplinePeriod };

inline std::string_view to_string(SliceKind k) {
    switch (k) {
        case SliceKind::Overall: return "overall";
        case SliceKind::PerYear: return "per_year";
        case SliceKind::PerDiscipline: return "per_discipline";
        case SliceKind::PerDisciplinePeriod: return "per_discipline_period";
    }
    return "overall";
}

inline std::optional<SliceKind> parse_slice_kind(std::string_view s) {
    if (s == "overall") return SliceKind::Overall;
    if (s == "per_year") return SliceKind::PerYear;
    if (s == "per_discipline") return SliceKind::PerDiscipline;
    if (s == "per_discipline_period") return SliceKind::PerDisciplinePeriod;
    return std::nullopt;
}

struct Period {
    int first = 0;
    int last = 0;

    bool contains(int year) const noexcept { return year >= first && year <= last; }
    std::string label() const { return std::to_string(first) + "-" + std::to_string(last); }
    friend bool operator==(const Period&, const Period&) = default;
};

/// "2010-2012,2018-2020" -> two periods.
inline std::vector<Period> parse_periods(std::string_view text) {
    std::vector<Period> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        const auto item = text.substr(start, end - start);
        start = end + 1;
        if (item.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto dash = item.find('-');
        long long a = 0, b = 0;
        if (dash == std::string_view::npos || !parse_int(item.substr(0, dash), a) || !parse_int(item.substr(dash + 1), b) ||
            a > b)
            throw InvalidConfig("bad period '" + std::string(item) + "', expected YYYY-YYYY");
        out.push_back({static_cast<int>(a), static_cast<int>(b)});
        if (end == text.size()) break;
    }
    return out;
}

struct OacaResult {
    Route route = Route::FullGoldOA;
    SliceKind slice = SliceKind::Overall;
    /// "all", a year, a discipline code, or "<discipline>:<period>".
    std::string label = "all";
    double mncs_oa = 0.0;
    double mncs_ctrl = 0.0;
    double oaca_pct = 0.0;
    /// Raked matched controls (true) or the naive all-non-OA baseline (false).
    bool adjusted = false;
    double n_oa = 0.0;
    double effective_n_ctrl = 0.0;

    friend bool operator==(const OacaResult&, const OacaResult&) = default;
};

enum class Baseline { Naive, Raked, Both };

inline std::optional<Baseline> parse_baseline(std::string_view s) {
    if (s == "naive") return Baseline::Naive;
    if (s == "raked") return Baseline::Raked;
    if (s == "both") return Baseline::Both;
    return std::nullopt;
}

struct ReportSlicing {
    bool overall = true;
    bool per_year = true;
    bool per_discipline = true;
    std::vector<Period> periods{{2010, 2012}, {2018, 2020}};
    Baseline baseline = Baseline::Both;
};

/// Matched cohort of one route together with its control weights, aligned
/// with cohort.control_pool.
struct CalibratedCohort {
    CohortPair cohort;
    WeightVector weights;
};

struct OacaReport {
    std::vector<OacaResult> rows;
    /// Slices skipped because a side was empty or uncited.
    std::vector<std::string> warnings;
};

namespace detail {

struct Slice {
    SliceKind kind;
    std::string label;
    std::function<bool(const PublicationRecord&)> contains;
};

inline std::vector<Slice> make_slices(const Corpus& corpus, const ReportSlicing& slicing) {
    std::vector<Slice> out;
    if (slicing.overall) out.push_back({SliceKind::Overall, "all", [](const PublicationRecord&) { return true; }});
    std::vector<int> years;
    std::vector<bool> disciplines(kDisciplineCount, false);
    for (const auto& r : corpus) {
        years.push_back(r.pub_year);
        disciplines[r.discipline.index] = true;
    }
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());
    if (slicing.per_year)
        for (int y : years)
            out.push_back({SliceKind::PerYear, std::to_string(y), [y](const PublicationRecord& r) { return r.pub_year == y; }});
    if (slicing.per_discipline)
        for (auto d : all_disciplines())
            if (disciplines[d.index])
                out.push_back({SliceKind::PerDiscipline, to_string(d),
                               [d](const PublicationRecord& r) { return r.discipline == d; }});
    for (auto d : all_disciplines()) {
        if (!disciplines[d.index]) continue;
        for (const auto& p : slicing.periods)
            out.push_back({SliceKind::PerDisciplinePeriod, to_string(d) + ":" + p.label(),
                           [d, p](const PublicationRecord& r) { return r.discipline == d && p.contains(r.pub_year); }});
    }
    return out;
}

/// Normalized score of every corpus record. NaN marks records whose cell is
/// missing from the table (an error once the record is used); records of an
/// uncited-only cell have no defined score and are flagged in `undefined`.
struct Scores {
    std::vector<double> value;
    std::vector<char> undefined;
    std::size_t n_undefined = 0;
};

inline Scores all_scores(const Corpus& corpus, const ReferenceTable& refs) {
    Scores s;
    s.value.resize(corpus.size());
    s.undefined.assign(corpus.size(), 0);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto* ref = refs.find(cell_of(corpus[i]));
        if (!ref) {
            s.value[i] = std::numeric_limits<double>::quiet_NaN();
        } else if (ref->expected_citations > 0.0) {
            s.value[i] = static_cast<double>(corpus[i].citations) / ref->expected_citations;
        } else {
            s.value[i] = 0.0;
            s.undefined[i] = 1;
            ++s.n_undefined;
        }
    }
    return s;
}

inline double weighted_score_mean(std::span<const RecordIndex> sample, std::span<const double> weights,
                                  const Scores& scores, const Corpus& corpus, const ReferenceTable& refs) {
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double score = scores.value[sample[k]];
        if (std::isnan(score)) ncs(corpus[sample[k]], refs);  // throws MissingCell
        const double w = weights.empty() ? 1.0 : weights[k];
        num.add(w * score);
        den.add(w);
    }
    return num.value() / den.value();
}

inline std::optional<OacaResult> slice_result(const Corpus& corpus, const ReferenceTable& refs,
                                              const Scores& scores, std::span<const RecordIndex> oa,
                                              std::span<const RecordIndex> ctrl, std::span<const double> ctrl_weights,
                                              const Slice& slice, Route route, bool adjusted,
                                              std::vector<std::string>& warnings) {
    std::vector<RecordIndex> oa_in;
    for (auto i : oa)
        if (!scores.undefined[i] && slice.contains(corpus[i])) oa_in.push_back(i);
    std::vector<RecordIndex> ctrl_in;
    std::vector<double> w_in;
    for (std::size_t k = 0; k < ctrl.size(); ++k) {
        if (scores.undefined[ctrl[k]] || !slice.contains(corpus[ctrl[k]])) continue;
        ctrl_in.push_back(ctrl[k]);
        w_in.push_back(ctrl_weights.empty() ? 1.0 : ctrl_weights[k]);
    }
    const std::string where = std::string(to_string(route)) + " " + std::string(to_string(slice.kind)) + " " +
                              slice.label + (adjusted ? " raked" : " naive");
    CompensatedSum mass;
    for (double w : w_in) mass.add(w);
    if (oa_in.empty() || ctrl_in.empty() || !(mass.value() > 0.0)) {
        if (slice.kind == SliceKind::Overall) throw EmptySample(where + ": empty side");
        warnings.push_back(where + ": empty side, skipped");
        return std::nullopt;
    }
    OacaResult r;
    r.route = route;
    r.slice = slice.kind;
    r.label = slice.label;
    r.adjusted = adjusted;
    r.mncs_oa = weighted_score_mean(oa_in, {}, scores, corpus, refs);
    r.mncs_ctrl = weighted_score_mean(ctrl_in, w_in, scores, corpus, refs);
    r.n_oa = static_cast<double>(oa_in.size());
    r.effective_n_ctrl = mass.value();
    if (r.mncs_ctrl <= 0.0) {
        if (slice.kind == SliceKind::Overall) throw ZeroDenominator(where + ": control MNCS is zero");
        warnings.push_back(where + ": control MNCS is zero, skipped");
        return std::nullopt;
    }
    r.oaca_pct = oaca(r.mncs_oa, r.mncs_ctrl);
    return r;
}

}  // namespace detail

/// Adjusted (raked matched controls) and naive (all non-OA, unweighted)
/// OACA for every route and slice. Rows are ordered by route, slice, label,
/// naive before adjusted. Records of uncited-only cells are left out of both
/// sides; a cell missing from `refs` is an error.
inline OacaReport oaca_report(const Corpus& corpus, std::span<const CalibratedCohort> cohorts,
                              const ReferenceTable& refs, const ReportSlicing& slicing = {}) {
    OacaReport report;
    const auto slices = detail::make_slices(corpus, slicing);
    const auto naive_ctrl = naive_baseline(corpus);
    const auto scores = detail::all_scores(corpus, refs);
    if (scores.n_undefined)
        report.warnings.push_back(std::to_string(scores.n_undefined) +
                                  " records in uncited-only normalization cells excluded");
    for (const auto& cc : cohorts) {
        const Route route = cc.cohort.route;
        if (slicing.baseline != Baseline::Raked && naive_ctrl.empty())
            throw ZeroDenominator("corpus has no non-OA records for the naive baseline");
        if (cc.weights.ids != cc.cohort.control_pool)
            throw WeightSampleMismatch("weights are not aligned with the control pool");
        const auto all_oa = route_records(corpus, route);
        for (const auto& slice : slices) {
            if (slicing.baseline != Baseline::Raked) {
                if (auto r = detail::slice_result(corpus, refs, scores, all_oa, naive_ctrl, {}, slice, route, false,
                                                  report.warnings))
                    report.rows.push_back(*r);
            }
            if (slicing.baseline != Baseline::Naive) {
                if (auto r = detail::slice_result(corpus, refs, scores, cc.cohort.oa_sample, cc.cohort.control_pool,
                                                  cc.weights.weights, slice, route, true, report.warnings))
                    report.rows.push_back(*r);
            }
        }
    }
    return report;
}

inline std::string format_results_csv(std::span<const OacaResult> rows) {
    std::string out = "route,slice,label,adjusted,mncs_oa,mncs_ctrl,oaca_pct,n_oa,effective_n_ctrl\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.route)) + "," + std::string(to_string(r.slice)) + "," + csv_field(r.label) + "," +
               (r.adjusted ? "true" : "false") + "," + format_double(r.mncs_oa) + "," + format_double(r.mncs_ctrl) +
               "," + format_double(r.oaca_pct) + "," + format_double(r.n_oa) + "," +
               format_double(r.effective_n_ctrl) + "\n";
    }
    return out;
}

inline std::vector<OacaResult> parse_results_csv(const std::string& text) {
    std::vector<OacaResult> rows;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9) throw MalformedLine(line_no, "results row needs 9 columns");
        OacaResult r;
        auto route = parse_route(f[0]);
        if (!route) throw UnknownEnumValue("route", f[0]);
        r.route = *route;
        auto slice = parse_slice_kind(f[1]);
        if (!slice) throw UnknownEnumValue("slice", f[1]);
        r.slice = *slice;
        r.label = f[2];
        if (f[3] != "true" && f[3] != "false") throw UnknownEnumValue("adjusted", f[3]);
        r.adjusted = f[3] == "true";
        double* targets[] = {&r.mncs_oa, &r.mncs_ctrl, &r.oaca_pct, &r.n_oa, &r.effective_n_ctrl};
        for (int k = 0; k < 5; ++k)
            if (!parse_double(f[4 + static_cast<std::size_t>(k)], *targets[k]))
                throw MalformedLine(line_no, "bad number '" + f[4 + static_cast<std::size_t>(k)] + "'");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace oaca
