#pragma once

// Class systems for the eight matching features and the composite key.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "oaca/error.hpp"
#include "oaca/record.hpp"

namespace oaca {

/// Journal impact class 1..5 over [0, 0.8), [0.8, 1.2), [1.2, 1.8), [1.8, 2.2), [2.2, inf).
inline int classify_impact(double journal_impact) {
    if (!std::isfinite(journal_impact)) throw NonFiniteInput("journal_impact is not finite");
    if (journal_impact < 0.0) throw DomainViolation("journal_impact must be nonnegative");
    if (journal_impact < 0.8) return 1;
    if (journal_impact < 1.2) return 2;
    if (journal_impact < 1.8) return 3;
    if (journal_impact < 2.2) return 4;
    return 5;
}

enum class CountKind { Countries, Fundings };

/// Counts are capped at class 5 ("5 or more"). Countries start at 1. Fundings
/// get their own class 0 unless `fundings_zero_class` is off, in which case
/// unfunded records fold into class 1.
inline int classify_count(long long n, CountKind kind, bool fundings_zero_class = true) {
    if (kind == CountKind::Countries) {
        if (n < 1) throw DomainViolation("country count must be >= 1, got " + std::to_string(n));
        return n >= 5 ? 5 : static_cast<int>(n);
    }
    if (n < 0) throw DomainViolation("funding count must be >= 0, got " + std::to_string(n));
    if (n == 0 && !fundings_zero_class) return 1;
    return n >= 5 ? 5 : static_cast<int>(n);
}

enum class Feature : std::uint8_t { Year, Discipline, Impact, Countries, Fundings, Erc, Eu27, Patent };

inline constexpr std::array<Feature, 8> kFeatures{Feature::Year,      Feature::Discipline, Feature::Impact,
                                                   Feature::Countries, Feature::Fundings,   Feature::Erc,
                                                   Feature::Eu27,      Feature::Patent};

inline std::string_view to_string(Feature f) {
    switch (f) {
        case Feature::Year: return "pub_year";
        case Feature::Discipline: return "discipline";
        case Feature::Impact: return "impact_class";
        case Feature::Countries: return "countries_class";
        case Feature::Fundings: return "fundings_class";
        case Feature::Erc: return "erc_funding";
        case Feature::Eu27: return "eu27_address";
        case Feature::Patent: return "patent_citation";
    }
    return "";
}

struct StratumKey {
    int year = 0;
    Discipline discipline{};
    std::uint8_t impact_class = 1;
    std::uint8_t countries_class = 1;
    std::uint8_t fundings_class = 0;
    bool erc = false;
    bool eu27 = false;
    bool patent = false;

    friend bool operator==(const StratumKey&, const StratumKey&) = default;
    friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

/// Pipe-separated audit form, e.g. "2015|LS6|5|2|1|Y|Y|N".
inline std::string to_string(const StratumKey& k) {
    auto yn = [](bool b) { return b ? "Y" : "N"; };
    std::string s = std::to_string(k.year);
    s += '|';
    s += to_string(k.discipline);
    s += '|' + std::to_string(k.impact_class);
    s += '|' + std::to_string(k.countries_class);
    s += '|' + std::to_string(k.fundings_class);
    s += '|';
    s += yn(k.erc);
    s += '|';
    s += yn(k.eu27);
    s += '|';
    s += yn(k.patent);
    return s;
}

/// Maps records to strata and strata to per-feature categories. Categories are
/// 0-based and dense so they can index margin tables directly.
class Stratifier {
public:
    Stratifier() = default;
    explicit Stratifier(YearWindow window, bool fundings_zero_class = true)
        : window_(window), fundings_zero_class_(fundings_zero_class) {}

    YearWindow window() const noexcept { return window_; }
    bool fundings_zero_class() const noexcept { return fundings_zero_class_; }

    StratumKey key(const PublicationRecord& r) const {
        StratumKey k;
        k.year = r.pub_year;
        k.discipline = r.discipline;
        k.impact_class = static_cast<std::uint8_t>(classify_impact(r.journal_impact));
        k.countries_class = static_cast<std::uint8_t>(classify_count(r.n_countries, CountKind::Countries));
        k.fundings_class =
            static_cast<std::uint8_t>(classify_count(r.n_fundings, CountKind::Fundings, fundings_zero_class_));
        k.erc = r.has_erc_funding;
        k.eu27 = r.has_eu27_address;
        k.patent = r.cited_by_patent;
        return k;
    }

    std::size_t category_count(Feature f) const noexcept {
        switch (f) {
            case Feature::Year: return window_.size();
            case Feature::Discipline: return kDisciplineCount;
            case Feature::Impact: return 5;
            case Feature::Countries: return 5;
            case Feature::Fundings: return fundings_zero_class_ ? 6 : 5;
            case Feature::Erc:
            case Feature::Eu27:
            case Feature::Patent: return 2;
        }
        return 0;
    }

    std::size_t category(const StratumKey& k, Feature f) const {
        switch (f) {
            case Feature::Year: {
                if (!window_.contains(k.year)) throw DomainViolation("year " + std::to_string(k.year) + " outside window");
                return static_cast<std::size_t>(k.year - window_.first);
            }
            case Feature::Discipline: return k.discipline.index;
            case Feature::Impact: return k.impact_class - 1u;
            case Feature::Countries: return k.countries_class - 1u;
            case Feature::Fundings: return fundings_zero_class_ ? k.fundings_class : k.fundings_class - 1u;
            case Feature::Erc: return k.erc ? 1 : 0;
            case Feature::Eu27: return k.eu27 ? 1 : 0;
            case Feature::Patent: return k.patent ? 1 : 0;
        }
        return 0;
    }

    std::string category_label(Feature f, std::size_t c) const {
        switch (f) {
            case Feature::Year: return std::to_string(window_.first + static_cast<int>(c));
            case Feature::Discipline: return to_string(Discipline{static_cast<std::uint8_t>(c)});
            case Feature::Impact:
            case Feature::Countries: return std::to_string(c + 1);
            case Feature::Fundings: return std::to_string(fundings_zero_class_ ? c : c + 1);
            case Feature::Erc:
            case Feature::Eu27:
            case Feature::Patent: return c ? "Y" : "N";
        }
        return "";
    }

    /// Number of distinct keys the class systems admit.
    std::size_t key_space_size() const noexcept {
        std::size_t n = 1;
        for (auto f : kFeatures) n *= category_count(f);
        return n;
    }

    /// Dense mixed-radix index in [0, key_space_size()).
    std::size_t key_index(const StratumKey& k) const {
        std::size_t idx = 0;
        for (auto f : kFeatures) idx = idx * category_count(f) + category(k, f);
        return idx;
    }

private:
    YearWindow window_{};
    bool fundings_zero_class_ = true;
};

inline StratumKey stratum_key(const PublicationRecord& r, const Stratifier& s = Stratifier{}) { return s.key(r); }

/// Record counts per OA status (indexed by OaStatus) for every non-empty stratum.
using StratumTally = std::map<StratumKey, std::array<std::size_t, 3>>;

inline StratumTally tally_strata(const Corpus& corpus, const Stratifier& s) {
    StratumTally tally;
    for (const auto& r : corpus) ++tally[s.key(r)][static_cast<std::size_t>(r.oa_status)];
    return tally;
}

inline std::string format_strata_csv(const StratumTally& tally) {
    std::string out = "stratum_key,n_gold_full,n_gold_hybrid,n_non_oa\n";
    for (const auto& [key, n] : tally) {
        out += to_string(key);
        for (auto c : n) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

}  // namespace oaca

template <>
struct std::hash<oaca::StratumKey> {
    std::size_t operator()(const oaca::StratumKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(k.year) * 1000003ULL;
        h = (h ^ k.discipline.index) * 0x100000001b3ULL;
        h = (h ^ k.impact_class) * 0x100000001b3ULL;
        h = (h ^ k.countries_class) * 0x100000001b3ULL;
        h = (h ^ k.fundings_class) * 0x100000001b3ULL;
        h = (h ^ (static_cast<unsigned>(k.erc) | static_cast<unsigned>(k.eu27) << 1 |
                  static_cast<unsigned>(k.patent) << 2)) *
            0x100000001b3ULL;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};
