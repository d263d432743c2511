#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oaca/error.hpp"

namespace oaca {

enum class DocType : std::uint8_t { Article, Review, Proceedings };
enum class OaStatus : std::uint8_t { FullGoldOA, HybridGoldOA, NonOA };

/// The two gold routes that get an OA sample of their own.
enum class Route : std::uint8_t { FullGoldOA, HybridGoldOA };

inline constexpr std::size_t kDocTypeCount = 3;
inline constexpr std::size_t kDisciplineCount = 27;

/// ERC panel, stored as a dense index: LS1..LS9 -> 0..8, PE1..PE11 -> 9..19,
/// SH1..SH7 -> 20..26.
struct Discipline {
    std::uint8_t index = 0;

    friend bool operator==(Discipline, Discipline) = default;
    friend auto operator<=>(Discipline, Discipline) = default;
};

inline std::string to_string(Discipline d) {
    if (d.index < 9) return "LS" + std::to_string(d.index + 1);
    if (d.index < 20) return "PE" + std::to_string(d.index - 9 + 1);
    return "SH" + std::to_string(d.index - 20 + 1);
}

inline std::optional<Discipline> parse_discipline(std::string_view s) {
    if (s.size() < 3 || s.size() > 4) return std::nullopt;
    const auto domain = s.substr(0, 2);
    int n = 0;
    for (char c : s.substr(2)) {
        if (c < '0' || c > '9') return std::nullopt;
        n = n * 10 + (c - '0');
    }
    if (s[2] == '0') return std::nullopt;
    if (domain == "LS" && n >= 1 && n <= 9) return Discipline{static_cast<std::uint8_t>(n - 1)};
    if (domain == "PE" && n >= 1 && n <= 11) return Discipline{static_cast<std::uint8_t>(9 + n - 1)};
    if (domain == "SH" && n >= 1 && n <= 7) return Discipline{static_cast<std::uint8_t>(20 + n - 1)};
    return std::nullopt;
}

inline std::array<Discipline, kDisciplineCount> all_disciplines() {
    std::array<Discipline, kDisciplineCount> out{};
    for (std::size_t i = 0; i < kDisciplineCount; ++i) out[i] = Discipline{static_cast<std::uint8_t>(i)};
    return out;
}

inline std::string_view to_string(DocType t) {
    switch (t) {
        case DocType::Article: return "article";
        case DocType::Review: return "review";
        case DocType::Proceedings: return "proceedings";
    }
    return "article";
}

inline std::optional<DocType> parse_doc_type(std::string_view s) {
    if (s == "article") return DocType::Article;
    if (s == "review") return DocType::Review;
    if (s == "proceedings") return DocType::Proceedings;
    return std::nullopt;
}

inline std::string_view to_string(OaStatus s) {
    switch (s) {
        case OaStatus::FullGoldOA: return "gold_full";
        case OaStatus::HybridGoldOA: return "gold_hybrid";
        case OaStatus::NonOA: return "non_oa";
    }
    return "non_oa";
}

inline std::optional<OaStatus> parse_oa_status(std::string_view s) {
    if (s == "gold_full") return OaStatus::FullGoldOA;
    if (s == "gold_hybrid") return OaStatus::HybridGoldOA;
    if (s == "non_oa") return OaStatus::NonOA;
    return std::nullopt;
}

inline std::string_view to_string(Route r) {
    return r == Route::FullGoldOA ? "gold_full" : "gold_hybrid";
}

inline std::optional<Route> parse_route(std::string_view s) {
    if (s == "gold_full" || s == "full") return Route::FullGoldOA;
    if (s == "gold_hybrid" || s == "hybrid") return Route::HybridGoldOA;
    return std::nullopt;
}

inline constexpr OaStatus status_of(Route r) {
    return r == Route::FullGoldOA ? OaStatus::FullGoldOA : OaStatus::HybridGoldOA;
}

inline constexpr std::array<Route, 2> kRoutes{Route::FullGoldOA, Route::HybridGoldOA};

struct PublicationRecord {
    std::string id;
    int pub_year = 0;
    DocType doc_type = DocType::Article;
    Discipline discipline{};
    double journal_impact = 0.0;
    int n_countries = 1;
    int n_fundings = 0;
    bool has_erc_funding = false;
    bool has_eu27_address = false;
    bool cited_by_patent = false;
    OaStatus oa_status = OaStatus::NonOA;
    std::int64_t citations = 0;

    friend bool operator==(const PublicationRecord&, const PublicationRecord&) = default;
};

/// Inclusive range of publication years.
struct YearWindow {
    int first = 2010;
    int last = 2020;

    bool contains(int year) const noexcept { return year >= first && year <= last; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(last - first + 1); }

    friend bool operator==(YearWindow, YearWindow) = default;
};

/// Index of a record inside its Corpus. Samples, pools and weights refer to
/// records by position; the string id is recovered through the corpus.
using RecordIndex = std::uint32_t;

/// Loaded publications in input order. Never mutated once constructed.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<PublicationRecord> records, std::string source_digest, YearWindow window)
        : records_(std::move(records)), digest_(std::move(source_digest)), window_(window) {
        by_id_.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (!by_id_.emplace(records_[i].id, static_cast<RecordIndex>(i)).second)
                throw DuplicateId(records_[i].id);
        }
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const PublicationRecord& operator[](std::size_t i) const { return records_[i]; }
    std::span<const PublicationRecord> records() const noexcept { return records_; }
    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }

    const std::string& source_digest() const noexcept { return digest_; }
    YearWindow window() const noexcept { return window_; }

    /// Field-for-field equality of the records and the window; the digest is
    /// a property of the source bytes and is not compared.
    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.window_ == b.window_ && a.records_ == b.records_;
    }

    std::optional<RecordIndex> find(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<PublicationRecord> records_;
    std::unordered_map<std::string, RecordIndex> by_id_;
    std::string digest_;
    YearWindow window_{};
};

}  // namespace oaca
