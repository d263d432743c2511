#pragma once

// JSON Lines reader and writer for publication corpora.

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "oaca/error.hpp"
#include "oaca/io.hpp"
#include "oaca/record.hpp"

namespace oaca {

struct ParseOptions {
    YearWindow window{};
    /// Collect per-line errors instead of rejecting the whole stream.
    bool skip_bad_lines = false;
};

struct LineError {
    std::size_t line_no = 0;
    std::string kind;
    std::string message;
};

struct ParseResult {
    Corpus corpus;
    std::vector<LineError> errors;  // empty unless skip_bad_lines
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* name, std::size_t line_no) {
    auto it = obj.find(name);
    if (it == obj.end()) throw MalformedLine(line_no, std::string("missing field '") + name + "'");
    return *it;
}

inline long long require_int(const nlohmann::json& obj, const char* name, std::size_t line_no) {
    const auto& v = require_field(obj, name, line_no);
    if (!v.is_number_integer()) throw MalformedLine(line_no, std::string("field '") + name + "' must be an integer");
    if (v.is_number_unsigned()) {
        auto u = v.get<unsigned long long>();
        if (u > static_cast<unsigned long long>(INT64_MAX)) throw MalformedLine(line_no, std::string("field '") + name + "' out of range");
        return static_cast<long long>(u);
    }
    return v.get<long long>();
}

inline bool require_bool(const nlohmann::json& obj, const char* name, std::size_t line_no) {
    const auto& v = require_field(obj, name, line_no);
    if (!v.is_boolean()) throw MalformedLine(line_no, std::string("field '") + name + "' must be a boolean");
    return v.get<bool>();
}

inline std::string require_string(const nlohmann::json& obj, const char* name, std::size_t line_no) {
    const auto& v = require_field(obj, name, line_no);
    if (!v.is_string()) throw MalformedLine(line_no, std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

inline PublicationRecord parse_record_line(const std::string& line, std::size_t line_no, YearWindow window) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedLine(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw MalformedLine(line_no, "record must be a JSON object");

    PublicationRecord r;
    r.id = require_string(obj, "id", line_no);
    if (r.id.empty()) throw MalformedLine(line_no, "empty id");

    const long long year = require_int(obj, "pub_year", line_no);
    if (year < INT32_MIN || year > INT32_MAX) throw MalformedLine(line_no, "pub_year out of range");
    r.pub_year = static_cast<int>(year);

    const auto doc_type = require_string(obj, "doc_type", line_no);
    auto dt = parse_doc_type(doc_type);
    if (!dt) throw UnknownEnumValue("doc_type", doc_type);
    r.doc_type = *dt;

    const auto discipline = require_string(obj, "discipline", line_no);
    auto d = parse_discipline(discipline);
    if (!d) throw UnknownEnumValue("discipline", discipline);
    r.discipline = *d;

    const auto& impact = require_field(obj, "journal_impact", line_no);
    if (!impact.is_number()) throw MalformedLine(line_no, "field 'journal_impact' must be a number");
    r.journal_impact = impact.get<double>();
    if (!std::isfinite(r.journal_impact) || r.journal_impact < 0.0)
        throw MalformedLine(line_no, "journal_impact must be finite and nonnegative");

    const long long countries = require_int(obj, "n_countries", line_no);
    if (countries < 1 || countries > INT32_MAX) throw MalformedLine(line_no, "n_countries must be >= 1");
    r.n_countries = static_cast<int>(countries);

    const long long fundings = require_int(obj, "n_fundings", line_no);
    if (fundings < 0 || fundings > INT32_MAX) throw MalformedLine(line_no, "n_fundings must be >= 0");
    r.n_fundings = static_cast<int>(fundings);

    r.has_erc_funding = require_bool(obj, "has_erc_funding", line_no);
    r.has_eu27_address = require_bool(obj, "has_eu27_address", line_no);
    r.cited_by_patent = require_bool(obj, "cited_by_patent", line_no);

    const auto status = require_string(obj, "oa_status", line_no);
    auto st = parse_oa_status(status);
    if (!st) throw UnknownEnumValue("oa_status", status);
    r.oa_status = *st;

    r.citations = require_int(obj, "citations", line_no);
    if (r.citations < 0) throw MalformedLine(line_no, "citations must be >= 0");

    if (!window.contains(r.pub_year)) throw OutOfWindowYear(r.id, r.pub_year);
    return r;
}

inline bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
}

inline std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const MalformedLine*>(&e)) return "MalformedLine";
    if (dynamic_cast<const DuplicateId*>(&e)) return "DuplicateId";
    if (dynamic_cast<const OutOfWindowYear*>(&e)) return "OutOfWindowYear";
    if (dynamic_cast<const UnknownEnumValue*>(&e)) return "UnknownEnumValue";
    return "DataError";
}

}  // namespace detail

/// Reads one record object per line. In strict mode the first bad line
/// rejects the whole stream by throwing; blank lines are ignored.
inline ParseResult parse_publications(std::istream& in, const ParseOptions& options = {}) {
    ParseResult result;
    std::vector<PublicationRecord> records;
    std::unordered_set<std::string> seen;
    Fnv1a digest;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        digest.update(line);
        digest.update("\n");
        if (detail::is_blank(line)) continue;
        try {
            auto rec = detail::parse_record_line(line, line_no, options.window);
            if (!seen.insert(rec.id).second) throw DuplicateId(rec.id);
            records.push_back(std::move(rec));
        } catch (const DataError& e) {
            if (!options.skip_bad_lines) throw;
            result.errors.push_back({line_no, detail::error_kind(e), e.what()});
        }
    }
    result.corpus = Corpus(std::move(records), digest.hex(), options.window);
    return result;
}

inline ParseResult parse_publications(const std::string& text, const ParseOptions& options = {}) {
    std::istringstream in(text);
    return parse_publications(in, options);
}

inline nlohmann::ordered_json to_json(const PublicationRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["pub_year"] = r.pub_year;
    j["doc_type"] = to_string(r.doc_type);
    j["discipline"] = to_string(r.discipline);
    j["journal_impact"] = r.journal_impact;
    j["n_countries"] = r.n_countries;
    j["n_fundings"] = r.n_fundings;
    j["has_erc_funding"] = r.has_erc_funding;
    j["has_eu27_address"] = r.has_eu27_address;
    j["cited_by_patent"] = r.cited_by_patent;
    j["oa_status"] = to_string(r.oa_status);
    j["citations"] = r.citations;
    return j;
}

inline void serialize_publications(const Corpus& corpus, std::ostream& out) {
    for (const auto& r : corpus) out << to_json(r).dump() << '\n';
}

inline std::string serialize_publications(const Corpus& corpus) {
    std::ostringstream out;
    serialize_publications(corpus, out);
    return out.str();
}

/// Sidecar report for --skip-bad-lines: one CSV row per rejected line.
inline std::string format_line_errors(const std::vector<LineError>& errors) {
    std::string out = "line_no,error,message\n";
    for (const auto& e : errors)
        out += std::to_string(e.line_no) + "," + e.kind + "," + csv_field(e.message) + "\n";
    return out;
}

}  // namespace oaca
