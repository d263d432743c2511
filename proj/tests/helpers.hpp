#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oaca/oaca.hpp"

namespace oaca::test {

inline PublicationRecord make_record(std::string id, int year = 2015, const char* discipline = "LS6",
                                     OaStatus status = OaStatus::NonOA, std::int64_t citations = 3) {
    PublicationRecord r;
    r.id = std::move(id);
    r.pub_year = year;
    r.discipline = *parse_discipline(discipline);
    r.journal_impact = 1.0;
    r.oa_status = status;
    r.citations = citations;
    return r;
}

inline std::string json_line(const PublicationRecord& r) { return to_json(r).dump(); }

inline Corpus corpus_of(std::vector<PublicationRecord> records) {
    return Corpus(std::move(records), "test", YearWindow{});
}

/// A fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("oaca-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace oaca::test
