#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "helpers.hpp"

using namespace oaca;
using oaca::test::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(OACA_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("ingest").code, 1);  // --in required
    EXPECT_EQ(run("simulate --n notanumber").code, 1);
    EXPECT_EQ(run("report --in x.csv --figure pie --out y").code, 2);  // missing input is a data error
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, SimulateIngestStratifyMatch) {
    TempDir dir("cli");
    const auto corpus = dir / "c.jsonl";
    ASSERT_EQ(run("--seed 3 --quiet simulate --preset confounded-null --n 4000 --out " + q(corpus)).code, 0);
    const auto ing = run("ingest --in " + q(corpus));
    EXPECT_EQ(ing.code, 0) << ing.out;
    EXPECT_NE(ing.out.find("records=4000"), std::string::npos);

    const auto strata = dir / "strata.csv";
    EXPECT_EQ(run("stratify --in " + q(corpus) + " --out " + q(strata)).code, 0);
    EXPECT_EQ(read_file(strata).rfind("stratum_key,n_gold_full,n_gold_hybrid,n_non_oa\n", 0), 0u);

    const auto m = run("match --in " + q(corpus));
    EXPECT_EQ(m.code, 0);
    EXPECT_NE(m.out.find("route=gold_full"), std::string::npos);
    EXPECT_NE(m.out.find("route=gold_hybrid"), std::string::npos);
    EXPECT_NE(m.out.find("double_candidates="), std::string::npos);
}

TEST(Cli, DataErrorsExitTwo) {
    TempDir dir("cli");
    const auto bad = dir / "bad.jsonl";
    write_file_atomic(bad, "{\"id\": \"W1\"}\n");
    EXPECT_EQ(run("ingest --in " + q(bad)).code, 2);
    EXPECT_EQ(run("ingest --in " + q(dir / "missing.jsonl")).code, 2);

    SimConfig c;
    c.n_records = 50;
    auto text = serialize_publications(generate(c));
    text += text.substr(0, text.find('\n') + 1);  // duplicate id
    write_file_atomic(bad, text);
    const auto dup = run("ingest --in " + q(bad));
    EXPECT_EQ(dup.code, 2);
    EXPECT_NE(dup.out.find("duplicate id: P0"), std::string::npos);
    const auto errors = dir / "errors.csv";
    EXPECT_EQ(run("ingest --skip-bad-lines --errors-out " + q(errors) + " --in " + q(bad)).code, 0);
    EXPECT_NE(read_file(errors).find("DuplicateId"), std::string::npos);

    const auto cfg = dir / "sim.json";
    write_file_atomic(cfg, "{\"dispersion\": -1}");
    const auto inv = run("--config " + q(cfg) + " simulate");
    EXPECT_EQ(inv.code, 2);
    EXPECT_NE(inv.out.find("dispersion"), std::string::npos);
}

TEST(Cli, RakeReportsAndNonConvergenceExitsThree) {
    TempDir dir("cli");
    const auto corpus = dir / "c.jsonl";
    ASSERT_EQ(run("--quiet simulate --preset paper-shape --n 20000 --out " + q(corpus)).code, 0);
    const auto weights = dir / "w.csv", report = dir / "r.json";
    EXPECT_EQ(run("rake --route full --in " + q(corpus) + " --out " + q(weights) + " --report " + q(report)).code, 0);
    const auto j = nlohmann::json::parse(read_file(report));
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_EQ(read_file(weights).rfind("id,weight\n", 0), 0u);

    const auto r = run("rake --route hybrid --max-iterations 1 --in " + q(corpus) + " --out " + q(weights) +
                       " --report " + q(report));
    EXPECT_EQ(r.code, 3);
    EXPECT_FALSE(nlohmann::json::parse(read_file(report))["converged"].get<bool>());

    const auto results = dir / "results.csv";
    EXPECT_EQ(run("oaca --max-iterations 1 --in " + q(corpus) + " --out " + q(results)).code, 3);
    EXPECT_EQ(run("oaca --max-iterations 1 --allow-nonconverged --in " + q(corpus) + " --out " + q(results)).code, 0);
}

TEST(Cli, OacaAndReport) {
    TempDir dir("cli");
    const auto corpus = dir / "c.jsonl";
    ASSERT_EQ(run("--quiet --seed 8 simulate --preset paper-shape --n 20000 --out " + q(corpus)).code, 0);
    const auto results = dir / "results.csv", summary = dir / "summary.json";
    const auto o = run("oaca --in " + q(corpus) + " --out " + q(results) + " --summary " + q(summary));
    EXPECT_EQ(o.code, 0) << o.out;
    const auto rows = parse_results_csv(read_file(results));
    EXPECT_FALSE(rows.empty());
    EXPECT_EQ(nlohmann::json::parse(read_file(summary))["routes"].size(), 2u);

    const auto trend = dir / "trend.svg", table = dir / "d.csv";
    EXPECT_EQ(run("report --in " + q(results) + " --figure trend --out " + q(trend)).code, 0);
    EXPECT_EQ(read_file(trend), trend_chart_svg(trend_series(rows)));
    EXPECT_EQ(run("report --in " + q(results) + " --figure disciplines --out " + q(table)).code, 0);
    EXPECT_EQ(read_file(table), discipline_table(rows).csv);

    // slicing and baseline flags
    const auto overall = dir / "overall.csv";
    EXPECT_EQ(run("oaca --route hybrid --slice overall --baseline raked --in " + q(corpus) + " --out " + q(overall)).code,
              0);
    const auto one = parse_results_csv(read_file(overall));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].route, Route::HybridGoldOA);
    EXPECT_TRUE(one[0].adjusted);
    EXPECT_EQ(run("oaca --slice weekly --in " + q(corpus)).code, 1);
    // trend needs per-year rows
    EXPECT_EQ(run("report --in " + q(overall) + " --figure trend --out " + q(dir / "t2.svg")).code, 2);
    EXPECT_FALSE(std::filesystem::exists(dir / "t2.svg"));

    // an external reference table equal to the corpus one changes nothing
    const auto refs = dir / "refs.csv";
    write_file_atomic(refs, format_reference_csv(build_reference_table(parse_publications(read_file(corpus)).corpus)));
    const auto ext = dir / "ext.csv";
    EXPECT_EQ(run("oaca --reference-table " + q(refs) + " --in " + q(corpus) + " --out " + q(ext)).code, 0);
    EXPECT_EQ(read_file(ext), read_file(results));
}

TEST(Cli, RunAllIsDeterministicAcrossThreads) {
    TempDir a("cli"), b("cli");
    ASSERT_EQ(run("--quiet --threads 1 run-all --n 30000 --out-dir " + q(a.path())).code, 0);
    ASSERT_EQ(run("--quiet --threads 4 run-all --n 30000 --out-dir " + q(b.path())).code, 0);
    for (const char* f : {"corpus.jsonl", "strata.csv", "weights_gold_full.csv", "weights_gold_hybrid.csv",
                          "references.csv", "results.csv", "summary.json", "trend.svg", "disciplines.csv"}) {
        ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
    }
}

TEST(Cli, RunAllFromFile) {
    TempDir dir("cli");
    const auto corpus = dir / "c.jsonl";
    ASSERT_EQ(run("--quiet simulate --preset null --n 6000 --out " + q(corpus)).code, 0);
    const auto out = dir / "out";
    EXPECT_EQ(run("--quiet run-all --in " + q(corpus) + " --out-dir " + q(out)).code, 0);
    EXPECT_TRUE(std::filesystem::exists(out / "results.csv"));
    EXPECT_FALSE(std::filesystem::exists(out / "corpus.jsonl"));
}

TEST(Cli, PipelineConfigFile) {
    TempDir dir("cli");
    const auto corpus = dir / "c.jsonl";
    ASSERT_EQ(run("--quiet simulate --preset null --n 6000 --out " + q(corpus)).code, 0);
    const auto cfg = dir / "cfg.json";
    write_file_atomic(cfg, R"({"baseline": "naive", "periods": "2012-2014"})");
    const auto results = dir / "r.csv";
    EXPECT_EQ(run("--config " + q(cfg) + " oaca --in " + q(corpus) + " --out " + q(results)).code, 0);
    const auto rows = parse_results_csv(read_file(results));
    for (const auto& r : rows) {
        EXPECT_FALSE(r.adjusted);
        if (r.slice == SliceKind::PerDisciplinePeriod) EXPECT_NE(r.label.find("2012-2014"), std::string::npos);
    }
    write_file_atomic(cfg, R"({"bogus": true})");
    EXPECT_EQ(run("--config " + q(cfg) + " oaca --in " + q(corpus)).code, 2);
}
