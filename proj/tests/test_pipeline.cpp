#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace oaca;

namespace {

Corpus simulated(const char* name, std::uint64_t seed, std::size_t n) {
    auto c = preset(name);
    c.seed = seed;
    c.n_records = n;
    return generate(c);
}

}  // namespace

TEST(PipelineConfig, FromJson) {
    const auto c = pipeline_config_from_json(nlohmann::json::parse(R"({
        "window": "2012-2018", "fundings_zero_class": false, "tolerance": 1e-10,
        "max_iterations": 50, "max_weight_ratio": 8, "per_year": true,
        "allow_nonconverged": true, "periods": "2012-2013,2017-2018", "baseline": "raked"})"));
    EXPECT_EQ(c.window, (YearWindow{2012, 2018}));
    EXPECT_FALSE(c.fundings_zero_class);
    EXPECT_EQ(c.rake.tolerance, 1e-10);
    EXPECT_EQ(c.rake.max_iterations, 50u);
    EXPECT_EQ(*c.rake.max_weight_ratio, 8.0);
    EXPECT_TRUE(c.rake.per_year);
    EXPECT_FALSE(c.rake.full_cross);
    EXPECT_TRUE(c.allow_nonconverged);
    EXPECT_EQ(c.slicing.periods.size(), 2u);
    EXPECT_EQ(c.slicing.baseline, Baseline::Raked);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"tolerence": 1})")), InvalidConfig);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"per_year": 1})")), InvalidConfig);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"baseline": "both-ish"})")), InvalidConfig);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse("[]")), InvalidConfig);
}

TEST(Pipeline, NonConvergenceIsAnError) {
    const auto corpus = simulated("paper-shape", 2, 20000);
    PipelineConfig config;
    config.rake.max_iterations = 1;
    EXPECT_THROW(run_pipeline(corpus, config), NonConvergence);
    config.allow_nonconverged = true;
    const auto result = run_pipeline(corpus, config);
    EXPECT_FALSE(result.cohorts[0].weights.converged);
    EXPECT_FALSE(result.report.rows.empty());
}

TEST(Pipeline, FoldedFundingsStillRuns) {
    const auto corpus = simulated("confounded-null", 3, 20000);
    PipelineConfig config;
    config.fundings_zero_class = false;
    const auto folded = run_pipeline(corpus, config);
    const auto split = run_pipeline(corpus, PipelineConfig{});
    // coarser strata match at least as many OA records
    for (std::size_t r = 0; r < 2; ++r)
        EXPECT_GE(folded.cohorts[r].cohort.oa_sample.size(), split.cohorts[r].cohort.oa_sample.size());
}

TEST(Pipeline, SingleRoute) {
    const auto corpus = simulated("null", 4, 8000);
    const std::array<Route, 1> hybrid{Route::HybridGoldOA};
    const auto result = run_pipeline(corpus, PipelineConfig{}, hybrid);
    ASSERT_EQ(result.cohorts.size(), 1u);
    for (const auto& r : result.report.rows) EXPECT_EQ(r.route, Route::HybridGoldOA);
}

TEST(Pipeline, WeightsCsvAndSummary) {
    const auto corpus = simulated("paper-shape", 5, 10000);
    const auto result = run_pipeline(corpus, PipelineConfig{});
    const auto csv = format_weights_csv(corpus, result.cohorts[0].weights);
    EXPECT_EQ(csv.substr(0, 10), "id,weight\n");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')),
              result.cohorts[0].cohort.control_pool.size() + 1);
    const auto j = summary_json(corpus, result);
    EXPECT_EQ(j["n_records"], 10000);
    EXPECT_EQ(j["source_digest"], "sim-5");
    ASSERT_EQ(j["routes"].size(), 2u);
    EXPECT_EQ(j["routes"][0]["route"], "gold_full");
    EXPECT_TRUE(j["routes"][0]["raking"]["converged"].get<bool>());
    EXPECT_TRUE(j["routes"][1].contains("adjusted"));
    EXPECT_TRUE(j["routes"][1].contains("naive"));
    const auto& q = j["routes"][0]["raking"]["weight_quantiles"];
    EXPECT_LE(q["min"].get<double>(), q["p50"].get<double>());
    EXPECT_LE(q["p50"].get<double>(), q["max"].get<double>());
}

TEST(Pipeline, DeterministicAcrossThreadCounts) {
    const auto corpus = simulated("paper-shape", 42, 60000);
    set_threads(1);
    const auto a = format_results_csv(run_pipeline(corpus, PipelineConfig{}).report.rows);
    set_threads(4);
    const auto b = format_results_csv(run_pipeline(corpus, PipelineConfig{}).report.rows);
    set_threads(1);
    EXPECT_EQ(a, b);
}
