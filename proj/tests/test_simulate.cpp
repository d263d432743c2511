#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <cmath>
#include <numeric>

#include "helpers.hpp"

using namespace oaca;

namespace {

double chi_square(const std::vector<double>& observed, const std::vector<double>& probs) {
    const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
    double x2 = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = n * probs[i];
        x2 += (observed[i] - e) * (observed[i] - e) / e;
    }
    return x2;
}

bool passes(const std::vector<double>& observed, const std::vector<double>& probs, double alpha = 0.001) {
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return chi_square(observed, probs) <= boost::math::quantile(boost::math::complement(dist, alpha));
}

// bucket b holds Poisson value b, the last bucket the tail
std::vector<double> poisson_buckets(double mean, std::size_t n_buckets) {
    boost::math::poisson_distribution<double> p(mean);
    std::vector<double> probs(n_buckets);
    double used = 0.0;
    for (std::size_t b = 0; b + 1 < n_buckets; ++b) {
        probs[b] = boost::math::pdf(p, static_cast<double>(b));
        used += probs[b];
    }
    probs.back() = 1.0 - used;
    return probs;
}

std::vector<double> normalized(std::vector<double> w) {
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= s;
    return w;
}

}  // namespace

TEST(Simulate, EmptyCorpus) {
    SimConfig c;
    c.n_records = 0;
    EXPECT_EQ(generate(c).size(), 0u);
}

TEST(Simulate, DeterministicBytes) {
    auto c = preset("paper-shape");
    c.n_records = 40000;
    c.seed = 123;
    const auto a = serialize_publications(generate(c));
    const auto b = serialize_publications(generate(c));
    EXPECT_EQ(a, b);
    c.seed = 124;
    EXPECT_NE(a, serialize_publications(generate(c)));
}

TEST(Simulate, ThreadCountDoesNotChangeOutput) {
    auto c = preset("confounded-null");
    c.n_records = 3 * kBlockSize + 17;
    set_threads(1);
    const auto one = generate(c);
    set_threads(4);
    const auto four = generate(c);
    set_threads(1);
    EXPECT_EQ(one, four);
}

TEST(Simulate, IdsAndDigest) {
    SimConfig c;
    c.n_records = 5;
    c.seed = 9;
    const auto corpus = generate(c);
    EXPECT_EQ(corpus[0].id, "P0");
    EXPECT_EQ(corpus[4].id, "P4");
    EXPECT_EQ(corpus.source_digest(), "sim-9");
}

TEST(Simulate, MarginalsMatchConfiguration) {
    SimConfig c;
    c.n_records = 100000;
    c.doc_type_weights = {0.7, 0.2, 0.1};
    for (std::size_t d = 0; d < kDisciplineCount; ++d) c.discipline_weights[d] = 1.0 + static_cast<double>(d % 4);
    c.year_weights = {1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1};

    const auto year_p = normalized(c.year_weights);
    const auto disc_p = normalized({c.discipline_weights.begin(), c.discipline_weights.end()});
    const auto type_p = normalized({c.doc_type_weights.begin(), c.doc_type_weights.end()});
    const auto countries_p = poisson_buckets(c.countries_extra_mean, 5);
    const auto fundings_p = poisson_buckets(c.fundings_mean, 6);
    boost::math::normal_distribution<double> z(c.impact_mu[0], c.impact_sigma[0]);
    std::vector<double> impact_p;
    double prev = 0.0;
    for (double b : {0.8, 1.2, 1.8, 2.2}) {
        const double cdf = boost::math::cdf(z, std::log(b));
        impact_p.push_back(cdf - prev);
        prev = cdf;
    }
    impact_p.push_back(1.0 - prev);
    const std::vector<double> status_p{c.full.base_probability, c.hybrid.base_probability,
                                       1.0 - c.full.base_probability - c.hybrid.base_probability};
    auto flag_p = [](double p) { return std::vector<double>{1.0 - p, p}; };

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        c.seed = seed;
        const auto corpus = generate(c);
        std::vector<double> year(11), disc(27), type(3), countries(5), fundings(6), impact(5), status(3), erc(2),
            eu27(2), patent(2);
        for (const auto& r : corpus) {
            year[r.pub_year - 2010] += 1;
            disc[r.discipline.index] += 1;
            type[static_cast<int>(r.doc_type)] += 1;
            countries[std::min(r.n_countries, 5) - 1] += 1;
            fundings[std::min(r.n_fundings, 5)] += 1;
            impact[classify_impact(r.journal_impact) - 1] += 1;
            status[static_cast<int>(r.oa_status)] += 1;
            erc[r.has_erc_funding] += 1;
            eu27[r.has_eu27_address] += 1;
            patent[r.cited_by_patent] += 1;
        }
        EXPECT_TRUE(passes(year, year_p)) << "year, seed " << seed;
        EXPECT_TRUE(passes(disc, disc_p)) << "discipline, seed " << seed;
        EXPECT_TRUE(passes(type, type_p)) << "doc_type, seed " << seed;
        EXPECT_TRUE(passes(countries, countries_p)) << "countries, seed " << seed;
        EXPECT_TRUE(passes(fundings, fundings_p)) << "fundings, seed " << seed;
        EXPECT_TRUE(passes(impact, impact_p)) << "impact, seed " << seed;
        EXPECT_TRUE(passes(status, status_p)) << "oa_status, seed " << seed;
        EXPECT_TRUE(passes(erc, flag_p(c.erc_probability))) << "erc, seed " << seed;
        EXPECT_TRUE(passes(eu27, flag_p(c.eu27_probability))) << "eu27, seed " << seed;
        EXPECT_TRUE(passes(patent, flag_p(c.patent_probability))) << "patent, seed " << seed;
    }
}

TEST(Simulate, CitationMeanMatchesModel) {
    SimConfig c;
    c.n_records = 200000;
    c.seed = 5;
    const auto corpus = generate(c);
    // mean of the negative binomial, averaged over the records' own cells
    long double expected = 0, observed = 0;
    for (const auto& r : corpus) {
        expected += baseline_lambda(c, r.discipline, r.pub_year, r.doc_type) *
                    c.impact_effect[classify_impact(r.journal_impact) - 1];
        observed += r.citations;
    }
    EXPECT_NEAR(static_cast<double>(observed / expected), 1.0, 0.01);
}

TEST(Simulate, NullModelHasNoMeanDifference) {
    SimConfig c;
    c.n_records = 5000;
    double z_sum = 0.0;
    int extreme = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        c.seed = seed;
        const auto corpus = generate(c);
        double s[2] = {0, 0}, ss[2] = {0, 0}, n[2] = {0, 0};
        for (const auto& r : corpus) {
            const int g = r.oa_status == OaStatus::NonOA ? 0 : 1;
            s[g] += static_cast<double>(r.citations);
            ss[g] += static_cast<double>(r.citations) * static_cast<double>(r.citations);
            n[g] += 1;
        }
        const double m0 = s[0] / n[0], m1 = s[1] / n[1];
        const double v0 = ss[0] / n[0] - m0 * m0, v1 = ss[1] / n[1] - m1 * m1;
        const double z = (m1 - m0) / std::sqrt(v0 / n[0] + v1 / n[1]);
        z_sum += z;
        extreme += std::abs(z) > 3.29;
    }
    // sum of 100 independent standard normals has sd 10
    EXPECT_LE(std::abs(z_sum / 10.0), 3.29);
    EXPECT_LE(extreme, 2);
}

TEST(Simulate, ConfoundingRaisesRawOaCitations) {
    auto c = preset("confounded-null");
    c.n_records = 50000;
    c.seed = 77;
    ASSERT_EQ(c.delta_full, 0.0);
    const auto corpus = generate(c);
    double s_oa = 0, n_oa = 0, s_non = 0, n_non = 0;
    double k_oa = 0, k_non = 0;
    for (const auto& r : corpus) {
        const bool oa = r.oa_status != OaStatus::NonOA;
        (oa ? s_oa : s_non) += static_cast<double>(r.citations);
        (oa ? n_oa : n_non) += 1;
        (oa ? k_oa : k_non) += classify_impact(r.journal_impact);
    }
    EXPECT_GT(k_oa / n_oa, k_non / n_non);
    EXPECT_GT(s_oa / n_oa, 1.15 * (s_non / n_non));
}

TEST(Simulate, PaperShapePlacement) {
    auto c = preset("paper-shape");
    c.n_records = 50000;
    const auto corpus = generate(c);
    double k[3] = {0, 0, 0}, n[3] = {0, 0, 0};
    for (const auto& r : corpus) {
        k[static_cast<int>(r.oa_status)] += classify_impact(r.journal_impact);
        n[static_cast<int>(r.oa_status)] += 1;
    }
    const double full = k[0] / n[0], hybrid = k[1] / n[1], non = k[2] / n[2];
    EXPECT_LT(full, non);
    EXPECT_GT(hybrid, non);
}

TEST(TrueOaca, Definition) {
    SimConfig c;
    c.delta_full = 0.3;
    c.delta_hybrid = -0.2;
    EXPECT_DOUBLE_EQ(true_oaca(c, Route::FullGoldOA), 30.0);
    EXPECT_DOUBLE_EQ(true_oaca(c, Route::HybridGoldOA), -20.0);
    EXPECT_EQ(true_oaca(SimConfig{}, Route::FullGoldOA), 0.0);
    EXPECT_DOUBLE_EQ(true_oaca(preset("planted-30"), Route::HybridGoldOA), 30.0);
}

TEST(SimConfig, ValidationNamesTheField) {
    auto expect_field = [](SimConfig c, const std::string& field) {
        try {
            validate(c);
            ADD_FAILURE() << "accepted invalid " << field;
        } catch (const InvalidConfig& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    SimConfig c;
    c.erc_probability = 1.5;
    expect_field(c, "erc_probability");
    c = {};
    c.dispersion = 0.0;
    expect_field(c, "dispersion");
    c = {};
    c.lambda_base = -1.0;
    expect_field(c, "lambda_base");
    c = {};
    c.full.base_probability = 0.6;
    c.hybrid.base_probability = 0.5;
    expect_field(c, "base_probability");
    c = {};
    c.year_weights = {1, 2};
    expect_field(c, "year_weights");
    c = {};
    c.years = {2020, 2010};
    expect_field(c, "years");
    c = {};
    c.doc_type_weights = {0, 0, 0};
    expect_field(c, "doc_type_weights");
    c = {};
    c.delta_hybrid = -1.0;
    expect_field(c, "delta_hybrid");
    EXPECT_THROW(generate(c), InvalidConfig);
    EXPECT_THROW(preset("bronze"), InvalidConfig);
}

TEST(SimConfig, JsonRoundTrip) {
    for (const auto& name : preset_names()) {
        auto c = preset(name);
        c.seed = 991;
        c.n_records = 2500;
        const auto j = to_json(c);
        const auto back = sim_config_from_json(nlohmann::json::parse(j.dump()));
        EXPECT_EQ(to_json(back).dump(), j.dump()) << name;
        EXPECT_EQ(generate(back), generate(c)) << name;
    }
}

TEST(SimConfig, JsonPresetAndOverrides) {
    const auto c = sim_config_from_json(nlohmann::json::parse(
        R"({"preset": "planted-30", "seed": 5, "n_records": 10, "impact_sigma": 0.4, "full": {"base_probability": 0.2}})"));
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.n_records, 10u);
    EXPECT_EQ(c.delta_full, 0.30);
    EXPECT_EQ(c.impact_sigma[26], 0.4);
    EXPECT_EQ(c.full.base_probability, 0.2);
    EXPECT_EQ(c.full.impact_coef, 0.6);
    EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"sede": 5})")), InvalidConfig);
    EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"impact_mu": [1, 2]})")), InvalidConfig);
    EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"dispersion": "big"})")), InvalidConfig);
}
