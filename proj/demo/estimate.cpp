// Simulates a confounded corpus and compares naive and adjusted OACA.
//
//   oaca_demo [n_records] [seed]

#include <cstdlib>
#include <iostream>

#include "oaca/oaca.hpp"

int main(int argc, char** argv) {
    auto config = oaca::preset("confounded-null");
    if (argc > 1) config.n_records = std::strtoull(argv[1], nullptr, 10);
    if (argc > 2) config.seed = std::strtoull(argv[2], nullptr, 10);

    const auto corpus = oaca::generate(config);
    const auto result = oaca::run_pipeline(corpus, oaca::PipelineConfig{});

    std::cout << corpus.size() << " records, true OACA " << oaca::format_fixed(oaca::true_oaca(config, oaca::Route::FullGoldOA), 1)
              << "%\n";
    for (const auto& cc : result.cohorts) std::cout << oaca::format_cohort_summary(cc.cohort) << "\n";
    for (const auto& row : result.report.rows) {
        if (row.slice != oaca::SliceKind::Overall) continue;
        std::cout << oaca::to_string(row.route) << (row.adjusted ? "  adjusted " : "  naive    ")
                  << oaca::format_fixed(row.oaca_pct, 2) << "%  (MNCS " << oaca::format_fixed(row.mncs_oa, 3) << " vs "
                  << oaca::format_fixed(row.mncs_ctrl, 3) << ")\n";
    }
}
