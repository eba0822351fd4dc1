#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssvep/baselines.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

#include <cmath>
#include <limits>

using namespace ssvep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SynthParams base_params(double snr_db) {
    SynthParams p;
    p.n_participants = 2;
    p.layout = make_grid_layout(8, 8.0, 1.0, 0.4);
    p.fs = 250.0;
    p.duration_s = 1.0;
    p.n_blocks = 2;
    p.channels = 4;
    p.n_clusters = 2;
    p.snr_db = snr_db;
    p.mixing_seed = 31;
    p.noise_seed = 32;
    return p;
}

}  // namespace

TEST_CASE("cca/fbcca: noiseless synthetic instances are always identified") {
    const SynthParams p = base_params(kInf);
    const CohortDataset cohort = generate_cohort(p);
    for (const auto& part : cohort.participants) {
        for (std::size_t e = 0; e < part.epochs.size(); ++e) {
            const auto& x = part.epochs[e];
            CHECK(cca_classify(x.bands[0], x.fs, cohort.layout, 5) == part.labels[e]);
            CHECK(fbcca_classify(x, cohort.layout, 5) == part.labels[e]);
        }
    }
}

TEST_CASE("ttcca: noiseless cohort and instances are always identified") {
    const SynthParams p = base_params(kInf);
    const CohortDataset cohort = generate_cohort(p);
    const CrossTemplates templates = build_cross_templates(cohort);
    for (int participant = 0; participant < 2; ++participant)
        for (int character = 1; character <= 8; ++character) {
            const FilteredEpoch x = generate_instance(p, participant, character, 3);
            CHECK(ttcca_classify(x.bands[0], x.fs, templates, cohort.layout, 5) ==
                  character);
        }
}

TEST_CASE("baselines: white-noise inputs sit at chance accuracy") {
    const SynthParams p = base_params(-kInf);
    const CrossTemplates templates = build_cross_templates(generate_cohort(base_params(kInf)));
    const int m = p.layout.character_count();
    const int trials = 400;
    int ok_cca = 0, ok_fb = 0, ok_tt = 0;
    for (int i = 0; i < trials; ++i) {
        const int character = 1 + i % m;
        const FilteredEpoch x = generate_instance(p, i % 2, character, i);
        if (cca_classify(x.bands[0], x.fs, p.layout, 5) == character) ++ok_cca;
        if (fbcca_classify(x, p.layout, 5) == character) ++ok_fb;
        if (ttcca_classify(x.bands[0], x.fs, templates, p.layout, 5) == character) ++ok_tt;
    }
    const double chance = 1.0 / m;
    const double band = 3.0 * std::sqrt(chance * (1.0 - chance) / trials);
    CHECK(std::abs(ok_cca / double(trials) - chance) <= band);
    CHECK(std::abs(ok_fb / double(trials) - chance) <= band);
    CHECK(std::abs(ok_tt / double(trials) - chance) <= band);
}

TEST_CASE("cca: canonical correlations never exceed one") {
    const SynthParams p = base_params(-5.0);
    for (int i = 0; i < 10; ++i) {
        const FilteredEpoch x = generate_instance(p, 0, 1 + i % 8, i);
        const ReferenceSignal ref =
            make_reference_signal(p.layout, 1 + i % 8, 5, x.samples(), x.fs);
        CHECK(canonical_correlation(x.bands[0], ref.rows).corr <= 1.0 + 1e-9);
    }
}

TEST_CASE("fbcca: single band with unit weight reduces to cca") {
    const SynthParams p = base_params(2.0);
    for (int i = 0; i < 10; ++i) {
        const FilteredEpoch full = generate_instance(p, 1, 1 + i % 8, i);
        FilteredEpoch single;
        single.fs = full.fs;
        single.bands.push_back(full.bands[0]);
        CHECK(fbcca_classify(single, p.layout, 5, {1.0}) ==
              cca_classify(full.bands[0], full.fs, p.layout, 5));
    }
}

TEST_CASE("fbcca: permuting sub-bands together with weights keeps the label") {
    const SynthParams p = base_params(0.0);
    const std::vector<double> w = default_fb_weights(3);
    for (int i = 0; i < 10; ++i) {
        const FilteredEpoch x = generate_instance(p, 0, 1 + i % 8, i);
        FilteredEpoch permuted;
        permuted.fs = x.fs;
        permuted.bands = {x.bands[2], x.bands[0], x.bands[1]};
        const std::vector<double> wp = {w[2], w[0], w[1]};
        CHECK(fbcca_classify(x, p.layout, 5, w) == fbcca_classify(permuted, p.layout, 5, wp));
    }
}

TEST_CASE("baselines: labels invariant to positive scaling of the instance") {
    const SynthParams p = base_params(1.0);
    const CrossTemplates templates = build_cross_templates(generate_cohort(p));
    for (int i = 0; i < 6; ++i) {
        const FilteredEpoch x = generate_instance(p, 0, 1 + i, i);
        const int base_cca = cca_classify(x.bands[0], x.fs, p.layout, 5);
        const int base_fb = fbcca_classify(x, p.layout, 5);
        const int base_tt = ttcca_classify(x.bands[0], x.fs, templates, p.layout, 5);
        for (double c : {0.5, 10.0}) {
            FilteredEpoch scaled = x;
            for (auto& band : scaled.bands) band *= c;
            CHECK(cca_classify(scaled.bands[0], x.fs, p.layout, 5) == base_cca);
            CHECK(fbcca_classify(scaled, p.layout, 5) == base_fb);
            CHECK(ttcca_classify(scaled.bands[0], x.fs, templates, p.layout, 5) == base_tt);
        }
    }
}

TEST_CASE("ttcca: an instance equal to a harmonically pure template wins") {
    const SpellerLayout layout = make_grid_layout(4, 9.0, 1.5);
    const int nt = 250;
    Rng rng(3);
    CrossTemplates templates;
    for (int i = 1; i <= 4; ++i) {
        const ReferenceSignal ref = make_reference_signal(layout, i, 3, nt, 250.0);
        Vector mix(3);
        Vector hw(ref.rows.rows());
        for (int c = 0; c < 3; ++c) mix(c) = 0.5 + rng.uniform();
        for (int h = 0; h < hw.size(); ++h) hw(h) = rng.normal();
        templates.per_character.push_back(mix * (ref.rows.transpose() * hw).transpose());
    }
    const int label = ttcca_classify(templates.per_character[0], 250.0, templates, layout, 3);
    CHECK(label == 1);
}

TEST_CASE("ttcca: all-zero template is a degenerate-input error") {
    const SpellerLayout layout = make_grid_layout(3, 9.0, 1.5);
    CrossTemplates templates;
    templates.per_character.assign(3, Matrix::Zero(2, 100));
    const Matrix x = Matrix::Random(2, 100);
    CHECK_THROWS_AS(ttcca_classify(x, 250.0, templates, layout, 3), DegenerateInputError);
}

TEST_CASE("fbcca: weight validation") {
    const SynthParams p = base_params(0.0);
    const FilteredEpoch x = generate_instance(p, 0, 1, 0);
    CHECK_THROWS_AS(fbcca_classify(x, p.layout, 5, {1.0, 1.0}), ShapeError);
    CHECK_THROWS_AS(fbcca_classify(x, p.layout, 5, {1.0, -1.0, 1.0}), ConfigError);
}
