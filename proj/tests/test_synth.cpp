#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssvep/baselines.hpp"
#include "ssvep/synth.hpp"

#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <set>

using namespace ssvep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SynthParams small_params() {
    SynthParams p;
    p.n_participants = 4;
    p.layout = make_grid_layout(8, 8.0, 1.0, 0.4);
    p.fs = 250.0;
    p.duration_s = 1.0;
    p.n_blocks = 2;
    p.channels = 4;
    p.n_clusters = 2;
    p.snr_db = 0.0;
    p.mixing_seed = 101;
    p.noise_seed = 202;
    return p;
}

bool epochs_equal(const FilteredEpoch& a, const FilteredEpoch& b) {
    if (a.subbands() != b.subbands()) return false;
    for (int s = 0; s < a.subbands(); ++s)
        if (a.bands[s] != b.bands[s]) return false;
    return true;
}

}  // namespace

TEST_CASE("synth: equal seeds give bitwise-identical cohorts") {
    const SynthParams p = small_params();
    const CohortDataset a = generate_cohort(p);
    const CohortDataset b = generate_cohort(p);
    REQUIRE(a.participant_count() == b.participant_count());
    for (int n = 0; n < a.participant_count(); ++n) {
        REQUIRE(a.participants[n].epoch_count() == b.participants[n].epoch_count());
        CHECK(a.participants[n].labels == b.participants[n].labels);
        for (int e = 0; e < a.participants[n].epoch_count(); ++e)
            CHECK(epochs_equal(a.participants[n].epochs[e], b.participants[n].epochs[e]));
    }
}

TEST_CASE("synth: labels are balanced within every block") {
    const CohortDataset cohort = generate_cohort(small_params());
    const int m = cohort.layout.character_count();
    for (const auto& part : cohort.participants) {
        std::map<int, std::set<int>> by_block;
        for (std::size_t e = 0; e < part.epochs.size(); ++e)
            CHECK(by_block[part.block_ids[e]].insert(part.labels[e]).second);
        for (const auto& [block, labels] : by_block)
            CHECK(static_cast<int>(labels.size()) == m);
    }
}

TEST_CASE("synth: near-noiseless cohort is classified by fbcca") {
    SynthParams p = small_params();
    p.snr_db = 60.0;
    const CohortDataset cohort = generate_cohort(p);
    int correct = 0, total = 0;
    for (const auto& part : cohort.participants) {
        for (std::size_t e = 0; e < part.epochs.size(); ++e) {
            if (fbcca_classify(part.epochs[e], cohort.layout, 5) == part.labels[e]) ++correct;
            ++total;
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.99);
}

TEST_CASE("synth: orthogonal clusters separate template correlations") {
    SynthParams p = small_params();
    p.n_participants = 20;
    p.channels = 8;
    p.n_blocks = 1;
    p.snr_db = 10.0;
    const CohortDataset cohort = generate_cohort(p);

    // Flattened band-1 mean epoch per participant for one character.
    const int m = cohort.layout.character_count();
    std::vector<Vector> flat(p.n_participants);
    for (int n = 0; n < p.n_participants; ++n) {
        Matrix acc;
        int count = 0;
        for (int e = 0; e < cohort.participants[n].epoch_count(); ++e) {
            if (cohort.participants[n].labels[e] != 1) continue;
            const Matrix& band = cohort.participants[n].epochs[e].bands[0];
            if (count == 0)
                acc = band;
            else
                acc += band;
            ++count;
        }
        acc /= count;
        flat[n] = Eigen::Map<const Vector>(acc.data(), acc.size());
    }
    (void)m;

    double within = 0.0, cross = 0.0;
    int n_within = 0, n_cross = 0;
    for (int a = 0; a < p.n_participants; ++a)
        for (int b = a + 1; b < p.n_participants; ++b) {
            const double rho = pearson(flat[a], flat[b]);
            if (a % p.n_clusters == b % p.n_clusters) {
                within += rho;
                ++n_within;
            } else {
                cross += rho;
                ++n_cross;
            }
        }
    CHECK(within / n_within > cross / n_cross);
}

TEST_CASE("synth: instance DFT peaks at the tagged frequency") {
    SynthParams p = small_params();
    p.snr_db = 40.0;
    const int nt = static_cast<int>(p.duration_s * p.fs);
    const Vector mixing = participant_mixing(p, 1);
    for (int character = 1; character <= 4; ++character) {
        const RawEpoch raw = generate_raw_instance(p, 1, character, 99);
        const Vector combined = raw.samples.transpose() * mixing;
        const auto mag = oracle::dft_magnitude(combined);
        int peak = 1;
        for (std::size_t k = 2; k < mag.size(); ++k)
            if (mag[k] > mag[peak]) peak = static_cast<int>(k);
        const double expected_bin = p.layout.freqs[character - 1] * nt / p.fs;
        CHECK(std::abs(peak - expected_bin) <= 1.0);
    }
}

TEST_CASE("synth: pure-noise instances classify at chance") {
    SynthParams p = small_params();
    p.snr_db = -kInf;
    const int m = p.layout.character_count();
    int correct = 0;
    const int trials = 400;
    for (int i = 0; i < trials; ++i) {
        const int character = 1 + i % m;
        const FilteredEpoch x = generate_instance(p, i % p.n_participants, character, i);
        if (fbcca_classify(x, p.layout, 5) == character) ++correct;
    }
    const double acc = static_cast<double>(correct) / trials;
    const double chance = 1.0 / m;
    const double sigma = std::sqrt(chance * (1.0 - chance) / trials);
    CHECK(std::abs(acc - chance) <= 3.0 * sigma);
}

TEST_CASE("synth: same-seed instances are identical, different indices differ") {
    const SynthParams p = small_params();
    const FilteredEpoch a = generate_instance(p, 2, 3, 7);
    const FilteredEpoch b = generate_instance(p, 2, 3, 7);
    const FilteredEpoch c = generate_instance(p, 2, 3, 8);
    CHECK(epochs_equal(a, b));
    CHECK(!epochs_equal(a, c));
}

TEST_CASE("synth: mean epoch energy grows with snr at fixed noise power") {
    SynthParams p = small_params();
    double prev = -1.0;
    for (double snr : {-15.0, -5.0, 0.0, 5.0, 15.0}) {
        p.snr_db = snr;
        const CohortDataset cohort = generate_cohort(p);
        double energy = 0.0;
        int count = 0;
        for (const auto& part : cohort.participants)
            for (const auto& e : part.epochs) {
                for (const auto& band : e.bands) energy += band.squaredNorm();
                ++count;
            }
        energy /= count;
        CHECK(energy > prev);
        prev = energy;
    }
}

TEST_CASE("synth: noiseless flag produces exactly the mixed waveform") {
    SynthParams p = small_params();
    p.snr_db = kInf;
    const RawEpoch raw = generate_raw_instance(p, 0, 1, 5);
    // Rank-one: every channel is a scalar multiple of the mixing vector.
    const Vector mixing = participant_mixing(p, 0);
    const Vector first = raw.samples.row(0).transpose();
    for (int c = 1; c < raw.channels(); ++c) {
        const Vector row = raw.samples.row(c).transpose();
        CHECK((row * mixing(0) - first * mixing(c)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("synth: parameter validation") {
    SynthParams p = small_params();
    p.n_clusters = 9;
    CHECK_THROWS_AS(generate_cohort(p), ConfigError);
    p = small_params();
    p.nh_signal = 20;  // harmonics past Nyquist
    CHECK_THROWS_AS(generate_cohort(p), ConfigError);
    p = small_params();
    CHECK_THROWS_AS(generate_instance(p, 99, 1), ConfigError);
}
