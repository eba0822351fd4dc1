#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssvep/similarity.hpp"
#include "ssvep/synth.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace ssvep;

namespace {

// A network whose logits are just b_fc: it always predicts `label` and
// carries whatever w_s / w_c the test wants the similarity stage to use.
NetworkWeights stub_net(int channels, int nt, int subbands, int classes, int label,
                        const Matrix& w_c) {
    NetworkShape s;
    s.channels = channels;
    s.time = nt;
    s.subbands = subbands;
    s.classes = classes;
    s.n_ch = static_cast<int>(w_c.cols());
    s.l3_maps = 2;
    s.l3_kernel = 2;
    s.l3_stride = 2;
    s.l4_maps = 2;
    s.l4_kernel = 3;
    NetworkWeights w = init_weights(s, 0);
    w.visit([](double* p, std::ptrdiff_t n, bool) {
        for (std::ptrdiff_t i = 0; i < n; ++i) p[i] = 0.0;
    });
    w.w_s.setOnes();
    w.w_c = w_c;
    w.b_fc(label - 1) = 1.0;
    return w;
}

FilteredEpoch epoch_from_rows(const std::vector<Vector>& rows, double fs = 250.0) {
    FilteredEpoch e;
    e.fs = fs;
    Matrix band(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) band.row(r) = rows[r].transpose();
    e.bands.push_back(band);
    return e;
}

// Orthonormal, mean-free basis: v inside the centered reference row space,
// u and r orthogonal to it (and to each other).
struct RefBasis {
    ReferenceSignal ref;
    Vector u, v, r;
};

RefBasis make_basis(const SpellerLayout& layout, int nt, Rng& rng) {
    RefBasis b{make_reference_signal(layout, 1, 2, nt, 250.0), {}, {}, {}};
    const Matrix centered = b.ref.rows.colwise() - b.ref.rows.rowwise().mean();
    b.v = centered.row(0).transpose().normalized();

    Matrix span(b.ref.rows.rows() + 1, nt);
    span.topRows(b.ref.rows.rows()) = b.ref.rows;
    span.bottomRows(1).setOnes();
    auto project_out = [&](Vector g) {
        const Vector coeffs = (span * span.transpose()).ldlt().solve(span * g);
        return Vector(g - span.transpose() * coeffs);
    };
    Vector g1(nt), g2(nt);
    for (int i = 0; i < nt; ++i) {
        g1(i) = rng.normal();
        g2(i) = rng.normal();
    }
    b.u = project_out(g1).normalized();
    Vector r = project_out(g2);
    r -= r.dot(b.u) * b.u;
    b.r = r.normalized();
    return b;
}

struct TrainedFixture {
    SynthParams params;
    CohortDataset cohort;
    std::vector<NetworkWeights> ensemble;
    TemplateBank templates;
};

// One small trained ensemble shared by the heavier checks.
const TrainedFixture& fixture() {
    static const TrainedFixture fix = [] {
        TrainedFixture f;
        f.params.n_participants = 3;
        f.params.layout = make_grid_layout(4, 9.0, 1.5, 0.5);
        f.params.fs = 250.0;
        f.params.duration_s = 0.6;
        f.params.n_blocks = 3;
        f.params.channels = 4;
        f.params.n_clusters = 1;
        f.params.snr_db = 12.0;
        f.params.mixing_seed = 7;
        f.params.noise_seed = 8;
        f.cohort = generate_cohort(f.params);

        NetworkShape shape;
        shape.channels = 4;
        shape.time = 150;
        shape.subbands = 3;
        shape.classes = 4;
        shape.n_ch = 6;
        shape.l3_maps = 6;
        shape.l4_maps = 6;

        TrainingConfig cfg;
        cfg.epochs_global = 60;
        cfg.epochs_finetune = 30;
        cfg.batch_size = 16;
        cfg.lr_global = 2e-3;
        cfg.lr_finetune = 1e-3;
        cfg.rng_seed = 3;

        const NetworkWeights global_w = train_global(f.cohort, shape, cfg);
        f.ensemble = fine_tune_all(global_w, f.cohort, cfg);
        f.templates = build_templates(f.cohort, f.ensemble);
        return f;
    }();
    return fix;
}

}  // namespace

TEST_CASE("templates: correctly classified epochs are averaged, misses are absent") {
    const int nt = 100;
    Rng rng(5);

    CohortDataset cohort;
    cohort.layout = make_grid_layout(3, 9.0, 2.0);
    cohort.fs = 250.0;
    ParticipantRecords rec;
    rec.participant_id = "P01";
    for (int e = 0; e < 3; ++e) {
        FilteredEpoch x;
        x.fs = 250.0;
        x.bands.assign(1, Matrix::Zero(2, nt));
        for (int i = 0; i < x.bands[0].size(); ++i)
            x.bands[0](i / nt, i % nt) = rng.normal();
        rec.epochs.push_back(x);
        rec.labels.push_back(2);
        rec.block_ids.push_back(e);
    }
    cohort.participants.push_back(rec);

    // The stub always predicts 2: every epoch contributes.
    std::vector<NetworkWeights> ensemble{
        stub_net(2, nt, 1, 3, 2, Matrix::Identity(2, 2))};
    TemplateBank bank = build_templates(cohort, ensemble);
    REQUIRE(bank.by_participant[0][1].has_value());
    CHECK(bank.by_participant[0][1]->count == 3);
    const Matrix expected =
        (rec.epochs[0].bands[0] + rec.epochs[1].bands[0] + rec.epochs[2].bands[0]) / 3.0;
    CHECK((bank.by_participant[0][1]->bands[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(!bank.by_participant[0][0].has_value());
    CHECK(!bank.by_participant[0][2].has_value());

    // A stub predicting 1 gets every epoch wrong: everything absent.
    ensemble[0] = stub_net(2, nt, 1, 3, 1, Matrix::Identity(2, 2));
    bank = build_templates(cohort, ensemble);
    for (int i = 0; i < 3; ++i) CHECK(!bank.by_participant[0][i].has_value());
}

TEST_CASE("subband_combine: selectors, equal bands, naive oracle") {
    Rng rng(9);
    std::vector<Matrix> bands(3, Matrix(2, 50));
    for (auto& b : bands)
        for (int i = 0; i < b.size(); ++i) b(i / 50, i % 50) = rng.normal();

    Vector selector(3);
    selector << 1.0, 0.0, 0.0;
    CHECK((subband_combine(bands, selector) - bands[0]).cwiseAbs().maxCoeff() == 0.0);

    std::vector<Matrix> equal_bands(3, bands[1]);
    Vector ones = Vector::Ones(3);
    CHECK((subband_combine(equal_bands, ones) - 3.0 * bands[1]).cwiseAbs().maxCoeff() <
          1e-12);

    Vector w(3);
    w << 0.3, -1.2, 0.7;
    const Matrix expect = oracle::subband_combine_naive(bands, w);
    CHECK((subband_combine(bands, w) - expect).cwiseAbs().maxCoeff() < 1e-12);

    Vector bad(2);
    bad << 1.0, 1.0;
    CHECK_THROWS_AS(subband_combine(bands, bad), ShapeError);
}

TEST_CASE("score: rho1^2 + rho2^2 arithmetic on constructed correlations") {
    const SpellerLayout layout = make_grid_layout(2, 10.0, 3.0);
    const int nt = 200;
    Rng rng(11);
    const RefBasis basis = make_basis(layout, nt, rng);

    // Signal correlating 0.6 with the template and 0.8 with the reference.
    const Vector x = 0.6 * basis.u + 0.8 * basis.v;
    const FilteredEpoch inst = epoch_from_rows({x});
    const FilteredEpoch tpl = epoch_from_rows({basis.u});

    std::vector<NetworkWeights> ensemble{stub_net(1, nt, 1, 2, 1, Matrix::Ones(1, 1))};
    TemplateBank bank;
    bank.by_participant.assign(1, std::vector<std::optional<TemplateBank::Entry>>(2));
    bank.by_participant[0][0] = TemplateBank::Entry{tpl.bands, 1};

    const ParticipantScore score =
        score_participant(inst, 0, ensemble, bank, layout, 2);
    CHECK(score.prediction == 1);
    CHECK(score.rho1 == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(score.rho2 == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(score.score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("score: candidate argmax follows the squared sum") {
    const SpellerLayout layout = make_grid_layout(2, 10.0, 3.0);
    const int nt = 200;
    Rng rng(13);
    const RefBasis basis = make_basis(layout, nt, rng);

    // Channel 1: (0.5, 0.5); channel 2: (0.9, 0.1). Candidates select single
    // channels, so Eq.-style selection must prefer 0.82 over 0.50.
    auto mixed = [&](double p, double q) {
        const double c = std::sqrt(1.0 - p * p - q * q);
        return Vector(p * basis.u + q * basis.v + c * basis.r);
    };
    const FilteredEpoch inst = epoch_from_rows({mixed(0.5, 0.5), mixed(0.9, 0.1)});
    const FilteredEpoch tpl = epoch_from_rows({basis.u, basis.u});

    std::vector<NetworkWeights> ensemble{stub_net(2, nt, 1, 2, 1, Matrix::Identity(2, 2))};
    TemplateBank bank;
    bank.by_participant.assign(1, std::vector<std::optional<TemplateBank::Entry>>(2));
    bank.by_participant[0][0] = TemplateBank::Entry{tpl.bands, 1};

    const ParticipantScore score = score_participant(inst, 0, ensemble, bank, layout, 2);
    CHECK(score.best_candidate == 1);
    CHECK(score.rho1 == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(score.rho2 == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(score.score == doctest::Approx(0.82).epsilon(1e-9));
}

TEST_CASE("score: instance equal to a harmonically pure template") {
    const SpellerLayout layout = make_grid_layout(2, 10.0, 3.0);
    const int nt = 200;
    const ReferenceSignal ref = make_reference_signal(layout, 1, 2, nt, 250.0);

    // Template rows live in the reference row space; the instance is the
    // template itself.
    Rng rng(17);
    std::vector<Vector> rows;
    for (int c = 0; c < 3; ++c) {
        Vector w(ref.rows.rows());
        for (int i = 0; i < w.size(); ++i) w(i) = rng.normal();
        rows.push_back(ref.rows.transpose() * w);
    }
    const FilteredEpoch tpl = epoch_from_rows(rows);

    Matrix w_c(3, 4);
    for (int i = 0; i < w_c.size(); ++i) w_c(i / 4, i % 4) = rng.normal();
    std::vector<NetworkWeights> ensemble{stub_net(3, nt, 1, 2, 1, w_c)};
    TemplateBank bank;
    bank.by_participant.assign(1, std::vector<std::optional<TemplateBank::Entry>>(2));
    bank.by_participant[0][0] = TemplateBank::Entry{tpl.bands, 2};

    const ParticipantScore score = score_participant(tpl, 0, ensemble, bank, layout, 2);
    CHECK(score.rho1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(score.score >= 1.0);
}

TEST_CASE("score: absent template and degenerate instance") {
    const SpellerLayout layout = make_grid_layout(2, 10.0, 3.0);
    const int nt = 100;
    std::vector<NetworkWeights> ensemble{stub_net(1, nt, 1, 2, 1, Matrix::Ones(1, 1))};
    TemplateBank bank;
    bank.by_participant.assign(1, std::vector<std::optional<TemplateBank::Entry>>(2));

    FilteredEpoch x;
    x.fs = 250.0;
    x.bands.assign(1, Matrix::Random(1, nt));

    // No template for the predicted character: flagged, score zero.
    ParticipantScore s = score_participant(x, 0, ensemble, bank, layout, 2);
    CHECK(s.template_absent);
    CHECK(s.score == 0.0);

    // Constant instance: every candidate degenerates.
    bank.by_participant[0][0] =
        TemplateBank::Entry{std::vector<Matrix>{Matrix::Random(1, nt)}, 1};
    x.bands[0].setZero();
    s = score_participant(x, 0, ensemble, bank, layout, 2);
    CHECK(s.degenerate);
    CHECK(s.score == 0.0);
    CHECK_THROWS_AS(rank_participants(x, ensemble, bank, layout, 2),
                    DegenerateInputError);
}

TEST_CASE("ranking: stable descending order") {
    std::vector<ParticipantScore> entries(4);
    entries[0].score = 0.2;
    entries[1].score = 0.9;
    entries[2].score = 0.9;
    entries[3].score = 0.1;
    CHECK(descending_order(entries) == std::vector<int>{1, 2, 0, 3});

    entries.resize(1);
    entries[0].score = 0.0;
    CHECK(descending_order(entries) == std::vector<int>{0});
}

TEST_CASE("ranking: trained ensemble, scale invariance of scores and order") {
    const TrainedFixture& f = fixture();
    const int nh = 4;
    const FilteredEpoch x = generate_instance(f.params, 1, 2, 3);
    const SimilarityReport base =
        rank_participants(x, f.ensemble, f.templates, f.cohort.layout, nh);

    FilteredEpoch scaled = x;
    for (auto& band : scaled.bands) band *= 2.5;
    const SimilarityReport rescored =
        rank_participants(scaled, f.ensemble, f.templates, f.cohort.layout, nh);

    REQUIRE(base.entries.size() == rescored.entries.size());
    for (std::size_t n = 0; n < base.entries.size(); ++n) {
        CHECK(base.entries[n].prediction == rescored.entries[n].prediction);
        CHECK(std::abs(base.entries[n].score - rescored.entries[n].score) < 1e-10);
    }
    CHECK(base.order == rescored.order);
}

TEST_CASE("ranking: exhaustive independent recomputation of the candidate max") {
    const TrainedFixture& f = fixture();
    const int nh = 4;
    for (int trial = 0; trial < 6; ++trial) {
        const FilteredEpoch x =
            generate_instance(f.params, trial % 3, 1 + trial % 4, 50 + trial);
        const SimilarityReport report =
            rank_participants(x, f.ensemble, f.templates, f.cohort.layout, nh);

        for (const auto& entry : report.entries) {
            if (entry.template_absent || entry.degenerate) continue;
            const NetworkWeights& net = f.ensemble[entry.participant];
            const auto& slot =
                f.templates.by_participant[entry.participant][entry.prediction - 1];
            REQUIRE(slot.has_value());

            const Matrix cx = subband_combine(x, net.w_s);
            const Matrix ct = subband_combine(slot->bands, net.w_s);
            const ReferenceSignal ref = make_reference_signal(
                f.cohort.layout, entry.prediction, nh, x.samples(), x.fs);

            double best = -1.0;
            int best_idx = -1;
            for (int i = 0; i < net.w_c.cols(); ++i) {
                const Vector sig = cx.transpose() * net.w_c.col(i);
                const Vector tpl = ct.transpose() * net.w_c.col(i);
                std::vector<double> sv(sig.data(), sig.data() + sig.size());
                std::vector<double> tv(tpl.data(), tpl.data() + tpl.size());
                const double r1 = oracle::pearson_naive(sv, tv);
                const double r2 = oracle::cca_eig_oracle(sig.transpose(), ref.rows);
                const double total = r1 * r1 + r2 * r2;
                if (total > best) {
                    best = total;
                    best_idx = i;
                }
            }
            CHECK(entry.best_candidate == best_idx);
            CHECK(entry.score == doctest::Approx(best).epsilon(1e-7));
            CHECK(entry.score >= 0.0);
            CHECK(entry.score <= 2.0);
        }
    }
}
