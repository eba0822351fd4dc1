#include "ssvep/baselines.hpp"

#include <cmath>

namespace ssvep {

namespace {

int argmax_label(const std::vector<double>& scores) {
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = static_cast<int>(i);
    return best + 1;
}

double signed_square(double r) { return r >= 0.0 ? r * r : -r * r; }

}  // namespace

std::vector<double> default_fb_weights(int n_subbands) {
    std::vector<double> w(n_subbands);
    for (int s = 1; s <= n_subbands; ++s)
        w[s - 1] = std::pow(static_cast<double>(s), -1.25) + 0.25;
    return w;
}

int cca_classify(const Matrix& x_band, double fs, const SpellerLayout& layout, int nh) {
    layout.validate();
    if (x_band.rows() < 1 || x_band.cols() < 2)
        throw ShapeError("cca_classify: empty input");
    const int m = layout.character_count();
    const int nt = static_cast<int>(x_band.cols());
    std::vector<double> scores(m);
    for (int i = 1; i <= m; ++i) {
        const ReferenceSignal ref = make_reference_signal(layout, i, nh, nt, fs);
        scores[i - 1] = canonical_correlation(x_band, ref.rows).corr;
    }
    return argmax_label(scores);
}

int fbcca_classify(const FilteredEpoch& x, const SpellerLayout& layout, int nh,
                   const std::vector<double>& fb_weights) {
    layout.validate();
    x.check_consistent();
    std::vector<double> w = fb_weights.empty() ? default_fb_weights(x.subbands()) : fb_weights;
    if (static_cast<int>(w.size()) != x.subbands())
        throw ShapeError("fbcca_classify: weight/sub-band count mismatch");
    for (double v : w)
        if (!(v > 0.0)) throw ConfigError("fbcca_classify: weights must be positive");

    const int m = layout.character_count();
    const int nt = x.samples();
    std::vector<double> scores(m, 0.0);
    for (int i = 1; i <= m; ++i) {
        const ReferenceSignal ref = make_reference_signal(layout, i, nh, nt, x.fs);
        for (int s = 0; s < x.subbands(); ++s) {
            const double rho = canonical_correlation(x.bands[s], ref.rows).corr;
            scores[i - 1] += w[s] * rho * rho;
        }
    }
    return argmax_label(scores);
}

CrossTemplates build_cross_templates(const CohortDataset& cohort, int band_index) {
    cohort.validate();
    const int m = cohort.layout.character_count();
    CrossTemplates out;
    out.per_character.resize(m);
    std::vector<int> counts(m, 0);
    for (const auto& part : cohort.participants) {
        for (std::size_t e = 0; e < part.epochs.size(); ++e) {
            const auto& epoch = part.epochs[e];
            if (band_index < 0 || band_index >= epoch.subbands())
                throw ShapeError("build_cross_templates: band index out of range");
            const int i = part.labels[e] - 1;
            if (counts[i] == 0)
                out.per_character[i] = epoch.bands[band_index];
            else
                out.per_character[i] += epoch.bands[band_index];
            ++counts[i];
        }
    }
    for (int i = 0; i < m; ++i) {
        if (counts[i] == 0)
            throw ConfigError("build_cross_templates: no epoch for character " +
                              std::to_string(i + 1));
        out.per_character[i] /= static_cast<double>(counts[i]);
    }
    return out;
}

int ttcca_classify(const Matrix& x_band, double fs, const CrossTemplates& templates,
                   const SpellerLayout& layout, int nh) {
    layout.validate();
    const int m = layout.character_count();
    if (static_cast<int>(templates.per_character.size()) != m)
        throw ShapeError("ttcca_classify: template count != M");
    const int nt = static_cast<int>(x_band.cols());

    std::vector<double> scores(m);
    for (int i = 1; i <= m; ++i) {
        const Matrix& tpl = templates.per_character[i - 1];
        if (tpl.rows() != x_band.rows() || tpl.cols() != nt)
            throw ShapeError("ttcca_classify: template shape mismatch");
        if (tpl.cwiseAbs().maxCoeff() == 0.0)
            throw DegenerateInputError("ttcca_classify: degenerate all-zero template");

        const ReferenceSignal ref = make_reference_signal(layout, i, nh, nt, fs);

        // (a) instance vs reference, keeping the instance-side channel weights.
        const CcaResult inst = canonical_correlation(x_band, ref.rows);
        const Vector via_inst_x = x_band.transpose() * inst.x_weights;
        const Vector via_inst_t = tpl.transpose() * inst.x_weights;

        // (b) instance vs template through those weights.
        const double r_b = pearson(via_inst_x, via_inst_t);

        // (c) same through the template-transferred weights.
        const CcaResult trans = canonical_correlation(tpl, ref.rows);
        const Vector via_trans_x = x_band.transpose() * trans.x_weights;
        const Vector via_trans_t = tpl.transpose() * trans.x_weights;
        const double r_c = pearson(via_trans_x, via_trans_t);

        scores[i - 1] =
            signed_square(inst.corr) + signed_square(r_b) + signed_square(r_c);
    }
    return argmax_label(scores);
}

}  // namespace ssvep
