#pragma once

// Training-free classical identifiers: standard CCA, filter-bank CCA, and
// transfer-template tt-CCA.

#include "ssvep/correlation.hpp"
#include "ssvep/types.hpp"

namespace ssvep {

struct BaselineConfig {
    int nh = 5;
    std::vector<double> fb_weights;  // empty: s^-1.25 + 0.25 per sub-band
};

// The usual FBCCA fusion weighting, w(s) = s^-1.25 + 0.25.
std::vector<double> default_fb_weights(int n_subbands);

// Per character, the largest canonical correlation between the multichannel
// signal and that character's harmonic reference; argmax wins.
int cca_classify(const Matrix& x_band, double fs, const SpellerLayout& layout, int nh);

// Per-sub-band CCA correlations fused as sum_s w_s * rho_s^2.
int fbcca_classify(const FilteredEpoch& x, const SpellerLayout& layout, int nh,
                   const std::vector<double>& fb_weights = {});

struct CrossTemplates {
    std::vector<Matrix> per_character;  // C x Nt, mean over all participants' epochs
};

// Cross-participant mean signal per character from one sub-band slice of the
// cohort (all epochs, no correctness filtering).
CrossTemplates build_cross_templates(const CohortDataset& cohort, int band_index = 0);

// tt-CCA: three coefficients per character (instance vs reference via CCA,
// instance vs template under the instance-side channel weights, and the same
// under the template-transferred weights), fused as sum of sign(r) * r^2.
int ttcca_classify(const Matrix& x_band, double fs, const CrossTemplates& templates,
                   const SpellerLayout& layout, int nh);

}  // namespace ssvep
