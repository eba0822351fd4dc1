#pragma once

// Correlation and combination primitives: Pearson coefficient, synthetic
// harmonic reference signals, the one-sided harmonic-combination fit, and
// full two-sided canonical correlation analysis.

#include "ssvep/types.hpp"

#include <Eigen/Cholesky>

namespace ssvep {

// Sine/cosine pairs at harmonics 1..nh of the character's tagging frequency,
// sampled at t = 0, 1/fs, ..., (nt-1)/fs. The layout's per-character phase
// enters harmonic h as h*phase, so a zero-phase layout gives the plain
// sin/cos composition.
ReferenceSignal make_reference_signal(const SpellerLayout& layout, int character,
                                      int nh, int nt, double fs);

// Standard mean-centered Pearson correlation coefficient. Throws
// DegenerateInputError when either input is constant.
double pearson(const Vector& a, const Vector& b);

struct HarmonicFit {
    Vector weights;  // 2*Nh harmonic combination, sign-normalized so corr >= 0
    double corr = 0.0;
    bool regularized = false;  // ridge engaged on a singular Gram matrix
};

// Centered reference rows with a factored Gram matrix, reusable across many
// fits against the same character.
struct PreparedReference {
    Matrix centered;  // 2*Nh x Nt, rows mean-centered
    Eigen::LDLT<Matrix> gram;
    bool regularized = false;
};

PreparedReference prepare_reference(const ReferenceSignal& ref);

// Best linear combination of the reference rows approximating the signal.
// One side of the CCA is one-dimensional, so the optimum is the least-squares
// regression of the centered signal onto the centered rows; corr is the
// Pearson coefficient at the optimum.
HarmonicFit fit_harmonic_combination(const Vector& signal, const PreparedReference& ref);
HarmonicFit fit_harmonic_combination(const Vector& signal, const ReferenceSignal& ref);

struct CcaResult {
    double corr = 0.0;
    Vector x_weights;  // combination over X rows
    Vector y_weights;  // combination over Y rows, sign fixed so corr >= 0
    bool regularized = false;
};

// Largest canonical correlation between two multichannel signals
// (rows = variables, columns = samples). Rank-deficient covariances fall
// back to a ridge of 1e-8 * trace.
CcaResult canonical_correlation(const Matrix& x, const Matrix& y);

}  // namespace ssvep
