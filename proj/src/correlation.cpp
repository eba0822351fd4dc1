#include "ssvep/correlation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace ssvep {

namespace {

constexpr double kRidgeScale = 1e-8;

Matrix center_rows(const Matrix& m) {
    return m.colwise() - m.rowwise().mean();
}

// Near-singularity test on an LDLT factorization.
bool ill_conditioned(const Eigen::LDLT<Matrix>& ldlt) {
    if (ldlt.info() != Eigen::Success) return true;
    const Vector d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0)) return true;
    return d.minCoeff() <= 1e-12 * dmax;
}

}  // namespace

ReferenceSignal make_reference_signal(const SpellerLayout& layout, int character,
                                      int nh, int nt, double fs) {
    layout.validate();
    const int m = layout.character_count();
    if (character < 1 || character > m)
        throw ConfigError("character index outside 1..M");
    if (nh < 1) throw ConfigError("need at least one harmonic");
    if (nt < 2) throw ConfigError("need at least two samples");
    if (!(fs > 0.0)) throw ConfigError("fs must be positive");

    const double f = layout.freqs[character - 1];
    const double phase = layout.phases[character - 1];
    if (!(nh * f < fs / 2.0))
        throw ConfigError("harmonic frequency above Nyquist");

    ReferenceSignal ref;
    ref.character = character;
    ref.rows.resize(2 * nh, nt);
    for (int h = 1; h <= nh; ++h) {
        const double w = 2.0 * std::numbers::pi * h * f;
        const double ph = h * phase;
        for (int t = 0; t < nt; ++t) {
            const double arg = w * t / fs + ph;
            ref.rows(2 * h - 2, t) = std::sin(arg);
            ref.rows(2 * h - 1, t) = std::cos(arg);
        }
    }
    return ref;
}

double pearson(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
    if (a.size() < 2) throw ShapeError("pearson: need at least 2 samples");
    const Vector ac = a.array() - a.mean();
    const Vector bc = b.array() - b.mean();
    const double na = ac.norm();
    const double nb = bc.norm();
    if (na == 0.0 || nb == 0.0)
        throw DegenerateInputError("pearson: zero variance input");
    return ac.dot(bc) / (na * nb);
}

PreparedReference prepare_reference(const ReferenceSignal& ref) {
    PreparedReference prep;
    prep.centered = center_rows(ref.rows);
    Matrix gram = prep.centered * prep.centered.transpose();
    prep.gram.compute(gram);
    if (ill_conditioned(prep.gram)) {
        gram.diagonal().array() += kRidgeScale * gram.trace();
        prep.gram.compute(gram);
        prep.regularized = true;
    }
    return prep;
}

HarmonicFit fit_harmonic_combination(const Vector& signal, const PreparedReference& ref) {
    if (signal.size() != ref.centered.cols())
        throw ShapeError("harmonic fit: signal/reference length mismatch");
    const Vector sc = signal.array() - signal.mean();
    const double sn = sc.norm();
    if (sn == 0.0) throw DegenerateInputError("harmonic fit: constant signal");

    HarmonicFit fit;
    fit.regularized = ref.regularized;
    fit.weights = ref.gram.solve(ref.centered * sc);
    const Vector fitted = ref.centered.transpose() * fit.weights;
    const double fn = fitted.norm();
    if (fn <= 1e-12 * sn) {
        // Signal lies outside the reference row space.
        fit.corr = 0.0;
        return fit;
    }
    fit.corr = sc.dot(fitted) / (sn * fn);
    if (fit.corr < 0.0) {
        fit.weights = -fit.weights;
        fit.corr = -fit.corr;
    }
    return fit;
}

HarmonicFit fit_harmonic_combination(const Vector& signal, const ReferenceSignal& ref) {
    return fit_harmonic_combination(signal, prepare_reference(ref));
}

CcaResult canonical_correlation(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw ShapeError("cca: sample count mismatch");
    if (x.cols() < 2) throw ShapeError("cca: need at least 2 samples");

    const Matrix xc = center_rows(x);
    const Matrix yc = center_rows(y);
    Matrix cxx = xc * xc.transpose();
    Matrix cyy = yc * yc.transpose();
    const Matrix cxy = xc * yc.transpose();

    CcaResult res;
    Eigen::LDLT<Matrix> lx(cxx);
    if (ill_conditioned(lx)) {
        cxx.diagonal().array() += kRidgeScale * cxx.trace();
        lx.compute(cxx);
        res.regularized = true;
    }
    Eigen::LDLT<Matrix> ly(cyy);
    if (ill_conditioned(ly)) {
        cyy.diagonal().array() += kRidgeScale * cyy.trace();
        ly.compute(cyy);
        res.regularized = true;
    }

    // Symmetric pencil: (Cxy Cyy^-1 Cyx) wx = rho^2 Cxx wx.
    const Matrix a = cxy * ly.solve(cxy.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, cxx);
    if (es.info() != Eigen::Success)
        throw DegenerateInputError("cca: eigensolver failed");
    const auto idx = es.eigenvalues().size() - 1;
    const double lambda = std::max(0.0, es.eigenvalues()(idx));
    res.corr = std::sqrt(lambda);
    res.x_weights = es.eigenvectors().col(idx);
    res.y_weights = ly.solve(cxy.transpose() * res.x_weights);

    // Fix signs so the realized correlation is non-negative.
    const Vector xs = xc.transpose() * res.x_weights;
    const Vector ys = yc.transpose() * res.y_weights;
    if (xs.dot(ys) < 0.0) res.y_weights = -res.y_weights;
    return res;
}

}  // namespace ssvep
