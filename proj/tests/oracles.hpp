#pragma once

// Independent oracles used by the test suites. These deliberately avoid the
// library's implementation paths: CCA is solved here as a two-block
// generalized eigenproblem (and separately via SVD whitening), votes are
// recounted from scratch, and reductions use naive loops.

#include "ssvep/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <complex>
#include <map>
#include <vector>

namespace oracle {

using ssvep::Matrix;
using ssvep::Vector;

inline Matrix center_rows(const Matrix& m) {
    return m.colwise() - m.rowwise().mean();
}

// Largest canonical correlation via the symmetric two-block pencil
//   [ 0   Cxy ] v = rho [ Cxx  0  ] v
//   [ Cyx  0  ]         [ 0   Cyy ]
inline double cca_eig_oracle(const Matrix& x, const Matrix& y) {
    const Matrix xc = center_rows(x);
    const Matrix yc = center_rows(y);
    const auto p = xc.rows(), q = yc.rows();
    Matrix a = Matrix::Zero(p + q, p + q);
    Matrix b = Matrix::Zero(p + q, p + q);
    a.topRightCorner(p, q) = xc * yc.transpose();
    a.bottomLeftCorner(q, p) = a.topRightCorner(p, q).transpose();
    b.topLeftCorner(p, p) = xc * xc.transpose();
    b.bottomRightCorner(q, q) = yc * yc.transpose();
    // Small ridge keeps the pencil definite for numerically deficient inputs.
    b.diagonal().array() += 1e-12 * b.trace();
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b);
    return es.eigenvalues().maxCoeff();
}

// Largest canonical correlation via whitening: rho = sigma_max of
// Cxx^-1/2 Cxy Cyy^-1/2.
inline double cca_svd_oracle(const Matrix& x, const Matrix& y) {
    const Matrix xc = center_rows(x);
    const Matrix yc = center_rows(y);
    auto inv_sqrt = [](const Matrix& c) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        const double floor = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
        Vector d = es.eigenvalues();
        for (int i = 0; i < d.size(); ++i)
            d(i) = d(i) > floor ? 1.0 / std::sqrt(d(i)) : 0.0;
        return Matrix(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose());
    };
    const Matrix k = inv_sqrt(xc * xc.transpose()) * (xc * yc.transpose()) *
                     inv_sqrt(yc * yc.transpose());
    Eigen::JacobiSVD<Matrix> svd(k);
    return svd.singularValues()(0);
}

inline double pearson_naive(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Elementwise loop version of the sub-band combination.
inline Matrix subband_combine_naive(const std::vector<Matrix>& bands, const Vector& w) {
    Matrix out = Matrix::Zero(bands[0].rows(), bands[0].cols());
    for (std::size_t s = 0; s < bands.size(); ++s)
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j) out(i, j) += w(s) * bands[s](i, j);
    return out;
}

// Modal label by explicit counting; ties resolved to the lowest label.
inline int majority_naive(const std::vector<int>& preds) {
    std::map<int, int> counts;
    for (int p : preds) ++counts[p];
    int best = preds[0], best_count = -1;
    for (const auto& [label, count] : counts)
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    return best;
}

// Brute-force weighted-vote sweep: fresh tally per k, best confidence wins,
// ties on confidence keep the smallest k, ties on weight keep the lowest
// character.
struct VoteOracle {
    int label = 0;
    int chosen_k = 0;
    double confidence = 0.0;
    std::vector<int> label_per_k;
    std::vector<double> conf_per_k;
};

inline VoteOracle dynamic_vote_oracle(const std::vector<int>& order,
                                      const std::vector<double>& scores,
                                      const std::vector<int>& preds, int m) {
    VoteOracle out;
    const int n = static_cast<int>(order.size());
    for (int k = 1; k <= n; ++k) {
        std::vector<double> tally(m, 0.0);
        for (int j = 0; j < k; ++j) tally[preds[order[j]] - 1] += scores[order[j]];
        int best = 0;
        for (int i = 1; i < m; ++i)
            if (tally[i] > tally[best]) best = i;
        double runner = 0.0;
        for (int i = 0; i < m; ++i)
            if (i != best) runner = std::max(runner, tally[i]);
        const double conf = tally[best] - runner;
        out.label_per_k.push_back(best + 1);
        out.conf_per_k.push_back(conf);
        if (k == 1 || conf > out.confidence) {
            out.chosen_k = k;
            out.label = best + 1;
            out.confidence = conf;
        }
    }
    return out;
}

// Magnitude of the length-n DFT at every bin (naive quadratic sum).
inline std::vector<double> dft_magnitude(const Vector& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> mag(n / 2 + 1);
    for (int k = 0; k <= n / 2; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int t = 0; t < n; ++t)
            acc += x(t) * std::polar(1.0, -2.0 * 3.14159265358979323846 * k * t / n);
        mag[k] = std::abs(acc);
    }
    return mag;
}

}  // namespace oracle
