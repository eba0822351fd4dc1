#include "ssvep/network.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

namespace ssvep {

namespace {

// Columns t = tau, tau + stride, ... of a column-major matrix, viewed without copying.
using StridedCols = Eigen::Map<const Matrix, Eigen::Unaligned, Eigen::OuterStride<>>;

StridedCols strided_cols(const Matrix& m, int tau, int stride, int count) {
    return StridedCols(m.data() + static_cast<std::ptrdiff_t>(tau) * m.rows(),
                       m.rows(), count, Eigen::OuterStride<>(stride * m.rows()));
}

Matrix draw_mask(int rows, int cols, double p, Rng& rng) {
    Matrix m(rows, cols);
    const double scale = 1.0 / (1.0 - p);
    double* data = m.data();
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(rows) * cols;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        data[i] = rng.uniform() < p ? 0.0 : scale;
    return m;
}

// Core forward pass. Masks may be empty (identity).
ForwardTrace run_forward(const NetworkWeights& w, const FilteredEpoch& x,
                         Matrix m2, Matrix m3, Matrix m4) {
    const NetworkShape& s = w.shape;
    if (x.channels() != s.channels || x.samples() != s.time || x.subbands() != s.subbands)
        throw ShapeError("forward: epoch shape does not match network");

    ForwardTrace tr;
    tr.m2 = std::move(m2);
    tr.m3 = std::move(m3);
    tr.m4 = std::move(m4);

    tr.a1 = w.w_s(0) * x.bands[0];
    for (int sb = 1; sb < s.subbands; ++sb) tr.a1 += w.w_s(sb) * x.bands[sb];

    tr.d2 = w.w_c.transpose() * tr.a1;
    if (tr.m2.size() > 0) tr.d2 = tr.d2.cwiseProduct(tr.m2);

    const int t3 = s.l3_time();
    tr.z3 = w.b3.replicate(1, t3);
    for (int tau = 0; tau < s.l3_kernel; ++tau)
        tr.z3.noalias() += w.w3[tau] * strided_cols(tr.d2, tau, s.l3_stride, t3);
    tr.d3 = tr.z3.cwiseMax(0.0);
    if (tr.m3.size() > 0) tr.d3 = tr.d3.cwiseProduct(tr.m3);

    const int pad = (s.l4_kernel - 1) / 2;
    tr.z4 = w.b4.replicate(1, t3);
    for (int tau = 0; tau < s.l4_kernel; ++tau) {
        const int shift = tau - pad;  // input col = output col + shift
        const int lo = std::max(0, -shift);
        const int hi = std::min(t3, t3 - shift);
        if (lo >= hi) continue;
        tr.z4.middleCols(lo, hi - lo).noalias() +=
            w.w4[tau] * tr.d3.middleCols(lo + shift, hi - lo);
    }
    tr.d4 = tr.z4.cwiseMax(0.0);
    if (tr.m4.size() > 0) tr.d4 = tr.d4.cwiseProduct(tr.m4);

    const Eigen::Map<const Vector> flat(tr.d4.data(), tr.d4.size());
    tr.logits = w.w_fc * flat + w.b_fc;

    const double zmax = tr.logits.maxCoeff();
    tr.softmax = (tr.logits.array() - zmax).exp();
    tr.softmax /= tr.softmax.sum();
    return tr;
}

class AdamOptimizer {
public:
    AdamOptimizer(std::ptrdiff_t n, const TrainingConfig& cfg)
        : m_(Vector::Zero(n)), v_(Vector::Zero(n)),
          beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps) {}

    void step(NetworkWeights& w, const Gradients& g, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        std::ptrdiff_t off = 0;
        // Gradients mirror the weight layout, so walk both in lockstep.
        std::vector<std::pair<const double*, std::ptrdiff_t>> gblocks;
        g.visit([&](const double* p, std::ptrdiff_t n, bool) { gblocks.emplace_back(p, n); });
        std::size_t bi = 0;
        w.visit([&](double* p, std::ptrdiff_t n, bool) {
            const double* gp = gblocks[bi].first;
            for (std::ptrdiff_t i = 0; i < n; ++i) {
                const double grad = gp[i];
                m_(off + i) = beta1_ * m_(off + i) + (1.0 - beta1_) * grad;
                v_(off + i) = beta2_ * v_(off + i) + (1.0 - beta2_) * grad * grad;
                const double mhat = m_(off + i) / bc1;
                const double vhat = v_(off + i) / bc2;
                p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
            off += n;
            ++bi;
        });
    }

private:
    Vector m_, v_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

struct Sample {
    const FilteredEpoch* epoch;
    int label;
};

NetworkWeights train_on(const std::vector<Sample>& data, NetworkWeights w,
                        const TrainingConfig& cfg, int epochs, double lr,
                        std::uint64_t seed, TrainRecord* record) {
    if (epochs <= 0 || data.empty()) return w;
    Rng rng(seed);
    AdamOptimizer adam(w.parameter_count(), cfg);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with our own rng keeps the shuffle reproducible.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            Gradients grads = zero_gradients(w.shape);
            std::vector<ForwardTrace> traces;
            std::vector<int> labels;
            traces.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& smp = data[order[i]];
                traces.push_back(forward(w, *smp.epoch, RunMode::train, &rng, cfg.dropout));
                labels.push_back(smp.label);
                backward(w, *smp.epoch, traces.back(), smp.label, inv_batch, grads);
            }
            add_l2_gradient(w, cfg.lambda_l2, grads);
            const LossResult lr_now = loss(traces, labels, w, cfg.lambda_l2);
            if (!std::isfinite(lr_now.value))
                throw Error("training diverged (non-finite loss) at epoch " +
                            std::to_string(epoch));
            loss_sum += lr_now.value;
            ++batches;
            adam.step(w, grads, lr);
        }
        if (record) record->epoch_loss.push_back(loss_sum / std::max(1, batches));
    }
    return w;
}

}  // namespace

void NetworkShape::validate() const {
    if (channels < 1 || time < 1 || subbands < 1 || classes < 2)
        throw ConfigError("network shape: bad data dimensions");
    if (n_ch < 1 || l3_maps < 1 || l4_maps < 1)
        throw ConfigError("network shape: bad map counts");
    if (l3_kernel < 1 || l3_stride < 1 || l4_kernel < 1)
        throw ConfigError("network shape: bad kernel configuration");
    if (time < l3_kernel)
        throw ConfigError("network shape: epoch shorter than layer-3 kernel");
    if (l3_time() < 1) throw ConfigError("network shape: layer-3 output empty");
}

void TrainingConfig::validate() const {
    for (double p : dropout)
        if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probabilities must be in [0,1)");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (!(lr_global > 0.0) || !(lr_finetune > 0.0))
        throw ConfigError("learning rates must be positive");
    if (epochs_global < 0 || epochs_finetune < 0)
        throw ConfigError("epoch counts must be >= 0");
    if (!(lambda_l2 >= 0.0)) throw ConfigError("lambda_l2 must be >= 0");
    if (n_threads < 1) throw ConfigError("n_threads must be >= 1");
}

void NetworkWeights::visit(
    const std::function<void(double*, std::ptrdiff_t, bool)>& fn) {
    fn(w_s.data(), w_s.size(), true);
    fn(w_c.data(), w_c.size(), true);
    for (auto& t : w3) fn(t.data(), t.size(), true);
    fn(b3.data(), b3.size(), false);
    for (auto& t : w4) fn(t.data(), t.size(), true);
    fn(b4.data(), b4.size(), false);
    fn(w_fc.data(), w_fc.size(), true);
    fn(b_fc.data(), b_fc.size(), false);
}

void NetworkWeights::visit(
    const std::function<void(const double*, std::ptrdiff_t, bool)>& fn) const {
    const_cast<NetworkWeights*>(this)->visit(
        [&](double* p, std::ptrdiff_t n, bool w) { fn(p, n, w); });
}

std::ptrdiff_t NetworkWeights::parameter_count() const {
    std::ptrdiff_t total = 0;
    visit([&](const double*, std::ptrdiff_t n, bool) { total += n; });
    return total;
}

double NetworkWeights::squared_weight_norm() const {
    double total = 0.0;
    visit([&](const double* p, std::ptrdiff_t n, bool is_weight) {
        if (!is_weight) return;
        for (std::ptrdiff_t i = 0; i < n; ++i) total += p[i] * p[i];
    });
    return total;
}

NetworkWeights init_weights(const NetworkShape& shape, std::uint64_t seed) {
    shape.validate();
    NetworkWeights w;
    w.shape = shape;
    w.w_s = Vector::Ones(shape.subbands);  // layer 1 starts at unity
    w.w_c.resize(shape.channels, shape.n_ch);
    w.w3.assign(shape.l3_kernel, Matrix(shape.l3_maps, shape.n_ch));
    w.b3 = Vector::Zero(shape.l3_maps);
    w.w4.assign(shape.l4_kernel, Matrix(shape.l4_maps, shape.l3_maps));
    w.b4 = Vector::Zero(shape.l4_maps);
    w.w_fc.resize(shape.classes, shape.fc_inputs());
    w.b_fc = Vector::Zero(shape.classes);

    Rng rng(seed);
    auto fill = [&](Matrix& m) {
        double* p = m.data();
        for (std::ptrdiff_t i = 0; i < m.size(); ++i) p[i] = rng.normal(0.0, 0.01);
    };
    fill(w.w_c);
    for (auto& t : w.w3) fill(t);
    for (auto& t : w.w4) fill(t);
    fill(w.w_fc);
    return w;
}

ForwardTrace forward(const NetworkWeights& w, const FilteredEpoch& x, RunMode mode,
                     Rng* rng, const std::array<double, 3>& dropout) {
    if (mode == RunMode::eval) return run_forward(w, x, {}, {}, {});
    if (rng == nullptr) throw ConfigError("train-mode forward needs an rng");
    // Mask draw order is fixed: layer 2-3, then 3-4, then 4-5.
    const NetworkShape& s = w.shape;
    Matrix m2, m3, m4;
    if (dropout[0] > 0.0) m2 = draw_mask(s.n_ch, s.time, dropout[0], *rng);
    if (dropout[1] > 0.0) m3 = draw_mask(s.l3_maps, s.l3_time(), dropout[1], *rng);
    if (dropout[2] > 0.0) m4 = draw_mask(s.l4_maps, s.l4_time(), dropout[2], *rng);
    return run_forward(w, x, std::move(m2), std::move(m3), std::move(m4));
}

ForwardTrace forward_with_masks(const NetworkWeights& w, const FilteredEpoch& x,
                                const Matrix& m2, const Matrix& m3, const Matrix& m4) {
    return run_forward(w, x, m2, m3, m4);
}

LossResult loss(std::span<const ForwardTrace> traces, std::span<const int> labels,
                const NetworkWeights& w, double lambda_l2) {
    if (traces.size() != labels.size() || traces.empty())
        throw ShapeError("loss: trace/label count mismatch");
    LossResult res;
    double ce = 0.0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const int q = labels[i];
        if (q < 1 || q > w.shape.classes) throw ConfigError("loss: label outside 1..M");
        double p = traces[i].softmax(q - 1);
        if (p < 1e-12) {
            p = 1e-12;
            res.clamped = true;
        }
        ce -= std::log(p);
    }
    res.value = ce / static_cast<double>(traces.size()) +
                lambda_l2 * w.squared_weight_norm();
    return res;
}

Gradients zero_gradients(const NetworkShape& shape) {
    Gradients g;
    g.shape = shape;
    g.w_s = Vector::Zero(shape.subbands);
    g.w_c = Matrix::Zero(shape.channels, shape.n_ch);
    g.w3.assign(shape.l3_kernel, Matrix::Zero(shape.l3_maps, shape.n_ch));
    g.b3 = Vector::Zero(shape.l3_maps);
    g.w4.assign(shape.l4_kernel, Matrix::Zero(shape.l4_maps, shape.l3_maps));
    g.b4 = Vector::Zero(shape.l4_maps);
    g.w_fc = Matrix::Zero(shape.classes, shape.fc_inputs());
    g.b_fc = Vector::Zero(shape.classes);
    return g;
}

void add_l2_gradient(const NetworkWeights& w, double lambda_l2, Gradients& grads) {
    if (lambda_l2 == 0.0) return;
    std::vector<std::pair<const double*, std::ptrdiff_t>> wblocks;
    std::vector<bool> is_w;
    w.visit([&](const double* p, std::ptrdiff_t n, bool iw) {
        wblocks.emplace_back(p, n);
        is_w.push_back(iw);
    });
    std::size_t bi = 0;
    grads.visit([&](double* g, std::ptrdiff_t n, bool) {
        if (is_w[bi]) {
            const double* p = wblocks[bi].first;
            for (std::ptrdiff_t i = 0; i < n; ++i) g[i] += 2.0 * lambda_l2 * p[i];
        }
        ++bi;
    });
}

void backward(const NetworkWeights& w, const FilteredEpoch& x, const ForwardTrace& tr,
              int label, double inv_batch, Gradients& g) {
    const NetworkShape& s = w.shape;
    if (label < 1 || label > s.classes) throw ConfigError("backward: label outside 1..M");

    // Softmax cross entropy: dL/dlogits = s - onehot.
    Vector dlogits = tr.softmax * inv_batch;
    dlogits(label - 1) -= inv_batch;

    const Eigen::Map<const Vector> flat(tr.d4.data(), tr.d4.size());
    g.w_fc.noalias() += dlogits * flat.transpose();
    g.b_fc += dlogits;

    Vector dflat = w.w_fc.transpose() * dlogits;
    Matrix dz4 = Eigen::Map<const Matrix>(dflat.data(), s.l4_maps, s.l4_time());
    if (tr.m4.size() > 0) dz4 = dz4.cwiseProduct(tr.m4);
    dz4 = dz4.cwiseProduct((tr.z4.array() > 0.0).cast<double>().matrix());

    g.b4 += dz4.rowwise().sum();
    const int t3 = s.l3_time();
    const int pad = (s.l4_kernel - 1) / 2;
    Matrix dd3 = Matrix::Zero(s.l3_maps, t3);
    for (int tau = 0; tau < s.l4_kernel; ++tau) {
        const int shift = tau - pad;
        const int lo = std::max(0, -shift);
        const int hi = std::min(t3, t3 - shift);
        if (lo >= hi) continue;
        g.w4[tau].noalias() +=
            dz4.middleCols(lo, hi - lo) * tr.d3.middleCols(lo + shift, hi - lo).transpose();
        dd3.middleCols(lo + shift, hi - lo).noalias() +=
            w.w4[tau].transpose() * dz4.middleCols(lo, hi - lo);
    }

    Matrix dz3 = dd3;
    if (tr.m3.size() > 0) dz3 = dz3.cwiseProduct(tr.m3);
    dz3 = dz3.cwiseProduct((tr.z3.array() > 0.0).cast<double>().matrix());

    g.b3 += dz3.rowwise().sum();
    Matrix dd2 = Matrix::Zero(s.n_ch, s.time);
    for (int tau = 0; tau < s.l3_kernel; ++tau) {
        g.w3[tau].noalias() += dz3 * strided_cols(tr.d2, tau, s.l3_stride, t3).transpose();
        // Scatter back into the strided columns.
        for (int u = 0; u < t3; ++u)
            dd2.col(u * s.l3_stride + tau).noalias() += w.w3[tau].transpose() * dz3.col(u);
    }

    if (tr.m2.size() > 0) dd2 = dd2.cwiseProduct(tr.m2);
    g.w_c.noalias() += tr.a1 * dd2.transpose();
    Matrix da1 = w.w_c * dd2;
    for (int sb = 0; sb < s.subbands; ++sb)
        g.w_s(sb) += x.bands[sb].cwiseProduct(da1).sum();
}

std::pair<int, Vector> predict(const NetworkWeights& w, const FilteredEpoch& x) {
    ForwardTrace tr = forward(w, x, RunMode::eval);
    int best = 0;
    for (int i = 1; i < tr.softmax.size(); ++i)
        if (tr.softmax(i) > tr.softmax(best)) best = i;
    return {best + 1, std::move(tr.softmax)};
}

NetworkWeights train_global(const CohortDataset& cohort, const NetworkShape& shape,
                            const TrainingConfig& cfg, TrainRecord* record) {
    cfg.validate();
    if (cohort.participants.empty()) throw ConfigError("train_global: empty cohort");
    std::vector<Sample> data;
    for (const auto& part : cohort.participants)
        for (std::size_t i = 0; i < part.epochs.size(); ++i)
            data.push_back({&part.epochs[i], part.labels[i]});
    NetworkWeights w = init_weights(shape, derive_seed(cfg.rng_seed, 0x1717));
    return train_on(data, std::move(w), cfg, cfg.epochs_global, cfg.lr_global,
                    derive_seed(cfg.rng_seed, 0x6106), record);
}

NetworkWeights fine_tune(const NetworkWeights& start, const ParticipantRecords& part,
                         const TrainingConfig& cfg, std::uint64_t seed,
                         TrainRecord* record) {
    std::vector<Sample> data;
    for (std::size_t i = 0; i < part.epochs.size(); ++i)
        data.push_back({&part.epochs[i], part.labels[i]});
    return train_on(data, start, cfg, cfg.epochs_finetune, cfg.lr_finetune, seed, record);
}

std::vector<NetworkWeights> fine_tune_all(const NetworkWeights& global_w,
                                          const CohortDataset& cohort,
                                          const TrainingConfig& cfg) {
    cfg.validate();
    const int n = cohort.participant_count();
    std::vector<NetworkWeights> ensemble(n);
    auto run_one = [&](int i) {
        ensemble[i] = fine_tune(global_w, cohort.participants[i], cfg,
                                derive_seed(cfg.rng_seed, 0xF17E, static_cast<std::uint64_t>(i)));
    };
    if (cfg.n_threads <= 1) {
        for (int i = 0; i < n; ++i) run_one(i);
        return ensemble;
    }
    std::vector<std::future<void>> pending;
    for (int i = 0; i < n; ++i) {
        pending.push_back(std::async(std::launch::async, run_one, i));
        if (pending.size() >= static_cast<std::size_t>(cfg.n_threads)) {
            for (auto& f : pending) f.get();
            pending.clear();
        }
    }
    for (auto& f : pending) f.get();
    return ensemble;
}

}  // namespace ssvep
