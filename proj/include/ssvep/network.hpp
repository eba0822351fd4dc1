#pragma once

// The constituent convolutional network and its two-stage training.
//
// Layers: (1) sub-band combination, (2) channel combinations, (3) strided
// temporal convolution + ReLU, (4) same-padded temporal convolution + ReLU,
// (5) fully connected to M logits + softmax. Dropout sits between layers
// 2-3, 3-4 and 4-5 during training (inverted scaling, so inference needs no
// rescaling). Backpropagation is hand-derived for this fixed topology.

#include "ssvep/rng.hpp"
#include "ssvep/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace ssvep {

struct NetworkShape {
    int channels = 9;
    int time = 0;
    int subbands = 3;
    int classes = 40;
    int n_ch = 120;     // layer-2 channel combinations
    int l3_maps = 120;
    int l3_kernel = 2;
    int l3_stride = 2;
    int l4_maps = 120;
    int l4_kernel = 10;  // stride 1, same-length padding

    int l3_time() const { return (time - l3_kernel) / l3_stride + 1; }
    int l4_time() const { return l3_time(); }
    int fc_inputs() const { return l4_maps * l4_time(); }

    void validate() const;

    bool operator==(const NetworkShape&) const = default;
};

struct NetworkWeights {
    NetworkShape shape;
    Vector w_s;               // Ns              (layer 1, no bias)
    Matrix w_c;               // C x n_ch        (layer 2, no bias)
    std::vector<Matrix> w3;   // l3_kernel tensors of l3_maps x n_ch
    Vector b3;                // l3_maps
    std::vector<Matrix> w4;   // l4_kernel tensors of l4_maps x l3_maps
    Vector b4;                // l4_maps
    Matrix w_fc;              // M x fc_inputs
    Vector b_fc;              // M

    // Visit every parameter tensor in a fixed order. is_weight distinguishes
    // L2-regularized weights from biases.
    void visit(const std::function<void(double*, std::ptrdiff_t, bool is_weight)>& fn);
    void visit(const std::function<void(const double*, std::ptrdiff_t, bool is_weight)>& fn) const;

    std::ptrdiff_t parameter_count() const;
    double squared_weight_norm() const;  // weights only, biases excluded
};

// Gradients share the weight layout exactly.
using Gradients = NetworkWeights;

struct TrainingConfig {
    double lambda_l2 = 0.001;
    std::array<double, 3> dropout{0.1, 0.1, 0.95};  // between layers 2-3, 3-4, 4-5
    int batch_size = 32;
    int epochs_global = 500;
    int epochs_finetune = 200;
    double lr_global = 1e-4;
    double lr_finetune = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t rng_seed = 0;
    int n_threads = 1;  // fine_tune_all fan-out

    void validate() const;
};

enum class RunMode { train, eval };

struct ForwardTrace {
    Matrix a1;   // C x Nt, sub-band combination
    Matrix d2;   // n_ch x Nt, channel combinations after dropout
    Matrix m2;   // dropout mask (entries 0 or 1/(1-p)); empty when inactive
    Matrix z3;   // l3_maps x T3, pre-activation
    Matrix d3;   // relu(z3) after dropout
    Matrix m3;
    Matrix z4;   // l4_maps x T3
    Matrix d4;   // relu(z4) after dropout
    Matrix m4;
    Vector logits;
    Vector softmax;  // positive, sums to 1
};

NetworkWeights init_weights(const NetworkShape& shape, std::uint64_t seed);

// Eval mode ignores rng and applies no dropout; train mode draws inverted
// dropout masks from rng at the given probabilities (layers 2-3, 3-4, 4-5).
ForwardTrace forward(const NetworkWeights& w, const FilteredEpoch& x, RunMode mode,
                     Rng* rng = nullptr,
                     const std::array<double, 3>& dropout = {0.1, 0.1, 0.95});

// Re-run the forward pass under externally fixed dropout masks (empty mask =
// identity). Lets finite-difference checks probe the exact masked objective.
ForwardTrace forward_with_masks(const NetworkWeights& w, const FilteredEpoch& x,
                                const Matrix& m2, const Matrix& m3, const Matrix& m4);

struct LossResult {
    double value = 0.0;
    bool clamped = false;  // log argument hit the 1e-12 floor
};

// Batch loss: mean cross entropy plus lambda * |weights|^2.
LossResult loss(std::span<const ForwardTrace> traces, std::span<const int> labels,
                const NetworkWeights& w, double lambda_l2);

// Accumulate dLoss/dParams for one instance, scaled by inv_batch. Caller adds
// the L2 term once per batch via add_l2_gradient.
void backward(const NetworkWeights& w, const FilteredEpoch& x, const ForwardTrace& trace,
              int label, double inv_batch, Gradients& accum);

Gradients zero_gradients(const NetworkShape& shape);
void add_l2_gradient(const NetworkWeights& w, double lambda_l2, Gradients& grads);

// Label (1..M; ties break to the lowest index) and eval-mode softmax.
std::pair<int, Vector> predict(const NetworkWeights& w, const FilteredEpoch& x);

struct TrainRecord {
    std::vector<double> epoch_loss;  // mean batch loss per training epoch
};

// Stage one: one global network over every participant's epochs.
NetworkWeights train_global(const CohortDataset& cohort, const NetworkShape& shape,
                            const TrainingConfig& cfg, TrainRecord* record = nullptr);

// Continue training `start` on one participant's epochs only.
NetworkWeights fine_tune(const NetworkWeights& start, const ParticipantRecords& participant,
                         const TrainingConfig& cfg, std::uint64_t seed,
                         TrainRecord* record = nullptr);

// Stage two: fine-tune the global network to every participant. The global
// weights are left untouched; participants train on independent derived
// seeds, so the fan-out may run in parallel without changing results.
std::vector<NetworkWeights> fine_tune_all(const NetworkWeights& global_w,
                                          const CohortDataset& cohort,
                                          const TrainingConfig& cfg);

}  // namespace ssvep
