#pragma once

// Final target identification: similarity-weighted voting over the k most
// representative participants, dynamic selection of k by vote-margin
// confidence, and the plain majority combiner used for comparison.

#include "ssvep/similarity.hpp"

namespace ssvep {

struct VoteTally {
    std::vector<double> weight;  // index = character - 1

    double total() const;
};

struct VoteResult {
    int label = 0;  // 1..M; ties break to the lowest character index
    double confidence = 0.0;  // top weight minus runner-up (0 when single voter class)
    VoteTally tally;
};

struct KTraceEntry {
    int k = 0;
    int label = 0;
    double confidence = 0.0;
};

struct EnsembleDecision {
    int label = 0;
    int chosen_k = 0;
    double confidence = 0.0;
    VoteTally tally;                  // at chosen_k
    std::vector<KTraceEntry> per_k;   // full sweep k = 1..N
    std::vector<int> predictions;     // per-participant labels, ensemble order
    SimilarityReport report;
};

// Eq.-style weighted vote over the k most similar participants.
VoteResult weighted_vote(const SimilarityReport& report, const std::vector<int>& predictions,
                         int k, int n_classes);

// Sweep every k, keep the k of largest confidence (ties: smallest k).
EnsembleDecision dynamic_select(const SimilarityReport& report,
                                const std::vector<int>& predictions, int n_classes);

// Unweighted modal prediction; ties break to the lowest character index.
int majority_vote(const std::vector<int>& predictions, int n_classes);

struct ClassifyMode {
    enum class Kind { dynamic, fixed, majority };
    Kind kind = Kind::dynamic;
    int k = 0;  // for fixed

    static ClassifyMode dynamic() { return {Kind::dynamic, 0}; }
    static ClassifyMode fixed(int k) { return {Kind::fixed, k}; }
    static ClassifyMode majority() { return {Kind::majority, 0}; }
};

// The full per-instance pipeline: per-participant predictions, similarity
// ranking, then the selected combiner. The per-k trace is always recorded.
EnsembleDecision classify_instance(const FilteredEpoch& x,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh,
                                   ClassifyMode mode = ClassifyMode::dynamic());

}  // namespace ssvep
