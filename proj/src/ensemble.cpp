#include "ssvep/ensemble.hpp"

#include <numeric>

namespace ssvep {

namespace {

// Winner and margin of a tally; lowest character index wins ties.
std::pair<int, double> tally_winner(const std::vector<double>& weight) {
    int best = 0;
    for (std::size_t i = 1; i < weight.size(); ++i)
        if (weight[i] > weight[best]) best = static_cast<int>(i);
    double runner_up = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (static_cast<int>(i) == best) continue;
        runner_up = std::max(runner_up, weight[i]);
    }
    return {best + 1, weight[best] - runner_up};
}

void check_vote_inputs(const SimilarityReport& report, const std::vector<int>& predictions,
                       int n_classes) {
    if (report.entries.size() != predictions.size())
        throw ShapeError("vote: report/prediction count mismatch");
    if (n_classes < 1) throw ConfigError("vote: need at least one class");
    for (int p : predictions)
        if (p < 1 || p > n_classes) throw ConfigError("vote: prediction outside 1..M");
}

}  // namespace

double VoteTally::total() const {
    return std::accumulate(weight.begin(), weight.end(), 0.0);
}

VoteResult weighted_vote(const SimilarityReport& report, const std::vector<int>& predictions,
                         int k, int n_classes) {
    check_vote_inputs(report, predictions, n_classes);
    const int n = static_cast<int>(report.order.size());
    if (k < 1 || k > n) throw ConfigError("weighted_vote: k outside 1..N");

    VoteResult res;
    res.tally.weight.assign(n_classes, 0.0);
    for (int j = 0; j < k; ++j) {
        const int who = report.order[j];
        res.tally.weight[predictions[who] - 1] += report.entries[who].score;
    }
    std::tie(res.label, res.confidence) = tally_winner(res.tally.weight);
    return res;
}

EnsembleDecision dynamic_select(const SimilarityReport& report,
                                const std::vector<int>& predictions, int n_classes) {
    check_vote_inputs(report, predictions, n_classes);
    const int n = static_cast<int>(report.order.size());
    if (n < 1) throw ConfigError("dynamic_select: empty ensemble");

    EnsembleDecision dec;
    dec.predictions = predictions;
    dec.per_k.reserve(n);

    // Grow the tally one prefix participant at a time: O(N*M) total.
    std::vector<double> tally(n_classes, 0.0);
    std::vector<double> best_tally;
    for (int j = 0; j < n; ++j) {
        const int who = report.order[j];
        tally[predictions[who] - 1] += report.entries[who].score;
        const auto [label, confidence] = tally_winner(tally);
        dec.per_k.push_back({j + 1, label, confidence});
        if (j == 0 || confidence > dec.confidence) {  // ties keep the smaller k
            dec.chosen_k = j + 1;
            dec.label = label;
            dec.confidence = confidence;
            best_tally = tally;
        }
    }
    dec.tally.weight = std::move(best_tally);
    return dec;
}

int majority_vote(const std::vector<int>& predictions, int n_classes) {
    if (predictions.empty()) throw ConfigError("majority_vote: no predictions");
    if (n_classes < 1) throw ConfigError("majority_vote: need at least one class");
    std::vector<double> count(n_classes, 0.0);
    for (int p : predictions) {
        if (p < 1 || p > n_classes) throw ConfigError("majority_vote: prediction outside 1..M");
        count[p - 1] += 1.0;
    }
    return tally_winner(count).first;
}

EnsembleDecision classify_instance(const FilteredEpoch& x,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh,
                                   ClassifyMode mode) {
    SimilarityReport report = rank_participants(x, ensemble, templates, layout, nh);
    const std::vector<int> predictions = report.predictions();
    const int m = layout.character_count();
    const int n = static_cast<int>(ensemble.size());

    EnsembleDecision dec = dynamic_select(report, predictions, m);
    switch (mode.kind) {
        case ClassifyMode::Kind::dynamic:
            break;
        case ClassifyMode::Kind::fixed: {
            const VoteResult vote = weighted_vote(report, predictions, mode.k, m);
            dec.label = vote.label;
            dec.chosen_k = mode.k;
            dec.confidence = vote.confidence;
            dec.tally = vote.tally;
            break;
        }
        case ClassifyMode::Kind::majority: {
            // Every participant votes once, unweighted.
            VoteTally tally;
            tally.weight.assign(m, 0.0);
            for (int p : predictions) tally.weight[p - 1] += 1.0;
            const auto [label, confidence] = tally_winner(tally.weight);
            dec.label = label;
            dec.chosen_k = n;
            dec.confidence = confidence;
            dec.tally = tally;
            break;
        }
    }
    dec.report = std::move(report);
    return dec;
}

}  // namespace ssvep
