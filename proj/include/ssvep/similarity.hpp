#pragma once

// Statistical similarity between a new-user instance and each cohort
// participant: per-participant templates from correctly classified epochs,
// sub-band and channel combinations lifted from the fine-tuned networks, and
// the two-coefficient similarity score with descending ranking.

#include "ssvep/correlation.hpp"
#include "ssvep/network.hpp"
#include "ssvep/types.hpp"

#include <map>
#include <optional>

namespace ssvep {

struct TemplateBank {
    struct Entry {
        std::vector<Matrix> bands;  // C x Nt per sub-band, mean of contributors
        int count = 0;              // contributing instances
    };

    // by_participant[n][i-1]: template of participant n for character i;
    // nullopt when no correctly classified instance exists.
    std::vector<std::vector<std::optional<Entry>>> by_participant;

    int participants() const { return static_cast<int>(by_participant.size()); }
    int characters() const {
        return by_participant.empty() ? 0 : static_cast<int>(by_participant[0].size());
    }
};

// Average, per participant and character, exactly those of the participant's
// own epochs that their fine-tuned network labels correctly.
TemplateBank build_templates(const CohortDataset& cohort,
                             const std::vector<NetworkWeights>& ensemble);

// Weighted sum of the sub-band slices.
Matrix subband_combine(const FilteredEpoch& x, const Vector& w_s);
Matrix subband_combine(const std::vector<Matrix>& bands, const Vector& w_s);

struct ParticipantScore {
    int participant = 0;      // 0-based ensemble index
    int prediction = 0;       // this participant's network's label, 1..M
    int best_candidate = -1;  // column of w_c attaining Eq.-style max; -1 if none
    Vector channel_weights;   // the selected channel combination
    double rho1 = 0.0;        // template correlation at the selected candidate
    double rho2 = 0.0;        // reference correlation at the selected candidate
    double score = 0.0;       // rho1^2 + rho2^2, in [0, 2]
    bool template_absent = false;
    bool degenerate = false;  // every candidate produced a constant signal
};

struct SimilarityReport {
    std::vector<ParticipantScore> entries;  // indexed by participant
    std::vector<int> order;  // descending score; stable (lower index first on ties)

    std::vector<int> predictions() const;
    std::vector<double> scores_in_order() const;
};

// Reference signals and factored Gram matrices, cached per character within
// one instance.
class ReferenceCache {
public:
    ReferenceCache(const SpellerLayout& layout, int nh, int nt, double fs)
        : layout_(layout), nh_(nh), nt_(nt), fs_(fs) {}

    const PreparedReference& get(int character);

private:
    const SpellerLayout& layout_;
    int nh_, nt_;
    double fs_;
    std::map<int, PreparedReference> cache_;
};

ParticipantScore score_participant(const FilteredEpoch& x, int n,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh,
                                   ReferenceCache* cache = nullptr);

// Participant indices sorted by non-increasing score; equal scores keep the
// lower participant index first.
std::vector<int> descending_order(const std::vector<ParticipantScore>& entries);

SimilarityReport rank_participants(const FilteredEpoch& x,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh);

}  // namespace ssvep
