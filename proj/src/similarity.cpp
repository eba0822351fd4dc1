#include "ssvep/similarity.hpp"

#include <algorithm>
#include <numeric>

namespace ssvep {

TemplateBank build_templates(const CohortDataset& cohort,
                             const std::vector<NetworkWeights>& ensemble) {
    if (ensemble.size() != cohort.participants.size())
        throw ShapeError("build_templates: ensemble/cohort size mismatch");
    const int m = cohort.layout.character_count();

    TemplateBank bank;
    bank.by_participant.resize(cohort.participants.size());
    for (std::size_t n = 0; n < cohort.participants.size(); ++n) {
        const auto& part = cohort.participants[n];
        auto& slots = bank.by_participant[n];
        slots.resize(m);
        for (std::size_t e = 0; e < part.epochs.size(); ++e) {
            const int truth = part.labels[e];
            const auto [pred, probs] = predict(ensemble[n], part.epochs[e]);
            if (pred != truth) continue;
            auto& slot = slots[truth - 1];
            if (!slot) {
                slot.emplace();
                slot->bands.assign(part.epochs[e].bands.begin(), part.epochs[e].bands.end());
                slot->count = 1;
            } else {
                for (std::size_t b = 0; b < slot->bands.size(); ++b)
                    slot->bands[b] += part.epochs[e].bands[b];
                ++slot->count;
            }
        }
        for (auto& slot : slots)
            if (slot && slot->count > 1)
                for (auto& band : slot->bands) band /= static_cast<double>(slot->count);
    }
    return bank;
}

Matrix subband_combine(const std::vector<Matrix>& bands, const Vector& w_s) {
    if (static_cast<int>(bands.size()) != w_s.size())
        throw ShapeError("subband_combine: weight/sub-band count mismatch");
    Matrix out = w_s(0) * bands[0];
    for (std::size_t s = 1; s < bands.size(); ++s) out += w_s(s) * bands[s];
    return out;
}

Matrix subband_combine(const FilteredEpoch& x, const Vector& w_s) {
    return subband_combine(x.bands, w_s);
}

const PreparedReference& ReferenceCache::get(int character) {
    auto it = cache_.find(character);
    if (it == cache_.end()) {
        it = cache_.emplace(character,
                            prepare_reference(make_reference_signal(
                                layout_, character, nh_, nt_, fs_)))
                 .first;
    }
    return it->second;
}

ParticipantScore score_participant(const FilteredEpoch& x, int n,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh,
                                   ReferenceCache* cache) {
    if (n < 0 || n >= static_cast<int>(ensemble.size()))
        throw ConfigError("score_participant: participant index out of range");

    ParticipantScore out;
    out.participant = n;
    const NetworkWeights& net = ensemble[n];
    out.prediction = predict(net, x).first;

    const auto& slot = templates.by_participant[n][out.prediction - 1];
    if (!slot) {
        // No correctly classified instance for this character: this
        // participant cannot vouch for it.
        out.template_absent = true;
        return out;
    }

    const Matrix combined_x = subband_combine(x, net.w_s);
    const Matrix combined_t = subband_combine(slot->bands, net.w_s);

    std::optional<ReferenceCache> local;
    if (cache == nullptr) {
        local.emplace(layout, nh, x.samples(), x.fs);
        cache = &*local;
    }
    const PreparedReference& ref = cache->get(out.prediction);

    bool any_valid = false;
    double best = -1.0;
    for (int i = 0; i < net.w_c.cols(); ++i) {
        const Vector wc = net.w_c.col(i);
        const Vector sig = combined_x.transpose() * wc;
        const Vector tpl = combined_t.transpose() * wc;
        double r1, r2;
        try {
            r1 = pearson(sig, tpl);
            r2 = fit_harmonic_combination(sig, ref).corr;
        } catch (const DegenerateInputError&) {
            continue;  // constant combined signal; skip this candidate
        }
        any_valid = true;
        const double total = r1 * r1 + r2 * r2;
        if (total > best) {
            best = total;
            out.best_candidate = i;
            out.channel_weights = wc;
            out.rho1 = r1;
            out.rho2 = r2;
            out.score = total;
        }
    }
    out.degenerate = !any_valid;
    return out;
}

std::vector<int> SimilarityReport::predictions() const {
    std::vector<int> preds(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) preds[i] = entries[i].prediction;
    return preds;
}

std::vector<double> SimilarityReport::scores_in_order() const {
    std::vector<double> s(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) s[j] = entries[order[j]].score;
    return s;
}

SimilarityReport rank_participants(const FilteredEpoch& x,
                                   const std::vector<NetworkWeights>& ensemble,
                                   const TemplateBank& templates,
                                   const SpellerLayout& layout, int nh) {
    if (ensemble.empty()) throw ConfigError("rank_participants: empty ensemble");
    SimilarityReport report;
    report.entries.reserve(ensemble.size());
    ReferenceCache cache(layout, nh, x.samples(), x.fs);
    for (std::size_t n = 0; n < ensemble.size(); ++n)
        report.entries.push_back(score_participant(x, static_cast<int>(n), ensemble,
                                                   templates, layout, nh, &cache));

    const bool all_degenerate =
        std::all_of(report.entries.begin(), report.entries.end(),
                    [](const ParticipantScore& e) { return e.degenerate; });
    if (all_degenerate)
        throw DegenerateInputError("rank_participants: instance unusable for every participant");

    report.order = descending_order(report.entries);
    return report;
}

std::vector<int> descending_order(const std::vector<ParticipantScore>& entries) {
    std::vector<int> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return entries[a].score > entries[b].score; });
    return order;
}

}  // namespace ssvep
