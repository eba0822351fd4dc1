#include "ssvep/types.hpp"

#include <cmath>
#include <set>

namespace ssvep {

void SpellerLayout::validate() const {
    const std::size_t m = freqs.size();
    if (m < 2) throw ConfigError("speller layout needs at least 2 characters");
    if (phases.size() != m || labels.size() != m)
        throw ConfigError("layout freqs/phases/labels must have equal length");
    std::set<double> seen;
    for (double f : freqs) {
        if (!(f > 0.0)) throw ConfigError("stimulation frequencies must be positive");
        if (!seen.insert(f).second)
            throw ConfigError("stimulation frequencies must be pairwise distinct");
    }
}

SpellerLayout make_grid_layout(int m, double freq_base_hz, double freq_step_hz,
                               double phase_step_rad) {
    SpellerLayout layout;
    layout.freqs.resize(m);
    layout.phases.resize(m);
    layout.labels.resize(m);
    for (int i = 0; i < m; ++i) {
        layout.freqs[i] = freq_base_hz + i * freq_step_hz;
        layout.phases[i] = i * phase_step_rad;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "C%02d", i + 1);
        layout.labels[i] = buf;
    }
    layout.validate();
    return layout;
}

void FilteredEpoch::check_consistent() const {
    if (bands.empty()) throw ShapeError("filtered epoch has no sub-bands");
    const auto r = bands[0].rows();
    const auto c = bands[0].cols();
    for (const auto& b : bands)
        if (b.rows() != r || b.cols() != c)
            throw ShapeError("sub-band slices differ in shape");
    if (r < 1 || c < 1) throw ShapeError("empty sub-band slice");
    if (!(fs > 0.0)) throw ConfigError("filtered epoch needs fs > 0");
}

FilteredEpoch FilteredEpoch::truncated(int nt) const {
    if (nt < 1 || nt > samples())
        throw ShapeError("truncation length outside epoch");
    FilteredEpoch out;
    out.fs = fs;
    out.bands.reserve(bands.size());
    for (const auto& b : bands) out.bands.push_back(b.leftCols(nt));
    return out;
}

void CohortDataset::validate() const {
    layout.validate();
    if (!(fs > 0.0)) throw ConfigError("cohort needs fs > 0");
    const int m = layout.character_count();
    for (const auto& p : participants) {
        if (p.epochs.size() != p.labels.size() || p.epochs.size() != p.block_ids.size())
            throw ShapeError("participant " + p.participant_id +
                             ": epochs/labels/block_ids lengths differ");
        for (int y : p.labels)
            if (y < 1 || y > m)
                throw ConfigError("participant " + p.participant_id + ": label outside 1..M");
        for (const auto& e : p.epochs) {
            e.check_consistent();
            if (e.fs != fs) throw ConfigError("epoch fs differs from cohort fs");
        }
    }
}

}  // namespace ssvep
