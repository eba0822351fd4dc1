#pragma once

// Synthetic multi-participant SSVEP cohorts. Each participant owns a spatial
// mixing vector drawn around its cluster's mean direction; epochs are a
// decaying harmonic sum at the character's tagging frequency, spatially mixed
// and buried in pink+white noise at a configurable SNR. Everything is a pure
// function of the seeds.

#include "ssvep/filter_bank.hpp"
#include "ssvep/types.hpp"

#include <cstdint>

namespace ssvep {

struct SynthParams {
    int n_participants = 8;
    SpellerLayout layout = make_grid_layout(8, 8.0, 1.0, 0.4);
    double fs = 250.0;
    double duration_s = 1.0;
    int n_blocks = 6;
    int channels = 8;
    int nh_signal = 3;            // harmonics present in the evoked response
    double harmonic_decay = 0.5;  // amplitude ratio per extra harmonic
    double snr_db = 0.0;          // +inf: noiseless; -inf: pure noise
    std::uint64_t mixing_seed = 1;
    std::uint64_t noise_seed = 2;
    int n_clusters = 2;
    double cluster_jitter_deg = 15.0;
    FilterBankConfig bank{.latency_s = 0.0};

    void validate() const;
};

CohortDataset generate_cohort(const SynthParams& params);

// A fresh epoch for one participant/character, with the same mixing vector
// as the cohort but an independent noise stream per instance_idx.
FilteredEpoch generate_instance(const SynthParams& params, int participant,
                                int character, int instance_idx = 0);

// Pre-filter-bank version of generate_instance (channel names attached);
// the importer tests feed these through matrix dumps.
RawEpoch generate_raw_instance(const SynthParams& params, int participant,
                               int character, std::uint64_t stream_tag);

// The participant's spatial mixing vector (unit norm).
Vector participant_mixing(const SynthParams& params, int participant);

}  // namespace ssvep
