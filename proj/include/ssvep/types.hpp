#pragma once

// Core data model shared by every module: speller layout, raw and
// filter-banked epochs, multi-participant cohorts, and the error types.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssvep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/vector dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// Input has no usable variance (constant signal, zero template, ...).
struct DegenerateInputError : Error {
    using Error::Error;
};

// Invalid parameter combination.
struct ConfigError : Error {
    using Error::Error;
};

// File format / filesystem problems.
struct IoError : Error {
    using Error::Error;
};

// The speller matrix: M flickering characters, each tagged with a unique
// stimulation frequency (Hz) and phase (radians).
struct SpellerLayout {
    std::vector<double> freqs;
    std::vector<double> phases;
    std::vector<std::string> labels;

    int character_count() const { return static_cast<int>(freqs.size()); }

    void validate() const;

    bool operator==(const SpellerLayout&) const = default;
};

// Evenly spaced stimulation frequencies with a fixed phase step, the usual
// shape of speller keyboards. Labels default to "C01".."CM".
SpellerLayout make_grid_layout(int m, double freq_base_hz, double freq_step_hz,
                               double phase_step_rad = 0.0);

// One trial as it comes off the electrodes, before the filter bank.
struct RawEpoch {
    Matrix samples;  // C x Nt_raw
    double fs = 0.0;
    std::vector<std::string> channel_names;  // length C, may be empty

    int channels() const { return static_cast<int>(samples.rows()); }
    int raw_samples() const { return static_cast<int>(samples.cols()); }
};

// One trial after the filter bank: Ns sub-band slices, each C x Nt.
// All slices share fs and length.
struct FilteredEpoch {
    std::vector<Matrix> bands;
    double fs = 0.0;

    int channels() const { return bands.empty() ? 0 : static_cast<int>(bands[0].rows()); }
    int samples() const { return bands.empty() ? 0 : static_cast<int>(bands[0].cols()); }
    int subbands() const { return static_cast<int>(bands.size()); }
    double duration_s() const { return fs > 0.0 ? samples() / fs : 0.0; }

    void check_consistent() const;

    // Copy keeping only the first `nt` samples of every sub-band.
    FilteredEpoch truncated(int nt) const;
};

// Sine/cosine harmonic rows for one character: row 2h-2 is the sine and
// row 2h-1 the cosine of harmonic h (1-based h).
struct ReferenceSignal {
    Matrix rows;  // 2*Nh x Nt
    int character = 0;  // 1..M

    int harmonics() const { return static_cast<int>(rows.rows()) / 2; }
    int samples() const { return static_cast<int>(rows.cols()); }
};

struct ParticipantRecords {
    std::string participant_id;
    std::vector<FilteredEpoch> epochs;
    std::vector<int> labels;     // 1..M, parallel to epochs
    std::vector<int> block_ids;  // parallel to epochs

    int epoch_count() const { return static_cast<int>(epochs.size()); }
};

struct CohortDataset {
    SpellerLayout layout;
    double fs = 0.0;
    std::vector<ParticipantRecords> participants;

    int participant_count() const { return static_cast<int>(participants.size()); }

    void validate() const;
};

}  // namespace ssvep
