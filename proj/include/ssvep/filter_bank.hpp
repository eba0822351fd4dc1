#pragma once

// Filter-bank preprocessing: Ns zero-phase IIR band-pass filters with lower
// cut-offs 8*s Hz and a shared 90 Hz upper cut-off, plus an optional
// latency/window crop applied after filtering.

#include "ssvep/types.hpp"

namespace ssvep {

// Conventional offset between stimulus onset and the cortical response;
// used as the default crop when importing real recordings.
inline constexpr double kDefaultVisualLatencyS = 0.14;

struct FilterBankConfig {
    int n_subbands = 3;
    double base_low_hz = 8.0;  // sub-band s passes [base_low_hz * s, upper_hz]
    double upper_hz = 90.0;
    int order = 4;             // analog prototype order
    double ripple_db = 1.0;    // Chebyshev type-I passband ripple
    double latency_s = 0.0;    // crop offset from epoch start
    double window_s = 0.0;     // analysis window length; <= 0 means "to the end"

    void validate(double fs) const;

    bool operator==(const FilterBankConfig&) const = default;
};

FilteredEpoch apply_filter_bank(const RawEpoch& raw, const FilterBankConfig& cfg);

// One second-order section; a0 normalized to 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Chebyshev type-I band-pass as cascaded biquads (analog prototype of the
// given order, LP->BP transform, bilinear transform with pre-warping).
std::vector<Biquad> design_cheby1_bandpass(int order, double ripple_db,
                                           double low_hz, double high_hz, double fs);

// Forward-backward (zero-phase) application of a biquad cascade with odd
// reflection padding and step-response initial conditions at both ends.
std::vector<double> sosfiltfilt(const std::vector<Biquad>& sections,
                                const std::vector<double>& x);

}  // namespace ssvep
