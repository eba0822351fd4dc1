#include "ssvep/synth.hpp"

#include "ssvep/rng.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>

namespace ssvep {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kTagMixing = 0x11;
constexpr std::uint64_t kTagNoiseMix = 0x22;
constexpr std::uint64_t kTagEpoch = 0x33;
constexpr std::uint64_t kInstanceBlockBase = 1u << 20;  // keeps instance streams off cohort blocks

// Paul Kellet's economy pink-noise filter driven by unit normals.
class PinkNoise {
public:
    explicit PinkNoise(Rng& rng) : rng_(rng) {}
    double next() {
        const double white = rng_.normal();
        b0_ = 0.99765 * b0_ + white * 0.0990460;
        b1_ = 0.96300 * b1_ + white * 0.2965164;
        b2_ = 0.57000 * b2_ + white * 1.0526913;
        return b0_ + b1_ + b2_ + white * 0.1848;
    }

private:
    Rng& rng_;
    double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

Matrix cluster_means(const SynthParams& p) {
    // Deterministic orthonormal directions, one column per cluster.
    Rng rng(derive_seed(p.mixing_seed, kTagMixing, 0xC1));
    Matrix g(p.channels, p.n_clusters);
    for (int j = 0; j < p.n_clusters; ++j)
        for (int i = 0; i < p.channels; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(p.channels, p.n_clusters);
    for (int j = 0; j < p.n_clusters; ++j)
        if (q(0, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

// Evoked waveform: decaying harmonic sum at the character's frequency/phase.
Vector waveform(const SynthParams& p, int character, int nt) {
    const double f = p.layout.freqs[character - 1];
    const double phase = p.layout.phases[character - 1];
    Vector s = Vector::Zero(nt);
    double amp = 1.0;
    for (int h = 1; h <= p.nh_signal; ++h) {
        const double w = 2.0 * std::numbers::pi * h * f;
        for (int t = 0; t < nt; ++t)
            s(t) += amp * std::sin(w * t / p.fs + h * phase);
        amp *= p.harmonic_decay;
    }
    return s;
}

}  // namespace

void SynthParams::validate() const {
    layout.validate();
    if (n_participants < 2) throw ConfigError("need at least 2 participants");
    if (channels < 1) throw ConfigError("need at least 1 channel");
    if (n_blocks < 1) throw ConfigError("need at least 1 block");
    if (nh_signal < 1) throw ConfigError("need at least 1 signal harmonic");
    if (std::isnan(snr_db)) throw ConfigError("snr_db must not be NaN");
    if (n_clusters < 1 || n_clusters > n_participants)
        throw ConfigError("n_clusters outside 1..n_participants");
    if (n_clusters > channels)
        throw ConfigError("more clusters than channels");
    const double fmax = *std::max_element(layout.freqs.begin(), layout.freqs.end());
    if (!(nh_signal * fmax < fs / 2.0))
        throw ConfigError("signal harmonics exceed Nyquist");
    bank.validate(fs);
    if (!(duration_s * fs >= 2.0)) throw ConfigError("epoch too short");
}

Vector participant_mixing(const SynthParams& p, int participant) {
    if (participant < 0 || participant >= p.n_participants)
        throw ConfigError("unknown participant");
    const Matrix means = cluster_means(p);
    const Vector m = means.col(participant % p.n_clusters);

    Rng rng(derive_seed(p.mixing_seed, kTagMixing, 0xA7, static_cast<std::uint64_t>(participant)));
    Vector g(p.channels);
    for (int i = 0; i < p.channels; ++i) g(i) = rng.normal();
    Vector u = g - g.dot(m) * m;
    const double un = u.norm();
    if (un < 1e-12) return m;  // jitter direction collapsed onto the mean
    u /= un;
    const double theta = rng.normal(0.0, p.cluster_jitter_deg * std::numbers::pi / 180.0);
    return (std::cos(theta) * m + std::sin(theta) * u).normalized();
}

RawEpoch generate_raw_instance(const SynthParams& p, int participant,
                               int character, std::uint64_t stream_tag) {
    p.validate();
    if (character < 1 || character > p.layout.character_count())
        throw ConfigError("character index outside 1..M");
    const int nt = static_cast<int>(std::lround(p.duration_s * p.fs));
    const int c = p.channels;

    Matrix clean = Matrix::Zero(c, nt);
    if (!(std::isinf(p.snr_db) && p.snr_db < 0.0)) {
        const Vector v = participant_mixing(p, participant);
        const Vector s = waveform(p, character, nt);
        clean = v * s.transpose();
        const double power = clean.squaredNorm() / clean.size();
        if (power > 0.0) clean /= std::sqrt(power);  // unit mean-square signal
        if (!std::isinf(p.snr_db))
            clean *= std::sqrt(std::pow(10.0, p.snr_db / 10.0));
    }

    Matrix noise = Matrix::Zero(c, nt);
    if (!(std::isinf(p.snr_db) && p.snr_db > 0.0)) {
        // Per-participant spatial mixing of the noise field.
        Rng mix_rng(derive_seed(p.noise_seed, kTagNoiseMix, static_cast<std::uint64_t>(participant)));
        Matrix noise_mix(c, c);
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < c; ++i) noise_mix(i, j) = mix_rng.normal();

        Rng rng(derive_seed(p.noise_seed, kTagEpoch, stream_tag,
                            static_cast<std::uint64_t>(participant)));
        Matrix field(c, nt);
        for (int ch = 0; ch < c; ++ch) {
            PinkNoise pink(rng);
            Vector pv(nt), wv(nt);
            for (int t = 0; t < nt; ++t) pv(t) = pink.next();
            for (int t = 0; t < nt; ++t) wv(t) = rng.normal();
            const double pn = pv.norm();
            if (pn > 0.0) pv *= std::sqrt(static_cast<double>(nt)) / pn;
            field.row(ch) = ((pv + wv) / std::numbers::sqrt2).transpose();
        }
        noise = noise_mix * field;
        const double power = noise.squaredNorm() / noise.size();
        if (power > 0.0) noise /= std::sqrt(power);  // unit mean-square noise
    }

    RawEpoch raw;
    raw.fs = p.fs;
    raw.samples = clean + noise;
    raw.channel_names.resize(c);
    for (int i = 0; i < c; ++i) raw.channel_names[i] = "S" + std::to_string(i + 1);
    return raw;
}

FilteredEpoch generate_instance(const SynthParams& p, int participant,
                                int character, int instance_idx) {
    if (instance_idx < 0) throw ConfigError("instance index must be >= 0");
    const std::uint64_t tag = derive_seed(
        0x9e11, kInstanceBlockBase + static_cast<std::uint64_t>(instance_idx),
        static_cast<std::uint64_t>(character));
    return apply_filter_bank(generate_raw_instance(p, participant, character, tag), p.bank);
}

CohortDataset generate_cohort(const SynthParams& p) {
    p.validate();
    CohortDataset cohort;
    cohort.layout = p.layout;
    cohort.fs = p.fs;
    cohort.participants.resize(p.n_participants);

    const int m = p.layout.character_count();
    for (int n = 0; n < p.n_participants; ++n) {
        auto& rec = cohort.participants[n];
        char buf[16];
        std::snprintf(buf, sizeof(buf), "P%02d", n + 1);
        rec.participant_id = buf;
        rec.epochs.reserve(static_cast<std::size_t>(p.n_blocks) * m);
        for (int b = 0; b < p.n_blocks; ++b) {
            for (int ch = 1; ch <= m; ++ch) {
                const std::uint64_t tag = derive_seed(
                    0x9e11, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(ch));
                rec.epochs.push_back(
                    apply_filter_bank(generate_raw_instance(p, n, ch, tag), p.bank));
                rec.labels.push_back(ch);
                rec.block_ids.push_back(b);
            }
        }
    }
    return cohort;
}

}  // namespace ssvep
