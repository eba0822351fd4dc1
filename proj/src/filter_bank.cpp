#include "ssvep/filter_bank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace ssvep {

namespace {

using cplx = std::complex<double>;

struct ZpkAnalog {
    std::vector<cplx> zeros;
    std::vector<cplx> poles;
    double gain = 1.0;
};

// Chebyshev type-I low-pass prototype (cutoff 1 rad/s).
ZpkAnalog cheby1_prototype(int order, double ripple_db) {
    ZpkAnalog proto;
    const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / order;
    cplx pole_prod(1.0, 0.0);
    for (int k = 1; k <= order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k - 1.0) / (2.0 * order);
        const cplx p(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
        proto.poles.push_back(p);
        pole_prod *= -p;
    }
    proto.gain = pole_prod.real();
    if (order % 2 == 0) proto.gain /= std::sqrt(1.0 + eps * eps);
    return proto;
}

// s -> (s^2 + w0^2) / (bw * s). Pole count doubles; n zeros appear at s = 0.
ZpkAnalog lowpass_to_bandpass(const ZpkAnalog& lp, double w_lo, double w_hi) {
    const double w0 = std::sqrt(w_lo * w_hi);
    const double bw = w_hi - w_lo;
    ZpkAnalog bp;
    for (const cplx& p : lp.poles) {
        const cplx pb = p * bw * 0.5;
        const cplx disc = std::sqrt(pb * pb - w0 * w0);
        bp.poles.push_back(pb + disc);
        bp.poles.push_back(pb - disc);
    }
    bp.zeros.assign(lp.poles.size(), cplx(0.0, 0.0));
    bp.gain = lp.gain * std::pow(bw, static_cast<double>(lp.poles.size()));
    return bp;
}

struct ZpkDigital {
    std::vector<cplx> zeros;
    std::vector<cplx> poles;
    double gain = 1.0;
};

// Bilinear transform; zeros at infinity land at z = -1.
ZpkDigital bilinear(const ZpkAnalog& a, double fs) {
    const double fs2 = 2.0 * fs;
    ZpkDigital d;
    cplx num(1.0, 0.0), den(1.0, 0.0);
    for (const cplx& z : a.zeros) {
        d.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const cplx& p : a.poles) {
        d.poles.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    for (std::size_t i = a.zeros.size(); i < a.poles.size(); ++i)
        d.zeros.push_back(cplx(-1.0, 0.0));
    d.gain = a.gain * (num / den).real();
    return d;
}

// Steady-state initial condition of one section for a unit step input
// (transposed direct form II state).
void step_zi(const Biquad& s, double& z1, double& z2) {
    const double den = 1.0 + s.a1 + s.a2;
    const double y = (s.b0 + s.b1 + s.b2) / den;
    z2 = s.b2 - s.a2 * y;
    z1 = s.b1 - s.a1 * y + z2;
}

// Cascade applied in place; each stage starts from its step-response steady
// state scaled by the first sample of that stage's input.
void sosfilt_inplace(const std::vector<Biquad>& sections, std::vector<double>& x) {
    for (const Biquad& s : sections) {
        double z1, z2;
        step_zi(s, z1, z2);
        const double x0 = x.front();
        z1 *= x0;
        z2 *= x0;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

}  // namespace

std::vector<Biquad> design_cheby1_bandpass(int order, double ripple_db,
                                           double low_hz, double high_hz, double fs) {
    if (order < 1) throw ConfigError("filter order must be >= 1");
    if (!(low_hz > 0.0) || !(high_hz > low_hz)) throw ConfigError("bad band edges");
    if (!(high_hz < fs / 2.0))
        throw ConfigError("sampling rate too low for the upper cut-off");

    // Pre-warp band edges so the bilinear transform lands them exactly.
    const double w_lo = 2.0 * fs * std::tan(std::numbers::pi * low_hz / fs);
    const double w_hi = 2.0 * fs * std::tan(std::numbers::pi * high_hz / fs);

    const ZpkDigital zpk = bilinear(lowpass_to_bandpass(cheby1_prototype(order, ripple_db),
                                                        w_lo, w_hi),
                                    fs);

    // Pair each pole with its conjugate; attach one zero at +1 and one at -1
    // per section (the band-pass numerator is (1 - z^-2)^order).
    std::vector<cplx> upper;
    std::vector<double> reals;
    for (const cplx& p : zpk.poles) {
        if (p.imag() > 1e-12)
            upper.push_back(p);
        else if (p.imag() >= -1e-12)
            reals.push_back(p.real());
    }
    std::sort(upper.begin(), upper.end(),
              [](const cplx& a, const cplx& b) { return a.real() != b.real()
                    ? a.real() < b.real() : a.imag() < b.imag(); });
    std::sort(reals.begin(), reals.end());

    std::vector<Biquad> sections;
    for (const cplx& p : upper)
        sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        sections.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});

    if (sections.size() != static_cast<std::size_t>(order))
        throw Error("internal: unexpected section count in band-pass design");

    sections.front().b0 *= zpk.gain;
    sections.front().b2 *= zpk.gain;
    return sections;
}

std::vector<double> sosfiltfilt(const std::vector<Biquad>& sections,
                                const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t padlen = 3 * (2 * sections.size() + 1);
    if (n <= padlen)
        throw ShapeError("signal too short for zero-phase filtering");

    // Odd reflection about both end points.
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = 0; i < padlen; ++i)
        ext.push_back(2.0 * x.front() - x[padlen - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < padlen; ++i)
        ext.push_back(2.0 * x.back() - x[n - 2 - i]);

    sosfilt_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());
    sosfilt_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + padlen, ext.begin() + padlen + n);
}

void FilterBankConfig::validate(double fs) const {
    if (n_subbands < 1) throw ConfigError("need at least one sub-band");
    if (!(fs > 2.0 * upper_hz))
        throw ConfigError("sampling rate too low for the upper cut-off");
    if (!(base_low_hz > 0.0) || !(upper_hz > base_low_hz * n_subbands))
        throw ConfigError("sub-band edges out of order");
    if (latency_s < 0.0) throw ConfigError("latency must be >= 0");
}

FilteredEpoch apply_filter_bank(const RawEpoch& raw, const FilterBankConfig& cfg) {
    cfg.validate(raw.fs);
    if (raw.channels() < 1 || raw.raw_samples() < 1)
        throw ShapeError("empty raw epoch");

    const int nt_raw = raw.raw_samples();
    const int offset = static_cast<int>(std::lround(cfg.latency_s * raw.fs));
    int nt = nt_raw - offset;
    if (cfg.window_s > 0.0) nt = static_cast<int>(std::lround(cfg.window_s * raw.fs));
    if (offset < 0 || nt < 1 || offset + nt > nt_raw)
        throw ShapeError("requested window outside the raw epoch");

    FilteredEpoch out;
    out.fs = raw.fs;
    out.bands.reserve(cfg.n_subbands);
    std::vector<double> row(nt_raw);
    for (int s = 1; s <= cfg.n_subbands; ++s) {
        const auto sos = design_cheby1_bandpass(cfg.order, cfg.ripple_db,
                                                cfg.base_low_hz * s, cfg.upper_hz, raw.fs);
        Matrix band(raw.channels(), nt);
        for (int c = 0; c < raw.channels(); ++c) {
            for (int t = 0; t < nt_raw; ++t) row[t] = raw.samples(c, t);
            const std::vector<double> y = sosfiltfilt(sos, row);
            for (int t = 0; t < nt; ++t) band(c, t) = y[offset + t];
        }
        out.bands.push_back(std::move(band));
    }
    return out;
}

}  // namespace ssvep
