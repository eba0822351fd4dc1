#include "ssvep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace ssvep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Continued fraction for the incomplete beta function (Lentz's method).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

// One fold/duration worth of work.
struct FoldResult {
    // accuracy, chosen-k mean/std, indexed like cfg.methods
    std::vector<double> accuracy;
    std::vector<double> mean_k;
    std::vector<double> std_k;
};

CohortDataset truncate_cohort(const CohortDataset& src, int nt) {
    CohortDataset out;
    out.layout = src.layout;
    out.fs = src.fs;
    out.participants.reserve(src.participants.size());
    for (const auto& p : src.participants) {
        ParticipantRecords rec;
        rec.participant_id = p.participant_id;
        rec.labels = p.labels;
        rec.block_ids = p.block_ids;
        rec.epochs.reserve(p.epochs.size());
        for (const auto& e : p.epochs) rec.epochs.push_back(e.truncated(nt));
        out.participants.push_back(std::move(rec));
    }
    return out;
}

FoldResult evaluate_fold(const CohortDataset& cohort, const EvalConfig& cfg, int left_out,
                         double duration) {
    const int nt = static_cast<int>(std::lround(duration * cohort.fs));
    if (nt < 2 || nt > cohort.participants[left_out].epochs.front().samples())
        throw ConfigError("loo_evaluate: requested duration outside the epochs");

    // Canonical training order (sorted ids) keeps each fold independent of
    // how the cohort happens to be permuted.
    CohortDataset train;
    train.layout = cohort.layout;
    train.fs = cohort.fs;
    for (int i = 0; i < cohort.participant_count(); ++i)
        if (i != left_out) train.participants.push_back(cohort.participants[i]);
    std::sort(train.participants.begin(), train.participants.end(),
              [](const ParticipantRecords& a, const ParticipantRecords& b) {
                  return a.participant_id < b.participant_id;
              });
    train = truncate_cohort(train, nt);

    const auto& test = cohort.participants[left_out];
    const int m = cohort.layout.character_count();
    const int n_train = train.participant_count();

    const bool want_network =
        std::any_of(cfg.methods.begin(), cfg.methods.end(),
                    [](const MethodSpec& ms) { return ms.needs_network(); });
    const bool want_ensemble =
        std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& ms) {
            return ms.needs_network() && ms.kind != MethodKind::global_dnn;
        });
    const bool want_ttcca = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                        [](const MethodSpec& ms) { return ms.kind == MethodKind::ttcca; });

    NetworkWeights global_w;
    std::vector<NetworkWeights> ensemble;
    TemplateBank templates;
    if (want_network) {
        NetworkShape shape = cfg.net;
        shape.channels = test.epochs.front().channels();
        shape.subbands = test.epochs.front().subbands();
        shape.classes = m;
        shape.time = nt;
        shape.validate();

        TrainingConfig tc = cfg.training;
        tc.rng_seed = derive_seed(cfg.training.rng_seed, fnv1a(test.participant_id),
                                  static_cast<std::uint64_t>(std::lround(duration * 1e6)));
        if (cfg.n_threads > 1) tc.n_threads = 1;  // folds already fan out
        global_w = train_global(train, shape, tc);
        if (want_ensemble) {
            ensemble = fine_tune_all(global_w, train, tc);
            templates = build_templates(train, ensemble);
        }
    }

    CrossTemplates cross;
    if (want_ttcca) cross = build_cross_templates(train, cfg.baseline_band);

    FoldResult res;
    res.accuracy.assign(cfg.methods.size(), 0.0);
    res.mean_k.assign(cfg.methods.size(), kNaN);
    res.std_k.assign(cfg.methods.size(), kNaN);

    std::vector<int> correct(cfg.methods.size(), 0);
    std::vector<double> chosen_k;

    for (std::size_t e = 0; e < test.epochs.size(); ++e) {
        const FilteredEpoch x = test.epochs[e].truncated(nt);
        const int truth = test.labels[e];

        std::optional<EnsembleDecision> decision;
        if (want_ensemble) {
            decision = classify_instance(x, ensemble, templates, cohort.layout, cfg.nh,
                                         ClassifyMode::dynamic());
            chosen_k.push_back(decision->chosen_k);
        }

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const MethodSpec& ms = cfg.methods[mi];
            int label = 0;
            switch (ms.kind) {
                case MethodKind::ensemble_dynamic:
                    label = decision->label;
                    break;
                case MethodKind::ensemble_fixed: {
                    const int k = std::clamp(ms.fixed_k, 1, n_train);
                    label = decision->per_k[k - 1].label;
                    break;
                }
                case MethodKind::ensemble_majority:
                    label = majority_vote(decision->predictions, m);
                    break;
                case MethodKind::global_dnn:
                    label = predict(global_w, x).first;
                    break;
                case MethodKind::cca:
                    label = cca_classify(x.bands[cfg.baseline_band], x.fs, cohort.layout,
                                         cfg.nh);
                    break;
                case MethodKind::fbcca:
                    label = fbcca_classify(x, cohort.layout, cfg.nh);
                    break;
                case MethodKind::ttcca:
                    label = ttcca_classify(x.bands[cfg.baseline_band], x.fs, cross,
                                           cohort.layout, cfg.nh);
                    break;
            }
            if (label == truth) ++correct[mi];
        }
    }

    const double denom = static_cast<double>(test.epochs.size());
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        res.accuracy[mi] = correct[mi] / denom;
        if (cfg.methods[mi].kind == MethodKind::ensemble_dynamic) {
            const auto [mk, sk] = mean_std(chosen_k);
            res.mean_k[mi] = mk;
            res.std_k[mi] = sk;
        } else if (cfg.methods[mi].kind == MethodKind::ensemble_fixed) {
            res.mean_k[mi] = std::clamp(cfg.methods[mi].fixed_k, 1, n_train);
            res.std_k[mi] = 0.0;
        }
    }
    return res;
}

}  // namespace

std::string MethodSpec::name() const {
    switch (kind) {
        case MethodKind::ensemble_dynamic: return "ensemble-dynamic";
        case MethodKind::ensemble_fixed: return "ensemble-fixed:" + std::to_string(fixed_k);
        case MethodKind::ensemble_majority: return "ensemble-majority";
        case MethodKind::global_dnn: return "global-dnn";
        case MethodKind::cca: return "cca";
        case MethodKind::fbcca: return "fbcca";
        case MethodKind::ttcca: return "ttcca";
    }
    return "?";
}

MethodSpec MethodSpec::parse(const std::string& text) {
    if (text == "ensemble-dynamic") return {MethodKind::ensemble_dynamic, 0};
    if (text == "ensemble-majority") return {MethodKind::ensemble_majority, 0};
    if (text == "global-dnn") return {MethodKind::global_dnn, 0};
    if (text == "cca") return {MethodKind::cca, 0};
    if (text == "fbcca") return {MethodKind::fbcca, 0};
    if (text == "ttcca") return {MethodKind::ttcca, 0};
    const std::string prefix = "ensemble-fixed:";
    if (text.rfind(prefix, 0) == 0) {
        const int k = std::stoi(text.substr(prefix.size()));
        if (k < 1) throw ConfigError("fixed k must be >= 1");
        return {MethodKind::ensemble_fixed, k};
    }
    throw ConfigError("unknown method: " + text);
}

void EvalConfig::validate() const {
    if (durations_s.empty()) throw ConfigError("no durations requested");
    for (double d : durations_s)
        if (!(d > 0.0)) throw ConfigError("durations must be positive");
    if (gaze_shift_s < 0.0) throw ConfigError("gaze shift must be >= 0");
    if (methods.empty()) throw ConfigError("no methods requested");
    if (nh < 1) throw ConfigError("need at least one harmonic");
    if (n_threads < 1) throw ConfigError("n_threads must be >= 1");
    training.validate();
}

double itr_bits_per_min(double p, int m, double t_total_s) {
    if (m < 2) throw ConfigError("itr: need at least 2 classes");
    if (p < 0.0 || p > 1.0) throw ConfigError("itr: accuracy outside [0,1]");
    if (!(t_total_s > 0.0)) throw ConfigError("itr: time must be positive");
    double bits = std::log2(static_cast<double>(m));
    if (p > 0.0) bits += p * std::log2(p);
    if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (m - 1));
    return bits * 60.0 / t_total_s;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {kNaN, kNaN};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (static_cast<double>(values.size()) - 1.0))};
}

std::vector<MetricsRow> loo_evaluate(const CohortDataset& cohort, const EvalConfig& cfg) {
    cfg.validate();
    cohort.validate();
    const int n_users = cohort.participant_count();
    if (n_users < 2) throw ConfigError("loo_evaluate: need at least 2 participants");
    const int m = cohort.layout.character_count();

    std::vector<MetricsRow> rows;
    for (double duration : cfg.durations_s) {
        // One fold per left-out user; folds are independent, so they may fan out.
        std::vector<FoldResult> folds(n_users);
        auto run_fold = [&](int u) { folds[u] = evaluate_fold(cohort, cfg, u, duration); };
        if (cfg.n_threads <= 1) {
            for (int u = 0; u < n_users; ++u) run_fold(u);
        } else {
            std::vector<std::future<void>> pending;
            for (int u = 0; u < n_users; ++u) {
                pending.push_back(std::async(std::launch::async, run_fold, u));
                if (pending.size() >= static_cast<std::size_t>(cfg.n_threads)) {
                    for (auto& f : pending) f.get();
                    pending.clear();
                }
            }
            for (auto& f : pending) f.get();
        }

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            MetricsRow row;
            row.method = cfg.methods[mi].name();
            row.duration_s = duration;
            bool any_k = false;
            for (int u = 0; u < n_users; ++u) {
                const double acc = folds[u].accuracy[mi];
                row.per_user_accuracy.push_back(acc);
                row.per_user_itr.push_back(itr_bits_per_min(acc, m, duration + cfg.gaze_shift_s));
                row.per_user_itr_stim_only.push_back(itr_bits_per_min(acc, m, duration));
                row.per_user_mean_k.push_back(folds[u].mean_k[mi]);
                row.per_user_std_k.push_back(folds[u].std_k[mi]);
                if (!std::isnan(folds[u].mean_k[mi])) any_k = true;
            }
            const auto [ma, sa] = mean_std(row.per_user_accuracy);
            row.mean_acc = ma;
            row.se_acc = sa / std::sqrt(static_cast<double>(n_users));
            const auto [mitr, sitr] = mean_std(row.per_user_itr);
            row.mean_itr = mitr;
            row.se_itr = sitr / std::sqrt(static_cast<double>(n_users));
            if (any_k) {
                row.mean_k = mean_std(row.per_user_mean_k).first;
                row.std_k = mean_std(row.per_user_std_k).first;
            } else {
                row.mean_k = kNaN;
                row.std_k = kNaN;
                row.per_user_mean_k.clear();
                row.per_user_std_k.clear();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw ConfigError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("paired_ttest: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw ShapeError("paired_ttest: need at least 2 pairs");
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    const auto [mean, sd] = mean_std(diff);
    if (sd == 0.0)
        throw DegenerateInputError("paired_ttest: zero-variance differences");
    TTestResult res;
    res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double df = static_cast<double>(n) - 1.0;
    res.p = incomplete_beta(df / 2.0, 0.5, df / (df + res.t * res.t));
    return res;
}

Significance bonferroni(double p, int n_comparisons) {
    if (p < 0.0 || p > 1.0) throw ConfigError("bonferroni: p outside [0,1]");
    if (n_comparisons < 1) throw ConfigError("bonferroni: need n >= 1");
    if (p < 0.05 / (5.0 * n_comparisons)) return Significance::highly_significant;
    if (p < 0.05 / n_comparisons) return Significance::significant;
    return Significance::not_significant;
}

}  // namespace ssvep
