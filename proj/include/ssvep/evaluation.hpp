#pragma once

// Leave-one-participant-out evaluation, accuracy/ITR metrics, and paired
// significance testing with Bonferroni correction.

#include "ssvep/baselines.hpp"
#include "ssvep/ensemble.hpp"
#include "ssvep/network.hpp"
#include "ssvep/types.hpp"

#include <string>

namespace ssvep {

enum class MethodKind {
    ensemble_dynamic,
    ensemble_fixed,
    ensemble_majority,
    global_dnn,
    cca,
    fbcca,
    ttcca,
};

struct MethodSpec {
    MethodKind kind = MethodKind::ensemble_dynamic;
    int fixed_k = 0;

    std::string name() const;
    // "ensemble-dynamic", "ensemble-fixed:K", "ensemble-majority",
    // "global-dnn", "cca", "fbcca", "ttcca"
    static MethodSpec parse(const std::string& text);

    bool needs_network() const {
        return kind == MethodKind::ensemble_dynamic || kind == MethodKind::ensemble_fixed ||
               kind == MethodKind::ensemble_majority || kind == MethodKind::global_dnn;
    }
};

struct EvalConfig {
    std::vector<double> durations_s{1.0};
    double gaze_shift_s = 0.5;
    std::vector<MethodSpec> methods{MethodSpec{}};
    int nh = 5;
    NetworkShape net;         // `time` is derived per duration
    TrainingConfig training;  // rng_seed is the root seed; folds derive their own
    int baseline_band = 0;    // sub-band fed to cca/ttcca
    int n_threads = 1;        // fold fan-out

    void validate() const;
};

struct MetricsRow {
    std::string method;
    double duration_s = 0.0;
    std::vector<double> per_user_accuracy;
    std::vector<double> per_user_itr;            // at duration + gaze shift
    std::vector<double> per_user_itr_stim_only;  // at duration alone
    std::vector<double> per_user_mean_k;         // empty unless defined for the method
    std::vector<double> per_user_std_k;

    double mean_acc = 0.0, se_acc = 0.0;
    double mean_itr = 0.0, se_itr = 0.0;
    double mean_k = 0.0, std_k = 0.0;  // NaN when k is not meaningful
};

// Wolpaw information transfer rate in bits per minute. The p log2 p and
// (1-p) log2((1-p)/(m-1)) terms take their limit value 0 at p = 1 and p = 0.
double itr_bits_per_min(double p, int m, double t_total_s);

std::vector<MetricsRow> loo_evaluate(const CohortDataset& cohort, const EvalConfig& cfg);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
};

// Paired t-test on a - b, df = n - 1.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

enum class Significance {
    not_significant,
    significant,         // p < 0.05 / n
    highly_significant,  // p < 0.05 / (5n)
};

Significance bonferroni(double p, int n_comparisons = 4);

// Regularized incomplete beta function I_x(a, b) (continued fraction).
double incomplete_beta(double a, double b, double x);

// Sample mean and (n-1)-denominator standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace ssvep
