#include "ssvep/ensemble.hpp"
#include "ssvep/io.hpp"
#include "ssvep/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ssvep {

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Fixed %.10g keeps CSV output byte-stable; NaN prints as an empty field.
std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

ClassifyMode parse_mode(const std::string& text) {
    if (text == "dynamic") return ClassifyMode::dynamic();
    if (text == "majority") return ClassifyMode::majority();
    if (text.rfind("fixed:", 0) == 0) {
        const int k = std::stoi(text.substr(6));
        if (k < 1) throw ConfigError("fixed mode needs k >= 1");
        return ClassifyMode::fixed(k);
    }
    throw ConfigError("unknown mode: " + text + " (want dynamic|fixed:K|majority)");
}

json metrics_rows_to_json(const std::vector<MetricsRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"method", r.method},
                       {"duration_s", r.duration_s},
                       {"per_user_accuracy", r.per_user_accuracy},
                       {"per_user_itr", r.per_user_itr},
                       {"per_user_itr_stim_only", r.per_user_itr_stim_only},
                       {"per_user_mean_k", r.per_user_mean_k},
                       {"per_user_std_k", r.per_user_std_k},
                       {"mean_acc", r.mean_acc},
                       {"se_acc", r.se_acc},
                       {"mean_itr", r.mean_itr},
                       {"se_itr", r.se_itr},
                       {"mean_k", r.mean_k},
                       {"std_k", r.std_k}});
    }
    return out;
}

MetricsRow metrics_row_from_json(const json& j) {
    MetricsRow r;
    r.method = j.at("method");
    r.duration_s = j.at("duration_s");
    r.per_user_accuracy = j.at("per_user_accuracy").get<std::vector<double>>();
    r.per_user_itr = j.at("per_user_itr").get<std::vector<double>>();
    r.per_user_itr_stim_only = j.at("per_user_itr_stim_only").get<std::vector<double>>();
    auto opt_list = [&](const char* key) {
        std::vector<double> v;
        for (const auto& x : j.at(key))
            v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : x.get<double>());
        return v;
    };
    r.per_user_mean_k = opt_list("per_user_mean_k");
    r.per_user_std_k = opt_list("per_user_std_k");
    auto num = [&](const char* key) {
        const auto& v = j.at(key);
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    r.mean_acc = num("mean_acc");
    r.se_acc = num("se_acc");
    r.mean_itr = num("mean_itr");
    r.se_itr = num("se_itr");
    r.mean_k = num("mean_k");
    r.std_k = num("std_k");
    return r;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string csv = "method,duration_s,mean_acc,se_acc,mean_itr,se_itr,mean_k,std_k\n";
    for (const auto& r : rows) {
        csv += r.method + "," + csv_num(r.duration_s) + "," + csv_num(r.mean_acc) + "," +
               csv_num(r.se_acc) + "," + csv_num(r.mean_itr) + "," + csv_num(r.se_itr) +
               "," + csv_num(r.mean_k) + "," + csv_num(r.std_k) + "\n";
    }
    return csv;
}

struct SynthCliOptions {
    std::string out;
    int participants = 8;
    int chars = 8;
    double freq_base = 8.0;
    double freq_step = 1.0;
    double phase_step = 0.4;
    double fs = 250.0;
    double duration = 1.0;
    int blocks = 6;
    int channels = 8;
    int clusters = 2;
    double snr_db = 0.0;
    int nh_signal = 3;
    double harmonic_decay = 0.5;
    double jitter_deg = 15.0;
    std::uint64_t seed = 1;
    std::string emit_instance;
    int emit_participant = 0;
    int emit_character = 1;
    int emit_index = 0;

    SynthParams to_params() const {
        SynthParams p;
        p.n_participants = participants;
        p.layout = make_grid_layout(chars, freq_base, freq_step, phase_step);
        p.fs = fs;
        p.duration_s = duration;
        p.n_blocks = blocks;
        p.channels = channels;
        p.n_clusters = clusters;
        p.snr_db = snr_db;
        p.nh_signal = nh_signal;
        p.harmonic_decay = harmonic_decay;
        p.cluster_jitter_deg = jitter_deg;
        p.mixing_seed = derive_seed(seed, 0x5EED, 1);
        p.noise_seed = derive_seed(seed, 0x5EED, 2);
        return p;
    }

    json config_json() const {
        return json{{"command", "synth"},
                    {"participants", participants},
                    {"chars", chars},
                    {"freq_base", freq_base},
                    {"freq_step", freq_step},
                    {"phase_step", phase_step},
                    {"fs", fs},
                    {"duration", duration},
                    {"blocks", blocks},
                    {"channels", channels},
                    {"clusters", clusters},
                    {"snr_db", snr_db},
                    {"nh_signal", nh_signal},
                    {"harmonic_decay", harmonic_decay},
                    {"jitter_deg", jitter_deg},
                    {"seed", seed}};
    }
};

struct NetCliOptions {
    int n_ch = 120;
    int l3_maps = 120;
    int l3_kernel = 2;
    int l3_stride = 2;
    int l4_maps = 120;
    int l4_kernel = 10;

    NetworkShape to_shape() const {
        NetworkShape s;
        s.n_ch = n_ch;
        s.l3_maps = l3_maps;
        s.l3_kernel = l3_kernel;
        s.l3_stride = l3_stride;
        s.l4_maps = l4_maps;
        s.l4_kernel = l4_kernel;
        return s;
    }

    void add_options(CLI::App* cmd) {
        cmd->add_option("--nch", n_ch, "layer-2 channel combinations")->capture_default_str();
        cmd->add_option("--l3-maps", l3_maps)->capture_default_str();
        cmd->add_option("--l3-kernel", l3_kernel)->capture_default_str();
        cmd->add_option("--l3-stride", l3_stride)->capture_default_str();
        cmd->add_option("--l4-maps", l4_maps)->capture_default_str();
        cmd->add_option("--l4-kernel", l4_kernel)->capture_default_str();
    }

    json config_json() const {
        return json{{"n_ch", n_ch},           {"l3_maps", l3_maps},
                    {"l3_kernel", l3_kernel}, {"l3_stride", l3_stride},
                    {"l4_maps", l4_maps},     {"l4_kernel", l4_kernel}};
    }
};

struct TrainCliOptions {
    int epochs_global = 500;
    int epochs_finetune = 200;
    int batch = 32;
    double lr = 1e-4;
    double lr_finetune = 1e-4;
    double lambda_l2 = 0.001;
    std::string dropout = "0.1,0.1,0.95";
    std::uint64_t seed = 0;
    int threads = 1;

    TrainingConfig to_config() const {
        TrainingConfig t;
        t.epochs_global = epochs_global;
        t.epochs_finetune = epochs_finetune;
        t.batch_size = batch;
        t.lr_global = lr;
        t.lr_finetune = lr_finetune;
        t.lambda_l2 = lambda_l2;
        const auto d = parse_double_list(dropout);
        if (d.size() != 3) throw ConfigError("--dropout needs three comma-separated values");
        t.dropout = {d[0], d[1], d[2]};
        t.rng_seed = seed;
        t.n_threads = threads;
        return t;
    }

    void add_options(CLI::App* cmd) {
        cmd->add_option("--epochs-global", epochs_global)->capture_default_str();
        cmd->add_option("--epochs-finetune", epochs_finetune)->capture_default_str();
        cmd->add_option("--batch", batch)->capture_default_str();
        cmd->add_option("--lr", lr, "global learning rate")->capture_default_str();
        cmd->add_option("--lr-finetune", lr_finetune)->capture_default_str();
        cmd->add_option("--lambda", lambda_l2, "L2 weight")->capture_default_str();
        cmd->add_option("--dropout", dropout, "p(2-3),p(3-4),p(4-5)")->capture_default_str();
        cmd->add_option("--seed", seed)->capture_default_str();
        cmd->add_option("--threads", threads)->capture_default_str();
    }
};

int cmd_synth(const SynthCliOptions& opt) {
    const SynthParams params = opt.to_params();
    if (!opt.out.empty()) {
        const CohortDataset cohort = generate_cohort(params);
        save_cohort(opt.out, cohort, opt.config_json().dump());
        std::cout << "wrote cohort bundle: " << opt.out << " ("
                  << cohort.participant_count() << " participants, "
                  << cohort.participants.front().epoch_count() << " epochs each)\n";
    }
    if (!opt.emit_instance.empty()) {
        const FilteredEpoch inst = generate_instance(params, opt.emit_participant,
                                                     opt.emit_character, opt.emit_index);
        save_instance(opt.emit_instance, inst, opt.emit_character);
        std::cout << "wrote instance: " << opt.emit_instance << "\n";
    }
    if (opt.out.empty() && opt.emit_instance.empty())
        throw ConfigError("synth: need --out and/or --emit-instance");
    return 0;
}

int cmd_train(const std::string& cohort_dir, const std::string& out,
              const NetCliOptions& net, const TrainCliOptions& train, int nh) {
    const CohortDataset cohort = load_cohort(cohort_dir);
    if (cohort.participants.empty()) throw ConfigError("train: empty cohort");

    NetworkShape shape = net.to_shape();
    const auto& first = cohort.participants.front().epochs.front();
    shape.channels = first.channels();
    shape.time = first.samples();
    shape.subbands = first.subbands();
    shape.classes = cohort.layout.character_count();
    shape.validate();

    const TrainingConfig cfg = train.to_config();
    ModelBundle bundle;
    bundle.global = train_global(cohort, shape, cfg);
    bundle.ensemble = fine_tune_all(bundle.global, cohort, cfg);
    bundle.templates = build_templates(cohort, bundle.ensemble);
    for (const auto& p : cohort.participants)
        bundle.participant_ids.push_back(p.participant_id);
    bundle.layout = cohort.layout;
    bundle.fs = cohort.fs;
    bundle.nh = nh;
    bundle.training = cfg;
    bundle.cohort_fp = cohort_fingerprint(cohort_dir);
    save_model(out, bundle);
    std::cout << "wrote model bundle: " << out << " (" << bundle.ensemble.size()
              << " fine-tuned networks)\n";
    return 0;
}

int cmd_classify(const std::string& model_path, const std::string& instance_path,
                 const std::string& cohort_dir, const std::string& participant,
                 int epoch_idx, const std::string& mode_text, const std::string& out,
                 bool allow_foreign) {
    const ModelBundle model = load_model(model_path);
    const ClassifyMode mode = parse_mode(mode_text);

    FilteredEpoch x;
    json source;
    if (!instance_path.empty()) {
        x = load_instance(instance_path).first;
        source = {{"instance", fs::path(instance_path).filename().string()}};
    } else if (!cohort_dir.empty()) {
        if (!allow_foreign) {
            const std::uint64_t fp = cohort_fingerprint(cohort_dir);
            if (fp != model.cohort_fp)
                throw ConfigError(
                    "incompatible model/cohort fingerprints (pass "
                    "--allow-foreign-cohort to classify anyway)");
        }
        const CohortDataset cohort = load_cohort(cohort_dir);
        const auto it = std::find_if(cohort.participants.begin(), cohort.participants.end(),
                                     [&](const ParticipantRecords& p) {
                                         return p.participant_id == participant;
                                     });
        if (it == cohort.participants.end())
            throw ConfigError("classify: unknown participant " + participant);
        if (epoch_idx < 0 || epoch_idx >= it->epoch_count())
            throw ConfigError("classify: epoch index out of range");
        x = it->epochs[epoch_idx];
        source = {{"participant", participant}, {"epoch", epoch_idx}};
    } else {
        throw ConfigError("classify: need --instance or --cohort/--participant/--epoch");
    }

    const NetworkShape& s = model.global.shape;
    if (x.channels() != s.channels || x.subbands() != s.subbands)
        throw ShapeError("classify: instance channels/sub-bands do not match the model");
    if (x.samples() < s.time)
        throw ShapeError("classify: instance shorter than the model window");
    if (x.samples() > s.time) x = x.truncated(s.time);

    const EnsembleDecision dec =
        classify_instance(x, model.ensemble, model.templates, model.layout, model.nh, mode);

    json result;
    result["label"] = dec.label;
    result["character"] = model.layout.labels[dec.label - 1];
    result["chosen_k"] = dec.chosen_k;
    result["confidence"] = dec.confidence;
    result["tally"] = dec.tally.weight;
    json per_k = json::array();
    for (const auto& kt : dec.per_k)
        per_k.push_back({{"k", kt.k}, {"label", kt.label}, {"confidence", kt.confidence}});
    result["per_k"] = per_k;
    json sims = json::array();
    for (const auto& e : dec.report.entries) {
        sims.push_back({{"participant", model.participant_ids[e.participant]},
                        {"prediction", e.prediction},
                        {"score", e.score},
                        {"rho1", e.rho1},
                        {"rho2", e.rho2},
                        {"best_candidate", e.best_candidate},
                        {"template_absent", e.template_absent},
                        {"degenerate", e.degenerate}});
    }
    result["similarities"] = sims;
    result["order"] = dec.report.order;
    result["config"] = {{"mode", mode_text},
                        {"nh", model.nh},
                        {"source", source},
                        {"model_cohort_fingerprint",
                         (std::stringstream{} << std::hex << model.cohort_fp).str()}};

    const std::string text = result.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else {
        write_file_atomic(out, text);
        std::cout << "wrote decision: " << out << "\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& cohort_dir, const std::string& out_prefix,
                 const std::string& methods_text, const std::string& durations_text,
                 double gaze_shift, int nh, int baseline_band, int threads,
                 const NetCliOptions& net, const TrainCliOptions& train) {
    const CohortDataset cohort = load_cohort(cohort_dir);

    EvalConfig cfg;
    cfg.methods.clear();
    for (const auto& name : parse_string_list(methods_text))
        cfg.methods.push_back(MethodSpec::parse(name));
    cfg.durations_s = parse_double_list(durations_text);
    cfg.gaze_shift_s = gaze_shift;
    cfg.nh = nh;
    cfg.baseline_band = baseline_band - 1;
    if (cfg.baseline_band < 0) throw ConfigError("--baseline-band is 1-based");
    cfg.net = net.to_shape();
    cfg.training = train.to_config();
    cfg.n_threads = threads;

    const std::vector<MetricsRow> rows = loo_evaluate(cohort, cfg);

    json out;
    out["config"] = {{"command", "evaluate"},
                     {"methods", parse_string_list(methods_text)},
                     {"durations_s", cfg.durations_s},
                     {"gaze_shift_s", cfg.gaze_shift_s},
                     {"nh", cfg.nh},
                     {"baseline_band", baseline_band},
                     {"net", net.config_json()},
                     {"training", json{{"epochs_global", cfg.training.epochs_global},
                                       {"epochs_finetune", cfg.training.epochs_finetune},
                                       {"batch_size", cfg.training.batch_size},
                                       {"lr_global", cfg.training.lr_global},
                                       {"lr_finetune", cfg.training.lr_finetune},
                                       {"lambda_l2", cfg.training.lambda_l2},
                                       {"dropout", cfg.training.dropout},
                                       {"rng_seed", cfg.training.rng_seed}}},
                     {"cohort_fingerprint", (std::stringstream{} << std::hex
                                             << cohort_fingerprint(cohort_dir)).str()},
                     {"participants", [&] {
                          std::vector<std::string> ids;
                          for (const auto& p : cohort.participants)
                              ids.push_back(p.participant_id);
                          return ids;
                      }()}};
    out["rows"] = metrics_rows_to_json(rows);

    write_file_atomic(out_prefix + ".json", out.dump(2) + "\n");
    write_file_atomic(out_prefix + ".csv", metrics_csv(rows));
    std::cout << "wrote " << out_prefix << ".csv and " << out_prefix << ".json\n";
    return 0;
}

int cmd_report(const std::string& metrics_path, const std::string& out_dir) {
    const json metrics = json::parse(read_file(metrics_path));
    std::vector<MetricsRow> rows;
    for (const auto& j : metrics.at("rows")) rows.push_back(metrics_row_from_json(j));
    if (rows.empty()) throw ConfigError("report: no rows in metrics file");

    std::vector<double> durations;
    std::vector<std::string> methods;
    for (const auto& r : rows) {
        if (std::find(durations.begin(), durations.end(), r.duration_s) == durations.end())
            durations.push_back(r.duration_s);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    }
    auto find_row = [&](const std::string& method, double dur) -> const MetricsRow* {
        for (const auto& r : rows)
            if (r.method == method && r.duration_s == dur) return &r;
        return nullptr;
    };

    // Mean accuracy / ITR per (duration, method), Figs.-2/3 style wide tables.
    for (const bool itr : {false, true}) {
        std::string csv = "duration_s";
        for (const auto& m : methods) csv += "," + m + "," + m + "_se";
        csv += "\n";
        for (double d : durations) {
            csv += csv_num(d);
            for (const auto& m : methods) {
                const MetricsRow* r = find_row(m, d);
                if (!r) {
                    csv += ",,";
                    continue;
                }
                csv += "," + csv_num(itr ? r->mean_itr : r->mean_acc);
                csv += "," + csv_num(itr ? r->se_itr : r->se_acc);
            }
            csv += "\n";
        }
        write_file_atomic((fs::path(out_dir) / (itr ? "itr.csv" : "accuracy.csv")).string(),
                          csv);
    }

    // Ensemble vs global, Table-I style.
    if (find_row("ensemble-dynamic", durations.front()) &&
        find_row("global-dnn", durations.front())) {
        std::string csv = "duration_s,ensemble_acc,global_acc,ensemble_itr,global_itr\n";
        for (double d : durations) {
            const MetricsRow* e = find_row("ensemble-dynamic", d);
            const MetricsRow* g = find_row("global-dnn", d);
            if (!e || !g) continue;
            csv += csv_num(d) + "," + csv_num(e->mean_acc) + "," + csv_num(g->mean_acc) +
                   "," + csv_num(e->mean_itr) + "," + csv_num(g->mean_itr) + "\n";
        }
        write_file_atomic((fs::path(out_dir) / "ensemble_vs_global.csv").string(), csv);
    }

    // Chosen-k statistics per user, Fig.-5 style.
    if (const MetricsRow* dyn = find_row("ensemble-dynamic", durations.front())) {
        std::string csv = "duration_s,user,mean_k,std_k,accuracy,global_accuracy\n";
        for (double d : durations) {
            const MetricsRow* r = find_row("ensemble-dynamic", d);
            if (!r || r->per_user_mean_k.empty()) continue;
            const MetricsRow* g = find_row("global-dnn", d);
            for (std::size_t u = 0; u < r->per_user_accuracy.size(); ++u) {
                csv += csv_num(d) + "," + std::to_string(u) + "," +
                       csv_num(r->per_user_mean_k[u]) + "," + csv_num(r->per_user_std_k[u]) +
                       "," + csv_num(r->per_user_accuracy[u]) + "," +
                       (g ? csv_num(g->per_user_accuracy[u]) : "") + "\n";
            }
        }
        write_file_atomic((fs::path(out_dir) / "k_stats.csv").string(), csv);
        (void)dyn;
    }

    // Paired t-tests of ensemble-dynamic against every other method.
    json sig_json = json::array();
    std::string sig_csv =
        "duration_s,method,metric,t,p,significance\n";
    const int n_comparisons = std::max<int>(1, static_cast<int>(methods.size()) - 1);
    bool any_sig = false;
    for (double d : durations) {
        const MetricsRow* base = find_row("ensemble-dynamic", d);
        if (!base) continue;
        for (const auto& m : methods) {
            if (m == "ensemble-dynamic") continue;
            const MetricsRow* other = find_row(m, d);
            if (!other) continue;
            for (const bool itr : {false, true}) {
                const auto& a = itr ? base->per_user_itr : base->per_user_accuracy;
                const auto& b = itr ? other->per_user_itr : other->per_user_accuracy;
                std::string sig_text;
                double tval = std::numeric_limits<double>::quiet_NaN();
                double pval = std::numeric_limits<double>::quiet_NaN();
                try {
                    const TTestResult res = paired_ttest(a, b);
                    tval = res.t;
                    pval = res.p;
                    switch (bonferroni(pval, n_comparisons)) {
                        case Significance::not_significant: sig_text = "ns"; break;
                        case Significance::significant: sig_text = "*"; break;
                        case Significance::highly_significant: sig_text = "**"; break;
                    }
                } catch (const DegenerateInputError&) {
                    sig_text = "degenerate";
                }
                any_sig = true;
                sig_csv += csv_num(d) + "," + m + "," + (itr ? "itr" : "accuracy") + "," +
                           csv_num(tval) + "," + csv_num(pval) + "," + sig_text + "\n";
                sig_json.push_back({{"duration_s", d},
                                    {"method", m},
                                    {"metric", itr ? "itr" : "accuracy"},
                                    {"t", tval},
                                    {"p", pval},
                                    {"significance", sig_text}});
            }
        }
    }
    if (any_sig)
        write_file_atomic((fs::path(out_dir) / "significance.csv").string(), sig_csv);

    json report;
    report["config"] = metrics.value("config", json::object());
    report["methods"] = methods;
    report["durations_s"] = durations;
    report["rows"] = metrics.at("rows");
    report["significance"] = sig_json;
    report["bonferroni_comparisons"] = n_comparisons;
    write_file_atomic((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
    std::cout << "wrote report tables to " << out_dir << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"training-free SSVEP speller target identification"};
    app.require_subcommand(1);

    SynthCliOptions synth_opt;
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort bundle");
    synth->add_option("--out", synth_opt.out, "output cohort directory");
    synth->add_option("--participants", synth_opt.participants)->capture_default_str();
    synth->add_option("--chars", synth_opt.chars)->capture_default_str();
    synth->add_option("--freq-base", synth_opt.freq_base)->capture_default_str();
    synth->add_option("--freq-step", synth_opt.freq_step)->capture_default_str();
    synth->add_option("--phase-step", synth_opt.phase_step)->capture_default_str();
    synth->add_option("--fs", synth_opt.fs)->capture_default_str();
    synth->add_option("--duration", synth_opt.duration)->capture_default_str();
    synth->add_option("--blocks", synth_opt.blocks)->capture_default_str();
    synth->add_option("--channels", synth_opt.channels)->capture_default_str();
    synth->add_option("--clusters", synth_opt.clusters)->capture_default_str();
    synth->add_option("--snr-db", synth_opt.snr_db)->capture_default_str();
    synth->add_option("--nh-signal", synth_opt.nh_signal)->capture_default_str();
    synth->add_option("--harmonic-decay", synth_opt.harmonic_decay)->capture_default_str();
    synth->add_option("--jitter-deg", synth_opt.jitter_deg)->capture_default_str();
    synth->add_option("--seed", synth_opt.seed)->capture_default_str();
    synth->add_option("--emit-instance", synth_opt.emit_instance,
                      "also write one instance file");
    synth->add_option("--emit-participant", synth_opt.emit_participant)->capture_default_str();
    synth->add_option("--emit-character", synth_opt.emit_character)->capture_default_str();
    synth->add_option("--emit-index", synth_opt.emit_index)->capture_default_str();

    std::string train_cohort, train_out;
    int train_nh = 5;
    NetCliOptions train_net;
    TrainCliOptions train_train;
    auto* train = app.add_subcommand("train", "two-stage ensemble training");
    train->add_option("--cohort", train_cohort, "cohort bundle directory")->required();
    train->add_option("--out", train_out, "output model bundle path")->required();
    train->add_option("--nh", train_nh, "similarity harmonics")->capture_default_str();
    train_net.add_options(train);
    train_train.add_options(train);

    std::string cls_model, cls_instance, cls_cohort, cls_participant, cls_mode = "dynamic";
    std::string cls_out;
    int cls_epoch = 0;
    bool cls_allow_foreign = false;
    auto* classify = app.add_subcommand("classify", "classify one instance");
    classify->add_option("--model", cls_model)->required();
    classify->add_option("--instance", cls_instance, "instance file");
    classify->add_option("--cohort", cls_cohort, "cohort bundle to draw the instance from");
    classify->add_option("--participant", cls_participant);
    classify->add_option("--epoch", cls_epoch)->capture_default_str();
    classify->add_option("--mode", cls_mode, "dynamic|fixed:K|majority")->capture_default_str();
    classify->add_option("--out", cls_out, "decision JSON path (default stdout)");
    classify->add_flag("--allow-foreign-cohort", cls_allow_foreign,
                       "skip the model/cohort fingerprint check");

    std::string ev_cohort, ev_prefix, ev_methods = "ensemble-dynamic";
    std::string ev_durations = "1.0";
    double ev_gaze = 0.5;
    int ev_nh = 5, ev_band = 1, ev_threads = 1;
    NetCliOptions ev_net;
    TrainCliOptions ev_train;
    auto* evaluate = app.add_subcommand("evaluate", "leave-one-participant-out evaluation");
    evaluate->add_option("--cohort", ev_cohort)->required();
    evaluate->add_option("--out-prefix", ev_prefix, "writes PREFIX.csv and PREFIX.json")
        ->required();
    evaluate->add_option("--methods", ev_methods,
                         "comma list: ensemble-dynamic,ensemble-fixed:K,ensemble-majority,"
                         "global-dnn,cca,fbcca,ttcca")
        ->capture_default_str();
    evaluate->add_option("--durations", ev_durations, "comma list of seconds")
        ->capture_default_str();
    evaluate->add_option("--gaze-shift", ev_gaze)->capture_default_str();
    evaluate->add_option("--nh", ev_nh)->capture_default_str();
    evaluate->add_option("--baseline-band", ev_band, "1-based sub-band for cca/ttcca")
        ->capture_default_str();
    evaluate->add_option("--eval-threads", ev_threads, "parallel folds")->capture_default_str();
    ev_net.add_options(evaluate);
    ev_train.add_options(evaluate);

    std::string rep_metrics, rep_out;
    auto* report = app.add_subcommand("report", "derive summary tables from metrics JSON");
    report->add_option("--metrics", rep_metrics, "evaluate's JSON output")->required();
    report->add_option("--out-dir", rep_out)->required();

    std::vector<const char*> argv;
    argv.push_back("ssvep");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_opt);
        if (train->parsed())
            return cmd_train(train_cohort, train_out, train_net, train_train, train_nh);
        if (classify->parsed())
            return cmd_classify(cls_model, cls_instance, cls_cohort, cls_participant,
                                cls_epoch, cls_mode, cls_out, cls_allow_foreign);
        if (evaluate->parsed())
            return cmd_evaluate(ev_cohort, ev_prefix, ev_methods, ev_durations, ev_gaze,
                                ev_nh, ev_band, ev_threads, ev_net, ev_train);
        if (report->parsed()) return cmd_report(rep_metrics, rep_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 1;
}

}  // namespace ssvep
