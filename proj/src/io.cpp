#include "ssvep/io.hpp"

#include "ssvep/filter_bank.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ssvep {

namespace {

static_assert(std::endian::native == std::endian::little,
              "blob I/O assumes a little-endian host");

std::uint64_t fnv1a_bytes(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    return std::stoull(s, nullptr, 16);
}

json layout_to_json(const SpellerLayout& layout) {
    return json{{"freqs", layout.freqs}, {"phases", layout.phases}, {"labels", layout.labels}};
}

SpellerLayout layout_from_json(const json& j) {
    SpellerLayout layout;
    layout.freqs = j.at("freqs").get<std::vector<double>>();
    layout.phases = j.at("phases").get<std::vector<double>>();
    layout.labels = j.at("labels").get<std::vector<std::string>>();
    layout.validate();
    return layout;
}

// Epoch serialization order within a blob: channel, sample, sub-band (sub-band
// fastest), per epoch.
void append_epoch_f32(std::string& out, const FilteredEpoch& e) {
    for (int c = 0; c < e.channels(); ++c)
        for (int t = 0; t < e.samples(); ++t)
            for (int s = 0; s < e.subbands(); ++s) {
                const float v = static_cast<float>(e.bands[s](c, t));
                const char* p = reinterpret_cast<const char*>(&v);
                out.append(p, 4);
            }
}

FilteredEpoch read_epoch_f32(const char* data, int channels, int nt, int ns, double fs) {
    FilteredEpoch e;
    e.fs = fs;
    e.bands.assign(ns, Matrix(channels, nt));
    std::size_t idx = 0;
    for (int c = 0; c < channels; ++c)
        for (int t = 0; t < nt; ++t)
            for (int s = 0; s < ns; ++s) {
                float v;
                std::memcpy(&v, data + 4 * idx, 4);
                e.bands[s](c, t) = static_cast<double>(v);
                ++idx;
            }
    return e;
}

struct TensorWriter {
    std::string data;
    json index = json::array();

    void add(const std::string& name, const double* p, std::ptrdiff_t n) {
        index.push_back({{"name", name},
                         {"offset", data.size()},
                         {"count", n}});
        data.append(reinterpret_cast<const char*>(p), static_cast<std::size_t>(n) * 8);
    }
    void add(const std::string& name, const Vector& v) { add(name, v.data(), v.size()); }
    void add(const std::string& name, const Matrix& m) { add(name, m.data(), m.size()); }
};

struct TensorReader {
    const std::string& blob;
    std::map<std::string, std::pair<std::size_t, std::ptrdiff_t>> index;

    TensorReader(const std::string& blob_bytes, const json& idx) : blob(blob_bytes) {
        for (const auto& entry : idx)
            index[entry.at("name")] = {entry.at("offset").get<std::size_t>(),
                                       entry.at("count").get<std::ptrdiff_t>()};
    }

    void read(const std::string& name, double* out, std::ptrdiff_t expect) const {
        auto it = index.find(name);
        if (it == index.end()) throw IoError("model bundle: missing tensor " + name);
        if (it->second.second != expect)
            throw IoError("model bundle: tensor " + name + " has unexpected size");
        const std::size_t bytes = static_cast<std::size_t>(expect) * 8;
        if (it->second.first + bytes > blob.size())
            throw IoError("model bundle: truncated data section");
        std::memcpy(out, blob.data() + it->second.first, bytes);
    }
    void read(const std::string& name, Vector& v) const { read(name, v.data(), v.size()); }
    void read(const std::string& name, Matrix& m) const { read(name, m.data(), m.size()); }
};

void write_weights(TensorWriter& tw, const std::string& prefix, const NetworkWeights& w) {
    tw.add(prefix + "/w_s", w.w_s);
    tw.add(prefix + "/w_c", w.w_c);
    for (std::size_t i = 0; i < w.w3.size(); ++i)
        tw.add(prefix + "/w3/" + std::to_string(i), w.w3[i]);
    tw.add(prefix + "/b3", w.b3);
    for (std::size_t i = 0; i < w.w4.size(); ++i)
        tw.add(prefix + "/w4/" + std::to_string(i), w.w4[i]);
    tw.add(prefix + "/b4", w.b4);
    tw.add(prefix + "/w_fc", w.w_fc);
    tw.add(prefix + "/b_fc", w.b_fc);
}

NetworkWeights read_weights(const TensorReader& tr, const std::string& prefix,
                            const NetworkShape& shape) {
    NetworkWeights w = init_weights(shape, 0);
    tr.read(prefix + "/w_s", w.w_s);
    tr.read(prefix + "/w_c", w.w_c);
    for (std::size_t i = 0; i < w.w3.size(); ++i)
        tr.read(prefix + "/w3/" + std::to_string(i), w.w3[i]);
    tr.read(prefix + "/b3", w.b3);
    for (std::size_t i = 0; i < w.w4.size(); ++i)
        tr.read(prefix + "/w4/" + std::to_string(i), w.w4[i]);
    tr.read(prefix + "/b4", w.b4);
    tr.read(prefix + "/w_fc", w.w_fc);
    tr.read(prefix + "/b_fc", w.b_fc);
    return w;
}

json shape_to_json(const NetworkShape& s) {
    return json{{"channels", s.channels},   {"time", s.time},
                {"subbands", s.subbands},   {"classes", s.classes},
                {"n_ch", s.n_ch},           {"l3_maps", s.l3_maps},
                {"l3_kernel", s.l3_kernel}, {"l3_stride", s.l3_stride},
                {"l4_maps", s.l4_maps},     {"l4_kernel", s.l4_kernel}};
}

NetworkShape shape_from_json(const json& j) {
    NetworkShape s;
    s.channels = j.at("channels");
    s.time = j.at("time");
    s.subbands = j.at("subbands");
    s.classes = j.at("classes");
    s.n_ch = j.at("n_ch");
    s.l3_maps = j.at("l3_maps");
    s.l3_kernel = j.at("l3_kernel");
    s.l3_stride = j.at("l3_stride");
    s.l4_maps = j.at("l4_maps");
    s.l4_kernel = j.at("l4_kernel");
    return s;
}

json training_to_json(const TrainingConfig& t) {
    return json{{"lambda_l2", t.lambda_l2},
                {"dropout", t.dropout},
                {"batch_size", t.batch_size},
                {"epochs_global", t.epochs_global},
                {"epochs_finetune", t.epochs_finetune},
                {"lr_global", t.lr_global},
                {"lr_finetune", t.lr_finetune},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"rng_seed", t.rng_seed},
                {"n_threads", t.n_threads}};
}

TrainingConfig training_from_json(const json& j) {
    TrainingConfig t;
    t.lambda_l2 = j.at("lambda_l2");
    t.dropout = j.at("dropout");
    t.batch_size = j.at("batch_size");
    t.epochs_global = j.at("epochs_global");
    t.epochs_finetune = j.at("epochs_finetune");
    t.lr_global = j.at("lr_global");
    t.lr_finetune = j.at("lr_finetune");
    t.adam_beta1 = j.at("adam_beta1");
    t.adam_beta2 = j.at("adam_beta2");
    t.adam_eps = j.at("adam_eps");
    t.rng_seed = j.at("rng_seed");
    t.n_threads = j.at("n_threads");
    return t;
}

}  // namespace

const std::vector<std::string>& default_channel_selection() {
    static const std::vector<std::string> channels = {"Pz", "PO3", "PO5", "PO4", "PO6",
                                                      "POz", "O1",  "Oz",  "O2"};
    return channels;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void save_cohort(const std::string& dir, const CohortDataset& cohort,
                 const std::string& extra_provenance_json) {
    cohort.validate();
    if (cohort.participants.empty()) throw ConfigError("save_cohort: empty cohort");
    const auto& first = cohort.participants.front().epochs.front();
    const int c = first.channels(), nt = first.samples(), ns = first.subbands();
    for (const auto& p : cohort.participants) {
        if (p.epochs.empty()) throw ConfigError("save_cohort: participant without epochs");
        for (const auto& e : p.epochs)
            if (e.channels() != c || e.samples() != nt || e.subbands() != ns)
                throw ShapeError("save_cohort: inconsistent epoch shapes");
    }

    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "ssvep-cohort";
    manifest["version"] = kCohortFormatVersion;
    manifest["fs"] = cohort.fs;
    manifest["layout"] = layout_to_json(cohort.layout);
    manifest["channels"] = c;
    manifest["samples"] = nt;
    manifest["subbands"] = ns;
    manifest["dtype"] = "f32le";
    manifest["dim_order"] = {"block", "character", "channel", "sample", "subband"};
    if (!extra_provenance_json.empty())
        manifest["provenance"] = json::parse(extra_provenance_json);

    json parts = json::array();
    for (const auto& p : cohort.participants) {
        // Blob epochs go out sorted by (block, label) to match dim_order.
        std::vector<std::size_t> order(p.epochs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (p.block_ids[a] != p.block_ids[b]) return p.block_ids[a] < p.block_ids[b];
            return p.labels[a] < p.labels[b];
        });

        std::string blob;
        blob.reserve(order.size() * static_cast<std::size_t>(c) * nt * ns * 4);
        json epochs = json::array();
        for (std::size_t i : order) {
            append_epoch_f32(blob, p.epochs[i]);
            epochs.push_back({{"block", p.block_ids[i]}, {"label", p.labels[i]}});
        }
        const std::string blob_name = p.participant_id + ".f32le";
        write_file_atomic((fs::path(dir) / blob_name).string(), blob);
        parts.push_back({{"id", p.participant_id}, {"blob", blob_name}, {"epochs", epochs}});
    }
    manifest["participants"] = parts;
    write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

CohortDataset load_cohort(const std::string& dir) {
    const json manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    if (manifest.value("format", "") != "ssvep-cohort")
        throw IoError("not a cohort bundle: " + dir);
    if (manifest.value("version", "") != kCohortFormatVersion)
        throw IoError("cohort bundle version mismatch: found '" +
                      manifest.value("version", "?") + "', expected '" +
                      kCohortFormatVersion + "'");

    CohortDataset cohort;
    cohort.fs = manifest.at("fs");
    cohort.layout = layout_from_json(manifest.at("layout"));
    const int c = manifest.at("channels");
    const int nt = manifest.at("samples");
    const int ns = manifest.at("subbands");

    for (const auto& part : manifest.at("participants")) {
        ParticipantRecords rec;
        rec.participant_id = part.at("id");
        const std::string blob = read_file((fs::path(dir) / part.at("blob").get<std::string>()).string());
        const std::size_t n_epochs = part.at("epochs").size();
        const std::size_t epoch_bytes = static_cast<std::size_t>(c) * nt * ns * 4;
        const std::size_t expected = n_epochs * epoch_bytes;
        if (blob.size() != expected) {
            // Distinguish a wrong-dimension blob from a truncated one: a
            // consistent alternative channel count means the manifest lied.
            const std::size_t per_channel = static_cast<std::size_t>(nt) * ns * 4;
            if (blob.size() % (n_epochs * per_channel) == 0) {
                const std::size_t implied = blob.size() / (n_epochs * per_channel);
                throw IoError("cohort bundle dimension mismatch: manifest claims " +
                              std::to_string(c) + " channels, blob implies " +
                              std::to_string(implied));
            }
            throw IoError("truncated blob for participant " + rec.participant_id);
        }
        std::size_t off = 0;
        for (const auto& em : part.at("epochs")) {
            rec.epochs.push_back(read_epoch_f32(blob.data() + off, c, nt, ns, cohort.fs));
            rec.labels.push_back(em.at("label"));
            rec.block_ids.push_back(em.at("block"));
            off += epoch_bytes;
        }
        cohort.participants.push_back(std::move(rec));
    }
    cohort.validate();
    return cohort;
}

std::uint64_t cohort_fingerprint(const std::string& dir) {
    const std::string manifest_bytes = read_file((fs::path(dir) / "manifest.json").string());
    std::uint64_t h = fnv1a_bytes(manifest_bytes);
    const json manifest = json::parse(manifest_bytes);
    for (const auto& part : manifest.at("participants"))
        h = fnv1a_bytes(read_file((fs::path(dir) / part.at("blob").get<std::string>()).string()), h);
    return h;
}

void save_model(const std::string& path, const ModelBundle& bundle) {
    TensorWriter tw;
    write_weights(tw, "global", bundle.global);
    for (std::size_t n = 0; n < bundle.ensemble.size(); ++n)
        write_weights(tw, "ens/" + std::to_string(n), bundle.ensemble[n]);

    json templates = json::array();
    for (std::size_t n = 0; n < bundle.templates.by_participant.size(); ++n) {
        const auto& slots = bundle.templates.by_participant[n];
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) continue;
            const std::string prefix =
                "tpl/" + std::to_string(n) + "/" + std::to_string(i + 1);
            for (std::size_t b = 0; b < slots[i]->bands.size(); ++b)
                tw.add(prefix + "/" + std::to_string(b), slots[i]->bands[b]);
            templates.push_back({{"participant", n},
                                 {"character", i + 1},
                                 {"count", slots[i]->count}});
        }
    }

    json manifest;
    manifest["format"] = "ssvep-model";
    manifest["version"] = kModelFormatVersion;
    manifest["fs"] = bundle.fs;
    manifest["nh"] = bundle.nh;
    manifest["layout"] = layout_to_json(bundle.layout);
    manifest["shape"] = shape_to_json(bundle.global.shape);
    manifest["training"] = training_to_json(bundle.training);
    manifest["participants"] = bundle.participant_ids;
    manifest["cohort_fingerprint"] = hex64(bundle.cohort_fp);
    manifest["templates"] = templates;
    manifest["tensors"] = tw.index;

    const std::string mtext = manifest.dump();
    std::string out;
    out.reserve(9 + 8 + mtext.size() + tw.data.size());
    out.append("SSVEPMB1\n", 9);
    const std::uint64_t mlen = mtext.size();
    out.append(reinterpret_cast<const char*>(&mlen), 8);
    out.append(mtext);
    out.append(tw.data);
    write_file_atomic(path, out);
}

ModelBundle load_model(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 17 || bytes.compare(0, 9, "SSVEPMB1\n") != 0)
        throw IoError("not a model bundle: " + path);
    std::uint64_t mlen;
    std::memcpy(&mlen, bytes.data() + 9, 8);
    if (bytes.size() < 17 + mlen) throw IoError("truncated model bundle: " + path);
    const json manifest = json::parse(bytes.substr(17, mlen));
    if (manifest.value("version", "") != kModelFormatVersion)
        throw IoError("model bundle version mismatch");
    const std::string blob = bytes.substr(17 + mlen);
    const TensorReader tr(blob, manifest.at("tensors"));

    ModelBundle bundle;
    bundle.fs = manifest.at("fs");
    bundle.nh = manifest.at("nh");
    bundle.layout = layout_from_json(manifest.at("layout"));
    const NetworkShape shape = shape_from_json(manifest.at("shape"));
    bundle.training = training_from_json(manifest.at("training"));
    bundle.participant_ids = manifest.at("participants").get<std::vector<std::string>>();
    bundle.cohort_fp = parse_hex64(manifest.at("cohort_fingerprint"));

    bundle.global = read_weights(tr, "global", shape);
    bundle.ensemble.reserve(bundle.participant_ids.size());
    for (std::size_t n = 0; n < bundle.participant_ids.size(); ++n)
        bundle.ensemble.push_back(read_weights(tr, "ens/" + std::to_string(n), shape));

    bundle.templates.by_participant.assign(
        bundle.participant_ids.size(),
        std::vector<std::optional<TemplateBank::Entry>>(bundle.layout.character_count()));
    for (const auto& tm : manifest.at("templates")) {
        const std::size_t n = tm.at("participant");
        const int character = tm.at("character");
        TemplateBank::Entry entry;
        entry.count = tm.at("count");
        entry.bands.assign(shape.subbands, Matrix(shape.channels, shape.time));
        const std::string prefix = "tpl/" + std::to_string(n) + "/" + std::to_string(character);
        for (int b = 0; b < shape.subbands; ++b)
            tr.read(prefix + "/" + std::to_string(b), entry.bands[b]);
        bundle.templates.by_participant[n][character - 1] = std::move(entry);
    }
    return bundle;
}

void save_instance(const std::string& path, const FilteredEpoch& epoch, int label_hint) {
    epoch.check_consistent();
    json manifest;
    manifest["format"] = "ssvep-instance";
    manifest["version"] = "1";
    manifest["fs"] = epoch.fs;
    manifest["channels"] = epoch.channels();
    manifest["samples"] = epoch.samples();
    manifest["subbands"] = epoch.subbands();
    manifest["dtype"] = "f32le";
    manifest["label_hint"] = label_hint;

    std::string blob;
    append_epoch_f32(blob, epoch);
    const std::string mtext = manifest.dump();
    std::string out;
    out.append("SSVEPIN1\n", 9);
    const std::uint64_t mlen = mtext.size();
    out.append(reinterpret_cast<const char*>(&mlen), 8);
    out.append(mtext);
    out.append(blob);
    write_file_atomic(path, out);
}

std::pair<FilteredEpoch, int> load_instance(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 17 || bytes.compare(0, 9, "SSVEPIN1\n") != 0)
        throw IoError("not an instance file: " + path);
    std::uint64_t mlen;
    std::memcpy(&mlen, bytes.data() + 9, 8);
    if (bytes.size() < 17 + mlen) throw IoError("truncated instance file: " + path);
    const json manifest = json::parse(bytes.substr(17, mlen));
    if (manifest.value("version", "") != "1")
        throw IoError("instance file version mismatch");
    const int c = manifest.at("channels");
    const int nt = manifest.at("samples");
    const int ns = manifest.at("subbands");
    const std::size_t expected = static_cast<std::size_t>(c) * nt * ns * 4;
    if (bytes.size() - 17 - mlen != expected)
        throw IoError("instance file dimension mismatch");
    FilteredEpoch epoch =
        read_epoch_f32(bytes.data() + 17 + mlen, c, nt, ns, manifest.at("fs"));
    return {std::move(epoch), manifest.value("label_hint", 0)};
}

CohortDataset import_matrix_dump(const std::string& dump_dir,
                                 const std::string& mapping_config_path) {
    const json cfg = json::parse(read_file(mapping_config_path));

    const double fs = cfg.at("fs");
    const std::string dtype = cfg.value("dtype", "f32le");
    if (dtype != "f32le" && dtype != "f64le")
        throw ConfigError("import: dtype must be f32le or f64le");
    const std::size_t elem = dtype == "f32le" ? 4 : 8;

    const std::vector<std::string> dim_order =
        cfg.at("dim_order").get<std::vector<std::string>>();
    const json& shape = cfg.at("shape");
    const std::vector<std::string> expected_dims = {"block", "character", "channel", "sample"};
    if (dim_order.size() != 4)
        throw ConfigError("import: dim_order must name block/character/channel/sample");
    std::array<int, 4> sizes{};   // in dump order
    std::array<int, 4> role{};    // dump axis -> 0:block 1:character 2:channel 3:sample
    for (int d = 0; d < 4; ++d) {
        const auto it = std::find(expected_dims.begin(), expected_dims.end(), dim_order[d]);
        if (it == expected_dims.end())
            throw ConfigError("import: unknown dimension name " + dim_order[d]);
        role[d] = static_cast<int>(it - expected_dims.begin());
        sizes[d] = shape.at(dim_order[d]);
    }
    std::array<int, 4> by_role{};  // role -> size
    for (int d = 0; d < 4; ++d) by_role[role[d]] = sizes[d];
    const int n_blocks = by_role[0], n_chars = by_role[1];
    const int n_channels = by_role[2], n_samples = by_role[3];

    const auto channel_names = cfg.at("channel_names").get<std::vector<std::string>>();
    if (static_cast<int>(channel_names.size()) != n_channels)
        throw ConfigError("import: channel_names length != channel dimension");

    std::vector<std::string> wanted = cfg.contains("select_channels")
        ? cfg.at("select_channels").get<std::vector<std::string>>()
        : default_channel_selection();
    std::vector<int> sel;
    for (const auto& name : wanted) {
        const auto it = std::find(channel_names.begin(), channel_names.end(), name);
        if (it == channel_names.end())
            throw ConfigError("import: missing channel " + name);
        sel.push_back(static_cast<int>(it - channel_names.begin()));
    }

    SpellerLayout layout;
    layout.freqs = cfg.at("freqs").get<std::vector<double>>();
    layout.phases = cfg.contains("phases") ? cfg.at("phases").get<std::vector<double>>()
                                           : std::vector<double>(layout.freqs.size(), 0.0);
    if (cfg.contains("labels"))
        layout.labels = cfg.at("labels").get<std::vector<std::string>>();
    else
        for (std::size_t i = 0; i < layout.freqs.size(); ++i)
            layout.labels.push_back("C" + std::to_string(i + 1));
    layout.validate();
    if (layout.character_count() != n_chars)
        throw ConfigError("import: frequency table length != character dimension");

    FilterBankConfig bank;
    if (cfg.contains("bank")) {
        const json& b = cfg.at("bank");
        bank.n_subbands = b.value("n_subbands", bank.n_subbands);
        bank.base_low_hz = b.value("base_low_hz", bank.base_low_hz);
        bank.upper_hz = b.value("upper_hz", bank.upper_hz);
        bank.order = b.value("order", bank.order);
        bank.ripple_db = b.value("ripple_db", bank.ripple_db);
    }
    bank.latency_s = cfg.value("latency_s", kDefaultVisualLatencyS);
    bank.window_s = cfg.value("window_s", 0.0);

    std::vector<std::string> files;
    if (cfg.contains("files")) {
        files = cfg.at("files").get<std::vector<std::string>>();
    } else {
        for (const auto& entry : fs::directory_iterator(dump_dir)) {
            const std::string ext = entry.path().extension().string();
            if (ext == ".f32le" || ext == ".f64le" || ext == ".dat")
                files.push_back(entry.path().filename().string());
        }
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw IoError("import: no dump files found in " + dump_dir);

    const std::size_t total =
        static_cast<std::size_t>(n_blocks) * n_chars * n_channels * n_samples;

    CohortDataset cohort;
    cohort.fs = fs;
    cohort.layout = layout;

    // Strides of each role within the flat dump (last named dim is fastest).
    std::array<std::size_t, 4> stride_by_role{};
    std::size_t stride = 1;
    for (int d = 3; d >= 0; --d) {
        stride_by_role[role[d]] = stride;
        stride *= static_cast<std::size_t>(sizes[d]);
    }

    for (const auto& fname : files) {
        const std::string bytes = read_file((fs::path(dump_dir) / fname).string());
        if (bytes.size() != total * elem)
            throw IoError("import: " + fname + " has inconsistent dimensions (" +
                          std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(total * elem) + ")");
        auto value_at = [&](std::size_t flat) -> double {
            if (elem == 4) {
                float v;
                std::memcpy(&v, bytes.data() + flat * 4, 4);
                return static_cast<double>(v);
            }
            double v;
            std::memcpy(&v, bytes.data() + flat * 8, 8);
            return v;
        };

        ParticipantRecords rec;
        rec.participant_id = fs::path(fname).stem().string();
        for (int b = 0; b < n_blocks; ++b) {
            for (int ch = 0; ch < n_chars; ++ch) {
                RawEpoch raw;
                raw.fs = fs;
                raw.samples.resize(sel.size(), n_samples);
                for (std::size_t ci = 0; ci < sel.size(); ++ci) {
                    const std::size_t base = static_cast<std::size_t>(b) * stride_by_role[0] +
                                             static_cast<std::size_t>(ch) * stride_by_role[1] +
                                             static_cast<std::size_t>(sel[ci]) * stride_by_role[2];
                    for (int t = 0; t < n_samples; ++t)
                        raw.samples(static_cast<int>(ci), t) =
                            value_at(base + static_cast<std::size_t>(t) * stride_by_role[3]);
                }
                rec.epochs.push_back(apply_filter_bank(raw, bank));
                rec.labels.push_back(ch + 1);
                rec.block_ids.push_back(b);
            }
        }
        cohort.participants.push_back(std::move(rec));
    }
    cohort.validate();
    return cohort;
}

}  // namespace ssvep
