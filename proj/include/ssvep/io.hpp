#pragma once

// Persistence: cohort bundles (manifest JSON + per-participant f32le blobs),
// single-file model bundles, single-epoch instance files, the matrix-dump
// importer for external datasets, and the CLI entry point.
//
// All writes are atomic (temp file + rename) and all artifacts embed the
// resolved configuration and seeds. Nothing here mutates its inputs.

#include "ssvep/evaluation.hpp"
#include "ssvep/network.hpp"
#include "ssvep/similarity.hpp"
#include "ssvep/types.hpp"

#include <cstdint>
#include <string>

namespace ssvep {

inline constexpr const char* kCohortFormatVersion = "1";
inline constexpr const char* kModelFormatVersion = "1";

// The nine §-standard parieto-occipital electrodes used for SSVEP decoding,
// in canonical order.
const std::vector<std::string>& default_channel_selection();

// --- cohort bundles -------------------------------------------------------

// `extra_provenance` is embedded verbatim under manifest["provenance"]
// (JSON text; empty = none).
void save_cohort(const std::string& dir, const CohortDataset& cohort,
                 const std::string& extra_provenance_json = "");
CohortDataset load_cohort(const std::string& dir);

// FNV-1a over the manifest and every blob; ties models to their cohorts.
std::uint64_t cohort_fingerprint(const std::string& dir);

// --- model bundles ----------------------------------------------------------

struct ModelBundle {
    NetworkWeights global;
    std::vector<NetworkWeights> ensemble;   // one per participant
    TemplateBank templates;
    std::vector<std::string> participant_ids;
    SpellerLayout layout;
    double fs = 0.0;
    int nh = 5;
    TrainingConfig training;
    std::uint64_t cohort_fp = 0;
};

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

// --- single-epoch instance files -------------------------------------------

void save_instance(const std::string& path, const FilteredEpoch& epoch,
                   int label_hint = 0);
// label_hint is carried for bookkeeping only (0 = unknown); classification
// never reads it.
std::pair<FilteredEpoch, int> load_instance(const std::string& path);

// --- external dataset import ------------------------------------------------

// Reads a directory of per-participant numeric array dumps described by a
// mapping config (JSON): dtype, dimension order and sizes, channel names,
// frequency/phase tables, channel selection, latency/window, filter bank.
CohortDataset import_matrix_dump(const std::string& dump_dir,
                                 const std::string& mapping_config_path);

// --- filesystem helpers -------------------------------------------------

void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

// --- CLI --------------------------------------------------------------------

// argv without the program name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args);

}  // namespace ssvep
