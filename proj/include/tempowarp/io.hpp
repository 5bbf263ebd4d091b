#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/dsp.hpp"
#include "tempowarp/encoder.hpp"
#include "tempowarp/nn.hpp"
#include "tempowarp/probe.hpp"
#include "tempowarp/translator.hpp"

namespace tempowarp::io {

// Binary container family: 4-byte magic, u16 major/minor version, then a
// per-kind payload. Little-endian, 32-bit floats throughout. Byte layouts
// are documented in docs/FORMATS.md. Writers are atomic (temp + rename);
// readers validate bounds and report the byte offset of any defect.

/// Lossless embedding-store round-trip ("EMBS").
void write_store(const std::filesystem::path& path,
                 const encoder::EmbeddingStore& store);
encoder::EmbeddingStore read_store(const std::filesystem::path& path);

enum class CheckpointKind : std::uint8_t { Translator = 1, Probe = 2 };

/// Model checkpoint ("MDLC"): kind tag, JSON metadata block, dense layers.
struct Checkpoint {
  CheckpointKind kind = CheckpointKind::Translator;
  nn::DenseNet net;
  std::string meta_json = "{}";
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Files whose minor version is newer than this reader may carry trailing
/// fields; they are skipped and reported through `warnings` when given.
Checkpoint read_checkpoint(const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr);

/// Typed adapters. Loading checks the kind tag and rebuilds the wrapper
/// (dims, tau encoding, dropout rate) from the metadata block; config_echo
/// must be a JSON object and is stored under meta key "config".
void save_translator(const std::filesystem::path& path,
                     const translator::TranslatorModel& model,
                     const std::string& config_echo = "{}");
translator::TranslatorModel load_translator(
    const std::filesystem::path& path,
    std::vector<std::string>* warnings = nullptr);

void save_probe(const std::filesystem::path& path, const probe::ProbeModel& model,
                const std::string& config_echo = "{}");
probe::ProbeModel load_probe(const std::filesystem::path& path,
                             std::vector<std::string>* warnings = nullptr);

/// Mel matrix round-trip ("MELM").
void write_mel(const std::filesystem::path& path, const dsp::MelSpectrogram& mel);
dsp::MelSpectrogram read_mel(const std::filesystem::path& path);

/// Tempo/tag label ingestion: UTF-8 CSV with required header
/// `track_id,tempo_bpm,tags`; the tags cell joins tags with ';'. An empty
/// tempo cell means unlabeled.
struct LabelRow {
  std::string track_id;
  std::optional<float> tempo_bpm;
  std::vector<std::string> tags;
};

std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path);

/// Attaches labels to matching records; a label naming an absent track id is
/// an error. Store records without a label row are left untouched.
void apply_labels(encoder::EmbeddingStore& store, std::span<const LabelRow> rows);

enum class ReportFormat : std::uint8_t { Json = 0, Csv = 1 };
ReportFormat parse_report_format(std::string_view name);

struct MetricRecord {
  std::string name;
  std::optional<double> tau;  // stretch factor the value belongs to
  std::optional<int> k;       // neighbor count the value belongs to
  double value = 0.0;
};

/// One row of a stretch-sweep curve (the tempo-retrieval experiment).
struct CurveRow {
  double factor = 1.0;
  double acc1_translated = 0.0;
  double acc1_untranslated = 0.0;
  double tag_precision = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_json = "{}";  // exact config echo, JSON object
  std::uint64_t seed = 0;
  std::string toolkit_version = kToolkitVersion;
  std::vector<MetricRecord> metrics;
  std::vector<CurveRow> curve;  // empty unless the experiment sweeps tau
  std::vector<std::pair<std::string, std::string>> notes;
};

/// Deterministic serializations: identical reports yield identical bytes.
/// CSV emits the curve table when present, otherwise name/tau/k/value rows.
std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);
void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& path, ReportFormat format);

/// Atomic byte-blob write used by every writer above.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace tempowarp::io
