#include "tempowarp/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; this build targets LE hosts");

namespace tempowarp::io {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint16_t kMajorVersion = 1;
constexpr std::uint16_t kMinorVersion = 0;

// ---- byte-level primitives ------------------------------------------------

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* raw = reinterpret_cast<const char*>(&value);
    buffer_.append(raw, sizeof(T));
  }

  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s);
  }

  void put_floats(const float* data, std::size_t count) {
    buffer_.append(reinterpret_cast<const char*>(data), count * sizeof(float));
  }

  const std::string& bytes() const { return buffer_; }

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string label)
      : bytes_(bytes), label_(std::move(label)) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t max_len = 1u << 20) {
    const auto len = get<std::uint32_t>();
    if (len > max_len) fail("string length " + std::to_string(len) + " too large");
    need(len);
    std::string out(bytes_.substr(offset_, len));
    offset_ += len;
    return out;
  }

  void get_floats(float* dst, std::size_t count) {
    need(count * sizeof(float));
    std::memcpy(dst, bytes_.data() + offset_, count * sizeof(float));
    offset_ += count * sizeof(float);
  }

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(label_ + ": " + what + " at byte " + std::to_string(offset_));
  }

  void need(std::size_t n) const {
    if (offset_ + n > bytes_.size())
      fail("truncated (need " + std::to_string(n) + " more bytes, have " +
           std::to_string(bytes_.size() - offset_) + ")");
  }

 private:
  std::string_view bytes_;
  std::string label_;
  std::size_t offset_ = 0;
};

void check_magic_and_version(ByteReader& reader, const char expected[4],
                             std::uint16_t& minor_out) {
  char magic[4];
  reader.need(4);
  for (char& c : magic) c = reader.get<char>();
  if (std::memcmp(magic, expected, 4) != 0)
    reader.fail(std::string("bad magic (expected '") + expected + "')");
  const auto major = reader.get<std::uint16_t>();
  const auto minor = reader.get<std::uint16_t>();
  if (major != kMajorVersion)
    reader.fail("unsupported major version " + std::to_string(major));
  minor_out = minor;
}

/// Trailing bytes are fine (with a note) for files written by a newer minor
/// version; for our own version they indicate corruption.
void finish_read(ByteReader& reader, std::uint16_t minor,
                 std::vector<std::string>* warnings) {
  if (reader.remaining() == 0) return;
  if (minor > kMinorVersion) {
    if (warnings)
      warnings->push_back("ignoring " + std::to_string(reader.remaining()) +
                          " trailing bytes from newer minor version " +
                          std::to_string(minor));
    return;
  }
  reader.fail(std::to_string(reader.remaining()) + " unexpected trailing bytes");
}

std::uint32_t checked_u32(ByteReader& reader, std::uint64_t limit,
                          const char* what) {
  const auto v = reader.get<std::uint32_t>();
  if (v > limit)
    reader.fail(std::string(what) + " " + std::to_string(v) +
                " exceeds sanity limit " + std::to_string(limit));
  return v;
}

/// Guards every count-driven allocation: the declared element count must fit
/// in the bytes that are actually left, so a corrupt count fails here instead
/// of as a giant reserve/resize.
void check_budget(ByteReader& reader, std::uint64_t count,
                  std::uint64_t min_bytes_each, const char* what) {
  if (count > 0 && count * min_bytes_each > reader.remaining())
    reader.fail(std::string(what) + " count " + std::to_string(count) +
                " needs at least " + std::to_string(count * min_bytes_each) +
                " bytes but only " + std::to_string(reader.remaining()) +
                " remain");
}

// ---- nn payload helpers ---------------------------------------------------

void write_net(ByteWriter& w, const nn::DenseNet& net) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.cols()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(layer.activation));
    // Row-major on disk, independent of Eigen's storage order.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        w.put<float>(layer.weight(r, c));
    w.put_floats(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
}

nn::DenseNet read_net(ByteReader& reader) {
  nn::DenseNet net;
  const auto n_layers = checked_u32(reader, 64, "layer count");
  net.layers.resize(n_layers);
  for (auto& layer : net.layers) {
    const auto out = checked_u32(reader, 1u << 20, "layer rows");
    const auto in = checked_u32(reader, 1u << 20, "layer cols");
    if (out == 0 || in == 0) reader.fail("zero layer dimension");
    const auto act = reader.get<std::uint8_t>();
    if (act > static_cast<std::uint8_t>(nn::Activation::Tanh))
      reader.fail("unknown activation code " + std::to_string(act));
    layer.activation = static_cast<nn::Activation>(act);
    check_budget(reader,
                 static_cast<std::uint64_t>(out) * in +
                     static_cast<std::uint64_t>(out),
                 sizeof(float), "layer parameter");
    layer.weight.resize(out, in);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = reader.get<float>();
    layer.bias.resize(out);
    reader.get_floats(layer.bias.data(), out);
  }
  return net;
}

json parse_meta(const std::string& meta, const char* label) {
  json parsed = json::parse(meta, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object())
    throw DataError(std::string(label) + ": metadata block is not a JSON object");
  return parsed;
}

}  // namespace

// ---- file plumbing ----------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof())
    throw DataError("read failure on " + path.string());
  return std::move(buf).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw DataError("write failure on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

// ---- EMBS -------------------------------------------------------------------

void write_store(const std::filesystem::path& path,
                 const encoder::EmbeddingStore& store) {
  store.validate();
  ByteWriter w;
  w.put_bytes("EMBS");
  w.put<std::uint16_t>(kMajorVersion);
  w.put<std::uint16_t>(kMinorVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(store.provenance));
  w.put<std::uint8_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(store.dim));
  w.put<std::uint64_t>(store.records.size());
  for (const auto& rec : store.records) {
    w.put_string(rec.track_id);
    w.put<std::uint8_t>(rec.tempo_bpm ? 1 : 0);
    if (rec.tempo_bpm) w.put<float>(*rec.tempo_bpm);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.tags.size()));
    for (const auto& tag : rec.tags) w.put_string(tag);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.excerpts.size()));
    for (const auto& e : rec.excerpts)
      w.put_floats(e.data(), static_cast<std::size_t>(e.size()));
    w.put_floats(rec.track_embedding.data(),
                 static_cast<std::size_t>(rec.track_embedding.size()));
  }
  write_file_atomic(path, w.bytes());
}

encoder::EmbeddingStore read_store(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ByteReader reader(bytes, "store " + path.string());
  std::uint16_t minor = 0;
  check_magic_and_version(reader, "EMBS", minor);

  encoder::EmbeddingStore store;
  const auto prov = reader.get<std::uint8_t>();
  if (prov > static_cast<std::uint8_t>(encoder::Provenance::MelEncoder))
    reader.fail("unknown provenance code " + std::to_string(prov));
  store.provenance = static_cast<encoder::Provenance>(prov);
  reader.get<std::uint8_t>();  // reserved
  store.dim = static_cast<int>(checked_u32(reader, 1u << 20, "embedding dim"));
  if (store.dim == 0) reader.fail("zero embedding dim");
  const auto count = reader.get<std::uint64_t>();
  if (count > (1ull << 32)) reader.fail("absurd record count");
  // id length + tempo flag + tag count + excerpt count + one excerpt + mean
  check_budget(reader, count, 13 + 8ull * static_cast<std::uint64_t>(store.dim),
               "record");

  store.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    encoder::TrackRecord rec;
    rec.track_id = reader.get_string();
    if (reader.get<std::uint8_t>() != 0) rec.tempo_bpm = reader.get<float>();
    const auto n_tags = checked_u32(reader, 1u << 16, "tag count");
    rec.tags.reserve(n_tags);
    for (std::uint32_t t = 0; t < n_tags; ++t)
      rec.tags.push_back(reader.get_string());
    const auto n_excerpts = checked_u32(reader, 1u << 20, "excerpt count");
    if (n_excerpts == 0) reader.fail("record without excerpts");
    check_budget(reader, n_excerpts,
                 sizeof(float) * static_cast<std::uint64_t>(store.dim),
                 "excerpt");
    rec.excerpts.resize(n_excerpts);
    for (auto& e : rec.excerpts) {
      e.resize(store.dim);
      reader.get_floats(e.data(), static_cast<std::size_t>(store.dim));
    }
    rec.track_embedding.resize(store.dim);
    reader.get_floats(rec.track_embedding.data(),
                      static_cast<std::size_t>(store.dim));
    store.records.push_back(std::move(rec));
  }
  finish_read(reader, minor, nullptr);
  store.validate();
  return store;
}

// ---- MDLC -------------------------------------------------------------------

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.net.validate();
  parse_meta(ckpt.meta_json, "checkpoint");  // must serialize valid metadata
  ByteWriter w;
  w.put_bytes("MDLC");
  w.put<std::uint16_t>(kMajorVersion);
  w.put<std::uint16_t>(kMinorVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ckpt.kind));
  w.put<std::uint8_t>(0);
  w.put_string(ckpt.meta_json);
  write_net(w, ckpt.net);
  write_file_atomic(path, w.bytes());
}

Checkpoint read_checkpoint(const std::filesystem::path& path,
                           std::vector<std::string>* warnings) {
  const std::string bytes = read_file(path);
  ByteReader reader(bytes, "checkpoint " + path.string());
  std::uint16_t minor = 0;
  check_magic_and_version(reader, "MDLC", minor);

  Checkpoint ckpt;
  const auto kind = reader.get<std::uint8_t>();
  if (kind != static_cast<std::uint8_t>(CheckpointKind::Translator) &&
      kind != static_cast<std::uint8_t>(CheckpointKind::Probe))
    reader.fail("unknown checkpoint kind " + std::to_string(kind));
  ckpt.kind = static_cast<CheckpointKind>(kind);
  reader.get<std::uint8_t>();  // reserved
  ckpt.meta_json = reader.get_string(1u << 24);
  parse_meta(ckpt.meta_json, "checkpoint");
  ckpt.net = read_net(reader);
  try {
    ckpt.net.validate();
  } catch (const std::exception& e) {
    reader.fail(std::string("invalid network: ") + e.what());
  }
  finish_read(reader, minor, warnings);
  return ckpt;
}

void save_translator(const std::filesystem::path& path,
                     const translator::TranslatorModel& model,
                     const std::string& config_echo) {
  model.validate();
  ordered_json meta;
  meta["kind"] = "translator";
  meta["embedding_dim"] = model.embedding_dim;
  meta["hidden_width"] = model.hidden_width();
  meta["tau_encoding"] =
      model.tau_encoding == translator::TauEncoding::Log2 ? "log2" : "linear";
  meta["config"] = parse_meta(config_echo, "translator config echo");
  write_checkpoint(path,
                   Checkpoint{CheckpointKind::Translator, model.net, meta.dump()});
}

translator::TranslatorModel load_translator(const std::filesystem::path& path,
                                            std::vector<std::string>* warnings) {
  Checkpoint ckpt = read_checkpoint(path, warnings);
  if (ckpt.kind != CheckpointKind::Translator)
    throw DataError("checkpoint " + path.string() +
                    " holds a probe, not a translator");
  // Metadata comes from the file too: anything inconsistent in it (wrong
  // JSON types, dims that disagree with the stored network) is bad data,
  // whatever the underlying check throws.
  try {
    json meta = parse_meta(ckpt.meta_json, "translator checkpoint");
    translator::TranslatorModel model;
    model.net = std::move(ckpt.net);
    model.embedding_dim = meta.value("embedding_dim", model.net.output_dim());
    const std::string enc = meta.value("tau_encoding", "log2");
    if (enc != "log2" && enc != "linear")
      throw DataError("translator checkpoint: unknown tau encoding '" + enc + "'");
    model.tau_encoding = enc == "log2" ? translator::TauEncoding::Log2
                                       : translator::TauEncoding::Linear;
    model.validate();
    return model;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError("translator checkpoint " + path.string() + ": " + e.what());
  }
}

void save_probe(const std::filesystem::path& path, const probe::ProbeModel& model,
                const std::string& config_echo) {
  model.validate();
  ordered_json meta;
  meta["kind"] = "probe";
  meta["embedding_dim"] = model.embedding_dim();
  meta["dropout_rate"] = model.dropout_rate;
  meta["config"] = parse_meta(config_echo, "probe config echo");
  write_checkpoint(path,
                   Checkpoint{CheckpointKind::Probe, model.net, meta.dump()});
}

probe::ProbeModel load_probe(const std::filesystem::path& path,
                             std::vector<std::string>* warnings) {
  Checkpoint ckpt = read_checkpoint(path, warnings);
  if (ckpt.kind != CheckpointKind::Probe)
    throw DataError("checkpoint " + path.string() +
                    " holds a translator, not a probe");
  try {
    json meta = parse_meta(ckpt.meta_json, "probe checkpoint");
    probe::ProbeModel model;
    model.net = std::move(ckpt.net);
    model.dropout_rate = meta.value("dropout_rate", 0.75f);
    model.validate();
    return model;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError("probe checkpoint " + path.string() + ": " + e.what());
  }
}

// ---- MELM -------------------------------------------------------------------

void write_mel(const std::filesystem::path& path, const dsp::MelSpectrogram& mel) {
  mel.config.validate();
  if (mel.bands() != mel.config.mel_bands)
    throw DataError("mel write: band count does not match config");
  ByteWriter w;
  w.put_bytes("MELM");
  w.put<std::uint16_t>(kMajorVersion);
  w.put<std::uint16_t>(kMinorVersion);
  w.put<std::int32_t>(mel.config.sample_rate);
  w.put<std::int32_t>(mel.config.dft_size);
  w.put<std::int32_t>(mel.config.window_size);
  w.put<std::int32_t>(mel.config.hop);
  w.put<std::int32_t>(mel.config.mel_bands);
  w.put<float>(mel.config.amplitude_floor);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(mel.bands()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(mel.frames()));
  // Column-major: one frame (mel.bands() floats) after another.
  w.put_floats(mel.data.data(), static_cast<std::size_t>(mel.data.size()));
  write_file_atomic(path, w.bytes());
}

dsp::MelSpectrogram read_mel(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ByteReader reader(bytes, "mel " + path.string());
  std::uint16_t minor = 0;
  check_magic_and_version(reader, "MELM", minor);

  dsp::MelSpectrogram mel;
  mel.config.sample_rate = reader.get<std::int32_t>();
  mel.config.dft_size = reader.get<std::int32_t>();
  mel.config.window_size = reader.get<std::int32_t>();
  mel.config.hop = reader.get<std::int32_t>();
  mel.config.mel_bands = reader.get<std::int32_t>();
  mel.config.amplitude_floor = reader.get<float>();
  try {
    mel.config.validate();
  } catch (const std::exception& e) {
    reader.fail(std::string("invalid mel config: ") + e.what());
  }
  const auto bands = checked_u32(reader, 1u << 16, "band count");
  const auto frames = checked_u32(reader, 1u << 24, "frame count");
  if (static_cast<int>(bands) != mel.config.mel_bands)
    reader.fail("band count does not match config");
  check_budget(reader, static_cast<std::uint64_t>(bands) * frames,
               sizeof(float), "mel sample");
  mel.data.resize(bands, frames);
  reader.get_floats(mel.data.data(), static_cast<std::size_t>(bands) * frames);
  finish_read(reader, minor, nullptr);
  return mel;
}

// ---- labels -----------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("labels " + path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "track_id,tempo_bpm,tags")
    throw DataError("labels " + path.string() +
                    ": first line must be the header 'track_id,tempo_bpm,tags'");

  std::vector<LabelRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != 3)
      throw DataError("labels " + path.string() + ": line " +
                      std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected 3");
    LabelRow row;
    row.track_id = cells[0];
    if (row.track_id.empty())
      throw DataError("labels " + path.string() + ": line " +
                      std::to_string(line_no) + " has an empty track id");
    if (!cells[1].empty()) {
      try {
        row.tempo_bpm = std::stof(cells[1]);
      } catch (const std::exception&) {
        throw DataError("labels " + path.string() + ": line " +
                        std::to_string(line_no) + " has a malformed tempo '" +
                        cells[1] + "'");
      }
      if (!(*row.tempo_bpm > 0.0f))
        throw DataError("labels " + path.string() + ": line " +
                        std::to_string(line_no) + " has non-positive tempo");
    }
    if (!cells[2].empty())
      for (auto& tag : split(cells[2], ';'))
        if (!tag.empty()) row.tags.push_back(std::move(tag));
    rows.push_back(std::move(row));
  }
  return rows;
}

void apply_labels(encoder::EmbeddingStore& store, std::span<const LabelRow> rows) {
  for (const auto& row : rows) {
    encoder::TrackRecord* rec = nullptr;
    for (auto& r : store.records)
      if (r.track_id == row.track_id) {
        rec = &r;
        break;
      }
    if (!rec)
      throw DataError("labels reference unknown track id '" + row.track_id + "'");
    if (row.tempo_bpm) rec->tempo_bpm = row.tempo_bpm;
    if (!row.tags.empty()) {
      rec->tags.insert(rec->tags.end(), row.tags.begin(), row.tags.end());
      std::sort(rec->tags.begin(), rec->tags.end());
      rec->tags.erase(std::unique(rec->tags.begin(), rec->tags.end()),
                      rec->tags.end());
    }
  }
}

// ---- reports ----------------------------------------------------------------

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + std::string(name) +
                    "' (expected json or csv)");
}

std::string report_to_json(const ExperimentReport& report) {
  ordered_json root;
  root["experiment"] = report.experiment;
  root["toolkit_version"] = report.toolkit_version;
  root["seed"] = report.seed;
  root["config"] = parse_meta(report.config_json, "report config echo");
  ordered_json metrics = ordered_json::array();
  for (const auto& m : report.metrics) {
    ordered_json rec;
    rec["name"] = m.name;
    if (m.tau) rec["tau"] = *m.tau;
    if (m.k) rec["k"] = *m.k;
    rec["value"] = m.value;
    metrics.push_back(std::move(rec));
  }
  root["metrics"] = std::move(metrics);
  if (!report.curve.empty()) {
    ordered_json curve = ordered_json::array();
    for (const auto& row : report.curve) {
      ordered_json rec;
      rec["factor"] = row.factor;
      rec["acc1_translated"] = row.acc1_translated;
      rec["acc1_untranslated"] = row.acc1_untranslated;
      rec["tag_precision"] = row.tag_precision;
      curve.push_back(std::move(rec));
    }
    root["curve"] = std::move(curve);
  }
  if (!report.notes.empty()) {
    ordered_json notes;
    for (const auto& [key, value] : report.notes) notes[key] = value;
    root["notes"] = std::move(notes);
  }
  return root.dump(2) + "\n";
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::string out;
  if (!report.curve.empty()) {
    out = "factor,acc1_translated,acc1_untranslated,tag_precision\n";
    for (const auto& row : report.curve) {
      out += format_double(row.factor) + "," +
             format_double(row.acc1_translated) + "," +
             format_double(row.acc1_untranslated) + "," +
             format_double(row.tag_precision) + "\n";
    }
    return out;
  }
  out = "name,tau,k,value\n";
  for (const auto& m : report.metrics) {
    out += m.name + ",";
    if (m.tau) out += format_double(*m.tau);
    out += ",";
    if (m.k) out += std::to_string(*m.k);
    out += "," + format_double(m.value) + "\n";
  }
  return out;
}

void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::Json ? report_to_json(report)
                                                       : report_to_csv(report));
}

}  // namespace tempowarp::io
