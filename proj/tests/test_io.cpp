#include <doctest.h>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tempowarp/encoder.hpp"
#include "tempowarp/io.hpp"
#include "tempowarp/probe.hpp"
#include "tempowarp/translator.hpp"

using namespace tempowarp;
using encoder::Embedding;
using encoder::EmbeddingStore;

namespace {

namespace fs = std::filesystem;

// Fresh scratch directory per test run; removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tempowarp_io_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  fs::path file(const std::string& name) const { return path / name; }
};

EmbeddingStore sample_store() {
  Rng rng(404);
  EmbeddingStore store;
  store.dim = 5;
  store.provenance = encoder::Provenance::SyntheticOracle;
  for (int i = 0; i < 7; ++i) {
    std::vector<Embedding> excerpts;
    for (int e = 0; e <= i % 3; ++e) {
      Embedding z(5);
      for (int j = 0; j < 5; ++j) z[j] = static_cast<float>(rng.normal());
      excerpts.push_back(z);
    }
    const bool labeled = i != 4;  // one unlabeled record
    std::vector<std::string> tags;
    if (i % 2 == 0) tags = {"tag" + std::to_string(i), "shared"};
    store.records.push_back(encoder::make_track_record(
        "track" + std::to_string(i), excerpts,
        labeled ? std::optional<float>(60.0f + 13.7f * i) : std::nullopt, tags));
  }
  store.validate();
  return store;
}

void check_stores_equal(const EmbeddingStore& a, const EmbeddingStore& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.dim == b.dim);
  CHECK(a.provenance == b.provenance);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a.records[i];
    const auto& rb = b.records[i];
    CHECK(ra.track_id == rb.track_id);
    CHECK(ra.tempo_bpm == rb.tempo_bpm);
    CHECK(ra.tags == rb.tags);
    REQUIRE(ra.excerpts.size() == rb.excerpts.size());
    for (std::size_t e = 0; e < ra.excerpts.size(); ++e)
      CHECK((ra.excerpts[e] - rb.excerpts[e]).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((ra.track_embedding - rb.track_embedding).cwiseAbs().maxCoeff() == 0.0f);
  }
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("embedding store round-trips bit-exact") {
  TempDir dir;
  const EmbeddingStore store = sample_store();
  io::write_store(dir.file("s.embs"), store);
  const EmbeddingStore back = io::read_store(dir.file("s.embs"));
  check_stores_equal(store, back);
  CHECK_NOTHROW(back.validate());

  // Serialization is deterministic: same store, same bytes.
  io::write_store(dir.file("s2.embs"), store);
  CHECK(slurp(dir.file("s.embs")) == slurp(dir.file("s2.embs")));
}

TEST_CASE("store reader survives truncation at every prefix") {
  TempDir dir;
  io::write_store(dir.file("s.embs"), sample_store());
  const std::string bytes = slurp(dir.file("s.embs"));

  for (std::size_t len = 0; len < bytes.size(); ++len) {
    spit(dir.file("cut.embs"), bytes.substr(0, len));
    CHECK_THROWS_AS(io::read_store(dir.file("cut.embs")), DataError);
  }
}

TEST_CASE("store reader survives byte flips without crashing") {
  TempDir dir;
  io::write_store(dir.file("s.embs"), sample_store());
  const std::string bytes = slurp(dir.file("s.embs"));

  // Flip a spread of positions (every byte of the header, then samples).
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < 16 && i < bytes.size(); ++i) positions.push_back(i);
  for (std::size_t i = 16; i < bytes.size(); i += 7) positions.push_back(i);

  for (std::size_t pos : positions) {
    std::string corrupt = bytes;
    corrupt[pos] = static_cast<char>(corrupt[pos] ^ 0xff);
    spit(dir.file("bad.embs"), corrupt);
    try {
      const EmbeddingStore back = io::read_store(dir.file("bad.embs"));
      back.validate();  // a benign flip must still yield a coherent store
    } catch (const DataError&) {
      // rejected cleanly
    }
  }
  CHECK(true);  // reaching here means no crash / no foreign exception
}

TEST_CASE("reader reports the byte offset of a defect") {
  TempDir dir;
  io::write_store(dir.file("s.embs"), sample_store());
  std::string bytes = slurp(dir.file("s.embs"));
  bytes[0] = 'X';  // break the magic
  spit(dir.file("bad.embs"), bytes);
  try {
    io::read_store(dir.file("bad.embs"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("major version mismatch is rejected") {
  TempDir dir;
  io::write_store(dir.file("s.embs"), sample_store());
  std::string bytes = slurp(dir.file("s.embs"));
  bytes[4] = static_cast<char>(0x7f);  // major LSB
  spit(dir.file("bad.embs"), bytes);
  CHECK_THROWS_AS(io::read_store(dir.file("bad.embs")), DataError);
}

TEST_CASE("translator checkpoint round-trip") {
  TempDir dir;
  Rng rng(7);
  for (auto enc : {translator::TauEncoding::Log2, translator::TauEncoding::Linear}) {
    const auto model = translator::make_translator(6, 12, rng, enc);
    io::save_translator(dir.file("t.mdlc"), model, R"({"note":"test"})");

    std::vector<std::string> warnings;
    const auto back = io::load_translator(dir.file("t.mdlc"), &warnings);
    CHECK(warnings.empty());
    CHECK(back.tau_encoding == enc);
    CHECK(back.embedding_dim == 6);
    CHECK(back.hidden_width() == 12);
    REQUIRE(back.net.layers.size() == model.net.layers.size());
    for (std::size_t l = 0; l < model.net.layers.size(); ++l) {
      CHECK((back.net.layers[l].weight - model.net.layers[l].weight)
                .cwiseAbs()
                .maxCoeff() == 0.0f);
      CHECK((back.net.layers[l].bias - model.net.layers[l].bias)
                .cwiseAbs()
                .maxCoeff() == 0.0f);
      CHECK(back.net.layers[l].activation == model.net.layers[l].activation);
    }

    // Translations agree bit-for-bit after the round trip.
    Embedding z(6);
    for (int i = 0; i < 6; ++i) z[i] = static_cast<float>(rng.normal());
    const Embedding a = translator::translate(model, z, dsp::StretchFactor(1.2f));
    const Embedding b = translator::translate(back, z, dsp::StretchFactor(1.2f));
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0f);
  }
}

TEST_CASE("probe checkpoint round-trip") {
  TempDir dir;
  Rng rng(8);
  const auto model = probe::make_probe(10, 24, rng, 0.6f);
  io::save_probe(dir.file("p.mdlc"), model, "{}");
  const auto back = io::load_probe(dir.file("p.mdlc"));
  CHECK(back.dropout_rate == 0.6f);
  CHECK(back.embedding_dim() == 10);
  for (std::size_t l = 0; l < model.net.layers.size(); ++l)
    CHECK((back.net.layers[l].weight - model.net.layers[l].weight)
              .cwiseAbs()
              .maxCoeff() == 0.0f);
}

TEST_CASE("checkpoint kind tags are enforced") {
  TempDir dir;
  Rng rng(9);
  io::save_probe(dir.file("p.mdlc"), probe::make_probe(4, 8, rng));
  CHECK_THROWS_AS(io::load_translator(dir.file("p.mdlc")), DataError);

  io::save_translator(dir.file("t.mdlc"), translator::make_translator(4, 8, rng));
  CHECK_THROWS_AS(io::load_probe(dir.file("t.mdlc")), DataError);
}

TEST_CASE("newer minor versions read with a warning, trailing bytes skipped") {
  TempDir dir;
  Rng rng(10);
  io::save_translator(dir.file("t.mdlc"), translator::make_translator(4, 8, rng));
  std::string bytes = slurp(dir.file("t.mdlc"));
  bytes[6] = static_cast<char>(bytes[6] + 1);  // minor LSB
  bytes += "future-field-data";
  spit(dir.file("newer.mdlc"), bytes);

  std::vector<std::string> warnings;
  const auto model = io::load_translator(dir.file("newer.mdlc"), &warnings);
  CHECK(model.embedding_dim == 4);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("trailing") != std::string::npos);

  // Same trailing bytes without the minor bump: hard error.
  std::string stale = slurp(dir.file("t.mdlc")) + "garbage";
  spit(dir.file("stale.mdlc"), stale);
  CHECK_THROWS_AS(io::load_translator(dir.file("stale.mdlc")), DataError);
}

TEST_CASE("checkpoint truncation never crashes") {
  TempDir dir;
  Rng rng(11);
  io::save_translator(dir.file("t.mdlc"), translator::make_translator(3, 6, rng));
  const std::string bytes = slurp(dir.file("t.mdlc"));
  for (std::size_t len = 0; len < bytes.size(); len += 3) {
    spit(dir.file("cut.mdlc"), bytes.substr(0, len));
    CHECK_THROWS_AS(io::load_translator(dir.file("cut.mdlc")), DataError);
  }
}

TEST_CASE("mel spectrogram round-trip") {
  TempDir dir;
  Rng rng(12);
  dsp::MelSpectrogram mel;
  mel.config.sample_rate = 8000;
  mel.config.dft_size = 64;
  mel.config.window_size = 32;
  mel.config.hop = 16;
  mel.config.mel_bands = 6;
  mel.data.resize(6, 11);
  for (int u = 0; u < 6; ++u)
    for (int m = 0; m < 11; ++m)
      mel.data(u, m) = static_cast<float>(rng.uniform(-8.0, 1.0));

  io::write_mel(dir.file("m.melm"), mel);
  const auto back = io::read_mel(dir.file("m.melm"));
  CHECK(back.config.sample_rate == 8000);
  CHECK(back.config.dft_size == 64);
  CHECK(back.config.window_size == 32);
  CHECK(back.config.hop == 16);
  CHECK(back.config.mel_bands == 6);
  CHECK((back.data - mel.data).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("label csv ingestion") {
  TempDir dir;
  SUBCASE("parses rows, tags split on ';', empty tempo = unlabeled") {
    spit(dir.file("l.csv"),
         "track_id,tempo_bpm,tags\n"
         "track0,120.5,rock;indie\n"
         "track1,,ambient\n"
         "track2,90,\n");
    const auto rows = io::read_labels_csv(dir.file("l.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].track_id == "track0");
    CHECK(rows[0].tempo_bpm == 120.5f);
    CHECK(rows[0].tags == std::vector<std::string>{"rock", "indie"});
    CHECK_FALSE(rows[1].tempo_bpm.has_value());
    CHECK(rows[1].tags == std::vector<std::string>{"ambient"});
    CHECK(rows[2].tempo_bpm == 90.0f);
    CHECK(rows[2].tags.empty());
  }
  SUBCASE("header is mandatory") {
    spit(dir.file("l.csv"), "track0,120,rock\n");
    CHECK_THROWS_AS(io::read_labels_csv(dir.file("l.csv")), DataError);
  }
  SUBCASE("malformed rows are rejected") {
    spit(dir.file("l.csv"), "track_id,tempo_bpm,tags\ntrack0,not_a_number,x\n");
    CHECK_THROWS_AS(io::read_labels_csv(dir.file("l.csv")), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(io::read_labels_csv(dir.file("absent.csv")), DataError);
  }
}

TEST_CASE("apply_labels attaches ground truth by id") {
  EmbeddingStore store = sample_store();
  const std::string target = store.records[4].track_id;  // the unlabeled one
  std::vector<io::LabelRow> rows;
  rows.push_back({target, 99.0f, {"newtag"}});
  io::apply_labels(store, rows);
  CHECK(store.find(target)->tempo_bpm == 99.0f);
  // New tags merge into the existing sorted set.
  CHECK(store.find(target)->tags ==
        std::vector<std::string>{"newtag", "shared", "tag4"});

  std::vector<io::LabelRow> absent;
  absent.push_back({"no-such-track", 100.0f, {}});
  CHECK_THROWS_AS(io::apply_labels(store, absent), DataError);
}

TEST_CASE("experiment report serialization") {
  io::ExperimentReport report;
  report.experiment = "demo";
  report.config_json = R"({"alpha":1,"beta":"two"})";
  report.seed = 42;
  report.metrics.push_back({"acc1_translated", 0.75, 5, 0.5});
  report.metrics.push_back({"plain", std::nullopt, std::nullopt, 1.0});
  for (int i = 0; i <= 30; ++i) {
    io::CurveRow row;
    row.factor = 0.5 + 0.05 * i;
    row.acc1_translated = 0.9;
    row.acc1_untranslated = 0.3;
    row.tag_precision = 0.8;
    report.curve.push_back(row);
  }
  report.notes.emplace_back("note_key", "note value");

  SUBCASE("json is valid, ordered, and deterministic") {
    const std::string a = io::report_to_json(report);
    const std::string b = io::report_to_json(report);
    CHECK(a == b);
    const auto parsed = nlohmann::json::parse(a);
    CHECK(parsed["experiment"] == "demo");
    CHECK(parsed["seed"] == 42);
    CHECK(parsed["config"]["alpha"] == 1);
    CHECK(parsed["metrics"].size() == 2);
    CHECK(parsed["metrics"][0]["tau"] == 0.75);
    CHECK(parsed["metrics"][0]["k"] == 5);
    CHECK(parsed["metrics"][1].contains("tau") == false);
    CHECK(parsed["curve"].size() == 31);
    CHECK(parsed["toolkit_version"] == kToolkitVersion);
    // The config echo must round-trip exactly, not as a string blob.
    CHECK(parsed["config"]["beta"] == "two");
  }
  SUBCASE("csv emits the curve table") {
    const std::string csv = io::report_to_csv(report);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 32);  // header + 31 rows
    CHECK(csv.rfind("factor,acc1_translated,acc1_untranslated,tag_precision\n", 0) == 0);
  }
  SUBCASE("csv falls back to metric rows without a curve") {
    report.curve.clear();
    const std::string csv = io::report_to_csv(report);
    CHECK(csv.rfind("name,tau,k,value\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 3);  // header + 2 metrics
  }
  SUBCASE("emit_report writes the chosen format") {
    TempDir dir;
    io::emit_report(report, dir.file("r.json"), io::ReportFormat::Json);
    io::emit_report(report, dir.file("r.csv"), io::ReportFormat::Csv);
    CHECK(slurp(dir.file("r.json")) == io::report_to_json(report));
    CHECK(slurp(dir.file("r.csv")) == io::report_to_csv(report));
  }
}

TEST_CASE("report format names") {
  CHECK(io::parse_report_format("json") == io::ReportFormat::Json);
  CHECK(io::parse_report_format("csv") == io::ReportFormat::Csv);
  CHECK_THROWS_AS(io::parse_report_format("xml"), ConfigError);
}

TEST_CASE("atomic writes replace existing files cleanly") {
  TempDir dir;
  const auto path = dir.file("blob.bin");
  std::string first(256, '\0');
  for (std::size_t i = 0; i < first.size(); ++i) first[i] = static_cast<char>(i);
  io::write_file_atomic(path, first);
  CHECK(slurp(path) == first);

  const std::string second = "short replacement";
  io::write_file_atomic(path, second);
  CHECK(slurp(path) == second);

  // No temp-file droppings left next to the target.
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
}
