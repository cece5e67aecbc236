#include "triad/pack.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary.hpp"
#include "triad/checksum.hpp"
#include "triad/error.hpp"
#include "triad/fileio.hpp"

namespace triad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMetaHeader[] = "record_id\tsplit\tsource\tlabel\ttext_digest\ttoken_ids";

std::span<const std::byte> as_bytes(const std::vector<float>& v) {
  return std::as_bytes(std::span(v));
}

// Expected blob name -> float count.
std::map<std::string, std::size_t> expected_blobs(const PackManifest& m) {
  std::map<std::string, std::size_t> out;
  for (Aggregation agg : m.aggregations) out[feature_blob_name(agg)] = m.feature_floats();
  out[kLogitsBlob] = m.logit_floats();
  return out;
}

void check_manifest(const PackManifest& m) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidManifest, what); };
  if (m.format_version != kPackFormatVersion) {
    fail("unsupported format_version " + std::to_string(m.format_version));
  }
  if (m.byte_order != "little-endian") fail("byte_order must be little-endian");
  if (m.num_records < 1) fail("num_records must be >= 1");
  if (m.num_layers < 1) fail("num_layers must be >= 1");
  if (m.hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (m.num_classes < 2) fail("num_classes must be >= 2");
  if (m.aggregations.empty()) fail("at least one aggregation is required");
  if (m.vocab_size && *m.vocab_size < 1) fail("vocab_size must be >= 1");
}

void check_meta(const PackManifest& m, const std::vector<SampleMeta>& meta) {
  if (meta.size() != m.num_records) {
    throw Error(ErrorKind::kShapeMismatch,
                "metadata has " + std::to_string(meta.size()) + " records, manifest declares " +
                    std::to_string(m.num_records),
                {.blob = kMetaFile});
  }
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const SampleMeta& s = meta[i];
    ErrorContext ctx{.blob = kMetaFile, .record = i};
    if (s.record_id != i) {
      throw Error(ErrorKind::kInvalidMetadata,
                  "record ids must be contiguous from 0; found " + std::to_string(s.record_id) +
                      " at row " + std::to_string(i),
                  ctx);
    }
    if (s.source_name.find_first_of("\t\n\r") != std::string::npos) {
      throw Error(ErrorKind::kInvalidMetadata,
                  "source name of record " + std::to_string(i) + " contains a tab or newline", ctx);
    }
    if (s.gold_label) {
      if (*s.gold_label < 0 || static_cast<std::size_t>(*s.gold_label) >= m.num_classes) {
        throw Error(ErrorKind::kInvalidMetadata,
                    "gold label " + std::to_string(*s.gold_label) + " of record " +
                        std::to_string(i) + " outside [0, C)",
                    ctx);
      }
    } else if (s.split == SplitTag::kIdTrain) {
      throw Error(ErrorKind::kInvalidMetadata,
                  "ID_TRAIN record " + std::to_string(i) + " has no gold label", ctx);
    }
    if (s.token_ids) {
      for (std::int32_t t : *s.token_ids) {
        if (t < 0 || (m.vocab_size && static_cast<std::size_t>(t) >= *m.vocab_size)) {
          throw Error(ErrorKind::kInvalidMetadata,
                      "token id " + std::to_string(t) + " of record " + std::to_string(i) +
                          " outside the vocabulary",
                      ctx);
        }
      }
    }
  }
}

void check_finite_features(const PackManifest& m, Aggregation agg, const std::vector<float>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::size_t record = i / (m.num_layers * m.hidden_dim);
      std::size_t layer = (i / m.hidden_dim) % m.num_layers + 1;
      throw Error(ErrorKind::kNonFiniteValue,
                  feature_blob_name(agg) + ": non-finite value at record " +
                      std::to_string(record) + ", layer " + std::to_string(layer),
                  {.blob = feature_blob_name(agg), .record = record, .layer = layer});
    }
  }
}

void check_finite_logits(const PackManifest& m, const std::vector<float>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::size_t record = i / m.num_classes;
      throw Error(ErrorKind::kNonFiniteValue,
                  std::string(kLogitsBlob) + ": non-finite value at record " +
                      std::to_string(record),
                  {.blob = kLogitsBlob, .record = record});
    }
  }
}

std::string manifest_to_json(const PackManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["model_name"] = m.model_name;
  j["num_records"] = m.num_records;
  j["num_layers"] = m.num_layers;
  j["hidden_dim"] = m.hidden_dim;
  j["num_classes"] = m.num_classes;
  json aggs = json::array();
  for (Aggregation a : m.aggregations) aggs.push_back(std::string(to_string(a)));
  j["aggregations"] = aggs;
  j["byte_order"] = m.byte_order;
  json sums = json::object();
  for (const auto& [name, sum] : m.blob_checksums) sums[name] = to_hex64(sum);
  j["blob_checksums"] = sums;
  if (m.max_seq_len) j["max_seq_len"] = *m.max_seq_len;
  if (m.vocab_size) j["vocab_size"] = *m.vocab_size;
  return j.dump(2) + "\n";
}

PackManifest manifest_from_json(const std::string& text) {
  PackManifest m;
  try {
    json j = json::parse(text);
    m.format_version = j.at("format_version").get<int>();
    m.model_name = j.at("model_name").get<std::string>();
    m.num_records = j.at("num_records").get<std::size_t>();
    m.num_layers = j.at("num_layers").get<std::size_t>();
    m.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    m.num_classes = j.at("num_classes").get<std::size_t>();
    for (const auto& a : j.at("aggregations")) {
      auto agg = parse_aggregation(a.get<std::string>());
      if (!agg) throw Error(ErrorKind::kInvalidManifest, "unknown aggregation " + a.dump());
      m.aggregations.insert(*agg);
    }
    m.byte_order = j.at("byte_order").get<std::string>();
    for (const auto& [name, hex] : j.at("blob_checksums").items()) {
      std::uint64_t sum = 0;
      if (!parse_hex64(hex.get<std::string>(), sum)) {
        throw Error(ErrorKind::kInvalidManifest, "bad checksum for " + name, {.blob = name});
      }
      m.blob_checksums[name] = sum;
    }
    if (j.contains("max_seq_len")) m.max_seq_len = j["max_seq_len"].get<std::size_t>();
    if (j.contains("vocab_size")) m.vocab_size = j["vocab_size"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidManifest, std::string(kManifestFile) + ": " + e.what(),
                {.blob = kManifestFile});
  }
  return m;
}

std::string meta_to_tsv(const std::vector<SampleMeta>& meta) {
  std::string out = kMetaHeader;
  out += '\n';
  for (const SampleMeta& s : meta) {
    out += std::to_string(s.record_id);
    out += '\t';
    out += to_string(s.split);
    out += '\t';
    out += s.source_name;
    out += '\t';
    out += s.gold_label ? std::to_string(*s.gold_label) : "-";
    out += '\t';
    out += to_hex64(s.text_digest);
    out += '\t';
    if (!s.token_ids) {
      out += '-';
    } else {
      for (std::size_t k = 0; k < s.token_ids->size(); ++k) {
        if (k) out += ' ';
        out += std::to_string((*s.token_ids)[k]);
      }
    }
    out += '\n';
  }
  return out;
}

template <typename T>
bool parse_int(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<SampleMeta> meta_from_tsv(std::string_view text) {
  std::vector<SampleMeta> meta;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::kInvalidMetadata,
                 std::string(kMetaFile) + " line " + std::to_string(line_no) + ": " + why,
                 {.blob = kMetaFile});
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) throw bad("missing trailing newline");
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kMetaHeader) throw bad("unexpected header");
      continue;
    }
    auto f = split_on(line, '\t');
    if (f.size() != 6) throw bad("expected 6 tab-separated fields");
    SampleMeta s;
    if (!parse_int(f[0], s.record_id)) throw bad("bad record_id");
    auto tag = parse_split_tag(f[1]);
    if (!tag) throw bad("unknown split tag '" + std::string(f[1]) + "'");
    s.split = *tag;
    s.source_name = std::string(f[2]);
    if (f[3] != "-") {
      int label = 0;
      if (!parse_int(f[3], label)) throw bad("bad label");
      s.gold_label = label;
    }
    if (!parse_hex64(f[4], s.text_digest)) throw bad("bad text_digest");
    if (f[5] != "-") {
      std::vector<std::int32_t> ids;
      if (!f[5].empty()) {
        for (std::string_view tok : split_on(f[5], ' ')) {
          std::int32_t id = 0;
          if (!parse_int(tok, id)) throw bad("bad token id");
          ids.push_back(id);
        }
      }
      s.token_ids = std::move(ids);
    }
    meta.push_back(std::move(s));
  }
  if (line_no == 0) throw bad("empty file");
  return meta;
}

// Unbiased integer in [0, bound) from a 64-bit engine; platform-independent.
std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t bound) {
  const std::uint64_t limit = (0 - bound) % bound;
  while (true) {
    std::uint64_t r = engine();
    if (r >= limit) return r % bound;
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// First k entries of `pool` become a uniform k-subset (partial Fisher-Yates).
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t k, std::mt19937_64& engine) {
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + bounded_draw(engine, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

}  // namespace

std::string feature_blob_name(Aggregation agg) {
  return "features_" + std::string(to_string(agg)) + ".f32";
}

std::span<const float> EmbeddingPack::feature_row(Aggregation agg, std::size_t record,
                                                  std::size_t layer) const {
  const auto& blob = features.at(agg);
  const std::size_t d = manifest.hidden_dim;
  const std::size_t offset = (record * manifest.num_layers + (layer - 1)) * d;
  return std::span<const float>(blob).subspan(offset, d);
}

std::span<const float> EmbeddingPack::logit_row(std::size_t record) const {
  const std::size_t c = manifest.num_classes;
  return std::span<const float>(logits).subspan(record * c, c);
}

void EmbeddingPack::refresh_checksums() {
  manifest.blob_checksums.clear();
  for (const auto& [agg, blob] : features) {
    manifest.blob_checksums[feature_blob_name(agg)] = fnv1a64(as_bytes(blob));
  }
  manifest.blob_checksums[kLogitsBlob] = fnv1a64(as_bytes(logits));
}

bool bit_equal(const EmbeddingPack& a, const EmbeddingPack& b) {
  auto same = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * 4) == 0;
  };
  if (!(a.manifest == b.manifest) || !(a.meta == b.meta)) return false;
  if (a.features.size() != b.features.size()) return false;
  for (const auto& [agg, blob] : a.features) {
    auto it = b.features.find(agg);
    if (it == b.features.end() || !same(blob, it->second)) return false;
  }
  return same(a.logits, b.logits);
}

void validate_pack(const EmbeddingPack& pack, bool check_checksums) {
  const PackManifest& m = pack.manifest;
  check_manifest(m);
  check_meta(m, pack.meta);

  for (Aggregation agg : m.aggregations) {
    if (!pack.features.contains(agg)) {
      throw Error(ErrorKind::kMissingBlob, "missing " + feature_blob_name(agg),
                  {.blob = feature_blob_name(agg)});
    }
  }
  for (const auto& [agg, blob] : pack.features) {
    if (!m.aggregations.contains(agg)) {
      throw Error(ErrorKind::kInvalidManifest,
                  feature_blob_name(agg) + " present but not declared in the manifest",
                  {.blob = feature_blob_name(agg)});
    }
    if (blob.size() != m.feature_floats()) {
      throw Error(ErrorKind::kShapeMismatch,
                  feature_blob_name(agg) + " holds " + std::to_string(blob.size()) +
                      " floats, expected " + std::to_string(m.feature_floats()),
                  {.blob = feature_blob_name(agg)});
    }
  }
  if (pack.logits.size() != m.logit_floats()) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(kLogitsBlob) + " holds " + std::to_string(pack.logits.size()) +
                    " floats, expected " + std::to_string(m.logit_floats()),
                {.blob = kLogitsBlob});
  }

  if (check_checksums) {
    auto expected = expected_blobs(m);
    for (const auto& [name, count] : expected) {
      auto it = m.blob_checksums.find(name);
      if (it == m.blob_checksums.end()) {
        throw Error(ErrorKind::kInvalidManifest, "no checksum declared for " + name,
                    {.blob = name});
      }
      const std::vector<float>& blob =
          name == kLogitsBlob ? pack.logits
                              : pack.features.at(name == feature_blob_name(Aggregation::kCls)
                                                     ? Aggregation::kCls
                                                     : Aggregation::kAvg);
      if (fnv1a64(as_bytes(blob)) != it->second) {
        throw Error(ErrorKind::kChecksumMismatch, name + " does not match its checksum",
                    {.blob = name});
      }
    }
  }

  for (const auto& [agg, blob] : pack.features) check_finite_features(m, agg, blob);
  check_finite_logits(m, pack.logits);
}

EmbeddingPack read_pack(const fs::path& dir) {
  auto require = [&](const std::string& name) {
    fs::path p = dir / name;
    if (!fs::is_regular_file(p)) {
      throw Error(ErrorKind::kMissingBlob, "missing " + p.string(), {.blob = name});
    }
    return p;
  };

  EmbeddingPack pack;
  pack.manifest = manifest_from_json(read_file(require(kManifestFile)));
  check_manifest(pack.manifest);
  pack.meta = meta_from_tsv(read_file(require(kMetaFile)));

  for (const auto& [name, count] : expected_blobs(pack.manifest)) {
    fs::path p = require(name);
    std::string bytes = read_file(p);
    if (bytes.size() != count * 4) {
      throw Error(ErrorKind::kShapeMismatch,
                  name + " is " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(count * 4),
                  {.blob = name});
    }
    auto declared = pack.manifest.blob_checksums.find(name);
    if (declared == pack.manifest.blob_checksums.end()) {
      throw Error(ErrorKind::kInvalidManifest, "no checksum declared for " + name,
                  {.blob = name});
    }
    if (fnv1a64(std::string_view(bytes)) != declared->second) {
      throw Error(ErrorKind::kChecksumMismatch, name + " does not match its checksum",
                  {.blob = name});
    }
    std::vector<float> values = detail::floats_from_le(bytes);
    if (name == kLogitsBlob) {
      pack.logits = std::move(values);
    } else {
      pack.features[name == feature_blob_name(Aggregation::kCls) ? Aggregation::kCls
                                                                  : Aggregation::kAvg] =
          std::move(values);
    }
  }
  validate_pack(pack, /*check_checksums=*/false);
  return pack;
}

void write_pack(const EmbeddingPack& pack, const fs::path& dir) {
  validate_pack(pack, /*check_checksums=*/false);

  PackManifest manifest = pack.manifest;
  manifest.blob_checksums.clear();
  std::map<std::string, std::string> files;
  for (const auto& [agg, blob] : pack.features) {
    std::string bytes = detail::floats_to_le(blob);
    manifest.blob_checksums[feature_blob_name(agg)] = fnv1a64(std::string_view(bytes));
    files[feature_blob_name(agg)] = std::move(bytes);
  }
  {
    std::string bytes = detail::floats_to_le(pack.logits);
    manifest.blob_checksums[kLogitsBlob] = fnv1a64(std::string_view(bytes));
    files[kLogitsBlob] = std::move(bytes);
  }
  files[kMetaFile] = meta_to_tsv(pack.meta);
  files[kManifestFile] = manifest_to_json(manifest);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir.string());
  // Manifest last, so a directory with a manifest has all its blobs.
  for (const auto& [name, bytes] : files) {
    if (name != kManifestFile) write_file_atomic(dir / name, bytes);
  }
  write_file_atomic(dir / kManifestFile, files[kManifestFile]);
}

std::vector<std::size_t> records_with_tag(const EmbeddingPack& pack, SplitTag tag) {
  std::vector<std::size_t> ids;
  for (const SampleMeta& s : pack.meta) {
    if (s.split == tag) ids.push_back(s.record_id);
  }
  return ids;
}

std::vector<std::size_t> sample_split(const EmbeddingPack& pack, SplitTag tag,
                                      std::optional<std::size_t> n, std::uint64_t seed) {
  std::vector<std::size_t> pool = records_with_tag(pack, tag);
  if (!n) return pool;
  if (*n > pool.size()) {
    throw Error(ErrorKind::kInsufficientRecords,
                "requested " + std::to_string(*n) + " " + std::string(to_string(tag)) +
                    " records, " + std::to_string(pool.size()) + " available",
                {.available = pool.size()});
  }
  std::mt19937_64 engine(mix_seed(seed, static_cast<std::uint64_t>(tag)));
  partial_shuffle(pool, *n, engine);
  pool.resize(*n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ClassSample sample_per_class(const EmbeddingPack& pack, SplitTag tag, std::size_t per_class,
                             std::uint64_t seed) {
  const std::size_t num_classes = pack.manifest.num_classes;
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (const SampleMeta& s : pack.meta) {
    if (s.split == tag && s.gold_label) {
      by_class[static_cast<std::size_t>(*s.gold_label)].push_back(s.record_id);
    }
  }
  ClassSample out;
  out.per_class_count.resize(num_classes);
  out.shortfall.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& pool = by_class[c];
    std::size_t take = std::min(per_class, pool.size());
    std::mt19937_64 engine(mix_seed(seed, 100 + c));
    partial_shuffle(pool, take, engine);
    out.ids.insert(out.ids.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    out.per_class_count[c] = take;
    out.shortfall[c] = per_class - take;
  }
  std::sort(out.ids.begin(), out.ids.end());
  return out;
}

}  // namespace triad
