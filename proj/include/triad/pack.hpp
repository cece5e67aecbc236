#pragma once

// Embedding packs: the on-disk container of per-layer sentence features,
// classifier logits and split metadata produced by the feature extractor.
// The byte-level layout is documented in docs/pack-format.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "triad/types.hpp"

namespace triad {

inline constexpr int kPackFormatVersion = 1;
inline constexpr char kManifestFile[] = "manifest.json";
inline constexpr char kMetaFile[] = "meta.tsv";
inline constexpr char kLogitsBlob[] = "logits.f32";

std::string feature_blob_name(Aggregation agg);

struct PackManifest {
  int format_version = kPackFormatVersion;
  std::string model_name;
  std::size_t num_records = 0;
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;
  std::size_t num_classes = 0;
  std::set<Aggregation> aggregations;
  std::string byte_order = "little-endian";
  // Blob file name -> FNV-1a 64 of its bytes. Filled by write_pack.
  std::map<std::string, std::uint64_t> blob_checksums;
  // Truncation length the extractor used, if it reported one.
  std::optional<std::size_t> max_seq_len;
  // Tokenizer vocabulary size, when token ids are recorded.
  std::optional<std::size_t> vocab_size;

  std::size_t feature_floats() const { return num_records * num_layers * hidden_dim; }
  std::size_t logit_floats() const { return num_records * num_classes; }

  bool operator==(const PackManifest&) const = default;
};

struct SampleMeta {
  std::size_t record_id = 0;
  SplitTag split = SplitTag::kIdTest;
  std::string source_name;
  std::optional<int> gold_label;
  std::optional<std::vector<std::int32_t>> token_ids;
  std::uint64_t text_digest = 0;

  bool operator==(const SampleMeta&) const = default;
};

// Features are stored record-major: features[agg][(record * L + (layer - 1)) * d + k].
// Layers are 1-based everywhere in the public API.
struct EmbeddingPack {
  PackManifest manifest;
  std::vector<SampleMeta> meta;
  std::map<Aggregation, std::vector<float>> features;
  std::vector<float> logits;

  bool has_aggregation(Aggregation agg) const { return features.contains(agg); }
  std::span<const float> feature_row(Aggregation agg, std::size_t record,
                                     std::size_t layer) const;
  std::span<const float> logit_row(std::size_t record) const;

  // Recomputes manifest.blob_checksums from the in-memory blobs.
  void refresh_checksums();
};

// Bit-level equality of two packs (blobs compared bytewise).
bool bit_equal(const EmbeddingPack& a, const EmbeddingPack& b);

// Checks every type invariant of an in-memory pack; throws triad::Error.
// Checksums are verified only when `check_checksums` is set.
void validate_pack(const EmbeddingPack& pack, bool check_checksums = false);

EmbeddingPack read_pack(const std::filesystem::path& dir);

// Deterministic: identical packs produce byte-identical directories. The pack is
// validated before anything is written. Each file is written atomically.
void write_pack(const EmbeddingPack& pack, const std::filesystem::path& dir);

// Sorted record ids of every record carrying `tag`.
std::vector<std::size_t> records_with_tag(const EmbeddingPack& pack, SplitTag tag);

// Uniform sample without replacement of `n` records tagged `tag` (all of them when
// n is nullopt). Deterministic for a fixed seed; returns sorted ids. Throws
// InsufficientRecords (context.available) when fewer than n records exist.
std::vector<std::size_t> sample_split(const EmbeddingPack& pack, SplitTag tag,
                                      std::optional<std::size_t> n, std::uint64_t seed);

struct ClassSample {
  std::vector<std::size_t> ids;  // sorted
  std::vector<std::size_t> per_class_count;
  std::vector<std::size_t> shortfall;  // requested minus obtained, per class
};

// Up to `per_class` records of each gold label among records tagged `tag`.
// Classes with fewer records contribute all of them; the gap is reported in
// `shortfall` rather than filled by resampling.
ClassSample sample_per_class(const EmbeddingPack& pack, SplitTag tag, std::size_t per_class,
                             std::uint64_t seed);

}  // namespace triad
