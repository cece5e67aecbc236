#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "triad/checksum.hpp"
#include "triad/error.hpp"
#include "triad/fileio.hpp"
#include "triad/pack.hpp"

namespace triad {
namespace {

using testing::TempDir;

EmbeddingPack toy_pack(std::size_t n = 4, std::size_t layers = 2, std::size_t d = 3) {
  EmbeddingPack p;
  p.manifest.model_name = "toy";
  p.manifest.num_records = n;
  p.manifest.num_layers = layers;
  p.manifest.hidden_dim = d;
  p.manifest.num_classes = 2;
  p.manifest.aggregations = {Aggregation::kCls};
  for (std::size_t i = 0; i < n; ++i) {
    SampleMeta m;
    m.record_id = i;
    m.split = SplitTag::kIdTrain;
    m.source_name = "toy";
    m.gold_label = static_cast<int>(i % 2);
    p.meta.push_back(m);
  }
  auto& f = p.features[Aggregation::kCls];
  for (std::size_t i = 0; i < n * layers * d; ++i) f.push_back(0.25f * static_cast<float>(i));
  for (std::size_t i = 0; i < n * 2; ++i) p.logits.push_back(static_cast<float>(i) - 1.5f);
  p.refresh_checksums();
  return p;
}

template <typename F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a triad::Error";
  return ErrorKind::kIoFailure;
}

void rewrite_blob(const std::filesystem::path& dir, const std::string& name,
                  const std::string& bytes, bool fix_checksum) {
  write_file_atomic(dir / name, bytes);
  if (!fix_checksum) return;
  std::string manifest = read_file(dir / kManifestFile);
  const std::string old_pos = "\"" + name + "\": \"";
  const auto at = manifest.find(old_pos);
  ASSERT_NE(at, std::string::npos);
  const auto sum = fnv1a64(std::string_view(bytes));
  manifest.replace(at + old_pos.size(), 16, to_hex64(sum));
  write_file_atomic(dir / kManifestFile, manifest);
}

TEST(PackIo, RoundTripsToyPack) {
  TempDir tmp("pack");
  const EmbeddingPack p = toy_pack();
  write_pack(p, tmp.path());
  const EmbeddingPack q = read_pack(tmp.path());
  EXPECT_EQ(q.manifest.num_records, 4u);
  EXPECT_TRUE(bit_equal(p, q));
  EXPECT_EQ(p.meta, q.meta);
}

TEST(PackIo, RoundTripsRandomPacks) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TempDir tmp("pack-rand");
    const EmbeddingPack p = testing::make_random_pack(seed);
    write_pack(p, tmp.path());
    EXPECT_TRUE(bit_equal(p, read_pack(tmp.path()))) << "seed " << seed;
  }
}

TEST(PackIo, PreservesSpecialFloatBitsThatAreFinite) {
  EmbeddingPack p = toy_pack();
  auto& f = p.features[Aggregation::kCls];
  f[0] = -0.0f;
  f[1] = std::numeric_limits<float>::denorm_min();
  f[2] = std::numeric_limits<float>::max();
  f[3] = std::numeric_limits<float>::lowest();
  p.refresh_checksums();
  TempDir tmp("pack-bits");
  write_pack(p, tmp.path());
  const EmbeddingPack q = read_pack(tmp.path());
  EXPECT_TRUE(bit_equal(p, q));
  EXPECT_TRUE(std::signbit(q.features.at(Aggregation::kCls)[0]));
}

TEST(PackIo, WritesAreByteIdentical) {
  TempDir a("pack-a"), b("pack-b");
  const EmbeddingPack p = testing::make_random_pack(7);
  write_pack(p, a.path());
  write_pack(p, b.path());
  EXPECT_EQ(testing::directory_fingerprint(a.path()), testing::directory_fingerprint(b.path()));
}

TEST(PackIo, BlobsAreLittleEndianRecordMajor) {
  TempDir tmp("pack-layout");
  const EmbeddingPack p = toy_pack(2, 2, 3);
  write_pack(p, tmp.path());
  const std::string bytes = read_file(tmp.path() / "features_cls.f32");
  ASSERT_EQ(bytes.size(), 2u * 2 * 3 * 4);
  // record 1, layer 2, coordinate 0 sits at float index (1 * 2 + 1) * 3 = 9
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data()) + 9 * 4;
  std::uint32_t bits = u[0] | (u[1] << 8) | (u[2] << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  EXPECT_EQ(v, 0.25f * 9);
  EXPECT_EQ(p.feature_row(Aggregation::kCls, 1, 2)[0], v);
}

TEST(PackIo, ShortBlobIsShapeMismatch) {
  TempDir tmp("pack-short");
  write_pack(toy_pack(), tmp.path());
  std::string bytes = read_file(tmp.path() / "features_cls.f32");
  bytes.resize(bytes.size() - 4);
  rewrite_blob(tmp.path(), "features_cls.f32", bytes, true);
  EXPECT_EQ(error_kind_of([&] { read_pack(tmp.path()); }), ErrorKind::kShapeMismatch);
}

TEST(PackIo, FlippedByteIsChecksumMismatch) {
  TempDir tmp("pack-flip");
  write_pack(toy_pack(), tmp.path());
  std::string bytes = read_file(tmp.path() / "logits.f32");
  bytes[5] ^= 0x10;
  rewrite_blob(tmp.path(), "logits.f32", bytes, false);
  try {
    read_pack(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kChecksumMismatch);
    EXPECT_EQ(e.context().blob, "logits.f32");
  }
}

TEST(PackIo, MissingBlobIsReported) {
  TempDir tmp("pack-missing");
  write_pack(toy_pack(), tmp.path());
  std::filesystem::remove(tmp.path() / "logits.f32");
  EXPECT_EQ(error_kind_of([&] { read_pack(tmp.path()); }), ErrorKind::kMissingBlob);
  std::filesystem::remove(tmp.path() / kManifestFile);
  EXPECT_EQ(error_kind_of([&] { read_pack(tmp.path()); }), ErrorKind::kMissingBlob);
}

TEST(PackIo, NanNamesRecordAndLayer) {
  TempDir tmp("pack-nan");
  const EmbeddingPack p = toy_pack(10, 4, 3);
  write_pack(p, tmp.path());
  std::string bytes = read_file(tmp.path() / "features_cls.f32");
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const std::size_t at = ((7 * 4) + 2) * 3 + 1;  // record 7, layer 3, coordinate 1
  std::memcpy(bytes.data() + at * 4, &nan, 4);
  rewrite_blob(tmp.path(), "features_cls.f32", bytes, true);
  try {
    read_pack(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteValue);
    EXPECT_EQ(e.context().record, 7u);
    EXPECT_EQ(e.context().layer, 3u);
    EXPECT_EQ(e.context().blob, "features_cls.f32");
  }
}

TEST(PackIo, ManifestSizeDisagreementIsRejected) {
  TempDir tmp("pack-manifest");
  write_pack(toy_pack(), tmp.path());
  std::string manifest = read_file(tmp.path() / kManifestFile);
  const auto at = manifest.find("\"hidden_dim\": 3");
  ASSERT_NE(at, std::string::npos);
  manifest.replace(at, 15, "\"hidden_dim\": 4");
  write_file_atomic(tmp.path() / kManifestFile, manifest);
  EXPECT_EQ(error_kind_of([&] { read_pack(tmp.path()); }), ErrorKind::kShapeMismatch);
}

TEST(PackIo, LabelInvariantRejectedBeforeWriting) {
  EmbeddingPack p = toy_pack();
  p.meta[2].gold_label.reset();
  TempDir tmp("pack-label");
  const auto dir = tmp.path() / "out";
  EXPECT_EQ(error_kind_of([&] { write_pack(p, dir); }), ErrorKind::kInvalidMetadata);
  EXPECT_FALSE(std::filesystem::exists(dir));
}

TEST(PackIo, ValidateRejectsBrokenInvariants) {
  {
    EmbeddingPack p = toy_pack();
    p.meta[1].record_id = 3;
    EXPECT_EQ(error_kind_of([&] { validate_pack(p); }), ErrorKind::kInvalidMetadata);
  }
  {
    EmbeddingPack p = toy_pack();
    p.meta[1].gold_label = 2;
    EXPECT_EQ(error_kind_of([&] { validate_pack(p); }), ErrorKind::kInvalidMetadata);
  }
  {
    EmbeddingPack p = toy_pack();
    p.manifest.num_classes = 1;
    EXPECT_NE(error_kind_of([&] { validate_pack(p); }), ErrorKind::kIoFailure);
  }
  {
    EmbeddingPack p = toy_pack();
    p.logits.pop_back();
    EXPECT_EQ(error_kind_of([&] { validate_pack(p); }), ErrorKind::kShapeMismatch);
  }
  {
    EmbeddingPack p = toy_pack();
    p.logits[3] = std::numeric_limits<float>::infinity();
    EXPECT_EQ(error_kind_of([&] { validate_pack(p); }), ErrorKind::kNonFiniteValue);
  }
}

TEST(PackIo, TokenIdsDistinguishAbsentAndEmpty) {
  EmbeddingPack p = toy_pack();
  p.manifest.vocab_size = 10;
  p.meta[0].token_ids = std::vector<std::int32_t>{};
  p.meta[1].token_ids = std::vector<std::int32_t>{3, 1, 3};
  TempDir tmp("pack-tokens");
  write_pack(p, tmp.path());
  const EmbeddingPack q = read_pack(tmp.path());
  ASSERT_TRUE(q.meta[0].token_ids.has_value());
  EXPECT_TRUE(q.meta[0].token_ids->empty());
  EXPECT_EQ(q.meta[1].token_ids, (std::vector<std::int32_t>{3, 1, 3}));
  EXPECT_FALSE(q.meta[2].token_ids.has_value());
}

EmbeddingPack tagged_pack(std::size_t dev, std::size_t adv) {
  testing::SynthOptions o;
  o.dim = 2;
  o.layers = 1;
  o.train_per_class = 3;
  o.per_split = 0;
  EmbeddingPack p = testing::make_synthetic_pack(o);
  for (std::size_t i = 0; i < dev + adv; ++i) {
    SampleMeta m = p.meta[0];
    m.record_id = p.meta.size();
    m.split = i < dev ? SplitTag::kIdDev : SplitTag::kAdv;
    p.meta.push_back(m);
    for (auto& [agg, f] : p.features) {
      f.insert(f.end(), {0.0f, 0.0f});
    }
    p.logits.insert(p.logits.end(), {1.0f, 0.0f});
  }
  p.manifest.num_records = p.meta.size();
  p.refresh_checksums();
  return p;
}

TEST(SampleSplit, ExhaustiveRequestReturnsAll) {
  const EmbeddingPack p = tagged_pack(500, 0);
  const auto ids = sample_split(p, SplitTag::kIdDev, 500, 3);
  EXPECT_EQ(ids, records_with_tag(p, SplitTag::kIdDev));
  EXPECT_EQ(sample_split(p, SplitTag::kIdDev, std::nullopt, 3), ids);
}

TEST(SampleSplit, ShortTagReportsAvailable) {
  const EmbeddingPack p = tagged_pack(10, 40);
  try {
    sample_split(p, SplitTag::kAdv, 500, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientRecords);
    EXPECT_EQ(e.context().available, 40u);
  }
}

TEST(SampleSplit, DeterministicSortedAndSeedSensitive) {
  const EmbeddingPack p = tagged_pack(300, 0);
  const auto a = sample_split(p, SplitTag::kIdDev, 50, 11);
  const auto b = sample_split(p, SplitTag::kIdDev, 50, 11);
  const auto c = sample_split(p, SplitTag::kIdDev, 50, 12);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  for (std::size_t id : a) EXPECT_EQ(p.meta[id].split, SplitTag::kIdDev);
}

TEST(SampleSplit, RoughlyUniform) {
  const EmbeddingPack p = tagged_pack(20, 0);
  const auto dev = records_with_tag(p, SplitTag::kIdDev);
  std::map<std::size_t, int> hits;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    for (std::size_t id : sample_split(p, SplitTag::kIdDev, 5, s)) ++hits[id];
  }
  // each id expected trials * 5 / 20 = 1000 times; sd ~ 27
  for (std::size_t id : dev) EXPECT_NEAR(hits[id], 1000, 150) << id;
}

TEST(SampleSplit, PerClassCapsAndReportsShortfall) {
  testing::SynthOptions o;
  o.dim = 2;
  o.layers = 1;
  o.train_per_class = 6;
  o.per_split = 0;
  const EmbeddingPack p = testing::make_synthetic_pack(o);
  const ClassSample s = sample_per_class(p, SplitTag::kIdTrain, 4, 5);
  EXPECT_EQ(s.ids.size(), 8u);
  EXPECT_EQ(s.per_class_count, (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(s.shortfall, (std::vector<std::size_t>{0, 0}));
  const ClassSample all = sample_per_class(p, SplitTag::kIdTrain, 10, 5);
  EXPECT_EQ(all.ids.size(), 12u);
  EXPECT_EQ(all.shortfall, (std::vector<std::size_t>{4, 4}));
}

}  // namespace
}  // namespace triad
