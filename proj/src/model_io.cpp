#include "triad/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "binary.hpp"
#include "triad/checksum.hpp"
#include "triad/error.hpp"
#include "triad/fileio.hpp"

namespace triad {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kSidecarVersion = 1;
constexpr std::size_t kGaussHeader = 64;
constexpr std::size_t kBowHeader = 32;

void append_checksum(std::string& out) {
  detail::put_u64(out, fnv1a64(std::string_view(out)));
}

// Verifies magic, minimum size and trailing checksum; returns the payload view.
std::string_view open_sidecar(std::string_view bytes, const char (&magic)[8], std::size_t header,
                              const std::string& origin) {
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorKind::kCorruptSidecar, origin + ": " + why, {.blob = origin});
  };
  if (bytes.size() < header + 8) throw corrupt("file too short");
  if (std::memcmp(bytes.data(), magic, 8) != 0) throw corrupt("bad magic");
  std::string_view body = bytes.substr(0, bytes.size() - 8);
  if (fnv1a64(body) != detail::get_le<std::uint64_t>(bytes, bytes.size() - 8)) {
    throw corrupt("checksum mismatch");
  }
  if (detail::get_le<std::uint32_t>(bytes, 8) != kSidecarVersion) {
    throw corrupt("unsupported version");
  }
  return body;
}

std::string read_sidecar(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::kMissingSidecar, "missing model file " + path.string(),
                {.blob = path.filename().string()});
  }
  return read_file(path);
}

}  // namespace

std::string gaussian_file_name(Aggregation agg, int layer) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gauss_%s_L%02d.bin", std::string(to_string(agg)).c_str(), layer);
  return buf;
}

std::string encode_gaussian(const LayerGaussian& g) {
  const std::size_t d = g.dim();
  const std::size_t c = g.num_classes();
  std::string out(kGaussMagic, 8);
  out.reserve(kGaussHeader + 8 * (c * d + d * d) + 8);
  detail::put_u32(out, kSidecarVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(g.layer()));
  detail::put_u32(out, g.aggregation() == Aggregation::kCls ? 0u : 1u);
  detail::put_u32(out, 0u);
  detail::put_u64(out, d);
  detail::put_u64(out, c);
  detail::put_u64(out, g.fit_count());
  detail::put_f64(out, g.regularization());
  detail::put_f64(out, g.log_det());
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t k = 0; k < d; ++k) detail::put_f64(out, g.class_means()(i, k));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) detail::put_f64(out, g.tied_cov()(i, k));
  append_checksum(out);
  return out;
}

LayerGaussian decode_gaussian(std::string_view bytes, const std::string& origin) {
  std::string_view body = open_sidecar(bytes, kGaussMagic, kGaussHeader, origin);
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorKind::kCorruptSidecar, origin + ": " + why, {.blob = origin});
  };
  const auto layer = detail::get_le<std::uint32_t>(body, 12);
  const auto agg_code = detail::get_le<std::uint32_t>(body, 16);
  const auto d = detail::get_le<std::uint64_t>(body, 24);
  const auto c = detail::get_le<std::uint64_t>(body, 32);
  const auto fit_count = detail::get_le<std::uint64_t>(body, 40);
  const double lambda = detail::get_f64(body, 48);
  const double log_det = detail::get_f64(body, 56);
  if (agg_code > 1) throw corrupt("bad aggregation code");
  if (d == 0 || c == 0 || d > (1u << 20) || c > (1u << 20)) throw corrupt("bad dimensions");
  if (body.size() != kGaussHeader + 8 * (c * d + d * d)) throw corrupt("payload size mismatch");

  Eigen::MatrixXd means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::size_t off = kGaussHeader;
  for (Eigen::Index i = 0; i < means.rows(); ++i)
    for (Eigen::Index k = 0; k < means.cols(); ++k, off += 8) means(i, k) = detail::get_f64(body, off);
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index k = 0; k < cov.cols(); ++k, off += 8) cov(i, k) = detail::get_f64(body, off);

  LayerGaussian g = LayerGaussian::from_parameters(
      static_cast<int>(layer), agg_code == 0 ? Aggregation::kCls : Aggregation::kAvg,
      std::move(means), std::move(cov), lambda, fit_count);
  if (std::abs(g.log_det() - log_det) > 1e-8 * std::max(1.0, std::abs(log_det))) {
    throw corrupt("stored log-determinant disagrees with the refactored covariance");
  }
  return g;
}

void write_gaussian(const LayerGaussian& g, const fs::path& path) {
  write_file_atomic(path, encode_gaussian(g));
}

LayerGaussian read_gaussian(const fs::path& path) {
  return decode_gaussian(read_sidecar(path), path.string());
}

std::string encode_bow(const BowModel& model) {
  const std::size_t v = model.idf.vocab_size;
  if (model.idf.idf.size() != v || model.centroid.weights.size() != v) {
    throw Error(ErrorKind::kDimensionMismatch, "IDF table and centroid disagree on vocabulary");
  }
  std::string out(kBowMagic, 8);
  out.reserve(kBowHeader + 16 * v + 8);
  detail::put_u32(out, kSidecarVersion);
  detail::put_u32(out, 0u);
  detail::put_u64(out, v);
  detail::put_u64(out, model.idf.doc_count);
  for (double x : model.idf.idf) detail::put_f64(out, x);
  for (double x : model.centroid.weights) detail::put_f64(out, x);
  append_checksum(out);
  return out;
}

BowModel decode_bow(std::string_view bytes, const std::string& origin) {
  std::string_view body = open_sidecar(bytes, kBowMagic, kBowHeader, origin);
  const auto v = detail::get_le<std::uint64_t>(body, 16);
  if (v == 0 || body.size() != kBowHeader + 16 * v) {
    throw Error(ErrorKind::kCorruptSidecar, origin + ": payload size mismatch", {.blob = origin});
  }
  BowModel m;
  m.idf.vocab_size = v;
  m.idf.doc_count = detail::get_le<std::uint64_t>(body, 24);
  m.idf.idf.resize(v);
  m.centroid.weights.resize(v);
  std::size_t off = kBowHeader;
  for (std::size_t i = 0; i < v; ++i, off += 8) m.idf.idf[i] = detail::get_f64(body, off);
  for (std::size_t i = 0; i < v; ++i, off += 8) m.centroid.weights[i] = detail::get_f64(body, off);
  return m;
}

void write_bow(const BowModel& model, const fs::path& path) {
  write_file_atomic(path, encode_bow(model));
}

BowModel read_bow(const fs::path& path) { return decode_bow(read_sidecar(path), path.string()); }

}  // namespace triad
