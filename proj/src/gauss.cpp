#include "triad/gauss.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Cholesky>

#include "triad/error.hpp"

namespace triad {

namespace {

struct Factorization {
  Eigen::MatrixXd lower;
  double log_det = 0.0;
};

// Cholesky of cov + lambda*I; nullopt unless every pivot is positive and finite.
std::optional<Factorization> factor(const Eigen::MatrixXd& cov, double lambda) {
  Eigen::MatrixXd a = cov;
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Factorization f;
  f.lower = llt.matrixL();
  for (Eigen::Index i = 0; i < f.lower.rows(); ++i) {
    const double pivot = f.lower(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return std::nullopt;
    f.log_det += 2.0 * std::log(pivot);
  }
  if (!std::isfinite(f.log_det)) return std::nullopt;
  return f;
}

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace

LayerGaussian LayerGaussian::from_parameters(int layer, Aggregation agg,
                                             Eigen::MatrixXd class_means,
                                             Eigen::MatrixXd tied_cov, double lambda,
                                             std::size_t fit_count) {
  const Eigen::Index d = tied_cov.rows();
  if (d < 1 || tied_cov.cols() != d || class_means.cols() != d || class_means.rows() < 1) {
    throw Error(ErrorKind::kDimensionMismatch, "means must be C x d and covariance d x d");
  }
  if (layer < 1) throw Error(ErrorKind::kInvalidArgument, "layers are numbered from 1");
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "regularisation must be finite and >= 0");
  }
  if (!class_means.allFinite() || !tied_cov.allFinite()) {
    throw Error(ErrorKind::kNonFiniteValue, "non-finite Gaussian parameters",
                {.layer = static_cast<std::size_t>(layer)});
  }
  if (!is_symmetric(tied_cov, 1e-10)) {
    throw Error(ErrorKind::kInvalidArgument, "covariance is not symmetric");
  }
  auto f = factor(tied_cov, lambda);
  if (!f) {
    throw Error(ErrorKind::kSingularAfterRegularization,
                "covariance + " + std::to_string(lambda) + " I is not positive definite",
                {.layer = static_cast<std::size_t>(layer)});
  }
  LayerGaussian g;
  g.layer_ = layer;
  g.aggregation_ = agg;
  g.class_means_ = std::move(class_means);
  g.tied_cov_ = std::move(tied_cov);
  g.lambda_ = lambda;
  g.chol_ = std::move(f->lower);
  g.log_det_ = f->log_det;
  g.fit_count_ = fit_count;
  return g;
}

LayerGaussian fit_layer_gaussian(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                 std::span<const int> labels, int num_classes,
                                 const RegularizationPolicy& policy, int layer, Aggregation agg) {
  const Eigen::Index m = features.rows();
  const Eigen::Index d = features.cols();
  const ErrorContext ctx{.layer = static_cast<std::size_t>(layer)};
  if (static_cast<std::size_t>(m) != labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(m) + " feature rows but " + std::to_string(labels.size()) +
                    " labels",
                ctx);
  }
  if (num_classes < 1 || d < 1) {
    throw Error(ErrorKind::kInvalidArgument, "need at least one class and one dimension", ctx);
  }
  if (!features.allFinite()) {
    throw Error(ErrorKind::kNonFiniteValue, "non-finite training feature", ctx);
  }

  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(y) + " outside [0, C)",
                  ctx);
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] < 2) {
      throw Error(ErrorKind::kClassUnderpopulated,
                  "class " + std::to_string(c) + " has " +
                      std::to_string(counts[static_cast<std::size_t>(c)]) +
                      " training samples; at least 2 are required",
                  ctx);
    }
  }

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(num_classes, d);
  for (Eigen::Index i = 0; i < m; ++i) means.row(labels[static_cast<std::size_t>(i)]) += features.row(i);
  for (int c = 0; c < num_classes; ++c) {
    means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }

  // Pooled scatter of class-centred rows over all M samples.
  Eigen::MatrixXd centered(d, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    centered.col(i) = (features.row(i) - means.row(labels[static_cast<std::size_t>(i)])).transpose();
  }
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(m));
  Eigen::MatrixXd cov = scatter.selfadjointView<Eigen::Lower>();

  double lambda = policy.initial;
  double lambda_max = policy.maximum;
  if (policy.mode == RegularizationPolicy::Mode::kTraceRelative) {
    const double scale = cov.trace() / static_cast<double>(d);
    lambda *= scale;
    lambda_max *= scale;
  }
  // Tolerate rounding in the repeated growth product.
  const double ceiling = lambda_max * (1.0 + 1e-9);
  while (true) {
    if (factor(cov, lambda)) {
      return LayerGaussian::from_parameters(layer, agg, std::move(means), std::move(cov), lambda,
                                            static_cast<std::size_t>(m));
    }
    const double next = lambda * policy.growth;
    if (policy.mode == RegularizationPolicy::Mode::kFixed || !(next <= ceiling) ||
        !(next > lambda)) {
      throw Error(ErrorKind::kSingularAfterRegularization,
                  "tied covariance of layer " + std::to_string(layer) +
                      " is not positive definite with regularisation up to " +
                      std::to_string(lambda),
                  ctx);
    }
    lambda = next;
  }
}

std::vector<LayerScore> gaussian_score_batch(const LayerGaussian& g,
                                             const Eigen::Ref<const Eigen::MatrixXd>& features,
                                             std::span<const std::size_t> record_ids) {
  const Eigen::Index n = features.rows();
  if (features.cols() != static_cast<Eigen::Index>(g.dim())) {
    throw Error(ErrorKind::kDimensionMismatch,
                "feature dimension " + std::to_string(features.cols()) + ", model expects " +
                    std::to_string(g.dim()),
                {.layer = static_cast<std::size_t>(g.layer())});
  }
  if (static_cast<std::size_t>(n) != record_ids.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "one record id per feature row is required");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!features.row(i).allFinite()) {
      throw Error(ErrorKind::kNonFiniteValue,
                  "non-finite feature for record " + std::to_string(record_ids[static_cast<std::size_t>(i)]),
                  {.record = record_ids[static_cast<std::size_t>(i)],
                   .layer = static_cast<std::size_t>(g.layer())});
    }
  }

  std::vector<LayerScore> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = {record_ids[static_cast<std::size_t>(i)], g.layer(),
                                        -std::numeric_limits<double>::infinity(), 0};
  }
  const auto lower = g.chol_factor().triangularView<Eigen::Lower>();
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(g.num_classes()); ++c) {
    Eigen::MatrixXd diff = (features.rowwise() - g.class_means().row(c)).transpose();
    lower.solveInPlace(diff);
    const Eigen::RowVectorXd maha = diff.colwise().squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = -0.5 * (g.log_det() + maha(i));
      LayerScore& best = out[static_cast<std::size_t>(i)];
      if (s > best.score) {
        best.score = s;
        best.argmax_class = static_cast<int>(c);
      }
    }
  }
  return out;
}

LayerScore gaussian_score(const LayerGaussian& g, std::span<const double> h,
                          std::size_t record_id) {
  if (h.size() != g.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "vector of length " + std::to_string(h.size()) + ", model expects " +
                    std::to_string(g.dim()),
                {.record = record_id, .layer = static_cast<std::size_t>(g.layer())});
  }
  Eigen::Map<const Eigen::RowVectorXd> row(h.data(), static_cast<Eigen::Index>(h.size()));
  const std::size_t ids[] = {record_id};
  return gaussian_score_batch(g, row, ids).front();
}

Eigen::MatrixXd gather_features(const EmbeddingPack& pack, Aggregation agg, std::size_t layer,
                                std::span<const std::size_t> record_ids) {
  if (!pack.has_aggregation(agg)) {
    throw Error(ErrorKind::kInvalidArgument,
                "pack has no " + std::string(to_string(agg)) + " features");
  }
  if (layer < 1 || layer > pack.manifest.num_layers) {
    throw Error(ErrorKind::kInvalidArgument,
                "layer " + std::to_string(layer) + " outside [1, " +
                    std::to_string(pack.manifest.num_layers) + "]");
  }
  const std::size_t d = pack.manifest.hidden_dim;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(record_ids.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < record_ids.size(); ++i) {
    if (record_ids[i] >= pack.manifest.num_records) {
      throw Error(ErrorKind::kInvalidArgument,
                  "record " + std::to_string(record_ids[i]) + " not in pack",
                  {.record = record_ids[i]});
    }
    auto row = pack.feature_row(agg, record_ids[i], layer);
    for (std::size_t k = 0; k < d; ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
  }
  return out;
}

std::vector<LayerScore> score_all_layers(const EmbeddingPack& pack,
                                         std::span<const LayerGaussian> models,
                                         std::span<const std::size_t> record_ids) {
  const std::size_t n = record_ids.size();
  std::vector<LayerScore> out(n * models.size());
  if (n == 0) return out;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const LayerGaussian& g = models[m];
    if (g.dim() != pack.manifest.hidden_dim) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "model of layer " + std::to_string(g.layer()) + " has dimension " +
                      std::to_string(g.dim()) + ", pack has " +
                      std::to_string(pack.manifest.hidden_dim),
                  {.layer = static_cast<std::size_t>(g.layer())});
    }
    Eigen::MatrixXd features = gather_features(pack, g.aggregation(),
                                               static_cast<std::size_t>(g.layer()), record_ids);
    auto scores = gaussian_score_batch(g, features, record_ids);
    for (std::size_t i = 0; i < n; ++i) out[i * models.size() + m] = scores[i];
  }
  return out;
}

double full_log_likelihood_offset(std::size_t dim) {
  return -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
}

}  // namespace triad
