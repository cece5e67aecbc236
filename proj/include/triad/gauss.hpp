#pragma once

// Class-conditional Gaussians with a tied covariance, fitted per layer, and the
// max-over-classes log-likelihood score (constant (2*pi)^d term dropped).

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "triad/pack.hpp"
#include "triad/types.hpp"

namespace triad {

// Covariance conditioning. In trace-relative mode the ridge is
// initial * trace(cov)/d and grows by `growth` until Cholesky succeeds or it
// would exceed maximum * trace(cov)/d.
struct RegularizationPolicy {
  enum class Mode { kTraceRelative, kFixed };

  Mode mode = Mode::kTraceRelative;
  double initial = 1e-6;
  double maximum = 1e-2;
  double growth = 10.0;

  static RegularizationPolicy fixed(double lambda) {
    RegularizationPolicy p;
    p.mode = Mode::kFixed;
    p.initial = lambda;
    p.maximum = lambda;
    return p;
  }
};

class LayerGaussian {
 public:
  // Builds a model from explicit parameters; factors cov + lambda*I.
  // Throws SingularAfterRegularization if that matrix is not positive definite.
  static LayerGaussian from_parameters(int layer, Aggregation agg, Eigen::MatrixXd class_means,
                                       Eigen::MatrixXd tied_cov, double lambda,
                                       std::size_t fit_count = 0);

  int layer() const { return layer_; }
  Aggregation aggregation() const { return aggregation_; }
  std::size_t dim() const { return static_cast<std::size_t>(tied_cov_.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(class_means_.rows()); }

  const Eigen::MatrixXd& class_means() const { return class_means_; }  // C x d
  const Eigen::MatrixXd& tied_cov() const { return tied_cov_; }        // d x d, unregularised
  double regularization() const { return lambda_; }
  const Eigen::MatrixXd& chol_factor() const { return chol_; }  // lower, of cov + lambda*I
  double log_det() const { return log_det_; }
  std::size_t fit_count() const { return fit_count_; }

 private:
  LayerGaussian() = default;

  int layer_ = 1;
  Aggregation aggregation_ = Aggregation::kCls;
  Eigen::MatrixXd class_means_;
  Eigen::MatrixXd tied_cov_;
  double lambda_ = 0.0;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  std::size_t fit_count_ = 0;
};

struct LayerScore {
  std::size_t record_id = 0;
  int layer = 1;
  double score = 0.0;
  int argmax_class = 0;
};

// features: M x d, labels in [0, C). Means per class; covariance of the
// class-centred rows divided by M. Throws ClassUnderpopulated (< 2 samples in
// some class), DimensionMismatch, NonFiniteValue, SingularAfterRegularization.
LayerGaussian fit_layer_gaussian(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                 std::span<const int> labels, int num_classes,
                                 const RegularizationPolicy& policy = {}, int layer = 1,
                                 Aggregation agg = Aggregation::kCls);

// max_c -0.5 * (log|cov + lambda I| + mahalanobis(h, mu_c)); ties go to the lowest class.
LayerScore gaussian_score(const LayerGaussian& g, std::span<const double> h,
                          std::size_t record_id = 0);

// Scores for many rows at once (rows of `features`, one per record).
std::vector<LayerScore> gaussian_score_batch(const LayerGaussian& g,
                                             const Eigen::Ref<const Eigen::MatrixXd>& features,
                                             std::span<const std::size_t> record_ids);

// Result is row-major [ids.size() x models.size()].
std::vector<LayerScore> score_all_layers(const EmbeddingPack& pack,
                                         std::span<const LayerGaussian> models,
                                         std::span<const std::size_t> record_ids);

// Rows of the pack's features for (agg, layer), widened to double.
Eigen::MatrixXd gather_features(const EmbeddingPack& pack, Aggregation agg, std::size_t layer,
                                std::span<const std::size_t> record_ids);

// Add this to a score to recover the full Gaussian log-likelihood, -(d/2) log(2*pi).
double full_log_likelihood_offset(std::size_t dim);

}  // namespace triad
