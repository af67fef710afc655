#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tomo/image.hpp"
#include "tomo/mesh.hpp"
#include "tomo/sensitivity.hpp"

namespace tomo {

enum class Algorithm { lbp, landweber, tikhonov };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// Per-element gray values.
struct ElementImage {
  Eigen::VectorXd g;
};

struct ReconConfig {
  Algorithm algorithm = Algorithm::landweber;
  int iterations = 200;
  /// Landweber step; 1/||S^T S||_2 when unset.
  std::optional<double> step_size;
  /// Tikhonov weight; default_lambda(S) when unset.
  std::optional<double> lambda;
  /// Tikhonov P operator: clamp to [0, 1] after rescaling.
  bool clamp = true;
  /// Tikhonov only: threshold the rescaled image at 0.5 instead of clamping.
  bool binarize = false;

  /// Throws ConfigError for negative iterations, step or lambda.
  void validate() const;
};

/// (g - min) / (max - min); a constant vector maps to all zeros.
Eigen::VectorXd min_max_rescale(const Eigen::VectorXd& g);

/// S^T u. Throws ShapeError naming both shapes when they disagree.
Eigen::VectorXd back_projection(const Eigen::MatrixXd& s, const Eigen::VectorXd& u);

/// ||S^T S||_2 (the largest squared singular value of S) by power iteration,
/// converged to `rel_tol`. The starting vector is fixed, so the result is
/// deterministic.
double spectral_norm_sq(const Eigen::MatrixXd& s, double rel_tol = 1e-6);

/// 1 / ||S^T S||_2. Throws DomainError for a zero matrix.
double max_step_size(const Eigen::MatrixXd& s);

/// `iterations` steps of G <- G + alpha S^T (u - S G) from G = 0, without
/// rescaling. When `residuals` is given it receives ||u - S G_k|| for
/// k = 0 .. iterations. Throws ConfigError when alpha ||S^T S||_2 >= 2.
Eigen::VectorXd landweber_solution(const Eigen::MatrixXd& s, const Eigen::VectorXd& u, int iterations,
                                   double alpha, std::vector<double>* residuals = nullptr);

/// 1e-2 * trace(S^T S) / K.
double default_lambda(const Eigen::MatrixXd& s);

/// Solves (S^T S + lambda I) g = S^T u. lambda = 0 is accepted only when
/// S^T S is invertible; otherwise SolverError.
Eigen::VectorXd tikhonov_solution(const Eigen::MatrixXd& s, const Eigen::VectorXd& u, double lambda);

/// (S^T S + lambda I)^-1 S^T, for applying Tikhonov to many frames.
class TikhonovOperator {
 public:
  TikhonovOperator(const Eigen::MatrixXd& s, double lambda);
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  double lambda() const { return lambda_; }

 private:
  Eigen::MatrixXd op_;
  double lambda_;
};

/// The three algorithms including the final rescale to [0, 1].
ElementImage lbp(const NormalizedFrame& u, const SensitivityMatrix& s);
ElementImage landweber(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config = {});
ElementImage tikhonov(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config = {});
ElementImage reconstruct(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config);

/// Reconstruction with everything that depends only on S precomputed.
/// Immutable after construction, so one instance may serve many threads.
class Reconstructor {
 public:
  Reconstructor(const SensitivityMatrix& s, ReconConfig config);
  ElementImage operator()(const NormalizedFrame& u) const;
  const ReconConfig& config() const { return config_; }

 private:
  const SensitivityMatrix* s_;
  ReconConfig config_;
  double alpha_ = 0.0;
  std::optional<TikhonovOperator> tikhonov_;
};

/// Element-to-pixel lookup. Pixels whose centre lies in a triangle take that
/// triangle (lowest index on ties); disc pixels between the polygon and the
/// circle take the element with the nearest centroid; the rest are outside.
class Rasterizer {
 public:
  static constexpr std::int32_t kOutside = -1;

  explicit Rasterizer(const DiscMesh& mesh, std::size_t rows = kImageSize, std::size_t cols = kImageSize);

  GrayImage operator()(const Eigen::VectorXd& g) const;
  GrayImage operator()(const ElementImage& image) const { return (*this)(image.g); }

  const std::vector<std::int32_t>& element_map() const { return map_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t elements_;
  std::vector<std::int32_t> map_;
};

/// Throws ShapeError unless g has one value per triangle.
GrayImage rasterize(const DiscMesh& mesh, const ElementImage& g);

}  // namespace tomo
