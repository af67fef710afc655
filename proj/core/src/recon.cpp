#include "tomo/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "tomo/error.hpp"

namespace tomo {

namespace {

std::string shape_of(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

void check_dims(const Eigen::MatrixXd& s, const Eigen::VectorXd& u) {
  if (s.rows() != u.size()) {
    throw ShapeError("sensitivity matrix is " + shape_of(s.rows(), s.cols()) + " but the frame has " +
                     std::to_string(u.size()) + " values");
  }
}

void check_step(double alpha, double norm_sq) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("Landweber step size must be positive, got " + std::to_string(alpha));
  }
  if (alpha * norm_sq >= 2.0) {
    std::ostringstream os;
    os << "Landweber step size " << alpha << " violates alpha * ||S^T S||_2 < 2 (||S^T S||_2 = " << norm_sq
       << ", so alpha must be below " << 2.0 / norm_sq << ")";
    throw ConfigError(os.str());
  }
}

Eigen::VectorXd finish_tikhonov(const Eigen::VectorXd& raw, const ReconConfig& config) {
  Eigen::VectorXd g = min_max_rescale(raw);
  if (config.binarize) return g.unaryExpr([](double v) { return v >= 0.5 ? 1.0 : 0.0; });
  if (config.clamp) return g.cwiseMax(0.0).cwiseMin(1.0);
  return g;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::lbp: return "lbp";
    case Algorithm::landweber: return "landweber";
    case Algorithm::tikhonov: return "tikhonov";
  }
  return "lbp";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "lbp") return Algorithm::lbp;
  if (name == "landweber") return Algorithm::landweber;
  if (name == "tikhonov") return Algorithm::tikhonov;
  throw ConfigError("unknown algorithm \"" + std::string(name) + "\" (expected lbp, landweber or tikhonov)");
}

void ReconConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0, got " + std::to_string(iterations));
  if (step_size && !(*step_size > 0.0)) {
    throw ConfigError("step size must be positive, got " + std::to_string(*step_size));
  }
  if (lambda && !(*lambda >= 0.0)) throw ConfigError("lambda must be >= 0, got " + std::to_string(*lambda));
}

Eigen::VectorXd min_max_rescale(const Eigen::VectorXd& g) {
  if (g.size() == 0) return g;
  const double lo = g.minCoeff();
  const double hi = g.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Zero(g.size());
  return (g.array() - lo) / (hi - lo);
}

Eigen::VectorXd back_projection(const Eigen::MatrixXd& s, const Eigen::VectorXd& u) {
  check_dims(s, u);
  return s.transpose() * u;
}

double spectral_norm_sq(const Eigen::MatrixXd& s, double rel_tol) {
  if (s.size() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::VectorXd v(s.cols());
  for (auto& x : v) x = dist(rng);
  v.normalize();

  // The Rayleigh quotient converges quadratically in the vector error, so a
  // tight stopping rule on it is cheap; the extra margin keeps the
  // estimate well inside rel_tol.
  const double tol = std::min(rel_tol, 1e-6) * 1e-3;
  double estimate = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd w = s.transpose() * (s * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= tol * std::abs(next)) return next;
    estimate = next;
  }
  return estimate;
}

double max_step_size(const Eigen::MatrixXd& s) {
  const double norm_sq = spectral_norm_sq(s);
  if (!(norm_sq > 0.0)) throw DomainError("sensitivity matrix is zero; no step size exists");
  return 1.0 / norm_sq;
}

Eigen::VectorXd landweber_solution(const Eigen::MatrixXd& s, const Eigen::VectorXd& u, int iterations,
                                   double alpha, std::vector<double>* residuals) {
  check_dims(s, u);
  if (iterations < 0) throw ConfigError("iterations must be >= 0, got " + std::to_string(iterations));
  check_step(alpha, spectral_norm_sq(s));

  Eigen::VectorXd g = Eigen::VectorXd::Zero(s.cols());
  Eigen::VectorXd r = u;
  if (residuals) {
    residuals->clear();
    residuals->push_back(r.norm());
  }
  for (int k = 0; k < iterations; ++k) {
    g.noalias() += alpha * (s.transpose() * r);
    r = u - s * g;
    if (residuals) residuals->push_back(r.norm());
  }
  return g;
}

double default_lambda(const Eigen::MatrixXd& s) {
  if (s.cols() == 0) return 0.0;
  return 1e-2 * s.squaredNorm() / static_cast<double>(s.cols());
}

Eigen::VectorXd tikhonov_solution(const Eigen::MatrixXd& s, const Eigen::VectorXd& u, double lambda) {
  check_dims(s, u);
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0, got " + std::to_string(lambda));
  Eigen::MatrixXd a = s.transpose() * s;
  const Eigen::VectorXd b = s.transpose() * u;
  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
      throw SolverError("S^T S is singular (rank " + std::to_string(lu.rank()) + " of " +
                        std::to_string(a.rows()) + "); use lambda > 0");
    }
    return lu.solve(b);
  }
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw SolverError("Tikhonov system is not positive definite");
  return llt.solve(b);
}

TikhonovOperator::TikhonovOperator(const Eigen::MatrixXd& s, double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0)) throw ConfigError("a precomputed Tikhonov operator needs lambda > 0");
  Eigen::MatrixXd a = s.transpose() * s;
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw SolverError("Tikhonov system is not positive definite");
  op_ = llt.solve(s.transpose());
}

Eigen::VectorXd TikhonovOperator::apply(const Eigen::VectorXd& u) const {
  if (op_.cols() != u.size()) {
    throw ShapeError("Tikhonov operator expects " + std::to_string(op_.cols()) + " values, got " +
                     std::to_string(u.size()));
  }
  return op_ * u;
}

ElementImage lbp(const NormalizedFrame& u, const SensitivityMatrix& s) {
  return {min_max_rescale(back_projection(s.entries, u.values))};
}

ElementImage landweber(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config) {
  config.validate();
  const double alpha = config.step_size ? *config.step_size : max_step_size(s.entries);
  return {min_max_rescale(landweber_solution(s.entries, u.values, config.iterations, alpha))};
}

ElementImage tikhonov(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config) {
  config.validate();
  const double lambda = config.lambda ? *config.lambda : default_lambda(s.entries);
  return {finish_tikhonov(tikhonov_solution(s.entries, u.values, lambda), config)};
}

ElementImage reconstruct(const NormalizedFrame& u, const SensitivityMatrix& s, const ReconConfig& config) {
  switch (config.algorithm) {
    case Algorithm::lbp: return lbp(u, s);
    case Algorithm::landweber: return landweber(u, s, config);
    case Algorithm::tikhonov: return tikhonov(u, s, config);
  }
  throw ConfigError("unknown algorithm");
}

Reconstructor::Reconstructor(const SensitivityMatrix& s, ReconConfig config) : s_(&s), config_(config) {
  config_.validate();
  if (config_.algorithm == Algorithm::landweber) {
    alpha_ = config_.step_size ? *config_.step_size : max_step_size(s.entries);
    check_step(alpha_, spectral_norm_sq(s.entries));
  } else if (config_.algorithm == Algorithm::tikhonov) {
    const double lambda = config_.lambda ? *config_.lambda : default_lambda(s.entries);
    if (lambda > 0.0) tikhonov_.emplace(s.entries, lambda);
  }
}

ElementImage Reconstructor::operator()(const NormalizedFrame& u) const {
  const auto& s = s_->entries;
  switch (config_.algorithm) {
    case Algorithm::lbp: return lbp(u, *s_);
    case Algorithm::landweber: {
      check_dims(s, u.values);
      Eigen::VectorXd g = Eigen::VectorXd::Zero(s.cols());
      for (int k = 0; k < config_.iterations; ++k) g.noalias() += alpha_ * (s.transpose() * (u.values - s * g));
      return {min_max_rescale(g)};
    }
    case Algorithm::tikhonov: {
      check_dims(s, u.values);
      const Eigen::VectorXd raw = tikhonov_ ? tikhonov_->apply(u.values) : tikhonov_solution(s, u.values, 0.0);
      return {finish_tikhonov(raw, config_)};
    }
  }
  throw ConfigError("unknown algorithm");
}

Rasterizer::Rasterizer(const DiscMesh& mesh, std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), elements_(mesh.triangle_count()), map_(rows * cols, kOutside) {
  const auto& nodes = mesh.nodes();
  const auto& tris = mesh.triangles();
  const double eps = 1e-12;
  auto col_of = [&](double x) { return ((x + 1.0) * static_cast<double>(cols) - 1.0) / 2.0; };
  auto row_of = [&](double y) { return ((1.0 - y) * static_cast<double>(rows) - 1.0) / 2.0; };

  for (std::size_t k = 0; k < tris.size(); ++k) {
    const Point& a = nodes[tris[k][0]];
    const Point& b = nodes[tris[k][1]];
    const Point& c = nodes[tris[k][2]];
    const double xmin = std::min({a.x(), b.x(), c.x()}), xmax = std::max({a.x(), b.x(), c.x()});
    const double ymin = std::min({a.y(), b.y(), c.y()}), ymax = std::max({a.y(), b.y(), c.y()});
    const auto c0 = static_cast<long>(std::max(0.0, std::floor(col_of(xmin))));
    const auto c1 = static_cast<long>(std::min(static_cast<double>(cols) - 1.0, std::ceil(col_of(xmax))));
    const auto r0 = static_cast<long>(std::max(0.0, std::floor(row_of(ymax))));
    const auto r1 = static_cast<long>(std::min(static_cast<double>(rows) - 1.0, std::ceil(row_of(ymin))));
    const double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    for (long r = r0; r <= r1; ++r) {
      for (long col = c0; col <= c1; ++col) {
        auto& slot = map_[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(col)];
        if (slot != kOutside) continue;
        const Point p = pixel_center(static_cast<std::size_t>(r), static_cast<std::size_t>(col), rows, cols);
        auto cross = [](const Point& o, const Point& u, const Point& v) {
          return (u - o).x() * (v - o).y() - (u - o).y() * (v - o).x();
        };
        const double w0 = cross(b, c, p) / area2;
        const double w1 = cross(c, a, p) / area2;
        const double w2 = cross(a, b, p) / area2;
        if (w0 >= -eps && w1 >= -eps && w2 >= -eps) slot = static_cast<std::int32_t>(k);
      }
    }
  }

  const auto centroids = element_centroids(mesh);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t col = 0; col < cols; ++col) {
      auto& slot = map_[r * cols + col];
      if (slot != kOutside) continue;
      const Point p = pixel_center(r, col, rows, cols);
      if (p.squaredNorm() > 1.0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroids.size(); ++k) {
        const double d = (centroids[k] - p).squaredNorm();
        if (d < best) {
          best = d;
          slot = static_cast<std::int32_t>(k);
        }
      }
    }
  }
}

GrayImage Rasterizer::operator()(const Eigen::VectorXd& g) const {
  if (static_cast<std::size_t>(g.size()) != elements_) {
    throw ShapeError("element image has " + std::to_string(g.size()) + " values but the mesh has " +
                     std::to_string(elements_) + " triangles");
  }
  GrayImage image(rows_, cols_);
  auto pixels = image.pixels();
  for (std::size_t i = 0; i < map_.size(); ++i) {
    if (map_[i] != kOutside) pixels[i] = g[map_[i]];
  }
  return image;
}

GrayImage rasterize(const DiscMesh& mesh, const ElementImage& g) { return Rasterizer(mesh)(g); }

}  // namespace tomo
