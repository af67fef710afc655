#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tomo/forward.hpp"
#include "tomo/mesh.hpp"

namespace tomo {

/// Jacobian of the normalised frame with respect to element conductivity,
/// evaluated at a homogeneous background. Shape M x K.
struct SensitivityMatrix {
  Eigen::MatrixXd entries;
  double background = 1.0;
  std::string protocol_tag;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// Difference frame (reference - measured) / max|reference|.
struct NormalizedFrame {
  Eigen::VectorXd values;
  std::string reference_tag;
};

/// Builds S from one forward solve per distinct electrode pair.
///
/// With w_m the unit-current potential of measurement pair m and phi_d the
/// potential of its drive, dV_m/dsigma_k = -area_k grad(w_m) . grad(phi_d).
/// Because normalisation takes reference - measured and divides by
/// max|V_ref|, S[m, k] = area_k grad(w_m) . grad(phi_d) / max|V_ref|, so a
/// positive conductivity perturbation produces a positive normalised signal.
SensitivityMatrix compute_sensitivity(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol,
                                      unsigned threads = 1);

/// Throws ShapeError on length or protocol mismatch and DomainError when
/// the reference is identically zero.
NormalizedFrame normalize_frame(const VoltageFrame& measured, const VoltageFrame& reference);

/// Binary "TSNS" encoding (little-endian, row-major). The protocol tag is not stored.
std::vector<std::byte> serialize_sensitivity(const SensitivityMatrix& s);
SensitivityMatrix deserialize_sensitivity(std::span<const std::byte> bytes);
void write_sensitivity(const SensitivityMatrix& s, const std::filesystem::path& path);
SensitivityMatrix read_sensitivity(const std::filesystem::path& path);

/// Content hash of everything S depends on.
std::string sensitivity_cache_key(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol);

/// $TOMO_CACHE_DIR, else $XDG_CACHE_HOME/tomo, else $HOME/.cache/tomo.
std::optional<std::filesystem::path> default_cache_dir();

/// Loads S from `<cache_dir>/<key>.tsns` or computes and stores it. Cache
/// write failures are ignored; an unreadable cache entry is recomputed.
SensitivityMatrix cached_sensitivity(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol,
                                     const std::optional<std::filesystem::path>& cache_dir, unsigned threads = 1);

}  // namespace tomo
