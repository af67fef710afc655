#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tomo/mesh.hpp"

namespace tomo {

/// Per-element conductivity (normalised, strictly positive).
struct ConductivityField {
  std::vector<double> sigma;

  static ConductivityField uniform(std::size_t elements, double value) {
    return {std::vector<double>(elements, value)};
  }
};

/// Current injected at `source` and extracted at `sink`.
struct DrivePattern {
  int source = 0;
  int sink = 1;
  double amplitude = 1.0;
};

/// Differential voltage mean(a) - mean(b).
struct ElectrodePair {
  int a = 0;
  int b = 1;

  friend bool operator==(const ElectrodePair&, const ElectrodePair&) = default;
};

enum class DriveScheme { adjacent, opposite };

/// Drives and, for each drive, the measured electrode pairs.
///
/// Measurement values are stacked drive-major. Pairs touching the current
/// carrying electrodes of their drive are never measured.
class MeasurementProtocol {
 public:
  MeasurementProtocol(int n_electrodes, std::vector<DrivePattern> drives,
                      std::vector<std::vector<ElectrodePair>> measurements, std::string tag);

  /// Drive (d, d+1) for every d; measure (a, a+1) for a = d+2 .. d+L-2.
  /// M = L(L-3).
  static MeasurementProtocol adjacent(int n_electrodes, double amplitude = 1.0);
  /// Drive (d, d+L/2) for every d; measure every adjacent pair that avoids
  /// both driven electrodes. M = L(L-4). Requires even L.
  static MeasurementProtocol opposite(int n_electrodes, double amplitude = 1.0);
  static MeasurementProtocol make(DriveScheme scheme, int n_electrodes, double amplitude = 1.0);

  int n_electrodes() const { return n_electrodes_; }
  const std::vector<DrivePattern>& drives() const { return drives_; }
  const std::vector<std::vector<ElectrodePair>>& measurements() const { return measurements_; }
  const std::string& tag() const { return tag_; }

  /// Total measurement count M.
  std::size_t size() const { return size_; }
  /// Offset of the first measurement of drive d in the stacked frame.
  std::size_t offset(std::size_t drive) const { return offsets_.at(drive); }

  /// Index of the measurement that swaps the roles of drive and measured
  /// pair of measurement m, if the protocol contains it.
  std::optional<std::size_t> reciprocal(std::size_t m) const;

 private:
  int n_electrodes_;
  std::vector<DrivePattern> drives_;
  std::vector<std::vector<ElectrodePair>> measurements_;
  std::string tag_;
  std::vector<std::size_t> offsets_;
  std::size_t size_ = 0;
};

struct NodalPotential {
  Eigen::VectorXd phi;
};

struct VoltageFrame {
  Eigen::VectorXd values;
  std::string protocol_tag;
};

/// P1 stiffness of one triangle with unit conductivity.
Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2);

/// Global stiffness sum_k sigma_k K_k. Symmetric with zero row sums.
/// Throws DomainError naming the first element with sigma <= 0.
Eigen::SparseMatrix<double> assemble_system(const DiscMesh& mesh, const ConductivityField& field);

/// Neumann load for a drive: uniform current density amplitude/|arc| on the
/// source arc, the negative on the sink arc, integrated against the P1 basis.
Eigen::VectorXd drive_load(const DiscMesh& mesh, const DrivePattern& drive);

/// Length-weighted mean of the potential over an electrode arc.
double electrode_mean(const DiscMesh& mesh, const NodalPotential& potential, int electrode);

/// Factorised forward operator for one conductivity field.
///
/// The pure-Neumann problem is closed with a Lagrange multiplier enforcing a
/// zero node mean, and the bordered system is factorised once; any number of
/// loads can then be solved. Not safe for concurrent use of one instance.
class ForwardSolver {
 public:
  ForwardSolver(const DiscMesh& mesh, const ConductivityField& field);
  ~ForwardSolver();
  ForwardSolver(ForwardSolver&&) noexcept;
  ForwardSolver& operator=(ForwardSolver&&) noexcept;

  /// Solves K phi = load with sum(phi) = 0. The load must sum to zero.
  NodalPotential solve(const Eigen::VectorXd& load) const;
  NodalPotential solve(const DrivePattern& drive) const;

  /// ||K phi - load|| / ||load|| of a computed potential.
  double relative_residual(const NodalPotential& potential, const Eigen::VectorXd& load) const;

  const DiscMesh& mesh() const { return *mesh_; }
  const Eigen::SparseMatrix<double>& stiffness() const;

 private:
  struct Impl;
  const DiscMesh* mesh_;
  std::unique_ptr<Impl> impl_;
};

NodalPotential solve_forward(const DiscMesh& mesh, const ConductivityField& field, const DrivePattern& drive);

/// Boundary voltages of every (drive, pair) in protocol order.
VoltageFrame simulate_frame(const DiscMesh& mesh, const ConductivityField& field,
                            const MeasurementProtocol& protocol);

/// Binary "TFRM" encoding (little-endian). The protocol tag is not stored.
std::vector<std::byte> serialize_frame(const VoltageFrame& frame);
VoltageFrame deserialize_frame(std::span<const std::byte> bytes);
void write_frame(const VoltageFrame& frame, const std::filesystem::path& path);
VoltageFrame read_frame(const std::filesystem::path& path);

}  // namespace tomo
