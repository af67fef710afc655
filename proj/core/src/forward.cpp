#include "tomo/forward.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/SparseLU>

#include "binary_io.hpp"
#include "tomo/error.hpp"

namespace tomo {

namespace {

constexpr std::uint32_t kFrameVersion = 1;

int wrap(int electrode, int n) { return ((electrode % n) + n) % n; }

}  // namespace

MeasurementProtocol::MeasurementProtocol(int n_electrodes, std::vector<DrivePattern> drives,
                                         std::vector<std::vector<ElectrodePair>> measurements, std::string tag)
    : n_electrodes_(n_electrodes),
      drives_(std::move(drives)),
      measurements_(std::move(measurements)),
      tag_(std::move(tag)) {
  if (n_electrodes_ < 2) throw ConfigError("protocol needs at least 2 electrodes");
  if (drives_.size() != measurements_.size()) {
    throw ConfigError("protocol has " + std::to_string(drives_.size()) + " drives but " +
                      std::to_string(measurements_.size()) + " measurement lists");
  }
  auto in_range = [&](int e) { return e >= 0 && e < n_electrodes_; };
  for (std::size_t d = 0; d < drives_.size(); ++d) {
    const auto& drive = drives_[d];
    if (!in_range(drive.source) || !in_range(drive.sink) || drive.source == drive.sink) {
      throw ConfigError("drive " + std::to_string(d) + " has invalid electrodes (" + std::to_string(drive.source) +
                        ", " + std::to_string(drive.sink) + ")");
    }
    if (!(drive.amplitude > 0.0)) throw ConfigError("drive " + std::to_string(d) + " amplitude must be positive");
    for (const auto& pair : measurements_[d]) {
      if (!in_range(pair.a) || !in_range(pair.b) || pair.a == pair.b) {
        throw ConfigError("drive " + std::to_string(d) + " measures an invalid pair");
      }
      for (int e : {pair.a, pair.b}) {
        if (e == drive.source || e == drive.sink) {
          throw ConfigError("drive " + std::to_string(d) + " measures on driven electrode " + std::to_string(e));
        }
      }
    }
    offsets_.push_back(size_);
    size_ += measurements_[d].size();
  }
}

MeasurementProtocol MeasurementProtocol::adjacent(int n_electrodes, double amplitude) {
  if (n_electrodes < 4) throw ConfigError("adjacent protocol needs at least 4 electrodes");
  std::vector<DrivePattern> drives;
  std::vector<std::vector<ElectrodePair>> measurements;
  for (int d = 0; d < n_electrodes; ++d) {
    drives.push_back({d, wrap(d + 1, n_electrodes), amplitude});
    auto& pairs = measurements.emplace_back();
    for (int a = d + 2; a <= d + n_electrodes - 2; ++a) {
      pairs.push_back({wrap(a, n_electrodes), wrap(a + 1, n_electrodes)});
    }
  }
  return {n_electrodes, std::move(drives), std::move(measurements), "adjacent/" + std::to_string(n_electrodes)};
}

MeasurementProtocol MeasurementProtocol::opposite(int n_electrodes, double amplitude) {
  if (n_electrodes < 6 || n_electrodes % 2 != 0) {
    throw ConfigError("opposite protocol needs an even electrode count of at least 6");
  }
  const int half = n_electrodes / 2;
  std::vector<DrivePattern> drives;
  std::vector<std::vector<ElectrodePair>> measurements;
  for (int d = 0; d < n_electrodes; ++d) {
    const int sink = wrap(d + half, n_electrodes);
    drives.push_back({d, sink, amplitude});
    auto& pairs = measurements.emplace_back();
    for (int a = d + 1; a < d + n_electrodes; ++a) {
      const int ea = wrap(a, n_electrodes), eb = wrap(a + 1, n_electrodes);
      if (ea == sink || eb == sink || eb == d) continue;
      pairs.push_back({ea, eb});
    }
  }
  return {n_electrodes, std::move(drives), std::move(measurements), "opposite/" + std::to_string(n_electrodes)};
}

MeasurementProtocol MeasurementProtocol::make(DriveScheme scheme, int n_electrodes, double amplitude) {
  return scheme == DriveScheme::adjacent ? adjacent(n_electrodes, amplitude) : opposite(n_electrodes, amplitude);
}

std::optional<std::size_t> MeasurementProtocol::reciprocal(std::size_t m) const {
  std::size_t d = 0;
  while (d + 1 < offsets_.size() && offsets_[d + 1] <= m) ++d;
  if (m >= size_) return std::nullopt;
  const auto& drive = drives_[d];
  const auto& pair = measurements_[d][m - offsets_[d]];
  for (std::size_t r = 0; r < drives_.size(); ++r) {
    if (drives_[r].source != pair.a || drives_[r].sink != pair.b) continue;
    for (std::size_t j = 0; j < measurements_[r].size(); ++j) {
      if (measurements_[r][j] == ElectrodePair{drive.source, drive.sink}) return offsets_[r] + j;
    }
  }
  return std::nullopt;
}

Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2) {
  // grad(phi_i) = rot90(opposite edge) / (2A)
  const std::array<Point, 3> edge = {p2 - p1, p0 - p2, p1 - p0};
  const double area2 = edge[2].x() * (-edge[1].y()) - edge[2].y() * (-edge[1].x());
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k(i, j) = edge[i].dot(edge[j]) / (2.0 * area2);
  }
  return k;
}

Eigen::SparseMatrix<double> assemble_system(const DiscMesh& mesh, const ConductivityField& field) {
  if (field.sigma.size() != mesh.triangle_count()) {
    throw ShapeError("conductivity field has " + std::to_string(field.sigma.size()) + " values for " +
                     std::to_string(mesh.triangle_count()) + " elements");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(9 * mesh.triangle_count());
  const auto& nodes = mesh.nodes();
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const double sigma = field.sigma[k];
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("element " + std::to_string(k) + " has non-positive conductivity " + std::to_string(sigma));
    }
    const auto& t = mesh.triangles()[k];
    const Eigen::Matrix3d local = local_stiffness(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) entries.emplace_back(t[i], t[j], sigma * local(i, j));
    }
  }
  Eigen::SparseMatrix<double> k(static_cast<Eigen::Index>(mesh.node_count()),
                                static_cast<Eigen::Index>(mesh.node_count()));
  k.setFromTriplets(entries.begin(), entries.end());
  return k;
}

Eigen::VectorXd drive_load(const DiscMesh& mesh, const DrivePattern& drive) {
  const auto n_el = static_cast<int>(mesh.n_electrodes());
  if (drive.source < 0 || drive.source >= n_el || drive.sink < 0 || drive.sink >= n_el ||
      drive.source == drive.sink) {
    throw ConfigError("drive electrodes (" + std::to_string(drive.source) + ", " + std::to_string(drive.sink) +
                      ") invalid for a mesh with " + std::to_string(n_el) + " electrodes");
  }
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  auto inject = [&](int electrode, double current) {
    const double density = current / mesh.electrode_length(static_cast<std::size_t>(electrode));
    for (auto e : mesh.electrode_arcs()[static_cast<std::size_t>(electrode)]) {
      const double half = 0.5 * density * mesh.edge_length(e);
      load[mesh.boundary_edges()[e].from] += half;
      load[mesh.boundary_edges()[e].to] += half;
    }
  };
  inject(drive.source, drive.amplitude);
  inject(drive.sink, -drive.amplitude);
  return load;
}

double electrode_mean(const DiscMesh& mesh, const NodalPotential& potential, int electrode) {
  double integral = 0.0;
  for (auto e : mesh.electrode_arcs().at(static_cast<std::size_t>(electrode))) {
    const auto& edge = mesh.boundary_edges()[e];
    integral += 0.5 * mesh.edge_length(e) * (potential.phi[edge.from] + potential.phi[edge.to]);
  }
  return integral / mesh.electrode_length(static_cast<std::size_t>(electrode));
}

struct ForwardSolver::Impl {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

ForwardSolver::ForwardSolver(const DiscMesh& mesh, const ConductivityField& field)
    : mesh_(&mesh), impl_(std::make_unique<Impl>()) {
  impl_->stiffness = assemble_system(mesh, field);
  const auto n = impl_->stiffness.rows();

  // [K 1; 1^T 0]
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(impl_->stiffness.nonZeros() + 2 * n));
  for (int col = 0; col < impl_->stiffness.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(impl_->stiffness, col); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    entries.emplace_back(i, n, 1.0);
    entries.emplace_back(n, i, 1.0);
  }
  Eigen::SparseMatrix<double> bordered(n + 1, n + 1);
  bordered.setFromTriplets(entries.begin(), entries.end());
  bordered.makeCompressed();

  impl_->lu.compute(bordered);
  if (impl_->lu.info() != Eigen::Success) {
    throw SolverError("forward system factorisation failed (" + impl_->lu.lastErrorMessage() + "); " +
                      std::to_string(n) + " nodes, |log det| = " + std::to_string(impl_->lu.logAbsDeterminant()));
  }
}

ForwardSolver::~ForwardSolver() = default;
ForwardSolver::ForwardSolver(ForwardSolver&&) noexcept = default;
ForwardSolver& ForwardSolver::operator=(ForwardSolver&&) noexcept = default;

const Eigen::SparseMatrix<double>& ForwardSolver::stiffness() const { return impl_->stiffness; }

NodalPotential ForwardSolver::solve(const Eigen::VectorXd& load) const {
  const auto n = impl_->stiffness.rows();
  if (load.size() != n) {
    throw ShapeError("load has " + std::to_string(load.size()) + " entries for " + std::to_string(n) + " nodes");
  }
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = load;
  rhs[n] = 0.0;
  const Eigen::VectorXd x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite()) {
    throw SolverError("forward solve failed: " + impl_->lu.lastErrorMessage());
  }
  NodalPotential out{x.head(n)};
  const double residual = relative_residual(out, load);
  if (residual > 1e-8) {
    throw SolverError("forward solve inaccurate: relative residual " + std::to_string(residual) +
                      " (system likely ill-conditioned)");
  }
  return out;
}

NodalPotential ForwardSolver::solve(const DrivePattern& drive) const { return solve(drive_load(*mesh_, drive)); }

double ForwardSolver::relative_residual(const NodalPotential& potential, const Eigen::VectorXd& load) const {
  const double scale = load.norm();
  const double r = (impl_->stiffness * potential.phi - load).norm();
  return scale > 0.0 ? r / scale : r;
}

NodalPotential solve_forward(const DiscMesh& mesh, const ConductivityField& field, const DrivePattern& drive) {
  return ForwardSolver(mesh, field).solve(drive);
}

VoltageFrame simulate_frame(const DiscMesh& mesh, const ConductivityField& field,
                            const MeasurementProtocol& protocol) {
  if (static_cast<std::size_t>(protocol.n_electrodes()) != mesh.n_electrodes()) {
    throw ConfigError("protocol expects " + std::to_string(protocol.n_electrodes()) + " electrodes, mesh has " +
                      std::to_string(mesh.n_electrodes()));
  }
  const ForwardSolver solver(mesh, field);
  VoltageFrame frame{Eigen::VectorXd(static_cast<Eigen::Index>(protocol.size())), protocol.tag()};
  for (std::size_t d = 0; d < protocol.drives().size(); ++d) {
    const NodalPotential phi = solver.solve(protocol.drives()[d]);
    const auto& pairs = protocol.measurements()[d];
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      frame.values[static_cast<Eigen::Index>(protocol.offset(d) + j)] =
          electrode_mean(mesh, phi, pairs[j].a) - electrode_mean(mesh, phi, pairs[j].b);
    }
  }
  return frame;
}

std::vector<std::byte> serialize_frame(const VoltageFrame& frame) {
  detail::ByteWriter w;
  w.magic("TFRM");
  w.u32(kFrameVersion);
  w.u32(static_cast<std::uint32_t>(frame.values.size()));
  for (Eigen::Index i = 0; i < frame.values.size(); ++i) w.f64(frame.values[i]);
  return w.bytes();
}

VoltageFrame deserialize_frame(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes, "frame file");
  r.expect_magic("TFRM");
  if (auto version = r.u32(); version != kFrameVersion) {
    throw IoError("frame file: unsupported version " + std::to_string(version));
  }
  const auto m = r.u32();
  if (r.remaining() != std::size_t(m) * 8) throw IoError("frame file: size does not match M = " + std::to_string(m));
  VoltageFrame frame{Eigen::VectorXd(m), {}};
  for (std::uint32_t i = 0; i < m; ++i) frame.values[i] = r.f64();
  return frame;
}

void write_frame(const VoltageFrame& frame, const std::filesystem::path& path) {
  detail::write_file(path, serialize_frame(frame));
}

VoltageFrame read_frame(const std::filesystem::path& path) { return deserialize_frame(detail::read_file(path)); }

}  // namespace tomo
