#include "tomo/sensitivity.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <system_error>
#include <thread>
#include <utility>

#include <unistd.h>

#include "binary_io.hpp"
#include "tomo/error.hpp"
#include "tomo/hash.hpp"
#include "tomo/parallel.hpp"

namespace tomo {

namespace {

constexpr std::uint32_t kSensitivityVersion = 1;

// Per-element constant gradients of a P1 potential, stored as 2 x K.
Eigen::Matrix2Xd element_gradients(const DiscMesh& mesh, const Eigen::VectorXd& phi) {
  Eigen::Matrix2Xd grad(2, static_cast<Eigen::Index>(mesh.triangle_count()));
  const auto& nodes = mesh.nodes();
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const auto& t = mesh.triangles()[k];
    const Point e1 = nodes[t[1]] - nodes[t[0]];
    const Point e2 = nodes[t[2]] - nodes[t[0]];
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    const double d1 = phi[t[1]] - phi[t[0]];
    const double d2 = phi[t[2]] - phi[t[0]];
    // Solve [e1^T; e2^T] g = [d1; d2].
    grad(0, static_cast<Eigen::Index>(k)) = (d1 * e2.y() - d2 * e1.y()) / det;
    grad(1, static_cast<Eigen::Index>(k)) = (e1.x() * d2 - e2.x() * d1) / det;
  }
  return grad;
}

}  // namespace

SensitivityMatrix compute_sensitivity(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol,
                                      unsigned threads) {
  if (!(background > 0.0) || !std::isfinite(background)) {
    throw DomainError("background conductivity must be positive, got " + std::to_string(background));
  }
  if (static_cast<std::size_t>(protocol.n_electrodes()) != mesh.n_electrodes()) {
    throw ConfigError("protocol expects " + std::to_string(protocol.n_electrodes()) + " electrodes, mesh has " +
                      std::to_string(mesh.n_electrodes()));
  }
  const auto field = ConductivityField::uniform(mesh.triangle_count(), background);
  const ForwardSolver solver(mesh, field);

  // Unit-current potentials for every electrode pair that is driven or measured.
  std::map<std::pair<int, int>, std::size_t> pair_index;
  std::vector<std::pair<int, int>> pairs;
  auto intern = [&](int a, int b) {
    auto [it, inserted] = pair_index.try_emplace({a, b}, pairs.size());
    if (inserted) pairs.emplace_back(a, b);
    return it->second;
  };
  for (std::size_t d = 0; d < protocol.drives().size(); ++d) {
    intern(protocol.drives()[d].source, protocol.drives()[d].sink);
    for (const auto& p : protocol.measurements()[d]) intern(p.a, p.b);
  }
  std::vector<Eigen::Matrix2Xd> gradients(pairs.size());
  std::vector<Eigen::VectorXd> potentials(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    potentials[i] = solver.solve(DrivePattern{pairs[i].first, pairs[i].second, 1.0}).phi;
    gradients[i] = element_gradients(mesh, potentials[i]);
  }

  // Reference frame from the same unit potentials: V = amplitude * (mean_a - mean_b).
  Eigen::VectorXd reference(static_cast<Eigen::Index>(protocol.size()));
  for (std::size_t d = 0; d < protocol.drives().size(); ++d) {
    const auto& drive = protocol.drives()[d];
    const NodalPotential phi{potentials[pair_index.at({drive.source, drive.sink})] * drive.amplitude};
    for (std::size_t j = 0; j < protocol.measurements()[d].size(); ++j) {
      const auto& p = protocol.measurements()[d][j];
      reference[static_cast<Eigen::Index>(protocol.offset(d) + j)] =
          electrode_mean(mesh, phi, p.a) - electrode_mean(mesh, phi, p.b);
    }
  }
  const double scale = reference.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw DomainError("homogeneous reference frame is identically zero");

  Eigen::VectorXd area(static_cast<Eigen::Index>(mesh.triangle_count()));
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) area[static_cast<Eigen::Index>(k)] = mesh.signed_area(k);

  SensitivityMatrix s{Eigen::MatrixXd(static_cast<Eigen::Index>(protocol.size()),
                                      static_cast<Eigen::Index>(mesh.triangle_count())),
                      background, protocol.tag()};
  parallel_for(protocol.drives().size(), threads, [&](std::size_t d) {
    const auto& drive = protocol.drives()[d];
    const auto& grad_drive = gradients[pair_index.at({drive.source, drive.sink})];
    for (std::size_t j = 0; j < protocol.measurements()[d].size(); ++j) {
      const auto& p = protocol.measurements()[d][j];
      const auto& grad_meas = gradients[pair_index.at({p.a, p.b})];
      const auto row = static_cast<Eigen::Index>(protocol.offset(d) + j);
      s.entries.row(row) =
          (drive.amplitude / scale) * (grad_drive.cwiseProduct(grad_meas).colwise().sum().transpose().cwiseProduct(area))
                                          .transpose();
    }
  });
  return s;
}

NormalizedFrame normalize_frame(const VoltageFrame& measured, const VoltageFrame& reference) {
  if (measured.values.size() != reference.values.size()) {
    throw ShapeError("measured frame has " + std::to_string(measured.values.size()) + " values, reference has " +
                     std::to_string(reference.values.size()));
  }
  if (!measured.protocol_tag.empty() && !reference.protocol_tag.empty() &&
      measured.protocol_tag != reference.protocol_tag) {
    throw ShapeError("frames come from different protocols (" + measured.protocol_tag + " vs " +
                     reference.protocol_tag + ")");
  }
  const double scale = reference.values.size() > 0 ? reference.values.cwiseAbs().maxCoeff() : 0.0;
  if (!(scale > 0.0)) throw DomainError("degenerate reference frame: all values are zero");
  return {(reference.values - measured.values) / scale, reference.protocol_tag};
}

std::vector<std::byte> serialize_sensitivity(const SensitivityMatrix& s) {
  detail::ByteWriter w;
  w.magic("TSNS");
  w.u32(kSensitivityVersion);
  w.u32(static_cast<std::uint32_t>(s.rows()));
  w.u32(static_cast<std::uint32_t>(s.cols()));
  w.f64(s.background);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) w.f64(s.entries(i, j));
  }
  return w.bytes();
}

SensitivityMatrix deserialize_sensitivity(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes, "sensitivity file");
  r.expect_magic("TSNS");
  if (auto version = r.u32(); version != kSensitivityVersion) {
    throw IoError("sensitivity file: unsupported version " + std::to_string(version));
  }
  const auto m = r.u32();
  const auto k = r.u32();
  const double background = r.f64();
  if (r.remaining() != std::size_t(m) * k * 8) {
    throw IoError("sensitivity file: size does not match " + std::to_string(m) + " x " + std::to_string(k));
  }
  SensitivityMatrix s{Eigen::MatrixXd(m, k), background, {}};
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = 0; j < k; ++j) s.entries(i, j) = r.f64();
  }
  return s;
}

void write_sensitivity(const SensitivityMatrix& s, const std::filesystem::path& path) {
  detail::write_file(path, serialize_sensitivity(s));
}

SensitivityMatrix read_sensitivity(const std::filesystem::path& path) {
  return deserialize_sensitivity(detail::read_file(path));
}

std::string sensitivity_cache_key(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol) {
  Sha256 h;
  h.update("tsns/v1\n");
  h.update(serialize_mesh(mesh));
  h.update_f64(background);
  h.update_u64(static_cast<std::uint64_t>(protocol.n_electrodes()));
  for (std::size_t d = 0; d < protocol.drives().size(); ++d) {
    const auto& drive = protocol.drives()[d];
    h.update_u64(static_cast<std::uint64_t>(drive.source));
    h.update_u64(static_cast<std::uint64_t>(drive.sink));
    h.update_f64(drive.amplitude);
    h.update_u64(protocol.measurements()[d].size());
    for (const auto& p : protocol.measurements()[d]) {
      h.update_u64(static_cast<std::uint64_t>(p.a));
      h.update_u64(static_cast<std::uint64_t>(p.b));
    }
  }
  return h.hex_digest();
}

std::optional<std::filesystem::path> default_cache_dir() {
  if (const char* dir = std::getenv("TOMO_CACHE_DIR"); dir != nullptr && *dir != '\0') return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0') {
    return std::filesystem::path(xdg) / "tomo";
  }
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return std::filesystem::path(home) / ".cache" / "tomo";
  }
  return std::nullopt;
}

SensitivityMatrix cached_sensitivity(const DiscMesh& mesh, double background, const MeasurementProtocol& protocol,
                                     const std::optional<std::filesystem::path>& cache_dir, unsigned threads) {
  if (!cache_dir) return compute_sensitivity(mesh, background, protocol, threads);
  const auto path = *cache_dir / (sensitivity_cache_key(mesh, background, protocol) + ".tsns");
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      auto s = read_sensitivity(path);
      if (s.rows() == static_cast<Eigen::Index>(protocol.size()) &&
          s.cols() == static_cast<Eigen::Index>(mesh.triangle_count()) && s.background == background) {
        s.protocol_tag = protocol.tag();
        return s;
      }
    } catch (const IoError&) {
      // corrupt entry; recompute below
    }
  }
  auto s = compute_sensitivity(mesh, background, protocol, threads);
  std::filesystem::create_directories(*cache_dir, ec);
  if (!ec) {
    // Write to a unique temporary name, then rename, so concurrent writers never expose partial files.
    const auto tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                     std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    try {
      write_sensitivity(s, tmp);
      std::filesystem::rename(tmp, path, ec);
    } catch (const IoError&) {
    }
    std::filesystem::remove(tmp, ec);
  }
  return s;
}

}  // namespace tomo
