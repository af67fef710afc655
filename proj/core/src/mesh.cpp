#include "tomo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "binary_io.hpp"
#include "tomo/error.hpp"

namespace tomo {

namespace {

constexpr std::uint32_t kMeshVersion = 1;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  return theta < 0.0 ? theta + two_pi : theta;
}

std::vector<Edge> derive_boundary(const std::vector<Triangle>& triangles) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> uses;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::map<std::uint32_t, std::uint32_t> next;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      if (uses[{std::min(a, b), std::max(a, b)}] == 1) next[a] = b;
    }
  }
  std::vector<Edge> chain;
  chain.reserve(next.size());
  while (!next.empty()) {
    auto start = next.begin()->first;
    auto at = start;
    do {
      auto it = next.find(at);
      if (it == next.end()) throw ConfigError("mesh boundary is not a closed loop");
      chain.push_back({at, it->second});
      at = it->second;
      next.erase(it);
    } while (at != start);
  }
  return chain;
}

struct RingLayout {
  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> boundary_nodes;
};

// Rings of `counts[j]` nodes; node k of ring j sits at (2k + f_j) / (2 m_j)
// turns with f_j alternating, so neighbouring rings of equal size are
// staggered by half a step.
RingLayout layout_rings(const std::vector<std::uint32_t>& counts) {
  RingLayout out;
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) total += counts[j] + (j > 0 ? counts[j - 1] : 0);

  std::vector<std::vector<std::uint32_t>> ring_nodes(counts.size());
  std::vector<std::uint32_t> offset(counts.size());
  out.nodes.emplace_back(0.0, 0.0);
  std::uint64_t cumulative = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const std::uint32_t m = counts[j];
    cumulative += m + (j > 0 ? counts[j - 1] : 0);
    const double radius = j + 1 == counts.size() ? 1.0 : std::sqrt(double(cumulative) / double(total));
    offset[j] = (j + 1) % 2;
    for (std::uint32_t k = 0; k < m; ++k) {
      const double theta = std::numbers::pi * double(2 * k + offset[j]) / double(m);
      ring_nodes[j].push_back(static_cast<std::uint32_t>(out.nodes.size()));
      out.nodes.emplace_back(radius * std::cos(theta), radius * std::sin(theta));
    }
  }

  const auto& first = ring_nodes.front();
  for (std::uint32_t k = 0; k < counts[0]; ++k) {
    out.triangles.push_back({0, first[k], first[(k + 1) % counts[0]]});
  }
  for (std::size_t j = 1; j < counts.size(); ++j) {
    const std::uint64_t mi = counts[j - 1], mo = counts[j];
    const auto& in = ring_nodes[j - 1];
    const auto& out_ring = ring_nodes[j];
    // Angles compared exactly as (2k + f) * m_other.
    auto key_in = [&](std::uint64_t k) { return (2 * k + offset[j - 1]) * mo; };
    auto key_out = [&](std::uint64_t k) { return (2 * k + offset[j]) * mi; };
    std::uint64_t i = 0, o = 0;
    for (std::uint64_t step = 0; step < mi + mo; ++step) {
      if (key_in(i + 1) <= key_out(o + 1)) {
        out.triangles.push_back({in[i % mi], out_ring[o % mo], in[(i + 1) % mi]});
        ++i;
      } else {
        out.triangles.push_back({in[i % mi], out_ring[o % mo], out_ring[(o + 1) % mo]});
        ++o;
      }
    }
  }
  out.boundary_nodes = ring_nodes.back();
  return out;
}

double max_interior_angle(const RingLayout& layout) {
  double worst = 0.0;
  for (const auto& t : layout.triangles) {
    for (int v = 0; v < 3; ++v) {
      const Point a = layout.nodes[t[(v + 1) % 3]] - layout.nodes[t[v]];
      const Point b = layout.nodes[t[(v + 2) % 3]] - layout.nodes[t[v]];
      worst = std::max(worst, std::atan2(std::abs(cross(a, b)), a.dot(b)));
    }
  }
  return worst;
}

}  // namespace

DiscMesh::DiscMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
                   std::vector<std::vector<std::uint32_t>> electrode_arcs)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), electrode_arcs_(std::move(electrode_arcs)) {
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    for (auto v : triangles_[k]) {
      if (v >= nodes_.size()) {
        throw ConfigError("triangle " + std::to_string(k) + " references node " + std::to_string(v) +
                          " but the mesh has " + std::to_string(nodes_.size()) + " nodes");
      }
    }
    if (!(signed_area(k) > 0.0)) {
      throw ConfigError("triangle " + std::to_string(k) + " has non-positive signed area");
    }
  }
  boundary_edges_ = derive_boundary(triangles_);
  std::vector<int> owner(boundary_edges_.size(), -1);
  for (std::size_t l = 0; l < electrode_arcs_.size(); ++l) {
    if (electrode_arcs_[l].empty()) throw ConfigError("electrode " + std::to_string(l) + " has no edges");
    for (auto e : electrode_arcs_[l]) {
      if (e >= boundary_edges_.size()) {
        throw ConfigError("electrode " + std::to_string(l) + " references boundary edge " + std::to_string(e) +
                          " of " + std::to_string(boundary_edges_.size()));
      }
      if (owner[e] >= 0) {
        throw ConfigError("electrodes " + std::to_string(owner[e]) + " and " + std::to_string(l) +
                          " share boundary edge " + std::to_string(e));
      }
      owner[e] = static_cast<int>(l);
    }
  }
}

double DiscMesh::signed_area(std::size_t triangle) const {
  const auto& t = triangles_.at(triangle);
  return 0.5 * cross(nodes_[t[1]] - nodes_[t[0]], nodes_[t[2]] - nodes_[t[0]]);
}

Point DiscMesh::centroid(std::size_t triangle) const {
  const auto& t = triangles_.at(triangle);
  return (nodes_[t[0]] + nodes_[t[1]] + nodes_[t[2]]) / 3.0;
}

double DiscMesh::edge_length(std::size_t boundary_edge) const {
  const auto& e = boundary_edges_.at(boundary_edge);
  return (nodes_[e.to] - nodes_[e.from]).norm();
}

double DiscMesh::electrode_length(std::size_t electrode) const {
  double len = 0.0;
  for (auto e : electrode_arcs_.at(electrode)) len += edge_length(e);
  return len;
}

double DiscMesh::electrode_center_angle(std::size_t electrode) const {
  const auto& arc = electrode_arcs_.at(electrode);
  const Point& a = nodes_[boundary_edges_[arc.front()].from];
  const Point& b = nodes_[boundary_edges_[arc.back()].to];
  const double start = std::atan2(a.y(), a.x());
  const double sweep = wrap_angle(std::atan2(b.y(), b.x()) - start);
  return wrap_angle(start + 0.5 * sweep);
}

DiscMesh build_disc_mesh(int n_rings, int n_electrodes, double electrode_coverage) {
  if (n_rings < 2) throw ConfigError("n_rings must be at least 2, got " + std::to_string(n_rings));
  if (n_electrodes < 2) throw ConfigError("need at least 2 electrodes, got " + std::to_string(n_electrodes));
  if (!(electrode_coverage > 0.0 && electrode_coverage < 1.0)) {
    throw ConfigError("electrode coverage must lie in (0, 1), got " + std::to_string(electrode_coverage));
  }
  const auto n = static_cast<std::uint32_t>(n_rings);
  const std::uint32_t boundary = 4 * n;
  if (boundary % static_cast<std::uint32_t>(n_electrodes) != 0) {
    throw ConfigError("boundary node count " + std::to_string(boundary) + " is not divisible by electrode count " +
                      std::to_string(n_electrodes));
  }
  const std::uint32_t pitch = boundary / static_cast<std::uint32_t>(n_electrodes);
  const auto covered = static_cast<std::uint32_t>(std::lround(electrode_coverage * pitch));
  if (covered < 1 || covered >= pitch) {
    throw ConfigError("electrode coverage " + std::to_string(electrode_coverage) + " leaves " +
                      std::to_string(covered) + " of " + std::to_string(pitch) +
                      " edges per electrode pitch; need at least one electrode edge and one gap edge");
  }

  // a rings of 2n nodes followed by b rings of 4n nodes, with a + 2b = n + 1,
  // gives 2 * sum(counts) - 4n = 4n^2 triangles.
  std::optional<RingLayout> best;
  double best_angle = 0.0;
  for (std::uint32_t b = 1; 2 * b <= n + 1; ++b) {
    const std::uint32_t a = n + 1 - 2 * b;
    std::vector<std::uint32_t> counts(a, 2 * n);
    counts.insert(counts.end(), b, 4 * n);
    RingLayout candidate = layout_rings(counts);
    const double angle = max_interior_angle(candidate);
    if (!best || angle < best_angle - 1e-12) {
      best = std::move(candidate);
      best_angle = angle;
    }
  }

  // Boundary edge k runs from boundary node k to k + 1 (see derive_boundary),
  // because the outer ring is the last block of node indices.
  std::vector<std::vector<std::uint32_t>> arcs(static_cast<std::size_t>(n_electrodes));
  const std::uint32_t lead = (pitch - covered) / 2;
  for (std::uint32_t l = 0; l < arcs.size(); ++l) {
    for (std::uint32_t e = 0; e < covered; ++e) arcs[l].push_back(l * pitch + lead + e);
  }
  return DiscMesh(std::move(best->nodes), std::move(best->triangles), std::move(arcs));
}

std::vector<Point> element_centroids(const DiscMesh& mesh) {
  std::vector<Point> out;
  out.reserve(mesh.triangle_count());
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) out.push_back(mesh.centroid(k));
  return out;
}

std::optional<std::vector<std::uint32_t>> rotation_element_map(const DiscMesh& mesh, double angle, double tol) {
  const auto centroids = element_centroids(mesh);
  const Eigen::Rotation2Dd rot(angle);
  // Sort by polar radius so each lookup only scans centroids at similar radius.
  std::vector<std::uint32_t> order(centroids.size());
  for (std::uint32_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return centroids[a].squaredNorm() < centroids[b].squaredNorm(); });
  std::vector<double> radii(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) radii[i] = centroids[order[i]].norm();

  std::vector<std::uint32_t> map(centroids.size());
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const Point target = rot * centroids[k];
    const double r = target.norm();
    auto lo = std::lower_bound(radii.begin(), radii.end(), r - tol);
    bool found = false;
    for (auto it = lo; it != radii.end() && *it <= r + tol; ++it) {
      const auto candidate = order[static_cast<std::size_t>(it - radii.begin())];
      if ((centroids[candidate] - target).norm() <= tol) {
        map[k] = candidate;
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
  }
  return map;
}

std::vector<std::byte> serialize_mesh(const DiscMesh& mesh) {
  detail::ByteWriter w;
  w.magic("TMSH");
  w.u32(kMeshVersion);
  w.u32(static_cast<std::uint32_t>(mesh.node_count()));
  w.u32(static_cast<std::uint32_t>(mesh.triangle_count()));
  w.u32(static_cast<std::uint32_t>(mesh.n_electrodes()));
  for (const auto& p : mesh.nodes()) {
    w.f64(p.x());
    w.f64(p.y());
  }
  for (const auto& t : mesh.triangles()) {
    for (auto v : t) w.u32(v);
  }
  for (const auto& arc : mesh.electrode_arcs()) {
    w.u32(static_cast<std::uint32_t>(arc.size()));
    for (auto e : arc) w.u32(e);
  }
  return w.bytes();
}

DiscMesh deserialize_mesh(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes, "mesh file");
  r.expect_magic("TMSH");
  if (auto version = r.u32(); version != kMeshVersion) {
    throw IoError("mesh file: unsupported version " + std::to_string(version));
  }
  const auto n_nodes = r.u32();
  const auto n_triangles = r.u32();
  const auto n_electrodes = r.u32();
  if (r.remaining() < std::size_t(n_nodes) * 16 + std::size_t(n_triangles) * 12 + std::size_t(n_electrodes) * 4) {
    throw IoError("mesh file: header counts exceed file size");
  }
  std::vector<Point> nodes(n_nodes);
  for (auto& p : nodes) {
    p.x() = r.f64();
    p.y() = r.f64();
  }
  std::vector<Triangle> triangles(n_triangles);
  for (auto& t : triangles) {
    for (auto& v : t) v = r.u32();
  }
  std::vector<std::vector<std::uint32_t>> arcs(n_electrodes);
  for (auto& arc : arcs) {
    const auto count = r.u32();
    if (r.remaining() < std::size_t(count) * 4) throw IoError("mesh file: truncated electrode arc");
    arc.resize(count);
    for (auto& e : arc) e = r.u32();
  }
  r.expect_end();
  return DiscMesh(std::move(nodes), std::move(triangles), std::move(arcs));
}

void write_mesh(const DiscMesh& mesh, const std::filesystem::path& path) {
  detail::write_file(path, serialize_mesh(mesh));
}

DiscMesh read_mesh(const std::filesystem::path& path) { return deserialize_mesh(detail::read_file(path)); }

}  // namespace tomo
