#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tomo {

using Point = Eigen::Vector2d;
using Triangle = std::array<std::uint32_t, 3>;

/// Directed boundary edge; the domain lies to its left.
struct Edge {
  std::uint32_t from;
  std::uint32_t to;
};

/// Triangulated domain with electrodes attached to runs of boundary edges.
///
/// Boundary edges are derived from the triangles: they are the edges owned
/// by exactly one triangle, oriented counter-clockwise and chained starting
/// at the edge whose first node has the smallest index. Electrode arcs index
/// into that list. Immutable after construction.
class DiscMesh {
 public:
  /// Throws ConfigError on out-of-range indices, non-positive triangle
  /// areas or overlapping electrode arcs.
  DiscMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
           std::vector<std::vector<std::uint32_t>> electrode_arcs);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<std::vector<std::uint32_t>>& electrode_arcs() const { return electrode_arcs_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  std::size_t n_electrodes() const { return electrode_arcs_.size(); }

  double signed_area(std::size_t triangle) const;
  Point centroid(std::size_t triangle) const;
  double edge_length(std::size_t boundary_edge) const;
  /// Polygonal length of an electrode arc.
  double electrode_length(std::size_t electrode) const;
  /// Polar angle of the arc midpoint, in [0, 2pi).
  double electrode_center_angle(std::size_t electrode) const;

 private:
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::vector<std::vector<std::uint32_t>> electrode_arcs_;
};

/// Structured unit-disc mesh with 4 * n_rings^2 triangles.
///
/// Nodes sit on concentric rings holding either 2n or 4n nodes (n = n_rings),
/// with 2n-node rings inside; the boundary ring has 4n nodes. Ring radii are
/// chosen so that every ring band holds the same area per triangle, and the
/// split between the two ring kinds minimises the largest interior angle.
/// Every ring is a multiple of 2n nodes, so the mesh maps onto itself under
/// rotation by 2pi / (2n). n = 16 gives 1024 triangles, 545 nodes and a
/// 32-fold symmetry.
///
/// Each electrode spans round(coverage * 4n / n_electrodes) consecutive
/// boundary edges centred in its angular pitch.
DiscMesh build_disc_mesh(int n_rings = 16, int n_electrodes = 32, double electrode_coverage = 0.5);

/// Order of the discrete rotational symmetry of build_disc_mesh(n_rings, ...).
inline int disc_mesh_symmetry_order(int n_rings) { return 2 * n_rings; }

std::vector<Point> element_centroids(const DiscMesh& mesh);

/// Element permutation induced by rotating the mesh about the origin.
///
/// Returns p with centroid(p[k]) == R(angle) * centroid(k) to within `tol`,
/// or nullopt when the rotation is not a symmetry of the mesh.
std::optional<std::vector<std::uint32_t>> rotation_element_map(const DiscMesh& mesh, double angle,
                                                               double tol = 1e-9);

/// Binary "TMSH" encoding (little-endian).
std::vector<std::byte> serialize_mesh(const DiscMesh& mesh);
DiscMesh deserialize_mesh(std::span<const std::byte> bytes);
void write_mesh(const DiscMesh& mesh, const std::filesystem::path& path);
DiscMesh read_mesh(const std::filesystem::path& path);

}  // namespace tomo
