#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "tomo/error.hpp"
#include "tomo/mesh.hpp"

namespace {

using tomo::build_disc_mesh;
using tomo::DiscMesh;

std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use(const DiscMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> use;
  for (const auto& t : mesh.triangles()) {
    for (int i = 0; i < 3; ++i) {
      auto a = t[i], b = t[(i + 1) % 3];
      ++use[{std::min(a, b), std::max(a, b)}];
    }
  }
  return use;
}

double total_area(const DiscMesh& mesh) {
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) sum += mesh.signed_area(k);
  return sum;
}

void expect_mesh_invariants(const DiscMesh& mesh, int n_rings) {
  const auto n = static_cast<std::size_t>(n_rings);
  ASSERT_EQ(mesh.triangle_count(), 4 * n * n);
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) ASSERT_GT(mesh.signed_area(k), 0.0) << "triangle " << k;
  for (const auto& p : mesh.nodes()) ASSERT_LE(p.norm(), 1.0 + 1e-12);

  std::size_t boundary = 0;
  for (const auto& [edge, count] : edge_use(mesh)) {
    ASSERT_TRUE(count == 1 || count == 2);
    boundary += count == 1;
  }
  EXPECT_EQ(boundary, mesh.boundary_edges().size());
  EXPECT_EQ(boundary, 4 * n);
  for (const auto& e : mesh.boundary_edges()) {
    EXPECT_NEAR(mesh.nodes()[e.from].norm(), 1.0, 1e-12);
    EXPECT_NEAR(mesh.nodes()[e.to].norm(), 1.0, 1e-12);
  }
}

TEST(Mesh, DefaultHas1024Triangles) {
  const auto mesh = build_disc_mesh();
  EXPECT_EQ(mesh.triangle_count(), 1024u);
  EXPECT_EQ(mesh.n_electrodes(), 32u);
  EXPECT_EQ(mesh.node_count(), 545u);
  expect_mesh_invariants(mesh, 16);
}

TEST(Mesh, TwoRingsHave16Triangles) {
  const auto mesh = build_disc_mesh(2, 4, 0.5);
  EXPECT_EQ(mesh.triangle_count(), 16u);
  expect_mesh_invariants(mesh, 2);
}

TEST(Mesh, TriangleCountIsFourNSquared) {
  for (int n = 2; n <= 24; ++n) {
    const auto mesh = build_disc_mesh(n, 4, 0.5);
    EXPECT_EQ(mesh.triangle_count(), static_cast<std::size_t>(4 * n * n)) << "n = " << n;
  }
}

TEST(Mesh, AreaApproximatesPi) {
  const double a16 = total_area(build_disc_mesh(16, 32, 0.5));
  const double a32 = total_area(build_disc_mesh(32, 32, 0.5));
  EXPECT_LT(std::abs(a16 - std::numbers::pi) / std::numbers::pi, 0.02);
  EXPECT_LT(std::abs(a32 - std::numbers::pi), std::abs(a16 - std::numbers::pi));
}

TEST(Mesh, ElectrodeArcsAreUniformAndDisjoint) {
  for (int electrodes : {8, 32}) {
    const auto mesh = build_disc_mesh(16, electrodes, 0.5);
    ASSERT_EQ(mesh.n_electrodes(), static_cast<std::size_t>(electrodes));
    std::vector<int> owner(mesh.boundary_edges().size(), -1);
    for (std::size_t l = 0; l < mesh.n_electrodes(); ++l) {
      for (auto e : mesh.electrode_arcs()[l]) {
        EXPECT_EQ(owner[e], -1);
        owner[e] = static_cast<int>(l);
      }
    }
    const double pitch = 2.0 * std::numbers::pi / electrodes;
    for (std::size_t l = 0; l < mesh.n_electrodes(); ++l) {
      const double a = mesh.electrode_center_angle(l);
      const double b = mesh.electrode_center_angle((l + 1) % mesh.n_electrodes());
      const double gap = std::remainder(b - a, 2.0 * std::numbers::pi);
      EXPECT_NEAR(gap, pitch, 1e-9) << "electrodes " << l << ", " << l + 1;
    }
  }
}

TEST(Mesh, AdjacentArcCentresArePiOver16Apart) {
  const auto mesh = build_disc_mesh(16, 32, 0.5);
  const double gap = std::remainder(mesh.electrode_center_angle(1) - mesh.electrode_center_angle(0), 2 * std::numbers::pi);
  EXPECT_NEAR(gap, std::numbers::pi / 16, 1e-9);
}

TEST(Mesh, CoverageSelectsThatShareOfBoundaryEdges) {
  const auto mesh = build_disc_mesh(16, 8, 0.5);
  std::size_t covered = 0;
  for (const auto& arc : mesh.electrode_arcs()) covered += arc.size();
  EXPECT_EQ(covered, mesh.boundary_edges().size() / 2);

  const auto wide = build_disc_mesh(16, 8, 0.75);
  for (const auto& arc : wide.electrode_arcs()) EXPECT_EQ(arc.size(), 6u);
}

TEST(Mesh, RejectsIndivisibleElectrodeCount) {
  try {
    build_disc_mesh(16, 7, 0.5);
    FAIL() << "expected ConfigError";
  } catch (const tomo::ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("64"), std::string::npos) << what;
    EXPECT_NE(what.find("7"), std::string::npos) << what;
  }
}

TEST(Mesh, RejectsBadParameters) {
  EXPECT_THROW(build_disc_mesh(1, 4, 0.5), tomo::ConfigError);
  EXPECT_THROW(build_disc_mesh(16, 32, 0.0), tomo::ConfigError);
  EXPECT_THROW(build_disc_mesh(16, 32, 1.0), tomo::ConfigError);
  EXPECT_THROW(build_disc_mesh(16, 32, 0.1), tomo::ConfigError);  // rounds to zero edges
}

TEST(Mesh, CentroidOfUnitTriangle) {
  const DiscMesh mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {});
  const auto c = tomo::element_centroids(mesh);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0].x(), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(c[0].y(), 1.0 / 3.0);
}

TEST(Mesh, CentroidsLieInsideDisc) {
  for (const auto& c : tomo::element_centroids(build_disc_mesh())) EXPECT_LT(c.norm(), 1.0);
}

TEST(Mesh, RejectsInvertedTriangle) {
  EXPECT_THROW(DiscMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}, {}), tomo::ConfigError);
  EXPECT_THROW(DiscMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 3}}, {}), tomo::ConfigError);
}

TEST(Mesh, SymmetryStepMapsCentroidSetOntoItself) {
  const auto mesh = build_disc_mesh();
  const double step = 2.0 * std::numbers::pi / tomo::disc_mesh_symmetry_order(16);
  const auto map = tomo::rotation_element_map(mesh, step);
  ASSERT_TRUE(map.has_value());
  // Independent check: rotate every centroid and compare sorted point sets.
  auto key = [](const tomo::Point& p) { return std::make_pair(std::round(p.x() * 1e8), std::round(p.y() * 1e8)); };
  std::vector<std::pair<double, double>> original, rotated;
  const Eigen::Rotation2Dd rot(step);
  for (const auto& c : tomo::element_centroids(mesh)) {
    original.push_back(key(c));
    rotated.push_back(key(rot * c));
  }
  std::sort(original.begin(), original.end());
  std::sort(rotated.begin(), rotated.end());
  EXPECT_EQ(original, rotated);
  std::vector<std::uint32_t> sorted = *map;
  std::sort(sorted.begin(), sorted.end());
  for (std::uint32_t k = 0; k < sorted.size(); ++k) ASSERT_EQ(sorted[k], k);
}

TEST(Mesh, HalfStepIsNotASymmetry) {
  const auto mesh = build_disc_mesh();
  EXPECT_FALSE(tomo::rotation_element_map(mesh, std::numbers::pi / 32.0 / 2.0).has_value());
}

TEST(Mesh, SerializationRoundTripIsExact) {
  const auto mesh = build_disc_mesh(8, 8, 0.5);
  const auto bytes = tomo::serialize_mesh(mesh);
  ASSERT_GE(bytes.size(), 20u);
  EXPECT_EQ(static_cast<char>(bytes[0]), 'T');
  EXPECT_EQ(static_cast<char>(bytes[3]), 'H');
  EXPECT_EQ(static_cast<int>(bytes[4]), 1);  // version, little-endian
  const auto back = tomo::deserialize_mesh(bytes);
  EXPECT_EQ(tomo::serialize_mesh(back), bytes);
  EXPECT_EQ(back.triangle_count(), mesh.triangle_count());
}

TEST(Mesh, TruncatedFileIsRejected) {
  auto bytes = tomo::serialize_mesh(build_disc_mesh(4, 8, 0.5));
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(tomo::deserialize_mesh(bytes), tomo::IoError);
  bytes[0] = std::byte{'X'};
  EXPECT_THROW(tomo::deserialize_mesh(bytes), tomo::IoError);
}

// Randomised property sweep over ring and electrode counts.
TEST(MeshProperty, InvariantsHoldForRandomParameters) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 24)(rng);
    std::vector<int> divisors;
    for (int l = 2; l <= 4 * n; ++l) {
      if ((4 * n) % l == 0 && (4 * n) / l >= 2) divisors.push_back(l);
    }
    const int l = divisors[std::uniform_int_distribution<std::size_t>(0, divisors.size() - 1)(rng)];
    const auto mesh = build_disc_mesh(n, l, 0.5);
    SCOPED_TRACE("n=" + std::to_string(n) + " L=" + std::to_string(l));
    expect_mesh_invariants(mesh, n);
    EXPECT_TRUE(tomo::rotation_element_map(mesh, 2 * std::numbers::pi / tomo::disc_mesh_symmetry_order(n)).has_value());
  }
}

}  // namespace
