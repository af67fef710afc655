#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tomo/error.hpp"
#include "tomo/forward.hpp"

namespace {

using tomo::ConductivityField;
using tomo::MeasurementProtocol;

const tomo::DiscMesh& default_mesh() {
  static const auto mesh = tomo::build_disc_mesh();
  return mesh;
}

ConductivityField random_field(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.5, 3.0);
  ConductivityField f;
  for (std::size_t i = 0; i < k; ++i) f.sigma.push_back(d(rng));
  return f;
}

TEST(Forward, LocalStiffnessOfReferenceTriangle) {
  const Eigen::Matrix3d k = tomo::local_stiffness({0, 0}, {1, 0}, {0, 1});
  Eigen::Matrix3d expected;
  expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  EXPECT_LE((k - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Forward, AssembledMatrixIsSymmetricWithZeroRowSums) {
  const auto& mesh = default_mesh();
  const Eigen::MatrixXd k(tomo::assemble_system(mesh, random_field(mesh.triangle_count(), 1)));
  EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(k.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, DoublingSigmaDoublesEveryEntry) {
  const auto& mesh = default_mesh();
  const Eigen::MatrixXd a(tomo::assemble_system(mesh, ConductivityField::uniform(mesh.triangle_count(), 1.0)));
  const Eigen::MatrixXd b(tomo::assemble_system(mesh, ConductivityField::uniform(mesh.triangle_count(), 2.0)));
  EXPECT_LE((b - 2.0 * a).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Forward, NonPositiveSigmaNamesTheElement) {
  const auto& mesh = default_mesh();
  auto field = ConductivityField::uniform(mesh.triangle_count(), 1.0);
  field.sigma[417] = 0.0;
  try {
    tomo::assemble_system(mesh, field);
    FAIL() << "expected DomainError";
  } catch (const tomo::DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("417"), std::string::npos) << e.what();
  }
  field.sigma.pop_back();
  EXPECT_THROW(tomo::assemble_system(mesh, field), tomo::ShapeError);
}

// Two triangles forming the unit square; point current +1 at node 0 and -1
// at node 2. Edge conductances are 1/2 on the four sides and 0 on the
// diagonal, so the network is two parallel 4-ohm paths: phi = (1, 0, -1, 0).
TEST(Forward, SquarePatchMatchesResistorNetwork) {
  const tomo::DiscMesh square({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}, {});
  const tomo::ForwardSolver solver(square, ConductivityField::uniform(2, 1.0));
  Eigen::VectorXd load(4);
  load << 1, 0, -1, 0;
  const auto phi = solver.solve(load).phi;
  EXPECT_NEAR(phi[0], 1.0, 1e-12);
  EXPECT_NEAR(phi[1], 0.0, 1e-12);
  EXPECT_NEAR(phi[2], -1.0, 1e-12);
  EXPECT_NEAR(phi[3], 0.0, 1e-12);
}

TEST(Forward, SolutionHasZeroMeanSmallResidualAndBalancedLoad) {
  const auto& mesh = default_mesh();
  const auto field = random_field(mesh.triangle_count(), 2);
  const tomo::ForwardSolver solver(mesh, field);
  for (int s = 0; s < 32; s += 5) {
    const tomo::DrivePattern drive{s, (s + 1) % 32, 1.0};
    const Eigen::VectorXd load = tomo::drive_load(mesh, drive);
    EXPECT_LE(std::abs(load.sum()), 1e-14);
    const auto phi = solver.solve(load);
    EXPECT_LE(std::abs(phi.phi.mean()), 1e-10);
    EXPECT_LE(solver.relative_residual(phi, load), 1e-10);
  }
}

TEST(Forward, OppositeDriveIsAntisymmetricUnderHalfTurn) {
  const auto& mesh = default_mesh();
  const auto phi = tomo::solve_forward(mesh, ConductivityField::uniform(mesh.triangle_count(), 1.0), {0, 16, 1.0}).phi;
  const auto& nodes = mesh.nodes();
  double worst = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const tomo::Point target = -nodes[i];
    std::size_t match = nodes.size();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if ((nodes[j] - target).norm() < 1e-9) match = j;
    }
    ASSERT_LT(match, nodes.size()) << "node " << i << " has no half-turn image";
    worst = std::max(worst, std::abs(phi[i] + phi[match]));
  }
  EXPECT_LE(worst, 1e-8 * phi.cwiseAbs().maxCoeff());
}

TEST(Forward, ScalingSigmaScalesPotentialInversely) {
  const auto& mesh = default_mesh();
  auto field = random_field(mesh.triangle_count(), 3);
  const auto a = tomo::solve_forward(mesh, field, {3, 4, 1.0}).phi;
  for (auto& s : field.sigma) s *= 4.0;
  const auto b = tomo::solve_forward(mesh, field, {3, 4, 1.0}).phi;
  EXPECT_LE((a - 4.0 * b).cwiseAbs().maxCoeff(), 1e-10 * a.cwiseAbs().maxCoeff());
}

TEST(Forward, ProtocolSizes) {
  EXPECT_EQ(MeasurementProtocol::adjacent(8).size(), 40u);
  EXPECT_EQ(MeasurementProtocol::adjacent(32).size(), 928u);
  EXPECT_EQ(MeasurementProtocol::opposite(8).size(), 32u);
  EXPECT_EQ(MeasurementProtocol::opposite(32).size(), 896u);
}

TEST(Forward, MeasurementsAvoidDrivenElectrodes) {
  for (const auto& p : {MeasurementProtocol::adjacent(8), MeasurementProtocol::opposite(32)}) {
    for (std::size_t d = 0; d < p.drives().size(); ++d) {
      const auto& drive = p.drives()[d];
      for (const auto& pair : p.measurements()[d]) {
        EXPECT_NE(pair.a, drive.source);
        EXPECT_NE(pair.a, drive.sink);
        EXPECT_NE(pair.b, drive.source);
        EXPECT_NE(pair.b, drive.sink);
      }
    }
  }
}

TEST(Forward, ProtocolRejectsMeasuringOnDrivenElectrode) {
  EXPECT_THROW(MeasurementProtocol(8, {{0, 1, 1.0}}, {{{1, 2}}}, "bad"), tomo::ConfigError);
  EXPECT_THROW(MeasurementProtocol(8, {{0, 0, 1.0}}, {{{2, 3}}}, "bad"), tomo::ConfigError);
}

TEST(Forward, ReciprocityOnRandomField) {
  const auto& mesh = default_mesh();
  const auto protocol = MeasurementProtocol::adjacent(32);
  const auto frame = tomo::simulate_frame(mesh, random_field(mesh.triangle_count(), 4), protocol);
  std::size_t pairs = 0;
  for (std::size_t m = 0; m < protocol.size(); ++m) {
    const auto r = protocol.reciprocal(m);
    if (!r) continue;
    ++pairs;
    const double a = frame.values[m], b = frame.values[*r];
    EXPECT_LE(std::abs(a - b), 1e-8 * std::max(std::abs(a), std::abs(b))) << "measurement " << m;
  }
  EXPECT_EQ(pairs, protocol.size());
}

TEST(Forward, FrameIsLinearInAmplitude) {
  const auto& mesh = default_mesh();
  const auto field = random_field(mesh.triangle_count(), 5);
  const auto a = tomo::simulate_frame(mesh, field, MeasurementProtocol::adjacent(32, 1.0)).values;
  const auto b = tomo::simulate_frame(mesh, field, MeasurementProtocol::adjacent(32, 2.5)).values;
  EXPECT_LE((b - 2.5 * a).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
}

TEST(Forward, HomogeneousFrameIsInvariantUnderElectrodeRotation) {
  for (int electrodes : {8, 32}) {
    const auto mesh = tomo::build_disc_mesh(16, electrodes, 0.5);
    const auto protocol = MeasurementProtocol::adjacent(electrodes);
    const auto frame = tomo::simulate_frame(mesh, ConductivityField::uniform(mesh.triangle_count(), 1.0), protocol);
    const std::size_t per = protocol.measurements()[0].size();
    for (std::size_t d = 0; d < protocol.drives().size(); ++d) {
      const std::size_t next = (d + 1) % protocol.drives().size();
      for (std::size_t j = 0; j < per; ++j) {
        const double a = frame.values[protocol.offset(d) + j], b = frame.values[protocol.offset(next) + j];
        EXPECT_LE(std::abs(a - b), 1e-6 * std::abs(a));
      }
    }
  }
}

TEST(Forward, ConductiveInclusionLowersBoundaryVoltages) {
  const auto& mesh = default_mesh();
  const auto protocol = MeasurementProtocol::adjacent(32);
  auto field = ConductivityField::uniform(mesh.triangle_count(), 1.0);
  const auto before = tomo::simulate_frame(mesh, field, protocol).values;
  const auto centroids = tomo::element_centroids(mesh);
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if ((centroids[k] - tomo::Point(0.6, 0.0)).norm() < 0.25) field.sigma[k] = 2.5;
  }
  const auto after = tomo::simulate_frame(mesh, field, protocol).values;
  EXPECT_LT(after.cwiseAbs().sum(), before.cwiseAbs().sum());
}

TEST(Forward, SimulateRejectsMismatchedElectrodeCount) {
  const auto mesh = tomo::build_disc_mesh(16, 8, 0.5);
  EXPECT_THROW(tomo::simulate_frame(mesh, ConductivityField::uniform(mesh.triangle_count(), 1.0),
                                    MeasurementProtocol::adjacent(32)),
               tomo::ConfigError);
}

TEST(Forward, FrameFileRoundTrip) {
  tomo::VoltageFrame frame{oracle::random_vector(40, 1), "adjacent/8"};
  const auto bytes = tomo::serialize_frame(frame);
  EXPECT_EQ(bytes.size(), 4u + 4u + 4u + 40u * 8u);
  EXPECT_EQ(static_cast<char>(bytes[0]), 'T');
  EXPECT_EQ(static_cast<char>(bytes[1]), 'F');
  const auto back = tomo::deserialize_frame(bytes);
  EXPECT_EQ(back.values, frame.values);
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(tomo::deserialize_frame(cut), tomo::IoError);
}

}  // namespace
