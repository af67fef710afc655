// Acceptance suite: one PASS/FAIL line per primary criterion.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "oracles.hpp"
#include "tomo/dataset.hpp"
#include "tomo/metrics.hpp"
#include "tomo/recon.hpp"
#include "tomo/sensitivity.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

struct Fixture {
  tomo::DiscMesh mesh = tomo::build_disc_mesh(16, 32, 0.5);
  tomo::MeasurementProtocol protocol = tomo::MeasurementProtocol::adjacent(32);
};

Outcome reciprocity(const Fixture& f) {
  const auto start = Clock::now();
  const auto field = tomo::ConductivityField::uniform(f.mesh.triangle_count(), 1.0);
  const auto frame = tomo::simulate_frame(f.mesh, field, f.protocol);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t m = 0; m < f.protocol.size(); ++m) {
    if (const auto r = f.protocol.reciprocal(m)) {
      worst = std::max(worst, rel_diff(frame.values[m], frame.values[*r]));
      ++pairs;
    }
  }
  const double elapsed = seconds_since(start);
  return {pairs > 0 && worst <= 1e-8 && elapsed < 60.0,
          std::to_string(pairs) + " pairs, max rel diff " + fmt(worst) + " (tol 1e-8), " + fmt(elapsed) + " s"};
}

Outcome rotation(const Fixture& f) {
  const auto field = tomo::ConductivityField::uniform(f.mesh.triangle_count(), 1.0);
  const auto frame = tomo::simulate_frame(f.mesh, field, f.protocol);
  const std::size_t drives = f.protocol.drives().size();
  double worst = 0.0;
  for (std::size_t d = 0; d < drives; ++d) {
    const std::size_t next = (d + 1) % drives;
    const std::size_t per = f.protocol.measurements()[d].size();
    for (std::size_t j = 0; j < per; ++j) {
      worst = std::max(worst, rel_diff(frame.values[f.protocol.offset(d) + j], frame.values[f.protocol.offset(next) + j]));
    }
  }
  return {worst <= 1e-6, "max rel diff " + fmt(worst) + " (tol 1e-6)"};
}

Outcome sensitivity_oracle(const Fixture& f) {
  const auto s = tomo::compute_sensitivity(f.mesh, 1.0, f.protocol);
  const double cutoff = 1e-3 * s.entries.cwiseAbs().maxCoeff();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick_element(0, f.mesh.triangle_count() - 1);
  std::size_t samples = 0;
  double worst = 0.0;
  while (samples < 60) {
    const std::size_t k = pick_element(rng);
    const Eigen::VectorXd fd = oracle::perturbation_column(f.mesh, 1.0, f.protocol, k, 0.01);
    std::vector<Eigen::Index> eligible;
    for (Eigen::Index m = 0; m < s.rows(); ++m) {
      if (std::abs(s.entries(m, static_cast<Eigen::Index>(k))) >= cutoff) eligible.push_back(m);
    }
    if (eligible.empty()) continue;
    const auto m = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
    const double exact = s.entries(m, static_cast<Eigen::Index>(k));
    worst = std::max(worst, std::abs(exact - fd[m]) / std::abs(exact));
    ++samples;
  }
  return {worst <= 1e-2, std::to_string(samples) + " (row, element) samples, max rel err " + fmt(worst) + " (tol 1e-2)"};
}

Outcome landweber(const Fixture& f) {
  // Monotone residual on the full problem with a phantom frame.
  const auto s = tomo::compute_sensitivity(f.mesh, 1.0, f.protocol);
  const auto ref = tomo::simulate_frame(f.mesh, tomo::ConductivityField::uniform(f.mesh.triangle_count(), 1.0), f.protocol);
  const auto spec = tomo::sample_phantom(11);
  const auto u = tomo::normalize_frame(tomo::simulate_frame(f.mesh, tomo::phantom_to_sigma(f.mesh, spec), f.protocol), ref);
  std::vector<double> residuals;
  const double alpha = tomo::max_step_size(s.entries);
  tomo::landweber_solution(s.entries, u.values, 200, alpha, &residuals);
  double worst_increase = 0.0;
  for (std::size_t k = 1; k < residuals.size(); ++k) worst_increase = std::max(worst_increase, residuals[k] - residuals[k - 1]);
  const double bound = alpha * oracle::largest_eigenvalue_sts(s.entries);

  // Convergence to the minimum-norm solution on a consistent 10x20 system.
  const Eigen::MatrixXd a = oracle::random_matrix(10, 20, 7);
  const Eigen::VectorXd b = a * oracle::random_vector(20, 8);
  const Eigen::VectorXd g = tomo::landweber_solution(a, b, 10000, tomo::max_step_size(a));
  const Eigen::VectorXd pinv = oracle::min_norm_solution(a, b);
  const double residual = (b - a * g).norm();
  const double err = (g - pinv).cwiseAbs().maxCoeff();

  const bool pass = worst_increase <= 1e-12 && bound < 2.0 && residual <= 1e-6 && err <= 1e-4;
  return {pass, "max residual increase " + fmt(worst_increase) + " over 200 its, alpha*||S^T S|| = " + fmt(bound) +
                    "; 10x20: residual " + fmt(residual) + ", max |g - pinv| " + fmt(err) + " (tol 1e-4)"};
}

Outcome tikhonov() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd s = oracle::random_matrix(10, 20, 100 + seed);
    const Eigen::VectorXd u = oracle::random_vector(10, 200 + seed);
    for (double lambda : {1e-3, 1e-1, 10.0}) {
      const Eigen::VectorXd g = tomo::tikhonov_solution(s, u, lambda);
      worst = std::max(worst, (g - oracle::tikhonov(s, u, lambda)).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-10, "5 systems x 3 lambdas, max abs diff " + fmt(worst) + " (tol 1e-10)"};
}

Outcome metrics() {
  const auto truth = tomo::phantom_to_image(tomo::sample_phantom(3));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  tomo::GrayImage random(256, 256);
  for (auto& p : random.pixels()) p = unit(rng);

  const double ssim_self = std::max(std::abs(tomo::ssim(truth, truth) - 1.0), std::abs(tomo::ssim(random, random) - 1.0));
  const double rmse_self = std::max(tomo::rmse(truth, truth), tomo::rmse(random, random));
  const double psnr01 = tomo::psnr(tomo::GrayImage(256, 256, 0.0), tomo::GrayImage(256, 256, 1.0), 1.0);

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> sweep;
  for (double level : {0.01, 0.03, 0.1, 0.2, 0.4}) {
    tomo::GrayImage noisy = truth;
    for (auto& p : noisy.pixels()) p += level * noise(rng);
    sweep.push_back(tomo::psnr(truth, noisy, 1.0));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i] < sweep[i - 1];

  std::string curve;
  for (double v : sweep) curve += (curve.empty() ? "" : "/") + fmt(v);
  const bool pass = ssim_self <= 1e-12 && rmse_self == 0.0 && std::abs(psnr01) <= 1e-12 && monotone;
  return {pass, "|SSIM(x,x)-1| " + fmt(ssim_self) + ", RMSE(x,x) " + fmt(rmse_self) + ", PSNR(0,1) " + fmt(psnr01) +
                    " dB, PSNR sweep " + curve + " dB"};
}

Outcome dataset_reproducibility(const fs::path& work) {
  auto gen = [&](const std::string& name, const std::string& threads) {
    const fs::path dir = work / name;
    fs::remove_all(dir);
    std::ostringstream out, err;
    const auto start = Clock::now();
    const int code = tomo::cli::run({"--quiet", "--threads", threads, "dataset", "gen", "--count", "50", "--seed", "42",
                                     "--out-dir", dir.string()},
                                    out, err);
    const double elapsed = seconds_since(start);
    if (code != 0) throw std::runtime_error("dataset gen failed: " + err.str());
    return std::make_pair(tomo::corpus_hash(dir), elapsed);
  };
  const auto a = gen("run_a", "1");
  const auto b = gen("run_b", "1");
  const auto c = gen("run_c", "8");
  const double slowest = std::max({a.second, b.second, c.second});
  const bool pass = a.first == b.first && a.first == c.first && slowest < 300.0;
  return {pass, "hash " + a.first.substr(0, 16) + (a.first == b.first ? " == " : " != ") + "rerun, " +
                    (a.first == c.first ? "== " : "!= ") + "8 threads; slowest run " + fmt(slowest) + " s"};
}

Outcome ssim_ordering(const fs::path& work) {
  tomo::GenerationConfig config;
  config.count = 100;
  config.base_seed = 1000;
  config.threads = 0;
  const fs::path dir = work / "ordering";
  fs::remove_all(dir);
  const auto manifest = tomo::generate_dataset(config, dir);
  std::map<tomo::Algorithm, std::pair<double, int>> sums;
  for (const auto& r : manifest.records) {
    const double v = tomo::ssim(tomo::read_png(dir / r.target_image), tomo::read_png(dir / r.input_image));
    sums[r.algorithm].first += v;
    sums[r.algorithm].second += 1;
  }
  auto mean = [&](tomo::Algorithm a) { return sums[a].first / sums[a].second; };
  const double lbp = mean(tomo::Algorithm::lbp);
  const double lw = mean(tomo::Algorithm::landweber);
  const double tk = mean(tomo::Algorithm::tikhonov);
  return {lbp <= lw && lbp <= tk,
          "mean SSIM lbp " + fmt(lbp) + ", landweber " + fmt(lw) + ", tikhonov " + fmt(tk) + " (need lbp lowest)"};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("tomo_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);
  ::setenv("TOMO_CACHE_DIR", (work / "cache").c_str(), 1);

  const Fixture fixture;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"reciprocity", [&] { return reciprocity(fixture); }},
      {"rotational-symmetry", [&] { return rotation(fixture); }},
      {"sensitivity-oracle", [&] { return sensitivity_oracle(fixture); }},
      {"landweber", [&] { return landweber(fixture); }},
      {"tikhonov", [] { return tikhonov(); }},
      {"metrics", [] { return metrics(); }},
      {"dataset-reproducibility", [&] { return dataset_reproducibility(work); }},
      {"ssim-ordering", [&] { return ssim_ordering(work); }},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
