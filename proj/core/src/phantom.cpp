#include "tomo/phantom.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json_codec.hpp"
#include "tomo/error.hpp"

namespace tomo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFitTolerance = 1e-12;
constexpr int kMaxPlacementAttempts = 100000;

// Maps p into the inclusion frame (centre at origin, rotation undone).
Point to_local(const Inclusion& inc, const Point& p) {
  const double theta = std::fmod(inc.rotation, kTwoPi);
  const double c = std::cos(theta), s = std::sin(theta);
  const Point d = p - inc.center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

std::vector<Point> vertices(const Inclusion& inc) {
  std::vector<Point> out;
  const double theta = std::fmod(inc.rotation, kTwoPi);
  if (inc.shape == Shape::square) {
    for (auto [sx, sy] : std::array<std::pair<double, double>, 4>{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}}) {
      const double x = sx * inc.size, y = sy * inc.size;
      out.emplace_back(inc.center.x() + std::cos(theta) * x - std::sin(theta) * y,
                       inc.center.y() + std::sin(theta) * x + std::cos(theta) * y);
    }
  } else if (inc.shape == Shape::triangle) {
    for (int i = 0; i < 3; ++i) {
      const double a = theta + 0.5 * std::numbers::pi + kTwoPi * i / 3.0;
      out.emplace_back(inc.center.x() + inc.size * std::cos(a), inc.center.y() + inc.size * std::sin(a));
    }
  }
  return out;
}

// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::circle: return "circle";
    case Shape::triangle: return "triangle";
    case Shape::square: return "square";
  }
  return "circle";
}

Shape parse_shape(std::string_view name) {
  if (name == "circle") return Shape::circle;
  if (name == "triangle") return Shape::triangle;
  if (name == "square") return Shape::square;
  throw ConfigError("unknown inclusion shape \"" + std::string(name) + "\"");
}

bool Inclusion::contains(const Point& p) const {
  switch (shape) {
    case Shape::circle: return (p - center).squaredNorm() <= size * size;
    case Shape::square: {
      const Point q = to_local(*this, p);
      return std::abs(q.x()) <= size && std::abs(q.y()) <= size;
    }
    case Shape::triangle: {
      // Equilateral, apex up in the local frame; inradius = size / 2.
      const Point q = to_local(*this, p);
      const double inradius = 0.5 * size;
      const double h = 0.5 * std::sqrt(3.0);
      return -q.y() <= inradius && h * q.x() + 0.5 * q.y() <= inradius && -h * q.x() + 0.5 * q.y() <= inradius;
    }
  }
  return false;
}

bool Inclusion::fits_in_disc() const {
  if (shape == Shape::circle) return center.norm() + size <= 1.0 + kFitTolerance;
  for (const auto& v : vertices(*this)) {
    if (v.norm() > 1.0 + kFitTolerance) return false;
  }
  return true;
}

double Inclusion::area() const {
  switch (shape) {
    case Shape::circle: return std::numbers::pi * size * size;
    case Shape::square: return 4.0 * size * size;
    case Shape::triangle: return 0.75 * std::sqrt(3.0) * size * size;
  }
  return 0.0;
}

bool operator==(const PhantomSpec& a, const PhantomSpec& b) {
  if (a.background_sigma != b.background_sigma || a.inclusions.size() != b.inclusions.size()) return false;
  for (std::size_t i = 0; i < a.inclusions.size(); ++i) {
    const auto& x = a.inclusions[i];
    const auto& y = b.inclusions[i];
    if (x.shape != y.shape || x.center != y.center || x.size != y.size || x.rotation != y.rotation ||
        x.sigma != y.sigma) {
      return false;
    }
  }
  return true;
}

void PhantomConfig::validate() const {
  if (min_count < 1 || max_count < min_count) {
    throw ConfigError("inclusion count range [" + std::to_string(min_count) + ", " + std::to_string(max_count) +
                      "] is invalid");
  }
  if (!(min_size > 0.0) || max_size < min_size) {
    throw ConfigError("inclusion size range [" + std::to_string(min_size) + ", " + std::to_string(max_size) +
                      "] is invalid");
  }
  // A square of half side s needs s * sqrt(2) <= 1 even at the centre.
  if (max_size * std::numbers::sqrt2 > 1.0) {
    throw ConfigError("inclusion size " + std::to_string(max_size) +
                      " cannot fit in the unit disc for every shape (max is 1/sqrt(2))");
  }
  if (!(inclusion_sigma > 0.0) || !(background_sigma > 0.0)) {
    throw ConfigError("conductivities must be positive");
  }
}

PhantomSpec sample_phantom(std::uint64_t seed, const PhantomConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  PhantomSpec spec;
  spec.background_sigma = config.background_sigma;
  const auto span = static_cast<std::uint64_t>(config.max_count - config.min_count + 1);
  const int count = config.min_count + static_cast<int>(rng() % span);
  for (int i = 0; i < count; ++i) {
    Inclusion inc;
    inc.shape = static_cast<Shape>(rng() % 3);
    inc.sigma = config.inclusion_sigma;
    int attempt = 0;
    do {
      if (++attempt > kMaxPlacementAttempts) {
        throw ConfigError("could not place an inclusion inside the disc after " +
                          std::to_string(kMaxPlacementAttempts) + " attempts");
      }
      const double r = std::sqrt(uniform01(rng));
      const double phi = kTwoPi * uniform01(rng);
      inc.center = {r * std::cos(phi), r * std::sin(phi)};
      inc.size = config.min_size + (config.max_size - config.min_size) * uniform01(rng);
      inc.rotation = kTwoPi * uniform01(rng);
    } while (!inc.fits_in_disc());
    spec.inclusions.push_back(inc);
  }
  return spec;
}

ConductivityField phantom_to_sigma(const DiscMesh& mesh, const PhantomSpec& spec) {
  ConductivityField field = ConductivityField::uniform(mesh.triangle_count(), spec.background_sigma);
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const Point c = mesh.centroid(k);
    for (const auto& inc : spec.inclusions) {
      if (inc.contains(c)) {
        field.sigma[k] = inc.sigma;
        break;
      }
    }
  }
  return field;
}

GrayImage phantom_to_image(const PhantomSpec& spec, std::size_t rows, std::size_t cols) {
  GrayImage image(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Point p = pixel_center(r, c, rows, cols);
      if (p.squaredNorm() > 1.0) continue;
      for (const auto& inc : spec.inclusions) {
        if (inc.contains(p)) {
          image(r, c) = 1.0;
          break;
        }
      }
    }
  }
  return image;
}

namespace detail {

nlohmann::json phantom_to_json_value(const PhantomSpec& spec) {
  nlohmann::json inclusions = nlohmann::json::array();
  for (const auto& inc : spec.inclusions) {
    inclusions.push_back({{"shape", std::string(to_string(inc.shape))},
                          {"center", {inc.center.x(), inc.center.y()}},
                          {"size", inc.size},
                          {"rotation", inc.rotation},
                          {"sigma", inc.sigma}});
  }
  return {{"inclusions", std::move(inclusions)}, {"background_sigma", spec.background_sigma}};
}

PhantomSpec phantom_from_json_value(const nlohmann::json& value) {
  try {
    PhantomSpec spec;
    spec.background_sigma = value.at("background_sigma").get<double>();
    for (const auto& item : value.at("inclusions")) {
      Inclusion inc;
      inc.shape = parse_shape(item.at("shape").get<std::string>());
      const auto& center = item.at("center");
      if (!center.is_array() || center.size() != 2) throw IoError("phantom: center must be a 2-element array");
      inc.center = {center[0].get<double>(), center[1].get<double>()};
      inc.size = item.at("size").get<double>();
      inc.rotation = item.value("rotation", 0.0);
      inc.sigma = item.at("sigma").get<double>();
      if (!(inc.size > 0.0) || !(inc.sigma > 0.0)) throw IoError("phantom: size and sigma must be positive");
      if (!inc.fits_in_disc()) throw IoError("phantom: inclusion does not fit inside the unit disc");
      spec.inclusions.push_back(inc);
    }
    if (!(spec.background_sigma > 0.0)) throw IoError("phantom: background_sigma must be positive");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("phantom: ") + e.what());
  }
}

}  // namespace detail

std::string phantom_to_json(const PhantomSpec& spec) { return detail::phantom_to_json_value(spec).dump(2) + "\n"; }

PhantomSpec phantom_from_json(std::string_view text) {
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("phantom: ") + e.what());
  }
  return detail::phantom_from_json_value(value);
}

void write_phantom(const PhantomSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << phantom_to_json(spec);
  if (!out) throw IoError("failed writing " + path.string());
}

PhantomSpec read_phantom(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return phantom_from_json(buffer.str());
}

}  // namespace tomo
