#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tomo/forward.hpp"
#include "tomo/image.hpp"
#include "tomo/mesh.hpp"

namespace tomo {

enum class Shape { circle, triangle, square };

std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);

/// One inclusion. `size` is the radius of a circle, the half side of a
/// square and the circumradius of an equilateral triangle; `rotation` is
/// counter-clockwise in radians.
struct Inclusion {
  Shape shape = Shape::circle;
  Point center = Point::Zero();
  double size = 0.1;
  double rotation = 0.0;
  double sigma = 2.5;

  /// Boundary points count as inside.
  bool contains(const Point& p) const;
  /// True when the whole inclusion lies in the closed unit disc.
  bool fits_in_disc() const;
  double area() const;
};

struct PhantomSpec {
  std::vector<Inclusion> inclusions;
  double background_sigma = 1.0;

  friend bool operator==(const PhantomSpec& a, const PhantomSpec& b);
};

/// Distribution sampled by sample_phantom.
struct PhantomConfig {
  int min_count = 1;
  int max_count = 3;
  double min_size = 0.1;
  double max_size = 0.4;
  double inclusion_sigma = 2.5;
  double background_sigma = 1.0;

  /// Throws ConfigError when the ranges are empty or cannot fit in the disc.
  void validate() const;
};

/// Deterministic in (seed, config). Count and shape are uniform; each
/// inclusion is drawn (centre uniform over the disc, size uniform, rotation
/// uniform) until it fits inside the disc.
PhantomSpec sample_phantom(std::uint64_t seed, const PhantomConfig& config = {});

/// Element k takes the sigma of the first inclusion containing its centroid.
ConductivityField phantom_to_sigma(const DiscMesh& mesh, const PhantomSpec& spec);

/// Binary ground truth: 1 where the pixel centre is inside any inclusion,
/// 0 elsewhere (including outside the disc).
GrayImage phantom_to_image(const PhantomSpec& spec, std::size_t rows = kImageSize, std::size_t cols = kImageSize);

std::string phantom_to_json(const PhantomSpec& spec);
PhantomSpec phantom_from_json(std::string_view text);
void write_phantom(const PhantomSpec& spec, const std::filesystem::path& path);
PhantomSpec read_phantom(const std::filesystem::path& path);

}  // namespace tomo
