#include "unrealdc/minidoom.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace unrealdc::minidoom {

namespace {

struct RayHit {
  std::array<float, 3> color;
  double distance;
};

// Walks the grid along one ray until the first wall, monster or object cell.
RayHit cast(const WorldState& s, const MapSpec& map, double dir_x, double dir_y) {
  const double pos_x = s.agent.x + 0.5;
  const double pos_y = s.agent.y + 0.5;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double delta_x = dir_x == 0.0 ? kInf : std::abs(1.0 / dir_x);
  const double delta_y = dir_y == 0.0 ? kInf : std::abs(1.0 / dir_y);
  int cell_x = s.agent.x;
  int cell_y = s.agent.y;
  const int step_x = dir_x < 0 ? -1 : 1;
  const int step_y = dir_y < 0 ? -1 : 1;
  double side_x = dir_x < 0 ? (pos_x - cell_x) * delta_x : (cell_x + 1.0 - pos_x) * delta_x;
  double side_y = dir_y < 0 ? (pos_y - cell_y) * delta_y : (cell_y + 1.0 - pos_y) * delta_y;

  const int max_steps = map.width + map.height + 2;
  for (int i = 0; i < max_steps; ++i) {
    double distance;
    if (side_x < side_y) {
      distance = side_x;
      side_x += delta_x;
      cell_x += step_x;
    } else {
      distance = side_y;
      side_y += delta_y;
      cell_y += step_y;
    }
    const Coord c{cell_x, cell_y};
    if (!map.is_floor(c)) return {palette::kWall, distance};
    if (s.monster_at(c)) return {palette::kMonster, distance};
    if (s.object_at(c)) return {palette::kObject, distance};
  }
  return {palette::kWall, static_cast<double>(max_steps)};
}

}  // namespace

Observation render(const WorldState& s, const MapSpec& map, int height, int width,
                   double fov_degrees) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("render: observation dims must be positive");
  }
  Observation obs = Observation::zeros(height, width);

  double dir_x = 0.0;
  double dir_y = 0.0;
  switch (s.heading) {
    case Heading::North: dir_y = -1.0; break;
    case Heading::East: dir_x = 1.0; break;
    case Heading::South: dir_y = 1.0; break;
    case Heading::West: dir_x = -1.0; break;
  }
  const double half_span = std::tan(fov_degrees * std::numbers::pi / 360.0);
  const double plane_x = -dir_y * half_span;
  const double plane_y = dir_x * half_span;

  for (int col = 0; col < width; ++col) {
    const double cam = 2.0 * (col + 0.5) / width - 1.0;
    const RayHit hit = cast(s, map, dir_x + plane_x * cam, dir_y + plane_y * cam);
    // A unit-high block with the eye at half height, 90 degree vertical view.
    const double band = height * 0.5 / std::max(hit.distance, 1e-6);
    const double top = height * 0.5 - band * 0.5;
    const double bottom = height * 0.5 + band * 0.5;
    const float shade =
        static_cast<float>(1.0 / (1.0 + 0.25 * std::max(0.0, hit.distance - 0.5)));
    for (int row = 0; row < height; ++row) {
      const double centre = row + 0.5;
      std::array<float, 3> rgb;
      if (centre < top) {
        rgb = palette::kCeiling;
      } else if (centre >= bottom) {
        rgb = palette::kFloor;
      } else {
        rgb = {hit.color[0] * shade, hit.color[1] * shade, hit.color[2] * shade};
      }
      float* px = &obs.pixels[static_cast<std::size_t>((row * width + col) * 3)];
      px[0] = rgb[0];
      px[1] = rgb[1];
      px[2] = rgb[2];
    }
  }
  return obs;
}

}  // namespace unrealdc::minidoom
