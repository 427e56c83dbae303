#include "posedist/obsgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "posedist/error.hpp"

namespace posedist {
namespace {

// Independent streams per noise source, so changing one rate does not
// reshuffle the others.
enum Stream : std::uint64_t { kMaskStream = 1, kOutlierStream, kDescStream, kFrameStream };

std::mt19937_64 stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = g(rng);
  return v.normalized();
}

Eigen::VectorXd perturb_descriptor(const Eigen::VectorXd& d, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  double angle = std::abs(g(rng));
  Eigen::VectorXd t = random_unit(static_cast<int>(d.size()), rng);
  t -= t.dot(d) * d;
  t.normalize();
  Eigen::VectorXd out = std::cos(angle) * d + std::sin(angle) * t;
  return out.normalized();
}

std::vector<std::uint8_t> mask_from(const RenderBuffers& rb) {
  std::vector<std::uint8_t> m(rb.triangle.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rb.triangle[i] >= 0 ? 1 : 0;
  return m;
}

void check_in_frame(const SymModel& model, const CameraIntrinsics& k, const Pose& pose) {
  if (!fully_in_frame(model.mesh, k, pose)) {
    throw Error(ErrorCode::kObjectOutOfFrame, "object not fully inside the image at this pose");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  camera.validate();
  if (!(noise_desc >= 0.0) || !(noise_frame >= 0.0) || noise_mask < 0) {
    throw Error(ErrorCode::kInvalidArgument, "noise parameters must be non-negative");
  }
  if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier_rate must be in [0, 1)");
  }
  if (!gt_pose.translation.allFinite()) throw Error(ErrorCode::kInvalidArgument, "gt translation not finite");
}

Json scenario_to_json(const ScenarioConfig& c) {
  Json occ = Json::array();
  for (const auto& p : c.occluder) occ.push_back({p.x(), p.y()});
  return {{"camera", camera_to_json(c.camera)},
          {"gt_pose", pose_to_json(c.gt_pose)},
          {"noise_desc_rad", c.noise_desc},
          {"noise_frame_rad", c.noise_frame},
          {"noise_mask_px", c.noise_mask},
          {"occluder_px", occ},
          {"outlier_rate", c.outlier_rate},
          {"seed", c.seed}};
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig c;
  try {
    c.camera = camera_from_json(j.at("camera"));
    c.gt_pose = pose_from_json(j.at("gt_pose"));
    c.noise_desc = j.value("noise_desc_rad", 0.0);
    c.noise_frame = j.value("noise_frame_rad", 0.0);
    c.noise_mask = j.value("noise_mask_px", 0);
    if (j.contains("occluder_px") && !j["occluder_px"].is_null()) {
      for (const auto& p : j["occluder_px"]) c.occluder.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    c.outlier_rate = j.value("outlier_rate", 0.0);
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad scenario: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

Rotation rotation_noise(double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return Rotation();
  std::normal_distribution<double> g(0.0, sigma);
  Vec3 axis = random_unit_vector(rng);
  return Rotation::about(axis, std::abs(g(rng)));
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 &a = poly[i], &b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

std::vector<Vec2> projected_hull(const CameraIntrinsics& k, const Pose& pose,
                                 const std::vector<Vec3>& points, double scale) {
  std::vector<Vec2> p;
  for (const auto& x : points) p.push_back(project(k, pose, x));
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Vec2> hull(2 * p.size());
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (n >= 2 && cross(hull[n - 2], hull[n - 1], p[i]) <= 0.0) --n;
    hull[n++] = p[i];
  }
  for (std::size_t i = p.size() - 1, lo = n + 1; i-- > 0;) {
    while (n >= lo && cross(hull[n - 2], hull[n - 1], p[i]) <= 0.0) --n;
    hull[n++] = p[i];
  }
  hull.resize(n > 1 ? n - 1 : n);
  Vec2 c = Vec2::Zero();
  for (const auto& h : hull) c += h;
  c /= static_cast<double>(hull.size());
  for (auto& h : hull) h = c + scale * (h - c);
  return hull;
}

std::vector<std::uint8_t> render_mask_only(const SymModel& model, const CameraIntrinsics& k,
                                           const Pose& pose) {
  k.validate();
  check_in_frame(model, k, pose);
  return mask_from(rasterize(model.mesh, k, pose));
}

Observation render(const SymModel& model, const ScenarioConfig& config) {
  config.validate();
  const auto& k = config.camera;
  check_in_frame(model, k, config.gt_pose);
  RenderBuffers rb = rasterize(model.mesh, k, config.gt_pose);

  Observation obs;
  obs.width = k.width;
  obs.height = k.height;
  obs.camera = k;
  obs.gt_pose = config.gt_pose;
  obs.symmetry = model.symmetry;
  obs.object_mask = mask_from(rb);
  const std::size_t npix = obs.object_mask.size();
  if (std::count(obs.object_mask.begin(), obs.object_mask.end(), 1) == 0) {
    throw Error(ErrorCode::kObjectOutOfFrame, "object covers no pixel");
  }

  // h(x) for every covered pixel.
  const Pose inv = config.gt_pose.inverse();
  std::vector<int> hit(npix, -1);
  std::vector<Vec3> surface(npix, Vec3::Constant(std::numeric_limits<double>::quiet_NaN()));
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      std::size_t i = static_cast<std::size_t>(v) * k.width + u;
      if (rb.triangle[i] < 0) continue;
      Vec3 xc = rb.depth[i] * Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      surface[i] = inv * xc;
      hit[i] = model.nearest(surface[i]);
    }
  }

  std::vector<std::uint8_t> mask = obs.object_mask;
  if (config.noise_mask > 0) {
    auto rng = stream(config.seed, kMaskStream);
    std::bernoulli_distribution flip(0.5);
    const int m = config.noise_mask;
    std::vector<std::uint8_t> noisy = mask;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        std::uint8_t here = obs.object_mask[v * k.width + u];
        bool near_boundary = false;
        for (int dv = -m; dv <= m && !near_boundary; ++dv) {
          for (int du = -m; du <= m; ++du) {
            int uu = u + du, vv = v + dv;
            if (du * du + dv * dv > m * m || uu < 0 || vv < 0 || uu >= k.width || vv >= k.height) continue;
            if (obs.object_mask[vv * k.width + uu] != here) {
              near_boundary = true;
              break;
            }
          }
        }
        if (near_boundary && flip(rng)) noisy[v * k.width + u] = here ? 0 : 1;
      }
    }
    mask = std::move(noisy);
  }
  if (!config.occluder.empty()) {
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u)
        if (point_in_polygon(Vec2(u, v), config.occluder)) mask[v * k.width + u] = 0;
  }
  if (std::count(mask.begin(), mask.end(), 1) == 0) {
    throw Error(ErrorCode::kEmptyMaskAfterOcclusion, "no object pixel survives the occluder and mask noise");
  }

  obs.mask = mask;
  obs.pixel_index.assign(npix, -1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      std::size_t i = static_cast<std::size_t>(v) * k.width + u;
      if (!mask[i]) continue;
      obs.pixel_index[i] = static_cast<int>(obs.pixels.size());
      obs.pixels.emplace_back(u, v);
      obs.gt_point.push_back(hit[i]);
      obs.gt_surface.push_back(surface[i]);
    }
  }

  const std::size_t p = obs.pixels.size();
  const int dim = model.dim();
  obs.descriptors.resize(dim, static_cast<Eigen::Index>(p));
  obs.frames.resize(p);
  auto out_rng = stream(config.seed, kOutlierStream);
  auto desc_rng = stream(config.seed, kDescStream);
  auto frame_rng = stream(config.seed, kFrameStream);
  std::bernoulli_distribution outlier(config.outlier_rate);
  const Rotation& rgt = config.gt_pose.rotation;
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    bool is_outlier = outlier(out_rng);
    int h = obs.gt_point[j];
    if (is_outlier || h < 0) {
      obs.descriptors.col(col) = random_unit(dim, out_rng);
      obs.frames[j] = random_rotation(out_rng);
      continue;
    }
    Eigen::VectorXd d = model.descriptors.col(h);
    obs.descriptors.col(col) = config.noise_desc > 0.0 ? perturb_descriptor(d, config.noise_desc, desc_rng) : d;
    obs.frames[j] = rotation_noise(config.noise_frame, frame_rng) * rgt * model.frames[h].inverse();
  }
  return obs;
}

std::vector<int> visible_points(const SymModel& model, const CameraIntrinsics& k, const Pose& pose,
                                const RenderBuffers& rb) {
  const double eps = 1e-4 * model.diameter();
  const std::vector<Vec3> cam = camera_vertices(model.mesh, pose);
  std::vector<int> out;
  std::vector<int> tris;
  for (int i = 0; i < static_cast<int>(model.size()); ++i) {
    Vec3 xc = pose * model.points[i];
    if (!(xc.z() > 0.0)) continue;
    Vec2 p = project_camera_point(k, xc);
    int u = static_cast<int>(std::lround(p.x())), v = static_cast<int>(std::lround(p.y()));
    if (!rb.covered(u, v)) continue;
    tris.clear();
    for (int dv = -2; dv <= 2; ++dv) {
      for (int du = -2; du <= 2; ++du) {
        if (!rb.covered(u + du, v + dv)) continue;
        int t = rb.triangle[(v + dv) * rb.width + (u + du)];
        if (std::find(tris.begin(), tris.end(), t) == tris.end()) tris.push_back(t);
      }
    }
    double z = first_hit_depth(model.mesh, cam, xc, tris);
    if (std::isfinite(z) && xc.z() <= z + eps) out.push_back(i);
  }
  return out;
}

std::vector<int> visible_points(const SymModel& model, const CameraIntrinsics& k, const Pose& pose) {
  return visible_points(model, k, pose, rasterize(model.mesh, k, pose));
}

}  // namespace posedist
