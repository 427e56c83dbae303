#include "posedist/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "posedist/error.hpp"

namespace posedist {
namespace {

constexpr char kMagic[8] = {'P', 'D', 'S', 'Y', 'M', 'M', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

Json vec_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kFormat, std::string(what) + " must be a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <typename T>
void write_raw(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::istream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw Error(ErrorCode::kFormat, "model file truncated");
}

std::vector<double> quats(const std::vector<Rotation>& frames) {
  std::vector<double> q;
  q.reserve(frames.size() * 4);
  for (const auto& f : frames) {
    const Quat& x = f.quaternion();
    q.insert(q.end(), {x.w(), x.x(), x.y(), x.z()});
  }
  return q;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json symmetry_to_json(const SymmetrySpec& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["axis"] = vec_to_json(s.axis);
  if (s.kind == SymmetryKind::kDiscrete) j["order"] = s.order;
  Json markers = Json::array();
  for (const auto& m : s.markers) {
    markers.push_back({{"center_m", vec_to_json(m.center)}, {"radius_m", m.radius}});
  }
  j["markers"] = markers;
  return j;
}

SymmetrySpec symmetry_from_json(const Json& j) {
  SymmetrySpec s;
  s.kind = symmetry_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("axis")) s.axis = vec_from_json(j["axis"], "symmetry axis");
  if (s.kind == SymmetryKind::kDiscrete) s.order = j.at("order").get<int>();
  if (s.kind == SymmetryKind::kContinuous) s.order = 0;
  if (j.contains("markers")) {
    for (const auto& m : j["markers"]) {
      s.markers.push_back({vec_from_json(m.at("center_m"), "marker center"), m.at("radius_m").get<double>()});
    }
  }
  s.validate();
  return s;
}

Json pose_to_json(const Pose& p) {
  return {{"rotation_angle_axis_rad", vec_to_json(p.rotation.angle_axis())},
          {"translation_m", vec_to_json(p.translation)}};
}

Pose pose_from_json(const Json& j) {
  Pose p;
  if (j.contains("rotation_quaternion_wxyz")) {
    const auto& q = j["rotation_quaternion_wxyz"];
    p.rotation = Rotation::from_quaternion(Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                                q.at(2).get<double>(), q.at(3).get<double>()));
  } else {
    p.rotation = Rotation::from_angle_axis(vec_from_json(j.at("rotation_angle_axis_rad"), "rotation"));
  }
  p.translation = vec_from_json(j.at("translation_m"), "translation");
  if (!p.translation.allFinite()) throw Error(ErrorCode::kInvalidArgument, "translation must be finite");
  return p;
}

Json camera_to_json(const CameraIntrinsics& k) {
  return {{"fx_px", k.fx}, {"fy_px", k.fy}, {"cx_px", k.cx}, {"cy_px", k.cy},
          {"width_px", k.width}, {"height_px", k.height}};
}

CameraIntrinsics camera_from_json(const Json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx_px").get<double>();
  k.fy = j.at("fy_px").get<double>();
  k.cx = j.at("cx_px").get<double>();
  k.cy = j.at("cy_px").get<double>();
  k.width = j.at("width_px").get<int>();
  k.height = j.at("height_px").get<int>();
  k.validate();
  return k;
}

void save_model(const SymModel& m, const std::filesystem::path& path) {
  const auto& f = m.field;
  Json h;
  h["format"] = "posedist-symmodel";
  h["version"] = kVersion;
  h["symmetry"] = symmetry_to_json(m.symmetry);
  h["params"] = {{"max_points", m.params.max_points},
                 {"descriptor_dim", m.params.descriptor_dim},
                 {"beta", m.params.beta},
                 {"bandwidth_factor", m.params.bandwidth_factor},
                 {"seed", m.params.seed}};
  h["spacing_m"] = m.spacing;
  h["bandwidth_m"] = f.bandwidth();
  h["mesh_hash"] = hex64(m.mesh_hash);
  h["diameter_m"] = m.mesh.diameter;
  h["counts"] = {{"points", m.size()},
                 {"dim", m.dim()},
                 {"quotient_dim", f.omega().cols()},
                 {"vertices", m.mesh.vertices.size()},
                 {"triangles", m.mesh.triangles.size()}};
  h["arrays"] = Json::array({"points f64[N,3]", "descriptors f64[N,D]", "frames f64[N,4] wxyz",
                             "omega f64[Q,D]", "phase f64[D]", "marker_omega f64[3,D]",
                             "marker_phase f64[D]", "vertices f64[V,3]", "triangles i32[T,3]"});
  std::string header = h.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_raw(out, &kVersion, 1);
  std::uint64_t len = header.size();
  write_raw(out, &len, 1);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& p : m.points) write_raw(out, p.data(), 3);
  write_raw(out, m.descriptors.data(), static_cast<std::size_t>(m.descriptors.size()));
  auto q = quats(m.frames);
  write_raw(out, q.data(), q.size());
  write_raw(out, f.omega().data(), static_cast<std::size_t>(f.omega().size()));
  write_raw(out, f.phase().data(), static_cast<std::size_t>(f.phase().size()));
  write_raw(out, f.marker_omega().data(), static_cast<std::size_t>(f.marker_omega().size()));
  write_raw(out, f.marker_phase().data(), static_cast<std::size_t>(f.marker_phase().size()));
  for (const auto& v : m.mesh.vertices) write_raw(out, v.data(), 3);
  for (const auto& t : m.mesh.triangles) {
    std::int32_t idx[3] = {t[0], t[1], t[2]};
    write_raw(out, idx, 3);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

SymModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a model file");
  }
  std::uint32_t version = 0;
  read_raw(in, &version, 1);
  if (version != kVersion) throw Error(ErrorCode::kFormat, "unsupported model version " + std::to_string(version));
  std::uint64_t len = 0;
  read_raw(in, &len, 1);
  if (len > (1u << 24)) throw Error(ErrorCode::kFormat, "model header too large");
  std::string text(len, '\0');
  read_raw(in, text.data(), len);
  Json h;
  try {
    h = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad model header: ") + e.what());
  }

  SymModel m;
  m.symmetry = symmetry_from_json(h.at("symmetry"));
  const auto& p = h.at("params");
  m.params.max_points = p.at("max_points").get<std::size_t>();
  m.params.descriptor_dim = p.at("descriptor_dim").get<int>();
  m.params.beta = p.at("beta").get<double>();
  m.params.bandwidth_factor = p.at("bandwidth_factor").get<double>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  m.spacing = h.at("spacing_m").get<double>();
  const auto& c = h.at("counts");
  const std::size_t n = c.at("points").get<std::size_t>();
  const int d = c.at("dim").get<int>();
  const int qd = c.at("quotient_dim").get<int>();
  const std::size_t nv = c.at("vertices").get<std::size_t>();
  const std::size_t nt = c.at("triangles").get<std::size_t>();
  if (d != m.params.descriptor_dim) throw Error(ErrorCode::kFormat, "descriptor dimension mismatch");

  m.points.resize(n);
  for (auto& x : m.points) read_raw(in, x.data(), 3);
  m.descriptors.resize(d, static_cast<Eigen::Index>(n));
  read_raw(in, m.descriptors.data(), static_cast<std::size_t>(m.descriptors.size()));
  std::vector<double> q(4 * n);
  read_raw(in, q.data(), q.size());
  m.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.frames[i] = Rotation::from_quaternion(Quat(q[4 * i], q[4 * i + 1], q[4 * i + 2], q[4 * i + 3]));
  }
  Eigen::MatrixXd omega(d, qd), momega(d, 3);
  Eigen::VectorXd phase(d), mphase(d);
  read_raw(in, omega.data(), static_cast<std::size_t>(omega.size()));
  read_raw(in, phase.data(), static_cast<std::size_t>(phase.size()));
  read_raw(in, momega.data(), static_cast<std::size_t>(momega.size()));
  read_raw(in, mphase.data(), static_cast<std::size_t>(mphase.size()));
  m.field = DescriptorField(m.symmetry, d, h.at("bandwidth_m").get<double>(), m.params.seed);
  m.field.set_features(std::move(omega), std::move(phase), std::move(momega), std::move(mphase));

  m.mesh.vertices.resize(nv);
  for (auto& v : m.mesh.vertices) read_raw(in, v.data(), 3);
  m.mesh.triangles.resize(nt);
  for (auto& t : m.mesh.triangles) {
    std::int32_t idx[3];
    read_raw(in, idx, 3);
    t = {idx[0], idx[1], idx[2]};
  }
  m.mesh.finalize();
  m.mesh_hash = mesh_hash(m.mesh);
  if (hex64(m.mesh_hash) != h.at("mesh_hash").get<std::string>()) {
    throw Error(ErrorCode::kFormat, "embedded mesh does not match its recorded hash");
  }
  m.rebuild_index();
  return m;
}

std::uint64_t model_hash(const SymModel& m) {
  std::uint64_t h = fnv1a(m.points.data(), m.points.size() * sizeof(Vec3));
  h = fnv1a(m.descriptors.data(), static_cast<std::size_t>(m.descriptors.size()) * sizeof(double), h);
  auto q = quats(m.frames);
  h = fnv1a(q.data(), q.size() * sizeof(double), h);
  return fnv1a(&m.mesh_hash, sizeof m.mesh_hash, h);
}

}  // namespace posedist
