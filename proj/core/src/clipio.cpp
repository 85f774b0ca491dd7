#include "tcr3/clipio.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <vector>

namespace tcr3 {

using nlohmann::json;

namespace {

// Reads a field if present, keeping the struct's default otherwise.
template <typename T>
void read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

void read_vec3(const json& j, const char* key, Eigen::Vector3d* out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  require(a.is_array() && a.size() == 3, std::string("scene: ") + key + " must be [x, y, z]");
  *out = Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

const char* motion_kind_name(MotionSpec::Kind k) {
  switch (k) {
    case MotionSpec::Kind::kStatic: return "static";
    case MotionSpec::Kind::kConstantVelocity: return "constant_velocity";
    case MotionSpec::Kind::kOrbit: return "orbit";
    case MotionSpec::Kind::kOscillation: return "oscillation";
  }
  throw std::invalid_argument("scene: unknown motion kind");
}

MotionSpec::Kind motion_kind_from(const std::string& s) {
  if (s == "static") return MotionSpec::Kind::kStatic;
  if (s == "constant_velocity") return MotionSpec::Kind::kConstantVelocity;
  if (s == "orbit") return MotionSpec::Kind::kOrbit;
  if (s == "oscillation") return MotionSpec::Kind::kOscillation;
  throw std::invalid_argument("scene: unknown motion kind '" + s + "'");
}

const char* camera_kind_name(CameraPathSpec::Kind k) {
  switch (k) {
    case CameraPathSpec::Kind::kStatic: return "static";
    case CameraPathSpec::Kind::kLinear: return "linear";
    case CameraPathSpec::Kind::kOrbit: return "orbit";
  }
  throw std::invalid_argument("scene: unknown camera path kind");
}

CameraPathSpec::Kind camera_kind_from(const std::string& s) {
  if (s == "static") return CameraPathSpec::Kind::kStatic;
  if (s == "linear") return CameraPathSpec::Kind::kLinear;
  if (s == "orbit") return CameraPathSpec::Kind::kOrbit;
  throw std::invalid_argument("scene: unknown camera path kind '" + s + "'");
}

const char* primitive_kind_name(PrimitiveSpec::Kind k) {
  switch (k) {
    case PrimitiveSpec::Kind::kSphere: return "sphere";
    case PrimitiveSpec::Kind::kBox: return "box";
  }
  throw std::invalid_argument("scene: unknown primitive kind");
}

PrimitiveSpec::Kind primitive_kind_from(const std::string& s) {
  if (s == "sphere") return PrimitiveSpec::Kind::kSphere;
  if (s == "box") return PrimitiveSpec::Kind::kBox;
  throw std::invalid_argument("scene: unknown primitive kind '" + s + "'");
}

json motion_to_json(const MotionSpec& m) {
  json j;
  j["kind"] = motion_kind_name(m.kind);
  j["velocity"] = vec3_to_json(m.velocity);
  j["pivot"] = vec3_to_json(m.pivot);
  j["axis"] = vec3_to_json(m.axis);
  j["angular_velocity"] = m.angular_velocity;
  j["direction"] = vec3_to_json(m.direction);
  j["amplitude"] = m.amplitude;
  j["frequency"] = m.frequency;
  j["phase"] = m.phase;
  return j;
}

MotionSpec motion_from_json(const json& j) {
  MotionSpec m;
  if (j.contains("kind")) m.kind = motion_kind_from(j.at("kind").get<std::string>());
  read_vec3(j, "velocity", &m.velocity);
  read_vec3(j, "pivot", &m.pivot);
  read_vec3(j, "axis", &m.axis);
  read(j, "angular_velocity", &m.angular_velocity);
  read_vec3(j, "direction", &m.direction);
  read(j, "amplitude", &m.amplitude);
  read(j, "frequency", &m.frequency);
  read(j, "phase", &m.phase);
  return m;
}

}  // namespace

std::string scene_spec_to_json(const SceneSpec& spec) {
  json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["frames"] = spec.frames;
  j["seed"] = spec.seed;
  j["metric_units"] = spec.metric_units;
  j["fx"] = spec.fx;
  j["fy"] = spec.fy;
  j["cx"] = spec.cx;
  j["cy"] = spec.cy;
  j["background_depth"] = spec.background_depth;
  j["background_color"] = vec3_to_json(spec.background_color);
  j["background_texture_scale"] = spec.background_texture_scale;
  j["gt_visibility_tol"] = spec.gt_visibility_tol;

  json cam;
  cam["kind"] = camera_kind_name(spec.camera_path.kind);
  cam["velocity"] = vec3_to_json(spec.camera_path.velocity);
  cam["target"] = vec3_to_json(spec.camera_path.target);
  cam["radius"] = spec.camera_path.radius;
  cam["angular_velocity"] = spec.camera_path.angular_velocity;
  cam["phase"] = spec.camera_path.phase;
  cam["height"] = spec.camera_path.height;
  j["camera_path"] = cam;

  json prims = json::array();
  for (const PrimitiveSpec& p : spec.primitives) {
    json jp;
    jp["kind"] = primitive_kind_name(p.kind);
    jp["center"] = vec3_to_json(p.center);
    jp["radius"] = p.radius;
    jp["half_extents"] = vec3_to_json(p.half_extents);
    jp["color"] = vec3_to_json(p.color);
    jp["texture_scale"] = p.texture_scale;
    jp["motion"] = motion_to_json(p.motion);
    prims.push_back(jp);
  }
  j["primitives"] = prims;
  return j.dump(2);
}

SceneSpec scene_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scene: invalid JSON: ") + e.what());
  }
  SceneSpec spec;
  read(j, "width", &spec.width);
  read(j, "height", &spec.height);
  read(j, "frames", &spec.frames);
  read(j, "seed", &spec.seed);
  read(j, "metric_units", &spec.metric_units);
  read(j, "fx", &spec.fx);
  read(j, "fy", &spec.fy);
  read(j, "cx", &spec.cx);
  read(j, "cy", &spec.cy);
  read(j, "background_depth", &spec.background_depth);
  read_vec3(j, "background_color", &spec.background_color);
  read(j, "background_texture_scale", &spec.background_texture_scale);
  read(j, "gt_visibility_tol", &spec.gt_visibility_tol);

  if (j.contains("camera_path")) {
    const json& cam = j.at("camera_path");
    if (cam.contains("kind"))
      spec.camera_path.kind = camera_kind_from(cam.at("kind").get<std::string>());
    read_vec3(cam, "velocity", &spec.camera_path.velocity);
    read_vec3(cam, "target", &spec.camera_path.target);
    read(cam, "radius", &spec.camera_path.radius);
    read(cam, "angular_velocity", &spec.camera_path.angular_velocity);
    read(cam, "phase", &spec.camera_path.phase);
    read(cam, "height", &spec.camera_path.height);
  }
  if (j.contains("primitives")) {
    for (const json& jp : j.at("primitives")) {
      PrimitiveSpec p;
      if (jp.contains("kind")) p.kind = primitive_kind_from(jp.at("kind").get<std::string>());
      read_vec3(jp, "center", &p.center);
      read(jp, "radius", &p.radius);
      read_vec3(jp, "half_extents", &p.half_extents);
      read_vec3(jp, "color", &p.color);
      read(jp, "texture_scale", &p.texture_scale);
      if (jp.contains("motion")) p.motion = motion_from_json(jp.at("motion"));
      spec.primitives.push_back(p);
    }
  }
  return spec;
}

// --- Clip container ------------------------------------------------------------

namespace {

constexpr int kCameraFloats = 16;  // fx, fy, cx, cy, R row-major, t

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f64: return "f64";
    case Dtype::u8: return "u8";
  }
  throw std::invalid_argument("unknown dtype");
}

json entry_manifest(Dtype d, const std::vector<std::uint64_t>& dims) {
  json j;
  j["dtype"] = dtype_name(d);
  j["dims"] = dims;
  return j;
}

// Checks one container entry against its manifest declaration.
void check_entry(const TensorContainer& tc, const json& manifest, const std::string& name,
                 Dtype want) {
  require(tc.has(name), "clip: missing entry '" + name + "'");
  require(manifest.contains("entries") && manifest.at("entries").contains(name),
          "clip: manifest does not declare entry '" + name + "'");
  const TensorEntry& e = tc.get(name);
  require(e.dtype == want, "clip: entry '" + name + "' has the wrong dtype");
  const json& decl = manifest.at("entries").at(name);
  require(decl.at("dtype").get<std::string>() == dtype_name(want),
          "clip: manifest declares the wrong dtype for '" + name + "'");
  const std::vector<std::uint64_t> dims = decl.at("dims").get<std::vector<std::uint64_t>>();
  require(dims == e.dims, "clip: entry '" + name + "' shape differs from its manifest");
}

}  // namespace

TensorContainer clip_to_container(const TrackClip& clip) {
  const int T = clip.frame_count();
  require(T > 0, "clip_to_container: empty clip");
  const auto H = static_cast<std::uint64_t>(clip.height);
  const auto W = static_cast<std::uint64_t>(clip.width);
  const auto Tn = static_cast<std::uint64_t>(T);
  const Eigen::Index pixels = clip.pixel_count();
  require(static_cast<int>(clip.depths.size()) == T &&
              static_cast<int>(clip.cameras.size()) == T &&
              static_cast<int>(clip.recon.size()) == T &&
              static_cast<int>(clip.gt_track.size()) == T &&
              static_cast<int>(clip.gt_vis.size()) == T,
          "clip_to_container: per-frame vectors have inconsistent lengths");

  std::vector<float> frames(static_cast<size_t>(T) * static_cast<size_t>(pixels) * 3);
  std::vector<double> depths(static_cast<size_t>(T) * static_cast<size_t>(pixels));
  std::vector<double> cameras(static_cast<size_t>(T) * kCameraFloats);
  std::vector<double> recon(frames.size());
  std::vector<double> gt_track(frames.size());
  std::vector<std::uint8_t> gt_vis(depths.size());

  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<size_t>(t);
    require(clip.frames[ti].rows() == pixels && clip.depths[ti].size() == pixels &&
                clip.recon[ti].points.rows() == pixels &&
                clip.gt_track[ti].points.rows() == pixels && clip.gt_vis[ti].rows() == pixels,
            "clip_to_container: frame " + std::to_string(t) + " has the wrong pixel count");
    std::memcpy(frames.data() + ti * static_cast<size_t>(pixels) * 3,
                clip.frames[ti].data(), sizeof(float) * static_cast<size_t>(pixels) * 3);
    std::memcpy(depths.data() + ti * static_cast<size_t>(pixels), clip.depths[ti].data(),
                sizeof(double) * static_cast<size_t>(pixels));
    std::memcpy(recon.data() + ti * static_cast<size_t>(pixels) * 3,
                clip.recon[ti].points.data(),
                sizeof(double) * static_cast<size_t>(pixels) * 3);
    std::memcpy(gt_track.data() + ti * static_cast<size_t>(pixels) * 3,
                clip.gt_track[ti].points.data(),
                sizeof(double) * static_cast<size_t>(pixels) * 3);
    std::memcpy(gt_vis.data() + ti * static_cast<size_t>(pixels), clip.gt_vis[ti].data(),
                sizeof(std::uint8_t) * static_cast<size_t>(pixels));

    const CameraModel& cam = clip.cameras[ti];
    double* c = cameras.data() + ti * kCameraFloats;
    c[0] = cam.fx;
    c[1] = cam.fy;
    c[2] = cam.cx;
    c[3] = cam.cy;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) c[4 + r * 3 + col] = cam.R(r, col);
    for (int k = 0; k < 3; ++k) c[13 + k] = cam.t(k);
  }

  json manifest;
  manifest["width"] = clip.width;
  manifest["height"] = clip.height;
  manifest["stride"] = clip.stride;
  manifest["frame_count"] = T;
  manifest["metric_units"] = clip.metric_units;
  manifest["units"] = clip.metric_units ? "metric" : "scene-scale";
  manifest["scene_json"] = clip.scene_json;
  json entries;
  entries["frames"] = entry_manifest(Dtype::f32, {Tn, H, W, 3});
  entries["depths"] = entry_manifest(Dtype::f64, {Tn, H, W});
  entries["cameras"] = entry_manifest(Dtype::f64, {Tn, kCameraFloats});
  entries["recon"] = entry_manifest(Dtype::f64, {Tn, H, W, 3});
  entries["gt_track"] = entry_manifest(Dtype::f64, {Tn, H, W, 3});
  entries["gt_visibility"] = entry_manifest(Dtype::u8, {Tn, H, W});
  manifest["entries"] = entries;
  const std::string mtext = manifest.dump(2);

  TensorContainer tc;
  tc.add_u8("manifest", {mtext.size()},
            reinterpret_cast<const std::uint8_t*>(mtext.data()));
  tc.add_f32("frames", {Tn, H, W, 3}, frames.data());
  tc.add_f64("depths", {Tn, H, W}, depths.data());
  tc.add_f64("cameras", {Tn, kCameraFloats}, cameras.data());
  tc.add_f64("recon", {Tn, H, W, 3}, recon.data());
  tc.add_f64("gt_track", {Tn, H, W, 3}, gt_track.data());
  tc.add_u8("gt_visibility", {Tn, H, W}, gt_vis.data());
  return tc;
}

TrackClip clip_from_container(const TensorContainer& tc) {
  require(tc.has("manifest"), "clip: missing manifest entry");
  const TensorEntry& me = tc.get("manifest");
  require(me.dtype == Dtype::u8, "clip: manifest must be a u8 entry");
  json manifest;
  try {
    manifest = json::parse(std::string(reinterpret_cast<const char*>(me.as_u8()),
                                       static_cast<size_t>(me.element_count())));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("clip: manifest is not valid JSON: ") + e.what());
  }

  TrackClip clip;
  clip.width = manifest.at("width").get<int>();
  clip.height = manifest.at("height").get<int>();
  clip.stride = manifest.at("stride").get<int>();
  clip.metric_units = manifest.at("metric_units").get<bool>();
  read(manifest, "scene_json", &clip.scene_json);
  const int T = manifest.at("frame_count").get<int>();
  require(clip.width > 0 && clip.height > 0 && T > 0 && clip.stride > 0,
          "clip: manifest dimensions must be positive");

  check_entry(tc, manifest, "frames", Dtype::f32);
  check_entry(tc, manifest, "depths", Dtype::f64);
  check_entry(tc, manifest, "cameras", Dtype::f64);
  check_entry(tc, manifest, "recon", Dtype::f64);
  check_entry(tc, manifest, "gt_track", Dtype::f64);
  check_entry(tc, manifest, "gt_visibility", Dtype::u8);

  const auto H = static_cast<std::uint64_t>(clip.height);
  const auto W = static_cast<std::uint64_t>(clip.width);
  const auto Tn = static_cast<std::uint64_t>(T);
  const std::vector<std::uint64_t> map_dims = {Tn, H, W, 3};
  const std::vector<std::uint64_t> grid_dims = {Tn, H, W};
  require(tc.get("frames").dims == map_dims, "clip: frames shape mismatch");
  require(tc.get("depths").dims == grid_dims, "clip: depths shape mismatch");
  require(tc.get("cameras").dims ==
              std::vector<std::uint64_t>({Tn, static_cast<std::uint64_t>(kCameraFloats)}),
          "clip: cameras shape mismatch");
  require(tc.get("recon").dims == map_dims, "clip: recon shape mismatch");
  require(tc.get("gt_track").dims == map_dims, "clip: gt_track shape mismatch");
  require(tc.get("gt_visibility").dims == grid_dims, "clip: gt_visibility shape mismatch");

  const Eigen::Index pixels = static_cast<Eigen::Index>(clip.width) * clip.height;
  const float* frames = tc.get("frames").as_f32();
  const double* depths = tc.get("depths").as_f64();
  const double* cameras = tc.get("cameras").as_f64();
  const double* recon = tc.get("recon").as_f64();
  const double* gt_track = tc.get("gt_track").as_f64();
  const std::uint8_t* gt_vis = tc.get("gt_visibility").as_u8();

  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<size_t>(t);

    MatX3<float> frame(pixels, 3);
    std::memcpy(frame.data(), frames + ti * static_cast<size_t>(pixels) * 3,
                sizeof(float) * static_cast<size_t>(pixels) * 3);
    clip.frames.push_back(std::move(frame));

    MatXd depth(clip.height, clip.width);
    std::memcpy(depth.data(), depths + ti * static_cast<size_t>(pixels),
                sizeof(double) * static_cast<size_t>(pixels));
    clip.depths.push_back(std::move(depth));

    const double* c = cameras + ti * kCameraFloats;
    CameraModel cam;
    cam.fx = c[0];
    cam.fy = c[1];
    cam.cx = c[2];
    cam.cy = c[3];
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) cam.R(r, col) = c[4 + r * 3 + col];
    for (int k = 0; k < 3; ++k) cam.t(k) = c[13 + k];
    cam.validate();
    clip.cameras.push_back(cam);

    Pointmap rec;
    rec.width = clip.width;
    rec.height = clip.height;
    rec.frame_index = t;
    rec.timestamp_index = t;
    rec.points.resize(pixels, 3);
    std::memcpy(rec.points.data(), recon + ti * static_cast<size_t>(pixels) * 3,
                sizeof(double) * static_cast<size_t>(pixels) * 3);
    clip.recon.push_back(std::move(rec));

    Pointmap trk;
    trk.width = clip.width;
    trk.height = clip.height;
    trk.frame_index = 0;
    trk.timestamp_index = t;
    trk.points.resize(pixels, 3);
    std::memcpy(trk.points.data(), gt_track + ti * static_cast<size_t>(pixels) * 3,
                sizeof(double) * static_cast<size_t>(pixels) * 3);
    clip.gt_track.push_back(std::move(trk));

    VecX<std::uint8_t> vis(pixels);
    std::memcpy(vis.data(), gt_vis + ti * static_cast<size_t>(pixels),
                sizeof(std::uint8_t) * static_cast<size_t>(pixels));
    for (Eigen::Index i = 0; i < pixels; ++i)
      require(vis(i) == 0 || vis(i) == 1, "clip: gt_visibility must be binary");
    clip.gt_vis.push_back(std::move(vis));
  }
  return clip;
}

void save_clip(const TrackClip& clip, const std::string& path) {
  clip_to_container(clip).save(path);
}

TrackClip load_clip(const std::string& path) {
  return clip_from_container(TensorContainer::load(path));
}

// --- Prediction files ------------------------------------------------------------

TensorContainer prediction_to_container(const PredictionFile& pred) {
  const int T = pred.frame_count();
  require(T > 0, "prediction_to_container: empty prediction");
  require(pred.width > 0 && pred.height > 0,
          "prediction_to_container: dimensions must be positive");
  require(static_cast<int>(pred.visibility.size()) == T &&
              static_cast<int>(pred.frame_indices.size()) == T,
          "prediction_to_container: per-frame vectors have inconsistent lengths");
  const Eigen::Index pixels =
      static_cast<Eigen::Index>(pred.width) * pred.height;

  std::vector<double> track(static_cast<size_t>(T) * static_cast<size_t>(pixels) * 3);
  std::vector<float> vis(static_cast<size_t>(T) * static_cast<size_t>(pixels));
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<size_t>(t);
    require(pred.track[ti].rows() == pixels && pred.visibility[ti].rows() == pixels,
            "prediction_to_container: frame " + std::to_string(t) +
                " has the wrong pixel count");
    std::memcpy(track.data() + ti * static_cast<size_t>(pixels) * 3,
                pred.track[ti].data(), sizeof(double) * static_cast<size_t>(pixels) * 3);
    for (Eigen::Index i = 0; i < pixels; ++i)
      vis[ti * static_cast<size_t>(pixels) + static_cast<size_t>(i)] =
          static_cast<float>(pred.visibility[ti](i));
  }

  json meta;
  meta["width"] = pred.width;
  meta["height"] = pred.height;
  meta["frame_count"] = T;
  meta["anchor_identity"] = pred.anchor_identity;
  meta["windowed"] = pred.windowed;
  meta["stats_mean"] = vec3_to_json(pred.stats.mean);
  meta["stats_scale"] = pred.stats.scale;
  const std::string mtext = meta.dump(2);

  const auto H = static_cast<std::uint64_t>(pred.height);
  const auto W = static_cast<std::uint64_t>(pred.width);
  const auto Tn = static_cast<std::uint64_t>(T);
  TensorContainer tc;
  tc.add_u8("meta", {mtext.size()}, reinterpret_cast<const std::uint8_t*>(mtext.data()));
  tc.add_f64("pred_track_pointmaps", {Tn, H, W, 3}, track.data());
  tc.add_f32("pred_visibility", {Tn, H, W}, vis.data());
  tc.add_f64("frame_indices", {Tn}, pred.frame_indices.data());
  return tc;
}

PredictionFile prediction_from_container(const TensorContainer& tc) {
  require(tc.has("meta"), "prediction: missing meta entry");
  const TensorEntry& me = tc.get("meta");
  require(me.dtype == Dtype::u8, "prediction: meta must be a u8 entry");
  json meta;
  try {
    meta = json::parse(std::string(reinterpret_cast<const char*>(me.as_u8()),
                                   static_cast<size_t>(me.element_count())));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("prediction: meta is not valid JSON: ") + e.what());
  }

  PredictionFile pred;
  pred.width = meta.at("width").get<int>();
  pred.height = meta.at("height").get<int>();
  pred.anchor_identity = meta.at("anchor_identity").get<bool>();
  pred.windowed = meta.at("windowed").get<bool>();
  read_vec3(meta, "stats_mean", &pred.stats.mean);
  pred.stats.scale = meta.at("stats_scale").get<double>();
  const int T = meta.at("frame_count").get<int>();
  require(pred.width > 0 && pred.height > 0 && T > 0,
          "prediction: meta dimensions must be positive");

  const auto H = static_cast<std::uint64_t>(pred.height);
  const auto W = static_cast<std::uint64_t>(pred.width);
  const auto Tn = static_cast<std::uint64_t>(T);
  require(tc.has("pred_track_pointmaps") && tc.has("pred_visibility") &&
              tc.has("frame_indices"),
          "prediction: missing tensor entry");
  const TensorEntry& te = tc.get("pred_track_pointmaps");
  const TensorEntry& ve = tc.get("pred_visibility");
  const TensorEntry& fe = tc.get("frame_indices");
  require(te.dtype == Dtype::f64 && te.dims == std::vector<std::uint64_t>({Tn, H, W, 3}),
          "prediction: pred_track_pointmaps shape or dtype mismatch");
  require(ve.dtype == Dtype::f32 && ve.dims == std::vector<std::uint64_t>({Tn, H, W}),
          "prediction: pred_visibility shape or dtype mismatch");
  require(fe.dtype == Dtype::f64 && fe.dims == std::vector<std::uint64_t>({Tn}),
          "prediction: frame_indices shape or dtype mismatch");

  const Eigen::Index pixels = static_cast<Eigen::Index>(pred.width) * pred.height;
  const double* track = te.as_f64();
  const float* vis = ve.as_f32();
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<size_t>(t);
    MatX3<double> tk(pixels, 3);
    std::memcpy(tk.data(), track + ti * static_cast<size_t>(pixels) * 3,
                sizeof(double) * static_cast<size_t>(pixels) * 3);
    pred.track.push_back(std::move(tk));

    VecX<double> v(pixels);
    for (Eigen::Index i = 0; i < pixels; ++i)
      v(i) = static_cast<double>(vis[ti * static_cast<size_t>(pixels) + static_cast<size_t>(i)]);
    pred.visibility.push_back(std::move(v));
  }
  pred.frame_indices.assign(fe.as_f64(), fe.as_f64() + T);
  return pred;
}

void save_prediction(const PredictionFile& pred, const std::string& path) {
  prediction_to_container(pred).save(path);
}

PredictionFile load_prediction(const std::string& path) {
  return prediction_from_container(TensorContainer::load(path));
}

}  // namespace tcr3
