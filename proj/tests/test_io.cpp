#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "tgrd/histogram.h"
#include "tgrd/rng.h"
#include "tgrd/scene_io.h"

using namespace tgrd;

namespace {

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = tmp(name);
  std::ofstream out(path);
  out << text;
  return path.string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Histogram random_histogram(int h, int w, int f, int d, uint64_t seed) {
  Histogram out(h, w, f, d);
  out.t0 = 4.0;
  out.dt = 0.5;
  out.c = 0.299792458;
  Pcg32 rng(seed, 0);
  for (double& v : out.intensity) v = 10.0 * rng.uniform() - 5.0;
  for (double& v : out.grad) v = 2.0 * rng.uniform() - 1.0;
  return out;
}

}  // namespace

TEST_CASE("slot planes collapse into parameter planes in entry order") {
  Accum a(1, 1, 2, 3);
  a.intensity = {1.0, 2.0};
  a.slots = {1.0, 2.0, 10.0, 20.0, 100.0, 200.0};  // three planes of two bins
  const int slot_param[] = {0, 1, 0};

  const Histogram h = finalize_accum(a, std::span<const int>(slot_param, 3), 2, 0.5, 7.0,
                                     0.25, 0.3);
  CHECK(h.nparams == 2);
  CHECK(h.t0 == 7.0);
  CHECK(h.dt == 0.25);
  CHECK(h.c == 0.3);
  CHECK(h.intensity[0] == doctest::Approx(0.5));
  CHECK(h.intensity[1] == doctest::Approx(1.0));
  CHECK(h.grad_at(0, 0, 0, 0) == doctest::Approx(0.5 * 1 + 0.5 * 100));
  CHECK(h.grad_at(0, 0, 0, 1) == doctest::Approx(0.5 * 2 + 0.5 * 200));
  CHECK(h.grad_at(1, 0, 0, 0) == doctest::Approx(5.0));
  CHECK(h.grad_at(1, 0, 0, 1) == doctest::Approx(10.0));
}

TEST_CASE("histogram container round-trips through float32") {
  const Histogram h = random_histogram(3, 4, 5, 2, 99);
  const auto path = tmp("tgrd_roundtrip.tgrd").string();
  write_tgrd(path, h);
  const Histogram r = read_tgrd(path);

  CHECK(r.height == 3);
  CHECK(r.width == 4);
  CHECK(r.frames == 5);
  CHECK(r.nparams == 2);
  CHECK(r.t0 == h.t0);
  CHECK(r.dt == h.dt);
  CHECK(r.c == h.c);
  for (size_t i = 0; i < h.intensity.size(); ++i)
    CHECK(r.intensity[i] == double(float(h.intensity[i])));
  for (size_t i = 0; i < h.grad.size(); ++i) CHECK(r.grad[i] == double(float(h.grad[i])));

  // Read-write round trip is byte-exact.
  const auto path2 = tmp("tgrd_roundtrip2.tgrd").string();
  write_tgrd(path2, r);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("histogram reader rejects malformed files") {
  const Histogram h = random_histogram(2, 2, 2, 1, 5);
  const auto good = tmp("tgrd_good.tgrd").string();
  write_tgrd(good, h);
  auto bytes = slurp(good);

  auto dump = [&](const std::string& name, const std::vector<char>& b) {
    const auto p = tmp(name).string();
    std::ofstream out(p, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
    return p;
  };

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(read_tgrd(dump("tgrd_badmagic.tgrd", bad_magic)), std::runtime_error);

  auto bad_version = bytes;
  bad_version[4] = 99;
  CHECK_THROWS_AS(read_tgrd(dump("tgrd_badver.tgrd", bad_version)), std::runtime_error);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 7);
  CHECK_THROWS_AS(read_tgrd(dump("tgrd_trunc.tgrd", truncated)), std::runtime_error);

  CHECK_THROWS_AS(read_tgrd("/nonexistent/file.tgrd"), std::runtime_error);
}

TEST_CASE("csv export lists every bin with its gradients") {
  Histogram h(1, 2, 2, 1);
  h.intensity = {1.5, 2.5, 3.5, 4.5};
  for (size_t i = 0; i < h.grad.size(); ++i) h.grad[i] = 0.25 * double(i + 1);
  const auto path = tmp("tgrd_dump.csv").string();
  write_csv(path, h);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "y,x,frame,intensity,grad0");
  int rows = 0;
  double sum_intensity = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    REQUIRE(vals.size() == 5);
    sum_intensity += vals[3];
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(sum_intensity == doctest::Approx(12.0));
}

TEST_CASE("per-frame png export writes decodable files") {
  const Histogram h = random_histogram(6, 5, 3, 1, 42);
  const auto dir = tmp("tgrd_png_out").string();
  write_frame_pngs(dir, "frame", h, -1);
  write_frame_pngs(dir, "grad", h, 0);

  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  for (const std::string prefix : {"frame", "grad"})
    for (int l = 0; l < 3; ++l) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04d.png", prefix.c_str(), l);
      const auto file = std::filesystem::path(dir) / name;
      REQUIRE(std::filesystem::exists(file));
      const auto bytes = slurp(file.string());
      REQUIRE(bytes.size() > 8);
      for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(bytes[i]) == sig[i]);
    }
}

namespace {

const char* kSceneTemplate = R"({
  "light_speed": 0.299792458,
  "camera": {
    "position": [0, 1.5, 2.5],
    "look_at": [0, 0, 0],
    "fov_y": 55,
    "width": 8,
    "height": 6
  },
  "sensor": {
    "response": {"type": "box", "start": 0.0, "end": 2.0, "amplitude": 1.0},
    "frames": {"count": 4, "exposure": 2.0, "start": 8.0}
  },
  "meshes": [
    {
      "name": "floor",
      "quad": {"origin": [-2, 0, -2], "edge_u": [4, 0, 0], "edge_v": [0, 0, 4]},
      "material": {"type": "lambertian", "albedo": 0.7}
    },
    {
      "name": "lamp",
      "quad": {"origin": [-0.5, 2, 2], "edge_u": [0, 0, -1], "edge_v": [1, 0, 0]},
      "emission": {"radiance": 20, "profile": {"type": "delta", "time": 0}}
    },
    {
      "name": "blocker",
      "box": {"min": [-0.3, 0.9, 0.9], "max": [0.3, 1.0, 1.5]},
      "material": {"type": "rough_conductor", "alpha": 0.2, "reflectance": 0.9}
    }
  ],
  "media": [{"eta": 1.0}],
  "parameters": [
    {"param": 0, "target": "mesh", "index": 2, "kind": "translation", "axis": [1, 0, 0]},
    {"param": 1, "target": "emitter", "index": 0, "kind": "rotation", "axis": [0, 1, 0],
     "point": [0, 2, 1.5]},
    {"param": 2, "target": "medium", "index": 0, "kind": "refractive_index"}
  ],
  "estimator": {"spp_interior": 32, "spp_boundary": 16, "max_depth": 3, "seed": 7,
                "dihedral_tol": 0.001}
})";

}  // namespace

TEST_CASE("scene files parse into a complete description") {
  const auto path = write_temp("tgrd_scene.json", kSceneTemplate);
  const SceneDesc d = load_scene(path);

  CHECK(d.camera.width == 8);
  CHECK(d.camera.height == 6);
  CHECK(d.camera.fwd.norm() == doctest::Approx(1.0));
  CHECK(d.camera.fwd.dot(d.camera.right) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.camera.fwd.dot(d.camera.up) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(d.sensor_profile.kind == TemporalProfile::Kind::Box);
  CHECK(d.frames.count == 4);
  CHECK(d.frames.start == 8.0);

  REQUIRE(d.meshes.size() == 3);
  CHECK(d.meshes[0].name == "floor");
  CHECK(d.meshes[0].faces.size() == 2);
  CHECK(d.meshes[2].faces.size() == 12);
  CHECK(d.materials[0].albedo == 0.7);
  CHECK(d.materials[2].kind == Material::Kind::RoughConductor);

  REQUIRE(d.emitters.size() == 1);
  CHECK(d.emitters[0].mesh == 1);
  CHECK(d.emitters[0].radiance == 20.0);
  CHECK(d.emitters[0].profile.kind == TemporalProfile::Kind::Delta);

  REQUIRE(d.bindings.size() == 3);
  CHECK(d.param_count == 3);
  CHECK(d.bindings[0].kind == Binding::Kind::Translation);
  CHECK(d.bindings[1].target == Binding::Target::Emitter);
  CHECK(d.bindings[1].axis.norm() == doctest::Approx(1.0));  // rotation axes normalized
  CHECK(d.bindings[2].kind == Binding::Kind::RefractiveIndex);

  CHECK(d.est.spp_interior == 32);
  CHECK(d.est.seed == 7);
  CHECK(d.est.dihedral_tol == 0.001);
}

TEST_CASE("scene meshes can come from obj files next to the scene") {
  write_temp("tgrd_tri.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const auto path = write_temp("tgrd_scene_obj.json", R"({
    "camera": {"position": [0, 0, 2], "look_at": [0, 0, 0], "width": 4, "height": 4},
    "sensor": {"response": {"type": "box", "start": 0, "end": 10, "amplitude": 1},
               "frames": {"count": 1, "exposure": 10}},
    "meshes": [
      {"obj": "tgrd_tri.obj",
       "emission": {"radiance": 5, "profile": {"type": "delta", "time": 0}}}
    ]
  })");
  const SceneDesc d = load_scene(path);
  REQUIRE(d.meshes.size() == 1);
  CHECK(d.meshes[0].vertices.size() == 3);
  CHECK(d.emitters.size() == 1);
}

TEST_CASE("scene schema violations are rejected with the offending path") {
  auto reject = [&](const std::string& name, const std::string& text,
                    const std::string& needle) {
    const auto path = write_temp(name, text);
    try {
      load_scene(path);
      FAIL_CHECK(name << ": expected a parse failure mentioning '" << needle << "'");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  const std::string base = R"({
    "camera": {"position": [0, 0, 2], "look_at": [0, 0, 0], "width": 4, "height": 4},
    "sensor": {"response": {"type": "box", "start": 0, "end": 10, "amplitude": 1},
               "frames": {"count": 1, "exposure": 10}},
    "meshes": [
      {"quad": {"origin": [-1, -1, 0], "edge_u": [2, 0, 0], "edge_v": [0, 2, 0]},
       "emission": {"radiance": 5, "profile": {"type": "delta", "time": 0}}}
    ]$EXTRA
  })";
  auto with = [&](const std::string& extra) {
    std::string s = base;
    return s.replace(s.find("$EXTRA"), 6, extra);
  };

  reject("tgrd_bad1.json", with(", \"mystery\": 1"), "mystery");
  reject("tgrd_bad2.json",
         with(", \"parameters\": [{\"param\": 0, \"target\": \"mesh\", \"index\": 3, "
              "\"kind\": \"translation\", \"axis\": [1, 0, 0]}]"),
         "index");
  reject("tgrd_bad3.json",
         with(", \"parameters\": [{\"param\": 1, \"target\": \"mesh\", \"index\": 0, "
              "\"kind\": \"translation\", \"axis\": [1, 0, 0]}]"),
         "contiguous");
  reject("tgrd_bad4.json",
         with(", \"parameters\": [{\"param\": 0, \"target\": \"medium\", \"index\": 0, "
              "\"kind\": \"translation\", \"axis\": [1, 0, 0]}]"),
         "refractive_index");

  std::string delta_sensor = with("");
  const std::string box_resp = "\"type\": \"box\", \"start\": 0, \"end\": 10, \"amplitude\": 1";
  delta_sensor.replace(delta_sensor.find(box_resp), box_resp.size(),
                       "\"type\": \"delta\", \"time\": 0");
  reject("tgrd_bad5.json", delta_sensor, "sensor.response");

  std::string no_emit = with("");
  no_emit.replace(no_emit.find("\"emission\""), 10, "\"not_emission\"");
  reject("tgrd_bad6.json", no_emit, "not_emission");

  reject("tgrd_bad7.json", "{ not json", "");
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), std::runtime_error);
}
