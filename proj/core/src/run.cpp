#include "defgrasp/run.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "defgrasp/mesh_gen.hpp"

namespace defgrasp {

using nlohmann::json;

std::string tool_version() {
#ifdef DEFGRASP_VERSION
  return DEFGRASP_VERSION;
#else
  return "unknown";
#endif
}

namespace {

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " needs 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_experiments(const json& j, ExperimentConfig& e) {
  check_keys(j, "experiments",
             {"which", "lin_jerk", "lin_limit", "ang_jerk", "ang_limit", "hold_time",
              "lowering_speed", "lowering_distance", "reorient_speed", "settle_time",
              "accel_settle_time", "loss_debounce", "reorient_angles", "direction_set",
              "reorient_axes", "reorient_control_state", "squeeze_force"});
  if (j.contains("which")) {
    e.pickup = e.reorient = e.lin_acc = e.ang_acc = false;
    for (const auto& w : j.at("which")) {
      const std::string name = w.get<std::string>();
      if (name == "pickup") {
        e.pickup = true;
      } else if (name == "reorient") {
        e.reorient = true;
      } else if (name == "lin_acc") {
        e.lin_acc = true;
      } else if (name == "ang_acc") {
        e.ang_acc = true;
      } else {
        throw ConfigError("unknown experiment '" + name + "'");
      }
    }
  }
  read_opt(j, "lin_jerk", e.lin_jerk);
  read_opt(j, "lin_limit", e.lin_limit);
  read_opt(j, "ang_jerk", e.ang_jerk);
  read_opt(j, "ang_limit", e.ang_limit);
  read_opt(j, "hold_time", e.hold_time);
  read_opt(j, "lowering_speed", e.lowering_speed);
  read_opt(j, "lowering_distance", e.lowering_distance);
  read_opt(j, "reorient_speed", e.reorient_speed);
  read_opt(j, "settle_time", e.settle_time);
  read_opt(j, "accel_settle_time", e.accel_settle_time);
  read_opt(j, "loss_debounce", e.loss_debounce);
  read_opt(j, "reorient_control_state", e.reorient_control_state);
  if (j.contains("reorient_angles")) e.reorient_angles = j.at("reorient_angles").get<std::vector<double>>();
  for (const auto& [key, target] : {std::pair{"direction_set", &e.direction_set},
                                    std::pair{"reorient_axes", &e.reorient_axes}}) {
    if (!j.contains(key)) continue;
    target->clear();
    for (const auto& v : j.at(key)) target->push_back(vec3_from(v, key));
  }
  if (j.contains("squeeze_force") && !j.at("squeeze_force").is_null()) {
    e.squeeze_force = j.at("squeeze_force").get<double>();
  }
}

PrimitiveSpec parse_primitive(const json& j) {
  check_keys(j, "mesh", {"primitive", "size", "radius", "tip_radius", "length", "cells", "cells_long"});
  PrimitiveSpec p;
  p.kind = j.at("primitive").get<std::string>();
  if (j.contains("size")) p.size = vec3_from(j.at("size"), "mesh.size");
  read_opt(j, "radius", p.radius);
  read_opt(j, "tip_radius", p.tip_radius);
  read_opt(j, "length", p.length);
  read_opt(j, "cells", p.cells);
  read_opt(j, "cells_long", p.cells_long);
  return p;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "configuration",
               {"mesh", "material", "simulation", "grasps", "experiments", "output_dir",
                "snapshot_stride", "strain_energy_half_factor"});
    if (!j.contains("mesh")) throw ConfigError("configuration needs 'mesh'");
    const json& mesh = j.at("mesh");
    if (mesh.is_string()) {
      c.mesh_path = resolve(base_dir, mesh.get<std::string>());
    } else {
      c.primitive = parse_primitive(mesh);
    }
    if (j.contains("material")) {
      const json& m = j.at("material");
      check_keys(m, "material", {"density", "youngs_modulus", "poisson", "friction"});
      read_opt(m, "density", c.density);
      read_opt(m, "poisson", c.poisson);
      read_opt(m, "friction", c.friction);
      if (m.contains("youngs_modulus")) {
        const json& e = m.at("youngs_modulus");
        c.youngs_moduli = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
      }
    }
    if (j.contains("simulation")) {
      const json& s = j.at("simulation");
      check_keys(s, "simulation", {"gravity", "dt", "contact_stiffness_scale"});
      read_opt(s, "gravity", c.gravity);
      read_opt(s, "dt", c.dt);
      read_opt(s, "contact_stiffness_scale", c.contact_stiffness_scale);
    }
    if (!j.contains("grasps")) throw ConfigError("configuration needs 'grasps'");
    const json& g = j.at("grasps");
    check_keys(g, "grasps", {"file", "sampler"});
    if (g.contains("file") == g.contains("sampler")) {
      throw ConfigError("grasps needs exactly one of 'file' or 'sampler'");
    }
    if (g.contains("file")) {
      c.grasp_source.file = resolve(base_dir, g.at("file").get<std::string>());
    } else {
      const json& s = g.at("sampler");
      check_keys(s, "grasps.sampler", {"n", "seed"});
      c.grasp_source.sampler_n = s.at("n").get<int>();
      c.grasp_source.sampler_seed = s.value("seed", std::uint64_t{0});
    }
    if (j.contains("experiments")) parse_experiments(j.at("experiments"), c.experiments);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    read_opt(j, "snapshot_stride", c.experiments.snapshot_stride);
    read_opt(j, "strain_energy_half_factor", c.strain_energy_half_factor);
    c.experiments.strain_energy_half_factor = c.strain_energy_half_factor;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path.parent_path());
}

void RunConfig::validate() const {
  if (!mesh_path && !primitive) throw ConfigError("no mesh given");
  if (!(density > 0.0)) throw ConfigError("density must be positive");
  if (youngs_moduli.empty()) throw ConfigError("youngs_modulus list is empty");
  for (double e : youngs_moduli) ElasticParams::from_young_poisson(e, poisson, density);
  if (!(friction > 0.0)) throw ConfigError("friction must be positive");
  if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(contact_stiffness_scale > 0.0)) throw ConfigError("contact_stiffness_scale must be positive");
  if (!grasp_source.file && grasp_source.sampler_n < 0) {
    throw ConfigError("sampler n must be non-negative");
  }
  if (primitive) {
    const std::set<std::string> kinds{"box", "ellipsoid", "cylinder", "cone"};
    if (!kinds.count(primitive->kind)) throw ConfigError("unknown primitive '" + primitive->kind + "'");
  }
  experiments.validate();
}

std::string RunConfig::canonical_json() const {
  json j;
  if (mesh_path) j["mesh"] = mesh_path->generic_string();
  if (primitive) {
    j["mesh"] = {{"primitive", primitive->kind}, {"size", vec3_json(primitive->size)},
                 {"radius", primitive->radius}, {"tip_radius", primitive->tip_radius},
                 {"length", primitive->length}, {"cells", primitive->cells},
                 {"cells_long", primitive->cells_long}};
  }
  j["material"] = {{"density", density}, {"youngs_modulus", youngs_moduli},
                   {"poisson", poisson}, {"friction", friction}};
  j["simulation"] = {{"gravity", gravity}, {"dt", dt}, {"contact_stiffness_scale", contact_stiffness_scale}};
  if (grasp_source.file) {
    j["grasps"] = {{"file", grasp_source.file->generic_string()}};
  } else {
    j["grasps"] = {{"sampler", {{"n", grasp_source.sampler_n}, {"seed", grasp_source.sampler_seed}}}};
  }
  const ExperimentConfig& e = experiments;
  json dirs = json::array();
  for (const Vec3& v : e.direction_set) dirs.push_back(vec3_json(v));
  json axes = json::array();
  for (const Vec3& v : e.reorient_axes) axes.push_back(vec3_json(v));
  j["experiments"] = {
      {"pickup", e.pickup}, {"reorient", e.reorient}, {"lin_acc", e.lin_acc}, {"ang_acc", e.ang_acc},
      {"lin_jerk", e.lin_jerk}, {"lin_limit", e.lin_limit}, {"ang_jerk", e.ang_jerk},
      {"ang_limit", e.ang_limit}, {"hold_time", e.hold_time}, {"lowering_speed", e.lowering_speed},
      {"lowering_distance", e.lowering_distance}, {"reorient_speed", e.reorient_speed},
      {"settle_time", e.settle_time}, {"accel_settle_time", e.accel_settle_time},
      {"loss_debounce", e.loss_debounce}, {"reorient_angles", e.reorient_angles},
      {"direction_set", dirs}, {"reorient_axes", axes},
      {"reorient_control_state", e.reorient_control_state},
      {"squeeze_force", e.squeeze_force ? json(*e.squeeze_force) : json(nullptr)},
      {"snapshot_stride", e.snapshot_stride}};
  j["strain_energy_half_factor"] = strain_energy_half_factor;
  return j.dump();
}

TetMesh build_mesh(const RunConfig& config) {
  if (config.mesh_path) return load_mesh(*config.mesh_path, config.density);
  const PrimitiveSpec& p = *config.primitive;
  if (p.kind == "box") {
    return gen::box(p.size, p.cells, p.cells, p.cells, config.density,
                    Vec3(-0.5 * p.size.x(), -0.5 * p.size.y(), 0.0));
  }
  if (p.kind == "ellipsoid") return gen::ellipsoid(p.size, p.cells, config.density, Vec3(0, 0, p.size.z()));
  if (p.kind == "cylinder") {
    return gen::cylinder(p.radius, p.length, p.cells, p.cells_long, config.density,
                         Vec3(-0.5 * p.length, 0.0, p.radius));
  }
  if (p.kind == "cone") {
    return gen::cone(p.radius, p.tip_radius, p.length, p.cells, p.cells_long, config.density);
  }
  throw MeshError("unknown primitive '" + p.kind + "'");
}

SimulationSettings simulation_settings(const RunConfig& config) {
  SimulationSettings s;
  s.dt = config.dt;
  s.gravity = config.gravity;
  s.contact.stiffness_scale = config.contact_stiffness_scale;
  return s;
}

std::vector<GraspCandidate> load_grasps(const RunConfig& config, const TetMesh& mesh, bool* shortfall) {
  if (shortfall) *shortfall = false;
  if (config.grasp_source.file) return read_grasp_csv(*config.grasp_source.file);
  const SamplerResult r = sample_antipodal(TriSurface::of(mesh), config.grasp_source.sampler_n,
                                           config.friction, config.grasp_source.sampler_seed);
  if (shortfall) *shortfall = r.shortfall;
  return r.grasps;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_pickup_snapshots(const std::filesystem::path& dir, const TetMesh& mesh,
                            const ElasticParams& params, int grasp_id, const PickupResult& r) {
  std::filesystem::create_directories(dir);
  const std::string stem = "grasp_" + std::to_string(grasp_id) + "_pickup";
  for (std::size_t k = 0; k < r.trajectory.snapshots.size(); ++k) {
    const TrajectorySnapshot& s = r.trajectory.snapshots[k];
    const Positions field = deformation_field(mesh.nodes(), s.state.positions).displacement;
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%04zu", k);
    export_vtk(mesh, s.state, field, dir / (stem + "_" + idx + ".vtk"));
  }
  Snapshot snap{mesh.nodes(), mesh.tets(), params, r.final_state.positions, r.final_state.time};
  write_snapshot(snap, dir / (stem + "_final.json"));
}

}  // namespace

GraspEvaluation evaluate_grasp(std::shared_ptr<const TetMesh> mesh, const ElasticParams& params,
                               const RunConfig& config, const GraspCandidate& grasp,
                               const std::optional<std::filesystem::path>& snapshot_dir) {
  const ExperimentConfig& ec = config.experiments;
  GraspEvaluation ev;
  ev.grasp = grasp;
  ev.features.grasp_id = grasp.id;

  std::vector<std::string> selected;
  if (ec.pickup) selected.push_back("pickup");
  if (ec.reorient) selected.push_back("reorient");
  if (ec.lin_acc) selected.push_back("lin_acc");
  if (ec.ang_acc) selected.push_back("ang_acc");

  auto t0 = Clock::now();
  std::optional<SqueezedGrasp> squeezed;
  ExperimentStatus squeeze{"squeeze", false, "", 0.0, std::nullopt};
  try {
    squeezed.emplace(squeeze_grasp(mesh, params, config.friction, grasp, ec, simulation_settings(config)));
    ev.telemetry = squeezed->telemetry;
    squeeze.ok = ev.telemetry.converged;
    squeeze.reason = ev.telemetry.reason;
  } catch (const SimulationError& e) {
    squeeze.reason = e.what();
    ev.simulation_error = true;
  }
  squeeze.wall_seconds = seconds_since(t0);
  ev.status.push_back(squeeze);

  if (squeeze.ok) {
    ev.features = compute_features(*mesh, squeezed->sim.gripper(), squeezed->sim.contact().contacts(),
                                   ev.telemetry, mesh->rest_center_of_mass(), grasp.id);
  } else {
    ev.features.valid = false;
    ev.features.invalid_reason = "squeeze failed: " + squeeze.reason;
  }

  for (const std::string& name : selected) {
    ExperimentStatus st{name, false, "", 0.0, std::nullopt};
    MetricRow row{grasp.id, name, {}};
    t0 = Clock::now();
    if (!squeeze.ok) {
      st.reason = "skipped: squeeze failed";
      if (name == "pickup") row.metrics.pickup_success = false;
    } else {
      try {
        if (name == "pickup") {
          PickupResult r = run_pickup(*squeezed, ec);
          row.metrics = r.metrics;
          st.ok = true;
          if (!*r.metrics.pickup_success) st.reason = "object dropped";
          if (snapshot_dir) write_pickup_snapshots(*snapshot_dir, *mesh, params, grasp.id, r);
        } else if (name == "reorient") {
          const ReorientationResult r = run_reorientation(*squeezed, ec);
          row.metrics.deformation_controllability = r.controllability;
          st.ok = r.pickup_ok;
          st.reason = r.pickup_ok ? (r.failed_states ? std::to_string(r.failed_states) + " states lost contact" : "")
                                  : "pickup at F_slip failed";
        } else {
          const bool linear = name == "lin_acc";
          const AccelerationResult r = linear ? run_linear_acceleration(*squeezed, ec)
                                              : run_angular_acceleration(*squeezed, ec);
          (linear ? row.metrics.linear_instability : row.metrics.angular_instability) = r.mean;
          row.metrics.censored_dirs = r.censored_count;
          st.censored = r.censored_count;
          st.ok = true;
        }
      } catch (const SimulationError& e) {
        st.reason = e.what();
        ev.simulation_error = true;
      }
    }
    st.wall_seconds = seconds_since(t0);
    ev.status.push_back(st);
    ev.metric_rows.push_back(std::move(row));
  }
  return ev;
}

namespace {

std::string dir_label(double e) { return "E_" + format_double(e); }

json manifest_json(const RunConfig& config, double youngs_modulus,
                   const std::vector<GraspEvaluation>& evals, bool sampler_shortfall) {
  json j;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config.hash()));
  j["tool"] = "defgrasp";
  j["version"] = tool_version();
  j["config_hash"] = hash;
  j["youngs_modulus"] = youngs_modulus;
  j["sampler_shortfall"] = sampler_shortfall;
  json grasps = json::array();
  for (const GraspEvaluation& ev : evals) {
    json g;
    g["grasp_id"] = ev.grasp.id;
    json exps = json::array();
    for (const ExperimentStatus& st : ev.status) {
      json e = {{"experiment", st.name}, {"status", st.ok ? "ok" : "failed"}, {"reason", st.reason},
                {"wall_seconds", st.wall_seconds}};
      if (st.censored) e["censored"] = *st.censored;
      exps.push_back(std::move(e));
    }
    g["experiments"] = std::move(exps);
    grasps.push_back(std::move(g));
  }
  j["grasps"] = std::move(grasps);
  return j;
}

}  // namespace

RunSummary run(const RunConfig& config, int jobs, std::ostream* log) {
  config.validate();
  auto mesh = std::make_shared<const TetMesh>(build_mesh(config));
  bool shortfall = false;
  const std::vector<GraspCandidate> grasps = load_grasps(config, *mesh, &shortfall);
  if (shortfall && log) {
    *log << "warning: sampler found " << grasps.size() << " of " << config.grasp_source.sampler_n
         << " grasps\n";
  }
  jobs = std::max(1, jobs);

  RunSummary summary;
  summary.grasps = static_cast<int>(grasps.size());
  const bool sweep = config.youngs_moduli.size() > 1;
  for (double e : config.youngs_moduli) {
    const ElasticParams params = ElasticParams::from_young_poisson(e, config.poisson, config.density);
    const std::filesystem::path out = sweep ? config.output_dir / dir_label(e) : config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(out / "snapshots", ec);
    if (ec) throw IoError("cannot create output directory " + out.string());

    std::vector<GraspEvaluation> evals(grasps.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
      for (std::size_t i = next++; i < grasps.size(); i = next++) {
        try {
          evals[i] = evaluate_grasp(mesh, params, config, grasps[i], out / "snapshots");
        } catch (...) {
          std::lock_guard lock(log_mutex);
          if (!failure) failure = std::current_exception();
          next = grasps.size();
          return;
        }
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << "E=" << format_double(e) << " grasp " << grasps[i].id << ": "
               << (evals[i].telemetry.converged ? "squeezed" : "squeeze failed") << '\n';
        }
      }
    };
    const int n_threads = std::min<int>(jobs, std::max<std::size_t>(1, grasps.size()));
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<FeatureRecord> features;
    std::vector<MetricRow> rows;
    for (const GraspEvaluation& ev : evals) {
      features.push_back(ev.features);
      rows.insert(rows.end(), ev.metric_rows.begin(), ev.metric_rows.end());
      summary.simulation_errors += ev.simulation_error;
    }
    write_file_atomic(out / "features.csv", features_csv(features));
    write_file_atomic(out / "metrics.csv", metrics_csv(rows));
    write_file_atomic(out / "manifest.json", manifest_json(config, e, evals, shortfall).dump(2) + "\n");
    summary.output_dirs.push_back(out);
  }
  return summary;
}

}  // namespace defgrasp
