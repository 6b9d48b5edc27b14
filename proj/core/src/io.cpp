#include "defgrasp/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace defgrasp {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, bool>) {
    return *v ? "1" : "0";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(*v);
  } else {
    return format_double(*v);
  }
}

std::string schema_line() { return "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\n"; }

}  // namespace

std::string features_csv(const std::vector<FeatureRecord>& rows) {
  std::string out = schema_line();
  out += "grasp_id,pure_dist,perp_dist,num_contacts,edge_dist,squeeze_dist,gripper_sep,grav_align,"
         "contact_area_supplementary\n";
  for (const FeatureRecord& r : rows) {
    out += std::to_string(r.grasp_id);
    for (double v : {r.pure_dist, r.perp_dist, r.num_contacts, r.edge_dist, r.squeeze_dist,
                     r.gripper_sep, r.grav_align, r.contact_area}) {
      out += ',';
      if (r.valid) out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = schema_line();
  out += "grasp_id,experiment,pickup_success,max_stress,max_deformation,strain_energy,"
         "linear_instability,angular_instability,deform_controllability,censored_dirs\n";
  for (const MetricRow& row : rows) {
    const MetricRecord& m = row.metrics;
    out += std::to_string(row.grasp_id) + ',' + row.experiment + ',' + cell(m.pickup_success) + ',' +
           cell(m.max_stress) + ',' + cell(m.max_deformation) + ',' + cell(m.strain_energy) + ',' +
           cell(m.linear_instability) + ',' + cell(m.angular_instability) + ',' +
           cell(m.deformation_controllability) + ',' + cell(m.censored_dirs) + '\n';
  }
  return out;
}

std::string vtk_text(const TetMesh& mesh, const SimState& state, const Positions& deformation) {
  const int nn = mesh.num_nodes();
  const int ne = mesh.num_tets();
  if (state.positions.cols() != nn || deformation.cols() != nn ||
      static_cast<int>(state.elem_stress.size()) != ne) {
    throw Error("VTK export: state does not match the mesh");
  }
  std::ostringstream out;
  out.precision(17);
  out << "# vtk DataFile Version 3.0\n"
      << "defgrasp state t=" << format_double(state.time) << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << nn << " double\n";
  for (int i = 0; i < nn; ++i) {
    const Vec3 p = state.positions.col(i);
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  out << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (const Tet& t : mesh.tets()) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << "10\n";
  out << "CELL_DATA " << ne << "\nSCALARS von_mises double 1\nLOOKUP_TABLE default\n";
  for (const Mat3& s : state.elem_stress) out << von_mises(s) << '\n';
  out << "POINT_DATA " << nn << "\nVECTORS deformation double\n";
  for (int i = 0; i < nn; ++i) {
    const Vec3 d = deformation.col(i);
    out << d.x() << ' ' << d.y() << ' ' << d.z() << '\n';
  }
  return out.str();
}

void export_vtk(const TetMesh& mesh, const SimState& state, const Positions& deformation,
                const std::filesystem::path& path) {
  write_file_atomic(path, vtk_text(mesh, state, deformation));
}

namespace {

nlohmann::json positions_json(const Positions& p) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < p.cols(); ++i) a.push_back({p(0, i), p(1, i), p(2, i)});
  return a;
}

Positions positions_from(const nlohmann::json& a, const char* what) {
  if (!a.is_array()) throw ConfigError(std::string("snapshot: '") + what + "' must be an array");
  Positions p(3, static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& row = a[i];
    if (!row.is_array() || row.size() != 3) {
      throw ConfigError(std::string("snapshot: '") + what + "' entries must have 3 numbers");
    }
    for (int k = 0; k < 3; ++k) p(k, static_cast<Eigen::Index>(i)) = row[k].get<double>();
  }
  return p;
}

}  // namespace

void write_snapshot(const Snapshot& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "defgrasp-snapshot";
  j["version"] = 1;
  j["time"] = s.time;
  j["material"] = {{"youngs_modulus", s.params.youngs_modulus},
                   {"poisson", s.params.poisson_ratio},
                   {"density", s.params.density}};
  j["rest_nodes"] = positions_json(s.rest_nodes);
  nlohmann::json tets = nlohmann::json::array();
  for (const Tet& t : s.tets) tets.push_back({t[0], t[1], t[2], t[3]});
  j["tets"] = std::move(tets);
  j["positions"] = positions_json(s.positions);
  write_file_atomic(path, j.dump() + "\n");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Snapshot s;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", std::string()) != "defgrasp-snapshot") {
      throw ConfigError("not a defgrasp snapshot: " + path.string());
    }
    s.time = j.value("time", 0.0);
    const auto& m = j.at("material");
    s.params = ElasticParams::from_young_poisson(m.at("youngs_modulus").get<double>(),
                                                 m.at("poisson").get<double>(),
                                                 m.at("density").get<double>());
    s.rest_nodes = positions_from(j.at("rest_nodes"), "rest_nodes");
    s.positions = positions_from(j.at("positions"), "positions");
    for (const auto& t : j.at("tets")) {
      if (!t.is_array() || t.size() != 4) throw ConfigError("snapshot: tets need 4 indices");
      s.tets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), t[3].get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("snapshot " + path.string() + ": " + e.what());
  }
  if (s.positions.cols() != s.rest_nodes.cols()) {
    throw ConfigError("snapshot: positions and rest nodes differ in count");
  }
  return s;
}

void snapshot_to_vtk(const Snapshot& snapshot, const std::filesystem::path& path) {
  const TetMesh mesh(snapshot.rest_nodes, snapshot.tets, snapshot.params.density);
  const ElementBasis basis = ElementBasis::build(mesh);
  SimState state = SimState::at_rest(mesh);
  state.positions = snapshot.positions;
  state.time = snapshot.time;
  update_element_fields(mesh, basis, snapshot.params, state);
  const DeformationField field = deformation_field(mesh.nodes(), state.positions);
  export_vtk(mesh, state, field.displacement, path);
}

}  // namespace defgrasp
