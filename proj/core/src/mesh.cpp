#include "defgrasp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace defgrasp {

namespace {

// Local faces of a tet whose (b-a)x(c-a) normal points away from the opposite vertex
// when the tet has positive orientation.
constexpr std::array<std::array<int, 3>, 4> kTetFaces = {{
    {1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1},
}};

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

double signed_tet_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  Mat3 d;
  d << p1 - p0, p2 - p0, p3 - p0;
  return d.determinant() / 6.0;
}

double element_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  return std::abs(signed_tet_volume(p0, p1, p2, p3));
}

std::vector<Tri> extract_surface(const Positions& nodes, const std::vector<Tet>& tets) {
  struct Face {
    std::array<int, 3> key;
    Tri oriented;
  };
  std::vector<Face> faces;
  faces.reserve(tets.size() * 4);
  for (const Tet& t : tets) {
    const bool positive =
        signed_tet_volume(nodes.col(t[0]), nodes.col(t[1]), nodes.col(t[2]), nodes.col(t[3])) > 0;
    for (const auto& lf : kTetFaces) {
      Tri tri{t[lf[0]], t[lf[1]], t[lf[2]]};
      if (!positive) std::swap(tri[1], tri[2]);
      std::array<int, 3> key = tri;
      std::sort(key.begin(), key.end());
      faces.push_back({key, tri});
    }
  }
  std::sort(faces.begin(), faces.end(),
            [](const Face& a, const Face& b) { return a.key < b.key; });

  std::vector<Tri> surface;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i + 1;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i == 1) surface.push_back(faces[i].oriented);
    i = j;
  }
  return surface;
}

TetMesh::TetMesh(Positions nodes, std::vector<Tet> tets, double density)
    : nodes_(std::move(nodes)), tets_(std::move(tets)), density_(density) {
  const int n = num_nodes();
  if (n == 0 || tets_.empty()) throw MeshError("mesh is empty");
  if (!(density_ > 0.0)) throw MeshError("density must be positive");
  if (!nodes_.allFinite()) throw MeshError("mesh has non-finite node coordinates");

  std::vector<bool> referenced(n, false);
  DisjointSet components(n);
  elem_volumes_.resize(tets_.size());
  for (std::size_t e = 0; e < tets_.size(); ++e) {
    const Tet& t = tets_[e];
    for (int v : t) {
      if (v < 0 || v >= n) {
        throw MeshError("tet " + std::to_string(e) + " references node " + std::to_string(v) +
                        " out of range [0, " + std::to_string(n) + ")");
      }
      referenced[v] = true;
    }
    const double vol =
        signed_tet_volume(node(t[0]), node(t[1]), node(t[2]), node(t[3]));
    if (!(vol > 0.0)) {
      throw MeshError("tet " + std::to_string(e) + " is inverted or degenerate (volume " +
                      std::to_string(vol) + ")");
    }
    elem_volumes_[e] = vol;
    for (int k = 1; k < 4; ++k) components.unite(t[0], t[k]);
  }
  for (int i = 0; i < n; ++i) {
    if (!referenced[i]) throw MeshError("node " + std::to_string(i) + " is not used by any tet");
  }
  const int root = components.find(0);
  for (int i = 1; i < n; ++i) {
    if (components.find(i) != root) throw MeshError("mesh is not a single connected component");
  }

  node_masses_.assign(n, 0.0);
  for (std::size_t e = 0; e < tets_.size(); ++e) {
    const double quarter = 0.25 * density_ * elem_volumes_[e];
    for (int v : tets_[e]) node_masses_[v] += quarter;
  }
  total_volume_ = std::accumulate(elem_volumes_.begin(), elem_volumes_.end(), 0.0);
  total_mass_ = std::accumulate(node_masses_.begin(), node_masses_.end(), 0.0);

  surface_tris_ = extract_surface(nodes_, tets_);
  std::vector<bool> on_surface(n, false);
  double edge_sum = 0.0;
  for (const Tri& tri : surface_tris_) {
    for (int k = 0; k < 3; ++k) {
      on_surface[tri[k]] = true;
      edge_sum += (node(tri[k]) - node(tri[(k + 1) % 3])).norm();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (on_surface[i]) surface_nodes_.push_back(i);
  }
  mean_surface_edge_ = surface_tris_.empty() ? 0.0 : edge_sum / (3.0 * surface_tris_.size());
}

Vec3 TetMesh::rest_center_of_mass() const {
  Vec3 com = Vec3::Zero();
  for (int i = 0; i < num_nodes(); ++i) com += node_masses_[i] * node(i);
  return com / total_mass_;
}

namespace {

std::string next_content_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return line;
  }
  throw MeshError("unexpected end of file");
}

template <typename T>
T parse_value(std::istringstream& ss, const char* what) {
  T value;
  if (!(ss >> value)) throw MeshError(std::string("malformed ") + what);
  return value;
}

}  // namespace

TetMesh parse_tet(std::istream& in, double density) {
  std::istringstream header(next_content_line(in));
  std::string magic;
  header >> magic;
  if (magic != "tet") throw MeshError("expected 'tet <n_nodes> <n_tets>' header");
  const long n_nodes = parse_value<long>(header, "node count");
  const long n_tets = parse_value<long>(header, "tet count");
  if (n_nodes < 0 || n_tets < 0) throw MeshError("negative counts in header");

  Positions nodes(3, n_nodes);
  for (long i = 0; i < n_nodes; ++i) {
    std::istringstream ss(next_content_line(in));
    for (int k = 0; k < 3; ++k) nodes(k, i) = parse_value<double>(ss, "node coordinate");
  }
  std::vector<Tet> tets(n_tets);
  for (long e = 0; e < n_tets; ++e) {
    std::istringstream ss(next_content_line(in));
    for (int k = 0; k < 4; ++k) tets[e][k] = parse_value<int>(ss, "tet index");
  }
  return TetMesh(std::move(nodes), std::move(tets), density);
}

TetMesh parse_gmsh(std::istream& in, double density) {
  std::string line;
  bool have_format = false;
  std::vector<Vec3> coords;
  std::unordered_map<long, int> id_to_index;
  std::vector<std::array<long, 4>> raw_tets;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "$MeshFormat") {
      std::istringstream ss(next_content_line(in));
      const double version = parse_value<double>(ss, "format version");
      const int file_type = parse_value<int>(ss, "file type");
      if (version < 2.0 || version >= 3.0) {
        throw MeshError("unsupported Gmsh version " + std::to_string(version) + " (need 2.x)");
      }
      if (file_type != 0) throw MeshError("binary Gmsh files are not supported");
      have_format = true;
    } else if (line == "$Nodes") {
      std::istringstream cs(next_content_line(in));
      const long count = parse_value<long>(cs, "node count");
      coords.reserve(count);
      for (long i = 0; i < count; ++i) {
        std::istringstream ss(next_content_line(in));
        const long id = parse_value<long>(ss, "node id");
        Vec3 p;
        for (int k = 0; k < 3; ++k) p[k] = parse_value<double>(ss, "node coordinate");
        if (!id_to_index.emplace(id, static_cast<int>(coords.size())).second) {
          throw MeshError("duplicate node id " + std::to_string(id));
        }
        coords.push_back(p);
      }
    } else if (line == "$Elements") {
      std::istringstream cs(next_content_line(in));
      const long count = parse_value<long>(cs, "element count");
      for (long i = 0; i < count; ++i) {
        std::istringstream ss(next_content_line(in));
        parse_value<long>(ss, "element id");
        const int type = parse_value<int>(ss, "element type");
        const int ntags = parse_value<int>(ss, "tag count");
        for (int t = 0; t < ntags; ++t) parse_value<long>(ss, "tag");
        if (type != 4) continue;
        std::array<long, 4> ids;
        for (auto& id : ids) id = parse_value<long>(ss, "element node");
        raw_tets.push_back(ids);
      }
    }
  }
  if (!have_format) throw MeshError("missing $MeshFormat section");

  Positions nodes(3, static_cast<long>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) nodes.col(static_cast<long>(i)) = coords[i];
  std::vector<Tet> tets;
  tets.reserve(raw_tets.size());
  for (const auto& ids : raw_tets) {
    Tet t;
    for (int k = 0; k < 4; ++k) {
      auto it = id_to_index.find(ids[k]);
      if (it == id_to_index.end()) {
        throw MeshError("element references unknown node id " + std::to_string(ids[k]));
      }
      t[k] = it->second;
    }
    tets.push_back(t);
  }
  return TetMesh(std::move(nodes), std::move(tets), density);
}

TetMesh load_mesh(const std::filesystem::path& path, double density) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  const std::string ext = path.extension().string();
  try {
    if (ext == ".msh") return parse_gmsh(in, density);
    if (ext == ".tet") return parse_tet(in, density);
  } catch (const MeshError& e) {
    throw MeshError(path.string() + ": " + e.what());
  }
  throw MeshError("unknown mesh extension '" + ext + "' (expected .msh or .tet)");
}

void save_tet(const TetMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "tet " << mesh.num_nodes() << ' ' << mesh.num_tets() << '\n';
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    out << mesh.nodes()(0, i) << ' ' << mesh.nodes()(1, i) << ' ' << mesh.nodes()(2, i) << '\n';
  }
  for (const Tet& t : mesh.tets()) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace defgrasp
