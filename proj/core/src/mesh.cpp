#include "labvar/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

namespace labvar {

namespace {

std::string msg(const std::string& what) { return "mesh: " + what; }

}  // namespace

LabelMesh::LabelMesh(std::vector<std::array<double, 2>> vertices,
                     std::vector<MeshTriangle> triangles, double La, double Lb,
                     bool periodic)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      La_(La),
      Lb_(Lb),
      periodic_(periodic) {
  if (!(La_ > 0.0) || !(Lb_ > 0.0)) {
    throw MeshError(msg("domain lengths must be positive"));
  }
  if (vertices_.empty() || triangles_.empty()) {
    throw MeshError(msg("mesh needs at least one vertex and one triangle"));
  }
  const int nv = n_vertices();
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    MeshTriangle& tri = triangles_[t];
    for (int c = 0; c < 3; ++c) {
      if (tri.v[c] < 0 || tri.v[c] >= nv) {
        throw MeshError(msg("triangle " + std::to_string(t) +
                            " references vertex " + std::to_string(tri.v[c]) +
                            " out of range"));
      }
      if (!periodic_ && (tri.shift[c][0] != 0 || tri.shift[c][1] != 0)) {
        throw MeshError(msg("triangle " + std::to_string(t) +
                            " has a periodic shift on a non-periodic mesh"));
      }
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2]) {
      throw MeshError(msg("triangle " + std::to_string(t) +
                          " repeats a vertex; periodic meshes need at least "
                          "two cells per direction"));
    }
    // Canonicalize the periodic representative: smallest shift per axis is 0.
    for (int axis = 0; axis < 2; ++axis) {
      int lo = std::min({tri.shift[0][axis], tri.shift[1][axis],
                         tri.shift[2][axis]});
      for (int c = 0; c < 3; ++c) tri.shift[c][axis] -= lo;
    }
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    if (!(area(static_cast<int>(t)) > 0.0)) {
      throw MeshError(msg("triangle " + std::to_string(t) +
                          " has nonpositive area"));
    }
  }
  build_faces();
  validate();
}

std::array<std::array<double, 2>, 3> LabelMesh::corner_coords(int t) const {
  const MeshTriangle& tri = triangles_[t];
  std::array<std::array<double, 2>, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k][0] = vertices_[tri.v[k]][0] + tri.shift[k][0] * La_;
    c[k][1] = vertices_[tri.v[k]][1] + tri.shift[k][1] * Lb_;
  }
  return c;
}

double LabelMesh::area(int t) const {
  auto c = corner_coords(t);
  return 0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) -
                (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]));
}

double LabelMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < n_triangles(); ++t) s += area(t);
  return s;
}

double LabelMesh::min_edge_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const MeshFace& f : faces_) m = std::min(m, f.length);
  return m;
}

double LabelMesh::max_edge_length() const {
  double m = 0.0;
  for (const MeshFace& f : faces_) m = std::max(m, f.length);
  return m;
}

void LabelMesh::build_faces() {
  faces_.clear();
  interior_faces_.clear();
  boundary_faces_.clear();
  face_of_.assign(3 * triangles_.size(), -1);
  // Translation-invariant edge key: vertex pair ordered by index plus the
  // shift difference (shift of the larger-index corner minus the smaller's).
  std::map<std::tuple<int, int, int, int>, int> index;
  for (int t = 0; t < n_triangles(); ++t) {
    const MeshTriangle& tri = triangles_[t];
    auto corners = corner_coords(t);
    for (int e = 0; e < 3; ++e) {
      const int c0 = e;
      const int c1 = (e + 1) % 3;
      const int va = tri.v[c0];
      const int vb = tri.v[c1];
      std::tuple<int, int, int, int> key;
      if (va < vb) {
        key = {va, vb, tri.shift[c1][0] - tri.shift[c0][0],
               tri.shift[c1][1] - tri.shift[c0][1]};
      } else {
        key = {vb, va, tri.shift[c0][0] - tri.shift[c1][0],
               tri.shift[c0][1] - tri.shift[c1][1]};
      }
      auto it = index.find(key);
      if (it == index.end()) {
        MeshFace f;
        f.side[0] = {t, e};
        f.n_sides = 1;
        f.p0 = corners[c0];
        f.p1 = corners[c1];
        const double dx = f.p1[0] - f.p0[0];
        const double dy = f.p1[1] - f.p0[1];
        f.length = std::hypot(dx, dy);
        if (!(f.length > 0.0)) {
          throw MeshError(msg("degenerate edge on triangle " +
                              std::to_string(t)));
        }
        f.tangent = {dx / f.length, dy / f.length};
        // Counterclockwise triangle boundary: outward normal is the tangent
        // rotated clockwise.
        f.normal = {f.tangent[1], -f.tangent[0]};
        index.emplace(key, static_cast<int>(faces_.size()));
        face_of_[3 * t + e] = static_cast<int>(faces_.size());
        faces_.push_back(f);
      } else {
        MeshFace& f = faces_[it->second];
        if (f.n_sides != 1) {
          throw MeshError(msg("face shared by more than two triangles"));
        }
        f.side[1] = {t, e};
        f.n_sides = 2;
        face_of_[3 * t + e] = it->second;
        // Conformity: side 1 must traverse the same segment backwards, up to
        // a lattice translation between the two triangle frames.
        const std::array<double, 2> q0 = corners[c0];
        const std::array<double, 2> q1 = corners[c1];
        const double lam_a = q0[0] - f.p1[0];
        const double lam_b = q0[1] - f.p1[1];
        const double tol = 1e-9 * std::max({1.0, La_, Lb_});
        if (std::abs(q1[0] - f.p0[0] - lam_a) > tol ||
            std::abs(q1[1] - f.p0[1] - lam_b) > tol) {
          throw MeshError(msg("non-conforming face between triangles " +
                              std::to_string(f.side[0].tri) + " and " +
                              std::to_string(t)));
        }
        const double ka = lam_a / La_;
        const double kb = lam_b / Lb_;
        if (std::abs(ka - std::round(ka)) > 1e-9 ||
            std::abs(kb - std::round(kb)) > 1e-9 ||
            (!periodic_ && (std::round(ka) != 0.0 || std::round(kb) != 0.0))) {
          throw MeshError(msg("face frames differ by a non-lattice offset "
                              "between triangles " +
                              std::to_string(f.side[0].tri) + " and " +
                              std::to_string(t)));
        }
      }
    }
  }
  for (int f = 0; f < n_faces(); ++f) {
    (faces_[f].n_sides == 2 ? interior_faces_ : boundary_faces_).push_back(f);
  }
}

void LabelMesh::validate() const {
  if (periodic_ && !boundary_faces_.empty()) {
    throw MeshError(msg("periodic mesh has " +
                        std::to_string(boundary_faces_.size()) +
                        " unmatched boundary faces"));
  }
  const int euler = n_vertices() - n_faces() + n_triangles();
  const int expected = periodic_ ? 0 : 1;
  if (euler != expected) {
    throw MeshError(msg("Euler characteristic " + std::to_string(euler) +
                        " does not match the " +
                        (periodic_ ? std::string("periodic torus (0)")
                                   : std::string("bounded rectangle (1)"))));
  }
}

LabelMesh structured_rect_mesh(double Lx, double Ly, int nx, int ny,
                               bool periodic) {
  if (!(Lx > 0.0) || !(Ly > 0.0)) {
    throw MeshError(msg("domain lengths must be positive"));
  }
  if (nx < 1 || ny < 1) {
    throw MeshError(msg("cell counts must be at least 1"));
  }
  if (periodic && (nx < 2 || ny < 2)) {
    throw MeshError(msg("periodic meshes need at least two cells per "
                        "direction"));
  }
  const double dx = Lx / nx;
  const double dy = Ly / ny;
  std::vector<std::array<double, 2>> verts;
  std::vector<MeshTriangle> tris;
  const int va = periodic ? nx : nx + 1;
  const int vb = periodic ? ny : ny + 1;
  verts.reserve(static_cast<std::size_t>(va) * vb);
  for (int j = 0; j < vb; ++j) {
    for (int i = 0; i < va; ++i) {
      verts.push_back({i * dx, j * dy});
    }
  }
  struct Corner {
    int v;
    int sa;
    int sb;
  };
  auto corner = [&](int i, int j) -> Corner {
    if (!periodic) return {j * va + i, 0, 0};
    const int sa = (i == nx) ? 1 : 0;
    const int sb = (j == ny) ? 1 : 0;
    return {(j % ny) * nx + (i % nx), sa, sb};
  };
  auto add = [&](Corner c0, Corner c1, Corner c2) {
    MeshTriangle t;
    t.v = {c0.v, c1.v, c2.v};
    t.shift = {{{c0.sa, c0.sb}, {c1.sa, c1.sb}, {c2.sa, c2.sb}}};
    tris.push_back(t);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Corner ll = corner(i, j);
      const Corner lr = corner(i + 1, j);
      const Corner ur = corner(i + 1, j + 1);
      const Corner ul = corner(i, j + 1);
      add(ll, lr, ur);
      add(ll, ur, ul);
    }
  }
  return LabelMesh(std::move(verts), std::move(tris), Lx, Ly, periodic);
}

LabelMesh perturb_mesh(const LabelMesh& m, double amplitude,
                       std::uint64_t seed) {
  if (amplitude < 0.0) {
    throw MeshError(msg("perturbation amplitude must be nonnegative"));
  }
  std::vector<std::array<double, 2>> verts;
  verts.reserve(m.n_vertices());
  for (int v = 0; v < m.n_vertices(); ++v) verts.push_back(m.vertex(v));
  if (amplitude > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-amplitude, amplitude);
    const double tol = 1e-12 * std::max({1.0, m.La(), m.Lb()});
    for (auto& p : verts) {
      if (!m.periodic()) {
        const bool on_bnd = p[0] < tol || p[0] > m.La() - tol || p[1] < tol ||
                            p[1] > m.Lb() - tol;
        if (on_bnd) continue;
      }
      p[0] += jitter(rng);
      p[1] += jitter(rng);
    }
  }
  std::vector<MeshTriangle> tris;
  tris.reserve(m.n_triangles());
  for (int t = 0; t < m.n_triangles(); ++t) tris.push_back(m.triangle(t));
  return LabelMesh(std::move(verts), std::move(tris), m.La(), m.Lb(),
                   m.periodic());
}

void save_mesh(const LabelMesh& m, std::ostream& out) {
  out << "vertices " << m.n_vertices() << " triangles " << m.n_triangles()
      << " periodic " << (m.periodic() ? 1 : 0) << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (m.periodic()) {
    out << "lengths " << m.La() << " " << m.Lb() << "\n";
  }
  for (int v = 0; v < m.n_vertices(); ++v) {
    out << m.vertex(v)[0] << " " << m.vertex(v)[1] << "\n";
  }
  for (int t = 0; t < m.n_triangles(); ++t) {
    const MeshTriangle& tri = m.triangle(t);
    out << tri.v[0] << " " << tri.v[1] << " " << tri.v[2];
    if (m.periodic()) {
      for (int c = 0; c < 3; ++c) {
        out << " " << tri.shift[c][0] << " " << tri.shift[c][1];
      }
    }
    out << "\n";
  }
  if (!out) throw MeshError(msg("failed to write mesh stream"));
}

void save_mesh(const LabelMesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError(msg("cannot open '" + path + "' for writing"));
  save_mesh(m, out);
}

namespace {

[[noreturn]] void load_fail(int line, const std::string& what) {
  throw MeshError("mesh file line " + std::to_string(line) + ": " + what);
}

std::string next_content_line(std::istream& in, int& line) {
  std::string s;
  while (std::getline(in, s)) {
    ++line;
    const auto pos = s.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && s[pos] != '#') return s;
  }
  return {};
}

}  // namespace

LabelMesh load_mesh(std::istream& in) {
  int line = 0;
  std::string header = next_content_line(in, line);
  if (header.empty()) load_fail(line, "missing header");
  std::istringstream hs(header);
  std::string kw_v, kw_t, kw_p;
  long long nv = 0, nt = 0;
  int per = 0;
  if (!(hs >> kw_v >> nv >> kw_t >> nt >> kw_p >> per) || kw_v != "vertices" ||
      kw_t != "triangles" || kw_p != "periodic" || (per != 0 && per != 1)) {
    load_fail(line, "expected 'vertices N triangles M periodic {0,1}'");
  }
  if (nv < 1 || nt < 1 || nv > 50'000'000 || nt > 50'000'000) {
    load_fail(line, "unreasonable vertex or triangle count");
  }
  const bool periodic = per == 1;
  double La = 0.0, Lb = 0.0;
  std::string body = next_content_line(in, line);
  if (periodic) {
    std::istringstream ls(body);
    std::string kw;
    if (!(ls >> kw) || kw != "lengths" || !(ls >> La >> Lb)) {
      load_fail(line, "periodic mesh requires 'lengths La Lb' after the "
                      "header");
    }
    body = next_content_line(in, line);
  }
  std::vector<std::array<double, 2>> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long long v = 0; v < nv; ++v) {
    if (body.empty()) load_fail(line, "unexpected end of vertex list");
    std::istringstream vs(body);
    double a = 0.0, b = 0.0;
    if (!(vs >> a >> b)) load_fail(line, "expected two vertex coordinates");
    verts.push_back({a, b});
    body = next_content_line(in, line);
  }
  if (!periodic) {
    for (const auto& p : verts) {
      La = std::max(La, p[0]);
      Lb = std::max(Lb, p[1]);
    }
    if (!(La > 0.0)) La = 1.0;
    if (!(Lb > 0.0)) Lb = 1.0;
  }
  std::vector<MeshTriangle> tris;
  tris.reserve(static_cast<std::size_t>(nt));
  for (long long t = 0; t < nt; ++t) {
    if (body.empty()) load_fail(line, "unexpected end of triangle list");
    std::istringstream ts(body);
    std::vector<long long> nums;
    long long x = 0;
    while (ts >> x) nums.push_back(x);
    MeshTriangle tri;
    if (nums.size() == 3 || (periodic && nums.size() == 9)) {
      for (int c = 0; c < 3; ++c) {
        if (nums[c] < 0 || nums[c] >= nv) {
          load_fail(line, "vertex index out of range");
        }
        tri.v[c] = static_cast<int>(nums[c]);
      }
      if (nums.size() == 9) {
        for (int c = 0; c < 3; ++c) {
          tri.shift[c][0] = static_cast<int>(nums[3 + 2 * c]);
          tri.shift[c][1] = static_cast<int>(nums[4 + 2 * c]);
        }
      } else if (periodic) {
        // Minimal-image recovery: anchor corner 0 and wrap the other corners
        // to within half a period of it.
        for (int c = 1; c < 3; ++c) {
          tri.shift[c][0] = static_cast<int>(std::lround(
              (verts[tri.v[0]][0] - verts[tri.v[c]][0]) / La));
          tri.shift[c][1] = static_cast<int>(std::lround(
              (verts[tri.v[0]][1] - verts[tri.v[c]][1]) / Lb));
        }
      }
    } else {
      load_fail(line, "expected 3 vertex indices (optionally 6 shift "
                      "integers on a periodic mesh)");
    }
    tris.push_back(tri);
    body = next_content_line(in, line);
  }
  try {
    return LabelMesh(std::move(verts), std::move(tris), La, Lb, periodic);
  } catch (const MeshError& e) {
    throw MeshError(std::string(e.what()) + " (while loading mesh file)");
  }
}

LabelMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(msg("cannot open '" + path + "' for reading"));
  return load_mesh(in);
}

}  // namespace labvar
