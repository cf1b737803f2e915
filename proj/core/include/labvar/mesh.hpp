#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace labvar {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Triangle of a label-space mesh.  `v` are vertex indices; `shift[c]` is the
// integer lattice shift of corner c on a periodic mesh: the geometric corner
// coordinate is vertex[v[c]] + (shift[c][0]*La, shift[c][1]*Lb).  Shifts let a
// triangle straddle the periodic seam while its vertices (the degrees of
// freedom) live in the fundamental domain.  Non-periodic meshes have all
// shifts zero.
struct MeshTriangle {
  std::array<int, 3> v{};
  std::array<std::array<int, 2>, 3> shift{};
};

// A mesh edge shared by one (boundary) or two (interior) triangles.
//
// Orientation convention: side 0 is the triangle whose counterclockwise
// boundary traversal runs along the face in the face's own arc direction; the
// face tangent and arclength parameter follow side 0, and the stored normal is
// the outward normal of side 0.  For interior faces side 1 traverses the same
// segment in the opposite direction, and jump quantities are defined as
// (side 0 trace) − (side 1 trace).
struct MeshFace {
  // Local edge e of a triangle joins local corners e and (e+1) mod 3.
  struct Side {
    int tri = -1;
    int local_edge = -1;
  };
  Side side[2];
  int n_sides = 0;  // 1 = boundary face, 2 = interior face
  // Geometry in side 0's coordinate frame.
  std::array<double, 2> p0{};      // start point (corner e of side 0)
  std::array<double, 2> p1{};      // end point (corner e+1 of side 0)
  double length = 0.0;
  std::array<double, 2> tangent{};  // unit, from p0 to p1
  std::array<double, 2> normal{};   // unit, outward from side 0
  bool boundary() const { return n_sides == 1; }
};

class LabelMesh {
 public:
  // Vertices are the distinct degree-of-freedom locations inside the
  // fundamental domain [0,La) x [0,Lb) (periodic) or [0,La] x [0,Lb].
  LabelMesh(std::vector<std::array<double, 2>> vertices,
            std::vector<MeshTriangle> triangles, double La, double Lb,
            bool periodic);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }
  int n_faces() const { return static_cast<int>(faces_.size()); }

  const std::array<double, 2>& vertex(int v) const { return vertices_[v]; }
  const MeshTriangle& triangle(int t) const { return triangles_[t]; }
  const MeshFace& face(int f) const { return faces_[f]; }
  const std::vector<MeshFace>& faces() const { return faces_; }
  const std::vector<int>& interior_faces() const { return interior_faces_; }
  const std::vector<int>& boundary_faces() const { return boundary_faces_; }
  // Face index adjacent to local edge e of triangle t.
  int face_of(int t, int e) const { return face_of_[3 * t + e]; }

  double La() const { return La_; }
  double Lb() const { return Lb_; }
  bool periodic() const { return periodic_; }

  // Geometric corner coordinates of a triangle (vertex + periodic shift).
  std::array<std::array<double, 2>, 3> corner_coords(int t) const;
  // Signed area (positive for the validated counterclockwise orientation).
  double area(int t) const;
  double total_area() const;
  // Shortest edge length over the mesh.
  double min_edge_length() const;
  // Longest edge length over the mesh (mesh size h).
  double max_edge_length() const;

 private:
  void build_faces();
  void validate() const;

  std::vector<std::array<double, 2>> vertices_;
  std::vector<MeshTriangle> triangles_;
  std::vector<MeshFace> faces_;
  std::vector<int> interior_faces_;
  std::vector<int> boundary_faces_;
  std::vector<int> face_of_;
  double La_ = 0.0;
  double Lb_ = 0.0;
  bool periodic_ = false;
};

// Structured triangulation of [0,Lx] x [0,Ly] from nx-by-ny quads split along
// the (lower-left -> upper-right) diagonal.  Periodic meshes identify the
// opposite edges of the rectangle and require nx, ny >= 2 so that the three
// corners of every triangle remain distinct vertices.
LabelMesh structured_rect_mesh(double Lx, double Ly, int nx, int ny,
                               bool periodic);

// Deterministically jitters vertices by independent uniform offsets in
// [-amplitude, amplitude] (both coordinates).  On periodic meshes all vertices
// move; on bounded meshes boundary vertices stay fixed so the domain is
// preserved.  Throws MeshError if any triangle area becomes nonpositive.
LabelMesh perturb_mesh(const LabelMesh& m, double amplitude,
                       std::uint64_t seed);

// Plain-text mesh format:
//   vertices N triangles M periodic {0,1}
//   [lengths La Lb]                     (required when periodic)
//   N lines: a b                        (vertex coordinates)
//   M lines: i j k [si_a si_b sj_a sj_b sk_a sk_b]
// The six optional integers per triangle are the periodic corner shifts; when
// omitted on a periodic mesh they are recovered by minimal-image unwrapping
// (valid when every triangle spans less than half the domain).
void save_mesh(const LabelMesh& m, std::ostream& out);
void save_mesh(const LabelMesh& m, const std::string& path);
LabelMesh load_mesh(std::istream& in);
LabelMesh load_mesh(const std::string& path);

}  // namespace labvar
