#include <iomanip>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "doctest.h"
#include "labvar/fespace.hpp"
#include "labvar/mesh.hpp"
#include "labvar/quadrature.hpp"

using namespace labvar;

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

std::shared_ptr<const LabelMesh> make_mesh(double Lx, double Ly, int nx,
                                           int ny, bool periodic) {
  return std::make_shared<LabelMesh>(
      structured_rect_mesh(Lx, Ly, nx, ny, periodic));
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("structured mesh counts and topology") {
  auto single = structured_rect_mesh(1.0, 1.0, 1, 1, false);
  CHECK(single.n_triangles() == 2);
  CHECK(single.n_vertices() == 4);
  CHECK(single.n_faces() == 5);
  CHECK(single.interior_faces().size() == 1);
  CHECK(single.boundary_faces().size() == 4);

  auto torus = structured_rect_mesh(1.0, 1.0, 2, 2, true);
  CHECK(torus.n_triangles() == 8);
  CHECK(torus.n_vertices() == 4);  // all seam copies identified
  CHECK(torus.n_faces() == 12);    // Euler characteristic 0
  CHECK(torus.interior_faces().size() == 12);
  CHECK(torus.boundary_faces().empty());

  auto rect = structured_rect_mesh(2.0, 1.0, 4, 3, false);
  CHECK(rect.n_triangles() == 24);
  CHECK(rect.n_vertices() == 20);
  CHECK(rect.n_vertices() - rect.n_faces() + rect.n_triangles() == 1);
}

TEST_CASE("triangle areas partition the rectangle") {
  for (bool periodic : {false, true}) {
    auto m = structured_rect_mesh(2.5, 1.25, 4, 5, periodic);
    CHECK(m.total_area() == doctest::Approx(2.5 * 1.25).epsilon(1e-14));
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(m.area(t) > 0.0);
  }
  auto p = perturb_mesh(structured_rect_mesh(1.0, 1.0, 4, 4, true), 0.025, 7);
  CHECK(p.total_area() == doctest::Approx(1.0).epsilon(1e-13));
  auto q = perturb_mesh(structured_rect_mesh(3.0, 2.0, 5, 4, false), 0.05, 3);
  CHECK(q.total_area() == doctest::Approx(6.0).epsilon(1e-13));
}

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_AS(structured_rect_mesh(-1.0, 1.0, 2, 2, false), MeshError);
  CHECK_THROWS_AS(structured_rect_mesh(1.0, 0.0, 2, 2, false), MeshError);
  CHECK_THROWS_AS(structured_rect_mesh(1.0, 1.0, 0, 2, false), MeshError);
  // Periodic identification needs two cells per direction, otherwise a
  // triangle would repeat a vertex.
  CHECK_THROWS_AS(structured_rect_mesh(1.0, 1.0, 1, 1, true), MeshError);
  CHECK_THROWS_AS(structured_rect_mesh(1.0, 1.0, 2, 1, true), MeshError);

  // An inverted triangle is rejected.
  std::vector<std::array<double, 2>> verts = {
      {0, 0}, {1, 0}, {0, 1}};
  MeshTriangle t;
  t.v = {0, 2, 1};  // clockwise
  CHECK_THROWS_AS(LabelMesh(verts, {t}, 1.0, 1.0, false), MeshError);
}

TEST_CASE("mesh perturbation is deterministic and validated") {
  auto base = structured_rect_mesh(1.0, 1.0, 4, 4, false);

  auto same = perturb_mesh(base, 0.0, 42);
  for (int v = 0; v < base.n_vertices(); ++v) {
    CHECK(same.vertex(v)[0] == base.vertex(v)[0]);
    CHECK(same.vertex(v)[1] == base.vertex(v)[1]);
  }

  const double h = 0.25;
  auto p1 = perturb_mesh(base, h / 10.0, 11);
  auto p2 = perturb_mesh(base, h / 10.0, 11);
  auto p3 = perturb_mesh(base, h / 10.0, 12);
  bool identical = true;
  bool moved = false;
  for (int v = 0; v < base.n_vertices(); ++v) {
    identical = identical && p1.vertex(v) == p2.vertex(v);
    moved = moved || p1.vertex(v) != p3.vertex(v);
    for (int t = 0; t < p1.n_triangles(); ++t) CHECK(p1.area(t) > 0.0);
  }
  CHECK(identical);
  CHECK(moved);

  // Boundary vertices of a bounded mesh stay put.
  for (int v = 0; v < base.n_vertices(); ++v) {
    const auto& q = base.vertex(v);
    const bool on_bnd = q[0] == 0.0 || q[0] == 1.0 || q[1] == 0.0 ||
                        q[1] == 1.0;
    if (on_bnd) {
      CHECK(p1.vertex(v)[0] == q[0]);
      CHECK(p1.vertex(v)[1] == q[1]);
    }
  }

  // A perturbation large enough to invert a triangle is refused.
  CHECK_THROWS_AS(perturb_mesh(base, 10.0, 5), MeshError);
  CHECK_THROWS_AS(perturb_mesh(base, -0.1, 5), MeshError);

  // Periodic meshes jitter every vertex.
  auto torus = structured_rect_mesh(1.0, 1.0, 3, 3, true);
  auto tp = perturb_mesh(torus, 0.02, 9);
  int moved_count = 0;
  for (int v = 0; v < torus.n_vertices(); ++v) {
    if (tp.vertex(v) != torus.vertex(v)) ++moved_count;
  }
  CHECK(moved_count == torus.n_vertices());
}

TEST_CASE("interior face orientation pairs opposite traversals") {
  auto m = structured_rect_mesh(1.0, 1.0, 3, 2, true);
  for (int fi : m.interior_faces()) {
    const MeshFace& f = m.face(fi);
    REQUIRE(f.n_sides == 2);
    auto c0 = m.corner_coords(f.side[0].tri);
    auto c1 = m.corner_coords(f.side[1].tri);
    const int e0 = f.side[0].local_edge;
    const int e1 = f.side[1].local_edge;
    const double d0x = c0[(e0 + 1) % 3][0] - c0[e0][0];
    const double d0y = c0[(e0 + 1) % 3][1] - c0[e0][1];
    const double d1x = c1[(e1 + 1) % 3][0] - c1[e1][0];
    const double d1y = c1[(e1 + 1) % 3][1] - c1[e1][1];
    CHECK(d0x == doctest::Approx(-d1x).epsilon(1e-13));
    CHECK(d0y == doctest::Approx(-d1y).epsilon(1e-13));
    CHECK(m.face_of(f.side[0].tri, e0) == fi);
    CHECK(m.face_of(f.side[1].tri, e1) == fi);
    // Normal is unit and orthogonal to the tangent.
    const double nn = f.normal[0] * f.normal[0] + f.normal[1] * f.normal[1];
    CHECK(nn == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.normal[0] * f.tangent[0] + f.normal[1] * f.tangent[1] ==
          doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("gauss rules integrate monomials to declared degree") {
  for (int n = 1; n <= 8; ++n) {
    IntervalRule r = gauss_legendre(n);
    REQUIRE(r.size() == n);
    CHECK(r.degree == 2 * n - 1);
    for (int p = 0; p <= r.degree; ++p) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += r.weights[k] * std::pow(r.points[k], p);
      CHECK(std::abs(s - 1.0 / (p + 1)) < 1e-14);
    }
  }
  IntervalRule byd = interval_rule(4);
  CHECK(byd.degree >= 4);
}

TEST_CASE("triangle rules integrate monomials to declared degree") {
  for (int d = 1; d <= 11; ++d) {
    TriangleRule r = triangle_rule(d);
    CHECK(r.degree >= d);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(std::abs(wsum - 0.5) < 1e-14);
    for (int i = 0; i + 0 <= r.degree; ++i) {
      for (int j = 0; i + j <= r.degree; ++j) {
        double s = 0.0;
        for (int k = 0; k < r.size(); ++k) {
          s += r.weights[k] * std::pow(r.points[k][0], i) *
               std::pow(r.points[k][1], j);
        }
        const double exact =
            factorial(i) * factorial(j) / factorial(i + j + 2);
        CHECK(std::abs(s - exact) < 1e-14);
      }
    }
  }
}

TEST_CASE("time slabs locate and validate") {
  TimeSlabs ts = uniform_slabs(0.0, 1.0, 4);
  CHECK(ts.n_slabs() == 4);
  CHECK(ts.knot(0) == 0.0);
  CHECK(ts.knot(4) == 1.0);
  CHECK(ts.locate(0.1) == 0);
  CHECK(ts.locate(0.25) == 1);  // knots map to the later slab
  CHECK(ts.locate(0.999) == 3);
  CHECK(ts.locate(1.0) == 3);
  CHECK_THROWS_AS(ts.locate(-0.5), FEError);
  CHECK_THROWS_AS(ts.locate(1.5), FEError);
  CHECK_THROWS_AS(TimeSlabs({0.0, 0.0, 1.0}), FEError);
  CHECK_THROWS_AS(TimeSlabs({1.0}), FEError);
  CHECK_THROWS_AS(uniform_slabs(1.0, 0.0, 3), FEError);
}

TEST_CASE("dof counts honor periodic identification") {
  auto torus = make_mesh(1.0, 1.0, 2, 2, true);
  CHECK(FESpace(torus, 1).n_dofs() == 4);
  CHECK(FESpace(torus, 2).n_dofs() == 16);  // 4 vertices + 12 faces

  auto rect = make_mesh(1.0, 1.0, 3, 3, false);
  CHECK(FESpace(rect, 1).n_dofs() == 16);
  CHECK(FESpace(rect, 2).n_dofs() == 49);  // (2*3+1)^2

  CHECK_THROWS_AS(FESpace(rect, 3), FEError);
  CHECK_THROWS_AS(FESpace(rect, 0), FEError);
}

TEST_CASE("shape functions form a partition of unity") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int degree : {1, 2}) {
    auto mesh = make_mesh(1.0, 1.0, 2, 2, false);
    FESpace sp(mesh, degree);
    std::vector<ShapeValues> shp;
    for (int trial = 0; trial < 50; ++trial) {
      double xi = u(rng), eta = u(rng);
      if (xi + eta > 1.0) {
        xi = 1.0 - xi;
        eta = 1.0 - eta;
      }
      sp.shape(xi, eta, shp);
      double sum = 0.0, dxi = 0.0, deta = 0.0;
      for (const auto& s : shp) {
        sum += s.N;
        dxi += s.d_xi;
        deta += s.d_eta;
      }
      CHECK(std::abs(sum - 1.0) < 1e-14);
      CHECK(std::abs(dxi) < 1e-14);
      CHECK(std::abs(deta) < 1e-14);
    }
  }
}

TEST_CASE("field evaluation reproduces polynomials exactly") {
  auto mesh = make_mesh(2.0, 1.0, 3, 2, false);
  auto slabs = std::make_shared<TimeSlabs>(uniform_slabs(0.0, 1.0, 2));

  SUBCASE("constant field") {
    auto sp = std::make_shared<FESpace>(mesh, 1);
    FEField f(sp, slabs, "U");
    for (int k = 0; k < slabs->n_knots(); ++k) {
      f.interpolate_knot(k, [](double, double) { return 3.25; });
    }
    CHECK(eval_field(f, 2, {0.2, 0.3, 0.5}, 0.37, Deriv::Value) ==
          doctest::Approx(3.25).epsilon(1e-15));
    CHECK(std::abs(eval_field(f, 2, {0.2, 0.3, 0.5}, 0.37, Deriv::Da)) <
          1e-14);
  }

  SUBCASE("linear reproduction, degree 1") {
    auto sp = std::make_shared<FESpace>(mesh, 1);
    FEField f(sp, slabs, "X");
    for (int k = 0; k < slabs->n_knots(); ++k) {
      f.interpolate_knot(k, [](double a, double b) {
        return 0.75 * a - 0.5 * b + 0.25;
      });
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
      int tri = trial % mesh->n_triangles();
      double xi = u(rng) * 0.5, eta = u(rng) * 0.5;
      std::array<double, 3> bary = {1.0 - xi - eta, xi, eta};
      auto geo = FESpace(mesh, 1).cell_geometry(tri);
      const double a = geo.corners[0][0] + geo.J[0][0] * xi + geo.J[0][1] * eta;
      const double b = geo.corners[0][1] + geo.J[1][0] * xi + geo.J[1][1] * eta;
      CHECK(eval_field(f, tri, bary, 0.6, Deriv::Value) ==
            doctest::Approx(0.75 * a - 0.5 * b + 0.25).epsilon(1e-13));
      CHECK(eval_field(f, tri, bary, 0.6, Deriv::Da) ==
            doctest::Approx(0.75).epsilon(1e-13));
      CHECK(eval_field(f, tri, bary, 0.6, Deriv::Db) ==
            doctest::Approx(-0.5).epsilon(1e-13));
    }
  }

  SUBCASE("quadratic reproduction, degree 2") {
    auto sp = std::make_shared<FESpace>(mesh, 2);
    FEField f(sp, slabs, "X");
    for (int k = 0; k < slabs->n_knots(); ++k) {
      f.interpolate_knot(k, [](double a, double b) {
        return a * a + 0.5 * a * b - b * b + 2.0 * a - b;
      });
    }
    std::array<double, 3> bary = {0.25, 0.45, 0.3};
    for (int tri : {0, 3, 7}) {
      CHECK(eval_field(f, tri, bary, 0.2, Deriv::Daa) ==
            doctest::Approx(2.0).epsilon(1e-12));
      CHECK(eval_field(f, tri, bary, 0.2, Deriv::Dab) ==
            doctest::Approx(0.5).epsilon(1e-12));
      CHECK(eval_field(f, tri, bary, 0.2, Deriv::Dbb) ==
            doctest::Approx(-2.0).epsilon(1e-12));
    }
    // Pure a^2 has second a-derivative 2.
    FEField g(sp, slabs, "X");
    for (int k = 0; k < slabs->n_knots(); ++k) {
      g.interpolate_knot(k, [](double a, double) { return a * a; });
    }
    CHECK(eval_field(g, 1, bary, 0.9, Deriv::Daa) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("time interpolation and mixed derivatives") {
    auto sp = std::make_shared<FESpace>(mesh, 1);
    FEField f(sp, slabs, "U");
    // u(a,b,t) = (2a - b) * t interpolated at knots 0, 0.5, 1.
    for (int k = 0; k < slabs->n_knots(); ++k) {
      const double t = slabs->knot(k);
      f.interpolate_knot(k, [t](double a, double b) {
        return (2.0 * a - b) * t;
      });
    }
    std::array<double, 3> bary = {0.3, 0.4, 0.3};
    auto geo = sp->cell_geometry(4);
    const double a = geo.corners[0][0] + geo.J[0][0] * 0.4 + geo.J[0][1] * 0.3;
    const double b = geo.corners[0][1] + geo.J[1][0] * 0.4 + geo.J[1][1] * 0.3;
    CHECK(eval_field(f, 4, bary, 0.4, Deriv::Value) ==
          doctest::Approx((2.0 * a - b) * 0.4).epsilon(1e-13));
    CHECK(eval_field(f, 4, bary, 0.4, Deriv::Dt) ==
          doctest::Approx(2.0 * a - b).epsilon(1e-13));
    CHECK(eval_field(f, 4, bary, 0.4, Deriv::Dta) ==
          doctest::Approx(2.0).epsilon(1e-13));
    CHECK(eval_field(f, 4, bary, 0.4, Deriv::Dtb) ==
          doctest::Approx(-1.0).epsilon(1e-13));
    CHECK_THROWS_AS(eval_field(f, 4, bary, 1.75, Deriv::Value), FEError);
    CHECK_THROWS_AS(eval_field(f, 4, bary, -0.25, Deriv::Value), FEError);
  }
}

TEST_CASE("winding fields represent label coordinates on the torus") {
  auto mesh = make_mesh(1.0, 1.0, 2, 2, true);
  auto sp = std::make_shared<FESpace>(mesh, 1);
  auto slabs = std::make_shared<TimeSlabs>(uniform_slabs(0.0, 1.0, 1));
  // X = a + 0 displacement: on a seam-straddling triangle the evaluation must
  // still see X = a in the triangle's own frame, i.e. values beyond La.
  FEField X(sp, slabs, "X", 1.0, 0.0);
  bool saw_wrap = false;
  for (int t = 0; t < mesh->n_triangles(); ++t) {
    auto c = mesh->corner_coords(t);
    std::array<double, 3> bary = {0.2, 0.5, 0.3};
    const double a = 0.2 * c[0][0] + 0.5 * c[1][0] + 0.3 * c[2][0];
    CHECK(eval_field(X, t, bary, 0.5, Deriv::Value) ==
          doctest::Approx(a).epsilon(1e-13));
    CHECK(eval_field(X, t, bary, 0.5, Deriv::Da) ==
          doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k < 3; ++k) saw_wrap = saw_wrap || c[k][0] > 1.0 - 1e-9;
  }
  CHECK(saw_wrap);
}

TEST_CASE("traces agree across interior faces, normal derivatives jump") {
  auto mesh = make_mesh(1.0, 1.0, 3, 3, true);
  auto pm = std::make_shared<LabelMesh>(perturb_mesh(*mesh, 0.02, 31));
  for (int degree : {1, 2}) {
    auto sp = std::make_shared<FESpace>(pm, degree);
    auto slabs = std::make_shared<TimeSlabs>(uniform_slabs(0.0, 1.0, 1));
    FEField f(sp, slabs, "U");
    std::mt19937_64 rng(77 + degree);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& c : f.coeffs()) c = u(rng);

    IntervalRule rule = gauss_legendre(3);
    double max_trace_gap = 0.0;
    double max_normal_jump = 0.0;
    for (int fi : pm->interior_faces()) {
      const MeshFace& face = pm->face(fi);
      for (int q = 0; q < rule.size(); ++q) {
        const double s = rule.points[q];
        double value[2], dn[2];
        for (int side = 0; side < 2; ++side) {
          const int tri = face.side[side].tri;
          const int e = face.side[side].local_edge;
          // Side 1 traverses the face backwards.
          const double sloc = side == 0 ? s : 1.0 - s;
          // Barycentric coordinates along local edge e (from corner e to
          // corner e+1).
          std::array<double, 3> bary = {0.0, 0.0, 0.0};
          bary[e] = 1.0 - sloc;
          bary[(e + 1) % 3] = sloc;
          value[side] = eval_field_slab(f, tri, bary, 0, 0.5, Deriv::Value);
          const double da = eval_field_slab(f, tri, bary, 0, 0.5, Deriv::Da);
          const double db = eval_field_slab(f, tri, bary, 0, 0.5, Deriv::Db);
          dn[side] = da * face.normal[0] + db * face.normal[1];
        }
        max_trace_gap = std::max(max_trace_gap,
                                 std::abs(value[0] - value[1]));
        max_normal_jump = std::max(max_normal_jump, std::abs(dn[0] - dn[1]));
      }
    }
    CHECK(max_trace_gap < 1e-13);
    CHECK(max_normal_jump > 1e-3);  // generic coefficients kink across faces
  }
}

TEST_CASE("mesh text format round-trips") {
  auto orig = perturb_mesh(structured_rect_mesh(1.5, 1.0, 3, 2, true), 0.03,
                           13);
  std::stringstream ss;
  save_mesh(orig, ss);
  LabelMesh back = load_mesh(ss);
  REQUIRE(back.n_vertices() == orig.n_vertices());
  REQUIRE(back.n_triangles() == orig.n_triangles());
  CHECK(back.periodic());
  CHECK(back.La() == orig.La());
  CHECK(back.Lb() == orig.Lb());
  for (int v = 0; v < orig.n_vertices(); ++v) {
    CHECK(back.vertex(v)[0] == orig.vertex(v)[0]);  // max_digits10 precision
    CHECK(back.vertex(v)[1] == orig.vertex(v)[1]);
  }
  for (int t = 0; t < orig.n_triangles(); ++t) {
    CHECK(back.triangle(t).v == orig.triangle(t).v);
    CHECK(back.triangle(t).shift == orig.triangle(t).shift);
  }

  auto rect = structured_rect_mesh(1.0, 2.0, 2, 3, false);
  std::stringstream rs;
  save_mesh(rect, rs);
  LabelMesh rback = load_mesh(rs);
  CHECK(rback.n_faces() == rect.n_faces());
  CHECK_FALSE(rback.periodic());
  CHECK(rback.total_area() == doctest::Approx(2.0).epsilon(1e-14));

  SUBCASE("shift recovery by minimal image") {
    // A periodic file without explicit shifts: corners are unwrapped to the
    // nearest image of corner 0.
    auto torus = structured_rect_mesh(1.0, 1.0, 3, 3, true);
    std::stringstream ts;
    ts << "vertices " << torus.n_vertices() << " triangles "
       << torus.n_triangles() << " periodic 1\n";
    ts << "lengths 1 1\n";
    ts << std::setprecision(17);
    for (int v = 0; v < torus.n_vertices(); ++v) {
      ts << torus.vertex(v)[0] << " " << torus.vertex(v)[1] << "\n";
    }
    for (int t = 0; t < torus.n_triangles(); ++t) {
      const auto& tri = torus.triangle(t);
      ts << tri.v[0] << " " << tri.v[1] << " " << tri.v[2] << "\n";
    }
    LabelMesh rec = load_mesh(ts);
    CHECK(rec.n_faces() == torus.n_faces());
    CHECK(rec.total_area() == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("malformed input reports the line") {
    std::stringstream bad("vertices 3 triangles 1 periodic 2\n");
    CHECK_THROWS_WITH_AS(load_mesh(bad),
                         doctest::Contains("line 1"), MeshError);
    std::stringstream bad2(
        "vertices 3 triangles 1 periodic 0\n0 0\n1 0\nnot-a-number 1\n0 1 2\n");
    CHECK_THROWS_WITH_AS(load_mesh(bad2),
                         doctest::Contains("line 4"), MeshError);
    std::stringstream bad3("vertices 3 triangles 1 periodic 1\n0 0\n");
    CHECK_THROWS_WITH_AS(load_mesh(bad3),
                         doctest::Contains("lengths"), MeshError);
  }
}

TEST_CASE("edge length extremes bound the mesh size") {
  auto m = structured_rect_mesh(1.0, 1.0, 4, 4, false);
  CHECK(m.min_edge_length() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(m.max_edge_length() ==
        doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-14));
}

}  // TEST_SUITE
