#include <doctest.h>

#include <cmath>
#include <set>

#include "chtumor/mesh.hpp"

using namespace chtumor;

namespace {

CellMarkSet all_cells(const SimplicialMesh& mesh) {
  CellMarkSet marks;
  for (int c = 0; c < mesh.num_cells(); ++c) marks.marked.insert(c);
  return marks;
}

std::set<std::array<double, 3>> vertex_set(const SimplicialMesh& mesh) {
  return {mesh.vertices.begin(), mesh.vertices.end()};
}

// all interior angles of a 2D cell as cosines, sorted ascending
std::vector<double> angle_cosines(const SimplicialMesh& mesh, int c) {
  std::vector<double> out;
  for (int i = 0; i < 3; ++i) {
    const auto& p = mesh.vertices[mesh.cells[c][i]];
    const auto& q = mesh.vertices[mesh.cells[c][(i + 1) % 3]];
    const auto& r = mesh.vertices[mesh.cells[c][(i + 2) % 3]];
    double ux = q[0] - p[0], uy = q[1] - p[1];
    double vx = r[0] - p[0], vy = r[1] - p[1];
    out.push_back((ux * vx + uy * vy) /
                  (std::hypot(ux, uy) * std::hypot(vx, vy)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("interval mesh basics") {
  auto mesh = build_interval_mesh(0.0, 1.0, 4);
  CHECK(mesh->num_vertices() == 5);
  CHECK(mesh->num_cells() == 4);
  CHECK(mesh->h_max == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(mesh->h_min == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(mesh->boundary_facets.size() == 2);
  for (const auto& bf : mesh->boundary_facets)
    CHECK(bf.marker == BoundaryMarker::Robin);

  auto tiny = build_interval_mesh(0.0, 1.0, 1);
  CHECK(tiny->num_vertices() == 2);
  CHECK(tiny->num_cells() == 1);

  auto coarse = build_interval_mesh(0.0, 1.0, 32);
  CHECK(coarse->h_max == doctest::Approx(1.0 / 32).epsilon(1e-14));

  CHECK_THROWS_AS(build_interval_mesh(1.0, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_interval_mesh(0.0, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_interval_mesh(0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("rect mesh structure and markers") {
  auto unit = build_rect_mesh(0, 0, 1, 1, 1, 1);
  CHECK(unit->num_vertices() == 4);
  CHECK(unit->num_cells() == 2);
  for (int c = 0; c < 2; ++c) {
    auto cos = angle_cosines(*unit, c);
    CHECK(cos[0] == doctest::Approx(0.0).epsilon(1e-14));  // right angle
    CHECK(cos[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(cos[2] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }

  auto two = build_rect_mesh(0, 0, 2, 1, 2, 1);
  CHECK(two->num_vertices() == 6);
  CHECK(two->num_cells() == 4);
  CHECK(two->total_volume() == doctest::Approx(2.0).epsilon(1e-14));

  auto quarter =
      build_rect_mesh(0, 0, 12.5, 12.5, 64, 64, symmetric_quarter_rule(0, 0));
  CHECK(quarter->h_max ==
        doctest::Approx(12.5 * std::sqrt(2.0) / 64).epsilon(1e-13));
  int neumann = 0, robin = 0;
  for (const auto& bf : quarter->boundary_facets) {
    double mx = 0.5 * (quarter->vertices[bf.v[0]][0] +
                       quarter->vertices[bf.v[1]][0]);
    double my = 0.5 * (quarter->vertices[bf.v[0]][1] +
                       quarter->vertices[bf.v[1]][1]);
    if (bf.marker == BoundaryMarker::Neumann) {
      ++neumann;
      CHECK((mx == 0.0 || my == 0.0));
    } else {
      ++robin;
      CHECK((std::abs(mx - 12.5) < 1e-12 || std::abs(my - 12.5) < 1e-12));
    }
  }
  CHECK(neumann == 128);
  CHECK(robin == 128);

  CHECK_THROWS_AS(build_rect_mesh(0, 0, 0, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("refinement identity and counts") {
  auto unit = build_rect_mesh(0, 0, 1, 1, 1, 1);

  auto same = refine(unit, {});
  CHECK(same.mesh.get() == unit.get());

  auto red = refine(unit, all_cells(*unit));
  CHECK(red.mesh->num_cells() == 8);
  for (int c = 0; c < 8; ++c) {
    auto cos = angle_cosines(*red.mesh, c);
    CHECK(cos[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cos[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }

  auto interval = build_interval_mesh(0.0, 1.0, 4);
  CellMarkSet first;
  first.marked.insert(0);
  auto split = refine(interval, first);
  CHECK(split.mesh->num_cells() == 5);
  CHECK(split.mesh->h_min == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(split.mesh->h_max == doctest::Approx(0.25).epsilon(1e-14));

  CellMarkSet bad;
  bad.marked.insert(99);
  CHECK_THROWS_AS(refine(interval, bad), std::invalid_argument);
}

TEST_CASE("repeated full refinement quadruples cells in 2d, doubles in 1d") {
  auto mesh2 = build_rect_mesh(0, 0, 1, 1, 2, 2);
  int n = mesh2->num_cells();
  for (int pass = 0; pass < 2; ++pass) {
    mesh2 = refine(mesh2, all_cells(*mesh2)).mesh;
    CHECK(mesh2->num_cells() == 4 * n);
    n = mesh2->num_cells();
    CHECK(check_non_obtuse(*mesh2).all_non_obtuse);
    CHECK(mesh2->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  }

  auto mesh1 = build_interval_mesh(0, 1, 3);
  mesh1 = refine(mesh1, all_cells(*mesh1)).mesh;
  CHECK(mesh1->num_cells() == 6);
}

TEST_CASE("closure keeps conformity and non-obtuseness") {
  auto mesh = build_rect_mesh(0, 0, 1, 1, 2, 2);
  CellMarkSet one;
  one.marked.insert(0);
  auto ref = refine(mesh, one);
  // finalize() would have thrown on hanging nodes; quality must survive
  CHECK(check_non_obtuse(*ref.mesh).all_non_obtuse);
  CHECK(ref.mesh->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ref.mesh->num_cells() > mesh->num_cells());

  // parent vertices are a subset of the refined ones (nesting)
  auto parents = vertex_set(*mesh);
  auto children = vertex_set(*ref.mesh);
  for (const auto& v : parents) CHECK(children.count(v) == 1);

  // every recorded midpoint really is the midpoint of its parents
  for (std::size_t i = 0; i < ref.midpoint_parents.size(); ++i) {
    const auto& pr = ref.midpoint_parents[i];
    const auto& mid = ref.mesh->vertices[mesh->num_vertices() + i];
    for (int k = 0; k < 2; ++k)
      CHECK(mid[k] == doctest::Approx(0.5 * (mesh->vertices[pr[0]][k] +
                                             mesh->vertices[pr[1]][k]))
                          .epsilon(1e-14));
  }
}

TEST_CASE("closure stays local") {
  // one marked cell in a large structured mesh must not cascade globally:
  // a red patch, a blue ring across the short edges, a green ring across
  // the longest edges
  auto mesh = build_rect_mesh(0, 0, 1, 1, 16, 16);
  CellMarkSet one;
  one.marked.insert(2 * (16 * 8 + 8));  // a cell near the centre
  auto ref = refine(mesh, one);
  CHECK(check_non_obtuse(*ref.mesh).all_non_obtuse);
  int extra = ref.mesh->num_cells() - mesh->num_cells();
  CHECK(extra >= 3);
  CHECK(extra <= 12);

  // repeated banded refinement with a diameter fence keeps quality and
  // stabilizes once the band reaches the target size
  const double h_target = mesh->h_min / 4;
  MeshPtr cur = mesh;
  int stable_cells = 0;
  for (int pass = 0; pass < 8; ++pass) {
    std::vector<double> phi(cur->num_vertices());
    for (int p = 0; p < cur->num_vertices(); ++p) {
      const auto& v = cur->vertices[p];
      phi[p] = std::tanh((std::hypot(v[0] - 0.5, v[1] - 0.5) - 0.3) / 0.02);
    }
    auto marks = mark_interface(*cur, phi, 0.95);
    CellMarkSet fenced;
    for (int c : marks.marked)
      if (cur->cell_diameter(c) > h_target * (1 + 1e-12))
        fenced.marked.insert(c);
    if (fenced.marked.empty()) {
      stable_cells = cur->num_cells();
      break;
    }
    cur = refine(cur, fenced).mesh;
    CHECK(check_non_obtuse(*cur).all_non_obtuse);
    CHECK(cur->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(stable_cells > 0);  // reached a fixed point
  // far cheaper than two uniform refinements of the whole mesh
  CHECK(stable_cells < 8 * mesh->num_cells());
  CHECK(cur->h_min < mesh->h_min / 2);
}

TEST_CASE("refinement independent of marking order") {
  auto mesh = build_rect_mesh(0, 0, 1, 1, 3, 3);
  CellMarkSet a, b;
  for (int c : {2, 7, 11}) a.marked.insert(c);
  for (int c : {11, 2, 7}) b.marked.insert(c);
  auto ra = refine(mesh, a);
  auto rb = refine(mesh, b);
  REQUIRE(ra.mesh->num_cells() == rb.mesh->num_cells());
  CHECK(ra.mesh->cells == rb.mesh->cells);
  CHECK(ra.mesh->vertices == rb.mesh->vertices);
}

TEST_CASE("interface marking") {
  auto mesh = build_interval_mesh(0, 1, 64);
  std::vector<double> ones(mesh->num_vertices(), 1.0);
  CHECK(mark_interface(*mesh, ones, 0.95).marked.empty());

  std::vector<double> zeros(mesh->num_vertices(), 0.0);
  CHECK(mark_interface(*mesh, zeros, 0.95).marked.size() ==
        static_cast<std::size_t>(mesh->num_cells()));

  // tanh profile centred at 0.5: only cells overlapping the layer
  const double eps = 0.02;
  std::vector<double> tanh_prof(mesh->num_vertices());
  for (int p = 0; p < mesh->num_vertices(); ++p)
    tanh_prof[p] =
        std::tanh((0.2 - std::abs(mesh->vertices[p][0] - 0.5)) /
                  (std::sqrt(2.0) * eps));
  auto marks = mark_interface(*mesh, tanh_prof, 0.95);
  CHECK(!marks.marked.empty());
  const double half_width = std::sqrt(2.0) * eps * std::atanh(0.95);
  for (int c : marks.marked) {
    double x0 = mesh->vertices[mesh->cells[c][0]][0];
    double x1 = mesh->vertices[mesh->cells[c][1]][0];
    double d = std::min(std::abs(std::abs(x0 - 0.5) - 0.2),
                        std::abs(std::abs(x1 - 0.5) - 0.2));
    CHECK(d <= half_width + 1e-12);
  }

  CHECK_THROWS_AS(mark_interface(*mesh, ones, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mark_interface(*mesh, ones, 1.0), std::invalid_argument);
}

TEST_CASE("non-obtuse check") {
  CHECK(check_non_obtuse(*build_interval_mesh(0, 1, 3)).all_non_obtuse);
  CHECK(check_non_obtuse(*build_rect_mesh(0, 0, 1, 1, 4, 4)).all_non_obtuse);

  SimplicialMesh bad;
  bad.dim = 2;
  bad.vertices = {{0, 0, 0}, {4, 0, 0}, {0.2, 0.2, 0}};
  bad.cells = {{0, 1, 2, -1}};
  bad.boundary_facets = {{{0, 1, -1}, BoundaryMarker::Robin},
                         {{1, 2, -1}, BoundaryMarker::Robin},
                         {{0, 2, -1}, BoundaryMarker::Robin}};
  bad.finalize();
  auto rep = check_non_obtuse(bad);
  CHECK(!rep.all_non_obtuse);
  CHECK(rep.offenders.size() == 1);
  CHECK(rep.worst_cell == 0);
  CHECK(rep.worst_cos < 0.0);
}

TEST_CASE("conformity validation rejects hanging nodes") {
  // two triangles sharing only half an edge
  SimplicialMesh bad;
  bad.dim = 2;
  bad.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}, {1, 1, 0}};
  bad.cells = {{0, 1, 2, -1}, {3, 1, 4, -1}};
  bad.boundary_facets = {{{0, 1, -1}, BoundaryMarker::Robin},
                         {{0, 2, -1}, BoundaryMarker::Robin},
                         {{1, 4, -1}, BoundaryMarker::Robin},
                         {{3, 4, -1}, BoundaryMarker::Robin}};
  CHECK_THROWS_AS(bad.finalize(), std::invalid_argument);
}

TEST_CASE("volume sums match the domain measure") {
  CHECK(build_interval_mesh(-1, 3, 7)->total_volume() ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK(build_rect_mesh(0, 0, 12.5, 12.5, 64, 64)->total_volume() ==
        doctest::Approx(12.5 * 12.5).epsilon(1e-12));
}

TEST_CASE("kuhn box mesh (optional 3d)") {
  auto box = build_box_mesh({0, 0, 0}, {1, 1, 1}, 2, 2, 2);
  CHECK(box->num_cells() == 6 * 8);
  CHECK(box->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(check_non_obtuse(*box).all_non_obtuse);

  auto ref = refine(box, all_cells(*box));
  CHECK(ref.mesh->num_cells() == 8 * box->num_cells());
  CHECK(ref.mesh->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(check_non_obtuse(*ref.mesh).all_non_obtuse);
}
