#include "chtumor/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace chtumor {

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0;
  for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

std::array<double, 3> midpoint(const std::array<double, 3>& a,
                               const std::array<double, 3>& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

// Sorted facet key for conformity hashing.
using FacetKey = std::array<int, 3>;

FacetKey facet_key(std::array<int, 3> f, int nv) {
  for (int k = nv; k < 3; ++k) f[k] = -1;
  std::sort(f.begin(), f.begin() + nv);
  return f;
}

}  // namespace

double SimplicialMesh::facet_measure(const BoundaryFacet& f) const {
  switch (dim) {
    case 1:
      return 1.0;  // counting measure of a point
    case 2:
      return dist(vertices[f.v[0]], vertices[f.v[1]]);
    default: {
      Eigen::Vector3d a(vertices[f.v[0]].data());
      Eigen::Vector3d b(vertices[f.v[1]].data());
      Eigen::Vector3d c(vertices[f.v[2]].data());
      return 0.5 * ((b - a).cross(c - a)).norm();
    }
  }
}

void SimplicialMesh::finalize() {
  const int nv_cell = dim + 1;
  const int nc = num_cells();
  volumes_.assign(nc, 0.0);
  diameters_.assign(nc, 0.0);
  gradients_.assign(static_cast<std::size_t>(nc) * 4, {0.0, 0.0, 0.0});
  total_volume_ = 0.0;
  h_max = 0.0;
  h_min = std::numeric_limits<double>::max();

  for (int c = 0; c < nc; ++c) {
    auto& cell = cells[c];
    // edge matrix relative to the first vertex
    Eigen::Matrix3d E = Eigen::Matrix3d::Identity();
    for (int j = 1; j <= dim; ++j)
      for (int k = 0; k < dim; ++k)
        E(k, j - 1) = vertices[cell[j]][k] - vertices[cell[0]][k];
    double det = E.topLeftCorner(dim, dim).determinant();
    if (det < 0) {
      std::swap(cell[dim - 1], cell[dim]);  // flip orientation
      for (int j = 1; j <= dim; ++j)
        for (int k = 0; k < dim; ++k)
          E(k, j - 1) = vertices[cell[j]][k] - vertices[cell[0]][k];
      det = E.topLeftCorner(dim, dim).determinant();
    }
    double factorial = (dim == 1) ? 1.0 : (dim == 2 ? 2.0 : 6.0);
    double vol = det / factorial;
    if (!(vol > 0.0)) throw std::invalid_argument("mesh: degenerate cell");
    volumes_[c] = vol;
    total_volume_ += vol;

    // gradients of barycentric coordinates: rows of E^{-T} for slots 1..dim
    Eigen::MatrixXd Einv =
        E.topLeftCorner(dim, dim).inverse();  // rows: dual basis
    for (int j = 1; j <= dim; ++j)
      for (int k = 0; k < dim; ++k)
        gradients_[static_cast<std::size_t>(c) * 4 + j][k] = Einv(j - 1, k);
    for (int k = 0; k < dim; ++k) {
      double s = 0;
      for (int j = 1; j <= dim; ++j)
        s += gradients_[static_cast<std::size_t>(c) * 4 + j][k];
      gradients_[static_cast<std::size_t>(c) * 4 + 0][k] = -s;
    }

    double diam = 0.0;
    for (int i = 0; i < nv_cell; ++i)
      for (int j = i + 1; j < nv_cell; ++j)
        diam = std::max(diam, dist(vertices[cell[i]], vertices[cell[j]]));
    diameters_[c] = diam;
    h_max = std::max(h_max, diam);
    h_min = std::min(h_min, diam);
  }

  // conformity: each cell facet is shared by at most two cells, and the
  // facets owned by exactly one cell must coincide with the boundary list
  std::map<FacetKey, int> facet_count;
  for (int c = 0; c < nc; ++c) {
    for (int skip = 0; skip < nv_cell; ++skip) {
      std::array<int, 3> f{-1, -1, -1};
      int m = 0;
      for (int i = 0; i < nv_cell; ++i)
        if (i != skip) f[m++] = cells[c][i];
      facet_count[facet_key(f, dim)] += 1;
    }
  }
  std::map<FacetKey, const BoundaryFacet*> declared;
  for (const auto& bf : boundary_facets) declared[facet_key(bf.v, dim)] = &bf;
  int once = 0;
  for (const auto& [key, count] : facet_count) {
    if (count > 2) throw std::invalid_argument("mesh: facet shared by >2 cells");
    if (count == 1) {
      ++once;
      if (!declared.count(key))
        throw std::invalid_argument(
            "mesh: non-conforming (undeclared boundary facet or hanging node)");
    }
  }
  if (once != static_cast<int>(boundary_facets.size()))
    throw std::invalid_argument("mesh: boundary facet list mismatch");

  on_boundary_.assign(num_vertices(), false);
  for (const auto& bf : boundary_facets)
    for (int i = 0; i < dim; ++i) on_boundary_[bf.v[i]] = true;
}

MeshPtr build_interval_mesh(double a, double b, int n_cells,
                            BoundaryMarker marker) {
  if (!(a < b) || n_cells < 1)
    throw std::invalid_argument("build_interval_mesh: need a < b, n_cells >= 1");
  auto mesh = std::make_shared<SimplicialMesh>();
  mesh->dim = 1;
  mesh->vertices.reserve(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) {
    double x = a + (b - a) * static_cast<double>(i) / n_cells;
    if (i == n_cells) x = b;
    mesh->vertices.push_back({x, 0.0, 0.0});
  }
  for (int i = 0; i < n_cells; ++i)
    mesh->cells.push_back({i, i + 1, -1, -1});
  mesh->boundary_facets.push_back({{0, -1, -1}, marker});
  mesh->boundary_facets.push_back({{n_cells, -1, -1}, marker});
  mesh->finalize();
  return mesh;
}

MarkerRule symmetric_quarter_rule(double x0, double y0) {
  return [x0, y0](const std::array<double, 3>& mid) {
    const double tol = 1e-12;
    if (std::abs(mid[0] - x0) < tol || std::abs(mid[1] - y0) < tol)
      return BoundaryMarker::Neumann;
    return BoundaryMarker::Robin;
  };
}

MeshPtr build_rect_mesh(double x0, double y0, double x1, double y1, int nx,
                        int ny, const MarkerRule& rule) {
  if (!(x0 < x1) || !(y0 < y1) || nx < 1 || ny < 1)
    throw std::invalid_argument("build_rect_mesh: degenerate bounds");
  auto mesh = std::make_shared<SimplicialMesh>();
  mesh->dim = 2;
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double x = (i == nx) ? x1 : x0 + (x1 - x0) * static_cast<double>(i) / nx;
      double y = (j == ny) ? y1 : y0 + (y1 - y0) * static_cast<double>(j) / ny;
      mesh->vertices.push_back({x, y, 0.0});
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      // diagonal v00-v11 is the hypotenuse of both triangles
      mesh->cells.push_back({v00, v10, v11, -1});
      mesh->cells.push_back({v00, v11, v01, -1});
    }
  auto add_facet = [&](int a, int b) {
    BoundaryFacet f;
    f.v = {a, b, -1};
    auto mid = midpoint(mesh->vertices[a], mesh->vertices[b]);
    f.marker = rule ? rule(mid) : BoundaryMarker::Robin;
    mesh->boundary_facets.push_back(f);
  };
  for (int i = 0; i < nx; ++i) {
    add_facet(vid(i, 0), vid(i + 1, 0));
    add_facet(vid(i, ny), vid(i + 1, ny));
  }
  for (int j = 0; j < ny; ++j) {
    add_facet(vid(0, j), vid(0, j + 1));
    add_facet(vid(nx, j), vid(nx, j + 1));
  }
  mesh->finalize();
  return mesh;
}

MeshPtr build_box_mesh(const std::array<double, 3>& lo,
                       const std::array<double, 3>& hi, int nx, int ny, int nz,
                       const MarkerRule& rule) {
  for (int k = 0; k < 3; ++k)
    if (!(lo[k] < hi[k]))
      throw std::invalid_argument("build_box_mesh: degenerate bounds");
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("build_box_mesh: need positive resolution");
  auto mesh = std::make_shared<SimplicialMesh>();
  mesh->dim = 3;
  auto vid = [nx, ny](int i, int j, int k) {
    return (k * (ny + 1) + j) * (nx + 1) + i;
  };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh->vertices.push_back(
            {i == nx ? hi[0] : lo[0] + (hi[0] - lo[0]) * double(i) / nx,
             j == ny ? hi[1] : lo[1] + (hi[1] - lo[1]) * double(j) / ny,
             k == nz ? hi[2] : lo[2] + (hi[2] - lo[2]) * double(k) / nz});
  // Kuhn subdivision: six tetrahedra along the vertex permutation paths
  static const int paths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        for (const auto& p : paths) {
          std::array<int, 3> at{i, j, k};
          std::array<int, 4> tet{};
          tet[0] = vid(at[0], at[1], at[2]);
          for (int s = 0; s < 3; ++s) {
            at[p[s]] += 1;
            tet[s + 1] = vid(at[0], at[1], at[2]);
          }
          mesh->cells.push_back(tet);
        }
      }
  // boundary: split each face rectangle consistently with the Kuhn cells
  auto add_tri = [&](int a, int b, int c) {
    BoundaryFacet f;
    f.v = {a, b, c};
    std::array<double, 3> mid{};
    for (int t = 0; t < 3; ++t)
      mid[t] = (mesh->vertices[a][t] + mesh->vertices[b][t] +
                mesh->vertices[c][t]) /
               3.0;
    f.marker = rule ? rule(mid) : BoundaryMarker::Robin;
    mesh->boundary_facets.push_back(f);
  };
  // collect boundary facets from the cells themselves (count == 1)
  std::map<FacetKey, std::array<int, 3>> once;
  {
    std::map<FacetKey, int> count;
    for (const auto& cell : mesh->cells)
      for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> f{};
        int m = 0;
        for (int i2 = 0; i2 < 4; ++i2)
          if (i2 != skip) f[m++] = cell[i2];
        auto key = facet_key(f, 3);
        count[key] += 1;
        once[key] = f;
      }
    for (const auto& [key, n] : count)
      if (n == 1) add_tri(once[key][0], once[key][1], once[key][2]);
      else once.erase(key);
  }
  mesh->finalize();
  return mesh;
}

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

struct RefineContext {
  const SimplicialMesh& old_mesh;
  SimplicialMesh& out;
  std::map<EdgeKey, int> midpoints;
  std::vector<std::array<int, 2>> parents;

  int midpoint_of(int a, int b) {
    auto key = edge_key(a, b);
    auto it = midpoints.find(key);
    if (it != midpoints.end()) return it->second;
    int idx = out.num_vertices();
    out.vertices.push_back(
        midpoint(old_mesh.vertices[a], old_mesh.vertices[b]));
    midpoints.emplace(key, idx);
    parents.push_back({key.first, key.second});
    return idx;
  }
  bool has_midpoint(int a, int b) const {
    return midpoints.count(edge_key(a, b)) > 0;
  }
};

RefinementResult refine_1d(const SimplicialMesh& mesh,
                           const CellMarkSet& marks) {
  auto out = std::make_shared<SimplicialMesh>();
  out->dim = 1;
  out->vertices = mesh.vertices;
  out->boundary_facets = mesh.boundary_facets;
  RefineContext ctx{mesh, *out, {}, {}};
  for (int c = 0; c < mesh.num_cells(); ++c) {
    int a = mesh.cells[c][0], b = mesh.cells[c][1];
    if (marks.marked.count(c)) {
      int m = ctx.midpoint_of(a, b);
      out->cells.push_back({a, m, -1, -1});
      out->cells.push_back({m, b, -1, -1});
    } else {
      out->cells.push_back({a, b, -1, -1});
    }
  }
  out->finalize();
  return {out, std::move(ctx.parents)};
}

// Index (0,1,2) of the longest edge, which is opposite to the returned
// vertex slot; ties broken by the smaller slot for determinism.
int longest_edge_slot(const SimplicialMesh& mesh, int c) {
  const auto& cell = mesh.cells[c];
  double best = -1.0;
  int slot = 0;
  for (int i = 0; i < 3; ++i) {
    double len = dist(mesh.vertices[cell[(i + 1) % 3]],
                      mesh.vertices[cell[(i + 2) % 3]]);
    if (len > best + 1e-14 * (1.0 + best)) {
      best = len;
      slot = i;
    }
  }
  return slot;
}

// Red-green-blue closure. Marked cells and cells with hanging nodes on
// both short edges refine red (four children). A single hanging node on a
// short edge yields the blue pattern (three children, demands the midpoint
// of the longest edge), one on the longest edge the green bisection (two
// children, demands nothing). Demands only escalate, so the closure is
// local: red -> blue ring across short edges -> green ring across longest
// edges. Every pattern maps right-isosceles parents to right-isosceles
// children.
RefinementResult refine_2d(const SimplicialMesh& mesh,
                           const CellMarkSet& marks) {
  const int nc = mesh.num_cells();
  std::vector<bool> is_marked(nc, false);
  for (int c : marks.marked) {
    if (c < 0 || c >= nc)
      throw std::invalid_argument("refine: invalid cell index in mark set");
    is_marked[c] = true;
  }

  std::set<EdgeKey> split;
  for (int c = 0; c < nc; ++c)
    if (is_marked[c])
      for (int i = 0; i < 3; ++i)
        split.insert(edge_key(mesh.cells[c][(i + 1) % 3],
                              mesh.cells[c][(i + 2) % 3]));

  enum class Pattern { None, Green, Blue, Red };
  std::vector<Pattern> pattern(nc, Pattern::None);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int c = 0; c < nc; ++c) {
      const auto& cell = mesh.cells[c];
      const int le = longest_edge_slot(mesh, c);
      int short_hangs = 0;
      bool long_hang = false;
      for (int i = 0; i < 3; ++i) {
        EdgeKey e = edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3]);
        if (!split.count(e)) continue;
        if (i == le) long_hang = true;
        else ++short_hangs;
      }
      Pattern want = Pattern::None;
      if (is_marked[c] || short_hangs == 2) want = Pattern::Red;
      else if (short_hangs == 1) want = Pattern::Blue;
      else if (long_hang) want = Pattern::Green;
      if (want > pattern[c]) {
        pattern[c] = want;
        // register the midpoints the pattern demands
        if (want == Pattern::Red) {
          for (int i = 0; i < 3; ++i)
            if (split.insert(edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3]))
                    .second)
              changed = true;
        } else if (want == Pattern::Blue) {
          if (split.insert(edge_key(cell[(le + 1) % 3], cell[(le + 2) % 3]))
                  .second)
            changed = true;
        }
        changed = true;
      }
    }
  }

  auto out = std::make_shared<SimplicialMesh>();
  out->dim = 2;
  out->vertices = mesh.vertices;
  RefineContext ctx{mesh, *out, {}, {}};

  // deterministic vertex numbering: create midpoints in edge order
  for (const auto& e : split) ctx.midpoint_of(e.first, e.second);

  for (int c = 0; c < nc; ++c) {
    const auto& cell = mesh.cells[c];
    const int le = longest_edge_slot(mesh, c);
    const int peak = cell[le];
    const int a = cell[(le + 1) % 3], b = cell[(le + 2) % 3];
    switch (pattern[c]) {
      case Pattern::Red: {
        int m01 = ctx.midpoint_of(cell[0], cell[1]);
        int m12 = ctx.midpoint_of(cell[1], cell[2]);
        int m02 = ctx.midpoint_of(cell[0], cell[2]);
        out->cells.push_back({cell[0], m01, m02, -1});
        out->cells.push_back({m01, cell[1], m12, -1});
        out->cells.push_back({m02, m12, cell[2], -1});
        out->cells.push_back({m01, m12, m02, -1});
        break;
      }
      case Pattern::Blue: {
        int m_long = ctx.midpoint_of(a, b);
        if (ctx.has_midpoint(peak, a)) {
          int m_leg = ctx.midpoint_of(peak, a);
          out->cells.push_back({peak, m_leg, m_long, -1});
          out->cells.push_back({m_leg, a, m_long, -1});
          out->cells.push_back({peak, m_long, b, -1});
        } else {
          int m_leg = ctx.midpoint_of(peak, b);
          out->cells.push_back({peak, m_long, m_leg, -1});
          out->cells.push_back({m_leg, m_long, b, -1});
          out->cells.push_back({peak, a, m_long, -1});
        }
        break;
      }
      case Pattern::Green: {
        int m = ctx.midpoint_of(a, b);
        out->cells.push_back({peak, a, m, -1});
        out->cells.push_back({peak, m, b, -1});
        break;
      }
      case Pattern::None:
        out->cells.push_back(cell);
        break;
    }
  }

  for (const auto& bf : mesh.boundary_facets) {
    if (ctx.has_midpoint(bf.v[0], bf.v[1])) {
      int m = ctx.midpoint_of(bf.v[0], bf.v[1]);
      out->boundary_facets.push_back({{bf.v[0], m, -1}, bf.marker});
      out->boundary_facets.push_back({{m, bf.v[1], -1}, bf.marker});
    } else {
      out->boundary_facets.push_back(bf);
    }
  }
  out->finalize();
  return {out, std::move(ctx.parents)};
}

// Bey's regular subdivision of every tetrahedron; applied uniformly so no
// closure is needed. The rule is self-similar for path (Kuhn) tetrahedra
// when the vertices are taken in path order, which the coordinate-sum sort
// recovers.
RefinementResult refine_3d(const SimplicialMesh& mesh,
                           const CellMarkSet& marks) {
  for (int c : marks.marked)
    if (c < 0 || c >= mesh.num_cells())
      throw std::invalid_argument("refine: invalid cell index in mark set");
  auto out = std::make_shared<SimplicialMesh>();
  out->dim = 3;
  out->vertices = mesh.vertices;
  RefineContext ctx{mesh, *out, {}, {}};
  auto path_order = [&mesh](std::array<int, 4> t) {
    auto key = [&mesh](int v) {
      const auto& x = mesh.vertices[v];
      return x[0] + x[1] + x[2];
    };
    std::sort(t.begin(), t.end(), [&](int a, int b) {
      double ka = key(a), kb = key(b);
      if (ka != kb) return ka < kb;
      return a < b;
    });
    return t;
  };
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const std::array<int, 4> t = path_order(mesh.cells[c]);
    int m01 = ctx.midpoint_of(t[0], t[1]), m02 = ctx.midpoint_of(t[0], t[2]);
    int m03 = ctx.midpoint_of(t[0], t[3]), m12 = ctx.midpoint_of(t[1], t[2]);
    int m13 = ctx.midpoint_of(t[1], t[3]), m23 = ctx.midpoint_of(t[2], t[3]);
    out->cells.push_back({t[0], m01, m02, m03});
    out->cells.push_back({m01, t[1], m12, m13});
    out->cells.push_back({m02, m12, t[2], m23});
    out->cells.push_back({m03, m13, m23, t[3]});
    out->cells.push_back({m01, m02, m03, m13});
    out->cells.push_back({m01, m02, m12, m13});
    out->cells.push_back({m02, m03, m13, m23});
    out->cells.push_back({m02, m12, m13, m23});
  }
  for (const auto& bf : mesh.boundary_facets) {
    int a = bf.v[0], b = bf.v[1], c = bf.v[2];
    int mab = ctx.midpoint_of(a, b), mbc = ctx.midpoint_of(b, c),
        mac = ctx.midpoint_of(a, c);
    out->boundary_facets.push_back({{a, mab, mac}, bf.marker});
    out->boundary_facets.push_back({{mab, b, mbc}, bf.marker});
    out->boundary_facets.push_back({{mac, mbc, c}, bf.marker});
    out->boundary_facets.push_back({{mab, mbc, mac}, bf.marker});
  }
  out->finalize();
  return {out, std::move(ctx.parents)};
}

}  // namespace

RefinementResult refine(const MeshPtr& mesh, const CellMarkSet& marks) {
  for (int c : marks.marked)
    if (c < 0 || c >= mesh->num_cells())
      throw std::invalid_argument("refine: invalid cell index in mark set");
  if (marks.marked.empty()) return {mesh, {}};
  switch (mesh->dim) {
    case 1:
      return refine_1d(*mesh, marks);
    case 2:
      return refine_2d(*mesh, marks);
    default:
      return refine_3d(*mesh, marks);
  }
}

CellMarkSet mark_interface(const SimplicialMesh& mesh,
                           const std::vector<double>& phi_values,
                           double threshold) {
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw std::invalid_argument("mark_interface: threshold must be in (0,1)");
  if (static_cast<int>(phi_values.size()) != mesh.num_vertices())
    throw std::invalid_argument("mark_interface: field size mismatch");
  CellMarkSet marks;
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i <= mesh.dim; ++i)
      if (std::abs(phi_values[mesh.cells[c][i]]) < threshold) {
        marks.marked.insert(c);
        break;
      }
  return marks;
}

namespace {

void record_angle(NonObtuseReport& rep, int cell, double cos_angle) {
  if (cos_angle < rep.worst_cos) {
    rep.worst_cos = cos_angle;
    rep.worst_cell = cell;
  }
}

}  // namespace

NonObtuseReport check_non_obtuse(const SimplicialMesh& mesh) {
  NonObtuseReport rep;
  const double tol = -1e-12;
  if (mesh.dim == 1) return rep;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double cell_worst = 1.0;
    if (mesh.dim == 2) {
      for (int i = 0; i < 3; ++i) {
        Eigen::Vector2d p(mesh.vertices[mesh.cells[c][i]].data());
        Eigen::Vector2d q(mesh.vertices[mesh.cells[c][(i + 1) % 3]].data());
        Eigen::Vector2d r(mesh.vertices[mesh.cells[c][(i + 2) % 3]].data());
        Eigen::Vector2d u = q - p, v = r - p;
        cell_worst = std::min(cell_worst, u.dot(v) / (u.norm() * v.norm()));
      }
    } else {
      // dihedral angle along each of the six edges
      static const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3},
                                      {1, 2}, {1, 3}, {2, 3}};
      for (const auto& e : pairs) {
        int a = mesh.cells[c][e[0]], b = mesh.cells[c][e[1]];
        int o[2], m = 0;
        for (int i = 0; i < 4; ++i) {
          int v = mesh.cells[c][i];
          if (v != a && v != b) o[m++] = v;
        }
        Eigen::Vector3d pa(mesh.vertices[a].data());
        Eigen::Vector3d pb(mesh.vertices[b].data());
        Eigen::Vector3d p0(mesh.vertices[o[0]].data());
        Eigen::Vector3d p1(mesh.vertices[o[1]].data());
        Eigen::Vector3d axis = (pb - pa).normalized();
        Eigen::Vector3d u = (p0 - pa) - ((p0 - pa).dot(axis)) * axis;
        Eigen::Vector3d v = (p1 - pa) - ((p1 - pa).dot(axis)) * axis;
        cell_worst = std::min(cell_worst, u.dot(v) / (u.norm() * v.norm()));
      }
    }
    record_angle(rep, c, cell_worst);
    if (cell_worst < tol) {
      rep.all_non_obtuse = false;
      rep.offenders.emplace_back(c, cell_worst);
    }
  }
  return rep;
}

}  // namespace chtumor
