#include "curvebem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "curvebem/errors.hpp"
#include "curvebem/quadrature.hpp"

namespace curvebem {

namespace {

constexpr int kProjectionMaxIterations = 50;
constexpr double kProjectionStepTolerance = 1e-12;
constexpr double kAmbiguityGap = 1e-3;

// Orthonormal tangents with t1 x t2 = s.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& s) {
  const Vec3 helper = std::abs(s.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = (helper - helper.dot(s) * s).normalized();
  return {t1, s.cross(t1)};
}

Vec3 unit_from_angles(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Surface

Surface Surface::sphere(double radius) {
  if (!(radius > 0.0)) throw ConfigError("sphere radius must be positive");
  return Surface(SurfaceKind::sphere, radius, {});
}

Surface Surface::bean(const BeanParameters& params) {
  if (!(params.a > 0 && params.b > 0 && params.d > 0) || std::abs(params.c) >= 1.0)
    throw ConfigError("bean parameters need a, b, d > 0 and |c| < 1");
  return Surface(SurfaceKind::bean, 1.0, params);
}

std::string Surface::name() const { return kind_ == SurfaceKind::sphere ? "sphere" : "bean"; }

std::vector<double> Surface::parameters() const {
  if (kind_ == SurfaceKind::sphere) return {radius_};
  return {bean_.a, bean_.b, bean_.c, bean_.d, bean_.e};
}

Surface Surface::from_name(const std::string& name, const std::vector<double>& p) {
  if (name == "sphere") return sphere(p.empty() ? 1.0 : p[0]);
  if (name == "bean") {
    if (p.empty()) return bean();
    if (p.size() != 5) throw ConfigError("bean surface needs 5 parameters");
    return bean({p[0], p[1], p[2], p[3], p[4]});
  }
  throw ConfigError("unknown surface '" + name + "'");
}

Vec3 Surface::chart(const Vec3& s) const {
  if (kind_ == SurfaceKind::sphere) return radius_ * s;
  const auto& q = bean_;
  return {q.a * s.x(), q.b * s.y() * (1.0 + q.c * s.z()), q.d * s.z() + q.e * s.x() * s.x()};
}

Vec3 Surface::chart(double theta, double phi) const { return chart(unit_from_angles(theta, phi)); }

Eigen::Matrix3d Surface::chart_jacobian(const Vec3& s) const {
  if (kind_ == SurfaceKind::sphere) return radius_ * Eigen::Matrix3d::Identity();
  const auto& q = bean_;
  Eigen::Matrix3d d;
  d << q.a, 0.0, 0.0,
       0.0, q.b * (1.0 + q.c * s.z()), q.b * q.c * s.y(),
       2.0 * q.e * s.x(), 0.0, q.d;
  return d;
}

Vec3 Surface::chart_second(const Vec3&, const Vec3& u, const Vec3& v) const {
  if (kind_ == SurfaceKind::sphere) return Vec3::Zero();
  const auto& q = bean_;
  return {0.0, q.b * q.c * (u.y() * v.z() + u.z() * v.y()), 2.0 * q.e * u.x() * v.x()};
}

Vec3 Surface::normal_at_parameter(const Vec3& s) const {
  if (kind_ == SurfaceKind::sphere) return s.normalized();
  // (DF t1) x (DF t2) = cof(DF) (t1 x t2) = cof(DF) s
  const Eigen::Matrix3d d = chart_jacobian(s);
  const Eigen::Matrix3d cofactor = d.determinant() * d.inverse().transpose();
  return (cofactor * s).normalized();
}

Vec3 Surface::exact_normal(const Vec3& point) const {
  if (kind_ == SurfaceKind::sphere) return point.normalized();
  return normal_at_parameter(project(point).parameter);
}

SurfacePoint Surface::newton_project(const Vec3& x, Vec3 s) const {
  s.normalize();
  auto objective = [&](const Vec3& t) { return (x - chart(t)).squaredNorm(); };
  double previous_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kProjectionMaxIterations; ++it) {
    const auto [t1, t2] = tangent_basis(s);
    const Vec3 f = chart(s);
    const Vec3 r = x - f;
    const Eigen::Matrix3d d = chart_jacobian(s);
    const Vec3 g1 = d * t1, g2 = d * t2, fs = d * s;
    const Vec3 g11 = chart_second(s, t1, t1) - fs;
    const Vec3 g22 = chart_second(s, t2, t2) - fs;
    const Vec3 g12 = chart_second(s, t1, t2);
    Eigen::Vector2d grad(-r.dot(g1), -r.dot(g2));
    Eigen::Matrix2d hess;
    hess << g1.dot(g1) - r.dot(g11), g1.dot(g2) - r.dot(g12),
            g1.dot(g2) - r.dot(g12), g2.dot(g2) - r.dot(g22);
    if (hess.determinant() <= 0.0 || hess(0, 0) <= 0.0) {
      hess << g1.dot(g1), g1.dot(g2), g1.dot(g2), g2.dot(g2);
    }
    Eigen::Vector2d step = -hess.ldlt().solve(grad);
    if (step.norm() > 0.5) step *= 0.5 / step.norm();
    // a small step that fails to shrink is the round-off floor
    if (step.norm() < kProjectionStepTolerance ||
        (step.norm() < 1e-9 && step.norm() > 0.5 * previous_step)) {
      s = (s + step(0) * t1 + step(1) * t2).normalized();
      return {chart(s), s};
    }
    previous_step = step.norm();
    const double current = objective(s);
    Vec3 next = (s + step(0) * t1 + step(1) * t2).normalized();
    // Backtrack only outside the quadratic regime: there the decrease of
    // small steps is below the resolution of the objective.
    if (step.norm() > 1e-6) {
      for (int halving = 0; halving < 30 && objective(next) > current; ++halving) {
        step *= 0.5;
        next = (s + step(0) * t1 + step(1) * t2).normalized();
      }
    }
    s = next;
  }
  std::ostringstream msg;
  msg << "closest-point projection did not converge for x = (" << x.x() << ", " << x.y() << ", "
      << x.z() << ")";
  throw ProjectionError(msg.str(), x);
}

SurfacePoint Surface::project(const Vec3& x, const Vec3& seed) const {
  if (kind_ == SurfaceKind::sphere) {
    const double r = x.norm();
    if (r < 1e-300) throw ProjectionError("projection of the sphere center is undefined", x);
    return {radius_ * x / r, x / r};
  }
  return newton_project(x, seed);
}

SurfacePoint Surface::project(const Vec3& x) const {
  if (kind_ == SurfaceKind::sphere) return project(x, x);

  constexpr int n_theta = 24, n_phi = 48;
  std::vector<double> dist(n_theta * n_phi);
  std::vector<Vec3> params(n_theta * n_phi);
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const Vec3 s = unit_from_angles(kPi * (i + 0.5) / n_theta, 2.0 * kPi * j / n_phi);
      params[i * n_phi + j] = s;
      dist[i * n_phi + j] = (x - chart(s)).norm();
    }
  std::vector<int> candidates;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const double v = dist[i * n_phi + j];
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di;
          if (ii < 0 || ii >= n_theta) continue;
          const int jj = (j + dj + n_phi) % n_phi;
          if (dist[ii * n_phi + jj] < v) {
            is_min = false;
            break;
          }
        }
      if (is_min) candidates.push_back(i * n_phi + j);
    }
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return dist[a] < dist[b]; });
  if (candidates.size() > 4) candidates.resize(4);

  std::vector<SurfacePoint> minima;
  for (int c : candidates) {
    const SurfacePoint p = newton_project(x, params[c]);
    const bool duplicate = std::any_of(minima.begin(), minima.end(), [&](const SurfacePoint& q) {
      return (q.point - p.point).norm() < 1e-8;
    });
    if (!duplicate) minima.push_back(p);
  }
  std::sort(minima.begin(), minima.end(), [&](const SurfacePoint& a, const SurfacePoint& b) {
    return (x - a.point).norm() < (x - b.point).norm();
  });
  if (minima.size() > 1 &&
      (x - minima[1].point).norm() - (x - minima[0].point).norm() < kAmbiguityGap) {
    throw ProjectionError("point lies outside the tubular neighbourhood: ambiguous projection", x);
  }
  return minima.front();
}

Eigen::Matrix3d Surface::projection_jacobian(const Vec3& x, const Vec3& seed) const {
  if (kind_ == SurfaceKind::sphere) {
    const double r = x.norm();
    const Vec3 u = x / r;
    return (radius_ / r) * (Eigen::Matrix3d::Identity() - u * u.transpose());
  }
  // fourth-order central differences
  constexpr double step = 1e-3;
  Eigen::Matrix3d jac;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = step;
    const Vec3 p2 = project(x + 2 * e, seed).point;
    const Vec3 p1 = project(x + e, seed).point;
    const Vec3 m1 = project(x - e, seed).point;
    const Vec3 m2 = project(x - 2 * e, seed).point;
    jac.col(k) = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * step);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Topology

namespace {

struct EdgeTable {
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> element_edges;
};

constexpr std::array<std::array<int, 2>, 3> kLocalEdges{{{0, 1}, {1, 2}, {2, 0}}};

EdgeTable compute_edges(const std::vector<std::array<int, 3>>& triangles) {
  EdgeTable table;
  std::map<std::pair<int, int>, int> index;
  table.element_edges.resize(triangles.size());
  for (std::size_t e = 0; e < triangles.size(); ++e)
    for (int k = 0; k < 3; ++k) {
      const int a = triangles[e][kLocalEdges[k][0]];
      const int b = triangles[e][kLocalEdges[k][1]];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = index.try_emplace({key.first, key.second}, static_cast<int>(table.edges.size()));
      if (inserted) table.edges.push_back({key.first, key.second});
      table.element_edges[e][k] = it->second;
    }
  return table;
}

}  // namespace

NodeNumbering number_lagrange_nodes(int num_vertices, const std::vector<std::array<int, 3>>& triangles,
                                    const std::vector<std::array<int, 2>>& edges,
                                    const std::vector<std::array<int, 3>>& element_edges, int degree) {
  NodeNumbering out;
  const int n_el = static_cast<int>(triangles.size());
  out.element_nodes.resize(n_el);
  if (degree == 0) {
    out.count = n_el;
    for (int e = 0; e < n_el; ++e) out.element_nodes[e] = {e};
    return out;
  }
  const int per_edge = degree - 1;
  const int per_interior = (degree - 1) * (degree - 2) / 2;
  const int n_edges = static_cast<int>(edges.size());
  const int edge_base = num_vertices;
  const int interior_base = num_vertices + n_edges * per_edge;
  out.count = interior_base + n_el * per_interior;
  for (int e = 0; e < n_el; ++e) {
    auto& nodes = out.element_nodes[e];
    nodes.reserve(lagrange_size(degree));
    for (int v = 0; v < 3; ++v) nodes.push_back(triangles[e][v]);
    for (int k = 0; k < 3; ++k) {
      const int g = element_edges[e][k];
      const bool forward = triangles[e][kLocalEdges[k][0]] == edges[g][0];
      for (int j = 1; j <= per_edge; ++j)
        nodes.push_back(edge_base + g * per_edge + (forward ? j - 1 : per_edge - j));
    }
    for (int i = 0; i < per_interior; ++i) nodes.push_back(interior_base + e * per_interior + i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CurvedMesh

CurvedMesh::CurvedMesh(std::shared_ptr<const Surface> surface, int order, int level,
                       std::vector<Vec3> nodes, std::vector<std::vector<int>> elements,
                       std::vector<Vec3> node_parameters, std::string node_placement)
    : surface_(std::move(surface)),
      order_(order),
      level_(level),
      nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      node_parameters_(std::move(node_parameters)),
      node_placement_(std::move(node_placement)),
      shape_(order) {
  if (order < 1 || order > 4) throw ConfigError("mesh order must lie in [1, 4]");
  const int per_element = lagrange_size(order);
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (static_cast<int>(elements_[e].size()) != per_element)
      throw InvalidMeshError("element has the wrong number of nodes", static_cast<int>(e));
    for (int i : elements_[e])
      if (i < 0 || i >= static_cast<int>(nodes_.size()))
        throw InvalidMeshError("element references a missing node", static_cast<int>(e));
    triangles.push_back({elements_[e][0], elements_[e][1], elements_[e][2]});
    num_vertices_ = std::max({num_vertices_, elements_[e][0] + 1, elements_[e][1] + 1, elements_[e][2] + 1});
  }
  auto table = compute_edges(triangles);
  edges_ = std::move(table.edges);
  element_edges_ = std::move(table.element_edges);

  if (node_parameters_.size() != nodes_.size()) {
    node_parameters_.clear();
    for (const Vec3& x : nodes_) node_parameters_.push_back(surface_->project(x).parameter);
  }
  node_normals_.reserve(nodes_.size());
  for (const Vec3& s : node_parameters_) node_normals_.push_back(surface_->normal_at_parameter(s));

  centroids_.resize(elements_.size());
  diameters_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    centroids_[e] = (nodes_[el[0]] + nodes_[el[1]] + nodes_[el[2]]) / 3.0;
    double diam = 0.0;
    for (std::size_t i = 0; i < el.size(); ++i)
      for (std::size_t j = i + 1; j < el.size(); ++j)
        diam = std::max(diam, (nodes_[el[i]] - nodes_[el[j]]).norm());
    diameters_[e] = diam;
    h_ = std::max(h_, diam);
  }
}

Vec3 CurvedMesh::map(int e, RefPoint p) const {
  std::array<double, 15> n{};
  shape_.evaluate(p, n);
  Vec3 x = Vec3::Zero();
  const auto& el = elements_[e];
  for (std::size_t i = 0; i < el.size(); ++i) x += n[i] * nodes_[el[i]];
  return x;
}

namespace {

struct Icosahedron {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

Icosahedron icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosahedron ico;
  ico.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : ico.vertices) v.normalize();
  ico.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
               {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (auto& f : ico.faces) {
    const Vec3& a = ico.vertices[f[0]];
    const Vec3 n = (ico.vertices[f[1]] - a).cross(ico.vertices[f[2]] - a);
    if (n.dot(a) < 0.0) std::swap(f[1], f[2]);
  }
  return ico;
}

}  // namespace

CurvedMesh build_curved_mesh(std::shared_ptr<const Surface> surface, int order, int level) {
  if (order < 1 || order > 4) throw ConfigError("mesh order must lie in [1, 4]");
  if (level < 0 || level > 8) throw ConfigError("refinement level must lie in [0, 8]");
  const Surface& gamma = *surface;

  Icosahedron ico = icosahedron();
  std::vector<Vec3> positions, params;
  for (const Vec3& v : ico.vertices) {
    const SurfacePoint p = gamma.project(v);
    positions.push_back(p.point);
    params.push_back(p.parameter);
  }
  std::vector<std::array<int, 3>> triangles = ico.faces;

  for (int r = 0; r < level; ++r) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      const SurfacePoint p = gamma.project(0.5 * (positions[a] + positions[b]),
                                           (params[a] + params[b]).normalized());
      positions.push_back(p.point);
      params.push_back(p.parameter);
      const int id = static_cast<int>(positions.size()) - 1;
      midpoint.emplace(std::pair{key.first, key.second}, id);
      return id;
    };
    std::vector<std::array<int, 3>> refined;
    refined.reserve(triangles.size() * 4);
    for (const auto& t : triangles) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      refined.push_back({t[0], ab, ca});
      refined.push_back({ab, t[1], bc});
      refined.push_back({ca, bc, t[2]});
      refined.push_back({ab, bc, ca});
    }
    triangles = std::move(refined);
  }

  const int num_vertices = static_cast<int>(positions.size());
  const EdgeTable table = compute_edges(triangles);
  const NodeNumbering numbering =
      number_lagrange_nodes(num_vertices, triangles, table.edges, table.element_edges, order);

  std::vector<Vec3> nodes(numbering.count), node_params(numbering.count);
  std::vector<bool> placed(numbering.count, false);
  for (int v = 0; v < num_vertices; ++v) {
    nodes[v] = positions[v];
    node_params[v] = params[v];
    placed[v] = true;
  }
  const std::vector<RefPoint> local = lagrange_nodes(order);
  for (std::size_t e = 0; e < triangles.size(); ++e) {
    const auto& t = triangles[e];
    for (std::size_t i = 3; i < local.size(); ++i) {
      const int g = numbering.element_nodes[e][i];
      if (placed[g]) continue;
      const double l1 = local[i].xi, l2 = local[i].eta, l0 = 1.0 - l1 - l2;
      const Vec3 affine = l0 * positions[t[0]] + l1 * positions[t[1]] + l2 * positions[t[2]];
      const Vec3 seed = (l0 * params[t[0]] + l1 * params[t[1]] + l2 * params[t[2]]).normalized();
      const SurfacePoint p = gamma.project(affine, seed);
      nodes[g] = p.point;
      node_params[g] = p.parameter;
      placed[g] = true;
    }
  }

  CurvedMesh mesh(std::move(surface), order, level, std::move(nodes), numbering.element_nodes,
                  std::move(node_params), kProjectedAffinePlacement);

  const TriangleRule rule = gauss_triangle(std::max(2, 2 * order));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const RefPoint& p : rule.points) {
      ElementFrame f;
      try {
        f = element_frame_fast(mesh, e, p);
      } catch (const DegenerateElementError&) {
        throw InvalidMeshError("nonpositive Jacobian in element " + std::to_string(e), e);
      }
      if (f.element_normal.dot(f.interpolated_normal) <= 0.0)
        throw InvalidMeshError("element " + std::to_string(e) + " is inverted", e);
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Frames and geometric errors

ElementFrame element_frame_fast(const CurvedMesh& mesh, int element, RefPoint p) {
  std::array<double, 15> n{}, dxi{}, deta{};
  const LagrangeTriangle& shape = mesh.shape();
  shape.evaluate(p, n);
  shape.evaluate_gradients(p, dxi, deta);
  ElementFrame f;
  f.point.setZero();
  f.tangent_xi.setZero();
  f.tangent_eta.setZero();
  Vec3 nu = Vec3::Zero();
  const auto& el = mesh.element(element);
  for (std::size_t i = 0; i < el.size(); ++i) {
    const Vec3& x = mesh.nodes()[el[i]];
    f.point += n[i] * x;
    f.tangent_xi += dxi[i] * x;
    f.tangent_eta += deta[i] * x;
    nu += n[i] * mesh.node_normal(el[i]);
  }
  const Vec3 cross = f.tangent_xi.cross(f.tangent_eta);
  f.jacobian = cross.norm();
  if (f.jacobian < 1e-14)
    throw DegenerateElementError("degenerate tangents in element " + std::to_string(element), element);
  f.element_normal = cross / f.jacobian;
  f.interpolated_normal = nu.normalized();
  f.exact_normal = f.interpolated_normal;
  return f;
}

namespace {

Vec3 interpolated_parameter(const CurvedMesh& mesh, int element, RefPoint p) {
  std::array<double, 15> n{};
  mesh.shape().evaluate(p, n);
  Vec3 s = Vec3::Zero();
  const auto& el = mesh.element(element);
  for (std::size_t i = 0; i < el.size(); ++i) s += n[i] * mesh.node_parameter(el[i]);
  return s.normalized();
}

}  // namespace

ElementFrame element_frame(const CurvedMesh& mesh, int element, RefPoint p) {
  ElementFrame f = element_frame_fast(mesh, element, p);
  const Surface& gamma = mesh.surface();
  const SurfacePoint proj = gamma.project(f.point, interpolated_parameter(mesh, element, p));
  f.exact_normal = gamma.normal_at_parameter(proj.parameter);
  return f;
}

GeometricErrorReport geometric_error_report(const CurvedMesh& mesh) {
  const Surface& gamma = mesh.surface();
  const TriangleRule rule = gauss_triangle(20);
  GeometricErrorReport report;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const RefPoint p = rule.points[q];
      const ElementFrame f = element_frame_fast(mesh, e, p);
      const Vec3 seed = interpolated_parameter(mesh, e, p);
      const SurfacePoint proj = gamma.project(f.point, seed);
      const Vec3 n = gamma.normal_at_parameter(proj.parameter);
      const Eigen::Matrix3d dpsi = gamma.projection_jacobian(f.point, proj.parameter);
      const double exact_measure = (dpsi * f.tangent_xi).cross(dpsi * f.tangent_eta).norm();
      report.jacobian = std::max(report.jacobian, std::abs(1.0 - f.jacobian / exact_measure));
      report.distance = std::max(report.distance, (f.point - proj.point).norm());
      report.element_normal = std::max(report.element_normal, (n - f.element_normal).norm());
      report.interpolated_normal = std::max(report.interpolated_normal, (n - f.interpolated_normal).norm());
      report.area += rule.weights[q] * f.jacobian;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

std::string mesh_to_json(const CurvedMesh& mesh) {
  nlohmann::json j;
  j["surface"] = mesh.surface().name();
  j["surface_params"] = mesh.surface().parameters();
  j["order"] = mesh.order();
  j["level"] = mesh.level();
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const Vec3& x : mesh.nodes()) nodes.push_back({x.x(), x.y(), x.z()});
  j["elements"] = mesh.elements();
  j["h"] = mesh.h();
  j["node_placement"] = mesh.node_placement();
  return j.dump();
}

CurvedMesh mesh_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    auto surface = std::make_shared<const Surface>(Surface::from_name(
        j.at("surface").get<std::string>(),
        j.contains("surface_params") ? j["surface_params"].get<std::vector<double>>() : std::vector<double>{}));
    std::vector<Vec3> nodes;
    for (const auto& n : j.at("nodes")) nodes.emplace_back(n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>());
    auto elements = j.at("elements").get<std::vector<std::vector<int>>>();
    return CurvedMesh(std::move(surface), j.at("order").get<int>(), j.at("level").get<int>(), std::move(nodes),
                      std::move(elements), {}, j.value("node_placement", std::string(kProjectedAffinePlacement)));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::io_error, std::string("malformed mesh JSON: ") + ex.what());
  }
}

}  // namespace curvebem
