#include "curvebem/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <Eigen/Geometry>

#include "curvebem/errors.hpp"
#include "kernels.hpp"

namespace curvebem {

// ---------------------------------------------------------------------------
// OperatorSpec

OperatorSpec OperatorSpec::make(Equation equation, Formulation formulation,
                                std::optional<double> wavenumber, std::optional<double> coupling,
                                NormalChoice normal) {
  OperatorSpec spec;
  spec.equation_ = equation;
  spec.formulation_ = formulation;
  spec.normal_ = normal;
  if (equation == Equation::laplace) {
    if (wavenumber) throw ConfigError("a wavenumber is only meaningful for the Helmholtz equation");
    if (formulation == Formulation::cfie) throw ConfigError("the CFIE is defined for the Helmholtz equation only");
  } else {
    if (!wavenumber) throw ConfigError("the Helmholtz equation needs a wavenumber");
    if (!(*wavenumber > 0.0) || !std::isfinite(*wavenumber))
      throw ConfigError("the wavenumber must be positive and finite");
    spec.wavenumber_ = wavenumber;
  }
  if (formulation == Formulation::cfie) {
    const double eta = coupling.value_or(*wavenumber);
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("the CFIE coupling must be positive and finite");
    spec.coupling_ = eta;
  } else if (coupling) {
    throw ConfigError("a coupling parameter is only meaningful for the CFIE");
  }
  return spec;
}

double OperatorSpec::identity_sign() const {
  return formulation_ == Formulation::single_layer ? 0.0 : 1.0;
}

double OperatorSpec::double_layer_sign() const {
  if (formulation_ == Formulation::single_layer) return 0.0;
  return equation_ == Equation::laplace ? -1.0 : 1.0;
}

Complex OperatorSpec::single_layer_factor() const {
  switch (formulation_) {
    case Formulation::single_layer: return 1.0;
    case Formulation::double_layer: return 0.0;
    case Formulation::cfie: return Complex(0.0, -*coupling_);
  }
  return 0.0;
}

std::string OperatorSpec::describe() const {
  std::ostringstream out;
  out << (equation_ == Equation::laplace ? "laplace" : "helmholtz") << ' ';
  switch (formulation_) {
    case Formulation::single_layer: out << "sl"; break;
    case Formulation::double_layer: out << "dl"; break;
    case Formulation::cfie: out << "cfie"; break;
  }
  if (wavenumber_) out << " k=" << *wavenumber_;
  if (coupling_) out << " eta=" << *coupling_;
  out << " normal=" << (normal_ == NormalChoice::element ? "element" : "interpolated");
  return out.str();
}

Complex kernel_eval(const OperatorSpec& spec, const Vec3& x, const Vec3& y, const Vec3& n_y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw Error(ErrorCode::singular_evaluation, "kernel evaluated at coincident points");
  const double k = spec.wavenumber();
  Complex value = 0.0;
  const Complex sl = spec.single_layer_factor();
  if (spec.equation() == Equation::laplace) {
    value += sl * kernels::laplace_single(r);
    if (spec.formulation() == Formulation::double_layer) value += kernels::laplace_double(d, r, n_y);
  } else {
    if (sl != 0.0) value += sl * kernels::helmholtz_single(k, r);
    if (spec.formulation() != Formulation::single_layer) value += kernels::helmholtz_double(k, d, r, n_y);
  }
  return value;
}

int default_thread_count() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int threads = static_cast<int>(hw);
  if (const char* env = std::getenv("CURVEBEM_THREADS")) {
    char* end = nullptr;
    const long requested = std::strtol(env, &end, 10);
    if (end != env && requested >= 1) threads = static_cast<int>(std::min<long>(requested, hw));
  }
  return threads;
}

// ---------------------------------------------------------------------------
// Assembly internals

namespace {

// The assembled matrix is
//   A = alpha M + sum over element pairs of
//       int int phi_i(x) [ c(x, y) phi_j(y) + dl(x, y) phi_j(x) ] dy dx
// with c = gamma G + delta (K - K0) - beta K0 and dl = beta K0. The beta
// terms form the density-difference splitting of the Laplace double layer;
// their integral over the whole surface replaces the jump relation.
struct FormCoefficients {
  double alpha = 0.0;
  double beta = 0.0;        // splitting part (cross and self)
  double beta_cross = 0.0;  // usually equal to beta
  Complex gamma = 0.0;
  double delta = 0.0;
  double k = 0.0;
  bool helmholtz = false;
  bool interpolated_normal = false;

  bool needs_normals() const { return beta != 0.0 || beta_cross != 0.0 || delta != 0.0; }
};

FormCoefficients coefficients_for(const OperatorSpec& spec) {
  FormCoefficients c;
  c.helmholtz = spec.equation() == Equation::helmholtz;
  c.k = spec.wavenumber();
  c.interpolated_normal = spec.normal() == NormalChoice::interpolated;
  c.gamma = spec.single_layer_factor();
  // (I/2 - D0) = I + S_diff; (I/2 + D) = -S_diff + (D - D0)
  if (spec.formulation() != Formulation::single_layer) {
    if (c.helmholtz) {
      c.beta = -1.0;
      c.delta = 1.0;
    } else {
      c.alpha = 1.0;
      c.beta = 1.0;
    }
  }
  c.beta_cross = c.beta;
  return c;
}

// Reference-point data shared by all elements.
struct ReferenceTable {
  std::vector<double> weights;
  Eigen::MatrixXd shape;      // n_geo x points
  Eigen::MatrixXd shape_xi;   // n_geo x points
  Eigen::MatrixXd shape_eta;  // n_geo x points
  Eigen::MatrixXd basis;      // points x n_loc
  int size() const { return static_cast<int>(weights.size()); }
};

ReferenceTable make_table(const LagrangeTriangle& geometry, const LagrangeTriangle& basis,
                          const std::vector<RefPoint>& points, const std::vector<double>& weights) {
  ReferenceTable t;
  const int n = static_cast<int>(points.size());
  const int ng = geometry.size(), nl = basis.size();
  t.weights = weights;
  t.shape.resize(ng, n);
  t.shape_xi.resize(ng, n);
  t.shape_eta.resize(ng, n);
  t.basis.resize(n, nl);
  std::array<double, 15> v{}, dx{}, dy{};
  std::array<double, 10> b{};
  for (int q = 0; q < n; ++q) {
    geometry.evaluate(points[q], v);
    geometry.evaluate_gradients(points[q], dx, dy);
    basis.evaluate(points[q], b);
    for (int a = 0; a < ng; ++a) {
      t.shape(a, q) = v[a];
      t.shape_xi(a, q) = dx[a];
      t.shape_eta(a, q) = dy[a];
    }
    for (int a = 0; a < nl; ++a) t.basis(q, a) = b[a];
  }
  return t;
}

// Physical quadrature points of one element.
struct PointSet {
  Eigen::Matrix3Xd x;
  Eigen::Matrix3Xd normal;
  Eigen::VectorXd w;    // weight times Jacobian
  const Eigen::MatrixXd* phi = nullptr;  // points x n_loc, owned by the reference table
  Eigen::MatrixXd psi;                   // phi scaled by w
  int size() const { return static_cast<int>(w.size()); }
};

class Sampler {
 public:
  Sampler(const FeSpace& space, bool interpolated_normal)
      : space_(space), interpolated_(interpolated_normal) {
    const CurvedMesh& mesh = space.mesh();
    const int ng = mesh.shape().size();
    coords_.resize(mesh.num_elements());
    normals_.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
      coords_[e].resize(3, ng);
      normals_[e].resize(3, ng);
      const auto& el = mesh.element(e);
      for (int a = 0; a < ng; ++a) {
        coords_[e].col(a) = mesh.nodes()[el[a]];
        normals_[e].col(a) = mesh.node_normal(el[a]);
      }
    }
  }

  const FeSpace& space() const { return space_; }

  void sample(int e, const ReferenceTable& t, PointSet& out) const {
    const Eigen::Matrix3Xd& c = coords_[e];
    const int n = t.size();
    const int ng = static_cast<int>(c.cols());
    out.x.resize(3, n);
    out.normal.resize(3, n);
    out.w.resize(n);
    for (int q = 0; q < n; ++q) {
      const double* s = t.shape.col(q).data();
      const double* sx = t.shape_xi.col(q).data();
      const double* se = t.shape_eta.col(q).data();
      Vec3 x = Vec3::Zero(), txi = Vec3::Zero(), teta = Vec3::Zero();
      for (int a = 0; a < ng; ++a) {
        const Vec3 node = c.col(a);
        x += s[a] * node;
        txi += sx[a] * node;
        teta += se[a] * node;
      }
      const Vec3 cr = txi.cross(teta);
      const double jac = cr.norm();
      if (jac < 1e-14)
        throw DegenerateElementError("degenerate tangents in element " + std::to_string(e), e);
      out.x.col(q) = x;
      out.w[q] = t.weights[q] * jac;
      if (interpolated_) {
        const Eigen::Matrix3Xd& nn = normals_[e];
        Vec3 nu = Vec3::Zero();
        for (int a = 0; a < ng; ++a) nu += s[a] * nn.col(a);
        out.normal.col(q) = nu.normalized();
      } else {
        out.normal.col(q) = cr / jac;
      }
    }
    out.phi = &t.basis;
    out.psi = t.basis.array().colwise() * out.w.array();
  }

  PointSet sample(int e, const ReferenceTable& t) const {
    PointSet p;
    sample(e, t, p);
    return p;
  }

 private:
  const FeSpace& space_;
  bool interpolated_;
  std::vector<Eigen::Matrix3Xd> coords_;
  std::vector<Eigen::Matrix3Xd> normals_;
};

template <typename Scalar>
using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct PairBlocks {
  Block<Scalar> xy;  // rows of x, columns of y
  Block<Scalar> yx;
  Block<Scalar> yy;  // self terms landing on y
};

// Kernel values for one point pair, both directions.
template <typename Scalar>
struct PointKernel {
  FormCoefficients c;

  // cxy/cyx: cross kernels; dxy/dyx: self (splitting) kernels
  inline void operator()(const Vec3& x, const Vec3& nx, const Vec3& y, const Vec3& ny, Scalar& cxy,
                         Scalar& cyx, double& dxy, double& dyx) const {
    const Vec3 d = x - y;
    const double r2 = d.squaredNorm();
    const double r = std::sqrt(r2);
    const double inv_r = 1.0 / r;
    double k0xy = 0.0, k0yx = 0.0;
    if (c.needs_normals()) {
      const double f = kernels::kInvFourPi * inv_r * inv_r * inv_r;
      k0xy = f * d.dot(ny);
      k0yx = -f * d.dot(nx);
    }
    dxy = c.beta * k0xy;
    dyx = c.beta * k0yx;
    if constexpr (std::is_same_v<Scalar, double>) {
      const double g = kernels::kInvFourPi * inv_r * c.gamma.real();
      cxy = g - c.beta_cross * k0xy;
      cyx = g - c.beta_cross * k0yx;
    } else {
      // complex arithmetic spelled out to stay clear of the library's
      // NaN-safe multiplication
      const double kr = c.k * r;
      const double cs = std::cos(kr), sn = std::sin(kr);
      const double g0 = kernels::kInvFourPi * inv_r;
      const double gr = c.gamma.real(), gi = c.gamma.imag();
      double re = (gr * cs - gi * sn) * g0;
      double im = (gr * sn + gi * cs) * g0;
      double rem_re = 0.0, rem_im = 0.0;
      if (c.delta != 0.0) {
        if (kr < 1e-3) {
          const double k2 = kr * kr;
          rem_re = 0.5 * k2 - k2 * k2 / 8.0;
          rem_im = kr * k2 / 3.0 - kr * k2 * k2 / 30.0;
        } else {
          rem_re = cs + kr * sn - 1.0;
          rem_im = sn - kr * cs;
        }
        const double f = c.delta * kernels::kInvFourPi * inv_r * inv_r * inv_r;
        rem_re *= f;
        rem_im *= f;
      }
      const double pxy = d.dot(ny), pyx = -d.dot(nx);
      cxy = Complex(re - c.beta_cross * k0xy + rem_re * pxy, im + rem_im * pxy);
      cyx = Complex(re - c.beta_cross * k0yx + rem_re * pyx, im + rem_im * pyx);
    }
  }
};

// Thread-local scratch for tensor pairs.
template <typename Scalar>
struct Workspace {
  Block<Scalar> cxy, cyx;
  Eigen::VectorXd sx, sy;
  Block<Scalar> tmp;
};

// Tensor-product rule over two distinct elements.
template <typename Scalar>
void tensor_pair(const PointKernel<Scalar>& kernel, const PointSet& X, const PointSet& Y,
                 Workspace<Scalar>& ws, Block<Scalar>& xx, PairBlocks<Scalar>& out) {
  const int na = X.size(), nb = Y.size();
  ws.cxy.resize(na, nb);
  ws.cyx.resize(na, nb);
  ws.sx.setZero(na);
  ws.sy.setZero(nb);
  const bool self_terms = kernel.c.beta != 0.0;
  for (int b = 0; b < nb; ++b) {
    const Vec3 y = Y.x.col(b);
    const Vec3 ny = Y.normal.col(b);
    double col_sum = 0.0;
    for (int a = 0; a < na; ++a) {
      double dxy, dyx;
      const Vec3 x = X.x.col(a);
      if ((x - y).squaredNorm() == 0.0)
        throw Error(ErrorCode::internal, "regular quadrature reached a kernel singularity");
      kernel(x, X.normal.col(a), y, ny, ws.cxy(a, b), ws.cyx(a, b), dxy, dyx);
      if (self_terms) {
        ws.sx[a] += dxy * Y.w[b];
        col_sum += dyx * X.w[a];
      }
    }
    ws.sy[b] = col_sum;
  }
  ws.tmp.noalias() = ws.cxy * Y.psi;
  out.xy.noalias() += X.psi.transpose() * ws.tmp;
  ws.tmp.noalias() = ws.cyx.transpose() * X.psi;
  out.yx.noalias() += Y.psi.transpose() * ws.tmp;
  if (self_terms) {
    xx.noalias() += X.psi.transpose() * (X.phi->array().colwise() * ws.sx.array()).matrix();
    out.yy.noalias() += Y.psi.transpose() * (Y.phi->array().colwise() * ws.sy.array()).matrix();
  }
}

// Relative-coordinate rule in local coordinates of a concrete pair. Each
// side depends on fewer variables than the 4D rule, so distinct points are
// sampled once and addressed through index arrays.
struct SingularTable {
  ReferenceTable x_points, y_points;  // unit weights
  std::vector<int> ix, iy;
  std::vector<double> weights;
  Eigen::MatrixXd phi_x, phi_y;  // basis at each rule point (points x n_loc)
};

template <typename Scalar>
Block<Scalar> scale_rows(const Eigen::MatrixXd& phi, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c) {
  Block<Scalar> out(phi.rows(), phi.cols());
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    for (Eigen::Index q = 0; q < phi.rows(); ++q) out(q, j) = phi(q, j) * c[q];
  return out;
}

// With `coincident`, everything lands in xx.
template <typename Scalar>
void paired_rule(const PointKernel<Scalar>& kernel, const SingularTable& t, const PointSet& X, const PointSet& Y,
                 bool coincident, Block<Scalar>& xx, PairBlocks<Scalar>& out) {
  const int n = static_cast<int>(t.weights.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cxy(n), cyx(n);
  Eigen::VectorXd dxy(n), dyx(n);
  for (int q = 0; q < n; ++q) {
    const int a = t.ix[q], b = t.iy[q];
    kernel(X.x.col(a), X.normal.col(a), Y.x.col(b), Y.normal.col(b), cxy[q], cyx[q], dxy[q], dyx[q]);
    const double w = t.weights[q] * X.w[a] * Y.w[b];
    cxy[q] *= w;
    cyx[q] *= w;
    dxy[q] *= w;
    dyx[q] *= w;
  }
  const bool self_terms = kernel.c.beta != 0.0;
  const Block<Scalar> sy = scale_rows(t.phi_y, cxy);
  if (coincident) {
    xx.noalias() += t.phi_x.transpose() * sy;
    if (self_terms) xx.noalias() += t.phi_x.transpose() * (t.phi_x.array().colwise() * dxy.array()).matrix();
    return;
  }
  out.xy.noalias() += t.phi_x.transpose() * sy;
  const Block<Scalar> sx = scale_rows(t.phi_x, cyx);
  out.yx.noalias() += t.phi_y.transpose() * sx;
  if (self_terms) {
    xx.noalias() += t.phi_x.transpose() * (t.phi_x.array().colwise() * dxy.array()).matrix();
    out.yy.noalias() += t.phi_y.transpose() * (t.phi_y.array().colwise() * dyx.array()).matrix();
  }
}

struct QuadraturePlan {
  int singular_order;
  int regular_degree;
  int near_degree;
  double near_ratio;
  double subdivide_ratio;
  int max_subdivision;
  double far_tolerance;

  int degree_for(double ratio) const {
    if (ratio < near_ratio) return near_degree;
    return graded_far_degree(ratio, regular_degree, far_tolerance);
  }
};

QuadraturePlan make_plan(const FeSpace& space, const QuadratureOptions& o) {
  const int m = space.degree(), l = space.mesh().order();
  QuadraturePlan p;
  p.singular_order = o.singular_order > 0 ? o.singular_order : m + l + 5;
  p.singular_order = std::clamp(p.singular_order, 2, 12);
  p.regular_degree = o.regular_degree > 0 ? o.regular_degree : 2 * (m + l) + 4;
  p.near_degree = std::min(30, p.regular_degree + std::max(0, o.near_boost));
  p.regular_degree = std::min(30, p.regular_degree);
  p.near_ratio = o.near_ratio;
  p.subdivide_ratio = o.subdivide_ratio;
  p.max_subdivision = std::max(0, o.max_subdivision);
  p.far_tolerance = o.far_tolerance;
  return p;
}

// Sub-triangle of the reference triangle from recursive quadrisection. The
// id encodes the path (root 1, child c of id: 4 id + c).
struct SubTriangle {
  RefPoint a, b, c;
  std::uint64_t id = 1;
};

std::array<SubTriangle, 4> split(const SubTriangle& t) {
  auto mid = [](RefPoint p, RefPoint q) { return RefPoint{0.5 * (p.xi + q.xi), 0.5 * (p.eta + q.eta)}; };
  const RefPoint ab = mid(t.a, t.b), bc = mid(t.b, t.c), ca = mid(t.c, t.a);
  const std::uint64_t base = 4 * t.id;
  return {SubTriangle{t.a, ab, ca, base}, SubTriangle{ab, t.b, bc, base + 1}, SubTriangle{ca, bc, t.c, base + 2},
          SubTriangle{bc, ca, ab, base + 3}};
}

// Lazily built reference tables and per-degree element samples.
class RuleCache {
 public:
  RuleCache(const Sampler& sampler) : sampler_(sampler) {}

  const std::vector<PointSet>& elements(int degree) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = by_degree_[degree];
    if (!slot) {
      const TriangleRule rule = gauss_triangle(degree);
      auto& table = tables_[{0, degree}];
      table = std::make_unique<ReferenceTable>(make(rule.points, rule.weights));
      auto sets = std::make_unique<std::vector<PointSet>>(sampler_.space().mesh().num_elements());
      for (int e = 0; e < sampler_.space().mesh().num_elements(); ++e) sampler_.sample(e, *table, (*sets)[e]);
      slot = std::move(sets);
    }
    return *slot;
  }

  const SingularTable& singular(Adjacency adjacency, int q, const std::array<int, 3>& perm_x,
                                const std::array<int, 3>& perm_y) {
    const int cx = perm_x[0] * 9 + perm_x[1] * 3 + perm_x[2];
    const int cy = perm_y[0] * 9 + perm_y[1] * 3 + perm_y[2];
    const auto key = std::make_tuple(static_cast<int>(adjacency), q, cx, cy);
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = singular_[key];
    if (!slot) {
      const auto rk = std::make_pair(static_cast<int>(adjacency), q);
      auto& rule = rules_[rk];
      if (!rule) rule = std::make_unique<PairRule>(singular_pair_rule(adjacency, q));
      auto table = std::make_unique<SingularTable>();
      auto unique_points = [&](const std::vector<RefPoint>& src, const std::array<int, 3>& perm,
                               std::vector<int>& index) {
        std::map<std::pair<double, double>, int> seen;
        std::vector<RefPoint> pts;
        index.resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
          const RefPoint p = permute_reference(src[i], perm);
          auto [it, inserted] = seen.try_emplace({p.xi, p.eta}, static_cast<int>(pts.size()));
          if (inserted) pts.push_back(p);
          index[i] = it->second;
        }
        return make(pts, std::vector<double>(pts.size(), 1.0));
      };
      table->x_points = unique_points(rule->x, perm_x, table->ix);
      table->y_points = unique_points(rule->y, perm_y, table->iy);
      table->weights = rule->weights;
      const int n = static_cast<int>(rule->size());
      const int nl = sampler_.space().local_size();
      table->phi_x.resize(n, nl);
      table->phi_y.resize(n, nl);
      for (int i = 0; i < n; ++i) {
        table->phi_x.row(i) = table->x_points.basis.row(table->ix[i]);
        table->phi_y.row(i) = table->y_points.basis.row(table->iy[i]);
      }
      slot = std::move(table);
    }
    return *slot;
  }

  // Gauss rule mapped to a sub-triangle; degree -1 gives the corners and
  // the centroid.
  const ReferenceTable& sub_triangle(const SubTriangle& t, int degree) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = tables_[{t.id, degree}];
    if (!slot) {
      std::vector<RefPoint> pts;
      std::vector<double> w;
      if (degree < 0) {
        pts = {t.a, t.b, t.c,
               {(t.a.xi + t.b.xi + t.c.xi) / 3.0, (t.a.eta + t.b.eta + t.c.eta) / 3.0}};
        w.assign(4, 0.0);
      } else {
        const TriangleRule rule = gauss_triangle(degree);
        const double det =
            std::abs((t.b.xi - t.a.xi) * (t.c.eta - t.a.eta) - (t.c.xi - t.a.xi) * (t.b.eta - t.a.eta));
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const RefPoint r = rule.points[q];
          pts.push_back({t.a.xi + r.xi * (t.b.xi - t.a.xi) + r.eta * (t.c.xi - t.a.xi),
                         t.a.eta + r.xi * (t.b.eta - t.a.eta) + r.eta * (t.c.eta - t.a.eta)});
          w.push_back(rule.weights[q] * det);
        }
      }
      slot = std::make_unique<ReferenceTable>(make(pts, w));
    }
    return *slot;
  }

 private:
  ReferenceTable make(const std::vector<RefPoint>& pts, const std::vector<double>& w) const {
    return make_table(sampler_.space().mesh().shape(), sampler_.space().basis(), pts, w);
  }

  const Sampler& sampler_;
  std::mutex mutex_;
  std::map<int, std::unique_ptr<std::vector<PointSet>>> by_degree_;
  std::map<std::pair<int, int>, std::unique_ptr<PairRule>> rules_;
  std::map<std::tuple<int, int, int, int>, std::unique_ptr<SingularTable>> singular_;
  std::map<std::pair<std::uint64_t, int>, std::unique_ptr<ReferenceTable>> tables_;
};

template <typename Scalar>
void near_pair(const PointKernel<Scalar>& kernel, const Sampler& sampler, RuleCache& cache,
               const QuadraturePlan& plan, int ex, const SubTriangle& tx, int ey, const SubTriangle& ty, int depth,
               Workspace<Scalar>& ws, Block<Scalar>& xx, PairBlocks<Scalar>& out) {
  const PointSet cx = sampler.sample(ex, cache.sub_triangle(tx, -1));
  const PointSet cy = sampler.sample(ey, cache.sub_triangle(ty, -1));
  auto diameter = [](const PointSet& p) {
    return std::max({(p.x.col(0) - p.x.col(1)).norm(), (p.x.col(1) - p.x.col(2)).norm(),
                     (p.x.col(2) - p.x.col(0)).norm()});
  };
  const double ratio = (cx.x.col(3) - cy.x.col(3)).norm() / (0.5 * (diameter(cx) + diameter(cy)));
  if (ratio < plan.subdivide_ratio && depth < plan.max_subdivision) {
    for (const SubTriangle& sx : split(tx))
      for (const SubTriangle& sy : split(ty))
        near_pair(kernel, sampler, cache, plan, ex, sx, ey, sy, depth + 1, ws, xx, out);
    return;
  }
  const int degree = plan.degree_for(ratio);
  const PointSet X = sampler.sample(ex, cache.sub_triangle(tx, degree));
  const PointSet Y = sampler.sample(ey, cache.sub_triangle(ty, degree));
  tensor_pair(kernel, X, Y, ws, xx, out);
}

// Elements sharing at least one vertex with e (e included), with topology.
std::vector<std::vector<std::pair<int, PairTopology>>> touching_pairs(const CurvedMesh& mesh) {
  std::vector<std::vector<int>> by_vertex(mesh.num_vertices());
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int v : mesh.element_vertices(e)) by_vertex[v].push_back(e);
  std::vector<std::vector<std::pair<int, PairTopology>>> result(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::vector<int> near;
    for (int v : mesh.element_vertices(e)) near.insert(near.end(), by_vertex[v].begin(), by_vertex[v].end());
    std::sort(near.begin(), near.end());
    near.erase(std::unique(near.begin(), near.end()), near.end());
    const auto ve = mesh.element_vertices(e);
    for (int f : near) {
      const auto vf = mesh.element_vertices(f);
      result[e].emplace_back(f, classify_pair(std::span<const int, 3>(ve), std::span<const int, 3>(vf)));
    }
  }
  return result;
}

template <typename Scalar>
Block<Scalar> assemble_pairs(const FormCoefficients& coeffs, const FeSpace& space, const AssemblyOptions& options) {
  const CurvedMesh& mesh = space.mesh();
  const int ne = mesh.num_elements();
  const int nl = space.local_size();
  const int n = space.num_dofs();
  const QuadraturePlan plan = make_plan(space, options.quadrature);
  const Sampler sampler(space, coeffs.interpolated_normal);
  RuleCache cache(sampler);
  const auto touching = touching_pairs(mesh);
  const PointKernel<Scalar> kernel{coeffs};
  const int threads = std::max(1, options.threads > 0 ? options.threads : default_thread_count());

  Block<Scalar> A = Block<Scalar>::Zero(n, n);

  // Row elements are processed in batches; blocks of the pairs (X, Y > X)
  // are buffered and merged in element order.
  const std::size_t block_bytes = sizeof(Scalar) * nl * nl * 3 + 64;
  const std::size_t budget = std::size_t(96) << 20;
  const int batch = static_cast<int>(std::clamp<std::size_t>(budget / (block_bytes * ne + 1), 1, 4096));

  struct RowResult {
    Block<Scalar> xx;
    std::vector<PairBlocks<Scalar>> pairs;  // Y = X + 1 + t
  };

  auto process_row = [&](int ex, RowResult& row, Workspace<Scalar>& ws) {
    row.xx.setZero(nl, nl);
    row.pairs.resize(ne - ex - 1);
    for (auto& p : row.pairs) {
      p.xy.setZero(nl, nl);
      p.yx.setZero(nl, nl);
      p.yy.setZero(nl, nl);
    }
    PairBlocks<Scalar> unused{Block<Scalar>::Zero(nl, nl), Block<Scalar>::Zero(nl, nl), Block<Scalar>::Zero(nl, nl)};
    std::vector<char> touched(ne, 0);
    for (const auto& [ey, topo] : touching[ex]) {
      touched[ey] = 1;
      if (ey < ex) continue;
      const SingularTable& t = cache.singular(topo.adjacency, plan.singular_order, topo.perm_x, topo.perm_y);
      const PointSet X = sampler.sample(ex, t.x_points);
      const PointSet Y = sampler.sample(ey, t.y_points);
      if (ey == ex) {
        paired_rule(kernel, t, X, Y, true, row.xx, unused);
      } else {
        paired_rule(kernel, t, X, Y, false, row.xx, row.pairs[ey - ex - 1]);
      }
    }
    const Vec3& cx = mesh.centroid(ex);
    const SubTriangle whole{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 1};
    for (int ey = ex + 1; ey < ne; ++ey) {
      if (touched[ey]) continue;
      const double ratio = (cx - mesh.centroid(ey)).norm() / (0.5 * (mesh.diameter(ex) + mesh.diameter(ey)));
      PairBlocks<Scalar>& out = row.pairs[ey - ex - 1];
      if (ratio < plan.subdivide_ratio) {
        near_pair(kernel, sampler, cache, plan, ex, whole, ey, whole, 0, ws, row.xx, out);
      } else {
        const int degree = plan.degree_for(ratio);
        const auto& sets = cache.elements(degree);
        tensor_pair(kernel, sets[ex], sets[ey], ws, row.xx, out);
      }
    }
  };

  auto merge_row = [&](int ex, const RowResult& row) {
    const auto& dx = space.element_dofs(ex);
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j) A(dx[i], dx[j]) += row.xx(i, j);
    for (int ey = ex + 1; ey < ne; ++ey) {
      const auto& dy = space.element_dofs(ey);
      const PairBlocks<Scalar>& p = row.pairs[ey - ex - 1];
      for (int j = 0; j < nl; ++j)
        for (int i = 0; i < nl; ++i) {
          A(dx[i], dy[j]) += p.xy(i, j);
          A(dy[j], dx[i]) += p.yx(j, i);
        }
      for (int j = 0; j < nl; ++j)
        for (int i = 0; i < nl; ++i) A(dy[i], dy[j]) += p.yy(i, j);
    }
  };

  std::vector<RowResult> rows(std::min(batch, ne));
  for (int start = 0; start < ne; start += batch) {
    const int count = std::min(batch, ne - start);
    if (threads == 1 || count == 1) {
      Workspace<Scalar> ws;
      for (int r = 0; r < count; ++r) process_row(start + r, rows[r], ws);
    } else {
      std::vector<std::thread> pool;
      std::exception_ptr failure;
      std::mutex failure_mutex;
      const int nt = std::min(threads, count);
      for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
          try {
            Workspace<Scalar> ws;
            for (int r = t; r < count; r += nt) process_row(start + r, rows[r], ws);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }
    for (int r = 0; r < count; ++r) merge_row(start + r, rows[r]);
  }

  if (coeffs.alpha != 0.0) {
    const Eigen::SparseMatrix<double> M = mass_matrix(space);
    for (int col = 0; col < M.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
        A(it.row(), it.col()) += coeffs.alpha * it.value();
  }
  return A;
}

}  // namespace

RealMatrix assemble_mass(const FeSpace& space) { return RealMatrix(mass_matrix(space)); }

SystemMatrix assemble_operator(const OperatorSpec& spec, const FeSpace& space, const AssemblyOptions& options) {
  if (space.num_dofs() > 20000)
    throw ConfigError("dense assembly is limited to 20000 degrees of freedom");
  const FormCoefficients coeffs = coefficients_for(spec);
  if (spec.equation() == Equation::laplace) return assemble_pairs<double>(coeffs, space, options);
  return assemble_pairs<Complex>(coeffs, space, options);
}

Eigen::VectorXd laplace_double_layer_moments(const FeSpace& space, const AssemblyOptions& options) {
  FormCoefficients c;
  c.beta = 1.0;
  const RealMatrix A = assemble_pairs<double>(c, space, options);
  return A.rowwise().sum();
}

// M c with c the projection coefficients is the load vector itself.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> assemble_rhs(const OperatorSpec&, const FeSpace& space,
                                                      const Field<Scalar>& f) {
  return load_vector<Scalar>(space, f);
}

template Eigen::VectorXd assemble_rhs<double>(const OperatorSpec&, const FeSpace&, const Field<double>&);
template Eigen::VectorXcd assemble_rhs<Complex>(const OperatorSpec&, const FeSpace&, const Field<Complex>&);

// ---------------------------------------------------------------------------
// Binary dump

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::io_error, "truncated matrix file");
  return value;
}

}  // namespace

void write_matrix_binary(const SystemMatrix& matrix, std::ostream& out) {
  std::visit(
      [&](const auto& a) {
        using Scalar = typename std::decay_t<decltype(a)>::Scalar;
        write_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.rows()));
        write_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.cols()));
        write_le<std::uint8_t>(out, std::is_same_v<Scalar, double> ? 0 : 1);
        out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(sizeof(Scalar) * a.size()));
      },
      matrix);
  if (!out) throw Error(ErrorCode::io_error, "failed to write matrix");
}

SystemMatrix read_matrix_binary(std::istream& in) {
  const auto rows = read_le<std::uint64_t>(in);
  const auto cols = read_le<std::uint64_t>(in);
  const auto tag = read_le<std::uint8_t>(in);
  if (rows > (1u << 20) || cols > (1u << 20)) throw Error(ErrorCode::io_error, "implausible matrix dimensions");
  auto fill = [&](auto matrix) -> SystemMatrix {
    using Scalar = typename decltype(matrix)::Scalar;
    in.read(reinterpret_cast<char*>(matrix.data()), static_cast<std::streamsize>(sizeof(Scalar) * matrix.size()));
    if (!in) throw Error(ErrorCode::io_error, "truncated matrix file");
    return matrix;
  };
  if (tag == 0) return fill(RealMatrix(rows, cols));
  if (tag == 1) return fill(ComplexMatrix(rows, cols));
  throw Error(ErrorCode::io_error, "unknown scalar tag in matrix file");
}

}  // namespace curvebem
