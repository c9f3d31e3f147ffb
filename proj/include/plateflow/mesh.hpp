#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plateflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

}  // namespace plateflow

namespace plateflow::mesh {

struct GeometryConfig {
  double lx = 1.0;
  double lz = 1.0;
  int nx = 24;
  int nz = 24;
};

enum class FaceKind : unsigned char { interior, wall, elastic };

// Velocity lives on faces (u on vertical faces, w on horizontal ones),
// pressure at cell centers. The fluid occupies (0,lx) x (-lz,0); the
// elastic face is the top edge z = 0, the rest of the boundary is rigid.
struct VelocityField {
  Vector values;
};

struct ScalarField {
  Vector values;
};

// Deflection sampled at the top-face centers x_i = (i + 1/2) h.
struct PlateFunction {
  Vector values;
};

// Nodal values on the full (n+1)^2 vertex grid of a square plate.
struct PlateFunction2D {
  Vector values;
};

namespace detail {

inline void add_difference(Triplets& t, int a, int b, double c) {
  t.emplace_back(a, a, c);
  t.emplace_back(b, b, c);
  t.emplace_back(a, b, -c);
  t.emplace_back(b, a, -c);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

inline std::uint64_t bits(double x) {
  std::uint64_t b = 0;
  static_assert(sizeof(b) == sizeof(x));
  std::memcpy(&b, &x, sizeof(b));
  return b;
}

}  // namespace detail

class Grid {
 public:
  explicit Grid(const GeometryConfig& cfg)
      : nx_(cfg.nx), nz_(cfg.nz), lx_(cfg.lx), lz_(cfg.lz) {
    if (nx_ < 4 || nz_ < 4) {
      throw std::invalid_argument("grid too coarse: nx and nz must be at least 4");
    }
    if (!(lx_ > 0.0) || !(lz_ > 0.0)) {
      throw std::invalid_argument("domain extents must be positive");
    }
    hx_ = lx_ / nx_;
    hz_ = lz_ / nz_;
    classify_faces();
    build_divergence();
    build_dirichlet_form();
  }

  int nx() const { return nx_; }
  int nz() const { return nz_; }
  double lx() const { return lx_; }
  double lz() const { return lz_; }
  double hx() const { return hx_; }
  double hz() const { return hz_; }

  int num_u_faces() const { return (nx_ + 1) * nz_; }
  int num_w_faces() const { return nx_ * (nz_ + 1); }
  int num_faces() const { return num_u_faces() + num_w_faces(); }
  int num_cells() const { return nx_ * nz_; }
  int num_vertices() const { return (nx_ + 1) * (nz_ + 1); }

  int u_face(int i, int j) const { return j * (nx_ + 1) + i; }
  int w_face(int i, int j) const { return num_u_faces() + j * nx_ + i; }
  int cell(int i, int j) const { return j * nx_ + i; }
  int vertex(int i, int j) const { return j * (nx_ + 1) + i; }

  FaceKind face_kind(int f) const { return kinds_[f]; }
  const std::vector<int>& wall_faces() const { return wall_; }
  const std::vector<int>& elastic_faces() const { return elastic_; }
  const std::vector<int>& interior_faces() const { return interior_; }

  // Quadrature weights of the fluid inner product: hx*hz inside, halved on
  // boundary faces.
  const Vector& face_weights() const { return face_weights_; }
  double cell_weight() const { return hx_ * hz_; }

  std::pair<double, double> face_position(int f) const {
    if (f < num_u_faces()) {
      const int i = f % (nx_ + 1), j = f / (nx_ + 1);
      return {i * hx_, -lz_ + (j + 0.5) * hz_};
    }
    const int g = f - num_u_faces();
    const int i = g % nx_, j = g / nx_;
    return {(i + 0.5) * hx_, -lz_ + j * hz_};
  }

  std::pair<double, double> cell_center(int c) const {
    return {(c % nx_ + 0.5) * hx_, -lz_ + (c / nx_ + 0.5) * hz_};
  }

  double plate_node(int i) const { return (i + 0.5) * hx_; }

  // cells x faces
  const SparseMatrix& divergence() const { return div_; }
  // a(v, w) = v^T A w approximates (grad v, grad w) for fields with the
  // boundary values stored on the boundary faces.
  const SparseMatrix& dirichlet_form() const { return dirichlet_; }

  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    h = detail::mix(h, static_cast<std::uint64_t>(nx_));
    h = detail::mix(h, static_cast<std::uint64_t>(nz_));
    h = detail::mix(h, detail::bits(lx_));
    h = detail::mix(h, detail::bits(lz_));
    return h;
  }

 private:
  void classify_faces() {
    kinds_.assign(num_faces(), FaceKind::interior);
    face_weights_ = Vector::Constant(num_faces(), hx_ * hz_);
    for (int j = 0; j < nz_; ++j) {
      for (int i : {0, nx_}) kinds_[u_face(i, j)] = FaceKind::wall;
    }
    for (int i = 0; i < nx_; ++i) {
      kinds_[w_face(i, 0)] = FaceKind::wall;
      kinds_[w_face(i, nz_)] = FaceKind::elastic;
    }
    for (int f = 0; f < num_faces(); ++f) {
      switch (kinds_[f]) {
        case FaceKind::interior: interior_.push_back(f); break;
        case FaceKind::wall: wall_.push_back(f); face_weights_[f] *= 0.5; break;
        case FaceKind::elastic: face_weights_[f] *= 0.5; break;
      }
    }
    for (int i = 0; i < nx_; ++i) elastic_.push_back(w_face(i, nz_));
  }

  void build_divergence() {
    Triplets t;
    t.reserve(4 * num_cells());
    for (int j = 0; j < nz_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const int c = cell(i, j);
        t.emplace_back(c, u_face(i + 1, j), 1.0 / hx_);
        t.emplace_back(c, u_face(i, j), -1.0 / hx_);
        t.emplace_back(c, w_face(i, j + 1), 1.0 / hz_);
        t.emplace_back(c, w_face(i, j), -1.0 / hz_);
      }
    }
    div_.resize(num_cells(), num_faces());
    div_.setFromTriplets(t.begin(), t.end());
  }

  void build_dirichlet_form() {
    Triplets t;
    const double cx = hz_ / hx_, cz = hx_ / hz_;
    // u component: x-differences across all faces, z-differences between
    // interior faces, tangential wall terms at top and bottom.
    for (int j = 0; j < nz_; ++j) {
      for (int i = 0; i < nx_; ++i) detail::add_difference(t, u_face(i, j), u_face(i + 1, j), cx);
    }
    for (int i = 1; i < nx_; ++i) {
      for (int j = 0; j + 1 < nz_; ++j) detail::add_difference(t, u_face(i, j), u_face(i, j + 1), cz);
      t.emplace_back(u_face(i, 0), u_face(i, 0), 2.0 * cz);
      t.emplace_back(u_face(i, nz_ - 1), u_face(i, nz_ - 1), 2.0 * cz);
    }
    // w component
    for (int i = 0; i < nx_; ++i) {
      for (int j = 0; j < nz_; ++j) detail::add_difference(t, w_face(i, j), w_face(i, j + 1), cz);
    }
    for (int j = 0; j <= nz_; ++j) {
      const double half = (j == 0 || j == nz_) ? 0.5 : 1.0;
      for (int i = 0; i + 1 < nx_; ++i) detail::add_difference(t, w_face(i, j), w_face(i + 1, j), half * cx);
      t.emplace_back(w_face(0, j), w_face(0, j), 2.0 * half * cx);
      t.emplace_back(w_face(nx_ - 1, j), w_face(nx_ - 1, j), 2.0 * half * cx);
    }
    dirichlet_.resize(num_faces(), num_faces());
    dirichlet_.setFromTriplets(t.begin(), t.end());
  }

  int nx_, nz_;
  double lx_, lz_, hx_ = 0.0, hz_ = 0.0;
  std::vector<FaceKind> kinds_;
  std::vector<int> wall_, elastic_, interior_;
  Vector face_weights_;
  SparseMatrix div_, dirichlet_;
};

inline Grid build_grid(const GeometryConfig& cfg) { return Grid(cfg); }

inline VelocityField sample_velocity(const Grid& g, const std::function<double(double, double)>& fu,
                                     const std::function<double(double, double)>& fw) {
  VelocityField v{Vector(g.num_faces())};
  for (int f = 0; f < g.num_faces(); ++f) {
    const auto [x, z] = g.face_position(f);
    v.values[f] = f < g.num_u_faces() ? fu(x, z) : fw(x, z);
  }
  return v;
}

inline ScalarField sample_scalar(const Grid& g, const std::function<double(double, double)>& fp) {
  ScalarField p{Vector(g.num_cells())};
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto [x, z] = g.cell_center(c);
    p.values[c] = fp(x, z);
  }
  return p;
}

inline void check_conforming(const VelocityField& v, const Grid& g) {
  if (v.values.size() != g.num_faces()) throw std::invalid_argument("velocity field does not match grid");
}

inline void check_conforming(const ScalarField& p, const Grid& g) {
  if (p.values.size() != g.num_cells()) throw std::invalid_argument("scalar field does not match grid");
}

inline ScalarField discrete_div(const VelocityField& v, const Grid& g) {
  check_conforming(v, g);
  return {g.divergence() * v.values};
}

// Centered differences on interior faces; boundary faces get zero.
inline VelocityField discrete_grad(const ScalarField& p, const Grid& g) {
  check_conforming(p, g);
  VelocityField out{Vector::Zero(g.num_faces())};
  for (int j = 0; j < g.nz(); ++j) {
    for (int i = 1; i < g.nx(); ++i) {
      out.values[g.u_face(i, j)] = (p.values[g.cell(i, j)] - p.values[g.cell(i - 1, j)]) / g.hx();
    }
  }
  for (int j = 1; j < g.nz(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      out.values[g.w_face(i, j)] = (p.values[g.cell(i, j)] - p.values[g.cell(i, j - 1)]) / g.hz();
    }
  }
  return out;
}

// Normal velocity on the elastic face; everything else on the boundary is
// no-slip.
struct BoundaryData {
  PlateFunction elastic_normal;
};

inline VelocityField discrete_laplacian(const VelocityField& v, const Grid& g, const BoundaryData& bc) {
  check_conforming(v, g);
  Vector full = v.values;
  for (int f : g.wall_faces()) full[f] = 0.0;
  const auto& top = g.elastic_faces();
  if (bc.elastic_normal.values.size() == 0) {
    for (int f : top) full[f] = 0.0;
  } else {
    if (bc.elastic_normal.values.size() != static_cast<Eigen::Index>(top.size())) {
      throw std::invalid_argument("boundary data does not match grid");
    }
    for (std::size_t i = 0; i < top.size(); ++i) full[top[i]] = bc.elastic_normal.values[i];
  }
  const Vector av = g.dirichlet_form() * full;
  VelocityField out{Vector::Zero(g.num_faces())};
  for (int f : g.interior_faces()) out.values[f] = -av[f] / g.face_weights()[f];
  return out;
}

// Clamped beam on (0, length) with n nodes at cell centers. The deflection
// is interpolated (4-point cubic) onto the vertices of a half-spacing grid,
// where the clamped second difference with mirror ghosts defines the
// bending energy.
class PlateGrid {
 public:
  PlateGrid(int n, double length) : n_(n), length_(length) {
    if (n_ < 4) throw std::invalid_argument("plate grid too coarse: need at least 4 nodes");
    if (!(length_ > 0.0)) throw std::invalid_argument("plate length must be positive");
    h_ = length_ / n_;
    build();
  }

  explicit PlateGrid(const Grid& g) : PlateGrid(g.nx(), g.lx()) {}

  int size() const { return n_; }
  double spacing() const { return h_; }
  double length() const { return length_; }
  double node(int i) const { return (i + 0.5) * h_; }

  // (Δu, Δw) = u^T B w
  const Matrix& bending() const { return bending_; }
  // (u', w') = u^T S w
  const Matrix& stiffness() const { return stiffness_; }
  // fine-edge first differences (2n x n) and their quadrature weight
  const Matrix& gradient() const { return gradient_; }
  double gradient_weight() const { return 0.5 * h_; }
  // second derivative at the fine vertices (2n+1 x n) with trapezoid weights
  const Matrix& second_derivative() const { return second_; }
  const Vector& second_weights() const { return second_weights_; }

  double inner(const Vector& a, const Vector& b) const { return h_ * a.dot(b); }
  double integral(const Vector& a) const { return h_ * a.sum(); }
  double mean(const Vector& a) const { return integral(a) / length_; }

  Vector sample(const std::function<double(double)>& f) const {
    Vector v(n_);
    for (int i = 0; i < n_; ++i) v[i] = f(node(i));
    return v;
  }

  // -Δ_h u, consistent with the stiffness form.
  Vector laplacian(const Vector& u) const { return -(stiffness_ * u) / h_; }

 private:
  void build() {
    const int nf = 2 * n_;
    const double hf = 0.5 * h_;
    Matrix interp = Matrix::Zero(nf - 1, n_);
    // coefficient of cell k in the value of the cubic ghost beyond each end
    auto put = [&](int row, int k, double c) {
      if (k < 0) {
        interp(row, 0) += 2.0 * c;
        interp(row, 1) -= c / 9.0;
      } else if (k >= n_) {
        interp(row, n_ - 1) += 2.0 * c;
        interp(row, n_ - 2) -= c / 9.0;
      } else {
        interp(row, k) += c;
      }
    };
    for (int j = 1; j < nf; ++j) {
      const int row = j - 1;
      if (j % 2 == 1) {
        interp(row, (j - 1) / 2) = 1.0;
      } else {
        const int k = j / 2;
        put(row, k - 2, -1.0 / 16.0);
        put(row, k - 1, 9.0 / 16.0);
        put(row, k, 9.0 / 16.0);
        put(row, k + 1, -1.0 / 16.0);
      }
    }
    // fine vertex values 0..nf, clamped ends are zero with mirror ghosts
    Matrix fine_second = Matrix::Zero(nf + 1, nf - 1);
    auto col = [](int j) { return j - 1; };
    for (int j = 0; j <= nf; ++j) {
      const double c = 1.0 / (hf * hf);
      if (j == 0) {
        fine_second(j, col(1)) = 2.0 * c;
      } else if (j == nf) {
        fine_second(j, col(nf - 1)) = 2.0 * c;
      } else {
        fine_second(j, col(j)) = -2.0 * c;
        if (j - 1 >= 1) fine_second(j, col(j - 1)) = c;
        if (j + 1 <= nf - 1) fine_second(j, col(j + 1)) = c;
      }
    }
    second_weights_ = Vector::Constant(nf + 1, hf);
    second_weights_[0] = second_weights_[nf] = 0.5 * hf;
    second_ = fine_second * interp;
    bending_ = second_.transpose() * second_weights_.asDiagonal() * second_;
    bending_ = 0.5 * (bending_ + bending_.transpose()).eval();

    Matrix edge = Matrix::Zero(nf, nf - 1);
    for (int e = 0; e < nf; ++e) {
      if (e + 1 <= nf - 1) edge(e, col(e + 1)) = 1.0 / hf;
      if (e >= 1) edge(e, col(e)) = -1.0 / hf;
    }
    gradient_ = edge * interp;
    stiffness_ = hf * gradient_.transpose() * gradient_;
    stiffness_ = 0.5 * (stiffness_ + stiffness_.transpose()).eval();
  }

  int n_;
  double length_, h_ = 0.0;
  Matrix bending_, stiffness_, gradient_, second_;
  Vector second_weights_;
};

inline void check_conforming(const PlateFunction& u, const PlateGrid& p) {
  if (u.values.size() != p.size()) throw std::invalid_argument("plate function does not match plate grid");
}

// W^{-1} B u
inline PlateFunction beam_biharmonic(const PlateFunction& u, const PlateGrid& p) {
  check_conforming(u, p);
  return {p.bending() * u.values / p.spacing()};
}

inline PlateFunction beam_biharmonic(const PlateFunction& u, const Grid& g) {
  return beam_biharmonic(u, PlateGrid(g));
}

inline double inner_product(const VelocityField& a, const VelocityField& b, const Grid& g) {
  check_conforming(a, g);
  check_conforming(b, g);
  return a.values.dot(g.face_weights().cwiseProduct(b.values));
}

inline double inner_product(const ScalarField& a, const ScalarField& b, const Grid& g) {
  check_conforming(a, g);
  check_conforming(b, g);
  return g.cell_weight() * a.values.dot(b.values);
}

inline double inner_product(const PlateFunction& a, const PlateFunction& b, const PlateGrid& p) {
  check_conforming(a, p);
  check_conforming(b, p);
  return p.inner(a.values, b.values);
}

inline double inner_product(const PlateFunction& a, const PlateFunction& b, const Grid& g) {
  if (a.values.size() != g.nx() || b.values.size() != g.nx()) {
    throw std::invalid_argument("plate function does not match grid");
  }
  return g.hx() * a.values.dot(b.values);
}

// Normal velocity on the elastic face, ordered along x.
inline PlateFunction elastic_trace(const VelocityField& v, const Grid& g) {
  check_conforming(v, g);
  PlateFunction t{Vector(g.nx())};
  for (int i = 0; i < g.nx(); ++i) t.values[i] = v.values[g.elastic_faces()[i]];
  return t;
}

// Square plate (0,L)^2 with (n+1)^2 vertices; clamped functions carry zero
// boundary values.
class PlateGrid2D {
 public:
  PlateGrid2D(int n, double length) : n_(n), length_(length) {
    if (n_ < 4) throw std::invalid_argument("plate grid too coarse: need at least 4 cells per side");
    if (!(length_ > 0.0)) throw std::invalid_argument("plate length must be positive");
    h_ = length_ / n_;
    build();
  }

  int cells() const { return n_; }
  int num_nodes() const { return (n_ + 1) * (n_ + 1); }
  int num_interior() const { return (n_ - 1) * (n_ - 1); }
  double spacing() const { return h_; }
  double length() const { return length_; }
  int node(int i, int j) const { return j * (n_ + 1) + i; }
  bool interior(int i, int j) const { return i > 0 && j > 0 && i < n_ && j < n_; }
  std::pair<double, double> position(int k) const { return {(k % (n_ + 1)) * h_, (k / (n_ + 1)) * h_}; }

  // Second-derivative stencils evaluated at interior nodes (zero rows on the
  // boundary).
  const SparseMatrix& dxx() const { return dxx_; }
  const SparseMatrix& dyy() const { return dyy_; }
  const SparseMatrix& dxy() const { return dxy_; }
  // Clamped Laplacian at every node, mirror ghosts on the boundary.
  const SparseMatrix& clamped_laplacian() const { return lap_; }
  const Vector& weights() const { return weights_; }
  // interior unknowns <-> full grid
  const SparseMatrix& restriction() const { return restrict_; }
  // (Δu, Δw) on interior unknowns
  const SparseMatrix& bending() const { return bending_; }

  double inner(const Vector& a, const Vector& b) const { return a.dot(weights_.cwiseProduct(b)); }

  Vector sample(const std::function<double(double, double)>& f) const {
    Vector v(num_nodes());
    for (int k = 0; k < num_nodes(); ++k) {
      const auto [x, y] = position(k);
      v[k] = f(x, y);
    }
    return v;
  }

 private:
  void build() {
    const int np = n_ + 1;
    const double c = 1.0 / (h_ * h_);
    Triplets txx, tyy, txy, tl, tr;
    for (int j = 0; j < np; ++j) {
      for (int i = 0; i < np; ++i) {
        const int k = node(i, j);
        if (interior(i, j)) {
          txx.emplace_back(k, node(i - 1, j), c);
          txx.emplace_back(k, k, -2.0 * c);
          txx.emplace_back(k, node(i + 1, j), c);
          tyy.emplace_back(k, node(i, j - 1), c);
          tyy.emplace_back(k, k, -2.0 * c);
          tyy.emplace_back(k, node(i, j + 1), c);
          const double q = 0.25 * c;
          txy.emplace_back(k, node(i + 1, j + 1), q);
          txy.emplace_back(k, node(i + 1, j - 1), -q);
          txy.emplace_back(k, node(i - 1, j + 1), -q);
          txy.emplace_back(k, node(i - 1, j - 1), q);
        }
        auto axis = [&](int a, auto at) {
          tl.emplace_back(k, k, -2.0 * c);
          if (a == 0) {
            tl.emplace_back(k, at(1), 2.0 * c);
          } else if (a == n_) {
            tl.emplace_back(k, at(n_ - 1), 2.0 * c);
          } else {
            tl.emplace_back(k, at(a - 1), c);
            tl.emplace_back(k, at(a + 1), c);
          }
        };
        axis(i, [&](int ii) { return node(ii, j); });
        axis(j, [&](int jj) { return node(i, jj); });
      }
    }
    auto make = [&](Triplets& t) {
      SparseMatrix m(num_nodes(), num_nodes());
      m.setFromTriplets(t.begin(), t.end());
      return m;
    };
    dxx_ = make(txx);
    dyy_ = make(tyy);
    dxy_ = make(txy);
    lap_ = make(tl);
    weights_ = Vector(num_nodes());
    for (int j = 0; j < np; ++j) {
      for (int i = 0; i < np; ++i) {
        const double wx = (i == 0 || i == n_) ? 0.5 : 1.0;
        const double wy = (j == 0 || j == n_) ? 0.5 : 1.0;
        weights_[node(i, j)] = wx * wy * h_ * h_;
      }
    }
    int r = 0;
    for (int j = 1; j < n_; ++j) {
      for (int i = 1; i < n_; ++i) tr.emplace_back(node(i, j), r++, 1.0);
    }
    restrict_.resize(num_nodes(), num_interior());
    restrict_.setFromTriplets(tr.begin(), tr.end());
    const SparseMatrix lr = lap_ * restrict_;
    bending_ = SparseMatrix(lr.transpose() * weights_.asDiagonal() * lr);
  }

  int n_;
  double length_, h_ = 0.0;
  SparseMatrix dxx_, dyy_, dxy_, lap_, restrict_, bending_;
  Vector weights_;
};

}  // namespace plateflow::mesh
