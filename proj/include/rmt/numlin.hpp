#pragma once

#include "core.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace rmt {

// Square operator on C^dim given by its action and the action of its adjoint.
class LinearOperator {
 public:
  using Action = std::function<void(const Vector& in, Vector& out)>;

  LinearOperator(Index dim, Action apply, Action apply_adjoint, std::string descriptor)
      : dim_(dim), apply_(std::move(apply)), apply_adjoint_(std::move(apply_adjoint)), descriptor_(std::move(descriptor)) {
    require(dim >= 0, "LinearOperator: negative dimension");
  }

  static LinearOperator from_dense(Matrix m, std::string descriptor = "dense") {
    require(m.rows() == m.cols(), "LinearOperator::from_dense needs a square matrix");
    auto shared = std::make_shared<const Matrix>(std::move(m));
    LinearOperator op(
        shared->rows(), [shared](const Vector& in, Vector& out) { out.noalias() = (*shared) * in; },
        [shared](const Vector& in, Vector& out) { out.noalias() = shared->adjoint() * in; }, std::move(descriptor));
    op.dense_ = shared;
    return op;
  }

  Index dim() const noexcept { return dim_; }
  const std::string& descriptor() const noexcept { return descriptor_; }
  const Matrix* dense() const noexcept { return dense_.get(); }

  void apply(const Vector& in, Vector& out) const {
    out.resize(dim_);
    apply_(in, out);
  }
  void apply_adjoint(const Vector& in, Vector& out) const {
    out.resize(dim_);
    apply_adjoint_(in, out);
  }
  Vector apply(const Vector& in) const {
    Vector out(dim_);
    apply_(in, out);
    return out;
  }
  Vector apply_adjoint(const Vector& in) const {
    Vector out(dim_);
    apply_adjoint_(in, out);
    return out;
  }

  LinearOperator adjoint() const {
    LinearOperator op(dim_, apply_adjoint_, apply_, descriptor_ + "*");
    if (dense_) op.dense_ = std::make_shared<const Matrix>(dense_->adjoint());
    return op;
  }

  // Column-by-column assembly. Intended for small operators and tests.
  Matrix to_dense() const {
    if (dense_) return *dense_;
    Matrix m(dim_, dim_);
    Vector e = Vector::Zero(dim_), col(dim_);
    for (Index j = 0; j < dim_; ++j) {
      e(j) = 1.0;
      apply_(e, col);
      m.col(j) = col;
      e(j) = 0.0;
    }
    return m;
  }

 private:
  Index dim_;
  Action apply_;
  Action apply_adjoint_;
  std::string descriptor_;
  std::shared_ptr<const Matrix> dense_;
};

inline Vector random_unit_vector(Index dim, const SeededStream& stream) {
  RandomSource rng(stream);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = cplx(re, im);
  }
  v.normalize();
  return v;
}

// Largest |<Av, w> - <v, A*w>| / (|Av| |w| + |v| |A*w|) over random probe pairs.
inline double adjoint_consistency(const LinearOperator& op, int probes = 8, std::uint64_t seed = 17) {
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const Vector v = random_unit_vector(op.dim(), {seed, 1, static_cast<std::uint64_t>(i)});
    const Vector w = random_unit_vector(op.dim(), {seed, 2, static_cast<std::uint64_t>(i)});
    const Vector av = op.apply(v), aw = op.apply_adjoint(w);
    const double scale = av.norm() * w.norm() + v.norm() * aw.norm();
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(w.dot(av) - aw.dot(v)) / scale);
  }
  return worst;
}

struct NormOptions {
  double tol = 1e-8;                 // relative tolerance on the top eigenvalue of A*A
  int max_iterations = 5000;         // operator applications of A*A per start
  int restarts = 3;                  // number of independent seeded starts
  std::uint64_t seed = 0x5EEDull;
  Index exact_threshold = 512;       // dense path when the smaller dimension is at most this
  Index krylov_dim = 100;            // basis size before an explicit restart
  std::size_t memory_budget = std::size_t{1} << 29;  // bytes for the Krylov basis
  std::optional<Vector> start;       // optional first start vector
};

struct NormEstimate {
  double value = 0.0;
  double residual = 0.0;  // Ritz residual relative to the top eigenvalue of A*A
  int iterations = 0;
  bool converged = false;
  bool exact = false;
};

namespace detail {

struct LanczosOutcome {
  double theta = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int steps = 0;
  bool converged = false;
};

// Top eigenvalue of the hermitian positive operator B by restarted Lanczos with full
// reorthogonalisation. Each restart begins from the current top Ritz vector.
inline LanczosOutcome lanczos_top(const std::function<void(const Vector&, Vector&)>& B, Index n, Vector v,
                                  const NormOptions& opt) {
  LanczosOutcome out;
  if (n == 0) {
    out.converged = true;
    out.residual = 0.0;
    return out;
  }
  const std::size_t per_vec = static_cast<std::size_t>(n) * sizeof(cplx);
  Index m_mem = static_cast<Index>(opt.memory_budget / std::max<std::size_t>(per_vec, 1)) - 1;
  const Index m = std::max<Index>(2, std::min({opt.krylov_dim, n, std::max<Index>(m_mem, 8)}));

  Matrix V(n, m + 1);
  Vector w(n), h;
  Eigen::VectorXd alpha(m), beta(m);
  v.normalize();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;

  while (out.steps < opt.max_iterations) {
    V.col(0) = v;
    Index used = 0;
    double theta = 0.0, res = std::numeric_limits<double>::infinity();
    Eigen::VectorXd s;
    bool done = false;
    for (Index j = 0; j < m; ++j) {
      B(V.col(j), w);
      ++out.steps;
      const double a = V.col(j).dot(w).real();
      w -= a * V.col(j);
      if (j > 0) w -= beta(j - 1) * V.col(j - 1);
      for (int pass = 0; pass < 2; ++pass) {
        h.noalias() = V.leftCols(j + 1).adjoint() * w;
        w.noalias() -= V.leftCols(j + 1) * h;
      }
      const double b = w.norm();
      alpha(j) = a;
      beta(j) = b;
      used = j + 1;

      Eigen::VectorXd d = alpha.head(used);
      Eigen::VectorXd e = beta.head(std::max<Index>(used - 1, 0));
      tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
      theta = tri.eigenvalues()(used - 1);
      s = tri.eigenvectors().col(used - 1);
      res = b * std::abs(s(used - 1));
      const double scale = std::max(std::abs(theta), std::numeric_limits<double>::min());
      if (res <= opt.tol * scale || b <= 1e-14 * std::max(std::abs(theta), 1e-300) || used == n) {
        done = true;
        break;
      }
      if (out.steps >= opt.max_iterations) break;
      V.col(j + 1) = w / b;
    }
    out.theta = std::max(out.theta, theta);
    out.residual = std::abs(theta) > 0 ? res / std::abs(theta) : res;
    if (done) {
      out.converged = true;
      out.theta = theta;
      return out;
    }
    v.noalias() = V.leftCols(used) * s;
    v.normalize();
  }
  return out;
}

inline double top_gram_eigenvalue(const Matrix& a) {
  const Matrix g = a.rows() <= a.cols() ? Matrix(a * a.adjoint()) : Matrix(a.adjoint() * a);
  if (g.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(g.rows() - 1));
}

}  // namespace detail

// Largest singular value of an operator, with diagnostics.
inline NormEstimate estimate_spectral_norm(const LinearOperator& op, const NormOptions& opt = {}) {
  require(opt.tol > 0.0, "spectral norm tolerance must be positive");
  NormEstimate est;
  const Index n = op.dim();
  if (n == 0) {
    est.converged = est.exact = true;
    return est;
  }
  if (op.dense() && n <= opt.exact_threshold) {
    est.value = std::sqrt(detail::top_gram_eigenvalue(*op.dense()));
    est.converged = est.exact = true;
    return est;
  }
  if (!op.dense() && n <= std::min<Index>(opt.exact_threshold, 256)) {
    est.value = std::sqrt(detail::top_gram_eigenvalue(op.to_dense()));
    est.converged = est.exact = true;
    est.iterations = static_cast<int>(n);
    return est;
  }

  Vector tmp(n);
  auto gram = [&op, &tmp](const Vector& in, Vector& out) {
    op.apply(in, tmp);
    op.apply_adjoint(tmp, out);
  };
  double best = -1.0;
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Vector v0 = (r == 0 && opt.start && opt.start->size() == n)
                    ? *opt.start
                    : random_unit_vector(n, {opt.seed, 0x4C414E43ull, static_cast<std::uint64_t>(r)});
    if (v0.norm() == 0.0) v0 = random_unit_vector(n, {opt.seed, 0x4C414E43ull, 1000u + static_cast<std::uint64_t>(r)});
    const auto res = detail::lanczos_top(gram, n, v0, opt);
    est.iterations += res.steps;
    if (res.theta > best) {
      best = res.theta;
      est.residual = res.residual;
      est.converged = res.converged;
    }
  }
  est.value = std::sqrt(std::max(0.0, best));
  return est;
}

inline NormEstimate estimate_spectral_norm(const Matrix& a, const NormOptions& opt = {}) {
  require(opt.tol > 0.0, "spectral norm tolerance must be positive");
  if (std::min(a.rows(), a.cols()) <= opt.exact_threshold || a.rows() != a.cols()) {
    if (a.rows() != a.cols() && std::min(a.rows(), a.cols()) > 4 * opt.exact_threshold)
      throw InvalidArgument("rectangular input too large for the dense norm path");
    NormEstimate est;
    est.value = std::sqrt(detail::top_gram_eigenvalue(a));
    est.converged = est.exact = true;
    return est;
  }
  return estimate_spectral_norm(LinearOperator::from_dense(a), opt);
}

inline double spectral_norm(const LinearOperator& op, const NormOptions& opt = {}) {
  const auto est = estimate_spectral_norm(op, opt);
  if (!est.converged) throw ConvergenceError("spectral norm did not converge for " + op.descriptor(), est.residual);
  return est.value;
}

inline double spectral_norm(const Matrix& a, const NormOptions& opt = {}) {
  const auto est = estimate_spectral_norm(a, opt);
  if (!est.converged) throw ConvergenceError("spectral norm did not converge", est.residual);
  return est.value;
}

inline double spectral_norm(const Matrix& a, double tol) {
  NormOptions opt;
  opt.tol = tol;
  return spectral_norm(a, opt);
}

// (sum_i sigma_i^p)^(1/p) for even p, computed from the Gram eigenvalues.
inline double schatten_norm(const Matrix& a, int p) {
  require(p >= 2 && p % 2 == 0, "schatten_norm: p must be an even integer >= 2");
  const Matrix g = a.rows() <= a.cols() ? Matrix(a * a.adjoint()) : Matrix(a.adjoint() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = std::max(0.0, es.eigenvalues()(i));
    sum += (p == 2) ? lam : std::pow(lam, p / 2);
  }
  return std::pow(sum, 1.0 / p);
}

struct RCNorms {
  double row = 0.0;
  double col = 0.0;
  double rc = 0.0;
};

inline Matrix row_gram(const MatrixTuple& a) {
  Matrix g = Matrix::Zero(a.dim(), a.dim());
  for (const auto& x : a) g.noalias() += x * x.adjoint();
  return g;
}

inline Matrix col_gram(const MatrixTuple& a) {
  Matrix g = Matrix::Zero(a.dim(), a.dim());
  for (const auto& x : a) g.noalias() += x.adjoint() * x;
  return g;
}

inline double top_hermitian_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(h.rows() - 1);
}

inline RCNorms rc_norms(const MatrixTuple& a) {
  require(!a.empty(), "rc_norms: empty tuple");
  RCNorms r;
  r.row = std::sqrt(std::max(0.0, top_hermitian_eigenvalue(row_gram(a))));
  r.col = std::sqrt(std::max(0.0, top_hermitian_eigenvalue(col_gram(a))));
  r.rc = std::max(r.row, r.col);
  return r;
}

// Dense sum_j x_j (x) a_j with the standard Kronecker index (i, alpha) -> i * k + alpha.
inline Matrix kron_dense(const MatrixTuple& a, const MatrixTuple& x) {
  require(a.size() == x.size(), "kron_dense: tuple length mismatch");
  const Index k = a.dim(), N = x.dim();
  Matrix s = Matrix::Zero(N * k, N * k);
  for (std::size_t j = 0; j < a.size(); ++j)
    for (Index p = 0; p < N; ++p)
      for (Index q = 0; q < N; ++q) {
        const cplx xv = x[j](p, q);
        if (xv != cplx(0.0, 0.0)) s.block(p * k, q * k, k, k) += xv * a[j];
      }
  return s;
}

// S = sum_j x_j (x) a_j on C^{N k}. A vector is read as an N x k row-major matrix V
// and S acts as V -> sum_j x_j V a_j^T. Small operators are materialised.
inline LinearOperator kron_apply(const MatrixTuple& a, const MatrixTuple& x, Index dense_limit = 1024) {
  require(a.size() == x.size(), "kron_apply: tuple length mismatch");
  require(!a.empty(), "kron_apply: empty tuples");
  const Index k = a.dim(), N = x.dim();
  const std::string desc = "kron(n=" + std::to_string(a.size()) + ",N=" + std::to_string(N) + ",k=" + std::to_string(k) + ")";
  if (N * k <= dense_limit) return LinearOperator::from_dense(kron_dense(a, x), desc);

  auto as = std::make_shared<const MatrixTuple>(a);
  auto xs = std::make_shared<const MatrixTuple>(x);
  using Map = Eigen::Map<RowMajorMatrix>;
  using CMap = Eigen::Map<const RowMajorMatrix>;
  auto fwd = [as, xs, N, k](const Vector& in, Vector& out) {
    CMap V(in.data(), N, k);
    Map W(out.data(), N, k);
    W.setZero();
    RowMajorMatrix T(N, k);
    for (std::size_t j = 0; j < as->size(); ++j) {
      T.noalias() = V * (*as)[j].transpose();
      W.noalias() += (*xs)[j] * T;
    }
  };
  auto adj = [as, xs, N, k](const Vector& in, Vector& out) {
    CMap V(in.data(), N, k);
    Map W(out.data(), N, k);
    W.setZero();
    RowMajorMatrix T(N, k);
    for (std::size_t j = 0; j < as->size(); ++j) {
      T.noalias() = V * (*as)[j].conjugate();
      W.noalias() += (*xs)[j].adjoint() * T;
    }
  };
  return LinearOperator(N * k, fwd, adj, desc);
}

// Norm of sum_j x_j (x) a_j with Monte Carlo friendly defaults.
inline NormEstimate kron_norm(const MatrixTuple& a, const MatrixTuple& x, const NormOptions& opt = {}) {
  return estimate_spectral_norm(kron_apply(a, x), opt);
}

}  // namespace rmt
