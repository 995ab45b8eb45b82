#pragma once

#include "core.hpp"
#include "ncpoly.hpp"
#include "numlin.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace rmt {

enum class FamilyKind { semicircular, circular, haar_unitary };

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::semicircular: return "semicircular";
    case FamilyKind::circular: return "circular";
    case FamilyKind::haar_unitary: return "haar_unitary";
  }
  return "unknown";
}

inline FamilyKind parse_family_kind(const std::string& s) {
  if (s == "semicircular") return FamilyKind::semicircular;
  if (s == "circular") return FamilyKind::circular;
  if (s == "haar_unitary" || s == "haar") return FamilyKind::haar_unitary;
  throw InvalidArgument("unknown family kind: " + s);
}

inline constexpr std::size_t kDefaultBasisCap = 500000;

// Number of words of length <= depth over an alphabet of size m (saturating).
inline std::size_t fock_dimension(int m, int depth) {
  long double total = 0, p = 1;
  for (int l = 0; l <= depth; ++l) {
    total += p;
    p *= m;
  }
  return total > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2)
             ? std::numeric_limits<std::size_t>::max() / 2
             : static_cast<std::size_t>(total);
}

// Reduced words of length <= radius in the free group on n generators.
inline std::size_t free_group_ball_size(int n, int radius) {
  long double total = 1, level = 2.0L * n;
  for (int l = 1; l <= radius; ++l) {
    total += level;
    level *= (2.0L * n - 1);
  }
  return total > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2)
             ? std::numeric_limits<std::size_t>::max() / 2
             : static_cast<std::size_t>(total);
}

// Words over {0..m-1} of length <= depth in length-then-lex order. Prepending letter
// a to a word w of length L lands at offset(L+1) + a * m^L + (index of w within its
// length), so creation operators move contiguous blocks.
class FockBasis {
 public:
  FockBasis(int alphabet, int depth) : m_(alphabet), d_(depth) {
    require(alphabet >= 1, "FockBasis: alphabet must be non-empty");
    require(depth >= 0, "FockBasis: depth must be >= 0");
    offsets_.push_back(0);
    power_.push_back(1);
    for (int l = 0; l <= depth; ++l) {
      offsets_.push_back(offsets_.back() + power_.back());
      power_.push_back(power_.back() * m_);
    }
  }

  int alphabet_size() const noexcept { return m_; }
  int depth() const noexcept { return d_; }
  Index size() const noexcept { return offsets_[d_ + 1]; }
  Index offset(int length) const { return offsets_.at(length); }
  Index count(int length) const { return power_.at(length); }

  Index index(const std::vector<int>& word) const {
    require(static_cast<int>(word.size()) <= d_, "FockBasis: word longer than depth");
    Index lex = 0;
    for (int a : word) {
      require(a >= 0 && a < m_, "FockBasis: letter out of range");
      lex = lex * m_ + a;
    }
    return offsets_[word.size()] + lex;
  }

  std::vector<int> word(Index idx) const {
    require(idx >= 0 && idx < size(), "FockBasis: index out of range");
    int len = 0;
    while (offsets_[len + 1] <= idx) ++len;
    Index lex = idx - offsets_[len];
    std::vector<int> w(len);
    for (int i = len - 1; i >= 0; --i) {
      w[i] = static_cast<int>(lex % m_);
      lex /= m_;
    }
    return w;
  }

 private:
  int m_;
  int d_;
  std::vector<Index> offsets_;
  std::vector<Index> power_;
};

// Reduced words of the free group on n generators, letters 2j (g_j) and 2j+1 (g_j^-1).
// Level L is generated from level L-1 by prepending letters, parents in order, letters
// ascending; this order is deterministic and every child block is contiguous.
class FreeGroupBall {
 public:
  FreeGroupBall(int n, int radius) : n_(n), r_(radius) {
    require(n >= 1, "FreeGroupBall: n must be >= 1");
    require(radius >= 0, "FreeGroupBall: radius must be >= 0");
    first_.push_back(-1);
    parent_.push_back(-1);
    level_offset_.push_back(0);
    level_offset_.push_back(1);
    for (int l = 1; l <= radius; ++l) {
      const Index begin = level_offset_[l - 1], end = level_offset_[l];
      for (Index i = begin; i < end; ++i) {
        child_start_.push_back(static_cast<Index>(first_.size()));
        for (int y = 0; y < 2 * n; ++y) {
          if (first_[i] >= 0 && y == (first_[i] ^ 1)) continue;
          first_.push_back(y);
          parent_.push_back(i);
        }
      }
      level_offset_.push_back(static_cast<Index>(first_.size()));
    }
  }

  int n() const noexcept { return n_; }
  int radius() const noexcept { return r_; }
  Index size() const noexcept { return static_cast<Index>(first_.size()); }
  int first_letter(Index i) const { return first_[i]; }
  Index parent(Index i) const { return parent_[i]; }
  int length(Index i) const {
    int l = 0;
    while (level_offset_[l + 1] <= i) ++l;
    return l;
  }

  // Index of y * w, or -1 if it leaves the ball.
  Index left_multiply(Index i, int y) const {
    if (first_[i] >= 0 && y == (first_[i] ^ 1)) return parent_[i];
    if (i >= level_offset_[r_]) return -1;
    const Index start = child_start_[i];
    if (first_[i] < 0) return start + y;
    return start + y - (y > (first_[i] ^ 1) ? 1 : 0);
  }

 private:
  int n_;
  int r_;
  std::vector<int> first_;
  std::vector<Index> parent_;
  std::vector<Index> level_offset_;
  std::vector<Index> child_start_;
};

// Truncated free family acting on rows of D x k blocks (row = basis word).
class FreeFamily {
 public:
  FreeFamily(FamilyKind kind, int n, int depth, std::size_t cap = kDefaultBasisCap) : kind_(kind), n_(n), depth_(depth) {
    require(n >= 1, "build_family: n must be >= 1");
    require(depth >= 0, "build_family: depth must be >= 0");
    const std::size_t projected = projected_size(kind, n, depth);
    if (projected > cap)
      throw CapacityError("build_family: basis of " + std::to_string(projected) + " words exceeds cap " + std::to_string(cap),
                          projected * (kind == FamilyKind::haar_unitary ? (2 * n + 3) * sizeof(Index) : sizeof(cplx)));
    if (kind == FamilyKind::haar_unitary) {
      ball_ = std::make_shared<FreeGroupBall>(n, depth);
      fwd_.assign(n, std::vector<Index>(ball_->size(), -1));
      bwd_.assign(n, std::vector<Index>(ball_->size(), -1));
      for (int j = 0; j < n; ++j)
        for (Index i = 0; i < ball_->size(); ++i) {
          const Index t = ball_->left_multiply(i, 2 * j);
          fwd_[j][i] = t;
          if (t >= 0) bwd_[j][t] = i;
        }
      size_ = ball_->size();
    } else {
      basis_ = std::make_shared<FockBasis>(kind == FamilyKind::circular ? 2 * n : n, depth);
      size_ = basis_->size();
    }
  }

  static std::size_t projected_size(FamilyKind kind, int n, int depth) {
    switch (kind) {
      case FamilyKind::semicircular: return fock_dimension(n, depth);
      case FamilyKind::circular: return fock_dimension(2 * n, depth);
      case FamilyKind::haar_unitary: return free_group_ball_size(n, depth);
    }
    return 0;
  }

  FamilyKind kind() const noexcept { return kind_; }
  int n() const noexcept { return n_; }
  int depth() const noexcept { return depth_; }
  Index size() const noexcept { return size_; }
  const FockBasis* basis() const noexcept { return basis_.get(); }
  const FreeGroupBall* ball() const noexcept { return ball_.get(); }

  // Words of length <= d occupy the leading rows of the basis.
  Index leading_size(int d) const {
    if (basis_) return basis_->offset(std::min(d, depth_) + 1);
    return static_cast<Index>(free_group_ball_size(n_, std::min(d, depth_)));
  }

  // out += op_j(in), or out += op_j*(in) when adjoint. in/out are size() x k.
  void add_apply(int j, bool adjoint, const RowMajorMatrix& in, RowMajorMatrix& out) const {
    switch (kind_) {
      case FamilyKind::semicircular:
        add_creation(j, in, out);
        add_annihilation(j, in, out);
        break;
      case FamilyKind::circular:
        if (!adjoint) {
          add_creation(2 * j, in, out);
          add_annihilation(2 * j + 1, in, out);
        } else {
          add_annihilation(2 * j, in, out);
          add_creation(2 * j + 1, in, out);
        }
        break;
      case FamilyKind::haar_unitary: {
        const auto& map = adjoint ? bwd_[j] : fwd_[j];
        for (Index i = 0; i < size_; ++i)
          if (map[i] >= 0) out.row(map[i]) += in.row(i);
        break;
      }
    }
  }

  // Scalar operator op_j (k = 1) as a handle, mainly for inspection and tests.
  LinearOperator as_operator(int j) const {
    require(j >= 0 && j < n_, "FreeFamily::as_operator: index out of range");
    auto self = std::make_shared<const FreeFamily>(*this);
    auto make = [self, j](bool adj) {
      return [self, j, adj](const Vector& in, Vector& out) {
        RowMajorMatrix a = in, b = RowMajorMatrix::Zero(in.size(), 1);
        self->add_apply(j, adj, a, b);
        out = Eigen::Map<const Vector>(b.data(), b.size());
      };
    };
    return LinearOperator(size_, make(false), make(true), to_string(kind_) + "[" + std::to_string(j) + "]");
  }

 private:
  void add_creation(int a, const RowMajorMatrix& in, RowMajorMatrix& out) const {
    const auto& B = *basis_;
    for (int L = 0; L < depth_; ++L) {
      const Index cnt = B.count(L);
      out.middleRows(B.offset(L + 1) + a * cnt, cnt) += in.middleRows(B.offset(L), cnt);
    }
  }
  void add_annihilation(int a, const RowMajorMatrix& in, RowMajorMatrix& out) const {
    const auto& B = *basis_;
    for (int L = 0; L < depth_; ++L) {
      const Index cnt = B.count(L);
      out.middleRows(B.offset(L), cnt) += in.middleRows(B.offset(L + 1) + a * cnt, cnt);
    }
  }

  FamilyKind kind_;
  int n_;
  int depth_;
  Index size_ = 0;
  std::shared_ptr<FockBasis> basis_;
  std::shared_ptr<FreeGroupBall> ball_;
  std::vector<std::vector<Index>> fwd_, bwd_;
};

inline FreeFamily build_family(FamilyKind kind, int n, int depth, std::size_t cap = kDefaultBasisCap) {
  require(depth >= 1, "build_family: depth must be >= 1");
  return FreeFamily(kind, n, depth, cap);
}

// Deepest truncation whose basis (with `extra` additional levels) fits the cap.
inline int max_depth_within_cap(FamilyKind kind, int n, std::size_t cap = kDefaultBasisCap, int extra = 0) {
  int d = 0;
  while (d < 4096 && FreeFamily::projected_size(kind, n, d + 1 + extra) <= cap) ++d;
  return d;
}

// 12 for n <= 4 unless the cap forces something shallower.
inline int default_depth(FamilyKind kind, int n, std::size_t cap = kDefaultBasisCap) {
  return std::max(1, std::min(12, max_depth_within_cap(kind, n, cap)));
}

struct FockOptions {
  NormOptions norm{};
  std::size_t cap = kDefaultBasisCap;
  bool compare_previous = true;
};

struct FreeNormResult {
  double value = 0.0;
  double previous = 0.0;       // same computation one level shallower
  double relative_gap = 0.0;   // (value - previous) / value
  int depth = 0;
  Index basis_size = 0;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline FockOptions fock_defaults(FockOptions o) {
  // Large truncated spaces: smaller Krylov blocks keep the basis within memory.
  o.norm.memory_budget = std::min<std::size_t>(o.norm.memory_budget, std::size_t{1} << 28);
  return o;
}

inline LinearOperator free_sum_operator(const MatrixTuple& a, std::shared_ptr<const FreeFamily> fam, Index rows) {
  const Index k = a.dim();
  auto as = std::make_shared<const MatrixTuple>(a);
  const Index D = fam->size();
  auto make = [as, fam, k, D, rows](bool adj) {
    return [as, fam, k, D, rows, adj](const Vector& in, Vector& out) {
      RowMajorMatrix V = RowMajorMatrix::Zero(D, k), T(D, k), W = RowMajorMatrix::Zero(D, k);
      V.topRows(rows) = Eigen::Map<const RowMajorMatrix>(in.data(), rows, k);
      for (std::size_t j = 0; j < as->size(); ++j) {
        T.setZero();
        fam->add_apply(static_cast<int>(j), adj, V, T);
        if (adj)
          W.noalias() += T * (*as)[j].conjugate();
        else
          W.noalias() += T * (*as)[j].transpose();
      }
      Eigen::Map<RowMajorMatrix>(out.data(), rows, k) = W.topRows(rows);
    };
  };
  return LinearOperator(rows * k, make(false), make(true),
                        "free_sum(" + to_string(fam->kind()) + ",depth=" + std::to_string(fam->depth()) + ")");
}

}  // namespace detail

// ||sum_j T_j (x) a_j|| for the truncated family, with the value one level shallower.
inline FreeNormResult free_norm(const MatrixTuple& a, const FreeFamily& family, const FockOptions& opts_in = {}) {
  require(a.size() == static_cast<std::size_t>(family.n()), "free_norm: tuple length must equal family size");
  const FockOptions opts = detail::fock_defaults(opts_in);
  auto fam = std::make_shared<const FreeFamily>(family);
  auto run = [&](int d) {
    const Index rows = fam->leading_size(d);
    return estimate_spectral_norm(detail::free_sum_operator(a, fam, rows), opts.norm);
  };
  FreeNormResult r;
  r.depth = family.depth();
  r.basis_size = family.size();
  const auto top = run(family.depth());
  r.value = top.value;
  r.converged = top.converged;
  r.residual = top.residual;
  r.iterations = top.iterations;
  if (opts.compare_previous && family.depth() >= 1) {
    const auto prev = run(family.depth() - 1);
    r.previous = prev.value;
    r.iterations += prev.iterations;
    r.converged = r.converged && prev.converged;
  }
  r.relative_gap = r.value > 0 ? (r.value - r.previous) / r.value : 0.0;
  return r;
}

inline FreeNormResult free_norm(const MatrixTuple& a, FamilyKind kind, int depth, const FockOptions& opts = {}) {
  return free_norm(a, FreeFamily(kind, static_cast<int>(a.size()), depth, opts.cap), opts);
}

namespace detail {

// Applies the monomial word (letters in the polynomial convention) to V, rightmost
// letter first, or its adjoint when adj is set.
inline RowMajorMatrix apply_word(const FreeFamily& fam, const Word& w, bool adj, const RowMajorMatrix& V) {
  const int n = fam.n();
  RowMajorMatrix cur = V, next(V.rows(), V.cols());
  auto step = [&](int letter, bool flip) {
    const bool star = letter > n;
    const int j = (star ? letter - n : letter) - 1;
    next.setZero();
    fam.add_apply(j, star != flip, cur, next);
    cur.swap(next);
  };
  if (!adj)
    for (auto it = w.rbegin(); it != w.rend(); ++it) step(*it, false);
  else
    for (int l : w) step(l, true);
  return cur;
}

}  // namespace detail

// ||P(T)|| compressed to words of length <= depth. The family is evaluated at depth +
// degree(P) so the compression is exact, which keeps the lower-bound property.
inline FreeNormResult free_poly_norm(const StarPolynomial& p, const FreeFamily& family, const FockOptions& opts_in = {}) {
  require(family.kind() != FamilyKind::haar_unitary, "free_poly_norm: circular or semicircular families only");
  require(p.num_vars() == family.n(), "free_poly_norm: variable count must equal family size");
  const FockOptions opts = detail::fock_defaults(opts_in);
  const int deg = p.degree();
  auto fam = std::make_shared<const FreeFamily>(family.kind(), family.n(), family.depth() + deg, opts.cap);
  const Index k = p.coeff_dim();
  const Index D = fam->size();
  auto poly = std::make_shared<const StarPolynomial>(p);
  auto run = [&](int d) {
    const Index rows = fam->leading_size(d);
    auto make = [poly, fam, k, D, rows](bool adj) {
      return [poly, fam, k, D, rows, adj](const Vector& in, Vector& out) {
        RowMajorMatrix V = RowMajorMatrix::Zero(D, k), W = RowMajorMatrix::Zero(D, k);
        V.topRows(rows) = Eigen::Map<const RowMajorMatrix>(in.data(), rows, k);
        for (const auto& [w, a] : poly->terms()) {
          const RowMajorMatrix T = detail::apply_word(*fam, w, adj, V);
          if (adj)
            W.noalias() += T * a.conjugate();
          else
            W.noalias() += T * a.transpose();
        }
        Eigen::Map<RowMajorMatrix>(out.data(), rows, k) = W.topRows(rows);
      };
    };
    LinearOperator op(rows * k, make(false), make(true), "free_poly(" + to_string(fam->kind()) + ")");
    return estimate_spectral_norm(op, opts.norm);
  };
  FreeNormResult r;
  r.depth = family.depth();
  r.basis_size = fam->leading_size(family.depth());
  const auto top = run(family.depth());
  r.value = top.value;
  r.converged = top.converged;
  r.residual = top.residual;
  r.iterations = top.iterations;
  if (opts.compare_previous) {
    const auto prev = run(family.depth() - 1);
    r.previous = prev.value;
    r.iterations += prev.iterations;
    r.converged = r.converged && prev.converged;
  }
  r.relative_gap = r.value > 0 ? (r.value - r.previous) / r.value : 0.0;
  return r;
}

// <T^w Omega, Omega> for a scalar word in the polynomial letter convention.
inline cplx vacuum_expectation(const FreeFamily& family, const Word& w) {
  RowMajorMatrix V = RowMajorMatrix::Zero(family.size(), 1);
  V(0, 0) = 1.0;
  return detail::apply_word(family, w, false, V)(0, 0);
}

inline std::pair<double, double> s2_sandwich(const MatrixTuple& a) {
  const double rc = rc_norms(a).rc;
  return {rc, 2.0 * rc};
}

// ||sum_j z_j|| for free Haar unitaries truncated to the ball of the given radius.
//
// Root-fixing automorphisms of the Cayley tree that preserve edge orientation commute
// with sum_j lambda(g_j); their orbits are the sign patterns of reduced words. On the
// orbit-averaged vectors the operator prepends '+' with weight sqrt(|O(+s)|/|O(s)|)
// and cancels a leading '-' with weight sqrt(|O(s)|/|O(s')|), where
// |O(s)| = n * prod_i (n if s_i = s_{i+1} else n - 1). The norm of the truncated
// operator is attained on this subspace, whose dimension is 2^(radius+1) - 1.
inline FreeNormResult haar_sum_norm(int n, int radius, const FockOptions& opts_in = {}) {
  require(n >= 1, "haar_sum_norm: n must be >= 1");
  require(radius >= 1 && radius < 40, "haar_sum_norm: radius out of range");
  const std::size_t states = (std::size_t{1} << (radius + 1)) - 1;
  if (states > opts_in.cap)
    throw CapacityError("haar_sum_norm: reduced basis of " + std::to_string(states) + " states exceeds cap",
                        states * sizeof(cplx));
  const FockOptions opts = detail::fock_defaults(opts_in);
  const double sn = std::sqrt(static_cast<double>(n)), sn1 = std::sqrt(static_cast<double>(n - 1));
  auto run = [&](int r) {
    const Index dim = (Index{1} << (r + 1)) - 1;
    std::vector<Index> plus(dim, -1), cancel(dim, -1);
    std::vector<double> wplus(dim, 0.0), wcancel(dim, 0.0);
    for (int L = 0; L <= r; ++L) {
      const Index off = (Index{1} << L) - 1;
      for (Index b = 0; b < (Index{1} << L); ++b) {
        const Index i = off + b;
        const bool lead_minus = L > 0 && ((b >> (L - 1)) & 1);
        if (L < r) {
          plus[i] = ((Index{1} << (L + 1)) - 1) + b;
          wplus[i] = (L == 0 || !lead_minus) ? sn : sn1;
        }
        if (lead_minus) {
          const Index rest = b - (Index{1} << (L - 1));
          cancel[i] = ((Index{1} << (L - 1)) - 1) + rest;
          const bool second_minus = L >= 2 && ((b >> (L - 2)) & 1);
          wcancel[i] = (L == 1 || second_minus) ? sn : sn1;
        }
      }
    }
    auto fwd = [=](const Vector& in, Vector& out) {
      out.setZero();
      for (Index i = 0; i < dim; ++i) {
        if (plus[i] >= 0) out(plus[i]) += wplus[i] * in(i);
        if (cancel[i] >= 0) out(cancel[i]) += wcancel[i] * in(i);
      }
    };
    auto adj = [=](const Vector& in, Vector& out) {
      out.setZero();
      for (Index i = 0; i < dim; ++i) {
        if (plus[i] >= 0) out(i) += wplus[i] * in(plus[i]);
        if (cancel[i] >= 0) out(i) += wcancel[i] * in(cancel[i]);
      }
    };
    // Non-negative entries: the positive start vector overlaps the top singular vector.
    NormOptions no = opts.norm;
    no.restarts = 1;
    no.start = Vector::Constant(dim, cplx(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
    return estimate_spectral_norm(LinearOperator(dim, fwd, adj, "haar_sum_orbits"), no);
  };
  FreeNormResult res;
  res.depth = radius;
  res.basis_size = static_cast<Index>(states);
  const auto top = run(radius);
  res.value = top.value;
  res.converged = top.converged;
  res.residual = top.residual;
  res.iterations = top.iterations;
  if (opts.compare_previous) {
    const auto prev = run(radius - 1);
    res.previous = prev.value;
    res.iterations += prev.iterations;
    res.converged = res.converged && prev.converged;
  }
  res.relative_gap = res.value > 0 ? (res.value - res.previous) / res.value : 0.0;
  return res;
}

inline int max_reduced_radius(std::size_t cap = kDefaultBasisCap) {
  int r = 1;
  while (r < 39 && ((std::size_t{1} << (r + 2)) - 1) <= cap) ++r;
  return r;
}

}  // namespace rmt
