#pragma once

#include "core.hpp"
#include "rng.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace rmt {

enum class EnsembleKind { ginibre, gue, haar_unitary };

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::ginibre: return "ginibre";
    case EnsembleKind::gue: return "gue";
    case EnsembleKind::haar_unitary: return "haar_unitary";
  }
  return "unknown";
}

inline EnsembleKind parse_ensemble_kind(const std::string& s) {
  if (s == "ginibre") return EnsembleKind::ginibre;
  if (s == "gue") return EnsembleKind::gue;
  if (s == "haar_unitary" || s == "haar") return EnsembleKind::haar_unitary;
  throw InvalidArgument("unknown ensemble kind: " + s);
}

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::ginibre;
  Index dim = 1;
  std::size_t count = 1;

  void validate() const {
    require(dim >= 1, "ensemble dimension must be >= 1");
    require(count >= 1, "ensemble count must be >= 1");
  }
};

// N x N matrix of i.i.d. (g' + i g'') / sqrt(2N), filled in row-major order.
inline Matrix sample_ginibre(Index N, const SeededStream& stream) {
  require(N >= 1, "sample_ginibre: N must be >= 1");
  RandomSource rng(stream);
  const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(N));
  Matrix y(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      y(i, j) = cplx(s * re, s * im);
    }
  return y;
}

// (Y + Y*) / sqrt(2) with the upper triangle mirrored so the result is exactly hermitian.
inline Matrix sample_gue(Index N, const SeededStream& stream) {
  require(N >= 1, "sample_gue: N must be >= 1");
  const Matrix y = sample_ginibre(N, stream);
  Matrix x(N, N);
  const double r = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < N; ++i) {
    x(i, i) = cplx(r * 2.0 * y(i, i).real(), 0.0);
    for (Index j = i + 1; j < N; ++j) {
      const cplx v = r * (y(i, j) + std::conj(y(j, i)));
      x(i, j) = v;
      x(j, i) = std::conj(v);
    }
  }
  return x;
}

// QR of a Ginibre matrix with the phases of diag(R) moved into Q.
inline Matrix sample_haar_unitary(Index N, const SeededStream& stream) {
  require(N >= 1, "sample_haar_unitary: N must be >= 1");
  const Matrix z = sample_ginibre(N, stream);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < N; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0 ? d / a : cplx(1.0, 0.0));
  }
  return q;
}

inline Matrix sample_matrix(EnsembleKind kind, Index N, const SeededStream& stream) {
  switch (kind) {
    case EnsembleKind::ginibre: return sample_ginibre(N, stream);
    case EnsembleKind::gue: return sample_gue(N, stream);
    case EnsembleKind::haar_unitary: return sample_haar_unitary(N, stream);
  }
  throw InvalidArgument("unknown ensemble kind");
}

// Matrix j uses substream j of the given stream.
inline MatrixTuple sample_tuple(const EnsembleSpec& spec, const SeededStream& stream) {
  spec.validate();
  std::vector<Matrix> out;
  out.reserve(spec.count);
  for (std::size_t j = 0; j < spec.count; ++j) out.push_back(sample_matrix(spec.kind, spec.dim, stream.with_substream(j)));
  return MatrixTuple(std::move(out));
}

// u_j(alpha) = direct sum over m in alpha of independent Ginibre blocks Y_j^(m).
struct BlockFamily {
  std::size_t n = 0;
  std::map<Index, MatrixTuple> blocks;

  std::vector<Index> sizes() const {
    std::vector<Index> s;
    for (const auto& [m, _] : blocks) s.push_back(m);
    return s;
  }
  Index total_dim() const {
    Index t = 0;
    for (const auto& [m, _] : blocks) t += m;
    return t;
  }
};

// Block number b (position in alpha) draws matrix j from substream b * n + j, so a
// single-block family coincides with sample_tuple on the same stream.
inline BlockFamily sample_block_family(const std::vector<Index>& alpha, std::size_t n, const SeededStream& stream) {
  require(!alpha.empty(), "sample_block_family: alpha must be non-empty");
  require(n >= 1, "sample_block_family: n must be >= 1");
  for (std::size_t b = 0; b < alpha.size(); ++b) {
    require(alpha[b] >= 1, "sample_block_family: block sizes must be positive");
    if (b > 0) require(alpha[b] > alpha[b - 1], "sample_block_family: alpha must be strictly increasing");
  }
  BlockFamily fam;
  fam.n = n;
  for (std::size_t b = 0; b < alpha.size(); ++b) {
    std::vector<Matrix> mats;
    mats.reserve(n);
    for (std::size_t j = 0; j < n; ++j) mats.push_back(sample_ginibre(alpha[b], stream.with_substream(b * n + j)));
    fam.blocks.emplace(alpha[b], MatrixTuple(std::move(mats)));
  }
  return fam;
}

// Dense direct sum of the blocks of u_j; only for small families.
inline Matrix assemble_block(const BlockFamily& fam, std::size_t j) {
  const Index t = fam.total_dim();
  Matrix out = Matrix::Zero(t, t);
  Index off = 0;
  for (const auto& [m, tuple] : fam.blocks) {
    out.block(off, off, m, m) = tuple[j];
    off += m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary matrix format
//
//   offset  size  field
//   0       4     magic "RMTM"
//   4       4     format version, uint32 (currently 1)
//   8       8     rows, uint64
//   16      8     cols, uint64
//   24      16*rows*cols  entries in row-major order, each (re, im) as float64
//
// All integers and floats are little-endian.

inline constexpr char kMatrixMagic[4] = {'R', 'M', 'T', 'M'};
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw InvalidArgument("matrix stream truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_matrix(std::ostream& os, const Matrix& m) {
  os.write(kMatrixMagic, 4);
  detail::write_le<std::uint32_t>(os, kMatrixFormatVersion);
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      detail::write_le<double>(os, m(i, j).real());
      detail::write_le<double>(os, m(i, j).imag());
    }
  if (!os) throw std::runtime_error("failed writing matrix");
}

inline Matrix read_matrix(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMatrixMagic, 4) != 0) throw InvalidArgument("not a matrix file (bad magic)");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kMatrixFormatVersion) throw InvalidArgument("unsupported matrix format version " + std::to_string(version));
  const auto rows = detail::read_le<std::uint64_t>(is);
  const auto cols = detail::read_le<std::uint64_t>(is);
  if (rows > (1ull << 31) || cols > (1ull << 31)) throw InvalidArgument("matrix header dimensions out of range");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double re = detail::read_le<double>(is);
      const double im = detail::read_le<double>(is);
      m(i, j) = cplx(re, im);
    }
  return m;
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix(os, m);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_matrix(is);
}

}  // namespace rmt
