#pragma once

#include "core.hpp"
#include "numlin.hpp"
#include "rng.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rmt {

// Letters are 1..2n; letter n + j stands for X_j*. The empty word is the unit.
using Word = std::vector<int>;

class StarPolynomial {
 public:
  StarPolynomial(int n, Index k) : n_(n), k_(k) {
    require(n >= 1, "StarPolynomial: need at least one variable");
    require(k >= 1, "StarPolynomial: coefficient dimension must be >= 1");
  }

  int num_vars() const noexcept { return n_; }
  Index coeff_dim() const noexcept { return k_; }
  const std::map<Word, Matrix>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [w, _] : terms_) d = std::max(d, static_cast<int>(w.size()));
    return d;
  }

  // Adds coeff to the coefficient of w; exact zeros are dropped.
  StarPolynomial& add_term(const Word& w, const Matrix& coeff) {
    require(coeff.rows() == k_ && coeff.cols() == k_, "StarPolynomial: coefficient dimension mismatch");
    for (int l : w) require(l >= 1 && l <= 2 * n_, "StarPolynomial: letter out of range");
    auto it = terms_.find(w);
    if (it == terms_.end()) {
      if (!coeff.isZero(0.0)) terms_.emplace(w, coeff);
    } else {
      it->second += coeff;
      if (it->second.isZero(0.0)) terms_.erase(it);
    }
    return *this;
  }

  StarPolynomial& add_term(const Word& w, cplx scalar) {
    return add_term(w, Matrix(scalar * Matrix::Identity(k_, k_)));
  }

  int star_letter(int l) const { return l > n_ ? l - n_ : l + n_; }

  StarPolynomial adjoint() const {
    StarPolynomial out(n_, k_);
    for (const auto& [w, a] : terms_) {
      Word r(w.rbegin(), w.rend());
      for (auto& l : r) l = star_letter(l);
      out.add_term(r, Matrix(a.adjoint()));
    }
    return out;
  }

  StarPolynomial operator+(const StarPolynomial& other) const {
    require(n_ == other.n_ && k_ == other.k_, "StarPolynomial: shape mismatch in sum");
    StarPolynomial out = *this;
    for (const auto& [w, a] : other.terms_) out.add_term(w, a);
    return out;
  }

  StarPolynomial scaled(cplx s) const {
    StarPolynomial out(n_, k_);
    for (const auto& [w, a] : terms_) out.add_term(w, Matrix(s * a));
    return out;
  }

  static StarPolynomial variable(int n, int j, Index k = 1) {
    StarPolynomial p(n, k);
    p.add_term(Word{j}, cplx(1.0, 0.0));
    return p;
  }

 private:
  int n_;
  Index k_;
  std::map<Word, Matrix> terms_;
};

inline std::string word_to_string(const Word& w, int n) {
  if (w.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ' ';
    const int l = w[i];
    s += 'x' + std::to_string(l > n ? l - n : l);
    if (l > n) s += '*';
  }
  return s;
}

// Evaluates P at a tuple of N x N matrices, returning sum_J x^J (x) a_J as a dense
// (N k) x (N k) matrix with index (i, alpha) -> i * k + alpha.
inline Matrix evaluate(const StarPolynomial& p, const MatrixTuple& x, Index max_dim = 4096) {
  require(x.size() == static_cast<std::size_t>(p.num_vars()), "evaluate: variable count mismatch");
  const Index N = x.empty() ? 0 : x.dim();
  const Index k = p.coeff_dim();
  if (N * k > max_dim) throw CapacityError("evaluate: result dimension " + std::to_string(N * k) + " over cap",
                                           static_cast<std::size_t>(N * k) * static_cast<std::size_t>(N * k) * sizeof(cplx));
  const int n = p.num_vars();
  std::vector<Matrix> letters(2 * n + 1);
  for (int j = 1; j <= n; ++j) {
    letters[j] = x[j - 1];
    letters[n + j] = x[j - 1].adjoint();
  }
  std::map<Word, Matrix> prefix;
  prefix.emplace(Word{}, Matrix::Identity(N, N));
  auto monomial = [&](const Word& w) -> const Matrix& {
    Word cur;
    const Matrix* m = &prefix.at(Word{});
    for (int l : w) {
      cur.push_back(l);
      auto it = prefix.find(cur);
      if (it == prefix.end()) it = prefix.emplace(cur, Matrix((*m) * letters[l])).first;
      m = &it->second;
    }
    return *m;
  };
  Matrix out = Matrix::Zero(N * k, N * k);
  for (const auto& [w, a] : p.terms()) {
    const Matrix& xm = monomial(w);
    for (Index r = 0; r < N; ++r)
      for (Index c = 0; c < N; ++c) {
        const cplx v = xm(r, c);
        if (v != cplx(0.0, 0.0)) out.block(r * k, c * k, k, k) += v * a;
      }
  }
  return out;
}

// [[0, P], [P*, 0]] with coefficients in M_{2k}.
inline StarPolynomial selfadjointize(const StarPolynomial& p) {
  const Index k = p.coeff_dim();
  StarPolynomial out(p.num_vars(), 2 * k);
  for (const auto& [w, a] : p.terms()) {
    Matrix upper = Matrix::Zero(2 * k, 2 * k);
    upper.topRightCorner(k, k) = a;
    out.add_term(w, upper);
  }
  const StarPolynomial star = p.adjoint();
  for (const auto& [w, a] : star.terms()) {
    Matrix lower = Matrix::Zero(2 * k, 2 * k);
    lower.bottomLeftCorner(k, k) = a;
    out.add_term(w, lower);
  }
  return out;
}

inline double coefficient_l1(const StarPolynomial& p) {
  double s = 0.0;
  for (const auto& [_, a] : p.terms()) s += spectral_norm(a);
  return s;
}

// Every word of length <= degree gets an independent coefficient with
// i.i.d. complex Gaussian entries of variance 1/k.
inline StarPolynomial random_polynomial(int n, Index k, int degree, const SeededStream& stream) {
  StarPolynomial p(n, k);
  RandomSource rng(stream);
  const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(k));
  std::vector<Word> layer{Word{}};
  for (int len = 0; len <= degree; ++len) {
    std::vector<Word> next;
    for (const auto& w : layer) {
      Matrix a(k, k);
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) {
          const double re = rng.normal();
          const double im = rng.normal();
          a(i, j) = cplx(s * re, s * im);
        }
      p.add_term(w, a);
      for (int l = 1; l <= 2 * n; ++l) {
        Word v = w;
        v.push_back(l);
        next.push_back(std::move(v));
      }
    }
    layer = std::move(next);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Text format
//
//   polynomial := line*
//   line       := "vars:" integer | term | comment | blank
//   term       := coeff ";" word
//   coeff      := complex | "[" row (";" row)* "]"
//   row        := complex ("," complex)*
//   complex    := real | real "i" | real ("+"|"-") real "i"
//   word       := "1" | token+      token := "x" integer ["*"]
//   comment    := "#" anything
//
// Tokens may be separated by spaces or written back to back (x1x2*). A scalar
// coefficient c stands for c times the identity. Without a vars line, the number of
// variables is the largest index used.

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline cplx parse_complex(const std::string& text) {
  const std::string s = trim(text);
  require(!s.empty(), "polynomial text: empty number");
  const char* begin = s.c_str();
  char* end = nullptr;
  if (s == "i" || s == "+i") return {0.0, 1.0};
  if (s == "-i") return {0.0, -1.0};
  const double first = std::strtod(begin, &end);
  require(end != begin, "polynomial text: bad number '" + s + "'");
  if (*end == '\0') return {first, 0.0};
  if (*end == 'i' && end[1] == '\0') return {0.0, first};
  require(*end == '+' || *end == '-', "polynomial text: bad number '" + s + "'");
  const char* rest = end;
  double second;
  if ((rest[0] == '+' || rest[0] == '-') && rest[1] == 'i' && rest[2] == '\0') {
    second = rest[0] == '-' ? -1.0 : 1.0;
    end = const_cast<char*>(rest + 1);
  } else {
    second = std::strtod(rest, &end);
    require(end != rest, "polynomial text: bad number '" + s + "'");
  }
  require(*end == 'i' && end[1] == '\0', "polynomial text: bad number '" + s + "'");
  return {first, second};
}

inline std::vector<std::vector<cplx>> parse_coeff(const std::string& text) {
  const std::string s = trim(text);
  std::vector<std::vector<cplx>> rows;
  if (s.empty() || s.front() != '[') {
    rows.push_back({parse_complex(s)});
    return rows;
  }
  require(s.back() == ']', "polynomial text: unterminated matrix");
  std::string body = s.substr(1, s.size() - 2);
  std::stringstream rs(body);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<cplx> r;
    std::stringstream es(row);
    std::string entry;
    while (std::getline(es, entry, ',')) r.push_back(parse_complex(entry));
    require(!r.empty(), "polynomial text: empty matrix row");
    rows.push_back(std::move(r));
  }
  for (const auto& r : rows) require(r.size() == rows.size(), "polynomial text: coefficient matrix must be square");
  return rows;
}

inline Word parse_word(const std::string& text, int& max_var) {
  const std::string s = trim(text);
  Word w;
  if (s == "1") return w;
  std::size_t i = 0;
  std::vector<std::pair<int, bool>> tokens;
  while (i < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    require(s[i] == 'x' || s[i] == 'X', "polynomial text: expected token x<j> in word '" + s + "'");
    ++i;
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    require(j > i, "polynomial text: missing variable index in '" + s + "'");
    const int idx = std::stoi(s.substr(i, j - i));
    require(idx >= 1, "polynomial text: variable indices start at 1");
    bool star = false;
    if (j < s.size() && s[j] == '*') {
      star = true;
      ++j;
    }
    tokens.emplace_back(idx, star);
    max_var = std::max(max_var, idx);
    i = j;
  }
  require(!tokens.empty(), "polynomial text: empty word (write 1 for the unit)");
  for (auto [idx, star] : tokens) w.push_back(star ? -idx : idx);  // resolved once n is known
  return w;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_complex(cplx z) {
  if (z.imag() == 0.0) return format_double(z.real());
  std::string im = format_double(z.imag());
  if (im.front() != '-') im = "+" + im;
  return format_double(z.real()) + im + "i";
}

}  // namespace detail

inline StarPolynomial parse_polynomial(std::string_view text) {
  struct Raw {
    std::vector<std::vector<cplx>> coeff;
    Word word;
  };
  std::vector<Raw> raws;
  int declared = 0, max_var = 0;
  std::string normalized(text);
  for (auto& c : normalized)
    if (c == '|') c = '\n';
  std::stringstream ss(normalized);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.rfind("vars:", 0) == 0) {
      declared = std::stoi(line.substr(5));
      require(declared >= 1, "polynomial text: vars must be >= 1");
      continue;
    }
    int depth = 0;
    std::size_t split = std::string::npos;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '[') ++depth;
      if (line[i] == ']') --depth;
      if (line[i] == ';' && depth == 0) split = i;
    }
    require(split != std::string::npos, "polynomial text: term needs 'coeff ; word': " + line);
    Raw r;
    r.coeff = detail::parse_coeff(line.substr(0, split));
    r.word = detail::parse_word(line.substr(split + 1), max_var);
    raws.push_back(std::move(r));
  }
  const int n = declared ? declared : std::max(1, max_var);
  require(max_var <= n, "polynomial text: variable index exceeds declared vars");
  Index k = 0;
  for (const auto& r : raws)
    if (r.coeff.size() > 1) {
      require(k == 0 || k == static_cast<Index>(r.coeff.size()), "polynomial text: inconsistent coefficient sizes");
      k = static_cast<Index>(r.coeff.size());
    }
  if (k == 0) k = 1;
  StarPolynomial p(n, k);
  for (const auto& r : raws) {
    Matrix a;
    if (r.coeff.size() == 1 && r.coeff[0].size() == 1) {
      a = r.coeff[0][0] * Matrix::Identity(k, k);
    } else {
      a.resize(k, k);
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) a(i, j) = r.coeff[i][j];
    }
    Word w = r.word;
    for (auto& l : w) l = l < 0 ? n - l : l;
    p.add_term(w, a);
  }
  return p;
}

inline std::string to_text(const StarPolynomial& p) {
  std::ostringstream os;
  os << "vars: " << p.num_vars() << '\n';
  const Index k = p.coeff_dim();
  for (const auto& [w, a] : p.terms()) {
    if (k == 1) {
      os << detail::format_complex(a(0, 0));
    } else {
      os << '[';
      for (Index i = 0; i < k; ++i) {
        if (i) os << "; ";
        for (Index j = 0; j < k; ++j) {
          if (j) os << ", ";
          os << detail::format_complex(a(i, j));
        }
      }
      os << ']';
    }
    os << " ; " << word_to_string(w, p.num_vars()) << '\n';
  }
  return os.str();
}

}  // namespace rmt
