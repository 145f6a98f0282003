#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace wj {

using MultiIndex = std::vector<int>;

inline int order(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

inline bool leq(const MultiIndex& b, const MultiIndex& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (b[i] > a[i]) return false;
  return true;
}

inline double factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int v : a)
    for (int k = 2; k <= v; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Monomials of degree <= p in n variables, ordered by total degree and then
// lexicographically with x1 highest: (2,1) -> (0,0), (1,0), (0,1).
inline std::vector<MultiIndex> monomial_basis(int n, int p) {
  if (n < 1 || p < 0) throw std::invalid_argument("monomial_basis: need n >= 1, p >= 0");
  std::vector<MultiIndex> out;
  MultiIndex cur(n, 0);
  // fill cur[i..] with entries summing to rest, descending lex
  auto rec = [&](auto&& self, int i, int rest) -> void {
    if (i == n - 1) {
      cur[i] = rest;
      out.push_back(cur);
      return;
    }
    for (int v = rest; v >= 0; --v) {
      cur[i] = v;
      self(self, i + 1, rest - v);
    }
  };
  for (int d = 0; d <= p; ++d) rec(rec, 0, d);
  return out;
}

// Shared combinatorial tables for P_p(R^n).
struct BasisTable {
  int n = 0;
  int p = 0;
  int dim = 0;
  std::vector<MultiIndex> basis;
  std::vector<int> orders;
  std::vector<double> inv_fact;
  std::map<MultiIndex, int> index;
  // add[i * dim + j] = index of basis[i] + basis[j], or -1 beyond order p
  std::vector<int> add;
  // triples (alpha, beta, gamma = alpha - beta) with beta <= alpha
  struct Triple {
    int alpha, beta, gamma;
  };
  std::vector<Triple> below;
};

class JetSignature {
 public:
  JetSignature() = default;
  JetSignature(int n, int p) : t_(table(n, p)) {}

  int n() const { return t_->n; }
  int p() const { return t_->p; }
  int dim() const { return t_->dim; }
  const std::vector<MultiIndex>& basis() const { return t_->basis; }
  const MultiIndex& operator[](int i) const { return t_->basis[i]; }
  int order_of(int i) const { return t_->orders[i]; }
  double inv_fact(int i) const { return t_->inv_fact[i]; }
  const BasisTable& tables() const { return *t_; }
  bool valid() const { return t_ != nullptr; }

  int index_of(const MultiIndex& a) const {
    auto it = t_->index.find(a);
    if (it == t_->index.end()) throw std::out_of_range("multiindex outside signature");
    return it->second;
  }
  bool contains(const MultiIndex& a) const {
    return static_cast<int>(a.size()) == n() && order(a) <= p() && order(a) >= 0 &&
           t_->index.count(a) > 0;
  }
  // number of basis elements of order <= q (a prefix of the basis)
  int prefix(int q) const {
    if (q < 0) return 0;
    return static_cast<int>(binomial(n() + q, n()) + 0.5);
  }

  friend bool operator==(const JetSignature& a, const JetSignature& b) {
    return a.n() == b.n() && a.p() == b.p();
  }

 private:
  static std::shared_ptr<const BasisTable> table(int n, int p) {
    static std::mutex m;
    static std::map<std::pair<int, int>, std::shared_ptr<const BasisTable>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_pair(n, p);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto t = std::make_shared<BasisTable>();
    t->n = n;
    t->p = p;
    t->basis = monomial_basis(n, p);
    t->dim = static_cast<int>(t->basis.size());
    for (int i = 0; i < t->dim; ++i) {
      t->orders.push_back(order(t->basis[i]));
      t->inv_fact.push_back(1.0 / factorial(t->basis[i]));
      t->index[t->basis[i]] = i;
    }
    t->add.assign(static_cast<std::size_t>(t->dim) * t->dim, -1);
    for (int i = 0; i < t->dim; ++i)
      for (int j = 0; j < t->dim; ++j) {
        if (t->orders[i] + t->orders[j] > p) continue;
        MultiIndex s(n);
        for (int k = 0; k < n; ++k) s[k] = t->basis[i][k] + t->basis[j][k];
        t->add[static_cast<std::size_t>(i) * t->dim + j] = t->index[s];
      }
    for (int a = 0; a < t->dim; ++a)
      for (int b = 0; b < t->dim; ++b) {
        if (!leq(t->basis[b], t->basis[a])) continue;
        MultiIndex g(n);
        for (int k = 0; k < n; ++k) g[k] = t->basis[a][k] - t->basis[b][k];
        t->below.push_back({a, b, t->index[g]});
      }
    cache[key] = t;
    return t;
  }

  std::shared_ptr<const BasisTable> t_;
};

// v^gamma for every basis multiindex gamma of sig, times 1/gamma!
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scaled_monomials(
    const JetSignature& sig, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) {
  const int n = sig.n(), p = sig.p();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pw(n, p + 1);
  for (int i = 0; i < n; ++i) {
    pw(i, 0) = Scalar(1);
    for (int k = 1; k <= p; ++k) pw(i, k) = pw(i, k - 1) * v(i);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(sig.dim());
  for (int j = 0; j < sig.dim(); ++j) {
    Scalar m(1);
    const MultiIndex& g = sig[j];
    for (int i = 0; i < n; ++i) m *= pw(i, g[i]);
    out(j) = m * Scalar(sig.inv_fact(j));
  }
  return out;
}

}  // namespace wj
