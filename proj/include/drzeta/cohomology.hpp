#pragma once

// de Rham cohomology of the hypersurface complement: monomial basis of the
// Jacobian cokernel in the Griffiths range, S-weighted smoothness checks, the
// Hodge polygon, and exact reduction of pole-order <= n classes onto the basis

#include <map>
#include <optional>
#include <set>

#include "homog.hpp"
#include "linalg.hpp"

namespace drz {

struct Hypersurface {
  u64 p = 0;
  int n = 0;  // ambient P^n
  int d = 0;
  HomogPoly f;

  int nv() const { return n + 1; }

  static Hypersurface make(u64 p, int n, int d, const HomogPoly& f) {
    DRZ_REQUIRE(n >= 2 && n + 1 <= kMaxVars, "Hypersurface: unsupported n");
    DRZ_REQUIRE(d >= 2, "Hypersurface: degree too small");
    DRZ_REQUIRE(p > (u64)n, "Hypersurface: need p > n");
    DRZ_REQUIRE((u64)d % p != 0, "Hypersurface: p | d not supported");
    DRZ_REQUIRE(f.nv == n + 1 && f.deg == d, "Hypersurface: malformed f");
    Hypersurface X{p, n, d, f};
    return X;
  }
};

// dim of degree-k piece of the Artinian quotient by a regular sequence of
// n+1 forms of degree d-1: coefficient of t^k in (1-t^{d-1})^{n+1}/(1-t)^{n+1}
inline i64 artinian_dim(int n, int d, int k) {
  if (k < 0) return 0;
  mpz_class acc = 0;
  for (int j = 0; j * (d - 1) <= k && j <= n + 1; ++j) {
    mpz_class term = mpz_binomial(n + 1, j) * mpz_binomial(k - j * (d - 1) + n, n);
    acc += (j & 1) ? -term : term;
  }
  DRZ_REQUIRE(acc.fits_slong_p(), "artinian_dim overflow");
  return acc.get_si();
}

// h[m] = dim of the pole-order-m graded slot, m = 1..n (h[0] unused)
inline std::vector<i64> hodge_numbers(int n, int d) {
  std::vector<i64> h(n + 1, 0);
  for (int m = 1; m <= n; ++m) h[m] = artinian_dim(n, d, d * m - n - 1);
  return h;
}

inline i64 betti_b(int n, int d) {
  i64 b = 0;
  for (i64 hm : hodge_numbers(n, d)) b += hm;
  return b;
}

// cumulative Hodge heights H[i], i = 0..b: sum of the i smallest slopes,
// where slope m-1 occurs h_m times
inline std::vector<i64> hodge_heights(int n, int d) {
  auto h = hodge_numbers(n, d);
  std::vector<i64> H{0};
  for (int m = 1; m <= n; ++m)
    for (i64 c = 0; c < h[m]; ++c) H.push_back(H.back() + (m - 1));
  return H;
}

// rows of the degree-k Jacobian multiplication map over F_p: one row per
// generator (i, mu), columns indexed by mono_table(nv, k).  weighted = true
// uses x_i d_i f for i outside S (the S-weighted ideal); otherwise S is
// ignored and all generators are mu d_i f.
inline std::vector<std::vector<u64>> jacobian_map_matrix(
    const Hypersurface& X, int k, const std::set<int>& S, bool weighted) {
  int nv = X.nv();
  const MonoTable& target = mono_table(nv, k);
  std::vector<std::vector<u64>> rows;
  for (int i = 0; i < nv; ++i) {
    HomogPoly gen = partial(X.f, i);
    if (weighted && S.count(i) == 0) gen = shift(gen, Expo::unit(nv, i));
    int mu_deg = k - gen.deg;
    if (mu_deg < 0 || gen.is_zero()) continue;
    const MonoTable& mus = mono_table(nv, mu_deg);
    for (const Expo& mu : mus.mons) {
      std::vector<u64> row(target.size(), 0);
      for (const auto& [c, e] : gen.terms()) {
        mpz_class cm = mod_reduce(c, mpz_class(X.p));
        row[target.rank(mu + e)] = mpz_get_ui(cm.get_mpz_t());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// S-weighted smoothness: V(J_S) is empty iff the degree-k piece of J_S is
// everything at the Macaulay bound k = sum over generators of (deg - 1) plus
// one; with |S| generators of degree d-1 and the rest of degree d this is
// (n+1)d - n - |S|, which is also the exact degree the reduction solves hit
inline bool check_smooth(const Hypersurface& X, const std::set<int>& S) {
  int n = X.n, d = X.d;
  int k = (n + 1) * d - n - (int)S.size();
  auto rows = jacobian_map_matrix(X, k, S, true);
  i64 need = mono_count(X.nv(), k);
  if ((i64)rows.size() < need) return false;
  int nrows = (int)rows.size();
  FpEchelon ech(X.p, nrows, (int)need, std::move(rows));
  return ech.rank() >= need;
}

inline std::set<int> full_set(int nv) {
  std::set<int> S;
  for (int i = 0; i < nv; ++i) S.insert(i);
  return S;
}

// monomial basis of the middle cohomology: per pole order m, the non-pivot
// columns of the mod-p Jacobian row space in degree dm-n-1
struct Basis {
  std::vector<Expo> mons;     // all slots, pole order ascending
  std::vector<int> pole_of;   // parallel to mons
  std::vector<i64> h;         // h[m], as in hodge_numbers
  i64 b = 0;

  int slots_before(int m) const {
    i64 s = 0;
    for (int t = 1; t < m; ++t) s += h[t];
    return (int)s;
  }
};

inline Basis compute_basis(const Hypersurface& X) {
  Basis B;
  B.h.assign(X.n + 1, 0);
  for (int m = 1; m <= X.n; ++m) {
    int k = X.d * m - X.n - 1;
    const MonoTable& tgt = mono_table(X.nv(), k);
    auto rows = jacobian_map_matrix(X, k, {}, false);
    std::vector<char> is_pivot(tgt.size(), 0);
    if (!rows.empty()) {
      int nrows = (int)rows.size();
      FpEchelon ech(X.p, nrows, tgt.size(), std::move(rows));
      for (auto& pr : ech.pivots) is_pivot[pr.second] = 1;
    }
    for (int c = 0; c < tgt.size(); ++c)
      if (!is_pivot[c]) {
        B.mons.push_back(tgt.mons[c]);
        B.pole_of.push_back(m);
        ++B.h[m];
      }
  }
  for (int m = 1; m <= X.n; ++m) B.b += B.h[m];
  auto expect = hodge_numbers(X.n, X.d);
  for (int m = 1; m <= X.n; ++m)
    DRZ_REQUIRE(B.h[m] == expect[m],
                "compute_basis: cokernel dimension off the Hodge number");
  return B;
}

// exact reduction of (g, pole order m) with m <= n onto the basis, working
// mod p^M; each level solves g = sum mu_i d_i f + basis part through a unit
// echelon cached per level, then applies the pole-lowering identity
//   (sum mu_i d_i f) / f^m  ~  (sum d_i mu_i) / ((m-1) f^{m-1})
class FinalReducer {
 public:
  FinalReducer(const Hypersurface& X, const Basis& B, const ModulusContext& ctx)
      : X_(&X), B_(&B), ctx_(ctx) {}

  // coeffs of g over mono_table(nv, dm-n-1); returns the full b-vector of
  // basis coordinates (slots of pole order > m untouched, hence zero)
  std::vector<mpz_class> reduce(std::vector<mpz_class> g, int m) {
    DRZ_REQUIRE(m >= 1 && m <= X_->n, "FinalReducer: pole order out of range");
    std::vector<mpz_class> out((size_t)B_->b, 0);
    for (; m >= 1; --m) {
      Level& L = level(m);
      const MonoTable& tgt = mono_table(X_->nv(), X_->d * m - X_->n - 1);
      DRZ_REQUIRE((int)g.size() == tgt.size(), "FinalReducer: bad coeff size");
      std::vector<mpz_class> sol;
      bool ok = L.ech->solve(g, sol);
      DRZ_REQUIRE(ok, "FinalReducer: class outside Jacobian + basis span");
      int base = B_->slots_before(m);
      for (int s = 0; s < (int)L.basis_cols.size(); ++s)
        out[(size_t)base + s] = sol[L.basis_cols[s]];
      if (m == 1) break;  // pole order 1 has no Jacobian part to push down
      // next numerator: (sum_i d_i mu_i) / (m-1)
      const MonoTable& nxt = mono_table(X_->nv(), X_->d * (m - 1) - X_->n - 1);
      std::vector<mpz_class> g2(nxt.size(), 0);
      mpz_class inv_m1 = invmod_mpz(m - 1, ctx_.modulus);
      for (int c : L.gen_cols) {
        if (sol[c] == 0) continue;
        auto [i, mu] = L.gen_label[c];
        // d_i (mu) contributes mu_i * x^(mu - e_i)
        if (mu[i] == 0) continue;
        Expo e = mu - Expo::unit(X_->nv(), i);
        mpz_class add = sol[c] * mu[i];
        g2[nxt.rank(e)] += add;
      }
      for (auto& v : g2) v = mod_reduce(v * inv_m1, ctx_.modulus);
      g = std::move(g2);
    }
    return out;
  }

 private:
  struct Level {
    std::optional<MpzEchelon> ech;
    std::vector<int> gen_cols;    // columns that are Jacobian generators
    std::vector<int> basis_cols;  // columns that are basis slots, in order
    std::vector<std::pair<int, Expo>> gen_label;  // col -> (i, mu); basis cols
                                                  // carry a dummy label
  };

  Level& level(int m) {
    auto it = levels_.find(m);
    if (it != levels_.end()) return it->second;
    Level L;
    int k = X_->d * m - X_->n - 1;
    int nv = X_->nv();
    const MonoTable& tgt = mono_table(nv, k);
    int mu_deg = k - (X_->d - 1);
    const MonoTable& mus = mono_table(nv, mu_deg);
    int gen_count = mu_deg < 0 ? 0 : nv * mus.size();
    int base = B_->slots_before(m);
    int ncols = gen_count + (int)B_->h[m];
    MpzRing ring{ctx_.modulus, ctx_.p};
    std::vector<mpz_class> data((size_t)tgt.size() * ncols, 0);
    int col = 0;
    for (int i = 0; i < nv; ++i) {
      HomogPoly dif = partial(X_->f, i);
      for (int mi = 0; mi < mus.size(); ++mi) {
        const Expo& mu = mus.mons[mi];
        for (const auto& [c, e] : dif.terms())
          data[(size_t)tgt.rank(mu + e) * ncols + col] =
              mod_reduce(c, ctx_.modulus);
        L.gen_cols.push_back(col);
        L.gen_label.emplace_back(i, mu);
        ++col;
      }
    }
    DRZ_REQUIRE((int)L.gen_label.size() == gen_count, "level: label mismatch");
    for (int s = 0; s < (int)B_->h[m]; ++s) {
      data[(size_t)tgt.rank(B_->mons[base + s]) * ncols + col] = 1;
      L.basis_cols.push_back(col);
      L.gen_label.emplace_back(-1, Expo(nv));
      ++col;
    }
    L.ech.emplace(ring, tgt.size(), ncols, std::move(data));
    return levels_.emplace(m, std::move(L)).first->second;
  }

  const Hypersurface* X_;
  const Basis* B_;
  ModulusContext ctx_;
  std::map<int, Level> levels_;
};

}  // namespace drz
