#pragma once

// brute-force ground truth: point counts over F_{p^r} through an explicit
// extension field, and a dense single-solve reduction that mirrors the game
// arithmetic without any of its machinery

#include <map>
#include <memory>
#include <mutex>

#include "cohomology.hpp"

namespace drz {

namespace detail {

// arithmetic on dense F_p[x] polynomials, little-endian coefficients
inline std::vector<u64> polyfp_mul(const std::vector<u64>& a,
                                   const std::vector<u64>& b, u64 p) {
  if (a.empty() || b.empty()) return {};
  std::vector<u64> c(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (size_t j = 0; j < b.size(); ++j) c[i + j] = (c[i + j] + a[i] * b[j]) % p;
  }
  while (!c.empty() && c.back() == 0) c.pop_back();
  return c;
}

inline std::vector<u64> polyfp_mod(std::vector<u64> a,
                                   const std::vector<u64>& m, u64 p) {
  // m monic
  while (a.size() >= m.size()) {
    u64 lead = a.back();
    size_t off = a.size() - m.size();
    if (lead)
      for (size_t i = 0; i < m.size(); ++i)
        a[off + i] = (a[off + i] + (p - m[i] % p) % p * lead) % p;
    a.pop_back();
  }
  while (!a.empty() && a.back() == 0) a.pop_back();
  return a;
}

inline std::vector<u64> polyfp_powmod(std::vector<u64> base, u64 e,
                                      const std::vector<u64>& m, u64 p) {
  std::vector<u64> r{1};
  base = polyfp_mod(std::move(base), m, p);
  while (e) {
    if (e & 1) r = polyfp_mod(polyfp_mul(r, base, p), m, p);
    base = polyfp_mod(polyfp_mul(base, base, p), m, p);
    e >>= 1;
  }
  return r;
}

inline std::vector<u64> polyfp_gcd(std::vector<u64> a, std::vector<u64> b,
                                   u64 p) {
  while (!b.empty()) {
    std::vector<u64> m = b;
    u64 il = invmod_u64(m.back(), p);
    for (auto& c : m) c = c * il % p;
    a = polyfp_mod(std::move(a), m, p);
    std::swap(a, b);
  }
  return a;
}

}  // namespace detail

// monic irreducible of degree r over F_p: the non-leading coefficients are
// scanned as a little-endian base-p counter and the first candidate with no
// factor of degree <= r/2 wins, so the modulus is reproducible
inline std::vector<u64> find_irreducible(u64 p, int r) {
  DRZ_REQUIRE(r >= 1, "find_irreducible: degree must be positive");
  if (r == 1) return {0, 1};  // x itself
  u64 total = pow_u64(p, r);
  for (u64 cand = 0; cand < total; ++cand) {
    std::vector<u64> m(r + 1, 0);
    m[r] = 1;
    u64 t = cand;
    for (int i = 0; i < r; ++i) {
      m[i] = t % p;
      t /= p;
    }
    if (m[0] == 0) continue;  // x divides
    bool ok = true;
    std::vector<u64> x{0, 1};
    std::vector<u64> frob = x;
    for (int i = 1; ok && 2 * i <= r; ++i) {
      frob = detail::polyfp_powmod(frob, p, m, p);
      std::vector<u64> diff = frob;
      if (diff.size() < 2) diff.resize(2, 0);
      diff[1] = (diff[1] + p - 1) % p;
      while (!diff.empty() && diff.back() == 0) diff.pop_back();
      std::vector<u64> g = detail::polyfp_gcd(m, diff, p);
      ok = g.size() == 1;
    }
    if (ok) return m;
  }
  DRZ_REQUIRE(false, "find_irreducible: exhausted candidates");
  return {};
}

// F_{p^r} with elements encoded as base-p digit strings packed into one
// integer; a full multiplication table is built when q is small enough,
// which is the regime every oracle pass runs in
class ExtField {
 public:
  u64 p = 0;
  int r = 1;
  u64 q = 0;

  static const ExtField& get(u64 p, int r) {
    static std::mutex mu;
    static std::map<std::pair<u64, int>, std::unique_ptr<ExtField>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_pair(p, r);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, std::unique_ptr<ExtField>(new ExtField(p, r))).first;
    return *it->second;
  }

  u64 add(u64 a, u64 b) const {
    if (r == 1) return (a + b) % p;
    u64 out = 0, mul = 1;
    for (int i = 0; i < r; ++i) {
      out += (a % p + b % p) % p * mul;
      a /= p;
      b /= p;
      mul *= p;
    }
    return out;
  }

  u64 mul(u64 a, u64 b) const {
    if (r == 1) return a * b % p;
    if (!table_.empty()) return table_[a * q + b];
    return mul_slow(a, b);
  }

  u64 pow(u64 a, u64 e) const {
    u64 acc = 1;
    while (e) {
      if (e & 1) acc = mul(acc, a);
      a = mul(a, a);
      e >>= 1;
    }
    return acc;
  }

  const std::vector<u64>& min_poly() const { return min_poly_; }

 private:
  ExtField(u64 pp, int rr) : p(pp), r(rr), q(pow_u64(pp, rr)) {
    DRZ_REQUIRE(r == 1 || q <= 10'000'000, "ExtField: field too large");
    if (r > 1) {
      min_poly_ = find_irreducible(p, r);
      if (q <= 3000) {
        table_.assign(q * q, 0);
        for (u64 a = 0; a < q; ++a)
          for (u64 b = a; b < q; ++b) {
            u64 v = mul_slow(a, b);
            table_[a * q + b] = v;
            table_[b * q + a] = v;
          }
      }
    } else {
      min_poly_ = {0, 1};
    }
  }

  u64 mul_slow(u64 a, u64 b) const {
    std::vector<u64> da, db;
    for (u64 t = a; t; t /= p) da.push_back(t % p);
    for (u64 t = b; t; t /= p) db.push_back(t % p);
    auto prod = detail::polyfp_mod(detail::polyfp_mul(da, db, p), min_poly_, p);
    u64 out = 0;
    for (size_t i = prod.size(); i-- > 0;) out = out * p + prod[i];
    return out;
  }

  std::vector<u64> min_poly_;
  std::vector<u64> table_;
};

// #{x in P^n(F_{p^r}) : f(x) = 0}, points normalized so the first nonzero
// coordinate is 1; refuses work beyond `budget` point evaluations
inline i64 count_points(const HomogPoly& f, u64 p, int r,
                        i64 budget = 1'000'000'000) {
  int nv = f.nv, n = nv - 1;
  const ExtField& F = ExtField::get(p, r);
  u64 q = F.q;
  mpz_class work = 0;
  for (int m = 0; m <= n; ++m) work += mpz_pow_ui(q, m);
  DRZ_REQUIRE(work <= budget, "count_points: budget exceeded");

  // value^e lookup, e up to deg f
  std::vector<std::vector<u64>> powt(q, std::vector<u64>(f.deg + 1, 1));
  for (u64 v = 0; v < q; ++v)
    for (int e = 1; e <= f.deg; ++e) powt[v][e] = F.mul(powt[v][e - 1], v);

  struct STerm {
    u64 c;
    Expo e;
  };
  std::vector<STerm> terms;
  for (const auto& [c, e] : f.terms()) {
    mpz_class cm = mod_reduce(c, mpz_class(p));
    u64 cv = mpz_get_ui(cm.get_mpz_t());
    if (cv) terms.push_back({cv, e});
  }

  i64 count = 0;
  std::vector<u64> x(nv, 0);
  for (int lead = 0; lead <= n; ++lead) {
    // monomials involving a variable below the lead vanish on this stratum
    std::vector<STerm> live;
    for (const auto& t : terms) {
      bool dead = false;
      for (int i = 0; i < lead; ++i)
        if (t.e[i]) dead = true;
      if (!dead) live.push_back(t);
    }
    for (int i = 0; i < lead; ++i) x[i] = 0;
    x[lead] = 1;
    for (int i = lead + 1; i <= n; ++i) x[i] = 0;
    for (;;) {
      u64 acc = 0;
      for (const auto& t : live) {
        u64 v = t.c;
        for (int i = lead + 1; i <= n && v; ++i)
          if (t.e[i]) v = F.mul(v, powt[x[i]][t.e[i]]);
        acc = F.add(acc, v);
      }
      if (acc == 0) ++count;
      int pos = n;
      while (pos > lead && x[pos] == q - 1) x[pos--] = 0;
      if (pos == lead) break;
      ++x[pos];
    }
  }
  return count;
}

// reference reduction: at each pole order P > n solve the full Jacobian
// decomposition g = sum mu_i d_i f in one dense unit echelon and replace g by
// sum d_i mu_i, keeping the same running scale as the game (the factor P-1 of
// the true identity stays absorbed in the stored coefficients); coefficients
// of g are over mono_table(nv, dP-n-1)
inline std::vector<mpz_class> naive_reduce(const Hypersurface& X,
                                           std::vector<mpz_class> g, int P,
                                           const ModulusContext& ctx) {
  int nv = X.nv();
  MpzRing ring{ctx.modulus, X.p};
  for (; P > X.n; --P) {
    int deg = X.d * P - X.n - 1;
    const MonoTable& tgt = mono_table(nv, deg);
    DRZ_REQUIRE((int)g.size() == tgt.size(), "naive_reduce: bad coeff size");
    int mu_deg = deg - (X.d - 1);
    const MonoTable& mus = mono_table(nv, mu_deg);
    int cols = nv * mus.size();
    std::vector<mpz_class> data((size_t)tgt.size() * cols, 0);
    for (int i = 0; i < nv; ++i) {
      HomogPoly di = partial(X.f, i);
      for (int mi = 0; mi < mus.size(); ++mi)
        for (const auto& [c, e] : di.terms())
          data[(size_t)tgt.rank(mus.mons[mi] + e) * cols + i * mus.size() + mi] =
              mod_reduce(c, ctx.modulus);
    }
    MpzEchelon ech(ring, tgt.size(), cols, std::move(data));
    for (auto& c : g) c = mod_reduce(c, ctx.modulus);
    std::vector<mpz_class> sol;
    bool ok = ech.solve(g, sol);
    DRZ_REQUIRE(ok, "naive_reduce: Jacobian solve failed (singular input?)");
    const MonoTable& next = mono_table(nv, deg - X.d);
    std::vector<mpz_class> g2(next.size(), 0);
    for (int i = 0; i < nv; ++i)
      for (int mi = 0; mi < mus.size(); ++mi) {
        const mpz_class& c = sol[(size_t)i * mus.size() + mi];
        if (c == 0) continue;
        const Expo& mu = mus.mons[mi];
        if (mu[i] > 0) g2[next.rank(mu - Expo::unit(nv, i))] += c * mu[i];
      }
    for (auto& c : g2) c = mod_reduce(c, ctx.modulus);
    g = std::move(g2);
  }
  return g;
}

}  // namespace drz
