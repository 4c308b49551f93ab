#pragma once

// dense homogeneous polynomials with mpz coefficients, indexed by the cached
// grevlex tables

#include <gmpxx.h>

#include <utility>
#include <vector>

#include "modarith.hpp"
#include "monomial.hpp"

namespace drz {

struct Term {
  mpz_class c;
  Expo e;
};

struct HomogPoly {
  int nv = 0, deg = 0;
  std::vector<mpz_class> c;  // parallel to mono_table(nv, deg).mons

  HomogPoly() = default;
  HomogPoly(int nvars, int degree)
      : nv(nvars), deg(degree), c(mono_table(nvars, degree).size()) {}

  const MonoTable& table() const { return mono_table(nv, deg); }
  int size() const { return (int)c.size(); }

  bool is_zero() const {
    for (auto& x : c)
      if (x != 0) return false;
    return true;
  }

  mpz_class& coeff(const Expo& e) { return c[table().rank(e)]; }
  const mpz_class& coeff(const Expo& e) const { return c[table().rank(e)]; }

  static HomogPoly from_terms(int nv, int deg, const std::vector<Term>& ts) {
    HomogPoly f(nv, deg);
    for (auto& t : ts) {
      DRZ_REQUIRE(t.e.total() == deg && t.e.nv == nv,
                  "from_terms: wrong degree or arity");
      f.coeff(t.e) += t.c;
    }
    return f;
  }

  std::vector<Term> terms() const {
    std::vector<Term> out;
    const auto& tb = table();
    for (int i = 0; i < size(); ++i)
      if (c[i] != 0) out.push_back({c[i], tb.mons[i]});
    return out;
  }

  void reduce_mod(const mpz_class& m) {
    for (auto& x : c) x = mod_reduce(x, m);
  }

  HomogPoly& add_scaled(const HomogPoly& g, const mpz_class& s) {
    DRZ_REQUIRE(nv == g.nv && deg == g.deg, "add_scaled: shape mismatch");
    for (int i = 0; i < size(); ++i)
      if (g.c[i] != 0) c[i] += s * g.c[i];
    return *this;
  }
};

// product, optionally reduced mod m (m == 0 means exact)
inline HomogPoly mul(const HomogPoly& a, const HomogPoly& b,
                     const mpz_class& m = 0) {
  DRZ_REQUIRE(a.nv == b.nv, "mul: arity mismatch");
  HomogPoly r(a.nv, a.deg + b.deg);
  const auto& ta = a.table();
  const auto& tb = b.table();
  const auto& tr = r.table();
  for (int i = 0; i < a.size(); ++i) {
    if (a.c[i] == 0) continue;
    for (int j = 0; j < b.size(); ++j) {
      if (b.c[j] == 0) continue;
      r.c[tr.rank(ta.mons[i] + tb.mons[j])] += a.c[i] * b.c[j];
    }
  }
  if (m != 0) r.reduce_mod(m);
  return r;
}

// partial derivative d/dx_i, degree drops by one
inline HomogPoly partial(const HomogPoly& f, int i) {
  DRZ_REQUIRE(f.deg >= 1, "partial: constant input");
  HomogPoly r(f.nv, f.deg - 1);
  const auto& tf = f.table();
  const auto& tr = r.table();
  for (int k = 0; k < f.size(); ++k) {
    if (f.c[k] == 0 || tf.mons[k][i] == 0) continue;
    Expo e = tf.mons[k];
    int ei = e[i];
    e[i] -= 1;
    r.c[tr.rank(e)] += ei * f.c[k];
  }
  return r;
}

// multiply by the monomial x^s (s >= 0 entrywise)
inline HomogPoly shift(const HomogPoly& f, const Expo& s) {
  DRZ_REQUIRE(s.nonneg(), "shift: negative exponent");
  HomogPoly r(f.nv, f.deg + s.total());
  const auto& tf = f.table();
  const auto& tr = r.table();
  for (int k = 0; k < f.size(); ++k)
    if (f.c[k] != 0) r.c[tr.rank(tf.mons[k] + s)] = f.c[k];
  return r;
}

// exact division by x^s; requires divisibility
inline HomogPoly unshift(const HomogPoly& f, const Expo& s) {
  DRZ_REQUIRE(s.nonneg() && f.deg >= s.total(), "unshift: bad shift");
  HomogPoly r(f.nv, f.deg - s.total());
  const auto& tf = f.table();
  const auto& tr = r.table();
  for (int k = 0; k < f.size(); ++k) {
    if (f.c[k] == 0) continue;
    Expo e = tf.mons[k] - s;
    DRZ_REQUIRE(e.nonneg(), "unshift: not divisible");
    r.c[tr.rank(e)] = f.c[k];
  }
  return r;
}

// powers f^0..f^{N-1}, coefficients reduced mod m (m != 0)
inline std::vector<HomogPoly> power_series(const HomogPoly& f, int N,
                                           const mpz_class& m) {
  std::vector<HomogPoly> out;
  out.reserve(N);
  HomogPoly one(f.nv, 0);
  one.c[0] = 1;
  out.push_back(one);
  for (int j = 1; j < N; ++j) out.push_back(mul(out.back(), f, m));
  return out;
}

// sigma(f) = f(x_0^p, ..., x_n^p) as a sparse term list (degree p*deg)
inline std::vector<Term> sigma_f(const HomogPoly& f, u64 p) {
  std::vector<Term> out;
  for (auto& t : f.terms()) out.push_back({t.c, t.e.scaled((int)p)});
  return out;
}

}  // namespace drz
