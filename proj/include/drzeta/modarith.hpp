#pragma once

// arithmetic mod p^M: word-level kernels, GMP-backed valuations, binomial
// tables, and the D-table driving the Frobenius series expansion

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "common.hpp"

namespace drz {

inline u64 addmod_u64(u64 a, u64 b, u64 m) {
  u64 s = a + b;  // a,b < m <= 2^63 so no overflow
  return s >= m ? s - m : s;
}

inline u64 submod_u64(u64 a, u64 b, u64 m) { return a >= b ? a - b : a + m - b; }

inline u64 mulmod_u64(u64 a, u64 b, u64 m) {
  return static_cast<u64>((u128)a * b % m);
}

inline u64 powmod_u64(u64 a, u64 e, u64 m) {
  u64 r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod_u64(r, a, m);
    a = mulmod_u64(a, a, m);
    e >>= 1;
  }
  return r;
}

// inverse mod m for a coprime to m (m need not be prime)
inline u64 invmod_u64(u64 a, u64 m) {
  i64 t = 0, new_t = 1;
  i64 r = (i64)m, new_r = (i64)(a % m);
  while (new_r != 0) {
    i64 q = r / new_r;
    i64 tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  DRZ_REQUIRE(r == 1, "invmod_u64: argument not invertible");
  return (u64)(t < 0 ? t + (i64)m : t);
}

// p^e as u64, asserting no overflow
inline u64 pow_u64(u64 p, int e) {
  u64 r = 1;
  for (int i = 0; i < e; ++i) {
    DRZ_REQUIRE(r <= ~u64(0) / p, "pow_u64 overflow");
    r *= p;
  }
  return r;
}

inline mpz_class mpz_pow_ui(u64 base, unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, e);
  return r;
}

inline mpz_class mpz_binomial(unsigned long n, unsigned long k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

// v_p(n!) by Legendre's formula
inline i64 factorial_valuation(u64 n, u64 p) {
  i64 v = 0;
  while (n) {
    n /= p;
    v += (i64)n;
  }
  return v;
}

// working modulus p^M shared across a computation
struct ModulusContext {
  u64 p = 0;
  int M = 0;
  mpz_class modulus;  // p^M

  static ModulusContext make(u64 p, int M) {
    DRZ_REQUIRE(p >= 2 && M >= 1, "ModulusContext: need p >= 2, M >= 1");
    return {p, M, mpz_pow_ui(p, (unsigned long)M)};
  }
};

// x = p^v * unit with v capped at `cap` (x == 0 mod p^cap reports v = cap,
// unit = 0); x is interpreted as a residue, so only min(v_p(x), cap) is
// meaningful
struct Valuation {
  int v;
  mpz_class unit;
};

inline Valuation valuation(const mpz_class& x, u64 p, int cap) {
  Valuation out{0, x};
  if (out.unit < 0) out.unit = -out.unit;  // sign never affects v_p
  if (x == 0) return {cap, 0};
  mpz_class q, r;
  while (out.v < cap) {
    mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), out.unit.get_mpz_t(), p);
    if (r != 0) break;
    out.unit = q;
    ++out.v;
  }
  if (out.v == cap) out.unit = 0;
  if (out.unit != 0 && x < 0) out.unit = -out.unit;
  return out;
}

inline mpz_class invmod_mpz(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  int ok = mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  DRZ_REQUIRE(ok != 0, "invmod_mpz: argument not invertible");
  return r;
}

inline mpz_class mod_reduce(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

// centered representative of a mod m in (-m/2, m/2]
inline mpz_class centered_lift(const mpz_class& a, const mpz_class& m) {
  mpz_class r = mod_reduce(a, m);
  if (2 * r > m) r -= m;
  return r;
}

// C(-m, i) mod `mod` = (-1)^i C(m+i-1, i)
inline mpz_class neg_binomial_mod(u64 m, u64 i, const mpz_class& mod) {
  mpz_class b = mpz_binomial(m + i - 1, i);
  if (i & 1) b = -b;
  return mod_reduce(b, mod);
}

// D_{j,m} = sum_{i=j}^{N-1} (-1)^{i+j} C(-m,i) C(i,j)
//         = (-1)^j sum_{i=j}^{N-1} C(m+i-1,i) C(i,j),  reduced mod p^s.
// These are the series coefficients in
//   sigma(1/f^m) = sum_j D_{j,m} sigma(f)^j / f^{p(m+j)} + O(p^N).
struct DTable {
  u64 p = 0;
  int m = 0, N = 0, s = 0;
  mpz_class mod;                // p^s
  std::vector<mpz_class> D;     // D[j] for j = 0..N-1

  static DTable build(u64 p, int m, int N, int s) {
    DTable t;
    t.p = p;
    t.m = m;
    t.N = N;
    t.s = s;
    t.mod = mpz_pow_ui(p, s);
    t.D.assign(N, 0);
    for (int j = 0; j < N; ++j) {
      mpz_class acc = 0;
      for (int i = j; i < N; ++i)
        acc += mpz_binomial(m + i - 1, i) * mpz_binomial(i, j);
      if (j & 1) acc = -acc;
      t.D[j] = mod_reduce(acc, t.mod);
    }
    return t;
  }
};

// table precision: s = N + m - 1 digits guarantee the truncated series
// determines the reduction output mod p^{working precision}
inline DTable build_dtable(int m, int N, const ModulusContext& ctx) {
  return DTable::build(ctx.p, m, N, N + m - 1);
}

inline Valuation valuation(const mpz_class& x, const ModulusContext& ctx) {
  return valuation(x, ctx.p, ctx.M);
}

}  // namespace drz
