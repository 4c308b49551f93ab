#pragma once

// matrix kernel over Z/p^M: multi-plane word representation with striped
// 128-bit accumulation, linear-recurrence evaluation, unit-pivot echelon,
// split matrix products, and a division-free characteristic polynomial

#include <gmpxx.h>

#include <thread>
#include <utility>
#include <vector>

#include "modarith.hpp"

namespace drz {

// word layout for arithmetic mod p^M: entries are split into `limbs` planes
// of base-beta digits, beta = p^limb_exp, so plane products accumulate in
// 128-bit registers for `stripe` columns before a reduction is needed
struct StripePlan {
  u64 p = 0;
  int M = 0;
  int limbs = 1;
  int limb_exp = 0;
  u64 beta = 0;  // p^limb_exp; equals the full modulus when limbs == 1
  mpz_class modulus;
  i64 stripe = 0;
  bool karatsuba = false;  // multi-plane products required

  static u128 native_capacity() { return u128(1) << 126; }
  // accumulator budget of a 53-bit float pipeline, kept as the reference
  // capacity for kernel reports
  static u128 reference_capacity() { return u128(1) << 53; }

  static StripePlan make(u64 p, int M, u128 capacity = native_capacity()) {
    DRZ_REQUIRE(p >= 2 && M >= 1, "StripePlan: bad modulus");
    StripePlan k;
    k.p = p;
    k.M = M;
    k.modulus = mpz_pow_ui(p, M);
    for (int limbs = 1; limbs <= 64; ++limbs) {
      int e = (M + limbs - 1) / limbs;
      if (mpz_pow_ui(p, e) > mpz_class((u64(1) << 62))) continue;
      u64 beta = pow_u64(p, e);
      u128 prod = (u128)(beta - 1) * (beta - 1);
      if (prod > capacity / (u128)limbs) continue;
      k.limbs = limbs;
      k.limb_exp = e;
      k.beta = beta;
      u128 s = capacity / (prod * (u128)limbs);
      k.stripe = s > (u128)(i64(1) << 40) ? (i64(1) << 40) : (i64)s;
      DRZ_REQUIRE(k.stripe >= 1, "StripePlan: empty stripe");
      k.karatsuba = limbs >= 2;
      return k;
    }
    DRZ_REQUIRE(false, "StripePlan: no viable limb split");
    return k;
  }

  // little-endian base-beta digits of x mod p^M, `limbs` wide
  void digitize(const mpz_class& x, u64* out) const {
    mpz_class r = mod_reduce(x, modulus);
    if (limbs == 1) {
      out[0] = mpz_get_ui(r.get_mpz_t());
      return;
    }
    mpz_class q;
    for (int t = 0; t < limbs; ++t) {
      out[t] = mpz_fdiv_q_ui(q.get_mpz_t(), r.get_mpz_t(), beta);
      r = q;
    }
    DRZ_REQUIRE(r == 0, "digitize: value exceeded plane capacity");
  }

  mpz_class undigitize(const u64* in) const {
    mpz_class r = 0;
    for (int t = limbs - 1; t >= 0; --t) {
      r *= beta;
      r += in[t];
    }
    return mod_reduce(r, modulus);
  }
};

namespace detail {
inline mpz_class u128_to_mpz(u128 v) {
  mpz_class r = (u64)(v >> 64);
  r <<= 64;
  r += (u64)v;
  return r;
}
}  // namespace detail

struct ModVec {
  StripePlan plan;
  int n = 0;
  std::vector<u64> d;  // plane-major: d[t*n + i]

  ModVec() = default;
  ModVec(const StripePlan& pl, int size)
      : plan(pl), n(size), d((size_t)pl.limbs * size, 0) {}

  u64* plane(int t) { return d.data() + (size_t)t * n; }
  const u64* plane(int t) const { return d.data() + (size_t)t * n; }

  void set(int i, const mpz_class& v) {
    u64 tmp[64];
    plan.digitize(v, tmp);
    for (int t = 0; t < plan.limbs; ++t) plane(t)[i] = tmp[t];
  }
  mpz_class get(int i) const {
    u64 tmp[64];
    for (int t = 0; t < plan.limbs; ++t) tmp[t] = plane(t)[i];
    return plan.undigitize(tmp);
  }
  bool operator==(const ModVec& o) const { return n == o.n && d == o.d; }
};

struct ModMatrix {
  StripePlan plan;
  int rows = 0, cols = 0;
  std::vector<u64> d;  // plane-major, then row-major

  ModMatrix() = default;
  ModMatrix(const StripePlan& pl, int r, int c)
      : plan(pl), rows(r), cols(c), d((size_t)pl.limbs * r * c, 0) {}

  u64* plane(int t) { return d.data() + (size_t)t * rows * cols; }
  const u64* plane(int t) const { return d.data() + (size_t)t * rows * cols; }

  void set(int i, int j, const mpz_class& v) {
    u64 tmp[64];
    plan.digitize(v, tmp);
    for (int t = 0; t < plan.limbs; ++t) plane(t)[(size_t)i * cols + j] = tmp[t];
  }
  mpz_class get(int i, int j) const {
    u64 tmp[64];
    for (int t = 0; t < plan.limbs; ++t) tmp[t] = plane(t)[(size_t)i * cols + j];
    return plan.undigitize(tmp);
  }
};

// y = A x mod p^M
inline ModVec matvec(const ModMatrix& A, const ModVec& x) {
  const StripePlan& pl = A.plan;
  DRZ_REQUIRE(A.cols == x.n, "matvec: shape mismatch");
  ModVec y(pl, A.rows);
  int k = pl.limbs;
  if (k == 1) {
    u64 mod = mpz_get_ui(pl.modulus.get_mpz_t());
    const u64* m = A.plane(0);
    const u64* xv = x.plane(0);
    for (int i = 0; i < A.rows; ++i) {
      const u64* row = m + (size_t)i * A.cols;
      u128 acc = 0;
      i64 left = pl.stripe;
      for (int j = 0; j < A.cols; ++j) {
        acc += (u128)row[j] * xv[j];
        if (--left == 0) {
          acc = (u64)(acc % mod);
          left = pl.stripe;
        }
      }
      y.plane(0)[i] = (u64)(acc % mod);
    }
    return y;
  }
  std::vector<u128> acc(k);
  for (int i = 0; i < A.rows; ++i) {
    for (auto& a : acc) a = 0;
    mpz_class overflow = 0;
    i64 left = pl.stripe;
    for (int j = 0; j < A.cols; ++j) {
      for (int t1 = 0; t1 < k; ++t1) {
        u64 a = A.plane(t1)[(size_t)i * A.cols + j];
        if (!a) continue;
        for (int t2 = 0; t1 + t2 < k; ++t2) acc[t1 + t2] += (u128)a * x.plane(t2)[j];
      }
      if (--left == 0) {
        for (int t = 0; t < k; ++t) {
          overflow += detail::u128_to_mpz(acc[t]) * mpz_pow_ui(pl.p, t * pl.limb_exp);
          acc[t] = 0;
        }
        left = pl.stripe;
      }
    }
    for (int t = 0; t < k; ++t)
      overflow += detail::u128_to_mpz(acc[t]) * mpz_pow_ui(pl.p, t * pl.limb_exp);
    y.set(i, overflow);
  }
  return y;
}

// parallel batch of independent matvecs; outputs are positionally matched
inline std::vector<ModVec> matvec_batch(const ModMatrix& A,
                                        const std::vector<ModVec>& xs,
                                        int threads = 1) {
  std::vector<ModVec> out(xs.size());
  if (threads <= 1 || xs.size() <= 1) {
    for (size_t i = 0; i < xs.size(); ++i) out[i] = matvec(A, xs[i]);
    return out;
  }
  std::vector<std::thread> pool;
  std::size_t per = (xs.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::size_t lo = t * per, hi = std::min(xs.size(), lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (size_t i = lo; i < hi; ++i) out[i] = matvec(A, xs[i]);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

// column-compressed view of a mostly-zero operand, used by the recurrence
// evaluator; split monomials and diagonal forms make the step matrices
// near-permutations, where scanning the dense array would dominate
struct SparseOp {
  int rows = 0, cols = 0, limbs = 1;
  std::vector<i64> col_ptr;   // cols + 1
  std::vector<int> row_idx;   // nnz
  std::vector<u64> digs;      // nnz * limbs, entry-major
  i64 nnz = 0;
  i64 max_row_nnz = 0;

  static SparseOp build(const ModMatrix& X) {
    SparseOp s;
    s.rows = X.rows;
    s.cols = X.cols;
    s.limbs = X.plan.limbs;
    s.col_ptr.assign(X.cols + 1, 0);
    std::vector<i64> per_row(X.rows, 0);
    for (int j = 0; j < X.cols; ++j) {
      s.col_ptr[j] = s.nnz;
      for (int i = 0; i < X.rows; ++i) {
        bool nz = false;
        for (int t = 0; t < s.limbs && !nz; ++t)
          nz = X.plane(t)[(size_t)i * X.cols + j] != 0;
        if (!nz) continue;
        s.row_idx.push_back(i);
        for (int t = 0; t < s.limbs; ++t)
          s.digs.push_back(X.plane(t)[(size_t)i * X.cols + j]);
        ++s.nnz;
        ++per_row[i];
      }
    }
    s.col_ptr[X.cols] = s.nnz;
    for (i64 c : per_row) s.max_row_nnz = std::max(s.max_row_nnz, c);
    return s;
  }
};

namespace detail {
// w <- (t*A + B) w evaluated as t*(A w) + (B w); exact mod p^M, so it agrees
// with the dense fused step bit for bit
inline void sparse_steps(const StripePlan& pl, const SparseOp& A,
                         const SparseOp& B, i64 tmax, ModVec& w,
                         i64* matvec_counter) {
  int n = A.rows, k = pl.limbs;
  std::vector<u128> accA((size_t)n * k), accB((size_t)n * k);
  std::vector<u64> cur(w.d), nxt(w.d.size());
  u64 beta = pl.beta;
  u64 word_mod = k == 1 ? mpz_get_ui(pl.modulus.get_mpz_t()) : 0;
  u128 big_mod = 0;
  if (k == 2) {
    // p^M as a 128-bit word for the final reduction
    mpz_class m = pl.modulus;
    u64 lo = mpz_get_ui(mpz_class(m & mpz_class(~u64(0))).get_mpz_t());
    u64 hi = mpz_get_ui(mpz_class(m >> 64).get_mpz_t());
    big_mod = ((u128)hi << 64) | lo;
  }
  for (i64 t = tmax; t >= 0; --t) {
    std::fill(accA.begin(), accA.end(), 0);
    std::fill(accB.begin(), accB.end(), 0);
    auto scatter = [&](const SparseOp& S, std::vector<u128>& acc) {
      for (int j = 0; j < S.cols; ++j) {
        for (int t2 = 0; t2 < k; ++t2) {
          u64 xj = cur[(size_t)t2 * n + j];
          if (!xj) continue;
          for (i64 e = S.col_ptr[j]; e < S.col_ptr[j + 1]; ++e) {
            int i = S.row_idx[e];
            const u64* dg = S.digs.data() + (size_t)e * k;
            for (int t1 = 0; t1 + t2 < k; ++t1)
              acc[(size_t)i * k + t1 + t2] += (u128)dg[t1] * xj;
          }
        }
      }
    };
    scatter(A, accA);
    scatter(B, accB);
    if (k == 1) {
      u64 tm = (u64)(t % (i64)word_mod);
      for (int i = 0; i < n; ++i) {
        u64 ya = (u64)(accA[i] % word_mod);
        u64 yb = (u64)(accB[i] % word_mod);
        nxt[i] = (u64)(((u128)tm * ya + yb) % word_mod);
      }
    } else {
      for (int i = 0; i < n; ++i) {
        // normalize both accumulators to base-beta digits; planes at or
        // beyond k vanish mod p^M since k*limb_exp >= M
        u64 da[8], db[8];
        u128 carry = 0;
        for (int tt = 0; tt < k; ++tt) {
          u128 v = accA[(size_t)i * k + tt] + carry;
          da[tt] = (u64)(v % beta);
          carry = v / beta;
        }
        carry = 0;
        for (int tt = 0; tt < k; ++tt) {
          u128 v = accB[(size_t)i * k + tt] + carry;
          db[tt] = (u64)(v % beta);
          carry = v / beta;
        }
        u128 v = 0;
        for (int tt = k - 1; tt >= 0; --tt)
          v = v * beta + ((u128)(u64)t * da[tt] + db[tt]);
        // k == 2 only: v fits in 128 bits by the dispatch size guard
        v %= big_mod;
        for (int tt = 0; tt < k; ++tt) {
          nxt[(size_t)tt * n + i] = (u64)(v % beta);
          v /= beta;
        }
      }
    }
    cur.swap(nxt);
    if (matvec_counter) ++*matvec_counter;
  }
  w.d = std::move(cur);
}
}  // namespace detail

// w <- (0*A + B)(1*A + B)...(tmax*A + B) w, the factor with t = tmax applied
// first; one fused pass per step both multiplies and decrements the running
// matrix, so each step costs one load of the two operand matrices
inline void linrec_eval(const ModMatrix& A, const ModMatrix& B, i64 tmax,
                        ModVec& w, i64* matvec_counter = nullptr) {
  const StripePlan& pl = A.plan;
  int n = A.rows;
  DRZ_REQUIRE(A.rows == A.cols && B.rows == n && B.cols == n && w.n == n,
              "linrec_eval: shape mismatch");
  DRZ_REQUIRE(tmax >= 0, "linrec_eval: negative range");
  int k = pl.limbs;
  if (k <= 2) {
    i64 nnz = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool nz = false;
        for (int t = 0; t < k && !nz; ++t)
          nz = A.plane(t)[(size_t)i * n + j] != 0 ||
               B.plane(t)[(size_t)i * n + j] != 0;
        nnz += nz;  // upper bound for both operands at once
      }
    bool small = 3 * nnz <= (i64)n * n;
    bool range_ok = k == 1 || (pl.beta <= (u64(1) << 56) && tmax <= 4095);
    if (small && range_ok) {
      SparseOp sa = SparseOp::build(A), sb = SparseOp::build(B);
      i64 worst = std::max(sa.max_row_nnz, sb.max_row_nnz) * k;
      if (worst <= pl.stripe) {
        detail::sparse_steps(pl, sa, sb, tmax, w, matvec_counter);
        return;
      }
    }
  }
  if (k == 1) {
    u64 mod = mpz_get_ui(pl.modulus.get_mpz_t());
    u64 tm = (u64)(tmax % (i64)mod);
    size_t nn = (size_t)n * n;
    std::vector<u64> M(nn);
    const u64* a = A.plane(0);
    const u64* b = B.plane(0);
    for (size_t e = 0; e < nn; ++e) M[e] = addmod_u64(mulmod_u64(a[e], tm, mod), b[e], mod);
    std::vector<u64> cur(w.plane(0), w.plane(0) + n), nxt(n);
    for (i64 t = tmax; t >= 0; --t) {
      for (int i = 0; i < n; ++i) {
        u64* row = M.data() + (size_t)i * n;
        const u64* arow = a + (size_t)i * n;
        u128 acc = 0;
        i64 left = pl.stripe;
        for (int j = 0; j < n; ++j) {
          u64 m = row[j];
          acc += (u128)m * cur[j];
          row[j] = submod_u64(m, arow[j], mod);
          if (--left == 0) {
            acc = (u64)(acc % mod);
            left = pl.stripe;
          }
        }
        nxt[i] = (u64)(acc % mod);
      }
      std::swap(cur, nxt);
      if (matvec_counter) ++*matvec_counter;
    }
    std::copy(cur.begin(), cur.end(), w.plane(0));
    return;
  }
  // generic plane path: keep the running matrix in mpz per entry
  ModMatrix M(pl, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M.set(i, j, A.get(i, j) * tmax + B.get(i, j));
  for (i64 t = tmax; t >= 0; --t) {
    w = matvec(M, w);
    if (matvec_counter) ++*matvec_counter;
    if (t > 0)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M.set(i, j, M.get(i, j) - A.get(i, j));
  }
}

// word-modulus product with striped 128-bit accumulation
inline ModMatrix mat_mul_striped(const ModMatrix& A, const ModMatrix& B) {
  const StripePlan& pl = A.plan;
  DRZ_REQUIRE(pl.limbs == 1, "mat_mul_striped: modulus exceeds one word");
  DRZ_REQUIRE(A.cols == B.rows, "mat_mul_striped: shape mismatch");
  u64 mod = mpz_get_ui(pl.modulus.get_mpz_t());
  ModMatrix C(pl, A.rows, B.cols);
  const u64* a = A.plane(0);
  const u64* b = B.plane(0);
  u64* c = C.plane(0);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.cols; ++j) {
      u128 acc = 0;
      i64 left = pl.stripe;
      for (int l = 0; l < A.cols; ++l) {
        acc += (u128)a[(size_t)i * A.cols + l] * b[(size_t)l * B.cols + j];
        if (--left == 0) {
          acc = (u64)(acc % mod);
          left = pl.stripe;
        }
      }
      c[(size_t)i * B.cols + j] = (u64)(acc % mod);
    }
  return C;
}

// plain product, test-support utility
inline ModMatrix mat_mul(const ModMatrix& A, const ModMatrix& B) {
  DRZ_REQUIRE(A.cols == B.rows, "mat_mul: shape mismatch");
  ModMatrix C(A.plan, A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.cols; ++j) {
      mpz_class acc = 0;
      for (int l = 0; l < A.cols; ++l) acc += A.get(i, l) * B.get(l, j);
      C.set(i, j, acc);
    }
  return C;
}

// product mod N via the split A = A1 + M0*A2 with N | M0^2: three half-size
// multiplications instead of four, products accumulated in 128 bits
inline ModMatrix mat_mul_karatsuba(const ModMatrix& A, const ModMatrix& B,
                                   const mpz_class& M0) {
  const StripePlan& pl = A.plan;
  DRZ_REQUIRE(pl.limbs == 1, "mat_mul_karatsuba: word modulus required");
  DRZ_REQUIRE(A.cols == B.rows, "mat_mul_karatsuba: shape mismatch");
  mpz_class m0sq = M0 * M0;
  DRZ_REQUIRE(mpz_divisible_p(m0sq.get_mpz_t(), pl.modulus.get_mpz_t()),
              "mat_mul_karatsuba: modulus must divide M0^2");
  u64 mod = mpz_get_ui(pl.modulus.get_mpz_t());
  u64 m0 = mpz_get_ui(M0.get_mpz_t());
  int n = A.rows, m = A.cols, q = B.cols;
  auto split = [&](const ModMatrix& X, std::vector<u64>& lo, std::vector<u64>& hi) {
    lo.resize((size_t)X.rows * X.cols);
    hi.resize(lo.size());
    const u64* xd = X.plane(0);
    for (size_t e = 0; e < lo.size(); ++e) {
      lo[e] = xd[e] % m0;
      hi[e] = xd[e] / m0;
    }
  };
  std::vector<u64> a1, a2, b1, b2;
  split(A, a1, a2);
  split(B, b1, b2);
  std::vector<u64> a3(a1.size()), b3(b1.size());
  for (size_t e = 0; e < a1.size(); ++e) a3[e] = a1[e] + a2[e];
  for (size_t e = 0; e < b1.size(); ++e) b3[e] = b1[e] + b2[e];
  auto mulw = [&](const std::vector<u64>& X, const std::vector<u64>& Y) {
    std::vector<u64> Z((size_t)n * q);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) {
        u128 acc = 0;
        for (int l = 0; l < m; ++l) acc += (u128)X[(size_t)i * m + l] * Y[(size_t)l * q + j];
        Z[(size_t)i * q + j] = (u64)(acc % mod);
      }
    return Z;
  };
  std::vector<u64> p1 = mulw(a1, b1), p2 = mulw(a2, b2), p3 = mulw(a3, b3);
  ModMatrix C(pl, n, q);
  u64* cd = C.plane(0);
  for (size_t e = 0; e < p1.size(); ++e) {
    u64 cross = submod_u64(p3[e], addmod_u64(p1[e], p2[e], mod), mod);
    cd[e] = addmod_u64(p1[e], mulmod_u64(m0 % mod, cross, mod), mod);
  }
  return C;
}

// --- unit-pivot echelon over Z/p^M ------------------------------------------

struct WordRing {
  u64 mod = 0, p = 0;
  using Elt = u64;
  Elt zero() const { return 0; }
  Elt one() const { return 1 % mod; }
  Elt from_mpz(const mpz_class& x) const {
    return mpz_get_ui(mpz_class(mod_reduce(x, mpz_class(mod))).get_mpz_t());
  }
  mpz_class to_mpz(Elt x) const { return mpz_class(x); }
  Elt add(Elt a, Elt b) const { return addmod_u64(a, b, mod); }
  Elt sub(Elt a, Elt b) const { return submod_u64(a, b, mod); }
  Elt mul(Elt a, Elt b) const { return mulmod_u64(a, b, mod); }
  Elt neg(Elt a) const { return a ? mod - a : 0; }
  bool is_zero(Elt a) const { return a == 0; }
  bool is_unit(Elt a) const { return a % p != 0; }
  Elt inv(Elt a) const { return invmod_u64(a, mod); }
};

struct MpzRing {
  mpz_class mod;
  u64 p = 0;
  using Elt = mpz_class;
  Elt zero() const { return 0; }
  Elt one() const { return 1; }
  Elt from_mpz(const mpz_class& x) const { return mod_reduce(x, mod); }
  mpz_class to_mpz(const Elt& x) const { return x; }
  Elt add(const Elt& a, const Elt& b) const { return mod_reduce(a + b, mod); }
  Elt sub(const Elt& a, const Elt& b) const { return mod_reduce(a - b, mod); }
  Elt mul(const Elt& a, const Elt& b) const { return mod_reduce(a * b, mod); }
  Elt neg(const Elt& a) const { return mod_reduce(-a, mod); }
  bool is_zero(const Elt& a) const { return a == 0; }
  bool is_unit(const Elt& a) const { return !mpz_divisible_ui_p(a.get_mpz_t(), p); }
  Elt inv(const Elt& a) const { return invmod_mpz(a, mod); }
};

// reduced echelon form using only pivots that are units mod p; pivots are
// chosen by a row-major scan (first unit entry of each row in turn), which
// fixes the decomposition deterministically.  U accumulates the row
// operations, so U*original = reduced.
template <class Ring>
struct UnitEchelon {
  Ring ring;
  int rows = 0, cols = 0;
  std::vector<typename Ring::Elt> mat;  // reduced matrix, row-major
  std::vector<typename Ring::Elt> U;    // rows x rows transform
  std::vector<std::pair<int, int>> pivots;  // (row, col) in elimination order
  std::vector<int> pivot_row_of_col;        // -1 where the column has no pivot

  using Elt = typename Ring::Elt;

  UnitEchelon(Ring r, int nrows, int ncols, std::vector<Elt> data)
      : ring(r), rows(nrows), cols(ncols), mat(std::move(data)) {
    DRZ_REQUIRE((int)mat.size() == rows * cols, "UnitEchelon: bad data size");
    U.assign((size_t)rows * rows, ring.zero());
    for (int i = 0; i < rows; ++i) U[(size_t)i * rows + i] = ring.one();
    pivot_row_of_col.assign(cols, -1);
    for (int r = 0; r < rows; ++r) {
      int pc = -1;
      for (int c = 0; c < cols; ++c) {
        if (pivot_row_of_col[c] >= 0) continue;
        if (ring.is_unit(mat[(size_t)r * cols + c])) {
          pc = c;
          break;
        }
      }
      if (pc < 0) continue;
      Elt ipiv = ring.inv(mat[(size_t)r * cols + pc]);
      scale_row(r, ipiv);
      for (int r2 = 0; r2 < rows; ++r2) {
        if (r2 == r) continue;
        Elt f = mat[(size_t)r2 * cols + pc];
        if (ring.is_zero(f)) continue;
        addmul_row(r2, r, ring.neg(f));
      }
      pivots.emplace_back(r, pc);
      pivot_row_of_col[pc] = r;
    }
  }

  int rank() const { return (int)pivots.size(); }

  // particular solution of (original matrix) x = b with x supported on pivot
  // columns; returns false when b is not reachable through unit pivots
  bool solve(const std::vector<Elt>& b, std::vector<Elt>& x) const {
    std::vector<Elt> c((size_t)rows, ring.zero());
    for (int i = 0; i < rows; ++i) {
      Elt acc = ring.zero();
      for (int j = 0; j < rows; ++j) {
        if (ring.is_zero(b[j])) continue;
        acc = ring.add(acc, ring.mul(U[(size_t)i * rows + j], b[j]));
      }
      c[i] = acc;
    }
    return solve_transformed(c, x);
  }

  // same, for b = e_j (a unit vector): c is just column j of U
  bool solve_unit(int j, std::vector<Elt>& x) const {
    std::vector<Elt> c((size_t)rows, ring.zero());
    for (int i = 0; i < rows; ++i) c[i] = U[(size_t)i * rows + j];
    return solve_transformed(c, x);
  }

  bool solve_transformed(const std::vector<Elt>& c, std::vector<Elt>& x) const {
    std::vector<char> is_pivot_row(rows, 0);
    for (auto& pr : pivots) is_pivot_row[pr.first] = 1;
    for (int i = 0; i < rows; ++i)
      if (!is_pivot_row[i] && !ring.is_zero(c[i])) return false;
    x.assign((size_t)cols, ring.zero());
    for (auto& pr : pivots) x[pr.second] = c[pr.first];
    return true;
  }

 private:
  void scale_row(int r, const Elt& s) {
    for (int c = 0; c < cols; ++c) {
      auto& e = mat[(size_t)r * cols + c];
      if (!ring.is_zero(e)) e = ring.mul(e, s);
    }
    for (int c = 0; c < rows; ++c) {
      auto& e = U[(size_t)r * rows + c];
      if (!ring.is_zero(e)) e = ring.mul(e, s);
    }
  }
  void addmul_row(int dst, int src, const Elt& s) {
    for (int c = 0; c < cols; ++c) {
      auto& e = mat[(size_t)src * cols + c];
      if (!ring.is_zero(e))
        mat[(size_t)dst * cols + c] =
            ring.add(mat[(size_t)dst * cols + c], ring.mul(e, s));
    }
    for (int c = 0; c < rows; ++c) {
      auto& e = U[(size_t)src * rows + c];
      if (!ring.is_zero(e))
        U[(size_t)dst * rows + c] =
            ring.add(U[(size_t)dst * rows + c], ring.mul(e, s));
    }
  }
};

using WordEchelon = UnitEchelon<WordRing>;
using MpzEchelon = UnitEchelon<MpzRing>;

// coefficients d_0..d_n of det(lambda I - A) = sum d_i lambda^{n-i}, computed
// division-free (Berkowitz); equivalently det(I - T A) = sum d_i T^i
inline std::vector<mpz_class> berkowitz_charpoly(
    const std::vector<mpz_class>& A, int n, const mpz_class& mod) {
  DRZ_REQUIRE((int)A.size() == n * n, "berkowitz_charpoly: bad size");
  auto red = [&](const mpz_class& x) { return mod_reduce(x, mod); };
  std::vector<mpz_class> V{1};
  for (int r = 1; r <= n; ++r) {
    // Toeplitz column: 1, -a_rr, -R C, -R B C, -R B^2 C, ...
    std::vector<mpz_class> s(r + 1);
    s[0] = 1;
    s[1] = red(-A[(size_t)(r - 1) * n + (r - 1)]);
    std::vector<mpz_class> t(r - 1);
    for (int i = 0; i < r - 1; ++i) t[i] = A[(size_t)i * n + (r - 1)];  // C
    for (int j = 2; j <= r; ++j) {
      mpz_class dot = 0;
      for (int i = 0; i < r - 1; ++i) dot += A[(size_t)(r - 1) * n + i] * t[i];
      s[j] = red(-dot);
      if (j == r) break;
      std::vector<mpz_class> t2(r - 1);
      for (int i = 0; i < r - 1; ++i) {
        mpz_class acc = 0;
        for (int l = 0; l < r - 1; ++l) acc += A[(size_t)i * n + l] * t[l];
        t2[i] = red(acc);
      }
      t.swap(t2);
    }
    std::vector<mpz_class> W(r + 1);
    for (int i = 0; i <= r; ++i) {
      mpz_class acc = 0;
      for (int j = 0; j <= i && j <= r; ++j)
        if (i - j < (int)V.size()) acc += s[j] * V[i - j];
      W[i] = red(acc);
    }
    V.swap(W);
  }
  return V;
}

// d_0..d_n with det(lambda I - A) = sum d_i lambda^{n-i} mod p^M; the reversed
// reading gives det(I - T A) = sum d_i T^i directly
inline std::vector<mpz_class> charpoly_division_free(const ModMatrix& A) {
  DRZ_REQUIRE(A.rows == A.cols, "charpoly_division_free: square input required");
  int n = A.rows;
  std::vector<mpz_class> entries((size_t)n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) entries[(size_t)i * n + j] = A.get(i, j);
  return berkowitz_charpoly(entries, n, A.plan.modulus);
}

struct EchelonResult {
  ModMatrix reduced;
  ModMatrix transform;  // transform * original = reduced
  std::vector<std::pair<int, int>> pivots;
  std::vector<int> pivot_row_of_col;
  int rank = 0;
};

// unit-pivot reduced echelon of a ModMatrix; convenience entry point over the
// ring-templated engine
inline EchelonResult row_reduce_unit_pivots(const ModMatrix& A) {
  MpzRing ring{A.plan.modulus, A.plan.p};
  std::vector<mpz_class> data((size_t)A.rows * A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) data[(size_t)i * A.cols + j] = A.get(i, j);
  MpzEchelon ech(ring, A.rows, A.cols, std::move(data));
  EchelonResult out;
  out.reduced = ModMatrix(A.plan, A.rows, A.cols);
  out.transform = ModMatrix(A.plan, A.rows, A.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j)
      out.reduced.set(i, j, ech.mat[(size_t)i * A.cols + j]);
    for (int j = 0; j < A.rows; ++j)
      out.transform.set(i, j, ech.U[(size_t)i * A.rows + j]);
  }
  out.pivots = ech.pivots;
  out.pivot_row_of_col = ech.pivot_row_of_col;
  out.rank = ech.rank();
  return out;
}

// particular solution of A x = b supported on unit-pivot columns; false when
// b leaves the unit-reachable span
inline bool solve_particular(const ModMatrix& A, const ModVec& b, ModVec& x) {
  DRZ_REQUIRE(A.rows == b.n, "solve_particular: shape mismatch");
  MpzRing ring{A.plan.modulus, A.plan.p};
  std::vector<mpz_class> data((size_t)A.rows * A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) data[(size_t)i * A.cols + j] = A.get(i, j);
  MpzEchelon ech(ring, A.rows, A.cols, std::move(data));
  std::vector<mpz_class> bb(A.rows), xx;
  for (int i = 0; i < A.rows; ++i) bb[i] = b.get(i);
  if (!ech.solve(bb, xx)) return false;
  x = ModVec(A.plan, A.cols);
  for (int j = 0; j < A.cols; ++j) x.set(j, xx[j]);
  return true;
}

// row echelon over F_p with lazy reduction: row updates accumulate in u64 and
// are reduced only against the overflow bound, so the inner loop is a plain
// multiply-add; pivots are the first nonzero residue of each row in turn
struct FpEchelon {
  u64 p = 0;
  int rows = 0, cols = 0;
  std::vector<std::vector<u64>> m;
  std::vector<int> pivot_row_of_col;
  std::vector<std::pair<int, int>> pivots;

  FpEchelon(u64 prime, int nrows, int ncols, std::vector<std::vector<u64>> data)
      : p(prime), rows(nrows), cols(ncols), m(std::move(data)) {
    DRZ_REQUIRE((int)m.size() == rows, "FpEchelon: bad row count");
    pivot_row_of_col.assign(cols, -1);
    std::vector<u64> bound(rows, p);
    u64 cap = (u64(1) << 63) / (p * p + 1);
    for (auto& row : m) {
      DRZ_REQUIRE((int)row.size() == cols, "FpEchelon: ragged rows");
      for (auto& e : row) e %= p;
    }
    for (int r = 0; r < rows; ++r) {
      int pc = -1;
      for (int c = 0; c < cols; ++c) {
        if (m[r][c] % p == 0) continue;
        pc = c;
        break;
      }
      if (pc < 0) continue;
      // normalize the pivot row fully
      for (auto& e : m[r]) e %= p;
      u64 inv = invmod_u64(m[r][pc] % p, p);
      for (auto& e : m[r]) e = e * inv % p;
      bound[r] = p;
      for (int r2 = r + 1; r2 < rows; ++r2) {
        u64 lead = m[r2][pc] % p;
        if (!lead) continue;
        if (bound[r2] >= cap) {
          for (auto& e : m[r2]) e %= p;
          bound[r2] = p;
        }
        u64 f = p - lead;
        const u64* src = m[r].data();
        u64* dst = m[r2].data();
        for (int c = 0; c < cols; ++c) dst[c] += f * src[c];
        bound[r2] += (p - 1) * (p - 1) + 1;
      }
      pivots.emplace_back(r, pc);
      pivot_row_of_col[pc] = r;
    }
  }

  int rank() const { return (int)pivots.size(); }
};

}  // namespace drz
