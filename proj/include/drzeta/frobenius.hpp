#pragma once

// p-adic precision planning and the truncated Frobenius expansion of a basis
// form x^beta Omega / f^m into monomial terms x^E Omega / f^P with scalars
// known mod p^{s_m}

#include "cohomology.hpp"

namespace drz {

struct PrecisionPlan {
  u64 p = 0;
  int n = 0, d = 0;
  i64 b = 0;
  std::vector<i64> h;   // Hodge numbers, index 1..n
  std::vector<i64> H;   // cumulative Hodge heights, index 0..b
  int A_sharp = 1;      // relative digits above the Hodge height
  int A = 1;            // absolute digits carried by the charpoly residues
  std::vector<int> r_m, N_m, s_m;  // per pole order, index 1..n
  int M = 0;            // working modulus exponent
  int escalations = 0;

  i64 max_pole(int m) const { return (i64)p * s_m[m]; }
};

struct PlanOverrides {
  std::vector<int> N_m;  // empty = derived; one value = uniform; else per m
  int r_uniform = 0;     // 0 = derived (A_sharp)
};

namespace detail {
// least w >= 1 with p^{2w} > 4 C(b,i)^2 p^{i(n-1)}: enough digits to pin a
// coefficient whose archimedean size is bounded by the Weil bound
inline int weil_digits(u64 p, i64 b, int n, i64 i) {
  mpz_class bound = 4 * mpz_binomial(b, i) * mpz_binomial(b, i) *
                    mpz_pow_ui(p, (unsigned long)(i * (n - 1)));
  int w = 1;
  while (mpz_pow_ui(p, 2 * w) <= bound) ++w;
  return w;
}

inline void refresh_precision(PrecisionPlan& P) {
  int n = P.n;
  P.s_m.assign(n + 1, 0);
  i64 M = 0;
  for (int m = 1; m <= n; ++m) {
    P.s_m[m] = P.N_m[m] + m - 1;
    i64 v = factorial_valuation((u64)P.p * P.s_m[m] - 1, P.p);
    M = std::max(M, P.r_m[m] + v - m + 1);
  }
  P.M = (int)M;
}
}  // namespace detail

inline PrecisionPlan choose_precision(u64 p, int n, int d,
                                      const PlanOverrides& ov = {}) {
  PrecisionPlan P;
  P.p = p;
  P.n = n;
  P.d = d;
  P.h = hodge_numbers(n, d);
  P.H = hodge_heights(n, d);
  P.b = betti_b(n, d);
  i64 half = (P.b + 1) / 2;
  int sharp = 1;
  for (i64 i = 1; i <= half; ++i)
    sharp = std::max(sharp, detail::weil_digits(p, P.b, n, i) - (int)P.H[i]);
  P.A_sharp = sharp;
  P.A = sharp + (int)P.H[half];
  P.r_m.assign(n + 1, 0);
  P.N_m.assign(n + 1, 0);
  for (int m = 1; m <= n; ++m) {
    P.r_m[m] = ov.r_uniform > 0 ? ov.r_uniform : P.A_sharp;
    if (!ov.N_m.empty()) {
      P.N_m[m] = ov.N_m.size() == 1 ? ov.N_m[0] : ov.N_m.at(m - 1);
      P.r_m[m] = std::max(1, P.N_m[m] - n);
    } else {
      P.N_m[m] = P.r_m[m] + n;
    }
    DRZ_REQUIRE(P.N_m[m] >= 1, "choose_precision: empty series");
  }
  if (ov.r_uniform > 0) {
    // a reduced-digit plan trusts the verification battery instead of the
    // a-priori bound; A shrinks with it
    P.A_sharp = ov.r_uniform;
    P.A = ov.r_uniform + (int)P.H[half];
  }
  detail::refresh_precision(P);
  return P;
}

// escalation ladder: more series terms first, then more digits as well
inline bool escalate_plan(PrecisionPlan& P) {
  if (P.escalations >= 3) return false;
  ++P.escalations;
  for (int m = 1; m <= P.n; ++m) {
    P.N_m[m] += 2;
    if (P.escalations >= 2) P.r_m[m] += 2;
  }
  if (P.escalations >= 2) {
    P.A_sharp += 2;
    P.A += 2;
  }
  detail::refresh_precision(P);
  return true;
}

// one monomial term of the expansion of p^{-1} sigma applied to a basis
// form: dc * x^E Omega / f^P, with dc already reduced mod p^{s_m} and the
// deferred factor p^{m-1} tracked by the assembly stage
struct FrobTerm {
  Expo exponent;
  int pole = 0;
  mpz_class dc;
};

// expansion of the column for basis monomial beta at pole order m:
//   p^{m-n-1} sigma(x^beta Omega / f^m)
//     = p^{m-1} sum_{j<N_m} sum_alpha D_{j,m} C_{j,alpha}
//       x^{p(beta+alpha+1)-1} Omega / f^{p(m+j)}  + O(p^{M+m-1} precision)
inline std::vector<FrobTerm> frobenius_terms(const Hypersurface& X,
                                             const Expo& beta, int m,
                                             const PrecisionPlan& plan) {
  int N = plan.N_m[m];
  mpz_class smod = mpz_pow_ui(X.p, (unsigned long)plan.s_m[m]);
  ModulusContext sctx{X.p, plan.s_m[m], smod};
  DTable D = build_dtable(m, N, sctx);
  auto powers = power_series(X.f, N, smod);
  std::vector<FrobTerm> out;
  Expo one = Expo::ones(X.nv());
  for (int j = 0; j < N; ++j) {
    if (D.D[j] == 0) continue;
    for (const auto& [c, alpha] : powers[j].terms()) {
      mpz_class dc = mod_reduce(D.D[j] * c, smod);
      if (dc == 0) continue;
      FrobTerm t;
      t.exponent = (beta + alpha + one).scaled((int)X.p) - one;
      t.pole = (int)X.p * (m + j);
      t.dc = dc;
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace drz
