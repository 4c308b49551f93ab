#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <drzeta/frobenius.hpp>

using namespace drz;

namespace {

HomogPoly fermat(int nv, int d) {
  HomogPoly f(nv, d);
  for (int i = 0; i < nv; ++i) {
    Expo e(nv);
    e[i] = d;
    f.coeff(e) = 1;
  }
  return f;
}

mpz_class powmod(const mpz_class& b, u64 e, const mpz_class& mod) {
  mpz_class r;
  mpz_powm_ui(r.get_mpz_t(), b.get_mpz_t(), (unsigned long)e, mod.get_mpz_t());
  return r;
}

mpz_class eval_at(const HomogPoly& f, const std::vector<mpz_class>& a,
                  u64 scale, const mpz_class& mod) {
  mpz_class acc = 0;
  for (const auto& [c, e] : f.terms()) {
    mpz_class t = c;
    for (int i = 0; i < f.nv; ++i)
      t = mod_reduce(t * powmod(a[i], scale * (u64)e[i], mod), mod);
    acc += t;
  }
  return mod_reduce(acc, mod);
}

// evaluate the truncated expansion at a random point and compare with
// x^{p(beta+1)-1} / sigma(f)^m after clearing denominators; the tail of the
// series is divisible by p^{N_m}
void check_expansion(const Hypersurface& X, const Expo& beta, int m,
                     const PrecisionPlan& plan, std::mt19937_64& rng) {
  auto terms = frobenius_terms(X, beta, m, plan);
  REQUIRE(!terms.empty());
  int N = plan.N_m[m];
  u64 p = X.p;
  i64 pmax = plan.max_pole(m);  // p (m + N - 1), the deepest pole emitted
  mpz_class smod = mpz_pow_ui(p, plan.s_m[m]);
  mpz_class nmod = mpz_pow_ui(p, N);
  int nv = X.nv();
  for (const FrobTerm& t : terms) {
    REQUIRE(t.pole % (int)p == 0);
    int j = t.pole / (int)p - m;
    REQUIRE(j >= 0);
    REQUIRE(j < N);
    REQUIRE(t.exponent.total() == X.d * t.pole - nv);
    for (int i = 0; i < nv; ++i) REQUIRE((t.exponent[i] + 1) % (int)p == 0);
    REQUIRE(t.dc > 0);
    REQUIRE(t.dc < smod);
  }
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<mpz_class> a(nv);
    mpz_class fa;
    do {
      for (auto& x : a) x = (i64)(1 + rng() % (p * p - 1));
      fa = eval_at(X.f, a, 1, smod);
    } while (mpz_divisible_ui_p(fa.get_mpz_t(), (unsigned long)p));
    mpz_class fap = eval_at(X.f, a, p, smod);  // sigma(f) at the point
    mpz_class lhs = powmod(fa, (u64)pmax, smod) *
                    invmod_mpz(powmod(fap, (u64)m, smod), smod);
    for (int i = 0; i < nv; ++i)
      lhs = mod_reduce(lhs * powmod(a[i], (u64)(p * (beta[i] + 1) - 1), smod),
                       smod);
    mpz_class rhs = 0;
    for (const FrobTerm& t : terms) {
      mpz_class term = t.dc * powmod(fa, (u64)(pmax - t.pole), smod);
      for (int i = 0; i < nv; ++i)
        term = mod_reduce(term * powmod(a[i], (u64)t.exponent[i], smod), smod);
      rhs += term;
    }
    REQUIRE(mod_reduce(lhs - rhs, nmod) == 0);
  }
}

}  // namespace

TEST_CASE("precision plans", "[frobenius]") {
  PrecisionPlan P = choose_precision(7, 2, 3);
  REQUIRE(P.b == 2);
  REQUIRE(P.A_sharp == 2);
  REQUIRE(P.A == 2);
  REQUIRE(P.r_m == std::vector<int>{0, 2, 2});
  REQUIRE(P.N_m == std::vector<int>{0, 4, 4});
  REQUIRE(P.s_m == std::vector<int>{0, 4, 5});
  REQUIRE(P.M == 5);
  REQUIRE(P.max_pole(1) == 28);
  REQUIRE(P.max_pole(2) == 35);

  P = choose_precision(7, 2, 4);
  REQUIRE(P.A_sharp == 4);
  REQUIRE(P.A == 4);
  REQUIRE(P.N_m == std::vector<int>{0, 6, 6});
  REQUIRE(P.s_m == std::vector<int>{0, 6, 7});
  REQUIRE(P.M == 9);

  P = choose_precision(13, 2, 5);
  REQUIRE(P.A_sharp == 6);
  REQUIRE(P.A == 6);
  REQUIRE(P.s_m == std::vector<int>{0, 8, 9});
  REQUIRE(P.M == 13);

  // K3 quartics: nineteen slope-1 slots push A past A_sharp
  P = choose_precision(7, 3, 4);
  REQUIRE(P.A_sharp == 8);
  REQUIRE(P.A == 18);
  REQUIRE(P.N_m == std::vector<int>{0, 11, 11, 11});
  REQUIRE(P.s_m == std::vector<int>{0, 11, 12, 13});
  REQUIRE(P.M == 19);

  P = choose_precision(11, 3, 4);
  REQUIRE(P.A_sharp == 7);
  REQUIRE(P.A == 17);
  REQUIRE(P.M == 17);

  P = choose_precision(11, 4, 3);
  REQUIRE(P.h == std::vector<i64>{0, 0, 5, 5, 0});
  REQUIRE(P.A_sharp == 6);
  REQUIRE(P.A == 11);
  REQUIRE(P.M == 16);
}

TEST_CASE("plan overrides", "[frobenius]") {
  PlanOverrides ov;
  ov.r_uniform = 1;
  PrecisionPlan P = choose_precision(7, 3, 4, ov);
  REQUIRE(P.A_sharp == 1);
  REQUIRE(P.A == 11);
  REQUIRE(P.r_m == std::vector<int>{0, 1, 1, 1});
  REQUIRE(P.N_m == std::vector<int>{0, 4, 4, 4});
  REQUIRE(P.s_m == std::vector<int>{0, 4, 5, 6});
  REQUIRE(P.M == 4);

  ov = PlanOverrides{};
  ov.N_m = {3};  // uniform series cut, digits follow
  P = choose_precision(7, 2, 3, ov);
  REQUIRE(P.N_m == std::vector<int>{0, 3, 3});
  REQUIRE(P.r_m == std::vector<int>{0, 1, 1});
  REQUIRE(P.s_m == std::vector<int>{0, 3, 4});
  REQUIRE(P.M == 3);

  ov.N_m = {4, 6};  // per pole order
  P = choose_precision(7, 2, 3, ov);
  REQUIRE(P.N_m == std::vector<int>{0, 4, 6});
  REQUIRE(P.r_m == std::vector<int>{0, 2, 4});
  REQUIRE(P.s_m == std::vector<int>{0, 4, 7});
  REQUIRE(P.M == 9);
}

TEST_CASE("escalation ladder", "[frobenius]") {
  PrecisionPlan P = choose_precision(7, 2, 3);
  REQUIRE(escalate_plan(P));  // more series terms only
  REQUIRE(P.escalations == 1);
  REQUIRE(P.N_m == std::vector<int>{0, 6, 6});
  REQUIRE(P.r_m == std::vector<int>{0, 2, 2});
  REQUIRE(P.A_sharp == 2);
  REQUIRE(P.M == 7);

  REQUIRE(escalate_plan(P));  // now digits as well
  REQUIRE(P.N_m == std::vector<int>{0, 8, 8});
  REQUIRE(P.r_m == std::vector<int>{0, 4, 4});
  REQUIRE(P.A_sharp == 4);
  REQUIRE(P.A == 4);
  REQUIRE(P.M == 12);

  REQUIRE(escalate_plan(P));
  REQUIRE(P.N_m == std::vector<int>{0, 10, 10});
  REQUIRE(P.r_m == std::vector<int>{0, 6, 6});
  REQUIRE(P.A_sharp == 6);
  REQUIRE(P.M == 16);

  REQUIRE_FALSE(escalate_plan(P));
  REQUIRE(P.escalations == 3);
}

TEST_CASE("expansion of a fermat cubic column", "[frobenius]") {
  Hypersurface X = Hypersurface::make(7, 2, 3, fermat(3, 3));
  PlanOverrides ov;
  ov.N_m = {3};
  PrecisionPlan plan = choose_precision(7, 2, 3, ov);
  auto terms = frobenius_terms(X, Expo{0, 0, 0}, 1, plan);
  REQUIRE(terms.size() == 10);  // 1 + 3 + 6 monomials of f^0, f^1, f^2

  REQUIRE(terms[0].exponent == Expo{6, 6, 6});
  REQUIRE(terms[0].pole == 7);
  REQUIRE(terms[0].dc == 3);  // D_0 = sum_{i<3} C(i,i)

  REQUIRE(terms[1].exponent == Expo{27, 6, 6});
  REQUIRE(terms[1].pole == 14);
  REQUIRE(terms[1].dc == 340);  // D_1 = -3 mod 7^3

  REQUIRE(terms[5].exponent == Expo{27, 27, 6});
  REQUIRE(terms[5].pole == 21);
  REQUIRE(terms[5].dc == 2);  // D_2 = 1 on the cross term of f^2

  REQUIRE(terms[9].exponent == Expo{6, 6, 48});
  REQUIRE(terms[9].pole == 21);
  REQUIRE(terms[9].dc == 1);
}

TEST_CASE("expansion matches sigma at sample points", "[frobenius]") {
  std::mt19937_64 rng(73);

  Hypersurface fc = Hypersurface::make(7, 2, 3, fermat(3, 3));
  PrecisionPlan plan = choose_precision(7, 2, 3);
  check_expansion(fc, Expo{0, 0, 0}, 1, plan, rng);
  check_expansion(fc, Expo{1, 1, 1}, 2, plan, rng);

  HomogPoly ss = HomogPoly::from_terms(
      3, 3, {{1, {0, 2, 1}}, {-1, {3, 0, 0}}, {-1, {1, 0, 2}}});
  Hypersurface sc = Hypersurface::make(7, 2, 3, ss);
  check_expansion(sc, Expo{1, 1, 1}, 2, plan, rng);

  // random quartic curve over F11 at a short series cut
  PlanOverrides ov;
  ov.N_m = {4};
  HomogPoly q(3, 4);
  for (auto& c : q.c) c = (i64)(rng() % 11);
  q.coeff({4, 0, 0}) = 1;
  q.coeff({0, 4, 0}) = 2;
  q.coeff({0, 0, 4}) = 1;
  Hypersurface qc = Hypersurface::make(11, 2, 4, q);
  PrecisionPlan plan11 = choose_precision(11, 2, 4, ov);
  check_expansion(qc, Expo{1, 0, 0}, 1, plan11, rng);
  check_expansion(qc, Expo{2, 2, 1}, 2, plan11, rng);

  // quartic surface columns at every pole order
  Hypersurface fq = Hypersurface::make(7, 3, 4, fermat(4, 4));
  PlanOverrides ovs;
  ovs.r_uniform = 2;
  PrecisionPlan plans = choose_precision(7, 3, 4, ovs);
  check_expansion(fq, Expo{0, 0, 0, 0}, 1, plans, rng);
  check_expansion(fq, Expo{2, 1, 1, 0}, 2, plans, rng);
  check_expansion(fq, Expo{2, 2, 2, 2}, 3, plans, rng);
}
