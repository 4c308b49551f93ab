#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <drzeta/linalg.hpp>

using namespace drz;

namespace {

ModMatrix random_matrix(const StripePlan& pl, int r, int c,
                        std::mt19937_64& rng) {
  ModMatrix A(pl, r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      mpz_class v = (i64)(rng() >> 12);
      A.set(i, j, mod_reduce(v, pl.modulus));
    }
  return A;
}

// independent reference product, plain mpz accumulation
std::vector<mpz_class> schoolbook(const ModMatrix& A, const ModMatrix& B) {
  std::vector<mpz_class> C((size_t)A.rows * B.cols, 0);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.cols; ++j) {
      mpz_class acc = 0;
      for (int l = 0; l < A.cols; ++l) acc += A.get(i, l) * B.get(l, j);
      C[(size_t)i * B.cols + j] = mod_reduce(acc, A.plan.modulus);
    }
  return C;
}

bool matrix_equals(const ModMatrix& A, const std::vector<mpz_class>& ref) {
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j)
      if (A.get(i, j) != ref[(size_t)i * A.cols + j]) return false;
  return true;
}

}  // namespace

TEST_CASE("stripe plans", "[linalg]") {
  StripePlan pl = StripePlan::make(7, 5);
  REQUIRE(pl.modulus == 16807);
  REQUIRE(pl.limbs == 1);
  REQUIRE(pl.karatsuba == false);
  REQUIRE(pl.stripe >= 1);

  // a 53-bit accumulator cannot hold one product mod 11^8; the planner
  // must split planes and flag the Karatsuba path
  StripePlan ref = StripePlan::make(11, 8, StripePlan::reference_capacity());
  REQUIRE(ref.karatsuba == true);
  REQUIRE(ref.limbs >= 2);
  StripePlan native = StripePlan::make(11, 8);
  REQUIRE(native.karatsuba == false);

  // digitize round-trip across both layouts
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    mpz_class v = mod_reduce(mpz_class((i64)(rng() >> 8)), ref.modulus);
    u64 digits[64];
    ref.digitize(v, digits);
    REQUIRE(ref.undigitize(digits) == v);
  }
}

TEST_CASE("striped product", "[linalg]") {
  StripePlan pl = StripePlan::make(5, 2);
  ModMatrix A(pl, 2, 2), B(pl, 2, 2);
  A.set(0, 0, 2); A.set(0, 1, 3); A.set(1, 0, 1); A.set(1, 1, 4);
  B.set(0, 0, 5); B.set(0, 1, 0); B.set(1, 0, 1); B.set(1, 1, 2);
  ModMatrix C = mat_mul_striped(A, B);
  REQUIRE(C.get(0, 0) == 13);
  REQUIRE(C.get(0, 1) == 6);
  REQUIRE(C.get(1, 0) == 9);
  REQUIRE(C.get(1, 1) == 8);

  // identity, and the schoolbook oracle on random 20x20 mod 11^4
  StripePlan pl11 = StripePlan::make(11, 4);
  std::mt19937_64 rng(17);
  ModMatrix I(pl11, 20, 20);
  for (int i = 0; i < 20; ++i) I.set(i, i, 1);
  for (int t = 0; t < 10; ++t) {
    ModMatrix X = random_matrix(pl11, 20, 20, rng);
    REQUIRE(matrix_equals(mat_mul_striped(I, X), schoolbook(I, X)));
    ModMatrix Y = random_matrix(pl11, 20, 20, rng);
    REQUIRE(matrix_equals(mat_mul_striped(X, Y), schoolbook(X, Y)));
  }
}

TEST_CASE("karatsuba split product", "[linalg]") {
  // 1x1: 7 * 13 mod 25 with M0 = 5
  StripePlan pl = StripePlan::make(5, 2);
  ModMatrix A(pl, 1, 1), B(pl, 1, 1);
  A.set(0, 0, 7);
  B.set(0, 0, 13);
  ModMatrix C = mat_mul_karatsuba(A, B, mpz_class(5));
  REQUIRE(C.get(0, 0) == 16);

  ModMatrix Z(pl, 1, 1);
  REQUIRE(mat_mul_karatsuba(A, Z, mpz_class(5)).get(0, 0) == 0);

  // cross-kernel agreement: 16x16 mod 7^6 with M0 = 7^3
  StripePlan pl7 = StripePlan::make(7, 6);
  std::mt19937_64 rng(29);
  for (int t = 0; t < 12; ++t) {
    ModMatrix X = random_matrix(pl7, 16, 16, rng);
    ModMatrix Y = random_matrix(pl7, 16, 16, rng);
    auto ref = schoolbook(X, Y);
    REQUIRE(matrix_equals(mat_mul_karatsuba(X, Y, mpz_pow_ui(7, 3)), ref));
    REQUIRE(matrix_equals(mat_mul_striped(X, Y), ref));
  }
}

TEST_CASE("all product paths agree across moduli", "[linalg]") {
  std::mt19937_64 rng(31);
  struct Case { u64 p; int M; };
  for (auto [p, M] : {Case{7, 3}, {11, 4}, {13, 5}, {7, 8}}) {
    StripePlan pl = StripePlan::make(p, M);
    mpz_class m0 = mpz_pow_ui(p, (M + 1) / 2);
    for (int t = 0; t < 6; ++t) {
      ModMatrix X = random_matrix(pl, 9, 12, rng);
      ModMatrix Y = random_matrix(pl, 12, 7, rng);
      auto ref = schoolbook(X, Y);
      REQUIRE(matrix_equals(mat_mul(X, Y), ref));
      REQUIRE(matrix_equals(mat_mul_striped(X, Y), ref));
      REQUIRE(matrix_equals(mat_mul_karatsuba(X, Y, m0), ref));
    }
  }
}

TEST_CASE("matvec agrees across plane layouts", "[linalg]") {
  // same modulus, one-plane native vs multi-plane reference pipeline
  StripePlan nat = StripePlan::make(11, 8);
  StripePlan ref = StripePlan::make(11, 8, StripePlan::reference_capacity());
  REQUIRE(nat.limbs != ref.limbs);
  std::mt19937_64 rng(37);
  for (int t = 0; t < 8; ++t) {
    ModMatrix A(nat, 14, 14), A2(ref, 14, 14);
    for (int i = 0; i < 14; ++i)
      for (int j = 0; j < 14; ++j) {
        mpz_class v = mod_reduce(mpz_class((i64)(rng() >> 8)), nat.modulus);
        A.set(i, j, v);
        A2.set(i, j, v);
      }
    ModVec x(nat, 14), x2(ref, 14);
    for (int i = 0; i < 14; ++i) {
      mpz_class v = mod_reduce(mpz_class((i64)(rng() >> 8)), nat.modulus);
      x.set(i, v);
      x2.set(i, v);
    }
    ModVec y = matvec(A, x), y2 = matvec(A2, x2);
    for (int i = 0; i < 14; ++i) REQUIRE(y.get(i) == y2.get(i));
  }
}

TEST_CASE("unit-pivot echelon", "[linalg]") {
  StripePlan pl7 = StripePlan::make(7, 2);
  ModMatrix I(pl7, 3, 3);
  for (int i = 0; i < 3; ++i) I.set(i, i, 1);
  EchelonResult e = row_reduce_unit_pivots(I);
  REQUIRE(e.rank == 3);
  for (int c = 0; c < 3; ++c) REQUIRE(e.pivot_row_of_col[c] >= 0);

  // [[7,1],[0,7]] mod 49: 7 is not a unit, so only column 1 gets a pivot
  ModMatrix A(pl7, 2, 2);
  A.set(0, 0, 7); A.set(0, 1, 1); A.set(1, 1, 7);
  e = row_reduce_unit_pivots(A);
  REQUIRE(e.rank == 1);
  REQUIRE(e.pivot_row_of_col[0] == -1);
  REQUIRE(e.pivot_row_of_col[1] == 0);

  // transform * original == reduced, random 15x20 mod 13^3
  StripePlan pl13 = StripePlan::make(13, 3);
  std::mt19937_64 rng(41);
  for (int t = 0; t < 5; ++t) {
    ModMatrix X = random_matrix(pl13, 15, 20, rng);
    e = row_reduce_unit_pivots(X);
    REQUIRE(matrix_equals(e.reduced, schoolbook(e.transform, X)));
  }
}

TEST_CASE("particular solves", "[linalg]") {
  StripePlan pl = StripePlan::make(7, 4);
  std::mt19937_64 rng(43);

  // A = I: x = b
  ModMatrix I(pl, 4, 4);
  for (int i = 0; i < 4; ++i) I.set(i, i, 1);
  ModVec b(pl, 4), x;
  for (int i = 0; i < 4; ++i) b.set(i, i + 2);
  REQUIRE(solve_particular(I, b, x));
  for (int i = 0; i < 4; ++i) REQUIRE(x.get(i) == i + 2);

  // first-pivot rule: [[1,1]] b=[3] -> (3,0)
  StripePlan pl7 = StripePlan::make(7, 1);
  ModMatrix W(pl7, 1, 2);
  W.set(0, 0, 1); W.set(0, 1, 1);
  ModVec b1(pl7, 1);
  b1.set(0, 3);
  REQUIRE(solve_particular(W, b1, x));
  REQUIRE(x.get(0) == 3);
  REQUIRE(x.get(1) == 0);

  // residual check on consistent random systems mod 7^4
  int solved = 0;
  for (int t = 0; t < 100; ++t) {
    ModMatrix A = random_matrix(pl, 10, 14, rng);
    ModVec x0(pl, 14);
    for (int i = 0; i < 14; ++i)
      x0.set(i, mod_reduce(mpz_class((i64)(rng() >> 8)), pl.modulus));
    ModVec rhs = matvec(A, x0);
    if (!solve_particular(A, rhs, x)) continue;  // A not surjective mod 7
    ++solved;
    ModVec back = matvec(A, x);
    for (int i = 0; i < 10; ++i) REQUIRE(back.get(i) == rhs.get(i));
  }
  REQUIRE(solved >= 90);
}

TEST_CASE("division-free characteristic polynomial", "[linalg]") {
  StripePlan pl = StripePlan::make(7, 3);
  ModMatrix I(pl, 2, 2);
  I.set(0, 0, 1); I.set(1, 1, 1);
  auto d = charpoly_division_free(I);
  REQUIRE(d.size() == 3);
  REQUIRE(d[0] == 1);
  REQUIRE(d[1] == mod_reduce(mpz_class(-2), pl.modulus));
  REQUIRE(d[2] == 1);

  // companion matrix of T^2 + 3T + 5 reproduces its own polynomial
  ModMatrix C(pl, 2, 2);
  C.set(0, 1, mod_reduce(mpz_class(-5), pl.modulus));
  C.set(1, 0, 1);
  C.set(1, 1, mod_reduce(mpz_class(-3), pl.modulus));
  d = charpoly_division_free(C);
  REQUIRE(d[0] == 1);
  REQUIRE(d[1] == 3);
  REQUIRE(d[2] == 5);

  // cofactor oracle: expand det(lambda I - A) over all 24 permutations
  StripePlan pl11 = StripePlan::make(11, 3);
  std::mt19937_64 rng(47);
  for (int t = 0; t < 4; ++t) {
    ModMatrix A = random_matrix(pl11, 4, 4, rng);
    std::vector<std::vector<mpz_class>> entry(4, std::vector<mpz_class>(4));
    // entry polynomials in lambda: diagonal lambda - a_ii, else -a_ij
    int perm[4] = {0, 1, 2, 3};
    std::vector<mpz_class> det(5, 0);
    do {
      int inv = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) inv += perm[i] > perm[j];
      std::vector<mpz_class> prod{1};
      for (int i = 0; i < 4; ++i) {
        std::vector<mpz_class> lin;  // constant term first
        if (perm[i] == i)
          lin = {-A.get(i, i), 1};
        else
          lin = {-A.get(i, perm[i])};
        std::vector<mpz_class> nxt(prod.size() + lin.size() - 1, 0);
        for (size_t a = 0; a < prod.size(); ++a)
          for (size_t b = 0; b < lin.size(); ++b) nxt[a + b] += prod[a] * lin[b];
        prod = std::move(nxt);
      }
      for (size_t k = 0; k < prod.size(); ++k)
        det[k] += (inv % 2 ? -prod[k] : prod[k]);
    } while (std::next_permutation(perm, perm + 4));
    auto got = charpoly_division_free(A);  // d_i multiplies lambda^{n-i}
    for (int k = 0; k <= 4; ++k)
      REQUIRE(got[4 - k] == mod_reduce(det[k], pl11.modulus));
  }

  // block diagonal: charpoly is the product of the blocks' charpolys
  StripePlan pl74 = StripePlan::make(7, 4);
  ModMatrix B1 = random_matrix(pl74, 2, 2, rng);
  ModMatrix B2 = random_matrix(pl74, 3, 3, rng);
  ModMatrix D(pl74, 5, 5);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) D.set(i, j, B1.get(i, j));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) D.set(2 + i, 2 + j, B2.get(i, j));
  auto d1 = charpoly_division_free(B1);
  auto d2 = charpoly_division_free(B2);
  std::vector<mpz_class> prod(6, 0);
  for (size_t a = 0; a < d1.size(); ++a)
    for (size_t b = 0; b < d2.size(); ++b) prod[a + b] += d1[a] * d2[b];
  auto dd = charpoly_division_free(D);
  for (int k = 0; k < 6; ++k)
    REQUIRE(dd[k] == mod_reduce(prod[k], pl74.modulus));
}

TEST_CASE("linear recurrence evaluation", "[linalg]") {
  // k=0 is a single factor M(0) = B
  StripePlan pl = StripePlan::make(101, 1);
  ModMatrix A(pl, 1, 1), B(pl, 1, 1);
  A.set(0, 0, 2);
  B.set(0, 0, 3);
  ModVec w(pl, 1);
  w.set(0, 1);
  ModVec w0 = w;
  linrec_eval(A, B, 0, w0);
  REQUIRE(w0.get(0) == 3);

  // B(A+B)(2A+B) w = 3 * 5 * 7 = 105 = 4 mod 101
  ModVec w2 = w;
  linrec_eval(A, B, 2, w2);
  REQUIRE(w2.get(0) == 4);

  // explicit-product oracle: random 8x8, k <= 20, mod 7^4
  StripePlan pl7 = StripePlan::make(7, 4);
  std::mt19937_64 rng(53);
  for (int t = 0; t < 10; ++t) {
    ModMatrix X = random_matrix(pl7, 8, 8, rng);
    ModMatrix Y = random_matrix(pl7, 8, 8, rng);
    i64 k = (i64)(rng() % 21);
    ModVec v(pl7, 8);
    for (int i = 0; i < 8; ++i)
      v.set(i, mod_reduce(mpz_class((i64)(rng() >> 8)), pl7.modulus));
    // product M(0) M(1) ... M(k) assembled left to right with plain mpz
    std::vector<mpz_class> P((size_t)8 * 8, 0);
    for (int i = 0; i < 8; ++i) P[(size_t)i * 8 + i] = 1;
    for (i64 y = 0; y <= k; ++y) {
      ModMatrix M(pl7, 8, 8);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          M.set(i, j, X.get(i, j) * y + Y.get(i, j));
      std::vector<mpz_class> nxt((size_t)8 * 8, 0);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          mpz_class acc = 0;
          for (int l = 0; l < 8; ++l) acc += P[(size_t)i * 8 + l] * M.get(l, j);
          nxt[(size_t)i * 8 + j] = mod_reduce(acc, pl7.modulus);
        }
      P = std::move(nxt);
    }
    ModVec got = v;
    linrec_eval(X, Y, k, got);
    for (int i = 0; i < 8; ++i) {
      mpz_class acc = 0;
      for (int l = 0; l < 8; ++l) acc += P[(size_t)i * 8 + l] * v.get(l);
      REQUIRE(got.get(i) == mod_reduce(acc, pl7.modulus));
    }
  }

  // A = 0 degenerates to B^{k+1} w
  ModMatrix Z(pl7, 8, 8);
  ModMatrix Y = random_matrix(pl7, 8, 8, rng);
  ModVec v(pl7, 8);
  for (int i = 0; i < 8; ++i) v.set(i, i + 1);
  ModVec got = v;
  linrec_eval(Z, Y, 4, got);
  ModVec ref = v;
  for (int rep = 0; rep < 5; ++rep) ref = matvec(Y, ref);
  for (int i = 0; i < 8; ++i) REQUIRE(got.get(i) == ref.get(i));
}

TEST_CASE("matvec batch matches serial", "[linalg]") {
  StripePlan pl = StripePlan::make(7, 5);
  std::mt19937_64 rng(59);
  ModMatrix A = random_matrix(pl, 12, 12, rng);
  std::vector<ModVec> xs;
  for (int t = 0; t < 9; ++t) {
    ModVec x(pl, 12);
    for (int i = 0; i < 12; ++i)
      x.set(i, mod_reduce(mpz_class((i64)(rng() >> 8)), pl.modulus));
    xs.push_back(x);
  }
  auto par = matvec_batch(A, xs, 4);
  for (size_t t = 0; t < xs.size(); ++t) {
    ModVec ref = matvec(A, xs[t]);
    for (int i = 0; i < 12; ++i) REQUIRE(par[t].get(i) == ref.get(i));
  }
}
