#pragma once

// controlled reduction proper: game states x^u w Omega / (x^1 f^P), legal
// moves (v, k), the affine pole-lowering operators R_{u,v} built from cached
// unit-echelon solves, chunked evaluation through the recurrence kernel, and
// the three reduction policies

#include <algorithm>
#include <map>
#include <memory>
#include <unordered_map>

#include "frobenius.hpp"

namespace drz {

// remove `amount` units, repeatedly decrementing the first positive entry
inline Expo tweak(const Expo& I, int amount) {
  Expo r = I;
  i64 left = amount;
  if (left > (i64)I.total()) return r;
  while (left > 0) {
    for (int i = 0; i < r.nv && left > 0; ++i) {
      if (r[i] > 0) {
        --r[i];
        --left;
        break;
      }
    }
  }
  return r;
}

// default S: all variables when d can cover them, else the last d of them
inline std::set<int> default_S(int n, int d) {
  std::set<int> S;
  int nv = n + 1;
  int from = d >= nv ? 0 : nv - d;
  for (int i = from; i < nv; ++i) S.insert(i);
  return S;
}

// move legality against the working set S:
//   |v| = d, u - kv >= 0, v_i = 0 => u_i = 0 for i in S,
//   u_i - k v_i >= 1 for i outside S
inline bool legal(int d, const Expo& u, const Expo& v, i64 k,
                  const std::set<int>& S) {
  if (v.total() != d || k < 0) return false;
  for (int i = 0; i < u.nv; ++i) {
    bool inS = S.count(i) > 0;
    if (inS && v[i] == 0 && u[i] != 0) return false;
    i64 left = (i64)u[i] - k * v[i];
    if (left < (inS ? 0 : 1)) return false;
  }
  return true;
}

// largest k with legal(u, v, k, S); assumes the v_i = 0 conditions hold
inline i64 k_max_legal(const Expo& u, const Expo& v, const std::set<int>& S) {
  i64 k = std::numeric_limits<i64>::max();
  for (int i = 0; i < u.nv; ++i) {
    if (v[i] == 0) continue;
    i64 room = S.count(i) ? (i64)u[i] : (i64)u[i] - 1;
    k = std::min(k, room / v[i]);
  }
  return k == std::numeric_limits<i64>::max() ? 0 : std::max<i64>(k, 0);
}

// greedy move vector: one unit on each S-variable still in play, then
// round-robin increments v_m while v_m < u_m until d units are placed
inline Expo choose_v_greedy(int d, const Expo& u, const std::set<int>& S) {
  Expo v(u.nv);
  int placed = 0;
  for (int s : S)
    if (u[s] != 0 && placed < d) {
      v[s] = 1;
      ++placed;
    }
  int m = 0, idle = 0;
  while (placed < d && idle < u.nv) {
    if (v[m] < u[m]) {
      ++v[m];
      ++placed;
      idle = 0;
    } else {
      ++idle;
    }
    m = (m + 1) % u.nv;
  }
  return v;
}

// shift v away from coordinates outside S_ctx that it would pin to zero
// progress (v_i = u_i forces k = 0 there); donates to the first coordinate
// with room
inline void repair_v(const Expo& u, Expo& v, const std::set<int>& S_ctx) {
  for (int i = 0; i < u.nv; ++i) {
    if (S_ctx.count(i) || v[i] < u[i]) continue;
    while (v[i] > 0 && v[i] >= u[i]) {
      int j = -1;
      for (int c = 0; c < u.nv && j < 0; ++c) {
        if (c == i) continue;
        i64 cap = S_ctx.count(c) ? u[c] : (i64)u[c] - 1;
        if (v[c] < cap) j = c;
      }
      if (j < 0) return;
      --v[i];
      ++v[j];
    }
  }
}

struct GameState {
  Expo u;
  int pole = 0;
  ModVec w;  // coefficients over mono_table(nv, dn - n), scale kappa implied
};

struct CostLedger {
  i64 matvecs = 0;
  i64 startups = 0;
  i64 combines = 0;
};

// the n+2 constant matrices of the affine operator family
//   R_{x,v} = sum_i x_i A_i + A_{n+1}
// acting on numerator coefficients; dc columns where x^S does not divide
// x^v g are identically zero
struct PepEntry {
  std::vector<ModMatrix> mats;
  // per matrix, per column: (row, coeff) with coeff already digitized would
  // tie us to one plan; mpz keeps the entry reusable for both chunk paths
  std::vector<std::vector<std::vector<std::pair<int, mpz_class>>>> csc;
  i64 nnz = 0;
};

struct PepStats {
  i64 hits = 0, misses = 0, evictions = 0;
};

// cache interface over build_ruv keyed by the move vector v; entries are
// shared so an eviction cannot invalidate a chunk in flight
struct PepStoreBase {
  virtual ~PepStoreBase() = default;
  virtual std::shared_ptr<const PepEntry> get(const Expo& v) = 0;
  virtual PepStats stats() const = 0;
};

// shared context for one (f, S, modulus) reduction run
class RuvContext {
 public:
  Hypersurface X;
  StripePlan plan;
  ModulusContext ctx;
  std::set<int> S;
  int side = 0;          // dim of the numerator coefficient space
  const MonoTable* side_tab = nullptr;

  RuvContext(const Hypersurface& hs, const StripePlan& pl,
             const std::set<int>& Sset)
      : X(hs), plan(pl), ctx{pl.p, pl.M, pl.modulus}, S(Sset) {
    int nv = X.nv();
    int D = X.d * X.n - X.n;
    side_tab = &mono_table(nv, D);
    side = side_tab->size();
    int Ssz = (int)S.size();
    L_ = X.d + D - Ssz;
    sexp_ = Expo(nv);
    for (int i : S) sexp_[i] = 1;
    const MonoTable& rows = mono_table(nv, L_);
    // generator columns: i ascending; deg mu is one higher inside S
    int cols = 0;
    for (int i = 0; i < nv; ++i) {
      int mdeg = D - Ssz + (S.count(i) ? 1 : 0);
      gen_mu_deg_.push_back(mdeg);
      gen_off_.push_back(cols);
      cols += (int)mono_table(nv, mdeg).size();
    }
    gen_off_.push_back(cols);
    if (plan.limbs == 1) {
      WordRing ring{mpz_get_ui(plan.modulus.get_mpz_t()), plan.p};
      std::vector<u64> data((size_t)rows.size() * cols, 0);
      fill_solve_matrix(rows, cols, [&](int r, int c, const mpz_class& val) {
        data[(size_t)r * cols + c] = ring.from_mpz(val);
      });
      wech_.emplace(ring, rows.size(), cols, std::move(data));
    } else {
      MpzRing ring{plan.modulus, plan.p};
      std::vector<mpz_class> data((size_t)rows.size() * cols, 0);
      fill_solve_matrix(rows, cols, [&](int r, int c, const mpz_class& val) {
        data[(size_t)r * cols + c] = mod_reduce(val, plan.modulus);
      });
      mech_.emplace(ring, rows.size(), cols, std::move(data));
    }
  }

  // solution of  x^v g / x^S = sum_{i in S} g_i d_i f + sum_{i not in S}
  // x_i g_i d_i f  for the side monomial of rank `gcol`; false when x^S
  // does not divide x^v g
  bool solve_column(const Expo& v, int gcol, std::vector<mpz_class>& sol) const {
    Expo rhs = v + side_tab->mons[gcol] - sexp_;
    if (!rhs.nonneg()) return false;
    int row = mono_table(X.nv(), L_).rank(rhs);
    if (wech_) {
      std::vector<u64> x;
      bool ok = wech_->solve_unit(row, x);
      DRZ_REQUIRE(ok, "RuvContext: solve failed; input not S-smooth enough");
      sol.assign(x.size(), 0);
      for (size_t i = 0; i < x.size(); ++i) sol[i] = x[i];
    } else {
      bool ok = mech_->solve_unit(row, sol);
      DRZ_REQUIRE(ok, "RuvContext: solve failed; input not S-smooth enough");
    }
    return true;
  }

  int gen_offset(int i) const { return gen_off_[i]; }
  int gen_mu_deg(int i) const { return gen_mu_deg_[i]; }
  const Expo& sexp() const { return sexp_; }
  int solve_deg() const { return L_; }

 private:
  template <class Sink>
  void fill_solve_matrix(const MonoTable& rows, int cols, Sink&& sink) {
    (void)cols;
    int nv = X.nv();
    for (int i = 0; i < nv; ++i) {
      HomogPoly gen = partial(X.f, i);
      if (!S.count(i)) gen = shift(gen, Expo::unit(nv, i));
      const MonoTable& mus = mono_table(nv, gen_mu_deg_[i]);
      for (int mi = 0; mi < mus.size(); ++mi)
        for (const auto& [c, e] : gen.terms())
          sink(rows.rank(mus.mons[mi] + e), gen_off_[i] + mi, c);
    }
  }

  int L_ = 0;
  Expo sexp_;
  std::vector<int> gen_mu_deg_, gen_off_;
  std::optional<WordEchelon> wech_;
  std::optional<MpzEchelon> mech_;
};

// assemble the n+2 operator matrices for one move vector v:
//   column g of A_i   = coeffs( (x^S / x_i) g_i )        for i in S
//                     = coeffs(  x^S       g_i )         for i not in S
//   column g of A_end = coeffs( sum_{i in S} x^S d_i g_i
//                             + sum_{i not in S} x^S x_i d_i g_i )
// realizing m x^{u+v} g / (x^1 f^{m+1}) == x^u R(g) / (x^1 f^m) for the
// game's x^1 denominator: off S the state exponent u_i runs one above the
// x^S-form exponent, which turns the (u_i + 1) coefficient there into u_i
// and moves the lone g_i term out of the constant matrix
inline PepEntry build_ruv(const RuvContext& C, const Expo& v) {
  int nv = C.X.nv();
  int nmat = nv + 1;
  PepEntry E;
  E.mats.reserve(nmat);
  for (int t = 0; t < nmat; ++t) E.mats.emplace_back(C.plan, C.side, C.side);
  E.csc.assign(nmat, std::vector<std::vector<std::pair<int, mpz_class>>>(
                         (size_t)C.side));
  const MonoTable& st = *C.side_tab;
  std::vector<mpz_class> sol;
  std::vector<std::map<int, mpz_class>> acc(nmat);
  for (int g = 0; g < C.side; ++g) {
    if (!C.solve_column(v, g, sol)) continue;
    for (auto& a : acc) a.clear();
    for (int i = 0; i < nv; ++i) {
      const MonoTable& mus = mono_table(nv, C.gen_mu_deg(i));
      bool inS = C.S.count(i) > 0;
      Expo shift_i = C.sexp();
      if (inS) shift_i[i] -= 1;
      for (int mi = 0; mi < mus.size(); ++mi) {
        const mpz_class& gc = sol[C.gen_offset(i) + mi];
        if (gc == 0) continue;
        const Expo& mu = mus.mons[mi];
        // A_i picks up x^{shift_i} mu
        acc[i][st.rank(mu + shift_i)] += gc;
        // constant matrix: x^S d_i mu for weighted i, mu_i x^S mu else
        if (mu[i] > 0) {
          if (inS)
            acc[nv][st.rank(mu - Expo::unit(nv, i) + C.sexp())] += gc * mu[i];
          else
            acc[nv][st.rank(mu + C.sexp())] += gc * mu[i];
        }
      }
    }
    for (int t = 0; t < nmat; ++t)
      for (auto& [row, val] : acc[t]) {
        mpz_class r = mod_reduce(val, C.ctx.modulus);
        if (r == 0) continue;
        E.mats[t].set(row, g, r);
        E.csc[t][g].emplace_back(row, r);
        ++E.nnz;
      }
  }
  return E;
}

// (A, B) with step matrix M(y) = A y + B equal to R at exponent x + y v
inline std::pair<ModMatrix, ModMatrix> eval_to_linear(const PepEntry& E,
                                                      const Expo& x,
                                                      const Expo& v,
                                                      const StripePlan& plan) {
  int nv = x.nv;
  ModMatrix A(plan, E.mats[0].rows, E.mats[0].cols);
  ModMatrix B(plan, E.mats[0].rows, E.mats[0].cols);
  if (plan.limbs == 1) {
    u64 mod = mpz_get_ui(plan.modulus.get_mpz_t());
    u64* a = A.plane(0);
    u64* b = B.plane(0);
    size_t nn = (size_t)A.rows * A.cols;
    const u64* last = E.mats[nv].plane(0);
    for (size_t e = 0; e < nn; ++e) b[e] = last[e];
    for (int i = 0; i < nv; ++i) {
      const u64* mi = E.mats[i].plane(0);
      u64 vi = (u64)v[i] % mod, xi = (u64)x[i] % mod;
      if (v[i])
        for (size_t e = 0; e < nn; ++e)
          if (mi[e]) a[e] = addmod_u64(a[e], mulmod_u64(mi[e], vi, mod), mod);
      if (x[i])
        for (size_t e = 0; e < nn; ++e)
          if (mi[e]) b[e] = addmod_u64(b[e], mulmod_u64(mi[e], xi, mod), mod);
    }
    return {std::move(A), std::move(B)};
  }
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) {
      mpz_class av = 0, bv = E.mats[nv].get(r, c);
      for (int i = 0; i < nv; ++i) {
        mpz_class m = E.mats[i].get(r, c);
        if (m == 0) continue;
        if (v[i]) av += m * v[i];
        if (x[i]) bv += m * x[i];
      }
      A.set(r, c, av);
      B.set(r, c, bv);
    }
  return {std::move(A), std::move(B)};
}

namespace detail {
// sparse analogue of eval_to_linear: merge the cached columns directly into
// the two step operands without touching a dense array
inline std::pair<SparseOp, SparseOp> sparse_eval(const PepEntry& E,
                                                 const StripePlan& plan,
                                                 const Expo& x, const Expo& v) {
  int nv = x.nv;
  int side = E.mats[0].rows;
  SparseOp A, B;
  A.rows = B.rows = A.cols = B.cols = side;
  A.limbs = B.limbs = plan.limbs;
  std::map<int, mpz_class> colA, colB;
  std::vector<i64> rowA(side, 0), rowB(side, 0);
  u64 tmp[64];
  for (int g = 0; g < side; ++g) {
    A.col_ptr.push_back(A.nnz);
    B.col_ptr.push_back(B.nnz);
    colA.clear();
    colB.clear();
    for (int i = 0; i <= nv; ++i) {
      for (auto& [row, val] : E.csc[i][g]) {
        if (i < nv && v[i]) colA[row] += val * v[i];
        if (i < nv && x[i]) colB[row] += val * x[i];
        if (i == nv) colB[row] += val;
      }
    }
    auto push = [&](SparseOp& S, std::map<int, mpz_class>& col,
                    std::vector<i64>& rn) {
      for (auto& [row, val] : col) {
        mpz_class r = mod_reduce(val, plan.modulus);
        if (r == 0) continue;
        S.row_idx.push_back(row);
        plan.digitize(r, tmp);
        for (int t = 0; t < plan.limbs; ++t) S.digs.push_back(tmp[t]);
        ++S.nnz;
        ++rn[row];
      }
    };
    push(A, colA, rowA);
    push(B, colB, rowB);
  }
  A.col_ptr.push_back(A.nnz);
  B.col_ptr.push_back(B.nnz);
  for (int i = 0; i < side; ++i) {
    A.max_row_nnz = std::max(A.max_row_nnz, rowA[i]);
    B.max_row_nnz = std::max(B.max_row_nnz, rowB[i]);
  }
  return {std::move(A), std::move(B)};
}
}  // namespace detail

// apply k moves along v: w <- M(0) M(1) ... M(k-1) w with M(y) = R at
// exponent u - kv + yv, so R_{u-v,v} acts first; then u <- u - kv
inline void reduce_chunk(const RuvContext& C, PepStoreBase& store,
                         GameState& st, const Expo& v, i64 k,
                         CostLedger& ledger) {
  DRZ_REQUIRE(k >= 1, "reduce_chunk: empty chunk");
  DRZ_REQUIRE(legal(C.X.d, st.u, v, k, C.S), "reduce_chunk: illegal move");
  DRZ_REQUIRE(st.pole - k >= C.X.n, "reduce_chunk: chunk passes the floor");
  std::shared_ptr<const PepEntry> ep = store.get(v);
  const PepEntry& E = *ep;
  Expo x = st.u - v.scaled((int)k);
  bool try_sparse =
      3 * E.nnz <= (i64)C.side * C.side &&
      (C.plan.limbs == 1 ||
       (C.plan.limbs == 2 && C.plan.beta <= (u64(1) << 56) && k <= 4096));
  bool done = false;
  if (try_sparse) {
    auto [A, B] = detail::sparse_eval(E, C.plan, x, v);
    i64 worst = std::max(A.max_row_nnz, B.max_row_nnz) * C.plan.limbs;
    if (worst <= C.plan.stripe) {
      detail::sparse_steps(C.plan, A, B, k - 1, st.w, &ledger.matvecs);
      done = true;
    }
  }
  if (!done) {
    auto [A, B] = eval_to_linear(E, x, v, C.plan);
    linrec_eval(A, B, k - 1, st.w, &ledger.matvecs);
  }
  st.u = x;
  st.pole -= (int)k;
  ledger.startups += 1;
}

// merge states with identical (u, pole); first occurrence keeps its slot
inline void combine_states(std::vector<GameState>& states, CostLedger& ledger) {
  std::vector<GameState> out;
  std::unordered_map<u64, size_t> where;
  for (auto& st : states) {
    u64 key = st.u.key() * 1315423911ull ^ (u64)st.pole;
    auto it = where.find(key);
    if (it == where.end()) {
      where.emplace(key, out.size());
      out.push_back(std::move(st));
      continue;
    }
    GameState& dst = out[it->second];
    DRZ_REQUIRE(dst.u == st.u && dst.pole == st.pole, "combine: key collision");
    if (dst.w.plan.limbs == 1) {
      u64 mod = mpz_get_ui(dst.w.plan.modulus.get_mpz_t());
      u64* a = dst.w.plane(0);
      const u64* b = st.w.plane(0);
      for (int i = 0; i < dst.w.n; ++i) a[i] = addmod_u64(a[i], b[i], mod);
    } else {
      for (int i = 0; i < dst.w.n; ++i)
        dst.w.set(i, dst.w.get(i) + st.w.get(i));
    }
    ledger.combines += 1;
  }
  states = std::move(out);
}

enum class Policy { p_chunk, depth_first, var_by_var };

inline Policy policy_from_name(const std::string& s) {
  if (s == "p-chunk" || s == "pchunk") return Policy::p_chunk;
  if (s == "depth-first" || s == "depth") return Policy::depth_first;
  if (s == "var-by-var" || s == "varbyvar") return Policy::var_by_var;
  DRZ_REQUIRE(false, "unknown policy name");
  return Policy::p_chunk;
}

// drive every state to the pole floor n; returns the floor states
inline std::vector<GameState> run_policy(const RuvContext& C,
                                         PepStoreBase& store,
                                         std::vector<GameState> states,
                                         Policy policy, CostLedger& ledger) {
  int n = C.X.n, d = C.X.d;
  i64 p = (i64)C.X.p;
  auto active = [&](const GameState& st) { return st.pole > n; };

  if (policy == Policy::depth_first) {
    for (auto& st : states) {
      while (active(st)) {
        Expo v = choose_v_greedy(d, st.u, C.S);
        repair_v(st.u, v, C.S);
        i64 k = std::min(k_max_legal(st.u, v, C.S), (i64)st.pole - n);
        DRZ_REQUIRE(k >= 1, "depth-first: no admissible move");
        reduce_chunk(C, store, st, v, k, ledger);
      }
    }
    return states;
  }

  if (policy == Policy::p_chunk) {
    while (true) {
      i64 top = -1;
      for (auto& st : states)
        if (active(st)) top = std::max<i64>(top, st.u.total());
      if (top < 0) break;
      for (auto& st : states) {
        if (!active(st) || st.u.total() != top) continue;
        Expo v = choose_v_greedy(d, st.u, C.S);
        repair_v(st.u, v, C.S);
        i64 k_target = std::min(p, (i64)st.pole - n);
        i64 k = std::min(k_target, k_max_legal(st.u, v, C.S));
        DRZ_REQUIRE(k >= 1, "p-chunk: no admissible move");
        reduce_chunk(C, store, st, v, k, ledger);
      }
      // each sweep performs at least one reduction, so consecutive combines
      // cannot occur
      combine_states(states, ledger);
    }
    return states;
  }

  // var-by-var: stages t = n..0 over the working set {n}; u_t is driven to 0
  // for t in S and to 1 otherwise, with a combine between stages
  DRZ_REQUIRE(C.S.size() == 1 && C.S.count(n) == 1,
              "var-by-var: working set must be {n}");
  for (int t = n; t >= 0; --t) {
    int target = C.S.count(t) ? 0 : 1;
    bool more = true;
    while (more) {
      more = false;
      for (auto& st : states) {
        if (!active(st) || st.u[t] <= target) continue;
        std::set<int> stage{t};
        Expo v = choose_v_greedy(d, st.u, stage);
        repair_v(st.u, v, C.S);
        i64 k = std::min(k_max_legal(st.u, v, C.S), (i64)st.pole - n);
        if (v[t] > 0) k = std::min(k, ((i64)st.u[t] - target) / v[t]);
        DRZ_REQUIRE(k >= 1, "var-by-var: no admissible move");
        reduce_chunk(C, store, st, v, k, ledger);
        if (st.u[t] > target && active(st)) more = true;
      }
    }
    combine_states(states, ledger);
  }
  for (auto& st : states)
    DRZ_REQUIRE(!active(st), "var-by-var: states left above the floor");
  return states;
}

// seed: x^E Omega / f^P == x^u w Omega / (x^1 f^P) with u = tweak(E+1, dn-n)
// made honest for S (u_i >= 1 off S, donated from the largest entries), and
// w the single monomial x^{E+1-u} carrying dc * kappa_P
inline GameState seed_reduction_input(const RuvContext& C, const FrobTerm& t,
                                      const mpz_class& kappa_P) {
  int nv = C.X.nv();
  Expo full = t.exponent + Expo::ones(nv);
  int D = C.X.d * C.X.n - C.X.n;
  Expo u = tweak(full, D);
  for (int i = 0; i < nv; ++i) {
    if (C.S.count(i) || u[i] >= 1) continue;
    int j = -1;
    for (int c = 0; c < nv; ++c) {
      bool ok = C.S.count(c) ? u[c] >= 1 : u[c] >= 2;
      if (ok && (j < 0 || u[c] > u[j])) j = c;
    }
    DRZ_REQUIRE(j >= 0, "seed: cannot honor the working set");
    --u[j];
    ++u[i];
  }
  GameState st;
  st.u = u;
  st.pole = t.pole;
  st.w = ModVec(C.plan, C.side);
  Expo wmon = full - u;
  DRZ_REQUIRE(wmon.nonneg() && wmon.total() == D, "seed: bad split");
  st.w.set(C.side_tab->rank(wmon), mod_reduce(t.dc * kappa_P, C.ctx.modulus));
  return st;
}

// floor state to a pole-n numerator: g = x^{u-1} w, honest by construction
inline void floor_to_numerator(const RuvContext& C, const GameState& st,
                               std::vector<mpz_class>& g) {
  DRZ_REQUIRE(st.pole == C.X.n, "floor_to_numerator: not at the floor");
  int nv = C.X.nv();
  const MonoTable& tgt = mono_table(nv, C.X.d * C.X.n - C.X.n - 1);
  if (g.empty()) g.assign(tgt.size(), 0);
  Expo shift = st.u - Expo::ones(nv);
  for (int i = 0; i < C.side; ++i) {
    mpz_class cv = st.w.get(i);
    if (cv == 0) continue;
    Expo e = C.side_tab->mons[i] + shift;
    DRZ_REQUIRE(e.nonneg(), "floor_to_numerator: dishonest state");
    g[tgt.rank(e)] += cv;
  }
  for (auto& x : g) x = mod_reduce(x, C.ctx.modulus);
}

}  // namespace drz
