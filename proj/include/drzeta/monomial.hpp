#pragma once

// exponent vectors and cached grevlex-ordered monomial tables

#include <algorithm>
#include <array>
#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace drz {

constexpr int kMaxVars = 6;

// exponent vector of a monomial in nv variables; entries may go negative
// transiently in move-legality arithmetic, so they are signed
struct Expo {
  std::array<int, kMaxVars> e{};
  int nv = 0;

  explicit Expo(int nvars = 0) : nv(nvars) { e.fill(0); }
  Expo(std::initializer_list<int> xs) : nv((int)xs.size()) {
    e.fill(0);
    int i = 0;
    for (int x : xs) e[i++] = x;
  }

  int& operator[](int i) { return e[i]; }
  int operator[](int i) const { return e[i]; }

  int total() const {
    int s = 0;
    for (int i = 0; i < nv; ++i) s += e[i];
    return s;
  }
  bool nonneg() const {
    for (int i = 0; i < nv; ++i)
      if (e[i] < 0) return false;
    return true;
  }
  bool operator==(const Expo& o) const { return nv == o.nv && e == o.e; }

  Expo operator+(const Expo& o) const {
    Expo r = *this;
    for (int i = 0; i < nv; ++i) r.e[i] += o.e[i];
    return r;
  }
  Expo operator-(const Expo& o) const {
    Expo r = *this;
    for (int i = 0; i < nv; ++i) r.e[i] -= o.e[i];
    return r;
  }
  Expo scaled(int k) const {
    Expo r = *this;
    for (int i = 0; i < nv; ++i) r.e[i] *= k;
    return r;
  }

  static Expo ones(int nv) {
    Expo r(nv);
    for (int i = 0; i < nv; ++i) r.e[i] = 1;
    return r;
  }
  static Expo unit(int nv, int i) {
    Expo r(nv);
    r.e[i] = 1;
    return r;
  }

  // packed key; exponents must stay below 1024
  u64 key() const {
    u64 k = 0;
    for (int i = 0; i < nv; ++i) {
      DRZ_REQUIRE(e[i] >= 0 && e[i] < 1024, "Expo::key exponent out of range");
      k = (k << 10) | (u64)e[i];
    }
    return k;
  }
};

// grevlex descending: a > b iff the last nonzero entry of a-b is negative
inline bool grevlex_less(const Expo& a, const Expo& b) {
  int ta = a.total(), tb = b.total();
  if (ta != tb) return ta < tb;
  for (int i = a.nv - 1; i >= 0; --i) {
    int d = a.e[i] - b.e[i];
    if (d != 0) return d > 0;  // last nonzero positive => a smaller
  }
  return false;
}

struct MonoTable {
  int nv = 0, deg = 0;
  std::vector<Expo> mons;               // grevlex descending
  std::unordered_map<u64, int> index;   // packed key -> position in mons

  int rank(const Expo& x) const {
    auto it = index.find(x.key());
    DRZ_REQUIRE(it != index.end(), "MonoTable::rank: monomial not in table");
    return it->second;
  }
  int rank_or_neg(const Expo& x) const {
    auto it = index.find(x.key());
    return it == index.end() ? -1 : it->second;
  }
  int size() const { return (int)mons.size(); }
};

namespace detail {
inline void enumerate_rec(int nv, int pos, int left, Expo& cur,
                          std::vector<Expo>& out) {
  if (pos == nv - 1) {
    cur.e[pos] = left;
    out.push_back(cur);
    return;
  }
  for (int v = left; v >= 0; --v) {
    cur.e[pos] = v;
    enumerate_rec(nv, pos + 1, left - v, cur, out);
  }
  cur.e[pos] = 0;
}
}  // namespace detail

// cached table of all degree-`deg` monomials in `nv` variables
inline const MonoTable& mono_table(int nv, int deg) {
  static std::mutex mu;
  static std::unordered_map<u64, MonoTable> cache;
  std::scoped_lock lk(mu);
  u64 k = ((u64)nv << 32) | (u64)(u32)deg;
  auto it = cache.find(k);
  if (it != cache.end()) return it->second;

  DRZ_REQUIRE(nv >= 1 && nv <= kMaxVars, "mono_table: unsupported nv");
  MonoTable t;
  t.nv = nv;
  t.deg = deg;
  Expo cur(nv);
  // negative degree denotes the empty graded piece
  if (deg >= 0) detail::enumerate_rec(nv, 0, deg, cur, t.mons);
  std::sort(t.mons.begin(), t.mons.end(),
            [](const Expo& a, const Expo& b) { return grevlex_less(b, a); });
  t.index.reserve(t.mons.size() * 2);
  for (int i = 0; i < (int)t.mons.size(); ++i) t.index.emplace(t.mons[i].key(), i);
  return cache.emplace(k, std::move(t)).first->second;
}

// number of degree-`deg` monomials in `nv` variables, as a size check
inline i64 mono_count(int nv, int deg) {
  if (deg < 0) return 0;
  // C(deg + nv - 1, nv - 1)
  i64 r = 1;
  for (int i = 1; i <= nv - 1; ++i) r = r * (deg + i) / i;
  return r;
}

}  // namespace drz
