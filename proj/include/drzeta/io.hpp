#pragma once

// input parsing (JSON spec blocks and a plain text polynomial grammar) and
// the JSON result document

#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "zeta.hpp"

namespace drz {

using json = nlohmann::ordered_json;

// grammar: poly := term (('+'|'-') term)*
//          term := factor ('*' factor)*
//          factor := integer | 'x' index ('^' exponent)?
inline HomogPoly parse_poly_text(const std::string& text, int nv, int deg) {
  std::vector<Term> terms;
  size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace((unsigned char)text[i])) ++i;
  };
  auto read_int = [&]() -> std::string {
    size_t s = i;
    while (i < text.size() && std::isdigit((unsigned char)text[i])) ++i;
    if (s == i) throw std::runtime_error("polynomial parse: digit expected at offset " +
                                         std::to_string(i));
    return text.substr(s, i - s);
  };
  skip_ws();
  bool first = true;
  while (i < text.size()) {
    int sign = 1;
    if (!first || text[i] == '+' || text[i] == '-') {
      if (i >= text.size() || (text[i] != '+' && text[i] != '-'))
        throw std::runtime_error("polynomial parse: '+' or '-' expected at offset " +
                                 std::to_string(i));
      sign = text[i] == '-' ? -1 : 1;
      ++i;
      skip_ws();
    }
    first = false;
    mpz_class c = sign;
    Expo e(nv);
    bool more = true;
    while (more) {
      skip_ws();
      if (i < text.size() && std::isdigit((unsigned char)text[i])) {
        c *= mpz_class(read_int());
      } else if (i < text.size() && text[i] == 'x') {
        ++i;
        int vi = std::stoi(read_int());
        if (vi < 0 || vi >= nv)
          throw std::runtime_error("polynomial parse: variable x" +
                                   std::to_string(vi) + " out of range");
        int ex = 1;
        if (i < text.size() && text[i] == '^') {
          ++i;
          ex = std::stoi(read_int());
        }
        e[vi] += ex;
      } else {
        throw std::runtime_error("polynomial parse: factor expected at offset " +
                                 std::to_string(i));
      }
      skip_ws();
      more = i < text.size() && text[i] == '*';
      if (more) ++i;
    }
    if (e.total() != deg)
      throw std::runtime_error("polynomial parse: term degree " +
                               std::to_string(e.total()) + " != " +
                               std::to_string(deg));
    terms.push_back({c, e});
    skip_ws();
  }
  return HomogPoly::from_terms(nv, deg, terms);
}

inline std::string poly_to_text(const HomogPoly& f) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [c, e] : f.terms()) {
    mpz_class a = c;
    if (first) {
      if (a < 0) {
        os << "-";
        a = -a;
      }
    } else {
      os << (a < 0 ? " - " : " + ");
      if (a < 0) a = -a;
    }
    first = false;
    bool coeff_shown = a != 1 || e.total() == 0;
    if (coeff_shown) os << a.get_str();
    bool any = false;
    for (int i = 0; i < f.nv; ++i) {
      if (e[i] == 0) continue;
      if (coeff_shown || any) os << "*";
      any = true;
      os << "x" << i;
      if (e[i] > 1) os << "^" << e[i];
    }
  }
  if (first) os << "0";
  return os.str();
}

inline Hypersurface hypersurface_from_json(const json& j) {
  u64 p = j.at("p").get<u64>();
  int n = j.at("n").get<int>();
  int d = j.at("d").get<int>();
  int nv = n + 1;
  HomogPoly f;
  if (j.contains("terms")) {
    std::vector<Term> terms;
    for (const auto& t : j.at("terms")) {
      mpz_class c;
      if (t.at("c").is_string())
        c = mpz_class(t.at("c").get<std::string>());
      else
        c = (long)t.at("c").get<i64>();
      Expo e(nv);
      const auto& ev = t.at("e");
      if ((int)ev.size() != nv)
        throw std::runtime_error("input: exponent vector length != n+1");
      for (int i = 0; i < nv; ++i) e[i] = ev.at(i).get<int>();
      if (e.total() != d)
        throw std::runtime_error("input: term degree != d");
      terms.push_back({c, e});
    }
    f = HomogPoly::from_terms(nv, d, terms);
  } else if (j.contains("f")) {
    f = parse_poly_text(j.at("f").get<std::string>(), nv, d);
  } else {
    throw std::runtime_error("input: need \"terms\" or \"f\"");
  }
  return Hypersurface::make(p, n, d, std::move(f));
}

inline Hypersurface load_hypersurface(const std::string& path) {
  json j;
  if (path == "-") {
    std::cin >> j;
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    in >> j;
  }
  return hypersurface_from_json(j);
}

inline json mpz_vec_json(const std::vector<mpz_class>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x.get_str());
  return a;
}

inline json result_to_json(const Hypersurface& X, const ZetaResult& r) {
  json j;
  j["p"] = X.p;
  j["n"] = X.n;
  j["d"] = X.d;
  j["f"] = poly_to_text(X.f);
  j["Q"] = mpz_vec_json(r.Q);
  // functional equation sign: a_b = sign * p^{(n-1)b/2}
  i64 b = (i64)r.Q.size() - 1;
  mpz_class pw = mpz_pow_ui(X.p, (unsigned long)((X.n - 1) * b / 2));
  j["sign"] = r.Q[b] == pw ? 1 : (r.Q[b] == -pw ? -1 : 0);
  if (r.ambiguous) {
    j["ambiguous"] = true;
    j["Q_alt"] = mpz_vec_json(r.Q_alt);
  }
  j["zeta"] = {{"num", mpz_vec_json(r.num)},
               {"den", mpz_vec_json(r.den)},
               {"q_in_numerator", r.q_in_numerator}};
  json nv = json::array();
  for (auto [x, y] : r.np.vertices) nv.push_back({x, y});
  j["newton"] = nv;
  json sl = json::array();
  for (const auto& [s, mult] : r.np.slopes)
    sl.push_back({{"slope", mpq_str(s)}, {"mult", mult}});
  j["slopes"] = sl;
  json hj = json::array();
  for (int m = 1; m <= X.n; ++m) hj.push_back(r.hodge[m]);
  j["hodge"] = hj;
  json inv;
  inv["p_rank"] = r.inv.p_rank;
  if (!r.inv.height.empty()) {
    inv["am_height"] = r.inv.height;
    inv["domino"] = r.inv.domino;
  }
  if (!r.inv.newton_height.empty()) inv["newton_height"] = r.inv.newton_height;
  if (r.inv.fsplit_defined) inv["fsplit"] = r.inv.fsplit;
  j["invariants"] = inv;
  json cc = json::object();
  for (const auto& c : r.counts)
    cc[std::to_string(c.r)] = {{"predicted", c.from_zeta.get_str()},
                               {"actual", c.from_oracle.get_str()},
                               {"ok", c.ok}};
  j["counts_check"] = cc;
  j["cost"] = {{"matvecs", r.cost.matvecs},
               {"startups", r.cost.startups},
               {"combines", r.cost.combines}};
  json nm = json::array(), rm = json::array(), sm = json::array();
  for (int m = 1; m <= X.n; ++m) {
    nm.push_back(r.plan.N_m[m]);
    rm.push_back(r.plan.r_m[m]);
    sm.push_back(r.plan.s_m[m]);
  }
  j["precision"] = {{"A", r.plan.A},       {"M", r.plan.M},
                    {"N_m", nm},           {"r_m", rm},
                    {"s_m", sm},           {"escalations", r.plan.escalations}};
  j["pep"] = {{"hits", r.pep.hits},
              {"misses", r.pep.misses},
              {"evictions", r.pep.evictions}};
  j["wall_time"] = r.wall_seconds;
  return j;
}

}  // namespace drz
