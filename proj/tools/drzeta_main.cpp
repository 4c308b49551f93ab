// command line front end: zeta / count / search / bench / precision

#include <CLI11.hpp>

#include <drzeta/io.hpp>

#include <random>

namespace {

using namespace drz;

struct CommonOpts {
  std::string policy = "p-chunk";
  std::string pep = "lazy";
  int threads = 1;
  std::vector<int> nm_override;
  int r_uniform = 0;
  i64 budget = 200'000'000;
  bool no_verify = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--policy", c.policy, "reduction policy: p-chunk | depth-first | var-by-var")
      ->capture_default_str();
  cmd->add_option("--pep", c.pep, "operator cache: eager | lazy | lru:N | lfuda:N")
      ->capture_default_str();
  cmd->add_option("--threads", c.threads, "column pipelines run in parallel")
      ->capture_default_str();
  cmd->add_option("--nm-override", c.nm_override,
                  "series order override: one value for all pole orders, or one per order");
  cmd->add_option("--r-uniform", c.r_uniform, "uniform relative precision override");
  cmd->add_option("--budget", c.budget, "point-enumeration budget (field elements)")
      ->capture_default_str();
  cmd->add_flag("--no-verify", c.no_verify, "skip the point-count verification");
}

ZetaOptions to_options(const CommonOpts& c) {
  ZetaOptions o;
  o.policy = policy_from_name(c.policy);
  o.pep = c.pep;
  o.overrides.N_m = c.nm_override;
  o.overrides.r_uniform = c.r_uniform;
  o.count_budget = c.budget;
  o.verify_counts = !c.no_verify;
  o.threads = std::max(1, c.threads);
  return o;
}

void emit(const json& j, const std::string& out_path, bool pretty) {
  std::string text = pretty ? j.dump(2) : j.dump();
  if (out_path.empty() || out_path == "-") {
    std::cout << text << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text << "\n";
  }
}

int cmd_zeta(const std::string& input, const CommonOpts& c,
             const std::string& out_path, bool pretty) {
  Hypersurface X = load_hypersurface(input);
  ZetaResult r = run_zeta(X, to_options(c));
  emit(result_to_json(X, r), out_path, pretty);
  return 0;
}

int cmd_count(const std::string& input, int r, i64 budget,
              const std::string& out_path, bool pretty) {
  Hypersurface X = load_hypersurface(input);
  i64 cnt = count_points(X.f, X.p, r, budget);
  json j{{"p", X.p}, {"n", X.n}, {"d", X.d}, {"r", r}, {"count", cnt}};
  emit(j, out_path, pretty);
  return 0;
}

int cmd_precision(u64 p, int n, int d, const CommonOpts& c,
                  const std::string& out_path, bool pretty) {
  PlanOverrides ov;
  ov.N_m = c.nm_override;
  ov.r_uniform = c.r_uniform;
  PrecisionPlan P = choose_precision(p, n, d, ov);
  json j{{"p", p}, {"n", n}, {"d", d}, {"b", P.b}};
  json rm = json::array(), nm = json::array(), sm = json::array();
  for (int m = 1; m <= n; ++m) {
    rm.push_back(P.r_m[m]);
    nm.push_back(P.N_m[m]);
    sm.push_back(P.s_m[m]);
  }
  j["A"] = P.A;
  j["r_m"] = rm;
  j["N_m"] = nm;
  j["s_m"] = sm;
  j["M"] = P.M;
  j["modulus"] = mpz_pow_ui(p, (unsigned long)P.M).get_str();
  auto kernel = [&](u128 cap) {
    StripePlan k = StripePlan::make(p, P.M, cap);
    return json{{"limbs", k.limbs},
                {"limb_exp", k.limb_exp},
                {"stripe", k.stripe},
                {"karatsuba", k.karatsuba}};
  };
  j["kernel"] = {{"native", kernel(StripePlan::native_capacity())},
                 {"reference53", kernel(StripePlan::reference_capacity())}};
  emit(j, out_path, pretty);
  return 0;
}

// deterministic uniform draw, independent of the standard library's
// distribution implementations
u64 draw(std::mt19937_64& rng, u64 bound) { return rng() % bound; }

HomogPoly random_dense(int nv, int d, u64 p, std::mt19937_64& rng) {
  const MonoTable& tab = mono_table(nv, d);
  std::vector<Term> terms;
  for (const Expo& e : tab.mons) {
    mpz_class c((unsigned long)draw(rng, p));
    if (c != 0) terms.push_back({c, e});
  }
  return HomogPoly::from_terms(nv, d, terms);
}

HomogPoly deform(const HomogPoly& base, int k, u64 p, std::mt19937_64& rng) {
  const MonoTable& tab = mono_table(base.nv, base.deg);
  HomogPoly f = base;
  for (int t = 0; t < k; ++t) {
    const Expo& e = tab.mons[draw(rng, (u64)tab.size())];
    mpz_class c(1 + (unsigned long)draw(rng, p - 1));
    f.add_scaled(HomogPoly::from_terms(base.nv, base.deg, {{c, e}}), 1);
  }
  f.reduce_mod(mpz_class(p));
  return f;
}

int cmd_search(u64 p, int n, int d, int count, u64 seed,
               const std::string& mode, const std::string& base_path, int add,
               bool skip_fsplit, const CommonOpts& c,
               const std::string& out_path) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    os = &file;
  }
  DRZ_REQUIRE(n >= 2 && n + 1 <= kMaxVars && p > (u64)n && d >= 2 &&
                  d % (int)p != 0,
              "search: family out of range (need 2 <= n <= 5, p > n, p not dividing d)");
  HomogPoly base;
  if (mode == "deform") {
    if (base_path.empty())
      throw std::runtime_error("search --mode deform needs --base");
    Hypersurface Xb = load_hypersurface(base_path);
    DRZ_REQUIRE(Xb.p == p && Xb.n == n && Xb.d == d,
                "search: base does not match the requested family");
    base = Xb.f;
  } else if (mode != "random") {
    throw std::runtime_error("search --mode must be random or deform");
  }
  std::mt19937_64 rng(seed);
  ZetaOptions opts = to_options(c);
  for (int idx = 0; idx < count; ++idx) {
    HomogPoly f = mode == "deform" ? deform(base, add, p, rng)
                                   : random_dense(n + 1, d, p, rng);
    json rec{{"index", idx}, {"seed", seed}, {"f", poly_to_text(f)}};
    try {
      Hypersurface X = Hypersurface::make(p, n, d, f);
      if (!check_smooth(X, full_set(X.nv()))) {
        rec["status"] = "singular";
        *os << rec.dump() << "\n" << std::flush;
        continue;
      }
      if (skip_fsplit && fedder_is_fsplit(X)) {
        rec["status"] = "fsplit_skipped";
        *os << rec.dump() << "\n" << std::flush;
        continue;
      }
      ZetaResult r = run_zeta(X, opts);
      rec["status"] = "ok";
      rec["result"] = result_to_json(X, r);
    } catch (const std::exception& ex) {
      rec["status"] = "error";
      rec["message"] = ex.what();
    }
    *os << rec.dump() << "\n" << std::flush;
  }
  return 0;
}

int cmd_bench(const std::vector<std::string>& inputs,
              const std::string& policies, const std::string& peps,
              const std::string& format, const CommonOpts& c,
              const std::string& out_path) {
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
      size_t comma = s.find(',', start);
      if (comma == std::string::npos) comma = s.size();
      if (comma > start) out.push_back(s.substr(start, comma - start));
      start = comma + 1;
    }
    return out;
  };
  std::vector<std::string> pol = split(policies), pp = split(peps);
  json rows = json::array();
  for (const auto& path : inputs) {
    Hypersurface X = load_hypersurface(path);
    std::vector<mpz_class> q_ref;
    for (const auto& pname : pol)
      for (const auto& pspec : pp) {
        CommonOpts cc = c;
        cc.policy = pname;
        cc.pep = pspec;
        ZetaOptions opts = to_options(cc);
        ZetaResult r = run_zeta(X, opts);
        if (q_ref.empty()) q_ref = r.Q;
        rows.push_back({{"input", path},
                        {"policy", pname},
                        {"pep", pspec},
                        {"wall", r.wall_seconds},
                        {"matvecs", r.cost.matvecs},
                        {"startups", r.cost.startups},
                        {"combines", r.cost.combines},
                        {"pep_hits", r.pep.hits},
                        {"pep_misses", r.pep.misses},
                        {"pep_evictions", r.pep.evictions},
                        {"q_agrees", r.Q == q_ref}});
      }
  }
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    os = &file;
  }
  if (format == "json") {
    *os << rows.dump(2) << "\n";
  } else {
    *os << "input,policy,pep,wall,matvecs,startups,combines,pep_hits,"
           "pep_misses,pep_evictions,q_agrees\n";
    for (const auto& r : rows)
      *os << r["input"].get<std::string>() << ","
          << r["policy"].get<std::string>() << ","
          << r["pep"].get<std::string>() << "," << r["wall"].get<double>()
          << "," << r["matvecs"].get<i64>() << "," << r["startups"].get<i64>()
          << "," << r["combines"].get<i64>() << "," << r["pep_hits"].get<i64>()
          << "," << r["pep_misses"].get<i64>() << ","
          << r["pep_evictions"].get<i64>() << ","
          << (r["q_agrees"].get<bool>() ? 1 : 0) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeta functions of smooth projective hypersurfaces over F_p"};
  app.require_subcommand(1);

  CommonOpts c;
  std::string input = "-", out_path, mode = "random", base_path;
  std::string policies = "p-chunk,depth-first,var-by-var", peps = "lazy";
  std::string format = "csv";
  std::vector<std::string> inputs;
  bool pretty = false;
  int r = 1, count = 10, add = 1;
  u64 p = 7, seed = 0;
  int n = 2, d = 3;

  auto* zc = app.add_subcommand("zeta", "compute Z(X, T) and its invariants");
  zc->add_option("input", input, "input JSON file, or - for stdin");
  add_common(zc, c);
  zc->add_option("--out", out_path, "output path (default stdout)");
  zc->add_flag("--pretty", pretty, "indent the JSON output");

  auto* cc = app.add_subcommand("count", "brute-force point count over F_{p^r}");
  cc->add_option("input", input, "input JSON file, or - for stdin");
  cc->add_option("--r", r, "extension degree")->capture_default_str();
  cc->add_option("--budget", c.budget, "enumeration budget")->capture_default_str();
  cc->add_option("--out", out_path, "output path (default stdout)");
  cc->add_flag("--pretty", pretty, "indent the JSON output");

  auto* pc = app.add_subcommand("precision", "print the precision plan for (p, n, d)");
  pc->add_option("p", p, "field characteristic")->required();
  pc->add_option("n", n, "ambient projective dimension")->required();
  pc->add_option("d", d, "hypersurface degree")->required();
  pc->add_option("--nm-override", c.nm_override, "series order override");
  pc->add_option("--r-uniform", c.r_uniform, "relative precision override");
  pc->add_option("--out", out_path, "output path (default stdout)");
  pc->add_flag("--pretty", pretty, "indent the JSON output");

  auto* sc = app.add_subcommand("search", "stream zeta records for random hypersurfaces");
  sc->add_option("--p", p, "field characteristic")->required();
  sc->add_option("--n", n, "ambient projective dimension")->required();
  sc->add_option("--d", d, "hypersurface degree")->required();
  sc->add_option("--count", count, "candidates to generate")->capture_default_str();
  sc->add_option("--seed", seed, "RNG seed")->capture_default_str();
  sc->add_option("--mode", mode, "random | deform")->capture_default_str();
  sc->add_option("--base", base_path, "base input for deform mode");
  sc->add_option("--add", add, "monomials added per deform candidate")
      ->capture_default_str();
  bool skip_fsplit = false;
  sc->add_flag("--skip-fsplit", skip_fsplit, "skip F-split candidates (Fedder prefilter)");
  add_common(sc, c);
  sc->add_option("--out", out_path, "output path (default stdout)");

  auto* bc = app.add_subcommand("bench", "cost matrix across policies and caches");
  bc->add_option("input", inputs, "input JSON files")->required();
  bc->add_option("--policies", policies, "comma-separated policy list")
      ->capture_default_str();
  bc->add_option("--peps", peps, "comma-separated cache list")->capture_default_str();
  bc->add_option("--format", format, "csv | json")->capture_default_str();
  add_common(bc, c);
  bc->add_option("--out", out_path, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (zc->parsed()) return cmd_zeta(input, c, out_path, pretty);
    if (cc->parsed()) return cmd_count(input, r, c.budget, out_path, pretty);
    if (pc->parsed()) return cmd_precision(p, n, d, c, out_path, pretty);
    if (sc->parsed())
      return cmd_search(p, n, d, count, seed, mode, base_path, add,
                        skip_fsplit, c, out_path);
    if (bc->parsed())
      return cmd_bench(inputs, policies, peps, format, c, out_path);
  } catch (const drz::singular_input& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const drz::escalation_exhausted& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
