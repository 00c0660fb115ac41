// Audit front end.  Every subcommand prints one JSON report to stdout and a
// short human summary to stderr.  Exit codes: 0 all assertions pass, 1 an
// assertion failed, 2 usage or capacity error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mrf/audit.hpp"
#include "mrf/coupling.hpp"

using json = nlohmann::json;
using namespace mrf;

namespace {

struct Common {
  int dim = 2;
  double beta = 0.0;
  double h = 0.0;
  int J = 1;
  std::string boundary = "free";
  int box_sites = 9;
  std::uint64_t seed = 1;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  ModelParams params() const { return ModelParams{dim, beta, h, J}; }
  Boundary bc() const { return boundary_from_name(boundary); }
};

std::string g_config_path;

void add_model_flags(CLI::App* cmd, Common& c) {
  cmd->set_help_flag("--help", "print this help message and exit");
  cmd->add_option("--dim", c.dim, "lattice dimension");
  cmd->add_option("--beta", c.beta, "inverse temperature");
  cmd->add_option("--h", c.h, "external field (>= 0)");
  cmd->add_option("--J", c.J, "coupling sign, +1 or -1");
  cmd->add_option("--boundary", c.boundary, "free|plus|minus");
  cmd->add_option("--box-sites", c.box_sites, "number of sites in the box");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--threads", c.threads, "worker pool size");
  cmd->add_option("--config", g_config_path, "key=value config file; flags override");
}

// Applies config-file values to every model field whose flag was not given
// on the command line.
void apply_config(const CLI::App* cmd, Common& c) {
  if (g_config_path.empty()) return;
  std::ifstream in(g_config_path);
  if (!in) throw std::invalid_argument("config: cannot open " + g_config_path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto overridden = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (key == "dim" && !overridden("--dim")) c.dim = std::stoi(val);
    else if (key == "beta" && !overridden("--beta")) c.beta = std::stod(val);
    else if (key == "h" && !overridden("--h")) c.h = std::stod(val);
    else if (key == "J" && !overridden("--J")) c.J = std::stoi(val);
    else if (key == "boundary" && !overridden("--boundary")) c.boundary = val;
    else if ((key == "box_sites" || key == "box-sites") && !overridden("--box-sites"))
      c.box_sites = std::stoi(val);
    else if (key == "seed" && !overridden("--seed")) c.seed = std::stoull(val);
    else if (key == "threads" && !overridden("--threads"))
      c.threads = static_cast<unsigned>(std::stoul(val));
    else if (key != "dim" && key != "beta" && key != "h" && key != "J" && key != "boundary" &&
             key != "box_sites" && key != "box-sites" && key != "seed" && key != "threads")
      throw std::invalid_argument("config: unknown key " + key);
  }
}

json config_json(const Common& c) {
  return json{{"dim", c.dim},       {"beta", c.beta},           {"h", c.h},
              {"J", c.J},           {"boundary", c.boundary},   {"box_sites", c.box_sites},
              {"seed", c.seed},     {"threads", c.threads}};
}

json assertion_json(const Assertion& a) {
  return json{{"name", a.name}, {"lhs", a.lhs}, {"rhs", a.rhs}, {"margin", a.margin},
              {"pass", a.pass}};
}

json certificate_json(const PoincareCertificate& cert) {
  json j{{"regime", regime_name(cert.regime)},
         {"p", cert.p},
         {"c", cert.c},
         {"c_prime", cert.c_prime},
         {"x", cert.x},
         {"delta", cert.delta},
         {"c_p", std::isfinite(cert.c_p) ? json(cert.c_p) : json("inf")},
         {"gap_lower_bound", cert.gap_lower_bound}};
  j["moment"] = {{"value", cert.moment.value},
                 {"se", cert.moment.std_error},
                 {"tail_bound", std::isfinite(cert.moment.tail_bound)
                                    ? json(cert.moment.tail_bound)
                                    : json("inf")},
                 {"envelope", std::isfinite(cert.moment.upper_envelope())
                                  ? json(cert.moment.upper_envelope())
                                  : json("inf")}};
  return j;
}

int emit(const std::string& command, const Common& c, json results,
         const std::vector<Assertion>& assertions,
         std::chrono::steady_clock::time_point t0) {
  json report;
  report["schema"] = 1;
  report["command"] = command;
  report["config"] = config_json(c);
  report["results"] = std::move(results);
  report["assertions"] = json::array();
  for (const Assertion& a : assertions) report["assertions"].push_back(assertion_json(a));
  report["wall_time"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << report.dump(2) << "\n";

  int failed = 0;
  for (const Assertion& a : assertions) {
    if (!a.pass) ++failed;
    std::cerr << (a.pass ? "  ok   " : "  FAIL ") << a.name << "  (lhs=" << a.lhs
              << ", rhs=" << a.rhs << ", margin=" << a.margin << ")\n";
  }
  std::cerr << command << ": " << assertions.size() - failed << "/" << assertions.size()
            << " assertions passed\n";
  return failed == 0 ? 0 : 1;
}

std::shared_ptr<const Enumeration> make_box(const Common& c) {
  return std::make_shared<Enumeration>(Enumeration::box(c.dim, c.box_sites));
}

// spin(x) | corr(x,y) | runcount(k,axis,n) | random(seed,degree)
Functional parse_functional(const std::string& expr, const Enumeration& e) {
  const auto open = expr.find('(');
  if (open == std::string::npos || expr.back() != ')')
    throw std::invalid_argument("functional: expected name(args): " + expr);
  const std::string name = expr.substr(0, open);
  std::vector<long> args;
  std::string body = expr.substr(open + 1, expr.size() - open - 2);
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t next = body.find(',', pos);
    if (next == std::string::npos) next = body.size();
    args.push_back(std::stol(body.substr(pos, next - pos)));
    pos = next + 1;
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      throw std::invalid_argument("functional: " + name + " takes " + std::to_string(n) +
                                  " arguments");
  };
  if (name == "spin") {
    want(1);
    const int x = static_cast<int>(args[0]);
    if (x < 1 || x > e.size()) throw std::invalid_argument("functional: spin rank out of range");
    return {[x](const SpinConfig& s) { return static_cast<double>(s.spin(x)); },
            std::vector<int>{x}};
  }
  if (name == "corr") {
    want(2);
    const int x = static_cast<int>(args[0]), y = static_cast<int>(args[1]);
    if (x < 1 || x > e.size() || y < 1 || y > e.size())
      throw std::invalid_argument("functional: corr rank out of range");
    return {[x, y](const SpinConfig& s) { return static_cast<double>(s.spin(x) * s.spin(y)); },
            std::vector<int>{x, y}};
  }
  if (name == "runcount") {
    want(3);
    return run_count(RunCountSpec{static_cast<int>(args[0]), static_cast<int>(args[1]),
                                  static_cast<int>(args[2])},
                     e);
  }
  if (name == "random") {
    want(2);
    return random_multilinear(static_cast<std::uint64_t>(args[0]), static_cast<int>(args[1]), e);
  }
  throw std::invalid_argument("functional: unknown name " + name);
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

int cmd_thresholds(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  const double p = params.p_disagree();
  const double x = p * (2.0 * c.dim - 1.0) * std::exp(params.c());
  json results{{"koko", threshold_koko(c.dim)},
               {"dobrushin", params.J == 1 && dobrushin_ok(params)},
               {"racine2", racine2_sufficient(params)},
               {"p", p},
               {"c", params.c()},
               {"c_prime", params.c_prime()},
               {"saw_ratio", x},
               {"site_pc", site_percolation_pc(c.dim)}};
  results["certificate"] = json{{"p", p}, {"c", params.c()}, {"c_prime", params.c_prime()},
                                {"x", x}};
  std::vector<Assertion> as;
  as.push_back(check_leq("p_below_site_pc", p, site_percolation_pc(c.dim)));
  as.push_back(check_leq("beta_nonnegative", 0.0, params.beta));
  return emit("thresholds", c, results, as, t0);
}

struct PercFlags {
  double p = -1.0;  // negative: derive p(beta, h) from the model
  double c = std::numeric_limits<double>::quiet_NaN();
  int cap = 400;
  std::uint64_t samples = 100000;
  int n_max = 20;
  std::vector<int> cuts = {2, 4, 8, 16};
};

int cmd_perc_moments(const Common& c, const PercFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  const double p = f.p >= 0.0 ? f.p : params.p_disagree();
  const double cexp = std::isnan(f.c) ? params.c() : f.c;
  if (p > 1.0) throw std::invalid_argument("perc-moments: p > 1; pass --p or lower beta");

  Stream rng = derive_stream(c.seed, "cli/perc-moments");
  MomentEstimate k = moment_K(p, c.dim, cexp, f.cap, f.samples, rng, c.threads);
  auto kn = k_n_curve(p, c.dim, cexp, f.n_max, f.samples, rng, c.threads);
  auto tails = tail_second_moment_curve(p, c.dim, f.cuts, f.samples, rng, f.cap, c.threads);

  json results{{"p", p}, {"d", c.dim}, {"c", cexp}, {"cap", f.cap}, {"samples", f.samples}};
  results["K"] = {{"value", k.value},
                  {"se", k.std_error},
                  {"tail_bound", std::isfinite(k.tail_bound) ? json(k.tail_bound) : json("inf")},
                  {"envelope",
                   std::isfinite(k.upper_envelope()) ? json(k.upper_envelope()) : json("inf")}};
  results["K_N"] = json::array();
  for (const auto& [n, v] : kn) results["K_N"].push_back(json{{"n", n}, {"value", v}});
  results["tails"] = json::array();
  for (std::size_t i = 0; i < tails.size(); ++i)
    results["tails"].push_back(
        json{{"cut", f.cuts[i]}, {"value", tails[i].value}, {"se", tails[i].std_error}});

  std::vector<Assertion> as;
  as.push_back(check_leq("saw_ratio_below_one", p * (2.0 * c.dim - 1.0) * std::exp(cexp), 1.0));
  bool mono = true;
  for (std::size_t i = 1; i < kn.size(); ++i) mono = mono && kn[i].second >= kn[i - 1].second;
  as.push_back(check_true("k_n_nondecreasing", mono));
  bool dec = true;
  for (std::size_t i = 1; i < tails.size(); ++i)
    dec = dec && tails[i].value <= tails[i - 1].value + 1e-12;
  as.push_back(check_true("tails_nonincreasing", dec));
  return emit("perc-moments", c, results, as, t0);
}

struct CouplingFlags {
  std::string mode = "exact";
  int pivot = 1;
  std::uint64_t samples = 1000;
  std::uint32_t prefix = 0;
  int max_transcripts = 10;
};

json transcript_json(const CouplingTranscript& t) {
  json j{{"pivot", t.pivot_rank},
         {"prefix", t.prefix_vals},
         {"mode", t.mode == CouplingMode::exact ? "exact" : "two-stage"},
         {"disagreement", t.disagreement}};
  if (t.mode == CouplingMode::two_stage) j["failure"] = t.failure;
  j["pair"] = json::array();
  for (const PairSample& ps : t.pair)
    j["pair"].push_back(json{{"rank", ps.rank}, {"y", ps.y}, {"z", ps.z}});
  return j;
}

int cmd_coupling_audit(const Common& c, const CouplingFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  auto e = make_box(c);
  if (f.pivot < 1 || f.pivot > e->size())
    throw std::invalid_argument("coupling-audit: pivot out of range");
  ExactMeasure m = ExactMeasure::build(params, e, c.bc());
  Stream rng = derive_stream(c.seed, "cli/coupling-audit");

  std::vector<Assertion> as;
  json results;
  std::map<int, std::uint64_t> histogram;
  results["transcripts"] = json::array();
  double max_violation = -std::numeric_limits<double>::infinity();

  if (f.mode == "exact") {
    std::vector<std::vector<int>> sets = {{f.pivot}};
    for (int nb : e->neighbors(f.pivot)) sets.push_back({std::min(f.pivot, nb), std::max(f.pivot, nb)});
    for (auto& a : sets) {
      DominationAudit audit = domination_audit(m, f.pivot, a);
      std::string name = "domination A={";
      for (std::size_t i = 0; i < a.size(); ++i)
        name += (i ? "," : "") + std::to_string(a[i]);
      name += "}";
      as.push_back(check_leq(name, audit.lhs, audit.rhs, 1e-10));
      max_violation = std::max(max_violation, audit.lhs - audit.rhs);
    }
    for (std::uint64_t i = 0; i < f.samples; ++i) {
      CouplingTranscript t = grow_coupling_exact(m, f.pivot, f.prefix, rng);
      ++histogram[static_cast<int>(t.disagreement.size())];
      if (static_cast<int>(results["transcripts"].size()) < f.max_transcripts)
        results["transcripts"].push_back(transcript_json(t));
    }
  } else if (f.mode == "two-stage") {
    const double p = params.p_disagree();
    if (p >= 1.0) throw std::invalid_argument("coupling-audit: p(beta,h) >= 1, lower beta");
    ConfigSampler sampler = exact_config_sampler(m);
    bool contained = true;
    for (std::uint64_t i = 0; i < f.samples; ++i) {
      CouplingTranscript t = grow_coupling_two_stage(*e, sampler, f.pivot, f.prefix, p, rng);
      ++histogram[static_cast<int>(t.failure.size())];
      for (int r : t.disagreement)
        if (std::find(t.failure.begin(), t.failure.end(), r) == t.failure.end()) contained = false;
      if (static_cast<int>(results["transcripts"].size()) < f.max_transcripts)
        results["transcripts"].push_back(transcript_json(t));
    }
    as.push_back(check_true("disagreement_within_failure_cluster", contained));
    max_violation = contained ? -1.0 : 0.0;
  } else {
    throw std::invalid_argument("coupling-audit: --mode must be exact or two-stage");
  }

  json hist = json::array();
  for (const auto& [size, count] : histogram)
    hist.push_back(json{{"size", size}, {"count", count}});
  results["summary"] = {{"max_violation_margin", max_violation},
                        {"cluster_size_histogram", hist}};
  return emit("coupling-audit", c, results, as, t0);
}

struct BudgetFlags {
  std::uint64_t samples = 200000;
  int cap = 500;
};

int cmd_gap_audit(const Common& c, const BudgetFlags& f, const std::string& export_path) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  auto e = make_box(c);
  ExactMeasure m = ExactMeasure::build(params, e, c.bc());
  if (!export_path.empty()) write_measure(export_path, m.probs());
  RateFunction rates{params, c.bc()};
  Semigroup s(m, rates);
  const double gap = s.gap();
  PoincareCertificate cert = poincare_certificate(params, PercBudget{f.samples, f.cap, c.seed,
                                                                     c.threads});
  json results{{"gap", gap},
               {"delta", rates.delta()},
               {"M", rates.upper()},
               {"bound_2delta_over_cp", cert.gap_lower_bound},
               {"detailed_balance_residual", detailed_balance_audit(m, rates)},
               {"certificate", certificate_json(cert)}};
  results["eigenvalues"] = json::array();
  const int n_eigs = std::min<int>(8, static_cast<int>(s.eigenvalues().size()));
  for (int i = 0; i < n_eigs; ++i) results["eigenvalues"].push_back(s.eigenvalues()(i));

  std::vector<Assertion> as;
  as.push_back(check_leq("gap_at_least_2delta_over_cp", cert.gap_lower_bound, gap, 1e-8));
  as.push_back(check_leq("detailed_balance", detailed_balance_audit(m, rates), 1e-12));
  return emit("gap-audit", c, results, as, t0);
}

struct RelaxFlags {
  std::string functional = "random(1,3)";
  std::vector<double> times = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::string mode = "exact";
  int outer = 2000;
  int inner = 8;
  std::string csv;
};

int cmd_relax(const Common& c, const RelaxFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  auto e = make_box(c);
  ExactMeasure m = ExactMeasure::build(params, e, c.bc());
  RateFunction rates{params, c.bc()};
  Functional func = parse_functional(f.functional, *e);
  auto table = tabulate(func, e);
  const double mu = m.mean(table);
  for (double& v : table) v -= mu;
  double l2 = 0.0;
  for (std::size_t mask = 0; mask < table.size(); ++mask)
    l2 += m.prob(static_cast<std::uint32_t>(mask)) * table[mask] * table[mask];
  const double gap = spectral_gap_exact(m, rates);

  RelaxationCurve curve;
  std::vector<Assertion> as;
  if (f.mode == "exact") {
    curve = relaxation_curve_exact(m, rates, table, f.times);
    for (std::size_t i = 0; i < f.times.size(); ++i)
      as.push_back(check_leq("relax t=" + std::to_string(f.times[i]), curve.variances[i],
                             std::exp(-gap * f.times[i]) * l2, 1e-8));
  } else if (f.mode == "mc") {
    curve = relaxation_curve_mc(m, rates, func, f.times, f.outer, f.inner, c.seed,
                                static_cast<int>(c.threads));
    RelaxationCurve exact = relaxation_curve_exact(m, rates, table, f.times);
    for (std::size_t i = 0; i < f.times.size(); ++i)
      as.push_back(check_leq("mc_vs_exact t=" + std::to_string(f.times[i]),
                             std::abs(curve.variances[i] - exact.variances[i]),
                             3.0 * curve.std_errors[i] + 1e-6));
  } else {
    throw std::invalid_argument("relax: --mode must be exact or mc");
  }

  // Exponential fit of log Var(S_t f) against t.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int npt = 0;
  for (std::size_t i = 0; i < f.times.size(); ++i) {
    if (curve.variances[i] <= 0.0) continue;
    const double x = f.times[i], y = std::log(curve.variances[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++npt;
  }
  double rate = 0.0;
  if (npt >= 2 && npt * sxx - sx * sx > 0.0) rate = -(npt * sxy - sx * sy) / (npt * sxx - sx * sx);

  json results{{"gap", gap}, {"l2_norm_sq", l2}, {"fit", {{"kind", "exponential"}, {"rate", rate}}}};
  results["curve"] = json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < f.times.size(); ++i) {
    results["curve"].push_back(
        json{{"t", curve.times[i]}, {"var", curve.variances[i]}, {"se", curve.std_errors[i]}});
    rows.push_back({curve.times[i], curve.variances[i], curve.std_errors[i]});
  }
  if (!f.csv.empty()) write_csv(f.csv, "time,value,se", rows);
  return emit("relax", c, results, as, t0);
}

struct AuditFlags {
  int functionals = 20;
  int degree = 3;
  BudgetFlags budget;
};

int cmd_poincare_audit(const Common& c, const AuditFlags& f, const std::string& export_path) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  PoincareCertificate cert = poincare_certificate(
      params, PercBudget{f.budget.samples, f.budget.cap, c.seed, c.threads});
  json results{{"certificate", certificate_json(cert)}};
  std::vector<Assertion> as;
  as.push_back(check_true("certificate_finite", std::isfinite(cert.c_p)));
  if (std::isfinite(cert.c_p)) {
    auto e = make_box(c);
    ExactMeasure m = ExactMeasure::build(params, e, c.bc());
    if (!export_path.empty()) write_measure(export_path, m.probs());
    RateFunction rates{params, c.bc()};
    std::vector<std::vector<double>> tables;
    for (int i = 0; i < f.functionals; ++i)
      tables.push_back(tabulate(random_multilinear(hash_u64(c.seed, i), f.degree, *e), e));
    PoincareAuditReport report = poincare_audit(m, rates, tables, cert);
    as.insert(as.end(), report.assertions.begin(), report.assertions.end());
    results["sharp_constant"] = report.sharp_constant;
    results["gap_constant"] = report.gap_constant;
    results["exact_gap"] = report.exact_gap;
  }
  return emit("poincare-audit", c, results, as, t0);
}

struct WeakFlags {
  int n_lo = 2;
  int n_hi = 20;
  std::vector<double> times = {0.5, 1.0, 2.0, 4.0};
  int functionals = 3;
  int degree = 3;
  BudgetFlags budget;
  std::string csv;
};

int cmd_weak_poincare(const Common& c, const WeakFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams params = c.params();
  params.validate();
  WeakPoincareCurve curve = weak_poincare_curve(
      params, f.n_lo, f.n_hi, PercBudget{f.budget.samples, f.budget.cap, c.seed, c.threads});

  json results;
  results["certificate"] = json{{"p", params.p_disagree()},
                                {"c", params.c()},
                                {"kappa", curve.kappa},
                                {"c_fit", curve.c_fit},
                                {"c_env", curve.c_env},
                                {"r_squared", curve.r_squared},
                                {"fit_valid", curve.fit_valid}};
  results["points"] = json::array();
  std::vector<std::vector<double>> rows;
  for (const auto& pt : curve.points) {
    results["points"].push_back(json{
        {"n", pt.n}, {"K_N", pt.k_n}, {"tail", pt.tail}, {"r", pt.r}, {"alpha", pt.alpha}});
    rows.push_back({static_cast<double>(pt.n), pt.k_n, pt.tail, pt.r, pt.alpha});
  }
  if (!f.csv.empty()) write_csv(f.csv, "n,K_N,tail,r,alpha", rows);

  std::vector<Assertion> as;
  as.push_back(check_true("fit_valid_kappa_positive", curve.fit_valid && curve.kappa > 0.0));
  bool mono = true, dec = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    mono = mono && curve.points[i].k_n >= curve.points[i - 1].k_n;
    dec = dec && curve.points[i].tail <= curve.points[i - 1].tail + 1e-12;
  }
  as.push_back(check_true("k_n_nondecreasing", mono));
  as.push_back(check_true("tails_nonincreasing", dec));

  auto e = make_box(c);
  ExactMeasure m = ExactMeasure::build(params, e, c.bc());
  RateFunction rates{params, c.bc()};
  const double delta = rates.delta();
  results["xi"] = json::array();
  for (double t : f.times)
    results["xi"].push_back(json{{"t", t}, {"xi", xi_of_t(curve, delta, t)}});
  for (int i = 0; i < f.functionals; ++i) {
    auto table = tabulate(random_multilinear(hash_u64(c.seed, 100 + i), f.degree, *e), e);
    std::vector<Assertion> wa = weak_relaxation_audit(m, rates, table, curve, f.times);
    for (Assertion& a : wa) {
      a.name = "f" + std::to_string(i) + " " + a.name;
      as.push_back(a);
    }
  }
  return emit("weak-poincare", c, results, as, t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov random field audit suite"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  Common c;
  PercFlags perc;
  CouplingFlags coupling;
  BudgetFlags gap_budget;
  std::string gap_export, audit_export;
  RelaxFlags relax;
  AuditFlags audit;
  WeakFlags weak;

  CLI::App* s_thresholds = app.add_subcommand("thresholds", "closed-form sufficient conditions");
  add_model_flags(s_thresholds, c);

  CLI::App* s_perc = app.add_subcommand("perc-moments", "percolation moment estimates");
  add_model_flags(s_perc, c);
  s_perc->add_option("--p", perc.p, "site percolation parameter (default: p(beta,h))");
  s_perc->add_option("--c", perc.c, "exponential weight (default: model c)");
  s_perc->add_option("--cap", perc.cap, "cluster growth cap");
  s_perc->add_option("--samples", perc.samples, "Monte Carlo replicas");
  s_perc->add_option("--n-max", perc.n_max, "largest truncation N for the K_N curve");
  s_perc->add_option("--cuts", perc.cuts, "tail second-moment cut list");

  CLI::App* s_coupling = app.add_subcommand("coupling-audit", "disagreement coupling audit");
  add_model_flags(s_coupling, c);
  s_coupling->add_option("--mode", coupling.mode, "exact|two-stage");
  s_coupling->add_option("--pivot", coupling.pivot, "pivot rank");
  s_coupling->add_option("--samples", coupling.samples, "sampled transcripts");
  s_coupling->add_option("--prefix", coupling.prefix, "conditioning prefix spins (bitmask)");
  s_coupling->add_option("--max-transcripts", coupling.max_transcripts,
                         "transcripts embedded in the report");

  CLI::App* s_gap = app.add_subcommand("gap-audit", "exact spectrum against the certificate");
  add_model_flags(s_gap, c);
  s_gap->add_option("--samples", gap_budget.samples, "percolation replicas for K");
  s_gap->add_option("--cap", gap_budget.cap, "cluster growth cap");
  s_gap->add_option("--export-measure", gap_export, "write the probability vector here");

  CLI::App* s_relax = app.add_subcommand("relax", "variance decay curves");
  add_model_flags(s_relax, c);
  s_relax->add_option("--functional", relax.functional,
                      "spin(x) | corr(x,y) | runcount(k,axis,n) | random(seed,degree)");
  s_relax->add_option("--times", relax.times, "time grid");
  s_relax->add_option("--mode", relax.mode, "exact|mc");
  s_relax->add_option("--outer", relax.outer, "outer replicas (mc)");
  s_relax->add_option("--inner", relax.inner, "inner replicas (mc)");
  s_relax->add_option("--csv", relax.csv, "also write the curve as CSV");

  CLI::App* s_audit = app.add_subcommand("poincare-audit", "variance vs Dirichlet form battery");
  add_model_flags(s_audit, c);
  s_audit->add_option("--functionals", audit.functionals, "battery size");
  s_audit->add_option("--degree", audit.degree, "multilinear degree");
  s_audit->add_option("--samples", audit.budget.samples, "percolation replicas");
  s_audit->add_option("--cap", audit.budget.cap, "cluster growth cap");
  s_audit->add_option("--export-measure", audit_export, "write the probability vector here");

  CLI::App* s_weak = app.add_subcommand("weak-poincare", "truncated moment curve and xi(t)");
  add_model_flags(s_weak, c);
  s_weak->add_option("--n-lo", weak.n_lo, "smallest truncation N");
  s_weak->add_option("--n-hi", weak.n_hi, "largest truncation N");
  s_weak->add_option("--times", weak.times, "time grid for the relaxation audit");
  s_weak->add_option("--functionals", weak.functionals, "relaxation battery size");
  s_weak->add_option("--degree", weak.degree, "multilinear degree");
  s_weak->add_option("--samples", weak.budget.samples, "percolation replicas");
  s_weak->add_option("--cap", weak.budget.cap, "cluster growth cap");
  s_weak->add_option("--csv", weak.csv, "also write the curve as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    for (const CLI::App* sub :
         {s_thresholds, s_perc, s_coupling, s_gap, s_relax, s_audit, s_weak})
      if (sub->parsed()) apply_config(sub, c);
    if (s_thresholds->parsed()) return cmd_thresholds(c);
    if (s_perc->parsed()) return cmd_perc_moments(c, perc);
    if (s_coupling->parsed()) return cmd_coupling_audit(c, coupling);
    if (s_gap->parsed()) return cmd_gap_audit(c, gap_budget, gap_export);
    if (s_relax->parsed()) return cmd_relax(c, relax);
    if (s_audit->parsed()) return cmd_poincare_audit(c, audit, audit_export);
    if (s_weak->parsed()) return cmd_weak_poincare(c, weak);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
