#pragma once

// Scenario runner: config parsing and validation, deterministic replicated
// sampling over both engines, per-theorem normalization, file emission,
// and the verdict JSON.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "rwsre/branching.hpp"
#include "rwsre/environment.hpp"
#include "rwsre/heavytail.hpp"
#include "rwsre/limitlaw.hpp"
#include "rwsre/model.hpp"
#include "rwsre/rng.hpp"
#include "rwsre/stats.hpp"
#include "rwsre/walk.hpp"

namespace rwsre {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream salts: keep environment draws, walk randomness, attempt retries
// and limit-law draws on disjoint streams for the same (n, replica).
inline constexpr std::uint64_t kSaltEnv = 0x454e5653414c54ULL;
inline constexpr std::uint64_t kSaltBranch = 0x4252414e4348ULL;
inline constexpr std::uint64_t kSaltLimit = 0x4c494d4954ULL;
inline constexpr std::uint64_t kSaltAttempt = 0x415454ULL;

struct Constants {
  double c_z = 0.0;      // tail constant of the second subordinator (estimated input)
  double c_mu = 0.0;     // 0 = use E theta^{beta/2}
  double eps = 1e-3;     // small-jump truncation of the Levy pair sampler
  std::string theta_method = "table";  // "table" | "srw"
};

struct Tolerances {
  double ks = 0.05;
  double tail_ratio = 0.2;   // tail_lemmas: plateau vs E tau_1
  double hill_rel = 0.25;    // tail_lemmas: Hill vs expected index
};

struct ScenarioConfig {
  std::string scenario = "engine_equivalence";
  ModelSpec model;
  std::vector<std::int64_t> n_grid;
  std::uint64_t replicas = 1;
  std::uint64_t master_seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  std::string engine = "auto";  // auto | direct | branching | both
  std::uint64_t marks_per_replica = 256;  // tail_lemmas block budget per env
  Constants constants;
  Tolerances tolerances;
};

// ---------------------------------------------------------------------------
// JSON round trip

inline nlohmann::json xi_to_json(const XiLaw& x) {
  nlohmann::json j;
  switch (x.family) {
    case XiFamily::Constant:
      j["family"] = "constant";
      j["value"] = x.value;
      break;
    case XiFamily::ShiftedGeometric:
      j["family"] = "shifted_geometric";
      j["p"] = x.p_geo;
      break;
    case XiFamily::Pareto:
      j["family"] = "pareto";
      j["beta"] = x.beta;
      j["ell"] = x.ell == EllKind::Const ? "const"
                 : x.ell == EllKind::LogGrow ? "log_grow" : "log_decay";
      j["ell_c"] = x.ell_c;
      j["ell_p"] = x.ell_p;
      break;
  }
  return j;
}

inline XiLaw xi_from_json(const nlohmann::json& j) {
  XiLaw x;
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "constant") {
    x.family = XiFamily::Constant;
    x.value = j.at("value").get<double>();
  } else if (fam == "shifted_geometric") {
    x.family = XiFamily::ShiftedGeometric;
    x.p_geo = j.at("p").get<double>();
  } else if (fam == "pareto") {
    x.family = XiFamily::Pareto;
    x.beta = j.at("beta").get<double>();
    const std::string ell = j.value("ell", "const");
    x.ell = ell == "const" ? EllKind::Const
            : ell == "log_grow" ? EllKind::LogGrow
            : ell == "log_decay" ? EllKind::LogDecay
                                 : throw std::invalid_argument("unknown ell kind: " + ell);
    x.ell_c = j.value("ell_c", 1.0);
    x.ell_p = j.value("ell_p", 0.5);
  } else {
    throw std::invalid_argument("unknown xi family: " + fam);
  }
  return x;
}

inline nlohmann::json lambda_to_json(const LambdaLaw& l) {
  nlohmann::json j;
  switch (l.family) {
    case LambdaFamily::Constant:
      j["family"] = "constant";
      j["value"] = l.value;
      break;
    case LambdaFamily::TwoPoint:
      j["family"] = "two_point";
      j["a"] = l.a;
      j["b"] = l.b;
      j["p"] = l.p;
      break;
    case LambdaFamily::Beta:
      j["family"] = "beta";
      j["a"] = l.a;
      j["b"] = l.b;
      break;
    case LambdaFamily::RhoLognormal:
      j["family"] = "rho_lognormal";
      j["mu"] = l.mu;
      j["sigma"] = l.sigma;
      break;
  }
  return j;
}

inline LambdaLaw lambda_from_json(const nlohmann::json& j) {
  LambdaLaw l;
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "constant") {
    l.family = LambdaFamily::Constant;
    l.value = j.at("value").get<double>();
  } else if (fam == "two_point") {
    l.family = LambdaFamily::TwoPoint;
    l.a = j.at("a").get<double>();
    l.b = j.at("b").get<double>();
    l.p = j.at("p").get<double>();
  } else if (fam == "beta") {
    l.family = LambdaFamily::Beta;
    l.a = j.at("a").get<double>();
    l.b = j.at("b").get<double>();
  } else if (fam == "rho_lognormal") {
    l.family = LambdaFamily::RhoLognormal;
    l.mu = j.at("mu").get<double>();
    l.sigma = j.at("sigma").get<double>();
  } else {
    throw std::invalid_argument("unknown lambda family: " + fam);
  }
  return l;
}

inline nlohmann::json model_to_json(const ModelSpec& m) {
  nlohmann::json j;
  j["xi"] = xi_to_json(m.xi);
  j["lambda"] = lambda_to_json(m.lambda);
  j["coupling"] = m.coupling == Coupling::Independent ? "independent" : "rank_coupled";
  return j;
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.xi = xi_from_json(j.at("xi"));
  m.lambda = lambda_from_json(j.at("lambda"));
  const std::string c = j.value("coupling", "independent");
  if (c == "independent")
    m.coupling = Coupling::Independent;
  else if (c == "rank_coupled")
    m.coupling = Coupling::RankCoupled;
  else
    throw std::invalid_argument("unknown coupling: " + c);
  return m;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["scenario"] = c.scenario;
  j["model"] = model_to_json(c.model);
  j["n_grid"] = c.n_grid;
  j["replicas"] = c.replicas;
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["engine"] = c.engine;
  j["marks_per_replica"] = c.marks_per_replica;
  j["constants"] = {{"c_z", c.constants.c_z},
                    {"c_mu", c.constants.c_mu},
                    {"eps", c.constants.eps},
                    {"theta_method", c.constants.theta_method}};
  j["tolerances"] = {{"ks", c.tolerances.ks},
                     {"tail_ratio", c.tolerances.tail_ratio},
                     {"hill_rel", c.tolerances.hill_rel}};
  return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  c.scenario = j.at("scenario").get<std::string>();
  c.model = model_from_json(j.at("model"));
  c.n_grid = j.value("n_grid", std::vector<std::int64_t>{});
  c.replicas = j.value("replicas", std::uint64_t{1});
  c.master_seed = j.value("master_seed", std::uint64_t{1});
  c.threads = j.value("threads", 1);
  c.out_dir = j.value("out_dir", std::string("out"));
  c.engine = j.value("engine", std::string("auto"));
  c.marks_per_replica = j.value("marks_per_replica", std::uint64_t{256});
  if (j.contains("constants")) {
    const auto& k = j.at("constants");
    c.constants.c_z = k.value("c_z", 0.0);
    c.constants.c_mu = k.value("c_mu", 0.0);
    c.constants.eps = k.value("eps", 1e-3);
    c.constants.theta_method = k.value("theta_method", std::string("table"));
  }
  if (j.contains("tolerances")) {
    const auto& k = j.at("tolerances");
    c.tolerances.ks = k.value("ks", 0.05);
    c.tolerances.tail_ratio = k.value("tail_ratio", 0.2);
    c.tolerances.hill_rel = k.value("hill_rel", 0.25);
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Validation

inline const std::vector<std::string>& known_scenarios() {
  static const std::vector<std::string> tags = {
      "engine_equivalence", "theorem1", "theorem2",  "theorem3",
      "theorem4",           "lln_speed", "tail_lemmas", "negligibility",
      "limit_law_selftest"};
  return tags;
}

// Throws with the violated condition named; returns the regime tail index
// alpha when the scenario needs one.
inline std::optional<double> validate_config(const ScenarioConfig& cfg) {
  if (std::find(known_scenarios().begin(), known_scenarios().end(), cfg.scenario) ==
      known_scenarios().end())
    throw std::invalid_argument("unknown scenario tag: " + cfg.scenario);
  cfg.model.validate();
  if (cfg.replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (!std::is_sorted(cfg.n_grid.begin(), cfg.n_grid.end()))
    throw std::invalid_argument("n_grid must be sorted ascending");
  for (std::int64_t n : cfg.n_grid)
    if (n < 1) throw std::invalid_argument("n_grid entries must be >= 1");
  const auto& s = cfg.scenario;
  const auto require_pareto = [&](double beta_lo, double beta_hi) {
    if (cfg.model.xi.family != XiFamily::Pareto || cfg.model.xi.beta < beta_lo ||
        cfg.model.xi.beta > beta_hi)
      throw std::invalid_argument(s + " requires xi Pareto with beta in [" +
                                  std::to_string(beta_lo) + ", " + std::to_string(beta_hi) + "]");
  };
  const auto require_right_transient = [&] {
    if (!(cfg.model.lambda.mean_log_rho() < 0.0))
      throw std::invalid_argument(s + " requires E log rho < 0 (transience to the right)");
  };
  if (s == "engine_equivalence") {
    for (std::int64_t n : cfg.n_grid)
      if (n > 64)
        throw std::invalid_argument("engine_equivalence requires n <= 64 (direct-engine oracle range)");
    return std::nullopt;
  }
  if (s == "theorem1" || s == "theorem3") {
    require_pareto(s == "theorem1" ? 0.0 : 1.0, s == "theorem1" ? std::nextafter(1.0, 0.0) : 1.0);
    require_right_transient();
    const double b2 = cfg.model.xi.beta / 2.0;
    const double m = cfg.model.lambda.mellin_rho(b2);
    if (m > 1.0)
      throw std::invalid_argument(
          s + ": condition (rho1)/(rho2) violated, E rho^{beta/2} = " + std::to_string(m) +
          " > 1 (the regime with E rho^{beta/2} > 1 belongs to theorem2/theorem4)");
    return std::nullopt;
  }
  if (s == "theorem2" || s == "theorem4") {
    require_pareto(s == "theorem2" ? 0.0 : 1.0, s == "theorem2" ? std::nextafter(1.0, 0.0) : 1.0);
    require_right_transient();
    const AlphaResult ar = solve_alpha(cfg.model);
    if (!ar.alpha)
      throw std::invalid_argument(s + ": E rho^x never reaches 1, no tail index alpha exists");
    const double bound = cfg.model.xi.beta / 2.0;
    if (!(*ar.alpha < bound))
      throw std::invalid_argument(s + ": requires alpha < beta/2, got alpha = " +
                                  std::to_string(*ar.alpha));
    if (!(cfg.constants.c_z > 0.0))
      throw std::invalid_argument(s + ": requires a positive configured constant c_z "
                                      "(no closed form; estimate it with tail_lemmas)");
    return ar.alpha;
  }
  // lln_speed, tail_lemmas, negligibility, limit_law_selftest: model validity
  // is enough; regimes are reported, not enforced.
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop: results must be written into per-replica
// slots so the output is independent of the thread schedule.

template <typename Fn>
inline void parallel_replicas(std::uint64_t replicas, int threads, Fn&& fn) {
  if (threads <= 1 || replicas < 2) {
    for (std::uint64_t r = 0; r < replicas; ++r) fn(r);
    return;
  }
  const std::uint64_t nt = std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), replicas);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::uint64_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (std::uint64_t r = t; r < replicas; r += nt) fn(r);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// T_n sampling per engine

struct TDraw {
  double t = 0.0;
  bool capped = false;
};

inline bool model_is_deterministic(const ModelSpec& m) {
  return m.xi.family == XiFamily::Constant && m.lambda.family == LambdaFamily::Constant;
}

inline bool model_has_no_bias(const ModelSpec& m) {
  return m.lambda.family == LambdaFamily::Constant && m.lambda.value == 0.5;
}

inline bool model_left_transient(const ModelSpec& m) {
  return m.lambda.mean_log_rho() > 0.0;
}

class TSampler {
 public:
  TSampler(const ScenarioConfig& cfg, std::int64_t n)
      : cfg_(cfg), n_(n), tag_(fnv1a64(cfg.scenario)) {
    if (model_left_transient(cfg.model) && model_is_deterministic(cfg.model) &&
        !model_has_no_bias(cfg.model)) {
      EnvBlock env(cfg.model, 0);
      conditioned_.emplace(env, n);
    }
  }

  // Direct engine. For left-transient deterministic environments this is the
  // exact quenched law of T_n given {T_n < inf} (h-transform); for random
  // left-transient environments it falls back to an attempt loop whose
  // accept step reweights environments by their quenched success probability.
  TDraw direct(std::uint64_t replica) const {
    Rng rng = derive_stream(cfg_.master_seed, tag_, static_cast<std::uint64_t>(n_), replica);
    if (model_has_no_bias(cfg_.model)) {
      const WalkObservables o = fair_first_passage(n_, rng);
      return {static_cast<double>(o.t_n), o.capped};
    }
    if (conditioned_) {
      const WalkObservables o = conditioned_->run(rng);
      return {static_cast<double>(o.t_n), o.capped};
    }
    const std::uint64_t env_key = mix_key(cfg_.master_seed, tag_ ^ kSaltEnv,
                                          static_cast<std::uint64_t>(n_), replica);
    if (!model_left_transient(cfg_.model)) {
      EnvBlock env(cfg_.model, env_key);
      WalkOptions opt;
      opt.exact_path = false;
      opt.step_cap = 1ULL << 50;
      const WalkObservables o = run_walk(env, n_, rng, opt);
      return {static_cast<double>(o.t_n), o.capped};
    }
    // Random left-transient environment: resample env per attempt; validity
    // conditions jointly on environment and path.
    for (std::uint64_t attempt = 0;; ++attempt) {
      EnvBlock env(cfg_.model, mix_key(env_key, kSaltAttempt, attempt));
      WalkOptions opt;
      opt.exact_path = false;
      opt.step_cap = 100'000'000;
      opt.abort_below = -(n_ + 512);
      const WalkObservables o = run_walk(env, n_, rng, opt);
      if (!o.capped) return {static_cast<double>(o.t_n), false};
      if (attempt > 100'000'000)
        throw std::runtime_error("direct engine: no finite passage found");
    }
  }

  // Branching engine. For left-transient models, retries (with a fresh
  // environment) until the below-zero phase dies out; divergence is detected
  // by the generation size exceeding a threshold from which extinction has
  // negligible probability.
  TDraw branching(std::uint64_t replica) const {
    Rng rng = derive_stream(cfg_.master_seed, tag_ ^ kSaltBranch,
                            static_cast<std::uint64_t>(n_), replica);
    const std::uint64_t env_key = mix_key(cfg_.master_seed, tag_ ^ kSaltEnv ^ kSaltBranch,
                                          static_cast<std::uint64_t>(n_), replica);
    if (!model_left_transient(cfg_.model)) {
      EnvBlock env(cfg_.model, env_key);
      // Default below-zero progeny cap (1e8). The below-zero total does not
      // grow with n but its tail index is half that of the main term, so an
      // uncapped (or loosely capped) below-zero phase contaminates the upper
      // quantiles of T_n at large n; the tight cap bounds it far below any
      // normalization used by the theorem scenarios and also bounds the
      // below-zero work per replica.
      const BranchResult r = hitting_time_branching(env, n_, rng, BranchOptions{});
      return {r.t_n, r.capped};
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
      EnvBlock env(cfg_.model, mix_key(env_key, kSaltAttempt, attempt));
      BranchOptions opt;
      opt.divergence_size = 4096;
      const BranchResult r = hitting_time_branching(env, n_, rng, opt);
      if (!r.capped) return {r.t_n, false};
      if (attempt > 100'000'000)
        throw std::runtime_error("branching engine: no finite passage found");
    }
  }

 private:
  const ScenarioConfig& cfg_;
  std::int64_t n_;
  std::uint64_t tag_;
  std::optional<ConditionedWalk> conditioned_;
};

// ---------------------------------------------------------------------------
// Theorem normalization and matched limit samples

struct TheoremPlan {
  double alpha = 0.0;                     // 0 when not applicable
  double c_mu = 0.0;                      // effective C_mu
  std::function<double(std::int64_t)> norm;  // divide T_n by this
  std::function<double(Rng&)> limit;      // one limit draw
  double x_power = 0.0;                   // X functional: (t_stat)^{-x_power}
};

inline TheoremPlan make_theorem_plan(const ScenarioConfig& cfg) {
  TheoremPlan plan;
  const XiLaw xi = cfg.model.xi;
  const double beta = xi.beta;
  plan.c_mu = cfg.constants.c_mu > 0.0 ? cfg.constants.c_mu : ThetaSampler::moment(beta / 2.0);
  const double eps = cfg.constants.eps;
  const double c_z = cfg.constants.c_z;
  if (cfg.scenario == "theorem1") {
    plan.norm = [](std::int64_t n) { return static_cast<double>(n) * static_cast<double>(n); };
    const double c_mu = plan.c_mu;
    plan.limit = [beta, c_mu, eps](Rng& rng) { return 2.0 * sample_chi(beta, c_mu, eps, rng); };
    plan.x_power = 0.5;
    return plan;
  }
  if (cfg.scenario == "theorem2") {
    const AlphaResult ar = solve_alpha(cfg.model);
    plan.alpha = *ar.alpha;
    const double alpha = plan.alpha;
    plan.norm = [xi, alpha](std::int64_t n) {
      return std::pow(xi.tail(static_cast<double>(n)), -1.0 / alpha);
    };
    plan.limit = [alpha, beta, c_z](Rng& rng) {
      return 2.0 * sample_indep_limit(alpha, beta, c_z, rng);
    };
    plan.x_power = alpha / beta;
    return plan;
  }
  if (cfg.scenario == "theorem3" || cfg.scenario == "theorem4") {
    const bool is3 = cfg.scenario == "theorem3";
    double alpha = 0.5;
    if (!is3) {
      const AlphaResult ar = solve_alpha(cfg.model);
      alpha = *ar.alpha;
      plan.alpha = alpha;
    }
    auto nt = std::make_shared<NormalizerTable>(
        build_normalizers(cfg.model, alpha, 1.0,
                          2.0 * static_cast<double>(cfg.n_grid.empty() ? 1 << 20 : cfg.n_grid.back())));
    if (is3) {
      plan.norm = [nt](std::int64_t n) {
        const double c1 = nt->c1(static_cast<double>(n));
        return c1 * c1;
      };
      const double c_mu = plan.c_mu;
      plan.limit = [c_mu](Rng& rng) { return 2.0 * sample_L2_at_1(0.5, c_mu, rng); };
      plan.x_power = 0.5;
    } else {
      plan.norm = [nt, alpha](std::int64_t n) {
        return static_cast<double>(n) * nt->c2(static_cast<double>(n));
      };
      plan.limit = [alpha, c_z](Rng& rng) { return 2.0 * sample_L2_at_1(alpha, c_z, rng); };
      plan.x_power = alpha;
    }
    return plan;
  }
  plan.norm = [](std::int64_t) { return 1.0; };
  plan.limit = [](Rng&) { return 0.0; };
  return plan;
}

// ---------------------------------------------------------------------------
// File emission

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path.string());
    out_ << header << "\n";
  }
  template <typename... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, write(vals)), ...);
    out_ << "\n";
  }

 private:
  void write(double v) { out_ << fmt_double(v); }
  void write(const std::string& v) { out_ << v; }
  void write(const char* v) { out_ << v; }
  template <typename T>
  void write(const T& v) {
    out_ << v;
  }
  std::ofstream out_;
};

struct PerN {
  std::int64_t n = 0;
  double ks = 0.0;
  double hill = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool hill_ok = false;
};

struct RunResult {
  std::string scenario;
  std::vector<PerN> per_n;
  bool pass = false;
  nlohmann::json extra;
};

inline void write_ecdf_pair(const std::filesystem::path& path, const std::vector<double>& emp,
                            const std::vector<double>& ref) {
  CsvWriter w(path, "x,F_empirical,F_limit");
  std::vector<double> xs(emp);
  xs.insert(xs.end(), ref.begin(), ref.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const Ecdf fe(emp), fr(ref);
  for (double x : xs) w.row(x, fe(x), fr(x));
}

inline void write_verdict(const std::filesystem::path& path, const ScenarioConfig& cfg,
                          const RunResult& res) {
  nlohmann::json v;
  v["scenario"] = cfg.scenario;
  // The verdict must be identical across thread counts and output locations;
  // echo only the scientific parameters.
  nlohmann::json params = config_to_json(cfg);
  params.erase("threads");
  params.erase("out_dir");
  v["params"] = params;
  v["per_n"] = nlohmann::json::array();
  for (const auto& p : res.per_n) {
    nlohmann::json e;
    e["n"] = p.n;
    e["ks"] = p.ks;
    if (p.hill_ok) {
      e["hill"] = p.hill;
      e["ci"] = {p.ci_low, p.ci_high};
    } else {
      e["hill"] = nullptr;
      e["ci"] = nullptr;
    }
    v["per_n"].push_back(e);
  }
  v["pass"] = res.pass;
  if (!res.extra.is_null()) v["extra"] = res.extra;
  std::ofstream out(path);
  out << v.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Scenario implementations

namespace detail_scenario {

inline PerN summarize(std::int64_t n, double ks, const std::vector<double>& sample) {
  PerN p;
  p.n = n;
  p.ks = ks;
  try {
    const HillResult h = hill_estimator(sample);
    p.hill = h.index;
    p.ci_low = h.ci_low;
    p.ci_high = h.ci_high;
    p.hill_ok = true;
  } catch (const std::exception&) {
    p.hill_ok = false;
  }
  return p;
}

inline RunResult run_engine_equivalence(const ScenarioConfig& cfg,
                                        const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  CsvWriter tcsv(dir / "t_samples.csv", "scenario,engine,n,replica,t_n,capped");
  CsvWriter kcsv(dir / "ks_table.csv", "n,ks");
  CsvWriter hcsv(dir / "hill_table.csv", "n,hill,ci_low,ci_high,k");
  bool pass = true;
  for (std::int64_t n : cfg.n_grid) {
    const TSampler sampler(cfg, n);
    std::vector<double> td(cfg.replicas), tb(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
      td[r] = sampler.direct(r).t;
      tb[r] = sampler.branching(r).t;
    });
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
      tcsv.row(cfg.scenario, "direct", n, r, td[r], 0);
      tcsv.row(cfg.scenario, "branching", n, r, tb[r], 0);
    }
    const double ks = ks_distance(Ecdf(td), Ecdf(tb));
    PerN p = summarize(n, ks, td);
    res.per_n.push_back(p);
    kcsv.row(n, ks);
    if (p.hill_ok)
      hcsv.row(n, p.hill, p.ci_low, p.ci_high, static_cast<std::uint64_t>(0));
    write_ecdf_pair(dir / ("ecdf_" + std::to_string(n) + ".csv"), td, tb);
    if (ks > cfg.tolerances.ks) pass = false;
  }
  res.pass = pass;
  return res;
}

inline RunResult run_theorem(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  const TheoremPlan plan = make_theorem_plan(cfg);
  const std::uint64_t tag = fnv1a64(cfg.scenario);
  CsvWriter tcsv(dir / "t_samples.csv", "scenario,engine,n,replica,t_n,capped");
  CsvWriter kcsv(dir / "ks_table.csv", "n,ks");
  CsvWriter hcsv(dir / "hill_table.csv", "n,hill,ci_low,ci_high,k");
  CsvWriter xcsv(dir / "x_samples.csv", "scenario,n,replica,x_stat");
  bool pass = true;
  for (std::int64_t n : cfg.n_grid) {
    const bool use_direct = cfg.engine == "direct" || (cfg.engine == "auto" && n <= 64);
    const TSampler sampler(cfg, n);
    std::vector<double> t(cfg.replicas);
    std::vector<int> capped(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
      const TDraw d = use_direct ? sampler.direct(r) : sampler.branching(r);
      t[r] = d.t;
      capped[r] = d.capped ? 1 : 0;
    });
    const double norm = plan.norm(n);
    std::vector<double> stat(cfg.replicas), lim(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
      Rng lr = derive_stream(cfg.master_seed, tag ^ kSaltLimit, static_cast<std::uint64_t>(n), r);
      lim[r] = plan.limit(lr);
    });
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
      stat[r] = t[r] / norm;
      tcsv.row(cfg.scenario, use_direct ? "direct" : "branching", n, r, t[r], capped[r]);
      if (plan.x_power > 0.0)
        xcsv.row(cfg.scenario, n, r, std::pow(stat[r], -plan.x_power));
    }
    const double ks = ks_distance(Ecdf(stat), Ecdf(lim));
    PerN p = summarize(n, ks, stat);
    res.per_n.push_back(p);
    kcsv.row(n, ks);
    if (p.hill_ok)
      hcsv.row(n, p.hill, p.ci_low, p.ci_high, static_cast<std::uint64_t>(0));
    write_ecdf_pair(dir / ("ecdf_" + std::to_string(n) + ".csv"), stat, lim);
    if (ks > cfg.tolerances.ks) pass = false;
  }
  res.pass = pass;
  res.extra = {{"alpha", plan.alpha}, {"c_mu", plan.c_mu}};
  return res;
}

inline RunResult run_lln_speed(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  const std::uint64_t tag = fnv1a64(cfg.scenario);
  const SpeedResult sp = classify_and_speed(cfg.model);
  CsvWriter xcsv(dir / "x_samples.csv", "scenario,n,replica,x_n");
  CsvWriter kcsv(dir / "ks_table.csv", "n,ks");
  bool pass = true;
  nlohmann::json per_n_speed = nlohmann::json::array();
  for (std::int64_t n : cfg.n_grid) {
    std::vector<double> xs(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
      Rng rng = derive_stream(cfg.master_seed, tag, static_cast<std::uint64_t>(n), r);
      EnvBlock env(cfg.model,
                   mix_key(cfg.master_seed, tag ^ kSaltEnv, static_cast<std::uint64_t>(n), r));
      xs[r] = static_cast<double>(run_walk_for_steps(env, static_cast<std::uint64_t>(n), rng));
    });
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) xcsv.row(cfg.scenario, n, r, xs[r]);
    const double mean_rate = sample_mean(xs) / static_cast<double>(n);
    const double dev = std::fabs(mean_rate - sp.v);
    PerN p;
    p.n = n;
    p.ks = dev;  // deviation of X_bar/n from the predicted speed
    res.per_n.push_back(p);
    kcsv.row(n, dev);
    per_n_speed.push_back({{"n", n}, {"mean_rate", mean_rate}});
    if (dev > cfg.tolerances.ks) pass = false;
  }
  res.pass = pass;
  res.extra = {{"speed", sp.v},
               {"sparsity", sp.cls == SparsityClass::Weak      ? "weak"
                            : sp.cls == SparsityClass::Moderate ? "moderate"
                                                                : "strong"},
               {"rates", per_n_speed}};
  return res;
}

inline RunResult run_tail_lemmas(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  const std::uint64_t tag = fnv1a64(cfg.scenario);
  std::vector<std::vector<BlockRecord>> blocks(cfg.replicas);
  parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
    Rng rng = derive_stream(cfg.master_seed, tag, 0, r);
    EnvBlock env(cfg.model, mix_key(cfg.master_seed, tag ^ kSaltEnv, 0, r));
    blocks[r] = z_blocks(env, static_cast<std::int64_t>(cfg.marks_per_replica), rng);
  });
  CsvWriter bcsv(dir / "blocks.csv", "replica,k,tau_inc,s_inc,w_bar,w0,w_down,z_sum");
  std::vector<double> tau, s_inc, w_bar;
  for (std::uint64_t r = 0; r < cfg.replicas; ++r)
    for (const BlockRecord& b : blocks[r]) {
      bcsv.row(r, b.k, b.tau_inc, b.s_inc, b.w_bar, b.w0, b.w_down, b.z_sum);
      tau.push_back(static_cast<double>(b.tau_inc));
      s_inc.push_back(static_cast<double>(b.s_inc));
      w_bar.push_back(b.w_bar);
    }
  if (tau.empty()) throw std::runtime_error("tail_lemmas produced no extinction blocks");
  const double etau1 = sample_mean(tau);

  // Expected W tail index: alpha when it exists below beta/2, beta/2 otherwise.
  const double beta = cfg.model.xi.family == XiFamily::Pareto ? cfg.model.xi.beta : kInf;
  std::optional<double> alpha;
  if (cfg.model.lambda.mean_log_rho() < 0.0) {
    const AlphaResult ar = solve_alpha(cfg.model);
    alpha = ar.alpha;
  }
  const double w_index = (alpha && *alpha < beta / 2.0) ? *alpha : beta / 2.0;

  auto grid_from = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> g;
    for (double q : {0.90, 0.95, 0.98, 0.99, 0.995})
      g.push_back(v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))]);
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  };
  const XiLaw xi = cfg.model.xi;
  const RatioTailResult s_tail = ratio_tail_estimate(
      s_inc, [xi](double t) { return xi.tail(t); }, grid_from(s_inc));
  const RatioTailResult w_tail = ratio_tail_estimate(
      w_bar, [w_index](double t) { return std::pow(t, -w_index); }, grid_from(w_bar));
  const HillResult w_hill = hill_estimator(w_bar);

  PerN p;
  p.n = static_cast<std::int64_t>(tau.size());
  p.ks = std::fabs(s_tail.plateau / etau1 - 1.0);
  p.hill = w_hill.index;
  p.ci_low = w_hill.ci_low;
  p.ci_high = w_hill.ci_high;
  p.hill_ok = true;
  res.per_n.push_back(p);
  res.pass = p.ks <= cfg.tolerances.tail_ratio &&
             std::fabs(w_hill.index / w_index - 1.0) <= cfg.tolerances.hill_rel;
  res.extra = {{"blocks", tau.size()},
               {"etau1", etau1},
               {"s_tail_plateau", s_tail.plateau},
               {"s_tail_insufficient", s_tail.insufficient},
               {"w_index_expected", w_index},
               {"w_hill", w_hill.index},
               {"w_tail_plateau", w_tail.plateau},
               {"c_z_hat", w_tail.plateau / etau1}};
  return res;
}

inline RunResult run_negligibility(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  const std::uint64_t tag = fnv1a64(cfg.scenario);
  CsvWriter ycsv(dir / "y_medians.csv", "n,median_y_over_n2");
  std::vector<double> medians;
  for (std::int64_t n : cfg.n_grid) {
    std::vector<double> ys(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
      EnvBlock env(cfg.model,
                   mix_key(cfg.master_seed, tag ^ kSaltEnv, static_cast<std::uint64_t>(n), r));
      ys[r] = quenched_mean_Y(env, n) / (static_cast<double>(n) * static_cast<double>(n));
    });
    std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(ys.size() / 2),
                     ys.end());
    const double med = ys[ys.size() / 2];
    medians.push_back(med);
    ycsv.row(n, med);
    PerN p;
    p.n = n;
    p.ks = med;
    res.per_n.push_back(p);
  }
  bool pass = !medians.empty();
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (medians[i] > medians[i - 1]) pass = false;
  if (medians.size() >= 2 && medians.back() > medians.front() / 2.0) pass = false;
  res.pass = pass;
  return res;
}

inline RunResult run_limit_law_selftest(const ScenarioConfig& cfg,
                                        const std::filesystem::path& dir) {
  RunResult res;
  res.scenario = cfg.scenario;
  const std::uint64_t tag = fnv1a64(cfg.scenario);
  const std::uint64_t count = cfg.replicas;
  Rng rng(mix_key(cfg.master_seed, tag));
  CsvWriter lcsv(dir / "limit_samples.csv", "law_tag,replica,value");

  std::vector<double> theta(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    theta[i] = cfg.constants.theta_method == "srw" ? ThetaSampler::draw_srw(500, rng)
                                                   : ThetaSampler::draw(rng);
    lcsv.row("theta", i, theta[i]);
  }
  double lt_gap = 0.0;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    double m = 0.0;
    for (double x : theta) m += std::exp(-s * x);
    m /= static_cast<double>(count);
    lt_gap = std::max(lt_gap, std::fabs(m - 1.0 / std::cosh(std::sqrt(s))));
  }
  const double mean_theta = sample_mean(theta);

  std::vector<double> sigma(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    sigma[i] = kanter_stable(0.5, rng);
    lcsv.row("kanter_half", i, sigma[i]);
  }
  double kanter_gap = 0.0;
  {
    double m = 0.0;
    for (double x : sigma) m += std::exp(-x);
    kanter_gap = std::fabs(m / static_cast<double>(count) - std::exp(-1.0));
  }
  std::vector<double> ml(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ml[i] = inverse_subordinator_at_1(0.5, rng);
    lcsv.row("ml_half", i, ml[i]);
  }
  const double ml_mean = sample_mean(ml);
  const double ml_target = 2.0 / 3.14159265358979323846;

  // Self-similarity: X_t  =d  t^{1/beta} X_1 for the marginal at t = 4.
  std::vector<double> at_t(count), scaled(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    at_t[i] = subordinator_marginal(0.5, 1.0, 4.0, rng);
    scaled[i] = 16.0 * subordinator_marginal(0.5, 1.0, 1.0, rng);
  }
  const double ss_ks = ks_distance(Ecdf(at_t), Ecdf(scaled));

  res.extra = {{"theta_lt_gap", lt_gap},
               {"theta_mean", mean_theta},
               {"kanter_lt_gap", kanter_gap},
               {"ml_mean", ml_mean},
               {"ml_target", ml_target},
               {"self_similarity_ks", ss_ks}};
  PerN p;
  p.n = static_cast<std::int64_t>(count);
  p.ks = lt_gap;
  res.per_n.push_back(p);
  res.pass = lt_gap <= 0.01 && std::fabs(mean_theta - 0.5) <= 0.01 && kanter_gap <= 0.01 &&
             std::fabs(ml_mean / ml_target - 1.0) <= 0.03 && ss_ks <= 0.02;
  return res;
}

}  // namespace detail_scenario

inline RunResult run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream echo(dir / "config_echo.json");
    echo << config_to_json(cfg).dump(2) << "\n";
  }
  RunResult res;
  if (cfg.scenario == "engine_equivalence")
    res = detail_scenario::run_engine_equivalence(cfg, dir);
  else if (cfg.scenario == "theorem1" || cfg.scenario == "theorem2" ||
           cfg.scenario == "theorem3" || cfg.scenario == "theorem4")
    res = detail_scenario::run_theorem(cfg, dir);
  else if (cfg.scenario == "lln_speed")
    res = detail_scenario::run_lln_speed(cfg, dir);
  else if (cfg.scenario == "tail_lemmas")
    res = detail_scenario::run_tail_lemmas(cfg, dir);
  else if (cfg.scenario == "negligibility")
    res = detail_scenario::run_negligibility(cfg, dir);
  else
    res = detail_scenario::run_limit_law_selftest(cfg, dir);
  write_verdict(dir / "verdict.json", cfg, res);
  return res;
}

}  // namespace rwsre
