// rwsre: Monte Carlo laboratory for random walks in strongly sparse
// random environments.
//
//   rwsre run      --config FILE [--scenario S] [--replicas R] [--seed K]
//                  [--threads T] [--out DIR]
//   rwsre validate --config FILE
//   rwsre limits   --law {theta,chi,indep,l2} [--param k=v ...] --count N
//                  [--seed K] [--out FILE]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rwsre/scenario.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& scenario,
            std::int64_t replicas, std::int64_t seed, int threads, const std::string& out) {
  rwsre::ScenarioConfig cfg = rwsre::load_config(config_path);
  if (!scenario.empty()) cfg.scenario = scenario;
  if (replicas > 0) cfg.replicas = static_cast<std::uint64_t>(replicas);
  if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (threads > 0) cfg.threads = threads;
  if (!out.empty()) cfg.out_dir = out;
  const rwsre::RunResult res = rwsre::run_scenario(cfg);
  std::printf("scenario %s: %s (%zu n points), verdict at %s/verdict.json\n",
              cfg.scenario.c_str(), res.pass ? "pass" : "fail", res.per_n.size(),
              cfg.out_dir.c_str());
  return res.pass ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
  const rwsre::ScenarioConfig cfg = rwsre::load_config(config_path);
  rwsre::validate_config(cfg);
  std::printf("config ok: scenario=%s replicas=%llu n_grid=%zu\n", cfg.scenario.c_str(),
              static_cast<unsigned long long>(cfg.replicas), cfg.n_grid.size());
  return 0;
}

double get_param(const std::map<std::string, double>& p, const std::string& key, double dflt) {
  const auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

int cmd_limits(const std::string& law, const std::vector<std::string>& params,
               std::uint64_t count, std::uint64_t seed, const std::string& out_path) {
  std::map<std::string, double> p;
  for (const std::string& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--param expects key=value, got: " + kv);
    p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  rwsre::Rng rng(rwsre::mix_key(seed, rwsre::fnv1a64(law)));
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw CLI::ValidationError("cannot open output file: " + out_path);
    os = &file;
  }
  (*os) << "law_tag,replica,value\n";
  for (std::uint64_t i = 0; i < count; ++i) {
    double v;
    if (law == "theta") {
      v = rwsre::sample_theta(rng);
    } else if (law == "chi") {
      const double beta = get_param(p, "beta", 0.5);
      const double c_mu =
          get_param(p, "c_mu", rwsre::ThetaSampler::moment(beta / 2.0));
      v = rwsre::sample_chi(beta, c_mu, get_param(p, "eps", 1e-3), rng);
    } else if (law == "indep") {
      v = rwsre::sample_indep_limit(get_param(p, "alpha", 0.25), get_param(p, "beta", 0.75),
                                    get_param(p, "c_z", 1.0), rng);
    } else {  // l2
      v = rwsre::sample_L2_at_1(get_param(p, "index", 0.5), get_param(p, "tail_const", 1.0),
                                rng);
    }
    (*os) << law << "," << i << "," << rwsre::fmt_double(v) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for random walks in sparse random environments"};
  app.require_subcommand(1);

  std::string config_path, scenario, out;
  std::int64_t replicas = -1, seed = -1;
  int threads = -1;
  auto* run = app.add_subcommand("run", "Run a scenario from a config file");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--scenario", scenario, "Override the scenario tag");
  run->add_option("--replicas", replicas, "Override the replica count");
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--threads", threads, "Override the thread budget");
  run->add_option("--out", out, "Override the output directory");

  std::string vconfig;
  auto* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("--config", vconfig, "Config file (JSON)")->required();

  std::string law, lim_out;
  std::vector<std::string> params;
  std::uint64_t count = 1000, lim_seed = 1;
  auto* limits = app.add_subcommand("limits", "Sample a limit law to CSV");
  limits->add_option("--law", law, "Limit law")
      ->required()
      ->check(CLI::IsMember({"theta", "chi", "indep", "l2"}));
  limits->add_option("--param", params, "Law parameter key=value (repeatable)");
  limits->add_option("--count", count, "Number of draws")->required();
  limits->add_option("--seed", lim_seed, "Seed");
  limits->add_option("--out", lim_out, "Output CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config_path, scenario, replicas, seed, threads, out);
    if (validate->parsed()) return cmd_validate(vconfig);
    return cmd_limits(law, params, count, lim_seed, lim_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
