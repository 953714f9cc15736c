#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "shadowlab/audit.hpp"
#include "shadowlab/distributions.hpp"
#include "shadowlab/error.hpp"
#include "shadowlab/experiment_config.hpp"
#include "shadowlab/harness.hpp"
#include "shadowlab/records_io.hpp"

namespace shadowlab::cli {

namespace {

using nlohmann::ordered_json;

constexpr double kCompareTolerance = 1e-8;

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::kPlan: return "plan";
    case Subcommand::kRun: return "run";
    case Subcommand::kSweep: return "sweep";
    case Subcommand::kAudit: return "audit";
    case Subcommand::kCompare: return "compare";
    case Subcommand::kDist: return "dist";
  }
  return "?";
}

bool needs_config(Subcommand s) {
  return s == Subcommand::kRun || s == Subcommand::kSweep || s == Subcommand::kCompare;
}

void add_protocol_flags(CLI::App* sub, Invocation& inv) {
  sub->add_option("--eps", inv.epsilon, "Additive error epsilon in (0, 1)");
  sub->add_option("--delta", inv.delta, "Failure probability delta in (0, 1)");
  sub->add_option("--m", inv.m, "Number of POVM elements");
  sub->add_option("--n", inv.n, "Override: copies of rho per round");
  sub->add_option("--k", inv.k, "Override: rotation ancillas (alg1)");
  sub->add_option("--p", inv.p, "Override: counter-state parameter (alg2)");
  sub->add_option("--alg", inv.algorithm, "Algorithm")->check(CLI::IsMember({"alg1", "alg2"}));
}

void add_run_flags(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config, "Experiment config (JSON)");
  sub->add_option("--seed", inv.seed, "Base seed; trial t uses seed + t");
  sub->add_option("--engine", inv.engine, "Simulation engine")
      ->check(CLI::IsMember({"full", "kickback", "marginal", "naive"}));
  sub->add_option("--eta", inv.eta, "Readout flip rate in [0, 1/2)");
  sub->add_option("--trials", inv.trials, "Number of trials");
  sub->add_option("--threads", inv.threads, "Worker threads (0: hardware concurrency)");
  sub->add_option("--out", inv.out, "Output file");
}

ExperimentConfig effective_config(const Invocation& inv) {
  ExperimentConfig config = inv.config ? load_config(*inv.config) : ExperimentConfig{};
  ProtocolSpec& p = config.protocol;
  if (inv.algorithm) p.algorithm = parse_algorithm(*inv.algorithm);
  if (inv.epsilon) p.epsilon = *inv.epsilon;
  if (inv.delta) p.delta = *inv.delta;
  if (inv.m) config.instance.m = *inv.m;
  if (inv.n) p.n = *inv.n;
  if (inv.k) p.k = *inv.k;
  if (inv.p) p.p = *inv.p;
  if (inv.union_bound) p.union_bound = true;
  if (inv.seed) config.seed = *inv.seed;
  if (inv.engine) config.engine = parse_engine_kind(*inv.engine);
  if (inv.eta) config.eta = *inv.eta;
  if (inv.trials) config.trials = *inv.trials;
  if (inv.threads) config.threads = *inv.threads;
  if (config.instance.family == FamilyKind::kFromFile && inv.m &&
      *inv.m != config.instance.family_files.size()) {
    throw ValidationError("--m conflicts with the number of family files in the config");
  }
  config.validate();
  return config;
}

std::optional<std::filesystem::path> output_path(const Invocation& inv,
                                                 const std::optional<std::filesystem::path>& env_dir,
                                                 const std::string& default_name) {
  if (inv.out) {
    if (inv.out->is_relative() && env_dir) return *env_dir / *inv.out;
    return *inv.out;
  }
  if (env_dir) return *env_dir / default_name;
  return std::nullopt;
}

void print_effective(std::ostream& out, const Invocation& inv, const ordered_json& body) {
  ordered_json doc;
  doc["subcommand"] = to_string(inv.subcommand);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  out << "# effective configuration\n" << doc.dump(2) << "\n";
}

ordered_json config_json(const ExperimentConfig& config) {
  return ordered_json::parse(format_config(config));
}

int do_plan(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = effective_config(inv);
  print_effective(out, inv, {{"config", config_json(config)}});
  const ProtocolSpec& p = config.protocol;
  PlanOptions options;
  options.union_bound = p.union_bound;
  bool feasible;
  if (p.algorithm == Algorithm::kAlg1) {
    std::optional<double> cmax;
    if (p.use_cmax) cmax = cmax_of_family(build_instance(config.instance).ms);
    const Alg1Plan plan = plan_alg1(config.instance.m, p.epsilon, p.delta, p.constants, cmax, options);
    out << "# plan\n" << format_plan(plan);
    feasible = plan.feasible;
  } else {
    const Alg2Plan plan = plan_alg2(config.instance.m, p.epsilon, p.delta, p.lowmem, options);
    out << "# plan\n" << format_plan(plan);
    feasible = plan.feasible;
  }
  return feasible ? kExitOk : kExitInfeasible;
}

int do_run(const Invocation& inv, std::ostream& out,
           const std::optional<std::filesystem::path>& env_dir) {
  const ExperimentConfig config = effective_config(inv);
  print_effective(out, inv, {{"config", config_json(config)}});
  const Instance instance = build_instance(config.instance);
  const ResolvedPlan plan = resolve_plan(config, instance);
  ExperimentResult result = run_experiment(config, instance, plan.params);
  result.plan_report = plan.report;

  const std::string summary = format_summary(config, result);
  out << summary.substr(summary.find("# plan"));
  if (const auto path = output_path(inv, env_dir, "records.csv")) {
    write_records_csv(*path, result.records);
    std::filesystem::path summary_path = *path;
    summary_path.replace_extension(".summary.txt");
    write_summary(summary_path, config, result);
    out << "records written to " << path->string() << "\nsummary written to "
        << summary_path.string() << "\n";
  }
  if (inv.trajectory) {
    if (config.engine != EngineKind::kKickback) {
      throw ValidationError("--trajectory requires the kickback engine");
    }
    ReadoutNoise noise;
    if (config.eta) {
      noise.eta = *config.eta;
      noise.debias = config.debias;
    }
    TrajectoryOptions opts;
    opts.noise = noise;
    opts.audit_fields = true;
    const KickbackTrajectory traj =
        trajectory_run(instance.rho, instance.ms, plan.params, config.seed, opts);
    std::filesystem::path traj_path = *inv.trajectory;
    if (traj_path.is_relative() && env_dir) traj_path = *env_dir / traj_path;
    write_trajectory_csv(traj_path, traj);
    out << "trajectory of trial 0 written to " << traj_path.string() << "\n";
  }
  return kExitOk;
}

int do_sweep(const Invocation& inv, std::ostream& out,
             const std::optional<std::filesystem::path>& env_dir) {
  const ExperimentConfig config = effective_config(inv);
  SweepOptions options;
  options.m_values = inv.m_values;
  options.target_failure = inv.target_failure;
  if (inv.trials) options.trials = *inv.trials;
  ordered_json body;
  body["config"] = config_json(config);
  body["m_values"] = options.m_values;
  body["target_failure"] = options.target_failure;
  body["trials_per_probe"] = options.trials;
  print_effective(out, inv, body);

  const SweepResult sweep = sweep_scaling(config, options);
  std::ostringstream csv;
  csv << "m,k,n_min,failure_rate,band_low,band_high,n_below,failure_below,probes\n";
  csv << std::setprecision(6);
  for (const SweepPoint& pt : sweep.points) {
    csv << pt.m << ',' << pt.k << ',' << pt.n_min << ',' << pt.failure_rate << ',' << pt.band_low
        << ',' << pt.band_high << ',' << pt.n_below << ',' << pt.failure_below << ',' << pt.probes
        << '\n';
  }
  out << "# sweep\n" << csv.str() << "log-log slope " << sweep.slope << "\n";
  if (const auto path = output_path(inv, env_dir, "sweep.csv")) {
    std::ofstream file(*path);
    if (!file) throw IoError("cannot open " + path->string() + " for writing");
    file << csv.str();
    if (!file) throw IoError("write failed for " + path->string());
    out << "sweep written to " << path->string() << "\n";
  }
  return kExitOk;
}

int do_audit(const Invocation& inv, std::ostream& out) {
  const std::uint64_t seed = inv.seed.value_or(1);
  std::vector<AuditKind> kinds;
  if (inv.kind == "all") {
    kinds = all_audit_kinds();
  } else {
    kinds.push_back(parse_audit_kind(inv.kind));
  }
  print_effective(out, inv, {{"kind", inv.kind}, {"count", inv.count}, {"seed", seed}});
  bool pass = true;
  for (AuditKind kind : kinds) {
    const AuditReport report = run_audit(kind, inv.count, seed);
    out << format_report(report);
    pass = pass && report.pass();
  }
  return pass ? kExitOk : kExitViolation;
}

int do_compare(const Invocation& inv, std::ostream& out,
               const std::optional<std::filesystem::path>& env_dir) {
  const ExperimentConfig config = effective_config(inv);
  ordered_json body;
  body["config"] = config_json(config);
  body["round"] = inv.round;
  print_effective(out, inv, body);
  const Instance instance = build_instance(config.instance);
  const ResolvedPlan plan = resolve_plan(config, instance);
  FullSimConfig fs;
  fs.max_amplitudes = config.max_amplitudes;
  const CompareResult cmp = engine_compare(instance, plan.params, inv.round, fs);

  out << std::setprecision(6) << "algorithm " << shadowlab::to_string(plan.params.algorithm)
      << "  n " << plan.params.n << "  k " << plan.params.k << "  p " << plan.params.p << "\n";
  out << std::setprecision(3) << std::scientific << "TV distance " << cmp.tv << " (tolerance "
      << kCompareTolerance << ")\n"
      << std::defaultfloat;
  if (instance.ms.size() >= 2) {
    const JointCompareResult joint = joint_compare(instance, plan.params, fs);
    out << std::setprecision(3) << std::scientific << "joint TV rounds 1-2 " << joint.tv
        << " (exploratory; the kickback surrogate claims marginals only)\n"
        << std::defaultfloat;
  }
  if (const auto path = output_path(inv, env_dir, "compare.csv")) {
    std::ofstream file(*path);
    if (!file) throw IoError("cannot open " + path->string() + " for writing");
    file << "value,full,sampler\n" << std::setprecision(17);
    for (std::int64_t v : cmp.full.values()) {
      file << v << ',' << cmp.full.pmf(v) << ',' << cmp.sampler.pmf(v) << '\n';
    }
    if (!file) throw IoError("write failed for " + path->string());
    out << "pmfs written to " << path->string() << "\n";
  }
  return cmp.tv <= kCompareTolerance ? kExitOk : kExitViolation;
}

int do_dist(const Invocation& inv, std::ostream& out,
            const std::optional<std::filesystem::path>& env_dir) {
  ordered_json body;
  body["kind"] = inv.kind;
  DiscreteDistribution dist;
  if (inv.kind == "lambda") {
    if (!inv.k) throw ValidationError("dist --kind lambda needs --k");
    body["k"] = *inv.k;
    dist = LambdaDist(*inv.k).table();
  } else if (inv.kind == "noise") {
    if (!inv.p) throw ValidationError("dist --kind noise needs --p");
    body["p"] = *inv.p;
    dist = NoiseSDist(*inv.p).table();
  } else if (inv.kind == "fourier") {
    if (!inv.p || !inv.n) throw ValidationError("dist --kind fourier needs --p and --n");
    body["p"] = *inv.p;
    body["n"] = *inv.n;
    dist = FourierLDist(*inv.p, *inv.n).table();
  } else {
    throw ValidationError("unknown dist kind '" + inv.kind + "' (lambda, noise, fourier)");
  }
  print_effective(out, inv, body);
  out << std::setprecision(10) << "support size " << dist.size() << "  mass " << dist.total_mass()
      << "  mean " << dist.mean() << "  second moment " << dist.moment(2) << "\n";
  if (const auto path = output_path(inv, env_dir, "pmf.csv")) {
    write_pmf_csv(dist, *path);
    out << "pmf written to " << path->string() << "\n";
  } else {
    out << "value,probability\n" << std::setprecision(17);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      out << dist.values()[i] << ',' << dist.probs()[i] << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

ParseResult parse(const std::vector<std::string>& args) {
  Invocation inv;
  CLI::App app{"shadowlab: gentle-measurement shadow tomography planner and simulator", "shadowlab"};
  app.require_subcommand(1, 1);
  app.footer(
      "Exit codes: 0 ok, 1 validation or I/O error, 2 infeasible plan, 3 amplitude budget "
      "exceeded, 4 bound violated (audit, compare).\n"
      "SHADOWLAB_OUT_DIR sets the default output directory.");

  CLI::App* plan = app.add_subcommand("plan", "Print the parameter plan");
  plan->add_option("--config", inv.config, "Experiment config (JSON)");
  add_protocol_flags(plan, inv);
  plan->add_flag("--union-bound", inv.union_bound, "Plan for the simultaneous guarantee");

  CLI::App* run = app.add_subcommand("run", "Run repeated trials and write records");
  add_protocol_flags(run, inv);
  add_run_flags(run, inv);
  run->add_option("--trajectory", inv.trajectory, "Write the kickback trajectory of trial 0");

  CLI::App* sweep = app.add_subcommand("sweep", "Minimal n against m (kickback engine)");
  add_protocol_flags(sweep, inv);
  add_run_flags(sweep, inv);
  sweep->add_option("--m-values", inv.m_values, "m values to sweep")->delimiter(',');
  sweep->add_option("--target", inv.target_failure, "Target per-index failure rate");

  CLI::App* audit = app.add_subcommand("audit", "Check an inequality on random instances");
  audit->add_option("--kind", inv.kind, "Audit kind, or 'all'")->required();
  audit->add_option("--count", inv.count, "Instances or grid points");
  audit->add_option("--seed", inv.seed, "Seed");

  CLI::App* compare = app.add_subcommand("compare", "Exact full-simulation pmf against the sampler");
  add_protocol_flags(compare, inv);
  add_run_flags(compare, inv);
  compare->add_option("--round", inv.round, "Round index (1-based)");

  CLI::App* dist = app.add_subcommand("dist", "Tabulate a distribution");
  dist->add_option("--kind", inv.kind, "lambda, noise or fourier")
      ->required()
      ->check(CLI::IsMember({"lambda", "noise", "fourier"}));
  dist->add_option("--k", inv.k, "Ancillas (lambda)");
  dist->add_option("--p", inv.p, "Counter-state parameter (noise, fourier)");
  dist->add_option("--n", inv.n, "Copies (fourier)");
  dist->add_option("--out", inv.out, "Output CSV");

  ParseResult result;
  if (args.empty()) {
    result.exit_code = kExitValidation;
    result.message = app.help();
    return result;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    result.exit_code = kExitOk;
    result.message = app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help();
    return result;
  } catch (const CLI::ParseError& e) {
    result.exit_code = kExitValidation;
    result.message = std::string(e.what()) + "\n\n" + app.help();
    return result;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  for (Subcommand s : {Subcommand::kPlan, Subcommand::kRun, Subcommand::kSweep, Subcommand::kAudit,
                       Subcommand::kCompare, Subcommand::kDist}) {
    if (to_string(s) == name) inv.subcommand = s;
  }
  if (needs_config(inv.subcommand) && !inv.config) {
    result.exit_code = kExitValidation;
    result.message = "subcommand '" + name + "' needs --config\n\n" + app.help();
    return result;
  }
  if (inv.algorithm == "alg1" && inv.p) {
    result.exit_code = kExitValidation;
    result.message = "--p applies to alg2 only";
    return result;
  }
  if (inv.algorithm == "alg2" && inv.k) {
    result.exit_code = kExitValidation;
    result.message = "--k applies to alg1 only";
    return result;
  }
  result.invocation = inv;
  return result;
}

int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err,
             const std::optional<std::filesystem::path>& env_out_dir) {
  try {
    switch (inv.subcommand) {
      case Subcommand::kPlan: return do_plan(inv, out);
      case Subcommand::kRun: return do_run(inv, out, env_out_dir);
      case Subcommand::kSweep: return do_sweep(inv, out, env_out_dir);
      case Subcommand::kAudit: return do_audit(inv, out);
      case Subcommand::kCompare: return do_compare(inv, out, env_out_dir);
      case Subcommand::kDist: return do_dist(inv, out, env_out_dir);
    }
  } catch (const InfeasiblePlan& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const BudgetExceeded& e) {
    err << "budget: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ParseResult parsed = parse(args);
  if (!parsed.invocation) {
    (parsed.exit_code == kExitOk ? out : err) << parsed.message << "\n";
    return parsed.exit_code;
  }
  std::optional<std::filesystem::path> env_dir;
  if (const char* dir = std::getenv("SHADOWLAB_OUT_DIR"); dir != nullptr && *dir != '\0') {
    env_dir = dir;
  }
  return dispatch(*parsed.invocation, out, err, env_dir);
}

}  // namespace shadowlab::cli
