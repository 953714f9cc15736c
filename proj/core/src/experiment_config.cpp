#include "shadowlab/experiment_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "shadowlab/error.hpp"
#include "shadowlab/matrix_io.hpp"

namespace shadowlab {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError("config " + where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config " + where + "." + key + ": " + e.what());
  }
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError("config " + where + "." + key + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ComplexMatrix pauli_string(std::uint64_t code, unsigned qubits) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (unsigned q = 0; q < qubits; ++q) {
    const std::uint64_t digit = (code >> (2 * q)) & 3;
    ComplexMatrix factor = digit == 0   ? ComplexMatrix::Identity(2, 2)
                           : digit == 1 ? pauli_x()
                           : digit == 2 ? pauli_y()
                                        : pauli_z();
    ComplexMatrix next(out.rows() * 2, out.cols() * 2);
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * factor;
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

FamilyKind parse_family_kind(const std::string& text) {
  if (text == "random-projector") return FamilyKind::kRandomProjector;
  if (text == "random-povm") return FamilyKind::kRandomPovm;
  if (text == "pauli") return FamilyKind::kPauli;
  if (text == "commuting") return FamilyKind::kCommuting;
  if (text == "from-file") return FamilyKind::kFromFile;
  throw ValidationError("unknown POVM family '" + text + "'");
}

StateKind parse_state_kind(const std::string& text) {
  if (text == "random-mixed") return StateKind::kRandomMixed;
  if (text == "random-pure") return StateKind::kRandomPure;
  if (text == "from-file") return StateKind::kFromFile;
  throw ValidationError("unknown state kind '" + text + "'");
}

EngineKind parse_engine_kind(const std::string& text) {
  if (text == "full") return EngineKind::kFull;
  if (text == "kickback") return EngineKind::kKickback;
  if (text == "marginal") return EngineKind::kMarginal;
  if (text == "naive") return EngineKind::kNaive;
  throw ValidationError("unknown engine '" + text + "' (expected full, kickback, marginal, naive)");
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kRandomProjector: return "random-projector";
    case FamilyKind::kRandomPovm: return "random-povm";
    case FamilyKind::kPauli: return "pauli";
    case FamilyKind::kCommuting: return "commuting";
    case FamilyKind::kFromFile: return "from-file";
  }
  return "unknown";
}

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::kRandomMixed: return "random-mixed";
    case StateKind::kRandomPure: return "random-pure";
    case StateKind::kFromFile: return "from-file";
  }
  return "unknown";
}

std::string to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::kFull: return "full";
    case EngineKind::kKickback: return "kickback";
    case EngineKind::kMarginal: return "marginal";
    case EngineKind::kNaive: return "naive";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  const ProtocolSpec& p = protocol;
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (trials == 0) throw ValidationError("trials must be at least 1");
  if (instance.d < 1) throw ValidationError("instance dimension d must be positive");
  if (instance.m == 0 && instance.family != FamilyKind::kFromFile) {
    throw ValidationError("instance size m must be positive");
  }
  if (instance.rank && (*instance.rank < 1 || *instance.rank > instance.d)) {
    throw ValidationError("projector rank must lie in [1, d]");
  }
  if (instance.family == FamilyKind::kFromFile && instance.family_files.empty()) {
    throw ValidationError("family 'from-file' needs family_files");
  }
  if (instance.state == StateKind::kFromFile && instance.state_file.empty()) {
    throw ValidationError("state 'from-file' needs state_file");
  }
  p.constants.validate();
  p.lowmem.validate();
  if (p.n && *p.n == 0) throw ValidationError("override n must be positive");
  if (p.k && *p.k == 0) throw ValidationError("override k must be positive");
  if (p.p && *p.p == 0) throw ValidationError("override p must be positive");
  if (p.algorithm == Algorithm::kAlg1 && p.p) {
    throw ValidationError("override p applies to alg2 only");
  }
  if (p.algorithm == Algorithm::kAlg2 && p.k) {
    throw ValidationError("override k applies to alg1 only");
  }
  if (eta) {
    if (!(*eta >= 0.0 && *eta < 0.5)) throw ValidationError("eta must lie in [0, 1/2)");
    if (p.algorithm != Algorithm::kAlg1) throw ValidationError("eta applies to alg1 only");
    if (engine == EngineKind::kNaive) throw ValidationError("eta does not apply to the naive engine");
  }
  if (engine == EngineKind::kFull && max_amplitudes == 0) {
    throw ValidationError("max_amplitudes must be positive");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown_keys(doc,
                      {"instance", "protocol", "engine", "trials", "seed", "eta", "debias",
                       "threads", "max_amplitudes"},
                      "root");
  ExperimentConfig cfg;

  if (doc.contains("instance")) {
    const json& in = doc["instance"];
    if (!in.is_object()) throw ValidationError("config instance must be an object");
    reject_unknown_keys(in, {"d", "m", "family", "state", "rank", "seed", "family_files", "state_file"},
                        "instance");
    if (in.contains("d")) cfg.instance.d = static_cast<Index>(get_count(in, "d", "instance"));
    if (in.contains("m")) cfg.instance.m = get_count(in, "m", "instance");
    if (in.contains("family")) cfg.instance.family = parse_family_kind(get_as<std::string>(in, "family", "instance"));
    if (in.contains("state")) cfg.instance.state = parse_state_kind(get_as<std::string>(in, "state", "instance"));
    if (in.contains("rank")) cfg.instance.rank = static_cast<Index>(get_count(in, "rank", "instance"));
    if (in.contains("seed")) cfg.instance.seed = get_count(in, "seed", "instance");
    if (in.contains("family_files")) {
      for (const auto& f : get_as<std::vector<std::string>>(in, "family_files", "instance")) {
        cfg.instance.family_files.push_back(resolve(base_dir, f));
      }
    }
    if (in.contains("state_file")) {
      cfg.instance.state_file = resolve(base_dir, get_as<std::string>(in, "state_file", "instance"));
    }
  }

  if (doc.contains("protocol")) {
    const json& pr = doc["protocol"];
    if (!pr.is_object()) throw ValidationError("config protocol must be an object");
    reject_unknown_keys(pr,
                        {"algorithm", "epsilon", "delta", "constants", "lowmem", "union_bound",
                         "use_cmax", "n", "k", "p"},
                        "protocol");
    ProtocolSpec& p = cfg.protocol;
    if (pr.contains("algorithm")) p.algorithm = parse_algorithm(get_as<std::string>(pr, "algorithm", "protocol"));
    if (pr.contains("epsilon")) p.epsilon = get_as<double>(pr, "epsilon", "protocol");
    if (pr.contains("delta")) p.delta = get_as<double>(pr, "delta", "protocol");
    if (pr.contains("union_bound")) p.union_bound = get_as<bool>(pr, "union_bound", "protocol");
    if (pr.contains("use_cmax")) p.use_cmax = get_as<bool>(pr, "use_cmax", "protocol");
    if (pr.contains("n")) p.n = get_count(pr, "n", "protocol");
    if (pr.contains("k")) p.k = get_count(pr, "k", "protocol");
    if (pr.contains("p")) p.p = get_count(pr, "p", "protocol");
    if (pr.contains("constants")) {
      const json& c = pr["constants"];
      reject_unknown_keys(c, {"c0", "c1", "c2", "C"}, "protocol.constants");
      if (c.contains("c0")) p.constants.c0 = get_as<double>(c, "c0", "protocol.constants");
      if (c.contains("c1")) p.constants.c1 = get_as<double>(c, "c1", "protocol.constants");
      if (c.contains("c2")) p.constants.c2 = get_as<double>(c, "c2", "protocol.constants");
      if (c.contains("C")) p.constants.C = get_as<double>(c, "C", "protocol.constants");
    }
    if (pr.contains("lowmem")) {
      const json& c = pr["lowmem"];
      reject_unknown_keys(c, {"C0", "C1", "C3", "C4", "C5"}, "protocol.lowmem");
      if (c.contains("C0")) p.lowmem.C0 = get_as<double>(c, "C0", "protocol.lowmem");
      if (c.contains("C1")) p.lowmem.C1 = get_as<double>(c, "C1", "protocol.lowmem");
      if (c.contains("C3")) p.lowmem.C3 = get_as<double>(c, "C3", "protocol.lowmem");
      if (c.contains("C4")) p.lowmem.C4 = get_as<double>(c, "C4", "protocol.lowmem");
      if (c.contains("C5")) p.lowmem.C5 = get_as<double>(c, "C5", "protocol.lowmem");
    }
  }

  if (doc.contains("engine")) cfg.engine = parse_engine_kind(get_as<std::string>(doc, "engine", "root"));
  if (doc.contains("trials")) cfg.trials = get_count(doc, "trials", "root");
  if (doc.contains("seed")) cfg.seed = get_count(doc, "seed", "root");
  if (doc.contains("eta") && !doc["eta"].is_null()) cfg.eta = get_as<double>(doc, "eta", "root");
  if (doc.contains("debias")) cfg.debias = get_as<bool>(doc, "debias", "root");
  if (doc.contains("threads")) cfg.threads = static_cast<unsigned>(get_count(doc, "threads", "root"));
  if (doc.contains("max_amplitudes")) cfg.max_amplitudes = get_count(doc, "max_amplitudes", "root");
  if (cfg.instance.family == FamilyKind::kFromFile && !doc["instance"].contains("m")) {
    cfg.instance.m = cfg.instance.family_files.size();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str(), path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& cfg) {
  json instance = {
      {"d", cfg.instance.d},
      {"m", cfg.instance.m},
      {"family", to_string(cfg.instance.family)},
      {"state", to_string(cfg.instance.state)},
      {"seed", cfg.instance.seed},
  };
  if (cfg.instance.rank) instance["rank"] = *cfg.instance.rank;
  if (!cfg.instance.family_files.empty()) {
    json files = json::array();
    for (const auto& f : cfg.instance.family_files) files.push_back(f.string());
    instance["family_files"] = files;
  }
  if (!cfg.instance.state_file.empty()) instance["state_file"] = cfg.instance.state_file.string();

  const ProtocolSpec& p = cfg.protocol;
  json protocol = {
      {"algorithm", to_string(p.algorithm)},
      {"epsilon", p.epsilon},
      {"delta", p.delta},
      {"union_bound", p.union_bound},
      {"use_cmax", p.use_cmax},
      {"constants", {{"c0", p.constants.c0}, {"c1", p.constants.c1}, {"c2", p.constants.c2}, {"C", p.constants.C}}},
      {"lowmem",
       {{"C0", p.lowmem.C0}, {"C1", p.lowmem.C1}, {"C3", p.lowmem.C3}, {"C4", p.lowmem.C4}, {"C5", p.lowmem.C5}}},
  };
  if (p.n) protocol["n"] = *p.n;
  if (p.k) protocol["k"] = *p.k;
  if (p.p) protocol["p"] = *p.p;

  json doc = {
      {"instance", instance},
      {"protocol", protocol},
      {"engine", to_string(cfg.engine)},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"eta", cfg.eta ? json(*cfg.eta) : json(nullptr)},
      {"debias", cfg.debias},
      {"threads", cfg.threads},
      {"max_amplitudes", cfg.max_amplitudes},
  };
  return doc.dump(2) + "\n";
}

Instance build_instance(const InstanceSpec& spec) {
  Rng rng(spec.seed);
  std::vector<PovmElement> ms;
  Index d = spec.d;
  if (spec.family == FamilyKind::kFromFile) {
    if (spec.family_files.empty()) throw ValidationError("family 'from-file' needs family_files");
    for (const auto& f : spec.family_files) ms.emplace_back(load_matrix(f));
    d = ms.front().dim();
  }

  // The state is drawn before the family so that families of different sizes
  // from one seed share a prefix.
  std::optional<DensityMatrix> rho;
  switch (spec.state) {
    case StateKind::kRandomMixed: rho = random_density(d, d, rng); break;
    case StateKind::kRandomPure: rho = random_density(d, 1, rng); break;
    case StateKind::kFromFile: rho = DensityMatrix(load_matrix(spec.state_file)); break;
  }
  if (rho->dim() != d) throw DimensionMismatch("state and POVM family dimensions differ");

  switch (spec.family) {
    case FamilyKind::kRandomProjector: {
      const Index rank = spec.rank.value_or(std::max<Index>(1, d / 2));
      for (std::uint64_t i = 0; i < spec.m; ++i) ms.push_back(random_projector(d, rank, rng));
      break;
    }
    case FamilyKind::kRandomPovm:
      for (std::uint64_t i = 0; i < spec.m; ++i) ms.push_back(random_povm_element(d, rng));
      break;
    case FamilyKind::kPauli: {
      if (d < 2 || (d & (d - 1)) != 0) throw ValidationError("pauli family needs d a power of two");
      unsigned qubits = 0;
      while ((Index{1} << qubits) < d) ++qubits;
      std::uniform_int_distribution<std::uint64_t> pick(1, (std::uint64_t{1} << (2 * qubits)) - 1);
      const ComplexMatrix id = ComplexMatrix::Identity(d, d);
      for (std::uint64_t i = 0; i < spec.m; ++i) {
        ms.emplace_back(0.5 * (id + pauli_string(pick(rng), qubits)));
      }
      break;
    }
    case FamilyKind::kCommuting: {
      const ComplexMatrix u = haar_unitary(d, rng);
      std::bernoulli_distribution bit(0.5);
      for (std::uint64_t i = 0; i < spec.m; ++i) {
        RealVector diag(d);
        for (Index j = 0; j < d; ++j) diag(j) = bit(rng) ? 1.0 : 0.0;
        ms.emplace_back(u * diag.cast<Complex>().asDiagonal() * u.adjoint());
      }
      break;
    }
    case FamilyKind::kFromFile:
      break;
  }
  for (const PovmElement& m : ms) {
    if (m.dim() != d) throw DimensionMismatch("POVM family members have different dimensions");
  }

  Instance inst{*rho, std::move(ms), {}};
  for (const PovmElement& m : inst.ms) inst.truths.push_back(expectation(m, inst.rho));
  return inst;
}

ResolvedPlan resolve_plan(const ExperimentConfig& config, const Instance& instance) {
  const ProtocolSpec& p = config.protocol;
  PlanOptions options;
  options.union_bound = p.union_bound;
  const std::uint64_t m = instance.ms.size();
  ResolvedPlan out;
  std::ostringstream os;
  bool planner_ok;

  if (p.algorithm == Algorithm::kAlg1) {
    std::optional<double> cmax;
    if (p.use_cmax) cmax = cmax_of_family(instance.ms);
    const Alg1Plan plan = plan_alg1(m, p.epsilon, p.delta, p.constants, cmax, options);
    os << format_plan(plan);
    out.params = round_params(plan);
    planner_ok = plan.feasible;
    if (p.k) out.params.k = *p.k;
    if (p.n) out.params.n = *p.n;
    out.feasible = planner_ok || (p.n && p.k);
  } else {
    const Alg2Plan plan = plan_alg2(m, p.epsilon, p.delta, p.lowmem, options);
    os << format_plan(plan);
    out.params = round_params(plan);
    planner_ok = plan.feasible;
    if (p.n) out.params.n = *p.n;
    if (p.p) out.params.p = *p.p;
    out.feasible = planner_ok || (p.n && p.p);
  }
  if (p.n) os << "override n: " << *p.n << "\n";
  if (p.k) os << "override k: " << *p.k << "\n";
  if (p.p) os << "override p: " << *p.p << "\n";
  out.report = os.str();
  if (!out.feasible) throw InfeasiblePlan("planner found no feasible parameters:\n" + out.report);
  out.params.validate();
  return out;
}

}  // namespace shadowlab
