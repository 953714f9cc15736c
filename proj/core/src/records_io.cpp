#include "shadowlab/records_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

constexpr const char* kRecordsHeader = "trial,index,estimate,truth,abs_error,within,engine,seed";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::uint64_t parse_u64(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw IoError("records line " + std::to_string(line_no) + ": bad integer '" + text + "'");
  }
}

double parse_double(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw IoError("records line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string format_records_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << kRecordsHeader << '\n';
  for (const TrialRecord& r : records) {
    out << r.trial << ',' << r.index << ',' << r.estimate << ',' << r.truth << ',' << r.abs_error
        << ',' << (r.within ? 1 : 0) << ',' << to_string(r.engine) << ',' << r.seed << '\n';
  }
  return out.str();
}

std::vector<TrialRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kRecordsHeader) {
    throw IoError("records: missing or unexpected header");
  }
  std::vector<TrialRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) {
      throw IoError("records line " + std::to_string(line_no) + ": expected 8 fields");
    }
    TrialRecord r;
    r.trial = parse_u64(f[0], line_no);
    r.index = parse_u64(f[1], line_no);
    r.estimate = parse_double(f[2], line_no);
    r.truth = parse_double(f[3], line_no);
    r.abs_error = parse_double(f[4], line_no);
    if (f[5] != "0" && f[5] != "1") {
      throw IoError("records line " + std::to_string(line_no) + ": within must be 0 or 1");
    }
    r.within = f[5] == "1";
    try {
      r.engine = parse_engine_kind(f[6]);
    } catch (const ValidationError&) {
      throw IoError("records line " + std::to_string(line_no) + ": unknown engine '" + f[6] + "'");
    }
    r.seed = parse_u64(f[7], line_no);
    records.push_back(r);
  }
  return records;
}

void write_records_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  write_text(path, format_records_csv(records));
}

std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path) {
  return parse_records_csv(read_text(path));
}

std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result) {
  const ExperimentSummary& s = result.summary;
  std::ostringstream out;
  out << "# config\n" << format_config(config) << "\n\n";
  out << "# plan\n" << result.plan_report;
  if (!result.plan_report.empty() && result.plan_report.back() != '\n') out << '\n';
  out << "algorithm " << to_string(result.params.algorithm) << "  n " << result.params.n;
  if (result.params.algorithm == Algorithm::kAlg1) {
    out << "  k " << result.params.k;
  } else {
    out << "  p " << result.params.p;
  }
  out << "\n\n# summary\n";
  out << std::setprecision(6);
  out << "engine " << to_string(config.engine) << "  base seed " << config.seed << "  trials "
      << s.trials << "  m " << s.m << "  epsilon " << s.epsilon << '\n';
  out << "copies per trial " << s.copies_per_trial << '\n';
  out << "mean per-index failure rate " << s.mean_failure_rate << '\n';
  out << "max per-index failure rate " << s.max_failure_rate << '\n';
  out << "simultaneous failure rate " << s.simultaneous_failure_rate << '\n';
  out << "mean |error| " << s.mean_error << "  max |error| " << s.max_error << '\n';
  out << "mean bias " << s.mean_estimate_bias << '\n';
  if (config.engine == EngineKind::kKickback) {
    out << "guard violations " << s.guard_violations << '\n';
    out << "note: kickback outputs have exact per-index marginals; the joint law across indices "
           "is not claimed\n";
  }
  out << "\nindex,truth,failure_rate,mean_error,max_error\n";
  for (const IndexSummary& is : s.per_index) {
    out << is.index << ',' << is.truth << ',' << is.failure_rate << ',' << is.mean_error << ','
        << is.max_error << '\n';
  }
  return out.str();
}

void write_summary(const std::filesystem::path& path, const ExperimentConfig& config,
                   const ExperimentResult& result) {
  write_text(path, format_summary(config, result));
}

std::string format_trajectory_csv(const KickbackTrajectory& trajectory) {
  std::ostringstream out;
  out << "# per-round marginals along one kickback trajectory; the joint law across rounds is "
         "not claimed\n";
  out << "round,lambda,estimate,truth,S1,S2_bound,cum_deviation\n";
  out << std::setprecision(17);
  for (const TrajectoryRound& r : trajectory.rounds) {
    out << r.outcome.round << ',' << r.lambda << ',' << r.outcome.estimate << ',' << r.truth << ','
        << r.s1 << ',' << r.s2_bound << ',' << r.cum_deviation << '\n';
  }
  return out.str();
}

void write_trajectory_csv(const std::filesystem::path& path, const KickbackTrajectory& trajectory) {
  write_text(path, format_trajectory_csv(trajectory));
}

}  // namespace shadowlab
