// ssqcqp: run the feasible sequential QCQP solvers on registered problems and
// export plot data from the results.
//
// Exit codes:
//   0  run finished (converged, max_iter or flow completed) / export written
//   2  usage error
//   3  unknown problem
//   4  infeasible start
//   5  line search failure
//   6  subproblem failure (or the flow left the feasible set)
//   7  file I/O error
//   8  requested series not available

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ssqcqp/ssqcqp.hpp"

namespace {

using namespace ssqcqp;

enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kUnknownProblem = 3,
  kInfeasibleStart = 4,
  kLineSearch = 5,
  kSubproblem = 6,
  kIo = 7,
  kMissingSeries = 8,
};

struct SolveArgs {
  std::string problem;
  std::string variant = "full";
  SolverConfig cfg;
  RegistryOptions nav;
  double flow_h = 1e-3;
  double flow_T = 10.0;
  std::string out;
  std::string format = "json";
};

struct ExportArgs {
  std::string in;
  std::string series;
  std::string out;
  std::string format = "csv";
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json config_echo(const SolveArgs& a) {
  Json c = to_json(a.cfg);
  if (a.variant == "flow") {
    c["flow_h"] = a.flow_h;
    c["flow_T"] = a.flow_T;
  }
  return c;
}

int cmd_solve(const SolveArgs& a) {
  const auto bench = find_problem(a.problem, a.nav);
  if (!bench) {
    std::cerr << "error: unknown problem '" << a.problem << "' (known:";
    for (const auto& k : registered_problems()) std::cerr << ' ' << k;
    std::cerr << ")\n";
    return kUnknownProblem;
  }
  const Problem& p = bench->problem;

  ResultDocument doc;
  doc.problem = a.problem;
  doc.n = p.n;
  doc.m = p.m;
  if (a.problem == "nav")
    doc.problem_params = {{"agents", a.nav.agents},
                          {"horizon", a.nav.horizon},
                          {"dmin", a.nav.collision_radius}};
  doc.variant = a.variant;
  doc.config = config_echo(a);

  int code = kOk;
  try {
    if (a.variant == "flow") {
      const auto t0 = std::chrono::steady_clock::now();
      const FlowTrace ft = integrate_flow(p, bench->start, a.flow_h, a.flow_T, a.cfg);
      doc.status = "completed";
      doc.trace = flow_trace_records(ft, a.flow_h, p.m);
      if (!doc.trace.empty()) doc.trace.back().wall_ns = detail::elapsed_ns(t0);
      doc.x_final = ft.states.back();
      doc.integral_half_u_sq = ft.integral_half_u_sq;
    } else {
      SolveResult r;
      if (a.variant == "full")
        r = ss_qcqp(p, bench->start, a.cfg);
      else if (a.variant == "active-set")
        r = ss_qcqp_as(p, bench->start, a.cfg);
      else
        r = safe_gradient_qp(p, bench->start, a.cfg);
      doc.status = to_string(r.status);
      doc.message = r.message;
      doc.x_final = r.x_final;
      doc.multipliers = r.multipliers;
      doc.kkt = r.final_kkt;
      doc.trace = std::move(r.trace);
      if (r.status == SolveStatus::line_search_failure) code = kLineSearch;
      if (r.status == SolveStatus::subproblem_failure) code = kSubproblem;
    }
  } catch (const InfeasibleStartError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasibleStart;
  } catch (const FlowBreachError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSubproblem;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSubproblem;
  }

  const std::string json_text = to_json(doc).dump(2) + "\n";
  if (a.out.empty()) {
    if (a.format == "csv")
      write_trace_csv(std::cout, doc.trace);
    else
      std::cout << json_text;
  } else if (a.format == "csv") {
    std::ostringstream csv;
    write_trace_csv(csv, doc.trace);
    write_file(a.out, csv.str());
    write_file(a.out + ".result.json", json_text);
  } else {
    write_file(a.out, json_text);
  }

  std::cerr << a.problem << " (n=" << p.n << ", m=" << p.m << ") " << a.variant << ": "
            << doc.status << " after " << doc.trace.size() << " records";
  if (!doc.trace.empty()) std::cerr << ", f = " << doc.trace.back().f;
  if (!doc.message.empty()) std::cerr << " [" << doc.message << "]";
  std::cerr << '\n';
  return code;
}

int cmd_export(const ExportArgs& a) {
  const auto series = parse_series(a.series);
  if (!series) {
    std::cerr << "error: unknown series '" << a.series << "'\n";
    return kMissingSeries;
  }
  std::vector<TraceRecord> trace;
  std::optional<ResultDocument> doc;
  const bool is_csv = a.in.size() >= 4 && a.in.compare(a.in.size() - 4, 4, ".csv") == 0;
  if (is_csv) {
    std::istringstream is(read_file(a.in));
    trace = read_trace_csv(is);
    if (std::filesystem::exists(a.in + ".result.json"))
      doc = result_from_json(Json::parse(read_file(a.in + ".result.json")));
  } else {
    doc = result_from_json(Json::parse(read_file(a.in)));
    trace = doc->trace;
  }

  SeriesTable t;
  try {
    t = export_series(trace, doc ? &*doc : nullptr, *series);
  } catch (const MissingSeriesError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingSeries;
  }
  std::ostringstream os;
  if (a.format == "json")
    os << to_json(t).dump(2) << '\n';
  else
    write_series_csv(os, t);
  if (a.out.empty())
    std::cout << os.str();
  else
    write_file(a.out, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasible sequential QCQP solver"};
  app.require_subcommand(1);

  SolveArgs s;
  auto* solve = app.add_subcommand("solve", "run a solver on a registered problem");
  solve->add_option("--problem", s.problem, "ball-linear, box-qp, rosenbrock-ball or nav")
      ->required();
  solve->add_option("--variant", s.variant)
      ->check(CLI::IsMember({"full", "active-set", "flow", "qp-baseline"}));
  solve->add_option("--alpha", s.cfg.alpha);
  solve->add_option("--gamma", s.cfg.gamma);
  solve->add_option("--w-floor", s.cfg.w_floor);
  solve->add_option("--epsilon", s.cfg.epsilon);
  auto* delta = solve->add_option("--delta", s.cfg.delta, "active-set only");
  auto* q = solve->add_option("--q-percent", s.cfg.q_percent, "active-set only");
  solve->add_option("--max-iter", s.cfg.max_iter);
  auto* agents = solve->add_option("--agents", s.nav.agents, "nav only");
  auto* horizon = solve->add_option("--horizon", s.nav.horizon, "nav only");
  auto* dmin = solve->add_option("--dmin", s.nav.collision_radius, "nav only");
  auto* fh = solve->add_option("--flow-h", s.flow_h, "flow only");
  auto* fT = solve->add_option("--flow-T", s.flow_T, "flow only");
  solve->add_option("--out", s.out, "output path (stdout when omitted)");
  solve->add_option("--format", s.format)->check(CLI::IsMember({"csv", "json"}));

  ExportArgs e;
  auto* exp = app.add_subcommand("export", "extract a plot series from a result");
  exp->add_option("--in", e.in, "result .json or trace .csv")->required();
  exp->add_option("--series", e.series,
                  "objective, max_g, min_u_sq_prefix, active_count or pairwise_distances")
      ->required();
  exp->add_option("--out", e.out, "output path (stdout when omitted)");
  exp->add_option("--format", e.format)->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return err.get_exit_code() == 0 ? rc : kUsage;
  }

  try {
    if (*solve) {
      auto usage = [](const std::string& msg) {
        std::cerr << "error: " << msg << '\n';
        return kUsage;
      };
      if (s.variant != "active-set" && (delta->count() || q->count()))
        return usage("--delta and --q-percent apply to --variant active-set only");
      if (s.variant != "flow" && (fh->count() || fT->count()))
        return usage("--flow-h and --flow-T apply to --variant flow only");
      if (s.problem != "nav" && (agents->count() || horizon->count() || dmin->count()))
        return usage("--agents, --horizon and --dmin apply to --problem nav only");
      try {
        s.cfg.validate();
        if (s.problem == "nav") make_navigation_params(s.nav.agents, s.nav.horizon,
                                                       s.nav.collision_radius).validate();
      } catch (const std::invalid_argument& err) {
        return usage(err.what());
      }
      if (s.variant == "flow" && !(s.flow_h > 0.0 && s.flow_T > 0.0))
        return usage("--flow-h and --flow-T must be positive");
      return cmd_solve(s);
    }
    return cmd_export(e);
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kIo;
  } catch (const Json::exception& err) {
    std::cerr << "error: malformed result document: " << err.what() << '\n';
    return kIo;
  } catch (const std::runtime_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kIo;
  }
}
