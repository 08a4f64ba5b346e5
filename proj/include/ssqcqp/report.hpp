#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssqcqp/bench.hpp"
#include "ssqcqp/flow.hpp"
#include "ssqcqp/solver.hpp"

namespace ssqcqp {

using Json = nlohmann::json;

inline constexpr const char* kTraceCsvHeader = "k,f,max_g,u_norm_sq,step,active_count,halvings,wall_ns";

// JSON has no encoding for ±inf/NaN; they travel as strings.
namespace detail::io {

inline Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("expected a number in result document");
}

inline std::string format17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail::io

inline Json to_json(const TraceRecord& r) {
  using detail::io::number;
  return {{"k", r.k},
          {"f", number(r.f)},
          {"max_g", number(r.max_g)},
          {"u_norm_sq", number(r.u_norm_sq)},
          {"step", number(r.step)},
          {"active_count", r.active_count},
          {"halvings", r.halvings},
          {"wall_ns", r.wall_ns},
          {"subproblem_ns", r.subproblem_ns}};
}

inline TraceRecord trace_record_from_json(const Json& j) {
  using detail::io::to_double;
  TraceRecord r;
  r.k = j.at("k").get<Index>();
  r.f = to_double(j.at("f"));
  r.max_g = to_double(j.at("max_g"));
  r.u_norm_sq = to_double(j.at("u_norm_sq"));
  r.step = to_double(j.at("step"));
  r.active_count = j.at("active_count").get<Index>();
  r.halvings = j.at("halvings").get<int>();
  r.wall_ns = j.at("wall_ns").get<std::int64_t>();
  r.subproblem_ns = j.value("subproblem_ns", std::int64_t{0});
  return r;
}

inline Json to_json(const SolverConfig& c) {
  return {{"alpha", c.alpha},
          {"gamma", c.gamma},
          {"w_floor", c.w_floor},
          {"epsilon", c.epsilon},
          {"delta", c.delta},
          {"q_percent", c.q_percent},
          {"max_iter", c.max_iter},
          {"max_halvings", c.max_halvings},
          {"feas_tol", c.feas_tol},
          {"adaptive_w", c.adaptive_w},
          {"tol_sub", c.tol_sub},
          {"tol_kkt", c.tol_kkt},
          {"subproblem_retries", c.subproblem_retries}};
}

inline SolverConfig solver_config_from_json(const Json& j) {
  SolverConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.w_floor = j.value("w_floor", c.w_floor);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.delta = j.value("delta", c.delta);
  c.q_percent = j.value("q_percent", c.q_percent);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.max_halvings = j.value("max_halvings", c.max_halvings);
  c.feas_tol = j.value("feas_tol", c.feas_tol);
  c.adaptive_w = j.value("adaptive_w", c.adaptive_w);
  c.tol_sub = j.value("tol_sub", c.tol_sub);
  c.tol_kkt = j.value("tol_kkt", c.tol_kkt);
  c.subproblem_retries = j.value("subproblem_retries", c.subproblem_retries);
  return c;
}

inline Json to_json(const KktResidual& k) {
  using detail::io::number;
  return {{"stationarity", number(k.stationarity)},
          {"primal", number(k.primal)},
          {"dual", number(k.dual)},
          {"complementarity", number(k.complementarity)}};
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(detail::io::number(v[i]));
  return a;
}

inline Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i)
    v[i] = detail::io::to_double(j.at(static_cast<std::size_t>(i)));
  return v;
}

/// Everything a run leaves on disk.
struct ResultDocument {
  std::string problem;
  Index n = 0;
  Index m = 0;
  Json problem_params = Json::object();  // registry parameters (nav only)
  std::string variant;
  Json config = Json::object();
  std::string status;
  std::string message;
  Vector x_final;
  Vector multipliers;
  std::optional<KktResidual> kkt;
  std::vector<TraceRecord> trace;
  std::optional<double> integral_half_u_sq;  // flow runs
};

inline Json to_json(const ResultDocument& d) {
  Json j;
  j["problem"] = {{"name", d.problem}, {"n", d.n}, {"m", d.m}, {"params", d.problem_params}};
  j["variant"] = d.variant;
  j["config"] = d.config;
  j["status"] = d.status;
  if (!d.message.empty()) j["message"] = d.message;
  j["x_final"] = to_json(d.x_final);
  if (d.multipliers.size() > 0) j["multipliers"] = to_json(d.multipliers);
  j["kkt"] = d.kkt ? to_json(*d.kkt) : Json(nullptr);
  if (d.integral_half_u_sq) j["integral_half_u_sq"] = detail::io::number(*d.integral_half_u_sq);
  Json tr = Json::array();
  for (const auto& r : d.trace) tr.push_back(to_json(r));
  j["trace"] = std::move(tr);
  return j;
}

inline ResultDocument result_from_json(const Json& j) {
  using detail::io::to_double;
  ResultDocument d;
  const Json& p = j.at("problem");
  d.problem = p.at("name").get<std::string>();
  d.n = p.at("n").get<Index>();
  d.m = p.at("m").get<Index>();
  d.problem_params = p.value("params", Json::object());
  d.variant = j.at("variant").get<std::string>();
  d.config = j.at("config");
  d.status = j.at("status").get<std::string>();
  d.message = j.value("message", std::string{});
  d.x_final = vector_from_json(j.at("x_final"));
  if (j.contains("multipliers")) d.multipliers = vector_from_json(j.at("multipliers"));
  if (const Json& k = j.at("kkt"); !k.is_null())
    d.kkt = KktResidual{to_double(k.at("stationarity")), to_double(k.at("primal")),
                        to_double(k.at("dual")), to_double(k.at("complementarity"))};
  if (j.contains("integral_half_u_sq")) d.integral_half_u_sq = to_double(j["integral_half_u_sq"]);
  for (const auto& r : j.at("trace")) d.trace.push_back(trace_record_from_json(r));
  return d;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  using detail::io::format17;
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace)
    os << r.k << ',' << format17(r.f) << ',' << format17(r.max_g) << ','
       << format17(r.u_norm_sq) << ',' << format17(r.step) << ',' << r.active_count << ','
       << r.halvings << ',' << r.wall_ns << '\n';
}

inline std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceCsvHeader)
    throw std::runtime_error("trace csv: unexpected header");
  std::vector<TraceRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != 8) throw std::runtime_error("trace csv: expected 8 columns");
    TraceRecord r;
    r.k = std::stoll(cells[0]);
    r.f = std::stod(cells[1]);
    r.max_g = std::stod(cells[2]);
    r.u_norm_sq = std::stod(cells[3]);
    r.step = std::stod(cells[4]);
    r.active_count = std::stoll(cells[5]);
    r.halvings = std::stoi(cells[6]);
    r.wall_ns = std::stoll(cells[7]);
    out.push_back(r);
  }
  return out;
}

/// Flow nodes as trace rows: step = h, active_count = m, no halvings.
inline std::vector<TraceRecord> flow_trace_records(const FlowTrace& ft, double h, Index m) {
  std::vector<TraceRecord> out;
  out.reserve(ft.times.size());
  for (std::size_t k = 0; k < ft.times.size(); ++k) {
    TraceRecord r;
    r.k = static_cast<Index>(k);
    r.f = ft.f_values[k];
    r.max_g = ft.max_g[k];
    r.u_norm_sq = ft.u_norm_sq[k];
    r.step = h;
    r.active_count = m;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot series

enum class Series { objective, max_g, min_u_sq_prefix, active_count, pairwise_distances };

inline std::optional<Series> parse_series(const std::string& s) {
  if (s == "objective") return Series::objective;
  if (s == "max_g") return Series::max_g;
  if (s == "min_u_sq_prefix") return Series::min_u_sq_prefix;
  if (s == "active_count") return Series::active_count;
  if (s == "pairwise_distances") return Series::pairwise_distances;
  return std::nullopt;
}

/// Running minimum of ‖u‖² over the trace.
inline std::vector<double> min_prefix(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = best = std::min(best, v[i]);
  return out;
}

class MissingSeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A table of named columns, all of one length.
struct SeriesTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline NavigationParams navigation_params_from(const ResultDocument& d) {
  if (d.problem != "nav") throw MissingSeriesError("pairwise_distances needs a nav result");
  const Json& p = d.problem_params;
  return make_navigation_params(p.value("agents", 4), p.value("horizon", 40),
                                p.value("dmin", 0.25));
}

/// Trace series come from `trace`; pairwise distances are recomputed from
/// the final inputs of a nav result and need `doc`.
inline SeriesTable export_series(const std::vector<TraceRecord>& trace,
                                 const ResultDocument* doc, Series s) {
  SeriesTable t;
  std::vector<double> k;
  for (const auto& r : trace) k.push_back(static_cast<double>(r.k));
  auto column = [&](auto get) {
    std::vector<double> c;
    for (const auto& r : trace) c.push_back(static_cast<double>(get(r)));
    return c;
  };
  switch (s) {
    case Series::objective:
      t.names = {"k", "objective"};
      t.columns = {k, column([](const TraceRecord& r) { return r.f; })};
      break;
    case Series::max_g:
      t.names = {"k", "max_g"};
      t.columns = {k, column([](const TraceRecord& r) { return r.max_g; })};
      break;
    case Series::min_u_sq_prefix:
      t.names = {"k", "min_u_sq_prefix"};
      t.columns = {k, min_prefix(column([](const TraceRecord& r) { return r.u_norm_sq; }))};
      break;
    case Series::active_count:
      t.names = {"k", "active_count"};
      t.columns = {k, column([](const TraceRecord& r) { return r.active_count; })};
      break;
    case Series::pairwise_distances: {
      if (!doc) throw MissingSeriesError("pairwise_distances needs the result document");
      const NavigationParams params = navigation_params_from(*doc);
      if (doc->x_final.size() != params.num_variables())
        throw MissingSeriesError("result x_final does not match the nav dimensions");
      const Matrix D = pairwise_distances(params, doc->x_final);
      if (D.rows() == 0) throw MissingSeriesError("pairwise_distances needs two or more agents");
      t.names = {"t"};
      std::vector<double> steps;
      for (Index c = 0; c < D.cols(); ++c) steps.push_back(static_cast<double>(c + 1));
      t.columns.push_back(steps);
      for (Index r = 0; r < D.rows(); ++r) {
        const auto [a, b] = detail::nav::pair_agents(params, r);
        t.names.push_back("d_" + std::to_string(a) + "_" + std::to_string(b));
        auto& col = t.columns.emplace_back();
        for (Index c = 0; c < D.cols(); ++c) col.push_back(D(r, c));
      }
      break;
    }
  }
  return t;
}

inline void write_series_csv(std::ostream& os, const SeriesTable& t) {
  for (std::size_t c = 0; c < t.names.size(); ++c) os << (c ? "," : "") << t.names[c];
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      os << (c ? "," : "") << detail::io::format17(t.columns[c][r]);
    os << '\n';
  }
}

inline Json to_json(const SeriesTable& t) {
  Json j = Json::object();
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    Json col = Json::array();
    for (double v : t.columns[c]) col.push_back(detail::io::number(v));
    j[t.names[c]] = std::move(col);
  }
  return j;
}

}  // namespace ssqcqp
