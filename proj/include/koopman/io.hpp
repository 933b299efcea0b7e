#pragma once

// File formats: snapshot CSV, plain matrix CSV, grid CSV, and JSON
// serialization of dictionaries, eigenpair reports and SSD results.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/edmd.hpp"
#include "koopman/errors.hpp"
#include "koopman/ssd.hpp"
#include "koopman/systems.hpp"

namespace koopman::io {

using nlohmann::json;

/// 17 significant digits; parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  koopman::detail::require(ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v),
                           ErrorCode::InvalidInput,
                           "csv line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

struct Table {
  std::vector<std::string> header;
  RealMatrix values;
};

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  koopman::detail::require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "'");
  Table t;
  std::string line;
  koopman::detail::require(static_cast<bool>(std::getline(in, line)), ErrorCode::InvalidInput,
                           "'" + path + "': missing header line");
  for (auto f : split(line)) t.header.emplace_back(trim(f));
  const std::size_t width = t.header.size();
  std::vector<double> data;
  std::size_t line_no = 1, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    koopman::detail::require(fields.size() == width, ErrorCode::InvalidInput,
                             "'" + path + "' line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(width) + " fields");
    for (auto f : fields) data.push_back(parse_double(f, line_no));
    ++rows;
  }
  t.values.resize(static_cast<Index>(rows), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c)
      t.values(static_cast<Index>(r), static_cast<Index>(c)) = data[r * width + c];
  return t;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  koopman::detail::require(static_cast<bool>(out), ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  koopman::detail::require(static_cast<bool>(out), ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

inline void write_snapshots_csv(const std::string& path, const SnapshotSet& s) {
  s.validate();
  auto out = detail::open_for_write(path);
  const Index n = s.state_dim();
  for (Index i = 0; i < n; ++i) out << (i ? "," : "") << "x_" << (i + 1);
  for (Index i = 0; i < n; ++i) out << ",y_" << (i + 1);
  out << '\n';
  for (Index r = 0; r < s.count(); ++r) {
    for (Index i = 0; i < n; ++i) out << (i ? "," : "") << format_double(s.x(r, i));
    for (Index i = 0; i < n; ++i) out << ',' << format_double(s.y(r, i));
    out << '\n';
  }
  detail::finish(out, path);
}

inline SnapshotSet read_snapshots_csv(const std::string& path) {
  const auto t = detail::read_table(path);
  const std::size_t width = t.header.size();
  koopman::detail::require(width >= 2 && width % 2 == 0, ErrorCode::InvalidInput,
                           "'" + path + "': snapshot header must be x_1..x_n,y_1..y_n");
  const std::size_t n = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    koopman::detail::require(t.header[i] == "x_" + std::to_string(i + 1) &&
                                 t.header[n + i] == "y_" + std::to_string(i + 1),
                             ErrorCode::InvalidInput, "'" + path + "': snapshot header must be x_1..x_n,y_1..y_n");
  }
  koopman::detail::require(t.values.rows() >= 1, ErrorCode::InvalidInput, "'" + path + "': no samples");
  SnapshotSet s;
  s.x = t.values.leftCols(static_cast<Index>(n));
  s.y = t.values.rightCols(static_cast<Index>(n));
  s.provenance.source = "ingested";
  return s;
}

/// Plain numeric matrix with a single header row (column names are not interpreted).
inline RealMatrix read_matrix_csv(const std::string& path) {
  auto t = detail::read_table(path);
  koopman::detail::require(t.values.rows() >= 1, ErrorCode::InvalidInput, "'" + path + "': no rows");
  return std::move(t.values);
}

inline void write_matrix_csv(const std::string& path, const RealMatrix& m, const std::string& prefix = "d_") {
  auto out = detail::open_for_write(path);
  for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << prefix << (j + 1);
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(r, j));
    out << '\n';
  }
  detail::finish(out, path);
}

inline void write_grid_csv(const std::string& path, const EigenfunctionGrid& g) {
  auto out = detail::open_for_write(path);
  for (Index i = 0; i < g.points.cols(); ++i) out << "x_" << (i + 1) << ',';
  out << "abs,angle\n";
  for (Index r = 0; r < g.points.rows(); ++r) {
    for (Index i = 0; i < g.points.cols(); ++i) out << format_double(g.points(r, i)) << ',';
    out << format_double(g.magnitude(r)) << ',' << format_double(g.angle(r)) << '\n';
  }
  detail::finish(out, path);
}

// ---------------------------------------------------------------------------
// JSON

inline json matrix_to_json(const RealMatrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline RealMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  koopman::detail::require(rows >= 0 && cols >= 0 && static_cast<Index>(data.size()) == rows * cols,
                           ErrorCode::InvalidInput, "matrix json: data length does not match shape");
  RealMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline json box_to_json(const Box& box) {
  json arr = json::array();
  for (const auto& iv : box) arr.push_back({iv.lo, iv.hi});
  return arr;
}

/// Monomial base, optional derived coefficients, or raw precomputed matrices.
using AnyDictionary = std::variant<MonomialDictionary, DerivedDictionary>;

inline json dictionary_to_json(const MonomialDictionary& d) {
  return json{{"kind", "monomial"}, {"state_dim", d.state_dim()}, {"size", d.size()}, {"exponents", d.exponents()}};
}

inline json dictionary_to_json(const DerivedDictionary& d) {
  json j = dictionary_to_json(d.base());
  j["kind"] = "derived";
  j["size"] = d.size();
  j["coefficients"] = matrix_to_json(d.coeffs());
  return j;
}

inline json dictionary_to_json(const AnyDictionary& d) {
  return std::visit([](const auto& x) { return dictionary_to_json(x); }, d);
}

inline AnyDictionary dictionary_from_json(const json& j) {
  try {
    const auto n = j.at("state_dim").get<Index>();
    auto exps = j.at("exponents").get<std::vector<Exponents>>();
    MonomialDictionary base(n, std::move(exps));
    if (j.contains("coefficients") && !j.at("coefficients").is_null())
      return DerivedDictionary(std::move(base), matrix_from_json(j.at("coefficients")));
    return base;
  } catch (const json::exception& e) {
    koopman::detail::fail(ErrorCode::InvalidInput, std::string("dictionary descriptor: ") + e.what());
  }
}

inline json evolution_to_json(const MatchedEvolution& m) {
  std::vector<double> re, im;
  for (Index i = 0; i < m.v.size(); ++i) {
    re.push_back(m.v(i).real());
    im.push_back(m.v(i).imag());
  }
  return json{{"lambda_re", m.lambda.real()},
              {"lambda_im", m.lambda.imag()},
              {"coefficients", {{"re", re}, {"im", im}}},
              {"forward_defect", m.forward_defect},
              {"backward_defect", m.backward_defect},
              {"data_defect", m.data_defect}};
}

inline json eigenpairs_to_json(const std::vector<MatchedEvolution>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(evolution_to_json(m));
  return arr;
}

struct StoredEvolution {
  Complex lambda;
  ComplexVector v;
  std::optional<double> data_defect;
};

inline std::vector<StoredEvolution> eigenpairs_from_json(const json& arr) {
  std::vector<StoredEvolution> out;
  for (const auto& e : arr) {
    StoredEvolution s;
    s.lambda = Complex(e.at("lambda_re").get<double>(), e.at("lambda_im").get<double>());
    const auto re = e.at("coefficients").at("re").get<std::vector<double>>();
    const auto im = e.at("coefficients").at("im").get<std::vector<double>>();
    koopman::detail::require(re.size() == im.size(), ErrorCode::InvalidInput, "eigenpair: re/im length mismatch");
    s.v.resize(static_cast<Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) s.v(static_cast<Index>(i)) = Complex(re[i], im[i]);
    if (e.contains("data_defect") && e.at("data_defect").is_number()) s.data_defect = e.at("data_defect").get<double>();
    out.push_back(std::move(s));
  }
  return out;
}

inline json ssd_to_json(const SsdResult& r) {
  json log = json::array();
  for (const auto& it : r.log) {
    log.push_back({{"subspace_dim", it.subspace_dim},
                   {"null_dim", it.null_dim},
                   {"truncation_ratio", it.truncation_ratio},
                   {"fell_back", it.fell_back}});
  }
  json j{{"mode", to_string(r.mode)}, {"zero", r.zero},          {"dimension", r.dim()},
         {"iterations", r.iterations}, {"log", log},             {"C", matrix_to_json(r.c)},
         {"warnings", r.warnings}};
  if (r.mode == SsdMode::Approximate) j["epsilon"] = r.epsilon;
  return j;
}

inline SsdResult ssd_from_json(const json& j) {
  SsdResult r;
  r.mode = j.at("mode").get<std::string>() == "exact" ? SsdMode::Exact : SsdMode::Approximate;
  r.zero = j.at("zero").get<bool>();
  r.iterations = j.at("iterations").get<Index>();
  r.c = matrix_from_json(j.at("C"));
  if (j.contains("epsilon")) r.epsilon = j.at("epsilon").get<double>();
  for (const auto& it : j.at("log")) {
    SsdIteration e;
    e.subspace_dim = it.at("subspace_dim").get<Index>();
    e.null_dim = it.at("null_dim").get<Index>();
    e.truncation_ratio = it.at("truncation_ratio").get<double>();
    e.fell_back = it.at("fell_back").get<bool>();
    r.log.push_back(e);
  }
  return r;
}

inline json tolerances_to_json(const ToleranceConfig& t) {
  return json{{"rank_rtol", t.rank_rtol}, {"eig_match_atol", t.eig_match_atol}, {"subspace_atol", t.subspace_atol}};
}

inline ToleranceConfig tolerances_from_json(const json& j, ToleranceConfig t = {}) {
  if (j.contains("rank_rtol")) t.rank_rtol = j.at("rank_rtol").get<double>();
  if (j.contains("eig_match_atol")) t.eig_match_atol = j.at("eig_match_atol").get<double>();
  if (j.contains("subspace_atol")) t.subspace_atol = j.at("subspace_atol").get<double>();
  return t;
}

inline json provenance_to_json(const Provenance& p) {
  json j{{"source", p.source}, {"box", box_to_json(p.box)}};
  if (p.seed) j["seed"] = *p.seed;
  if (p.dt) j["dt"] = *p.dt;
  if (p.substeps) j["substeps"] = *p.substeps;
  if (!p.integrator.empty()) j["integrator"] = p.integrator;
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  koopman::detail::require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    koopman::detail::fail(ErrorCode::InvalidInput, "'" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
  detail::finish(out, path);
}

}  // namespace koopman::io
