#pragma once

// Batch front end: `generate`, `identify` and `verify` subcommands.
// Errors go to stderr as `koopman: error: <CODE>: <message>` and map to the
// exit codes in ExitCode.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "koopman/io.hpp"
#include "koopman/koopman.hpp"

namespace koopman::cli {

using nlohmann::json;

enum class ExitCode : int {
  Ok = 0,
  Internal = 1,
  InvalidInput = 2,
  AssumptionViolation = 3,
  IoError = 4,
  VerificationFailed = 5,
  EvaluationOverflow = 6,
  RankError = 7,
  InternalInvariantViolation = 8,
};

inline int to_int(ExitCode c) { return static_cast<int>(c); }

inline ExitCode exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return ExitCode::InvalidInput;
    case ErrorCode::EvaluationOverflow: return ExitCode::EvaluationOverflow;
    case ErrorCode::RankError: return ExitCode::RankError;
    case ErrorCode::AssumptionViolation: return ExitCode::AssumptionViolation;
    case ErrorCode::InternalInvariantViolation: return ExitCode::InternalInvariantViolation;
    case ErrorCode::IoError: return ExitCode::IoError;
  }
  return ExitCode::Internal;
}

enum class Method { FbEdmd, Ssd, SsdApprox };

inline Method parse_method(const std::string& s) {
  if (s == "fb-edmd") return Method::FbEdmd;
  if (s == "ssd") return Method::Ssd;
  if (s == "ssd-approx") return Method::SsdApprox;
  detail::fail(ErrorCode::InvalidInput, "unknown method '" + s + "' (expected fb-edmd, ssd or ssd-approx)");
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::FbEdmd: return "fb-edmd";
    case Method::Ssd: return "ssd";
    case Method::SsdApprox: return "ssd-approx";
  }
  return "unknown";
}

struct GridSpec {
  Box box;
  Index resolution = 0;
  /// indices into the reported eigenpairs; empty means all
  std::vector<std::size_t> which;
};

struct RunConfig {
  // data source: exactly one of these
  std::optional<SystemSpec> system;
  Index system_samples = 0;
  std::string snapshot_path;
  std::string dx_path, dy_path;

  // dictionary: degree, descriptor file or inline exponents (ignored for dx/dy data)
  std::optional<unsigned> degree;
  std::string dictionary_path;
  std::optional<std::vector<Exponents>> exponents;

  Method method = Method::Ssd;
  std::optional<double> eps;
  ToleranceConfig tolerances;
  std::string out_dir;
  std::optional<GridSpec> grid;

  void validate() const {
    const int sources = (system ? 1 : 0) + (snapshot_path.empty() ? 0 : 1) + (dx_path.empty() ? 0 : 1);
    detail::require(sources == 1, ErrorCode::InvalidInput,
                    "exactly one data source required (system, --data, or --dx/--dy)");
    detail::require(dx_path.empty() == dy_path.empty(), ErrorCode::InvalidInput, "--dx and --dy go together");
    detail::require((method == Method::SsdApprox) == eps.has_value(), ErrorCode::InvalidInput,
                    "--eps is required for, and only valid with, --method ssd-approx");
    if (dx_path.empty()) {
      const int dicts = (degree ? 1 : 0) + (dictionary_path.empty() ? 0 : 1) + (exponents ? 1 : 0);
      detail::require(dicts == 1, ErrorCode::InvalidInput,
                      "exactly one dictionary required (--degree, --dictionary or --exponents)");
    }
    detail::require(!out_dir.empty(), ErrorCode::InvalidInput, "--out is required");
    tolerances.validate();
    if (system) {
      system->validate();
      detail::require(system_samples >= 1, ErrorCode::InvalidInput, "system sample count must be >= 1");
    }
  }
};

// ---------------------------------------------------------------------------
// parsing helpers

inline std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (auto f : io::detail::split(s)) {
    try {
      out.push_back(io::detail::parse_double(f, 0));
    } catch (const Error&) {
      detail::fail(ErrorCode::InvalidInput, std::string(what) + ": bad number in '" + s + "'");
    }
  }
  return out;
}

inline Box parse_box(const std::string& s) {
  const auto v = parse_list(s, "--box");
  detail::require(!v.empty() && v.size() % 2 == 0, ErrorCode::InvalidInput,
                  "--box expects lo,hi pairs (e.g. -2,2,-2,2)");
  Box box;
  for (std::size_t i = 0; i < v.size(); i += 2) box.push_back({v[i], v[i + 1]});
  validate_box(box);
  return box;
}

inline RealMatrix parse_square(const std::string& s) {
  const auto v = parse_list(s, "--A");
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  detail::require(n >= 1 && n * n == static_cast<Index>(v.size()), ErrorCode::InvalidInput,
                  "--A expects n*n row-major entries");
  RealMatrix a(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) a(r, c) = v[static_cast<std::size_t>(r * n + c)];
  return a;
}

/// "0,0;1,0;0,1" -> {{0,0},{1,0},{0,1}}
inline std::vector<Exponents> parse_exponents(const std::string& s) {
  std::vector<Exponents> out;
  for (auto term : io::detail::split(s, ';')) {
    Exponents e;
    for (auto f : io::detail::split(term)) {
      const auto t = io::detail::trim(f);
      unsigned v = 0;
      const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      detail::require(ec == std::errc() && p == t.data() + t.size(), ErrorCode::InvalidInput,
                      "--exponents: bad entry '" + std::string(t) + "'");
      e.push_back(v);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  if (s.empty() || s == "all") return out;
  for (auto f : io::detail::split(s)) {
    const auto t = io::detail::trim(f);
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    detail::require(ec == std::errc() && p == t.data() + t.size(), ErrorCode::InvalidInput,
                    "--grid-eigs: bad index '" + std::string(t) + "'");
    out.push_back(v);
  }
  return out;
}

inline Box box_from_json(const json& j) {
  Box box;
  for (const auto& iv : j) box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
  validate_box(box);
  return box;
}

inline SystemSpec system_from_json(const json& j) {
  SystemSpec spec;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    const auto a = j.at("A").get<std::vector<double>>();
    std::ostringstream joined;
    for (std::size_t i = 0; i < a.size(); ++i) joined << (i ? "," : "") << io::format_double(a[i]);
    spec.dynamics = DiscreteLinear{parse_square(joined.str())};
  } else if (kind == "vanderpol") {
    ContinuousField f;
    f.dt = j.value("dt", 5e-3);
    f.substeps = j.value("substeps", 1);
    spec.dynamics = f;
  } else {
    detail::fail(ErrorCode::InvalidInput, "config: unknown system kind '" + kind + "'");
  }
  spec.box = box_from_json(j.at("box"));
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

/// RunConfig from the JSON config file layout (keys mirror the CLI flags).
inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("system")) {
      c.system = system_from_json(j.at("system"));
      c.system_samples = j.at("system").at("n").get<Index>();
    }
    c.snapshot_path = j.value("data", std::string{});
    c.dx_path = j.value("dx", std::string{});
    c.dy_path = j.value("dy", std::string{});
    if (j.contains("degree")) c.degree = j.at("degree").get<unsigned>();
    c.dictionary_path = j.value("dictionary", std::string{});
    if (j.contains("exponents")) c.exponents = j.at("exponents").get<std::vector<Exponents>>();
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
    if (j.contains("tolerances")) c.tolerances = io::tolerances_from_json(j.at("tolerances"));
    c.out_dir = j.value("out", std::string{});
    if (j.contains("grid")) {
      GridSpec g;
      g.box = box_from_json(j.at("grid").at("box"));
      g.resolution = j.at("grid").at("resolution").get<Index>();
      const auto& which = j.at("grid").value("eigenvalues", json("all"));
      if (which.is_array()) g.which = which.get<std::vector<std::size_t>>();
      c.grid = g;
    }
  } catch (const json::exception& e) {
    detail::fail(ErrorCode::InvalidInput, std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// pipelines

struct Dataset {
  RealMatrix dx, dy;
  std::optional<io::AnyDictionary> dictionary;
  Index samples = 0;
  Index state_dim = 0;
  std::string source;
};

inline io::AnyDictionary resolve_dictionary(const RunConfig& c, Index state_dim) {
  if (c.degree) return monomials_up_to_degree(state_dim, *c.degree);
  if (c.exponents) return MonomialDictionary(state_dim, *c.exponents);
  return io::dictionary_from_json(io::read_json_file(c.dictionary_path));
}

inline RealMatrix evaluate_any(const io::AnyDictionary& d, const RealMatrix& x) {
  return std::visit([&](const auto& dict) -> RealMatrix { return dict.evaluate(x); }, d);
}

inline Index state_dim_of(const io::AnyDictionary& d) {
  return std::visit([](const auto& dict) -> Index { return dict.state_dim(); }, d);
}

inline Dataset load_dataset(const RunConfig& c) {
  Dataset ds;
  if (!c.dx_path.empty()) {
    ds.dx = io::read_matrix_csv(c.dx_path);
    ds.dy = io::read_matrix_csv(c.dy_path);
    detail::require(ds.dx.rows() == ds.dy.rows() && ds.dx.cols() == ds.dy.cols(), ErrorCode::InvalidInput,
                    "--dx and --dy differ in shape");
    ds.samples = ds.dx.rows();
    ds.source = "precomputed";
    return ds;
  }
  SnapshotSet snaps;
  if (c.system) {
    snaps = generate(*c.system, c.system_samples);
  } else {
    snaps = io::read_snapshots_csv(c.snapshot_path);
  }
  snaps.validate();
  ds.samples = snaps.count();
  ds.state_dim = snaps.state_dim();
  ds.source = snaps.provenance.source;
  ds.dictionary = resolve_dictionary(c, snaps.state_dim());
  detail::require(state_dim_of(*ds.dictionary) == snaps.state_dim(), ErrorCode::InvalidInput,
                  "dictionary state dimension differs from snapshot state dimension");
  ds.dx = evaluate_any(*ds.dictionary, snaps.x);
  ds.dy = evaluate_any(*ds.dictionary, snaps.y);
  return ds;
}

inline json dataset_dictionary_json(const Dataset& ds) {
  if (ds.dictionary) return io::dictionary_to_json(*ds.dictionary);
  return json{{"kind", "precomputed"}, {"size", ds.dx.cols()}};
}

inline json run_identify(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Dataset ds = load_dataset(c);
  const ToleranceConfig& tol = c.tolerances;

  json result;
  result["format"] = "koopman-identify/1";
  result["method"] = to_string(c.method);
  result["tolerances"] = io::tolerances_to_json(tol);
  result["data"] = {{"samples", ds.samples}, {"state_dim", ds.state_dim}, {"source", ds.source}};
  result["dictionary"] = dataset_dictionary_json(ds);
  json warnings = json::array();

  std::vector<MatchedEvolution> evolutions;
  if (c.method == Method::FbEdmd) {
    const auto fb = forward_backward_eigenpairs(ds.dx, ds.dy, tol);
    evolutions = fb.matches;
    result["relative_residual"] = relative_residual(ds.dx, ds.dy, fb.forward.k);
    json skipped = json::array();
    for (const auto& z : fb.skipped_near_zero) skipped.push_back({z.real(), z.imag()});
    result["fb_edmd"] = {{"K_forward", io::matrix_to_json(fb.forward.k)},
                         {"K_backward", io::matrix_to_json(fb.backward.k)},
                         {"skipped_near_zero", skipped},
                         {"inconsistent_candidates", fb.inconsistent_candidates}};
  } else {
    const SsdResult r = c.method == Method::Ssd ? ssd(ds.dx, ds.dy, tol) : approximate_ssd(ds.dx, ds.dy, *c.eps, tol);
    for (const auto& w : r.warnings) warnings.push_back(w);
    json ssd_json = io::ssd_to_json(r);
    if (!r.zero) {
      const ReducedKoopman red = reduced_koopman(ds.dx, ds.dy, r, tol);
      evolutions = lift_eigenvectors(ds.dx, ds.dy, r, red, tol);
      ssd_json["reduced_koopman"] = io::matrix_to_json(red.k);
      ssd_json["relative_residual"] = red.relative_residual;
      ssd_json["invertible"] = red.invertible;
      result["relative_residual"] = red.relative_residual;
      if (!red.invertible) warnings.push_back("reduced Koopman matrix is singular");
      if (ds.dictionary) {
        const bool derived = std::holds_alternative<DerivedDictionary>(*ds.dictionary);
        const DerivedDictionary reduced_dict =
            derived ? restrict(std::get<DerivedDictionary>(*ds.dictionary), r.c, tol)
                    : restrict(std::get<MonomialDictionary>(*ds.dictionary), r.c, tol);
        ssd_json["reduced_dictionary"] = io::dictionary_to_json(reduced_dict);
      }
    } else {
      result["relative_residual"] = nullptr;
    }
    result["ssd"] = ssd_json;
    log << "subspace dimension: " << r.dim() << " (iterations " << r.iterations << ")\n";
  }
  result["eigenpairs"] = io::eigenpairs_to_json(evolutions);
  result["warnings"] = warnings;

  std::filesystem::create_directories(c.out_dir);
  json grids = json::array();
  if (c.grid && c.grid->resolution > 0) {
    detail::require(ds.dictionary.has_value(), ErrorCode::InvalidInput,
                    "grid export needs a monomial or derived dictionary, not precomputed matrices");
    std::vector<std::size_t> which = c.grid->which;
    if (which.empty())
      for (std::size_t i = 0; i < evolutions.size(); ++i) which.push_back(i);
    for (std::size_t idx : which) {
      detail::require(idx < evolutions.size(), ErrorCode::InvalidInput,
                      "--grid-eigs index " + std::to_string(idx) + " out of range");
      const auto g = std::visit(
          [&](const auto& d) { return eigenfunction_grid(d, evolutions[idx].v, c.grid->box, c.grid->resolution); },
          *ds.dictionary);
      const std::string name = "grid_" + std::to_string(idx) + ".csv";
      io::write_grid_csv((std::filesystem::path(c.out_dir) / name).string(), g);
      grids.push_back({{"eigenpair", idx}, {"file", name}});
    }
  }
  result["grids"] = grids;
  io::write_json_file((std::filesystem::path(c.out_dir) / "result.json").string(), result);
  log << "eigenpairs: " << evolutions.size() << '\n';
  for (const auto& m : evolutions)
    log << "  lambda = " << std::setprecision(10) << m.lambda.real() << (m.lambda.imag() < 0 ? " - " : " + ")
        << std::abs(m.lambda.imag()) << "i  data_defect = " << std::setprecision(3) << m.data_defect << '\n';
  return result;
}

struct VerifyReport {
  struct Line {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Line> lines;
  bool all_pass() const {
    for (const auto& l : lines)
      if (!l.pass) return false;
    return true;
  }
};

/// Recomputes the stored invariants from the snapshot data.
inline VerifyReport run_verify(const json& result, const RealMatrix& dx, const RealMatrix& dy) {
  VerifyReport rep;
  const ToleranceConfig tol = io::tolerances_from_json(result.value("tolerances", json::object()));
  const auto& dict = result.at("dictionary");
  detail::require(dict.at("size").get<Index>() == dx.cols(), ErrorCode::InvalidInput,
                  "verify: result dictionary size does not match the data");
  const std::string method = result.at("method").get<std::string>();
  const bool exact = method != "ssd-approx";

  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
  };

  const auto stored = io::eigenpairs_from_json(result.at("eigenpairs"));
  for (std::size_t i = 0; i < stored.size(); ++i) {
    const auto& e = stored[i];
    detail::require(e.v.size() == dx.cols(), ErrorCode::InvalidInput, "verify: eigenpair length mismatch");
    const double defect = data_defect(dx, dy, e.v, e.lambda);
    bool pass = true;
    if (e.data_defect) pass = std::abs(defect - *e.data_defect) <= 1e-6 * std::max(1.0, *e.data_defect) + 1e-12;
    if (exact) pass = pass && defect <= tol.eig_match_atol;
    rep.lines.push_back({"evolution[" + std::to_string(i) + "].data_defect", pass, "defect=" + fmt(defect)});
  }

  if (result.contains("ssd")) {
    const SsdResult r = io::ssd_from_json(result.at("ssd"));
    if (!r.zero) {
      detail::require(r.c.rows() == dx.cols(), ErrorCode::InvalidInput, "verify: C does not match the dictionary");
      const bool full_rank = has_full_column_rank(r.c, tol);
      rep.lines.push_back({"C.full_column_rank", full_rank, "cols=" + std::to_string(r.c.cols())});
      const RealMatrix a = dx * r.c, b = dy * r.c;
      const RealVector angles = principal_angles(a, b, tol);
      const double max_angle = angles.size() ? angles.maxCoeff() : 0.0;
      const bool dims_match = numerical_rank(a, tol) == numerical_rank(b, tol);
      if (exact) {
        rep.lines.push_back({"range_equality", dims_match && max_angle <= tol.subspace_atol,
                             "max_angle=" + fmt(max_angle)});
      } else {
        const RealMatrix k = least_squares(a, b, tol);
        const double er = relative_residual(a, b, k);
        const double stored_er = result.at("ssd").value("relative_residual", er);
        rep.lines.push_back({"relative_residual", std::abs(er - stored_er) <= 1e-6 * std::max(1e-12, stored_er) + 1e-14,
                             "e_r=" + fmt(er) + " max_angle=" + fmt(max_angle)});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// entry point

inline int report_error(std::ostream& err, ErrorCode code, const std::string& msg) {
  err << "koopman: error: " << koopman::to_string(code) << ": " << msg << '\n';
  return to_int(exit_code_for(code));
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Koopman invariant subspace identification from snapshot data"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a built-in system and write a snapshot CSV");
  std::string g_system, g_box, g_a, g_out;
  long long g_n = 0;
  double g_dt = 5e-3;
  int g_substeps = 1;
  std::uint64_t g_seed = 0;
  gen->add_option("--system", g_system, "linear | vanderpol")->required();
  gen->add_option("--n", g_n, "number of samples")->required();
  gen->add_option("--box", g_box, "sampling box lo1,hi1,lo2,hi2,...")->required();
  gen->add_option("--A", g_a, "row-major matrix for --system linear");
  gen->add_option("--dt", g_dt, "time step for continuous systems");
  gen->add_option("--substeps", g_substeps, "RK4 sub-steps per dt");
  gen->add_option("--seed", g_seed, "sampling seed");
  gen->add_option("--out", g_out, "output CSV path")->required();

  // identify
  auto* idf = app.add_subcommand("identify", "run FB-EDMD or SSD on snapshot data");
  std::string i_config, i_data, i_dx, i_dy, i_dictionary, i_exponents, i_method = "ssd", i_out, i_grid_box,
      i_grid_eigs = "all";
  unsigned i_degree = 0;
  double i_eps = 0, i_rtol = 0, i_eatol = 0, i_satol = 0;
  Index i_grid_res = 0;
  idf->add_option("--config", i_config, "JSON run configuration; explicit flags override it");
  idf->add_option("--data", i_data, "snapshot CSV (x_1..x_n,y_1..y_n)");
  idf->add_option("--dx", i_dx, "precomputed D(X) matrix CSV");
  idf->add_option("--dy", i_dy, "precomputed D(Y) matrix CSV");
  idf->add_option("--degree", i_degree, "monomial dictionary of total degree <= d");
  idf->add_option("--dictionary", i_dictionary, "dictionary descriptor JSON");
  idf->add_option("--exponents", i_exponents, "inline monomials, e.g. 0,0;1,0;0,1");
  idf->add_option("--method", i_method, "fb-edmd | ssd | ssd-approx");
  idf->add_option("--eps", i_eps, "truncation level for ssd-approx");
  idf->add_option("--rank-rtol", i_rtol, "relative rank threshold factor");
  idf->add_option("--eig-atol", i_eatol, "eigenpair match tolerance");
  idf->add_option("--subspace-atol", i_satol, "principal-angle tolerance");
  idf->add_option("--out", i_out, "output directory");
  idf->add_option("--grid-box", i_grid_box, "eigenfunction grid box lo1,hi1,...");
  idf->add_option("--grid-res", i_grid_res, "grid nodes per axis (>= 2)");
  idf->add_option("--grid-eigs", i_grid_eigs, "eigenpair indices to export, or 'all'");

  // verify
  auto* ver = app.add_subcommand("verify", "re-check a result JSON against snapshot data");
  std::string v_result, v_data, v_dx, v_dy;
  ver->add_option("--result", v_result, "result.json from identify")->required();
  ver->add_option("--data", v_data, "snapshot CSV");
  ver->add_option("--dx", v_dx, "precomputed D(X) matrix CSV");
  ver->add_option("--dy", v_dy, "precomputed D(Y) matrix CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(err, ErrorCode::InvalidInput, e.what());
  }

  try {
    if (*gen) {
      detail::require(g_n >= 1, ErrorCode::InvalidInput, "--n must be >= 1");
      SystemSpec spec;
      if (g_system == "linear") {
        detail::require(!g_a.empty(), ErrorCode::InvalidInput, "--system linear requires --A");
        spec.dynamics = DiscreteLinear{parse_square(g_a)};
      } else if (g_system == "vanderpol") {
        spec.dynamics = ContinuousField{VectorFieldId::VanDerPol, g_dt, g_substeps};
      } else {
        detail::fail(ErrorCode::InvalidInput, "unknown system '" + g_system + "'");
      }
      spec.box = parse_box(g_box);
      spec.seed = g_seed;
      const SnapshotSet s = generate(spec, static_cast<Index>(g_n));
      io::write_snapshots_csv(g_out, s);
      json prov = io::provenance_to_json(s.provenance);
      prov["samples"] = s.count();
      prov["created_utc_seconds"] =
          std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
              .count();
      io::write_json_file(g_out + ".provenance.json", prov);
      out << "wrote " << s.count() << " snapshots to " << g_out << '\n';
      return 0;
    }

    if (*idf) {
      RunConfig c = i_config.empty() ? RunConfig{} : config_from_json(io::read_json_file(i_config));
      if (idf->count("--data")) c.snapshot_path = i_data;
      if (idf->count("--dx")) c.dx_path = i_dx;
      if (idf->count("--dy")) c.dy_path = i_dy;
      if (idf->count("--degree")) c.degree = i_degree;
      if (idf->count("--dictionary")) c.dictionary_path = i_dictionary;
      if (idf->count("--exponents")) c.exponents = parse_exponents(i_exponents);
      if (idf->count("--method")) c.method = parse_method(i_method);
      if (idf->count("--eps")) c.eps = i_eps;
      if (idf->count("--rank-rtol")) c.tolerances.rank_rtol = i_rtol;
      if (idf->count("--eig-atol")) c.tolerances.eig_match_atol = i_eatol;
      if (idf->count("--subspace-atol")) c.tolerances.subspace_atol = i_satol;
      if (idf->count("--out")) c.out_dir = i_out;
      if (idf->count("--grid-res")) {
        GridSpec g = c.grid.value_or(GridSpec{});
        g.resolution = i_grid_res;
        detail::require(g.resolution >= 2, ErrorCode::InvalidInput, "--grid-res must be >= 2");
        if (idf->count("--grid-box")) g.box = parse_box(i_grid_box);
        detail::require(!g.box.empty(), ErrorCode::InvalidInput, "--grid-res requires --grid-box");
        g.which = parse_indices(i_grid_eigs);
        c.grid = g;
      }
      run_identify(c, out);
      return 0;
    }

    if (*ver) {
      const json result = io::read_json_file(v_result);
      RealMatrix dx, dy;
      const auto& dict = result.at("dictionary");
      if (!v_dx.empty() || !v_dy.empty()) {
        detail::require(!v_dx.empty() && !v_dy.empty(), ErrorCode::InvalidInput, "--dx and --dy go together");
        dx = io::read_matrix_csv(v_dx);
        dy = io::read_matrix_csv(v_dy);
      } else {
        detail::require(!v_data.empty(), ErrorCode::InvalidInput, "verify needs --data or --dx/--dy");
        detail::require(dict.at("kind").get<std::string>() != "precomputed", ErrorCode::InvalidInput,
                        "result was computed from precomputed matrices; pass --dx/--dy");
        const SnapshotSet s = io::read_snapshots_csv(v_data);
        const io::AnyDictionary d = io::dictionary_from_json(dict);
        detail::require(state_dim_of(d) == s.state_dim(), ErrorCode::InvalidInput,
                        "verify: dictionary state dimension does not match the snapshots");
        dx = evaluate_any(d, s.x);
        dy = evaluate_any(d, s.y);
      }
      const VerifyReport rep = run_verify(result, dx, dy);
      for (const auto& l : rep.lines) out << (l.pass ? "PASS " : "FAIL ") << l.name << "  " << l.detail << '\n';
      out << (rep.all_pass() ? "all checks passed" : "verification failed") << '\n';
      return rep.all_pass() ? 0 : to_int(ExitCode::VerificationFailed);
    }
  } catch (const Error& e) {
    return report_error(err, e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error(err, ErrorCode::InvalidInput, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(err, ErrorCode::IoError, e.what());
  } catch (const std::exception& e) {
    err << "koopman: error: INTERNAL: " << e.what() << '\n';
    return to_int(ExitCode::Internal);
  }
  return to_int(ExitCode::InvalidInput);
}

}  // namespace koopman::cli
