#pragma once

// System files, reports and trajectory tables for the command-line tool.
//
// A system file is a JSON object:
//
//   {"label": "demo", "F": [[1, 0], [0, 0]], "G": [[0.5, 0], [0, 1]], "y0": [1, 1]}
//
// Entries are real numbers or [re, im] pairs; "y0" and "label" are optional.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "descsys/errors.hpp"
#include "descsys/numerics.hpp"
#include "descsys/pencil.hpp"
#include "descsys/solution.hpp"
#include "descsys/stability.hpp"
#include "descsys/version.hpp"

namespace descsys {

using Json = nlohmann::json;

/// Malformed document. line/column are 1-based; 0 when the error is structural.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}
  [[nodiscard]] const char* kind() const noexcept override { return "ParseError"; }
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "ShapeError"; }
};

class MissingInitialCondition : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "MissingInitialCondition"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "IoError"; }
};

struct SystemDescription {
  Matrix F;
  Matrix G;
  std::optional<Vector> y0;
  std::string label;

  [[nodiscard]] Index m() const { return F.rows(); }
};

namespace exit_codes {
inline constexpr int kSuccess = 0;
inline constexpr int kIo = 1;
inline constexpr int kSingularPencil = 2;
inline constexpr int kParse = 3;
inline constexpr int kMissingInitialCondition = 4;
inline constexpr int kNumerical = 5;
}  // namespace exit_codes

namespace detail {

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline Complex parse_scalar(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ParseError(where + ": expected a number or an [re, im] pair, got " + j.dump());
}

inline Matrix parse_matrix(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw ParseError("\"" + name + "\" must be a nonempty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].empty())
      throw ParseError(name + "[" + std::to_string(r) + "] must be a nonempty array");
    const auto width = static_cast<Index>(j[r].size());
    if (cols >= 0 && width != cols)
      throw ShapeError("\"" + name + "\" is ragged: row 0 has " + std::to_string(cols) +
                       " entries, row " + std::to_string(r) + " has " + std::to_string(width));
    cols = width;
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = parse_scalar(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                             name + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  return m;
}

inline Json scalar_json(Complex z, bool as_real) {
  if (as_real) return z.real();
  return Json::array({z.real(), z.imag()});
}

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace detail

/// A matrix as an array of rows; entries are plain numbers when every
/// imaginary part is at most `real_tol`, otherwise [re, im] pairs.
inline Json matrix_json(const Matrix& m, double real_tol) {
  const bool real = is_real(m, real_tol);
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(detail::scalar_json(m(r, c), real));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_json(const Vector& v, double real_tol) {
  const bool real = is_real(v, real_tol);
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(detail::scalar_json(v(i), real));
  return out;
}

inline Json complex_json(Complex z) { return detail::scalar_json(z, false); }

inline SystemDescription parse_system_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, column] = detail::locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("malformed document at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + e.what(),
                     line, column);
  }
  if (!doc.is_object()) throw ParseError("system document must be a JSON object");
  if (!doc.contains("F") || !doc.contains("G"))
    throw ParseError("system document must contain keys \"F\" and \"G\"");

  SystemDescription d;
  d.F = detail::parse_matrix(doc["F"], "F");
  d.G = detail::parse_matrix(doc["G"], "G");
  if (d.F.rows() != d.F.cols() || d.G.rows() != d.G.cols() || d.F.rows() != d.G.rows())
    throw ShapeError("F and G must be square of equal dimension; got F " +
                     detail::shape_string(d.F.rows(), d.F.cols()) + ", G " +
                     detail::shape_string(d.G.rows(), d.G.cols()));
  if (doc.contains("y0") && !doc["y0"].is_null()) {
    const Json& y = doc["y0"];
    if (!y.is_array()) throw ParseError("\"y0\" must be an array");
    Vector v(static_cast<Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
      v(static_cast<Index>(i)) = detail::parse_scalar(y[i], "y0[" + std::to_string(i) + "]");
    if (v.size() != d.m())
      throw ShapeError("y0 has length " + std::to_string(v.size()) + " but the system has m = " +
                       std::to_string(d.m()));
    d.y0 = std::move(v);
  }
  if (doc.contains("label")) {
    if (!doc["label"].is_string()) throw ParseError("\"label\" must be a string");
    d.label = doc["label"].get<std::string>();
  }
  return d;
}

inline SystemDescription parse_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open system file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_system_text(buf.str());
}

/// Inverse of parse_system_text: exact values, real entries as plain numbers.
inline std::string serialize_system(const SystemDescription& d) {
  Json doc;
  if (!d.label.empty()) doc["label"] = d.label;
  doc["F"] = matrix_json(d.F, 0.0);
  doc["G"] = matrix_json(d.G, 0.0);
  if (d.y0) doc["y0"] = vector_json(*d.y0, 0.0);
  return doc.dump(2) + "\n";
}

inline Json tolerances_json(const Tolerances& tol) {
  return {{"rank_rel", tol.rank_rel}, {"cluster_abs", tol.cluster_abs}, {"residual_abs", tol.residual_abs}};
}

inline Json report_header(const std::string& command, const SystemDescription* d) {
  Json j;
  j["tool"] = "descsys";
  j["version"] = kVersion;
  j["command"] = command;
  if (d != nullptr) {
    j["label"] = d->label;
    j["m"] = d->m();
  }
  return j;
}

inline Json regularity_json(const RegularSystem& sys) {
  return {{"regular", true},
          {"certificate", complex_json(sys.certificate)},
          {"certificate_rcond", sys.certificate_rcond}};
}

inline Json spectrum_json(const SpectralSummary& s, const Tolerances& tol) {
  Vector values(static_cast<Index>(s.finite_eigs.size()));
  for (std::size_t i = 0; i < s.finite_eigs.size(); ++i) values(static_cast<Index>(i)) = s.finite_eigs[i].eigenvalue;
  const Json rendered = vector_json(values, tol.residual_abs);
  Json blocks = Json::array();
  for (std::size_t i = 0; i < s.finite_eigs.size(); ++i)
    blocks.push_back({{"eigenvalue", rendered[i]}, {"block_size", s.finite_eigs[i].size}});
  return {{"p", s.p}, {"q", s.q}, {"nu", s.nu}, {"finite_blocks", blocks}, {"infinite_blocks", s.infinite_blocks}};
}

inline Json residuals_json(const RegularSystem& sys, const WeierstrassDecomposition& w,
                           const Tolerances& tol) {
  const auto r = verify_decomposition(sys, w, tol);
  return {{"f_residual", r.f_residual},
          {"g_residual", r.g_residual},
          {"f_bound", f_residual_bound(sys, w, tol)},
          {"g_bound", g_residual_bound(sys, w, tol)}};
}

inline Json equilibria_json(const EquilibriumSet& e, const Tolerances& tol) {
  Json basis = Json::array();
  for (Index c = 0; c < e.basis.cols(); ++c) basis.push_back(vector_json(e.basis.col(c), tol.residual_abs));
  return {{"dimension", e.dimension}, {"one_is_eigenvalue", e.one_is_eigenvalue}, {"basis_vectors", basis}};
}

inline Json stability_json(const StabilityVerdict& v) {
  return {{"classification", std::string(to_string(v.classification))},
          {"spectral_radius", v.spectral_radius},
          {"boundary_blocks_trivial", v.boundary_blocks_trivial},
          {"power_bound_estimate", v.power_bound_estimate},
          {"evidence_horizon", v.evidence_horizon}};
}

/// Full analysis: regularity, spectrum, decomposition residuals, consistency
/// (when y0 is present), equilibria and stability.
inline Json analysis_report(const SystemDescription& d, const Tolerances& tol) {
  const auto sys = certify_regularity(d.F, d.G, tol);
  const auto w = weierstrass_decompose(sys, tol);
  const auto spectrum = finite_spectrum(sys, tol);
  Json j = report_header("analyze", &d);
  j["tolerances"] = tolerances_json(tol);
  j["regularity"] = regularity_json(sys);
  j["spectrum"] = spectrum_json(spectrum, tol);
  Json dec = residuals_json(sys, w, tol);
  dec["p"] = w.p;
  dec["q"] = w.q;
  dec["nilpotency_index"] = w.nilpotency_index;
  j["decomposition"] = dec;
  if (d.y0) {
    const auto c = check_consistency(*d.y0, w, tol);
    j["consistency"] = {{"consistent", c.consistent},
                        {"distance", c.distance},
                        {"projected_y0", vector_json(c.projected_Y0, tol.residual_abs)}};
  } else {
    j["consistency"] = nullptr;
  }
  j["equilibria"] = equilibria_json(equilibrium_set(sys, w, tol), tol);
  j["stability"] = stability_json(classify_stability(sys, w, spectrum, tol));
  return j;
}

inline Json decomposition_report(const SystemDescription& d, const Tolerances& tol) {
  const auto sys = certify_regularity(d.F, d.G, tol);
  const auto w = weierstrass_decompose(sys, tol);
  Json j = report_header("decompose", &d);
  j["tolerances"] = tolerances_json(tol);
  j["regularity"] = regularity_json(sys);
  j["p"] = w.p;
  j["q"] = w.q;
  j["nilpotency_index"] = w.nilpotency_index;
  j["P"] = matrix_json(w.P, tol.residual_abs);
  j["Q"] = matrix_json(w.Q, tol.residual_abs);
  j["Jp"] = matrix_json(w.Jp, tol.residual_abs);
  j["Hq"] = matrix_json(w.Hq, tol.residual_abs);
  j["residuals"] = residuals_json(sys, w, tol);
  return j;
}

inline Json equilibria_report(const SystemDescription& d, const Tolerances& tol) {
  const auto sys = certify_regularity(d.F, d.G, tol);
  const auto w = weierstrass_decompose(sys, tol);
  Json j = report_header("equilibria", &d);
  j["tolerances"] = tolerances_json(tol);
  j["equilibria"] = equilibria_json(equilibrium_set(sys, w, tol), tol);
  return j;
}

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Comma-separated table: k, state entries (re/im split when complex), residual.
/// Row k carries ||F Y_k - G Y_{k-1}||; row 0 carries 0.
inline std::string trajectory_table(const TrajectoryRecord& t, double real_tol) {
  const Index m = t.states.empty() ? 0 : t.states.front().size();
  bool real = true;
  for (const auto& s : t.states) real = real && is_real(s, real_tol);
  std::string out = "k";
  for (Index i = 1; i <= m; ++i) {
    if (real) {
      out += ",y_" + std::to_string(i);
    } else {
      out += ",y_" + std::to_string(i) + "_re,y_" + std::to_string(i) + "_im";
    }
  }
  out += ",residual\n";
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    out += std::to_string(k);
    for (Index i = 0; i < m; ++i) {
      out += "," + format_number(t.states[k](i).real());
      if (!real) out += "," + format_number(t.states[k](i).imag());
    }
    out += "," + format_number(k == 0 ? 0.0 : t.residuals[k - 1]) + "\n";
  }
  return out;
}

inline TrajectoryRecord simulate(const SystemDescription& d, Index steps, const Tolerances& tol) {
  if (!d.y0) throw MissingInitialCondition("the system file has no \"y0\"; simulate needs one");
  const auto sys = certify_regularity(d.F, d.G, tol);
  const auto w = weierstrass_decompose(sys, tol);
  return optimal_trajectory(sys, *d.y0, w, steps, tol);
}

/// Exit status for a failure, per the command-line contract.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SingularPencil*>(&e)) return exit_codes::kSingularPencil;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e))
    return exit_codes::kParse;
  if (dynamic_cast<const MissingInitialCondition*>(&e)) return exit_codes::kMissingInitialCondition;
  if (dynamic_cast<const RankDeficient*>(&e) || dynamic_cast<const IllConditionedStructure*>(&e) ||
      dynamic_cast<const ReconstructionFailure*>(&e))
    return exit_codes::kNumerical;
  return exit_codes::kIo;
}

inline Json error_report(const std::string& command, const std::exception& e) {
  Json j = report_header(command, nullptr);
  const auto* err = dynamic_cast<const Error*>(&e);
  j["error"] = err != nullptr ? err->kind() : "InvalidArgument";
  j["message"] = e.what();
  j["exit_code"] = exit_code_for(e);
  if (const auto* sp = dynamic_cast<const SingularPencil*>(&e)) {
    Json probes = Json::array();
    for (const auto& p : sp->probes()) probes.push_back({{"point", complex_json(p.point)}, {"rcond", p.rcond}});
    j["failed_probes"] = probes;
  }
  if (const auto* pe = dynamic_cast<const ParseError*>(&e); pe != nullptr && pe->line() > 0) {
    j["line"] = pe->line();
    j["column"] = pe->column();
  }
  return j;
}

}  // namespace descsys
