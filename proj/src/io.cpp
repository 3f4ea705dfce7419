#include "deltacert/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace deltacert {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

Json::Json() : kind_(Kind::kNull) {}

Json Json::object() {
  Json j;
  j.kind_ = Kind::kObject;
  return j;
}

Json Json::array() {
  Json j;
  j.kind_ = Kind::kArray;
  return j;
}

Json Json::number(double v) {
  Json j;
  j.kind_ = Kind::kNumber;
  j.number_ = v;
  return j;
}

Json Json::integer(std::int64_t v) {
  Json j;
  j.kind_ = Kind::kInt;
  j.int_ = v;
  return j;
}

Json Json::uinteger(std::uint64_t v) {
  Json j;
  j.kind_ = Kind::kUint;
  j.uint_ = v;
  return j;
}

Json Json::boolean(bool v) {
  Json j;
  j.kind_ = Kind::kBool;
  j.bool_ = v;
  return j;
}

Json Json::string(std::string v) {
  Json j;
  j.kind_ = Kind::kString;
  j.string_ = std::move(v);
  return j;
}

Json Json::vector(const Vector& v) {
  Json j = array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push(number(v(i)));
  return j;
}

Json Json::matrix(const Matrix& m) {
  Json j = array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push(number(m(r, c)));
    j.push(std::move(row));
  }
  return j;
}

Json& Json::set(const std::string& key, Json value) {
  members_.emplace_back(key, std::move(value));
  return *this;
}

Json& Json::push(Json value) {
  items_.push_back(std::move(value));
  return *this;
}

void Json::write(std::string& out, int depth) const {
  const std::string indent(2 * static_cast<std::size_t>(depth), ' ');
  const std::string inner(2 * static_cast<std::size_t>(depth + 1), ' ');
  char buf[32];
  switch (kind_) {
    case Kind::kNull:
      out += "null";
      break;
    case Kind::kBool:
      out += bool_ ? "true" : "false";
      break;
    case Kind::kNumber:
      if (std::isfinite(number_)) {
        out += format_double(number_);
      } else {
        // JSON has no non-finite literals; keep them as tagged strings.
        out += '"';
        out += format_double(number_);
        out += '"';
      }
      break;
    case Kind::kInt:
      std::snprintf(buf, sizeof(buf), "%" PRId64, int_);
      out += buf;
      break;
    case Kind::kUint:
      std::snprintf(buf, sizeof(buf), "%" PRIu64, uint_);
      out += buf;
      break;
    case Kind::kString:
      out += '"';
      out += escape_json(string_);
      out += '"';
      break;
    case Kind::kArray: {
      if (items_.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < items_.size(); ++i) {
        out += inner;
        items_[i].write(out, depth + 1);
        if (i + 1 < items_.size()) out += ',';
        out += '\n';
      }
      out += indent;
      out += ']';
      break;
    }
    case Kind::kObject: {
      if (members_.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      for (std::size_t i = 0; i < members_.size(); ++i) {
        out += inner;
        out += '"';
        out += escape_json(members_[i].first);
        out += "\": ";
        members_[i].second.write(out, depth + 1);
        if (i + 1 < members_.size()) out += ',';
        out += '\n';
      }
      out += indent;
      out += '}';
      break;
    }
  }
}

std::string Json::dump() const {
  std::string out;
  write(out, 0);
  out += '\n';
  return out;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& value) {
  if (row_open_) text_ += ',';
  text_ += value;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }

CsvWriter& CsvWriter::cell(std::int64_t value) {
  return cell(std::to_string(value));
}

CsvWriter& CsvWriter::cell(bool value) {
  return cell(std::string(value ? "1" : "0"));
}

void CsvWriter::end_row() {
  text_ += '\n';
  row_open_ = false;
}

namespace {

Json model_block(const HybridSystemModel& sys) {
  Json params = Json::object();
  for (const auto& [key, value] : sys.params) {
    params.set(key, Json::number(value));
  }
  Json names = Json::array();
  for (const auto& n : sys.state_names) names.push(Json::string(n));
  return Json::object()
      .set("name", Json::string(sys.name))
      .set("dim", Json::integer(sys.dim))
      .set("params", std::move(params))
      .set("state_names", std::move(names))
      .set("state_scale", Json::vector(sys.scale_or_ones()))
      .set("guard_min", Json::number(sys.guard_min))
      .set("guard_max", Json::number(sys.guard_max));
}

Json orbit_block(const PeriodicOrbit& orbit) {
  Eigen::VectorXcd eigs = orbit.jacobian.eigenvalues();
  Json magnitudes = Json::array();
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    magnitudes.push(Json::number(std::abs(eigs(i))));
  }
  return Json::object()
      .set("x_star", Json::vector(orbit.x_star))
      .set("period", Json::number(orbit.period))
      .set("jacobian", Json::matrix(orbit.jacobian))
      .set("eigenvalue_magnitudes", std::move(magnitudes))
      .set("spectral_radius", Json::number(orbit.spectral_radius))
      .set("residual", Json::number(orbit.residual))
      .set("newton_iterations", Json::integer(orbit.newton_iterations));
}

Json constants_block(const TheoremConstants& tc) {
  return Json::object()
      .set("M", Json::number(tc.M))
      .set("alpha", Json::number(tc.alpha))
      .set("gamma", Json::number(tc.gamma))
      .set("r_delta", Json::number(tc.r_delta))
      .set("delta_max", Json::number(tc.delta_max))
      .set("r1", Json::number(tc.r1))
      .set("r2", Json::number(tc.r2));
}

}  // namespace

Json orbit_to_json(const HybridSystemModel& sys, const PeriodicOrbit& orbit) {
  return Json::object()
      .set("schema", Json::string("deltacert/orbit/v1"))
      .set("model", model_block(sys))
      .set("orbit", orbit_block(orbit));
}

Json certificate_to_json(const HybridSystemModel& sys,
                         const PeriodicOrbit& orbit,
                         const DeltaRobustnessCertificate& cert,
                         const CertifyConfig& cc) {
  int accepted = 0;
  for (const auto& tr : cert.trials) accepted += tr.pass ? 1 : 0;

  Json lyap = Json::object()
      .set("P", Json::matrix(cert.lyap.P))
      .set("Q", Json::matrix(cert.lyap.Q))
      .set("k1", Json::number(cert.lyap.k1))
      .set("k2", Json::number(cert.lyap.k2))
      .set("k3", Json::number(cert.lyap.k3))
      .set("c", Json::number(cert.lyap.c))
      .set("chi", Json::number(cert.lyap.chi));

  Json search = Json::object()
      .set("delta_step", Json::number(cc.delta_step))
      .set("chi_step", Json::number(cc.chi_step))
      .set("chi_max", Json::number(cc.chi_max))
      .set("samples_per_trial", Json::integer(cert.samples_per_trial))
      .set("d_grid", Json::integer(cert.d_grid))
      .set("strict_annulus", Json::boolean(cert.strict_annulus))
      .set("delta_cap", Json::number(cc.delta_cap))
      .set("audit", Json::boolean(cc.audit))
      .set("seed", Json::uinteger(cert.seed))
      .set("trials", Json::integer(static_cast<std::int64_t>(cert.trials.size())))
      .set("accepted_trials", Json::integer(accepted));

  Json body = Json::object()
      .set("certified", Json::boolean(cert.certified))
      .set("delta_star", Json::number(cert.delta_star))
      .set("chi_star", Json::number(cert.chi_star))
      .set("k", Json::number(cert.k))
      .set("rho_estimate", Json::number(cert.rho_estimate))
      .set("constants", constants_block(cert.constants));

  return Json::object()
      .set("schema", Json::string("deltacert/certificate/v1"))
      .set("model", model_block(sys))
      .set("orbit", orbit_block(orbit))
      .set("lyapunov", std::move(lyap))
      .set("search", std::move(search))
      .set("certificate", std::move(body));
}

namespace {

Vector vector_from(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from(const nlohmann::json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

DeltaRobustnessCertificate certificate_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw DegenerateConfig(std::string("certificate parse error: ") +
                           ex.what());
  }
  try {
    if (doc.at("schema").get<std::string>() != "deltacert/certificate/v1") {
      throw DegenerateConfig("unsupported certificate schema");
    }
    DeltaRobustnessCertificate cert;
    const auto& body = doc.at("certificate");
    cert.certified = body.at("certified").get<bool>();
    cert.delta_star = body.at("delta_star").get<double>();
    cert.chi_star = body.at("chi_star").get<double>();
    cert.k = body.at("k").get<double>();
    cert.rho_estimate = body.at("rho_estimate").get<double>();
    const auto& tc = body.at("constants");
    cert.constants.M = tc.at("M").get<double>();
    cert.constants.alpha = tc.at("alpha").get<double>();
    cert.constants.gamma = tc.at("gamma").get<double>();
    cert.constants.r_delta = tc.at("r_delta").get<double>();
    cert.constants.delta_max = tc.at("delta_max").get<double>();
    cert.constants.r1 = tc.at("r1").get<double>();
    cert.constants.r2 = tc.at("r2").get<double>();

    const auto& lyap = doc.at("lyapunov");
    cert.lyap.P = matrix_from(lyap.at("P"));
    cert.lyap.Q = matrix_from(lyap.at("Q"));
    cert.lyap.k1 = lyap.at("k1").get<double>();
    cert.lyap.k2 = lyap.at("k2").get<double>();
    cert.lyap.k3 = lyap.at("k3").get<double>();
    cert.lyap.c = lyap.at("c").get<double>();
    cert.lyap.chi = lyap.at("chi").get<double>();
    cert.lyap.x_star = vector_from(doc.at("orbit").at("x_star"));
    cert.lyap.state_scale = vector_from(doc.at("model").at("state_scale"));

    const auto& search = doc.at("search");
    cert.samples_per_trial = search.at("samples_per_trial").get<int>();
    cert.d_grid = search.at("d_grid").get<int>();
    cert.strict_annulus = search.at("strict_annulus").get<bool>();
    cert.seed = search.at("seed").get<std::uint64_t>();
    return cert;
  } catch (const nlohmann::json::exception& ex) {
    throw DegenerateConfig(std::string("certificate missing field: ") +
                           ex.what());
  }
}

Json iss_report_to_json(const IssReport& report) {
  return Json::object()
      .set("schema", Json::string("deltacert/iss-report/v1"))
      .set("num_rollouts", Json::integer(report.num_rollouts))
      .set("steps", Json::integer(report.steps))
      .set("seed", Json::uinteger(report.seed))
      .set("delta", Json::number(report.delta))
      .set("violations", Json::integer(report.violations))
      .set("truncations", Json::integer(report.truncations))
      .set("worst_slack", Json::number(report.worst_slack));
}

std::string iss_rollouts_csv(const IssReport& report) {
  CsvWriter csv({"rollout_id", "k", "dist_to_xstar", "bound_value",
                 "violated"});
  for (const auto& row : report.rows) {
    csv.cell(static_cast<std::int64_t>(row.rollout))
        .cell(static_cast<std::int64_t>(row.step))
        .cell(row.distance)
        .cell(row.bound)
        .cell(row.violated);
    csv.end_row();
  }
  return csv.text();
}

Json invariance_to_json(const InvarianceReport& report,
                        const InvarianceConfig& icfg) {
  return Json::object()
      .set("pass", Json::boolean(report.pass))
      .set("worst_excess", Json::number(report.worst_excess))
      .set("boundary_samples", Json::integer(icfg.boundary_samples))
      .set("excess_tol", Json::number(icfg.excess_tol))
      .set("seed", Json::uinteger(icfg.seed));
}

Json barrier_report_to_json(const BarrierVerificationReport& report) {
  return Json::object()
      .set("schema", Json::string("deltacert/barrier-report/v1"))
      .set("delta", Json::number(report.delta))
      .set("gamma_b", Json::number(report.gamma_b))
      .set("samples", Json::integer(report.samples))
      .set("epsilon", Json::number(report.epsilon))
      .set("d_minus", Json::number(report.d_minus))
      .set("d_plus", Json::number(report.d_plus))
      .set("chi", Json::number(report.chi))
      .set("region_level", Json::number(report.region_level))
      .set("r_star", Json::integer(report.r_star))
      .set("failures", Json::integer(report.failures))
      .set("worst_condition_margin",
           Json::number(report.worst_condition_margin))
      .set("pass", Json::boolean(report.pass))
      .set("confidence", Json::number(report.confidence));
}

Json barrier_max_to_json(const BarrierMaxReport& report) {
  Json accepted = Json::array();
  for (const double d : report.accepted) accepted.push(Json::number(d));
  Json reports = Json::array();
  for (const auto& r : report.reports) reports.push(barrier_report_to_json(r));
  return Json::object()
      .set("schema", Json::string("deltacert/barrier-max-report/v1"))
      .set("delta_star", Json::number(report.delta_star))
      .set("any_passed", Json::boolean(report.any_passed))
      .set("confidence", Json::number(report.confidence))
      .set("accepted", std::move(accepted))
      .set("reports", std::move(reports));
}

std::string trials_csv(const std::vector<TrialRecord>& trials) {
  CsvWriter csv({"delta", "chi", "worst_margin", "pass"});
  for (const auto& tr : trials) {
    csv.cell(tr.delta).cell(tr.chi).cell(tr.worst_margin).cell(tr.pass);
    csv.end_row();
  }
  return csv.text();
}

std::string trajectory_csv(const HybridSystemModel& sys,
                           const std::vector<double>& times,
                           const std::vector<Vector>& states) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < sys.dim; ++i) {
    header.push_back(i < static_cast<int>(sys.state_names.size())
                         ? sys.state_names[i]
                         : "x" + std::to_string(i));
  }
  header.push_back("h");
  CsvWriter csv(header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    csv.cell(times[i]);
    for (int j = 0; j < sys.dim; ++j) csv.cell(states[i](j));
    csv.cell(sys.guard(states[i]));
    csv.end_row();
  }
  return csv.text();
}

std::string steps_csv(const HybridSystemModel& sys,
                      const std::vector<double>& disturbances,
                      const std::vector<Vector>& states) {
  std::vector<std::string> header{"k", "d_k"};
  for (int i = 0; i < sys.dim; ++i) {
    header.push_back(i < static_cast<int>(sys.state_names.size())
                         ? sys.state_names[i]
                         : "x" + std::to_string(i));
  }
  CsvWriter csv(header);
  for (std::size_t k = 0; k < states.size(); ++k) {
    csv.cell(static_cast<std::int64_t>(k)).cell(disturbances[k]);
    for (int j = 0; j < sys.dim; ++j) csv.cell(states[k](j));
    csv.end_row();
  }
  return csv.text();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DegenerateConfig("cannot open for writing: " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DegenerateConfig("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace deltacert
