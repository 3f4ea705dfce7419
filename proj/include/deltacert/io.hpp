#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "deltacert/certify.hpp"
#include "deltacert/hybrid.hpp"
#include "deltacert/poincare.hpp"

namespace deltacert {

/// Round-trip-exact decimal form of v (17 significant digits). Non-finite
/// values print as inf / -inf / nan.
std::string format_double(double v);

/// Insertion-ordered JSON document builder. Serialization is a pure
/// function of construction order, so documents built from the same data
/// are byte-identical; doubles use format_double.
class Json {
 public:
  Json();

  static Json object();
  static Json array();
  static Json number(double v);
  static Json integer(std::int64_t v);
  static Json uinteger(std::uint64_t v);
  static Json boolean(bool v);
  static Json string(std::string v);
  static Json vector(const Vector& v);
  static Json matrix(const Matrix& m);

  /// Appends a key (objects only). Returns *this for chaining.
  Json& set(const std::string& key, Json value);
  /// Appends an element (arrays only). Returns *this for chaining.
  Json& push(Json value);

  /// Pretty serialization, two-space indent, trailing newline.
  std::string dump() const;

 private:
  enum class Kind { kNull, kBool, kNumber, kInt, kUint, kString, kArray, kObject };
  void write(std::string& out, int depth) const;

  Kind kind_;
  bool bool_ = false;
  double number_ = 0.0;
  std::int64_t int_ = 0;
  std::uint64_t uint_ = 0;
  std::string string_;
  std::vector<Json> items_;
  std::vector<std::pair<std::string, Json>> members_;
};

/// Comma-separated table with a header row, LF line endings, and doubles
/// rendered by format_double.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& value);
  CsvWriter& cell(double value);
  CsvWriter& cell(std::int64_t value);
  CsvWriter& cell(bool value);
  /// Terminates the current row.
  void end_row();

  const std::string& text() const { return text_; }

 private:
  std::string text_;
  bool row_open_ = false;
};

Json orbit_to_json(const HybridSystemModel& sys, const PeriodicOrbit& orbit);

Json certificate_to_json(const HybridSystemModel& sys,
                         const PeriodicOrbit& orbit,
                         const DeltaRobustnessCertificate& cert,
                         const CertifyConfig& cc);

/// Reads back the fields of certificate_to_json needed by downstream
/// checks (constants, Lyapunov data, fixed point). Throws DegenerateConfig
/// on malformed documents.
DeltaRobustnessCertificate certificate_from_json(const std::string& text);

Json iss_report_to_json(const IssReport& report);
std::string iss_rollouts_csv(const IssReport& report);

Json invariance_to_json(const InvarianceReport& report,
                        const InvarianceConfig& icfg);

Json barrier_report_to_json(const BarrierVerificationReport& report);
Json barrier_max_to_json(const BarrierMaxReport& report);

std::string trials_csv(const std::vector<TrialRecord>& trials);

/// One row per accepted integrator step: t, state..., guard value.
std::string trajectory_csv(const HybridSystemModel& sys,
                           const std::vector<double>& times,
                           const std::vector<Vector>& states);

/// One row per map step: k, d_k, state...
std::string steps_csv(const HybridSystemModel& sys,
                      const std::vector<double>& disturbances,
                      const std::vector<Vector>& states);

/// Writes content to path, creating parent directories as needed.
void write_text_file(const std::string& path, const std::string& content);

/// Reads a whole file; throws DegenerateConfig when unreadable.
std::string read_text_file(const std::string& path);

}  // namespace deltacert
