#pragma once

#include "stats.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rmt {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "rmtlab-report";
inline constexpr int kReportSchemaVersion = 1;

struct Verdict {
  std::string name;
  std::string rule;
  bool pass = false;
  bool withheld = false;  // the inputs needed for the verdict were not available
};

// One experiment run. Values inside `results` are grouped under "measured",
// "reference" and "bound" keys so each number carries its provenance.
struct Report {
  std::string experiment;
  Json config = Json::object();
  Json results = Json::object();
  std::vector<Verdict> verdicts;
  std::vector<Json> csv_rows;  // flat objects sharing one key set
  double wall_seconds = 0.0;

  Verdict& add_verdict(std::string name, std::string rule, bool pass) {
    verdicts.push_back({std::move(name), std::move(rule), pass, false});
    return verdicts.back();
  }

  bool pass() const {
    for (const auto& v : verdicts)
      if (!v.pass || v.withheld) return false;
    return true;
  }

  // Wall-clock time is left out unless requested so identical runs give identical bytes.
  Json to_json(bool include_timing = false) const {
    Json j;
    j["schema"] = kReportSchema;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment"] = experiment;
    j["config"] = config;
    j["results"] = results;
    Json vs = Json::array();
    for (const auto& v : verdicts) {
      Json e;
      e["name"] = v.name;
      e["rule"] = v.rule;
      e["pass"] = v.pass;
      if (v.withheld) e["withheld"] = true;
      vs.push_back(e);
    }
    j["verdicts"] = vs;
    j["pass"] = pass();
    if (include_timing) j["wall_seconds"] = wall_seconds;
    return j;
  }

  std::string dump(bool include_timing = false) const { return to_json(include_timing).dump(2) + "\n"; }

  std::string to_csv() const {
    std::ostringstream os;
    if (csv_rows.empty()) return {};
    bool first = true;
    for (const auto& [key, _] : csv_rows.front().items()) {
      os << (first ? "" : ",") << key;
      first = false;
    }
    os << '\n';
    for (const auto& row : csv_rows) {
      first = true;
      for (const auto& [key, value] : row.items()) {
        os << (first ? "" : ",");
        if (value.is_string())
          os << value.get<std::string>();
        else
          os << value.dump();
        first = false;
      }
      os << '\n';
    }
    return os.str();
  }
};

inline Json stats_json(const SampleStats& s) {
  return Json{{"count", s.count}, {"mean", s.mean},   {"stddev", s.stddev}, {"stderr", s.stderr_},
              {"min", s.min},     {"median", s.median}, {"max", s.max}};
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path);
}

}  // namespace rmt
