#pragma once

#include <algorithm>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace twistor_forge {

using Json = nlohmann::ordered_json;

/// One named verification outcome.
struct CheckResult {
  std::string name;
  std::optional<std::complex<double>> t;
  double max_defect = 0.0;
  bool pass = true;
  Json witness;  // null when absent

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["t"] = t ? Json::array({t->real(), t->imag()}) : Json(nullptr);
    j["max_defect"] = max_defect;
    j["pass"] = pass;
    j["witness"] = witness;
    return j;
  }
};

struct Report {
  Json model;
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  const CheckResult* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }

  void append(const Report& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }

  Json to_json() const {
    Json j;
    j["model"] = model;
    j["checks"] = Json::array();
    for (const auto& c : checks) j["checks"].push_back(c.to_json());
    return j;
  }
};

inline Json complex_json(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

template <class Range>
Json vector_json(const Range& r) {
  Json j = Json::array();
  for (const auto& v : r) j.push_back(v);
  return j;
}

}  // namespace twistor_forge
