#pragma once

#include <string>

#include "form.hpp"
#include "report.hpp"
#include "structure.hpp"

namespace twistor_forge {

// Forms:      {"dim", "degree", "terms": [{"indices": [1-based, increasing],
//              "fourier": [{"freq": [...], "powers"?: [...], "re", "im"}]}]}
// Structures: {"dim", "matrix": [[scalar...]...], "denominator"?: scalar}
// where a scalar is {"fourier": [...]}. "powers" is written only for modes
// with a polynomial layer.

inline Json to_json(const FourierScalar& s) {
  Json modes = Json::array();
  for (const auto& [mode, c] : s.terms()) {
    Json m;
    m["freq"] = mode.freq;
    if (mode.has_polynomial()) m["powers"] = mode.powers;
    m["re"] = c.real();
    m["im"] = c.imag();
    modes.push_back(std::move(m));
  }
  return Json{{"fourier", modes}};
}

inline Json to_json(const Form& f) {
  Json terms = Json::array();
  for (const auto& [mask, c] : f.terms()) {
    Json idx = Json::array();
    for (int i : mask_indices(mask)) idx.push_back(i + 1);
    terms.push_back(Json{{"indices", idx}, {"fourier", to_json(c)["fourier"]}});
  }
  Json j;
  j["dim"] = f.dim();
  j["degree"] = f.degree();
  j["terms"] = terms;
  return j;
}

inline Json to_json(const ComplexStructureField& j) {
  const int d = j.dim();
  Json rows = Json::array();
  for (int r = 0; r < d; ++r) {
    Json row = Json::array();
    for (int c = 0; c < d; ++c) row.push_back(to_json(j.numerator()(r, c)));
    rows.push_back(row);
  }
  Json out;
  out["dim"] = d;
  out["matrix"] = rows;
  if (!(j.denominator() == FourierScalar::constant(d, 1.0))) out["denominator"] = to_json(j.denominator());
  return out;
}

namespace detail {

template <class F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

inline std::vector<int> int_vector(const Json& j, int expected, const char* key) {
  if (!j.is_array() || static_cast<int>(j.size()) != expected)
    throw ParseError(std::string("\"") + key + "\" must have one entry per coordinate");
  return j.get<std::vector<int>>();
}

inline FourierScalar scalar_from_modes(const Json& modes, int dim) {
  if (!modes.is_array()) throw ParseError("\"fourier\" must be an array");
  FourierScalar s(dim);
  for (const auto& m : modes) {
    Mode mode{int_vector(m.at("freq"), dim, "freq"),
              m.contains("powers") ? int_vector(m.at("powers"), dim, "powers")
                                   : std::vector<int>(static_cast<std::size_t>(dim), 0)};
    for (int e : mode.powers)
      if (e < 0) throw ParseError("negative polynomial power");
    const complex c{m.at("re").get<double>(), m.at("im").get<double>()};
    if (s.terms().count(mode)) throw ParseError("duplicate Fourier mode");
    s.set_term(mode, c);
  }
  return s;
}

}  // namespace detail

inline FourierScalar scalar_from_json(const Json& j, int dim) {
  return detail::parse_guard("scalar", [&] { return detail::scalar_from_modes(j.at("fourier"), dim); });
}

inline Form form_from_json(const Json& j) {
  return detail::parse_guard("form", [&] {
    const int dim = j.at("dim").get<int>();
    const int degree = j.at("degree").get<int>();
    if (dim < 1 || dim > kMaxGenerators) throw ParseError("unsupported dimension");
    if (degree < 0 || degree > dim) throw ParseError("degree out of range");
    Form f(dim, degree);
    for (const auto& t : j.at("terms")) {
      const auto idx = t.at("indices").get<std::vector<int>>();
      if (static_cast<int>(idx.size()) != degree) throw ParseError("index count differs from degree");
      Mask mask = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 1 || idx[k] > dim) throw ParseError("index out of range");
        if (k > 0 && idx[k] <= idx[k - 1]) throw ParseError("indices must be strictly increasing");
        mask |= Mask{1} << (idx[k] - 1);
      }
      if (f.find(mask)) throw ParseError("duplicate index set");
      FourierScalar c = detail::scalar_from_modes(t.at("fourier"), dim);
      if (!c.is_zero()) f.set(mask, c);
    }
    return f;
  });
}

/// Parses and validates (J^2 = -Id on the evaluation grid).
inline ComplexStructureField structure_from_json(const Json& j, const GridOptions& grid = {}) {
  return detail::parse_guard("structure", [&] {
    const int d = j.at("dim").get<int>();
    if (d < 2 || d % 2 || d > kMaxGenerators) throw ParseError("structure dimension must be even");
    const auto& rows = j.at("matrix");
    if (!rows.is_array() || static_cast<int>(rows.size()) != d) throw ParseError("matrix must have dim rows");
    ScalarMatrix m(d, d, d);
    for (int r = 0; r < d; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != d) throw ParseError("matrix rows must have dim entries");
      for (int c = 0; c < d; ++c) m(r, c) = scalar_from_json(row[static_cast<std::size_t>(c)], d);
    }
    FourierScalar den = j.contains("denominator") ? scalar_from_json(j.at("denominator"), d) : FourierScalar::constant(d, 1.0);
    return ComplexStructureField::from_fields(std::move(m), std::move(den), grid);
  });
}

}  // namespace twistor_forge
