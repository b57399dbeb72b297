#include "afo/signal_json.hpp"

#include "afo/errors.hpp"

#include <string>

namespace afo {

using nlohmann::json;

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

double number(const json &obj, const char *key, std::optional<double> fallback = std::nullopt) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback)
      return *fallback;
    throw ConfigurationError(std::string("signal term: missing field '") + key + "'");
  }
  if (!it->is_number())
    throw ConfigurationError(std::string("signal term: field '") + key + "' must be a number");
  return it->get<double>();
}

std::vector<double> numbers(const json &obj, const char *key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array())
    throw ConfigurationError(std::string("signal term: '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto &v : *it) {
    if (!v.is_number())
      throw ConfigurationError(std::string("signal term: '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json term_to_json(const SignalTerm &term) {
  return std::visit(
      overloaded{
          [](const Cosine &c) {
            return json{{"kind", "cosine"}, {"amplitude", c.amplitude}, {"freq", c.freq},
                        {"phase", c.phase}};
          },
          [](const LinearChirp &c) {
            return json{{"kind", "linear_chirp"}, {"amplitude", c.amplitude},
                        {"base_freq", c.base_freq}, {"rate", c.rate}};
          },
          [](const QuadraticChirp &c) {
            return json{{"kind", "quadratic_chirp"}, {"amplitude", c.amplitude},
                        {"base_freq", c.base_freq}, {"cubic_coeff", c.cubic_coeff}};
          },
          [](const FmGaussian &g) {
            return json{{"kind", "fm_gaussian"}, {"amplitude", g.amplitude},
                        {"carrier", g.carrier}, {"center", g.center}, {"width_sq", g.width_sq}};
          },
          [](const FmSine &f) {
            return json{{"kind", "fm_sine"}, {"carrier", f.carrier}, {"mod_freq", f.mod_freq}};
          },
          [](const SampledTrace &s) {
            if (const auto &r = s.recipe()) {
              return json{{"kind", "lorenz"},        {"duration", r->duration},
                          {"rel_tol", r->rel_tol},   {"init", r->init},
                          {"transient", r->transient}, {"output_step", r->output_step}};
            }
            return json{{"kind", "sampled"},
                        {"times", std::vector<double>(s.times().begin(), s.times().end())},
                        {"values", std::vector<double>(s.values().begin(), s.values().end())}};
          },
          [](const Constant &c) { return json{{"kind", "constant"}, {"offset", c.offset}}; },
      },
      term);
}

SignalTerm term_from_json(const json &obj) {
  if (!obj.is_object())
    throw ConfigurationError("signal term must be an object");
  auto kind_it = obj.find("kind");
  if (kind_it == obj.end() || !kind_it->is_string())
    throw ConfigurationError("signal term: missing string field 'kind'");
  const std::string kind = kind_it->get<std::string>();

  if (kind == "cosine")
    return Cosine{number(obj, "amplitude", 1.0), number(obj, "freq"), number(obj, "phase", 0.0)};
  if (kind == "linear_chirp")
    return LinearChirp{number(obj, "amplitude", 1.0), number(obj, "base_freq"),
                       number(obj, "rate")};
  if (kind == "quadratic_chirp")
    return QuadraticChirp{number(obj, "amplitude", 1.0), number(obj, "base_freq"),
                          number(obj, "cubic_coeff")};
  if (kind == "fm_gaussian")
    return FmGaussian{number(obj, "amplitude", 1.0), number(obj, "carrier"),
                      number(obj, "center"), number(obj, "width_sq")};
  if (kind == "fm_sine")
    return FmSine{number(obj, "carrier"), number(obj, "mod_freq")};
  if (kind == "constant")
    return Constant{number(obj, "offset")};
  if (kind == "sampled")
    return SampledTrace(numbers(obj, "times"), numbers(obj, "values"));
  if (kind == "lorenz") {
    LorenzRecipe r;
    r.duration = number(obj, "duration");
    r.rel_tol = number(obj, "rel_tol", r.rel_tol);
    r.transient = number(obj, "transient", r.transient);
    r.output_step = number(obj, "output_step", r.output_step);
    if (obj.contains("init")) {
      auto init = numbers(obj, "init");
      if (init.size() != 3)
        throw ConfigurationError("lorenz term: 'init' must have three entries");
      r.init = {init[0], init[1], init[2]};
    }
    return lorenz_trace(r);
  }
  throw ConfigurationError("signal term: unknown kind '" + kind + "'");
}

} // namespace

json signal_to_json(const SignalSpec &spec) {
  json terms = json::array();
  for (const auto &term : spec.terms())
    terms.push_back(term_to_json(term));
  return json{{"terms", terms}};
}

SignalSpec signal_from_json(const json &doc) {
  if (!doc.is_object() || !doc.contains("terms") || !doc["terms"].is_array())
    throw ConfigurationError("signal: expected an object with a 'terms' array");
  try {
    std::vector<SignalTerm> terms;
    for (const auto &t : doc["terms"])
      terms.push_back(term_from_json(t));
    return SignalSpec(std::move(terms));
  } catch (const DomainError &e) {
    throw ConfigurationError(e.what());
  }
}

} // namespace afo
