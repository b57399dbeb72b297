#ifndef AFO_SIGNAL_JSON_HPP
#define AFO_SIGNAL_JSON_HPP

#include "afo/signals.hpp"

#include <json.hpp>

namespace afo {

// {"terms":[{"kind":"cosine","amplitude":1.3,"freq":30.0,"phase":0.4}, ...]}
//
// kinds: cosine, linear_chirp, quadratic_chirp, fm_gaussian, fm_sine,
// sampled (times/values arrays), lorenz (recipe, expanded on load), constant.

nlohmann::json signal_to_json(const SignalSpec &spec);

/// Throws ConfigurationError on malformed documents.
SignalSpec signal_from_json(const nlohmann::json &doc);

} // namespace afo

#endif // AFO_SIGNAL_JSON_HPP
