#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "phsyn/hinf.hpp"
#include "phsyn/lti_eval.hpp"
#include "phsyn/passivity.hpp"
#include "phsyn/ph_core.hpp"
#include "phsyn/synthesis.hpp"

namespace phsyn {

// JSON documents with explicit dense row-major matrix arrays.
//   ph-plant/v1:     j, r, q, g, f, s, n, b1, c1, d11, d12, d21
//   ph-form/v1:      j, r, q, g, f, s, n
//   state-space/v1:  a, b, c, d
//   sampled-plant/v1: points[{omega, p11..p22 as {re, im}}]
// Schema violations raise SchemaError with a field-level message; pH
// constraint violations raise CertificateError naming the constraint.

std::string to_json_string(const PHForm& ph);
std::string to_json_string(const PHPlant& plant);
std::string to_json_string(const StateSpace& ss);
std::string to_json_string(const SampledPlant& sp);

void save_ph_form(const PHForm& ph, const std::string& path);
void save_ph_plant(const PHPlant& plant, const std::string& path);
void save_statespace(const StateSpace& ss, const std::string& path);
void save_sampled_plant(const SampledPlant& sp, const std::string& path);

struct LoadedPlant {
    std::optional<PHPlant> ph;
    std::optional<SampledPlant> sampled;
};

/// Loads a ph-plant/v1 or sampled-plant/v1 document; validates structure
/// and, for pH plants, the Definition-3.1 constraints.
LoadedPlant load_plant(const std::string& path);

PHPlant load_ph_plant(const std::string& path);
PHForm load_ph_form(const std::string& path);

/// Accepts ph-form/v1 (converted to state space) or state-space/v1.
StateSpace load_controller(const std::string& path);

// CSV emitters; header row required.
void write_sigma_csv(const SigmaTable& table, std::ostream& os);
void write_popov_csv(const PopovTable& table, std::ostream& os);

std::string to_json_string(const PassivityCertificate& cert);
void save_certificate(const PassivityCertificate& cert, const std::string& path);

std::string to_json_string(const SynthesisReport& report);
void save_synthesis_report(const SynthesisReport& report,
                           const std::string& path);

}  // namespace phsyn
