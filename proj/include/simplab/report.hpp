#pragma once

#include "simplab/profile.hpp"

#include <json.hpp>

#include <string>

namespace simplab {

inline constexpr const char* kVersion = "simplab 0.1.0";

// Nine significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double x);

// JSON number rounded to nine significant digits, or the format_number
// string for non-finite values.
nlohmann::ordered_json json_number(double x);

// CSV with header n,s_n,cum_s,delta_n,cum_delta,lambda_n,cum_lambda,bound_pred,bound_over,bound_under.
std::string profile_csv(const ConvergenceProfile& p);
nlohmann::ordered_json profile_json(const ConvergenceProfile& p);

// Deterministic SVG: one polyline per cumulative series plus a horizontal
// line per bound. Throws ParameterError for a profile without steps.
std::string profile_svg(const ConvergenceProfile& p);
// Writes profile_svg to `path`; nothing is created when the profile is empty.
void write_profile_svg(const ConvergenceProfile& p, const std::string& path);

std::string to_string(ProfileMode m);

} // namespace simplab
