#pragma once

#include <iosfwd>
#include <string>

#include "efl/integrator.hpp"
#include <nlohmann/json.hpp>

namespace efl::cli {

using Json = nlohmann::ordered_json;

// 17 significant digits, '.' separator, independent of the C++ locale.
// Non-finite values print as nan, inf, -inf.
std::string format_double(double value);

// Pretty-printed JSON (two-space indent, trailing newline). Floating-point
// numbers use format_double; non-finite numbers become null.
void write_json(std::ostream& out, const Json& value);
std::string to_json_string(const Json& value);

inline constexpr const char* kCsvHeader =
    "t,x,y,xp,yp,tau,sigma_sq,scalar_curv,ham_residual,first_integral_residual,h_red";

// Header plus one LF-terminated row per sample; h_red is empty when the
// sample is outside both gauge ranges.
void write_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace efl::cli
