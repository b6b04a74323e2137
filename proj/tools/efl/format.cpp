#include "efl/format.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string_view>

namespace efl::cli {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto result =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

namespace {

void write_string(std::ostream& out, std::string_view text) {
  // nlohmann handles escaping and UTF-8 validation.
  out << Json(text).dump();
}

void write_value(std::ostream& out, const Json& value, int depth) {
  const std::string indent(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string closing(static_cast<std::size_t>(depth) * 2, ' ');
  switch (value.type()) {
    case Json::value_t::object: {
      if (value.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out << ",\n";
        first = false;
        out << indent;
        write_string(out, key);
        out << ": ";
        write_value(out, item, depth + 1);
      }
      out << '\n' << closing << '}';
      return;
    }
    case Json::value_t::array: {
      if (value.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      bool first = true;
      for (const auto& item : value) {
        if (!first) out << ",\n";
        first = false;
        out << indent;
        write_value(out, item, depth + 1);
      }
      out << '\n' << closing << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = value.get<double>();
      if (std::isfinite(v)) {
        out << format_double(v);
      } else {
        out << "null";
      }
      return;
    }
    case Json::value_t::string:
      write_string(out, value.get_ref<const std::string&>());
      return;
    default:
      out << value.dump();
      return;
  }
}

}  // namespace

void write_json(std::ostream& out, const Json& value) {
  write_value(out, value, 0);
  out << '\n';
}

std::string to_json_string(const Json& value) {
  std::ostringstream out;
  write_json(out, value);
  return out.str();
}

void write_csv(std::ostream& out, const Trajectory& trajectory) {
  std::string line;
  out << kCsvHeader << '\n';
  for (const Sample& sample : trajectory.samples()) {
    const FlowState& s = sample.state;
    const Observables& o = sample.obs;
    line.clear();
    for (double v : {s.t, s.x, s.y, s.xp, s.yp, o.tau, o.sigma_sq, o.scalar_curv,
                     o.ham_residual, o.first_integral_residual}) {
      line += format_double(v);
      line += ',';
    }
    if (o.h_red) line += format_double(*o.h_red);
    line += '\n';
    out << line;
  }
}

}  // namespace efl::cli
