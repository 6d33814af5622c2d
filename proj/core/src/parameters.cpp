#include "pmcmc/parameters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <system_error>

#include "pmcmc/errors.hpp"

namespace pmcmc {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("format_double: to_chars failed");
  return {buf, end};
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw PreconditionError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

Parameters::Parameters(std::initializer_list<Entry> entries) {
  for (const auto& [name, value] : entries) set(name, value);
}

void Parameters::set(std::string_view name, double value) {
  if (name.empty()) throw PreconditionError("parameter name must not be empty");
  if (!std::isfinite(value)) {
    throw PreconditionError("parameter '" + std::string(name) + "' is not finite");
  }
  for (auto& entry : entries_) {
    if (entry.first == name) {
      entry.second = value;
      return;
    }
  }
  entries_.emplace_back(std::string(name), value);
}

std::optional<double> Parameters::find(std::string_view name) const noexcept {
  for (const auto& entry : entries_) {
    if (entry.first == name) return entry.second;
  }
  return std::nullopt;
}

double Parameters::at(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw PreconditionError("unknown parameter '" + std::string(name) + "'");
}

std::vector<std::string> Parameters::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.first);
  return out;
}

std::vector<double> Parameters::values() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.second);
  return out;
}

std::string Parameters::to_text() const {
  std::string out;
  for (const auto& [name, value] : entries_) {
    out += name;
    out += '=';
    out += format_double(value);
    out += '\n';
  }
  return out;
}

Parameters Parameters::from_text(std::string_view text) {
  Parameters params;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw PreconditionError("line " + std::to_string(line_no) + ": expected name=value");
    }
    const std::string_view name = line.substr(0, eq);
    if (params.contains(name)) {
      throw PreconditionError("line " + std::to_string(line_no) + ": duplicate parameter '" +
                              std::string(name) + "'");
    }
    params.set(name, parse_double(line.substr(eq + 1)));
  }
  return params;
}

void ParameterSpace::add(std::string name, Interval bounds) {
  if (name.empty()) throw PreconditionError("parameter name must not be empty");
  if (std::isnan(bounds.lower) || std::isnan(bounds.upper) || !(bounds.lower < bounds.upper)) {
    throw PreconditionError("parameter '" + name + "': bounds need lower < upper");
  }
  if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
    throw PreconditionError("duplicate parameter '" + name + "'");
  }
  names_.push_back(std::move(name));
  bounds_.push_back(bounds);
}

const Interval& ParameterSpace::bounds(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return bounds_[i];
  }
  throw PreconditionError("unknown parameter '" + std::string(name) + "'");
}

bool ParameterSpace::contains(const Parameters& params) const noexcept {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto v = params.find(names_[i]);
    if (!v || !bounds_[i].contains(*v)) return false;
  }
  return true;
}

void ParameterSpace::validate(const Parameters& params) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto v = params.find(names_[i]);
    if (!v) throw PreconditionError("missing parameter '" + names_[i] + "'");
    if (!bounds_[i].contains(*v)) {
      throw PreconditionError("parameter '" + names_[i] + "' = " + format_double(*v) +
                              " outside [" + format_double(bounds_[i].lower) + ", " +
                              format_double(bounds_[i].upper) + "]");
    }
  }
}

Parameters ParameterSpace::canonical(const Parameters& params) const {
  Parameters out;
  for (const auto& name : names_) {
    if (auto v = params.find(name)) out.set(name, *v);
  }
  return out;
}

}  // namespace pmcmc
