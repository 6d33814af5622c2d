#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmcmc {

/// Named real-valued parameter vector. Entries keep insertion order, which
/// is the declaration order of the parameter space they belong to.
class Parameters {
 public:
  using Entry = std::pair<std::string, double>;

  Parameters() = default;
  Parameters(std::initializer_list<Entry> entries);

  /// Updates an existing entry or appends a new one. Throws
  /// PreconditionError for non-finite values or empty names.
  void set(std::string_view name, double value);

  [[nodiscard]] double at(std::string_view name) const;
  [[nodiscard]] std::optional<double> find(std::string_view name) const noexcept;
  [[nodiscard]] bool contains(std::string_view name) const noexcept { return find(name).has_value(); }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::span<const Entry> entries() const noexcept { return entries_; }
  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] std::vector<double> values() const;

  /// One `name=value` line per entry; values use the shortest decimal form
  /// that parses back to the identical double.
  [[nodiscard]] std::string to_text() const;
  static Parameters from_text(std::string_view text);

  friend bool operator==(const Parameters&, const Parameters&) = default;

 private:
  std::vector<Entry> entries_;
};

struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Ordered parameter names with closed per-name bounds.
class ParameterSpace {
 public:
  ParameterSpace() = default;

  void add(std::string name, Interval bounds);

  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] std::span<const std::string> names() const noexcept { return names_; }
  [[nodiscard]] const Interval& bounds(std::string_view name) const;

  /// True when every declared name is present and inside its bounds.
  [[nodiscard]] bool contains(const Parameters& params) const noexcept;

  /// Throws PreconditionError naming the first missing or out-of-bounds entry.
  void validate(const Parameters& params) const;

  /// Re-orders `params` into declaration order, dropping unknown names.
  [[nodiscard]] Parameters canonical(const Parameters& params) const;

 private:
  std::vector<std::string> names_;
  std::vector<Interval> bounds_;
};

/// Shortest round-trip decimal representation of a double.
[[nodiscard]] std::string format_double(double value);
/// Strict full-string parse; throws PreconditionError on junk.
[[nodiscard]] double parse_double(std::string_view text);

}  // namespace pmcmc
