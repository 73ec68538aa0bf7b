#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace oal {

// Index of a region inside its corpus. Ordering is the corpus order, which
// is what every "lowest id" tie-break refers to.
struct RegionId {
  std::uint32_t value = 0;

  friend auto operator<=>(RegionId, RegionId) = default;
};

// Binary label in {-1, +1}.
enum class Label : int { Negative = -1, Positive = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }
inline Label label_from_bool(bool positive) {
  return positive ? Label::Positive : Label::Negative;
}

enum class ActionKind : std::uint8_t { Guess, LabelQuery, ExampleQuery };

struct Action {
  ActionKind kind = ActionKind::Guess;
  std::string predicate;            // empty for Guess
  std::optional<RegionId> region;   // LabelQuery only

  static Action guess() { return {}; }
  static Action label_query(std::string p, RegionId r) {
    return {ActionKind::LabelQuery, std::move(p), r};
  }
  static Action example_query(std::string p) {
    return {ActionKind::ExampleQuery, std::move(p), std::nullopt};
  }

  bool is_query() const { return kind != ActionKind::Guess; }
  friend bool operator==(const Action&, const Action&) = default;
};

const char* to_string(ActionKind kind);
std::string describe(const Action& action);

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct CorpusError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
// Violated caller contract (bad relabel, bad transcript, ...).
struct ContractError : Error {
  using Error::Error;
};
// Illegal action in an episode.
struct ProtocolError : Error {
  using Error::Error;
};

}  // namespace oal

template <>
struct std::hash<oal::RegionId> {
  std::size_t operator()(oal::RegionId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
