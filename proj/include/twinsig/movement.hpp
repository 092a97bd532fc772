#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace twinsig {

/// Direction of travel along a segment. Grid y grows northward.
enum class Heading : std::uint8_t { East, West, North, South };

enum class Turn : std::uint8_t { Through, Left, Right };

/// The eight approaches of a 4-way intersection. The enumerator value is the
/// index used by every per-movement array in the project.
enum class Movement : std::uint8_t { EBT, WBT, NBT, SBT, EBL, WBL, NBL, SBL };

inline constexpr std::size_t kMovementCount = 8;

inline constexpr std::array<Movement, kMovementCount> kAllMovements{
    Movement::EBT, Movement::WBT, Movement::NBT, Movement::SBT,
    Movement::EBL, Movement::WBL, Movement::NBL, Movement::SBL};

template <typename T>
using PerMovement = std::array<T, kMovementCount>;

constexpr std::size_t index_of(Movement m) { return static_cast<std::size_t>(m); }

constexpr bool is_left(Movement m) { return index_of(m) >= 4; }

constexpr Heading heading_of(Movement m) {
  switch (m) {
    case Movement::EBT:
    case Movement::EBL: return Heading::East;
    case Movement::WBT:
    case Movement::WBL: return Heading::West;
    case Movement::NBT:
    case Movement::NBL: return Heading::North;
    case Movement::SBT:
    case Movement::SBL: return Heading::South;
  }
  return Heading::East;
}

constexpr Movement movement_for(Heading h, bool left) {
  switch (h) {
    case Heading::East: return left ? Movement::EBL : Movement::EBT;
    case Heading::West: return left ? Movement::WBL : Movement::WBT;
    case Heading::North: return left ? Movement::NBL : Movement::NBT;
    case Heading::South: return left ? Movement::SBL : Movement::SBT;
  }
  return Movement::EBT;
}

constexpr Heading left_of(Heading h) {
  switch (h) {
    case Heading::East: return Heading::North;
    case Heading::North: return Heading::West;
    case Heading::West: return Heading::South;
    case Heading::South: return Heading::East;
  }
  return h;
}

constexpr Heading right_of(Heading h) {
  switch (h) {
    case Heading::East: return Heading::South;
    case Heading::South: return Heading::West;
    case Heading::West: return Heading::North;
    case Heading::North: return Heading::East;
  }
  return h;
}

/// Turn executed when leaving a segment heading `in` onto one heading `out`;
/// nullopt for a U-turn.
constexpr std::optional<Turn> turn_between(Heading in, Heading out) {
  if (in == out) return Turn::Through;
  if (left_of(in) == out) return Turn::Left;
  if (right_of(in) == out) return Turn::Right;
  return std::nullopt;
}

std::string_view to_string(Movement m);
std::string_view to_string(Heading h);
std::optional<Movement> parse_movement(std::string_view token);
std::optional<Heading> parse_heading(std::string_view token);

}  // namespace twinsig
