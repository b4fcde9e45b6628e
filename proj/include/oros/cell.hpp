#pragma once
#include <compare>
#include <cstdint>
#include <set>
#include <string>

namespace oros {

// Grid cell, 1-based: a = column (1..A), b = row (1..B).
struct Cell {
  int a{0};
  int b{0};
  auto operator<=>(const Cell&) const = default;
};

using CellSet = std::set<Cell>;  // ordered, deterministic iteration

inline int chebyshev(Cell u, Cell v) {
  int da = u.a > v.a ? u.a - v.a : v.a - u.a;
  int db = u.b > v.b ? u.b - v.b : v.b - u.b;
  return da > db ? da : db;
}

inline std::string cell_str(Cell c) {
  return "(" + std::to_string(c.a) + "," + std::to_string(c.b) + ")";
}

}  // namespace oros
