#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "teamsem/syntax.hpp"

namespace teamsem::detail {

struct SExpr {
  bool is_atom = false;
  std::string text;
  std::vector<SExpr> items;
  SourceSpan span;

  bool is_list() const { return !is_atom; }
  bool head_is(std::string_view h) const {
    return !is_atom && !items.empty() && items[0].is_atom && items[0].text == h;
  }
};

/// Reads exactly one s-expression (';' starts a line comment).
SExpr read_sexpr(std::string_view text);

}  // namespace teamsem::detail
