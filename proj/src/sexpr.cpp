#include "sexpr.hpp"

#include <cctype>

namespace teamsem::detail {

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_one() {
    skip();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", here());
    SourceSpan start = here();
    char c = text_[pos_];
    if (c == ')') throw SyntaxError("unexpected ')'", start);
    if (c == '(') {
      advance();
      SExpr list;
      list.span = start;
      for (;;) {
        skip();
        if (pos_ >= text_.size()) throw SyntaxError("unclosed '('", start);
        if (text_[pos_] == ')') {
          advance();
          return list;
        }
        list.items.push_back(read_one());
      }
    }
    SExpr atom;
    atom.is_atom = true;
    atom.span = start;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      atom.text.push_back(text_[pos_]);
      advance();
    }
    return atom;
  }

  void expect_end() {
    skip();
    if (pos_ < text_.size()) throw SyntaxError("trailing input after expression", here());
  }

 private:
  SourceSpan here() const { return {line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

SExpr read_sexpr(std::string_view text) {
  Reader r(text);
  SExpr e = r.read_one();
  r.expect_end();
  return e;
}

}  // namespace teamsem::detail
