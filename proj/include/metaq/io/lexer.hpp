#pragma once

// Tokenizer shared by the text formats: identifiers (which may contain
// primes, as in Part'), double-quoted strings, $n column references and
// punctuation. '#' starts a comment that runs to the end of the line.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "metaq/error.hpp"

namespace metaq::io {

struct Token {
  enum class Kind { identifier, string, column, punct, newline, end };

  Kind kind = Kind::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is(std::string_view p) const { return kind == Kind::punct && text == p; }
  bool is_word(std::string_view w) const { return kind == Kind::identifier && text == w; }
};

inline bool identifier_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool identifier_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '-';
}

/// Splits text into tokens. Newlines are emitted only when keep_newlines is
/// set and no bracket is open, so a declaration may continue over several
/// lines inside <...>, {...} or (...).
inline std::vector<Token> tokenize(std::string_view text, bool keep_newlines) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  int depth = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (c == '\n') {
      if (keep_newlines && depth == 0 && (out.empty() || out.back().kind != Token::Kind::newline))
        out.push_back({Token::Kind::newline, "\n", line, col});
      advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t{Token::Kind::punct, {}, line, col};
    if (identifier_start(c)) {
      std::size_t j = i;
      while (j < text.size() && identifier_char(text[j]) && !(text[j] == '-' && j + 1 < text.size() && text[j + 1] == '>'))
        ++j;
      t.kind = Token::Kind::identifier;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      advance(1);
      while (true) {
        if (i >= text.size() || text[i] == '\n') throw ParseError("unterminated string literal", t.line, t.column);
        char d = text[i];
        if (d == '"') {
          advance(1);
          break;
        }
        if (d == '\\') {
          advance(1);
          if (i >= text.size()) throw ParseError("unterminated string literal", t.line, t.column);
          d = text[i];
          if (d == 'n') d = '\n';
          else if (d == 't') d = '\t';
        }
        t.text += d;
        advance(1);
      }
      t.kind = Token::Kind::string;
    } else if (c == '$') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j == i + 1) throw ParseError("expected a column number after '$'", line, col);
      t.kind = Token::Kind::column;
      t.text = std::string(text.substr(i + 1, j - i - 1));
      advance(j - i);
    } else if (text.substr(i, 2) == ":-" || text.substr(i, 2) == ":=" || text.substr(i, 2) == "<=" ||
               text.substr(i, 2) == "->") {
      t.text = std::string(text.substr(i, 2));
      advance(2);
    } else if (std::string_view("()<>{}[],;:=.|*").find(c) != std::string_view::npos) {
      t.text = std::string(1, c);
      if (c == '(' || c == '<' || c == '{' || c == '[') ++depth;
      if ((c == ')' || c == '>' || c == '}' || c == ']') && depth > 0) --depth;
      advance(1);
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back(std::move(t));
  }
  out.push_back({Token::Kind::end, {}, line, col});
  return out;
}

/// Cursor over a token vector with the usual expect/accept helpers.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[k];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Token::Kind::end; }

  [[noreturn]] void fail(const std::string& what) const { fail_at(peek(), what); }
  [[noreturn]] static void fail_at(const Token& t, const std::string& what) {
    throw ParseError(what, t.line, t.column);
  }

  bool accept(std::string_view p) {
    if (!peek().is(p)) return false;
    next();
    return true;
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "'" + found());
  }
  bool accept_word(std::string_view w) {
    if (!peek().is_word(w)) return false;
    next();
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'" + found());
  }
  std::string identifier(const char* what = "an identifier") {
    if (peek().kind != Token::Kind::identifier) fail(std::string("expected ") + what + found());
    return next().text;
  }
  std::string string_literal() {
    if (peek().kind != Token::Kind::string) fail("expected a string literal" + found());
    return next().text;
  }
  int column_ref() {
    if (peek().kind != Token::Kind::column) fail("expected a column reference like $1" + found());
    const Token& t = next();
    int n = std::stoi(t.text);
    if (n < 1) fail_at(t, "column numbers start at 1");
    return n;
  }
  bool accept_newline() {
    if (peek().kind != Token::Kind::newline) return false;
    next();
    return true;
  }
  void skip_newlines() {
    while (accept_newline()) {
    }
  }
  void end_of_statement() {
    if (at_end()) return;
    if (!accept_newline()) fail("expected end of line" + found());
  }

  std::string found() const {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::end: return ", found end of input";
      case Token::Kind::newline: return ", found end of line";
      case Token::Kind::string: return ", found string \"" + t.text + "\"";
      case Token::Kind::column: return ", found $" + t.text;
      default: return ", found '" + t.text + "'";
    }
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace metaq::io
