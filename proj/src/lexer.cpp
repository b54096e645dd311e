#include "cpssv/lexer.hpp"

#include <array>
#include <charconv>
#include <limits>

namespace cpssv {

namespace {

constexpr int kMaxDepth = 200;

constexpr std::array<std::string_view, 14> kTwoCharPunct = {"==", "!=", "<=", ">=", "&&", "||", "->",
                                                             "++", "--", "+=", "-=", "::", "..", "**"};
constexpr std::string_view kOneCharPunct = "{}()[],;=<>+-*/%!.:";

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<Token> tokenize(std::string_view text, std::shared_ptr<const std::string> file) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::uint32_t line = 1;
  std::uint32_t col = 1;

  auto span_at = [&](std::uint32_t l, std::uint32_t c, std::size_t len) {
    return SourceSpan{file, l, c, static_cast<std::uint32_t>(len)};
  };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    const std::uint32_t l0 = line;
    const std::uint32_t c0 = col;
    const std::size_t start = i;

    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      Token t;
      t.kind = TokenKind::Ident;
      t.text = std::string(text.substr(i, j - i));
      t.span = span_at(l0, c0, j - i);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      bool real = false;
      if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
        real = true;
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && is_ident_char(text[j])) {
        throw ParseError("malformed number '" + std::string(text.substr(i, j - i + 1)) + "'", span_at(l0, c0, j - i + 1));
      }
      Token t;
      t.text = std::string(text.substr(i, j - i));
      t.span = span_at(l0, c0, j - i);
      if (real) {
        t.kind = TokenKind::Real;
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.real_value);
        if (res.ec != std::errc()) throw ParseError("number out of range", t.span);
      } else {
        t.kind = TokenKind::Int;
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
        if (res.ec != std::errc()) throw ParseError("integer literal out of 64-bit range", t.span);
        t.real_value = static_cast<double>(t.int_value);
      }
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (c == '"') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < text.size()) {
        const char d = text[j];
        if (d == '\n') break;
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\' && j + 1 < text.size()) {
          const char e = text[j + 1];
          if (e == 'n') value += '\n';
          else if (e == 't') value += '\t';
          else value += e;
          j += 2;
          continue;
        }
        value += d;
        ++j;
      }
      if (!closed) throw ParseError("unterminated string literal", span_at(l0, c0, j - i));
      Token t;
      t.kind = TokenKind::String;
      t.text = std::move(value);
      t.span = span_at(l0, c0, j + 1 - i);
      advance(j + 1 - i);
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    if (i + 1 < text.size()) {
      const std::string_view two = text.substr(i, 2);
      for (auto p : kTwoCharPunct) {
        if (two == p) {
          Token t;
          t.kind = TokenKind::Punct;
          t.text = std::string(p);
          t.span = span_at(l0, c0, 2);
          advance(2);
          out.push_back(std::move(t));
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    if (kOneCharPunct.find(c) != std::string_view::npos) {
      Token t;
      t.kind = TokenKind::Punct;
      t.text = std::string(1, c);
      t.span = span_at(l0, c0, 1);
      advance(1);
      out.push_back(std::move(t));
      continue;
    }
    (void)start;
    std::string shown;
    if (static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f) {
      shown = std::string("'") + c + "'";
    } else {
      shown = "byte 0x";
      const char* hex = "0123456789abcdef";
      shown += hex[(static_cast<unsigned char>(c) >> 4) & 0xf];
      shown += hex[static_cast<unsigned char>(c) & 0xf];
    }
    throw ParseError("unexpected character " + shown, span_at(l0, c0, 1));
  }
  Token end;
  end.kind = TokenKind::End;
  end.span = span_at(line, col, 0);
  out.push_back(std::move(end));
  return out;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case TokenKind::End:
      return "end of input";
    case TokenKind::String:
      return "string \"" + t.text + "\"";
    case TokenKind::Int:
    case TokenKind::Real:
      return "number " + t.text;
    case TokenKind::Ident:
      return "'" + t.text + "'";
    case TokenKind::Punct:
      return "'" + t.text + "'";
  }
  return "token";
}

const Token& TokenCursor::peek(std::size_t ahead) const {
  const std::size_t k = pos_ + ahead;
  return k < tokens_.size() ? tokens_[k] : tokens_.back();
}

const Token& TokenCursor::next() {
  const Token& t = peek();
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return t;
}

bool TokenCursor::accept(std::string_view punct) {
  if (peek().is(punct)) {
    next();
    return true;
  }
  return false;
}

bool TokenCursor::accept_ident(std::string_view word) {
  if (peek().is_ident(word)) {
    next();
    return true;
  }
  return false;
}

const Token& TokenCursor::expect(std::string_view punct) {
  if (!peek().is(punct)) fail("'" + std::string(punct) + "'");
  return next();
}

const Token& TokenCursor::expect_ident(std::string_view word) {
  if (!peek().is_ident(word)) fail("'" + std::string(word) + "'");
  return next();
}

const Token& TokenCursor::expect_identifier(std::string_view what) {
  if (peek().kind != TokenKind::Ident) fail(what);
  return next();
}

double TokenCursor::expect_number() {
  bool neg = false;
  if (peek().is("-") && (peek(1).kind == TokenKind::Int || peek(1).kind == TokenKind::Real)) {
    next();
    neg = true;
  }
  if (peek().kind != TokenKind::Int && peek().kind != TokenKind::Real) fail("number");
  const double v = next().real_value;
  return neg ? -v : v;
}

void TokenCursor::fail(std::string_view expected) const {
  const Token& t = peek();
  throw ParseError("syntax error: expected " + std::string(expected) + ", found " + describe(t), t.span);
}

void TokenCursor::fail_at(const Token& at, std::string message) const { throw ParseError(std::move(message), at.span); }

TokenCursor::Depth::Depth(TokenCursor& c) : c_(c) {
  if (++c_.depth_ > kMaxDepth) {
    --c_.depth_;
    throw ParseError("nesting too deep", c_.peek().span);
  }
}

}  // namespace cpssv
