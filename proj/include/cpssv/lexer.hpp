#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cpssv/diagnostics.hpp"

namespace cpssv {

enum class TokenKind { Ident, Int, Real, String, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // identifier / punctuation / literal text (strings unescaped)
  std::int64_t int_value = 0;
  double real_value = 0.0;
  SourceSpan span;

  bool is(std::string_view punct) const { return kind == TokenKind::Punct && text == punct; }
  bool is_ident(std::string_view word) const { return kind == TokenKind::Ident && text == word; }
};

/// Splits text into tokens. `//` comments and whitespace (including newlines) are skipped.
/// Throws ParseError on malformed input (bad characters, unterminated strings, integer overflow).
std::vector<Token> tokenize(std::string_view text, std::shared_ptr<const std::string> file = nullptr);

/// Cursor over a token vector with the expected-token bookkeeping used by the parsers.
class TokenCursor {
 public:
  explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == TokenKind::End; }

  bool accept(std::string_view punct);
  bool accept_ident(std::string_view word);
  const Token& expect(std::string_view punct);
  const Token& expect_ident(std::string_view word);
  const Token& expect_identifier(std::string_view what = "identifier");
  double expect_number();

  [[noreturn]] void fail(std::string_view expected) const;
  [[noreturn]] void fail_at(const Token& at, std::string message) const;

  std::size_t position() const { return pos_; }
  void rewind(std::size_t pos) { pos_ = pos; }

  /// Guards recursive descent against pathological nesting.
  struct Depth {
    explicit Depth(TokenCursor& c);
    ~Depth() { --c_.depth_; }
    Depth(const Depth&) = delete;
    Depth& operator=(const Depth&) = delete;
    TokenCursor& c_;
  };

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

std::string describe(const Token& t);

}  // namespace cpssv
