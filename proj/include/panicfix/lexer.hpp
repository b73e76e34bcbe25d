#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace panicfix {

enum class TokenKind {
  Ident,      // identifiers and keywords
  Lifetime,   // 'a (but not char literals)
  Number,
  String,     // "..", r"..", r#".."#, b"..", br#".."#
  CharLit,
  Punct,      // operators and separators, longest-match
  OpenParen, CloseParen,
  OpenBrace, CloseBrace,
  OpenBracket, CloseBracket,
  Eof,
};

struct Token {
  TokenKind kind = TokenKind::Eof;
  uint32_t start = 0;  // byte offsets into the source, [start, end)
  uint32_t end = 0;
  std::string_view text;

  bool is(TokenKind k) const { return kind == k; }
  bool is_punct(std::string_view p) const { return kind == TokenKind::Punct && text == p; }
  bool is_ident(std::string_view id) const { return kind == TokenKind::Ident && text == id; }
  bool is_open() const {
    return kind == TokenKind::OpenParen || kind == TokenKind::OpenBrace ||
           kind == TokenKind::OpenBracket;
  }
  bool is_close() const {
    return kind == TokenKind::CloseParen || kind == TokenKind::CloseBrace ||
           kind == TokenKind::CloseBracket;
  }
};

/// Tokenizes source text. Comments and whitespace are dropped; every token
/// keeps its exact byte span. Throws LexError (std::runtime_error) on
/// unterminated strings or block comments so callers can mark the file
/// unparsed.
struct LexError : std::runtime_error {
  explicit LexError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<Token> tokenize(std::string_view source);

/// Matching close kind for an open delimiter token.
TokenKind matching_close(TokenKind open);

}  // namespace panicfix
