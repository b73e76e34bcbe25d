#include "panicfix/lexer.hpp"

#include <array>
#include <cctype>

namespace panicfix {

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool ident_continue(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

// Multi-character operators, longest first within each leading character.
constexpr std::array<std::string_view, 27> kMultiPunct = {
    "<<=", ">>=", "..=", "...",
    "==", "!=", "<=", ">=", "&&", "||", "->", "=>", "..", "::",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
    "?",  "#",  "$",
};

}  // namespace

TokenKind matching_close(TokenKind open) {
  switch (open) {
    case TokenKind::OpenParen: return TokenKind::CloseParen;
    case TokenKind::OpenBrace: return TokenKind::CloseBrace;
    case TokenKind::OpenBracket: return TokenKind::CloseBracket;
    default: return TokenKind::Eof;
  }
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = src.size();

  auto push = [&](TokenKind k, size_t start, size_t end) {
    out.push_back(Token{k, static_cast<uint32_t>(start), static_cast<uint32_t>(end),
                        src.substr(start, end - start)});
  };

  auto scan_string_body = [&](size_t start) -> size_t {
    // src[start] == '"'; returns index past the closing quote.
    size_t j = start + 1;
    while (j < n) {
      if (src[j] == '\\') {
        j += 2;
        continue;
      }
      if (src[j] == '"') return j + 1;
      ++j;
    }
    throw LexError("unterminated string literal");
  };

  auto scan_raw_string = [&](size_t start) -> size_t {
    // src[start] == 'r' (or after the b prefix); hashes then a quote.
    size_t j = start + 1;
    size_t hashes = 0;
    while (j < n && src[j] == '#') {
      ++hashes;
      ++j;
    }
    if (j >= n || src[j] != '"') throw LexError("malformed raw string");
    ++j;
    while (j < n) {
      if (src[j] == '"') {
        size_t k = j + 1, seen = 0;
        while (k < n && seen < hashes && src[k] == '#') {
          ++seen;
          ++k;
        }
        if (seen == hashes) return k;
      }
      ++j;
    }
    throw LexError("unterminated raw string literal");
  };

  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    // Comments.
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      size_t depth = 1;
      size_t j = i + 2;
      while (j < n && depth > 0) {
        if (src[j] == '/' && j + 1 < n && src[j + 1] == '*') {
          ++depth;
          j += 2;
        } else if (src[j] == '*' && j + 1 < n && src[j + 1] == '/') {
          --depth;
          j += 2;
        } else {
          ++j;
        }
      }
      if (depth != 0) throw LexError("unterminated block comment");
      i = j;
      continue;
    }
    // Raw / byte strings.
    if (c == 'r' && i + 1 < n && (src[i + 1] == '"' || src[i + 1] == '#')) {
      size_t end = scan_raw_string(i);
      push(TokenKind::String, i, end);
      i = end;
      continue;
    }
    if (c == 'b' && i + 1 < n) {
      if (src[i + 1] == '"') {
        size_t end = scan_string_body(i + 1);
        push(TokenKind::String, i, end);
        i = end;
        continue;
      }
      if (src[i + 1] == 'r' && i + 2 < n && (src[i + 2] == '"' || src[i + 2] == '#')) {
        size_t end = scan_raw_string(i + 1);
        push(TokenKind::String, i, end);
        i = end;
        continue;
      }
      if (src[i + 1] == '\'') {
        // byte char literal b'x'
        size_t j = i + 2;
        if (j < n && src[j] == '\\') ++j;
        if (j + 1 < n && src[j + 1] == '\'') {
          push(TokenKind::CharLit, i, j + 2);
          i = j + 2;
          continue;
        }
      }
    }
    if (c == '"') {
      size_t end = scan_string_body(i);
      push(TokenKind::String, i, end);
      i = end;
      continue;
    }
    // Char literal vs lifetime: a quote starts a char literal only when the
    // closing quote appears after one (possibly escaped or multibyte) char.
    if (c == '\'') {
      size_t j = i + 1;
      if (j < n && src[j] == '\\') {
        size_t k = j + 1;
        while (k < n && src[k] != '\'') ++k;
        if (k < n) {
          push(TokenKind::CharLit, i, k + 1);
          i = k + 1;
          continue;
        }
      } else if (j < n) {
        size_t char_len = 1;
        unsigned char uc = static_cast<unsigned char>(src[j]);
        if (uc >= 0xF0) char_len = 4;
        else if (uc >= 0xE0) char_len = 3;
        else if (uc >= 0xC0) char_len = 2;
        if (j + char_len < n && src[j + char_len] == '\'') {
          push(TokenKind::CharLit, i, j + char_len + 1);
          i = j + char_len + 1;
          continue;
        }
      }
      // Lifetime: 'ident
      size_t k = i + 1;
      while (k < n && ident_continue(src[k])) ++k;
      push(TokenKind::Lifetime, i, k);
      i = k;
      continue;
    }
    if (ident_start(c)) {
      size_t j = i + 1;
      while (j < n && ident_continue(src[j])) ++j;
      push(TokenKind::Ident, i, j);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i + 1;
      // Digits, type suffixes, underscores, hex/bin/oct, exponents, and a
      // fractional part -- but not the `..` of a range.
      while (j < n) {
        char d = src[j];
        if (ident_continue(d)) {
          ++j;
        } else if (d == '.' && j + 1 < n && src[j + 1] != '.' && !ident_start(src[j + 1])) {
          ++j;
        } else if ((d == '+' || d == '-') && (src[j - 1] == 'e' || src[j - 1] == 'E')) {
          ++j;
        } else {
          break;
        }
      }
      push(TokenKind::Number, i, j);
      i = j;
      continue;
    }
    switch (c) {
      case '(': push(TokenKind::OpenParen, i, i + 1); ++i; continue;
      case ')': push(TokenKind::CloseParen, i, i + 1); ++i; continue;
      case '{': push(TokenKind::OpenBrace, i, i + 1); ++i; continue;
      case '}': push(TokenKind::CloseBrace, i, i + 1); ++i; continue;
      case '[': push(TokenKind::OpenBracket, i, i + 1); ++i; continue;
      case ']': push(TokenKind::CloseBracket, i, i + 1); ++i; continue;
      default: break;
    }
    // Longest-match punctuation.
    bool matched = false;
    for (std::string_view p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        push(TokenKind::Punct, i, i + p.size());
        i += p.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    push(TokenKind::Punct, i, i + 1);
    ++i;
  }

  push(TokenKind::Eof, n, n);
  return out;
}

}  // namespace panicfix
