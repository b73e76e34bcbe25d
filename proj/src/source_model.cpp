#include "panicfix/source_model.hpp"

#include <algorithm>
#include <cassert>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "panicfix/errors.hpp"
#include "panicfix/lexer.hpp"

namespace fs = std::filesystem;

namespace panicfix {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::MethodCall: return "MethodCall";
    case NodeKind::FunctionCall: return "FunctionCall";
    case NodeKind::BinaryExpr: return "BinaryExpr";
    case NodeKind::IndexExpr: return "IndexExpr";
    case NodeKind::MatchExpr: return "MatchExpr";
    case NodeKind::IfExpr: return "IfExpr";
    case NodeKind::LetStmt: return "LetStmt";
    case NodeKind::Assignment: return "Assignment";
    case NodeKind::Block: return "Block";
    case NodeKind::Literal: return "Literal";
    case NodeKind::Path: return "Path";
    case NodeKind::RangeExpr: return "RangeExpr";
    case NodeKind::StructFieldInit: return "StructFieldInit";
    case NodeKind::Other: return "Other";
  }
  return "Other";
}

// ---------------------------------------------------------------------------
// LineIndex
// ---------------------------------------------------------------------------

LineIndex::LineIndex(const std::string& text) {
  text_size_ = static_cast<uint32_t>(text.size());
  line_starts_.push_back(0);
  for (uint32_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') line_starts_.push_back(i + 1);
  }
}

std::pair<uint32_t, uint32_t> LineIndex::position_of(uint32_t offset) const {
  if (offset > text_size_) offset = text_size_;
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  uint32_t line = static_cast<uint32_t>(it - line_starts_.begin());  // 1-based
  uint32_t col = offset - line_starts_[line - 1] + 1;
  return {line, col};
}

std::optional<uint32_t> LineIndex::offset_of(uint32_t line, uint32_t column) const {
  if (line == 0 || column == 0 || line > line_starts_.size()) return std::nullopt;
  uint32_t off = line_starts_[line - 1] + column - 1;
  uint32_t line_end = (line < line_starts_.size()) ? line_starts_[line] : text_size_;
  if (off > line_end) return std::nullopt;
  return off;
}

uint32_t LineIndex::line_start(uint32_t line) const {
  if (line == 0) return 0;
  if (line > line_starts_.size()) return text_size_;
  return line_starts_[line - 1];
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

bool is_expression_kind(const SyntaxNode& n) {
  switch (n.kind) {
    case NodeKind::LetStmt:
    case NodeKind::Block:
      return false;
    case NodeKind::Assignment:
      return !n.is_stmt;
    case NodeKind::Other:
      return !n.is_stmt;
    default:
      return true;
  }
}

const char* kAssignOps[] = {"=",  "+=", "-=", "*=",  "/=", "%=",
                            "&=", "|=", "^=", "<<=", ">>="};

bool is_assign_op(const Token& t) {
  if (t.kind != TokenKind::Punct) return false;
  for (const char* op : kAssignOps) {
    if (t.text == op) return true;
  }
  return false;
}

struct RawFn {
  std::string name;
  std::vector<std::string> params;
  std::string return_type;
  uint32_t body_start = 0;
  uint32_t body_end = 0;
};

class Parser {
public:
  Parser(const std::string& text, std::vector<Token> tokens)
      : text_(text), toks_(std::move(tokens)) {}

  // Returns false when the delimiters don't balance at file scope.
  bool parse(SyntaxNode& root, std::vector<RawFn>& fns) {
    if (!delimiters_balance()) return false;
    root.kind = NodeKind::Block;
    root.start = 0;
    root.end = static_cast<uint32_t>(text_.size());
    fns_ = &fns;
    parse_items(root, TokenKind::Eof);
    return true;
  }

private:
  const std::string& text_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  int depth_ = 0;
  std::vector<RawFn>* fns_ = nullptr;

  static constexpr int kMaxDepth = 200;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(size_t ahead = 1) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool at_eof() const { return cur().kind == TokenKind::Eof; }

  bool delimiters_balance() {
    std::vector<TokenKind> stack;
    for (const Token& t : toks_) {
      if (t.is_open()) stack.push_back(matching_close(t.kind));
      else if (t.is_close()) {
        if (stack.empty() || stack.back() != t.kind) return false;
        stack.pop_back();
      }
    }
    return stack.empty();
  }

  // Consumes a balanced delimiter group; cur() must be the opener.
  void skip_balanced() {
    TokenKind close = matching_close(cur().kind);
    advance();
    while (!at_eof()) {
      if (cur().is_open()) {
        skip_balanced();
        continue;
      }
      if (cur().kind == close) {
        advance();
        return;
      }
      if (cur().is_close()) return;  // mismatched; bail without consuming
      advance();
    }
  }

  // Generic-argument skip; cur() is '<'. '>>' closes two levels.
  void skip_generics() {
    int depth = 0;
    while (!at_eof()) {
      if (cur().is_punct("<") || cur().is_punct("<<")) {
        depth += cur().text.size() == 2 ? 2 : 1;
      } else if (cur().is_punct(">") || cur().is_punct(">>")) {
        depth -= cur().text.size() == 2 ? 2 : 1;
        if (depth <= 0) {
          advance();
          return;
        }
      } else if (cur().is_open()) {
        skip_balanced();
        continue;
      } else if (cur().kind == TokenKind::OpenBrace || cur().is_close() ||
                 cur().is_punct(";")) {
        return;  // tolerate malformed generics
      }
      advance();
    }
  }

  void skip_attributes() {
    while (cur().is_punct("#")) {
      advance();
      if (cur().is_punct("!")) advance();
      if (cur().kind == TokenKind::OpenBracket) skip_balanced();
    }
  }

  // --- items ---------------------------------------------------------------

  void parse_items(SyntaxNode& parent, TokenKind end_kind) {
    while (!at_eof() && cur().kind != end_kind) {
      if (cur().is_close()) break;
      parse_item(parent);
    }
  }

  void parse_item(SyntaxNode& parent) {
    skip_attributes();
    if (at_eof() || cur().is_close()) return;

    // Visibility and leading modifiers.
    if (cur().is_ident("pub")) {
      advance();
      if (cur().kind == TokenKind::OpenParen) skip_balanced();
    }
    while (cur().is_ident("const") || cur().is_ident("async") ||
           cur().is_ident("unsafe") || cur().is_ident("extern")) {
      if (cur().is_ident("const") && !peek().is_ident("fn") &&
          !peek().is_ident("unsafe") && !peek().is_ident("extern") &&
          !peek().is_ident("async")) {
        skip_to_semi_or_block();  // const item
        return;
      }
      if (cur().is_ident("extern")) {
        advance();
        if (cur().kind == TokenKind::String) advance();
        if (cur().kind == TokenKind::OpenBrace) {  // extern block
          skip_balanced();
          return;
        }
        continue;
      }
      advance();
    }

    if (cur().is_ident("fn")) {
      parse_fn(parent);
      return;
    }
    if (cur().is_ident("impl") || cur().is_ident("trait") || cur().is_ident("mod")) {
      bool is_mod = cur().is_ident("mod");
      advance();
      // Scan the header up to the body; generic params may appear first.
      while (!at_eof() && cur().kind != TokenKind::OpenBrace && !cur().is_punct(";")) {
        if (cur().is_punct("<")) {
          skip_generics();
          continue;
        }
        if (cur().is_open()) {
          skip_balanced();
          continue;
        }
        advance();
      }
      if (cur().is_punct(";")) {
        advance();  // `mod name;`
        return;
      }
      if (cur().kind == TokenKind::OpenBrace) {
        advance();
        (void)is_mod;
        parse_items(parent, TokenKind::CloseBrace);
        if (cur().kind == TokenKind::CloseBrace) advance();
      }
      return;
    }
    if (cur().is_ident("struct") || cur().is_ident("enum") || cur().is_ident("union")) {
      skip_to_semi_or_block();
      return;
    }
    if (cur().is_ident("use") || cur().is_ident("type") || cur().is_ident("static")) {
      skip_to_semi_or_block();
      return;
    }
    if (cur().is_ident("macro_rules")) {
      advance();
      if (cur().is_punct("!")) advance();
      if (cur().kind == TokenKind::Ident) advance();
      if (cur().is_open()) skip_balanced();
      return;
    }
    advance();  // unknown construct; stay total
  }

  void skip_to_semi_or_block() {
    while (!at_eof()) {
      if (cur().is_punct(";")) {
        advance();
        return;
      }
      if (cur().kind == TokenKind::OpenBrace) {
        skip_balanced();
        return;
      }
      if (cur().is_open()) {
        skip_balanced();
        continue;
      }
      if (cur().is_close()) return;
      advance();
    }
  }

  void parse_fn(SyntaxNode& parent) {
    advance();  // fn
    RawFn fn;
    if (cur().kind == TokenKind::Ident) {
      fn.name = std::string(cur().text);
      advance();
    }
    if (cur().is_punct("<")) skip_generics();

    if (cur().kind == TokenKind::OpenParen) {
      advance();
      // Split parameters on top-level commas; the declared name is the last
      // identifier before the top-level ':' (handles `mut x`, `self`,
      // `&mut self`). Pattern parameters get "".
      std::vector<Token> param_toks;
      int depth = 0;
      auto flush = [&]() {
        if (param_toks.empty()) return;
        std::string name;
        bool saw_colon = false;
        int d = 0;
        for (size_t i = 0; i < param_toks.size(); ++i) {
          const Token& t = param_toks[i];
          if (t.is_open()) ++d;
          if (t.is_close()) --d;
          if (d == 0 && t.is_punct(":")) {
            saw_colon = true;
            break;
          }
          if (d == 0 && t.kind == TokenKind::Ident && !t.is_ident("mut") &&
              !t.is_ident("ref")) {
            name = std::string(t.text);
          }
          if (d > 0) name.clear();  // tuple/struct pattern parameter
        }
        if (!saw_colon) {
          // Only `self` variants lack a type annotation.
          name = "self";
          for (const Token& t : param_toks) {
            if (t.kind != TokenKind::Ident && !t.is_punct("&") &&
                t.kind != TokenKind::Lifetime) {
              name.clear();
              break;
            }
          }
        }
        fn.params.push_back(name);
        param_toks.clear();
      };
      while (!at_eof() && !(depth == 0 && cur().kind == TokenKind::CloseParen)) {
        if (cur().is_punct(",") && depth == 0) {
          flush();
          advance();
          continue;
        }
        if (cur().is_open()) ++depth;
        if (cur().is_close()) --depth;
        if (cur().is_punct("<")) {
          // Swallow generic args as one opaque parameter chunk.
          param_toks.push_back(cur());
          skip_generics();
          continue;
        }
        param_toks.push_back(cur());
        advance();
      }
      flush();
      if (cur().kind == TokenKind::CloseParen) advance();
    }

    if (cur().is_punct("->")) {
      advance();
      uint32_t ty_start = cur().start;
      uint32_t ty_end = ty_start;
      while (!at_eof() && cur().kind != TokenKind::OpenBrace &&
             !cur().is_ident("where") && !cur().is_punct(";")) {
        if (cur().is_punct("<")) {
          skip_generics();
          ty_end = toks_[pos_ > 0 ? pos_ - 1 : 0].end;
          continue;
        }
        if (cur().is_open()) {
          ty_end = cur().end;
          skip_balanced();
          ty_end = toks_[pos_ > 0 ? pos_ - 1 : 0].end;
          continue;
        }
        ty_end = cur().end;
        advance();
      }
      if (ty_end > ty_start) {
        fn.return_type = text_.substr(ty_start, ty_end - ty_start);
      }
    }
    while (!at_eof() && cur().kind != TokenKind::OpenBrace && !cur().is_punct(";")) {
      if (cur().is_open()) {
        skip_balanced();
        continue;
      }
      advance();  // where clause
    }
    if (cur().is_punct(";")) {
      advance();  // declaration without body (trait method)
      return;
    }
    if (cur().kind != TokenKind::OpenBrace) return;

    SyntaxNode body = parse_block();
    fn.body_start = body.start;
    fn.body_end = body.end;
    parent.children.push_back(std::move(body));
    fns_->push_back(std::move(fn));
  }

  // --- statements ------------------------------------------------------------

  SyntaxNode parse_block() {
    SyntaxNode block;
    block.kind = NodeKind::Block;
    block.start = cur().start;
    advance();  // {
    while (!at_eof() && cur().kind != TokenKind::CloseBrace) {
      size_t before = pos_;
      SyntaxNode stmt = parse_stmt();
      if (stmt.end > stmt.start) block.children.push_back(std::move(stmt));
      if (pos_ == before) advance();  // guarantee progress
    }
    block.end = cur().end;
    if (cur().kind == TokenKind::CloseBrace) advance();
    return block;
  }

  bool starts_nested_item() const {
    if (cur().is_ident("fn") || cur().is_ident("struct") || cur().is_ident("enum") ||
        cur().is_ident("impl") || cur().is_ident("trait") || cur().is_ident("mod") ||
        cur().is_ident("use") || cur().is_ident("type") || cur().is_ident("union") ||
        cur().is_ident("macro_rules")) {
      return true;
    }
    if ((cur().is_ident("const") || cur().is_ident("static")) &&
        (peek().kind == TokenKind::Ident || peek().is_ident("mut")) &&
        !peek().is_ident("fn")) {
      return true;
    }
    if ((cur().is_ident("async") || cur().is_ident("unsafe")) && peek().is_ident("fn")) {
      return true;
    }
    if (cur().is_ident("pub")) return true;
    return false;
  }

  SyntaxNode parse_stmt() {
    skip_attributes();
    SyntaxNode stmt;
    stmt.is_stmt = true;
    stmt.start = cur().start;

    if (cur().is_punct(";")) {
      stmt.kind = NodeKind::Other;
      stmt.end = cur().end;
      advance();
      return stmt;
    }

    if (cur().is_ident("let")) return parse_let();

    if (starts_nested_item()) {
      // Nested items stay opaque: their bodies are not dependency elements.
      uint32_t start = cur().start;
      parse_item_opaque();
      stmt.kind = NodeKind::Other;
      stmt.start = start;
      stmt.end = prev_end();
      return stmt;
    }

    SyntaxNode expr = parse_expr(true);
    if (expr.kind == NodeKind::Assignment) {
      expr.is_stmt = true;
      if (cur().is_punct(";")) {
        expr.end = cur().end;
        advance();
      }
      return expr;
    }
    if (cur().is_punct(";")) {
      stmt.kind = NodeKind::Other;
      stmt.start = expr.start;
      stmt.end = cur().end;
      advance();
      stmt.children.push_back(std::move(expr));
      return stmt;
    }
    // Block-like or tail expression: the expression itself is the statement.
    expr.is_stmt = true;
    return expr;
  }

  void parse_item_opaque() {
    // Consume one nested item without building nodes.
    if (cur().is_ident("pub")) {
      advance();
      if (cur().kind == TokenKind::OpenParen) skip_balanced();
    }
    while (cur().is_ident("const") || cur().is_ident("async") ||
           cur().is_ident("unsafe") || cur().is_ident("static")) {
      advance();
      if (cur().is_ident("mut")) advance();
    }
    if (cur().is_ident("fn")) {
      while (!at_eof() && cur().kind != TokenKind::OpenBrace && !cur().is_punct(";")) {
        if (cur().is_punct("<")) {
          skip_generics();
          continue;
        }
        if (cur().is_open()) {
          skip_balanced();
          continue;
        }
        advance();
      }
      if (cur().kind == TokenKind::OpenBrace) skip_balanced();
      else if (cur().is_punct(";")) advance();
      return;
    }
    if (cur().is_ident("macro_rules")) {
      advance();
      if (cur().is_punct("!")) advance();
      if (cur().kind == TokenKind::Ident) advance();
      if (cur().is_open()) skip_balanced();
      return;
    }
    skip_to_semi_or_block();
  }

  uint32_t prev_end() const { return pos_ > 0 ? toks_[pos_ - 1].end : 0; }

  SyntaxNode parse_let() {
    SyntaxNode let;
    let.kind = NodeKind::LetStmt;
    let.is_stmt = true;
    let.start = cur().start;
    advance();  // let

    // Pattern (and optional type annotation) up to '=' or ';'.
    SyntaxNode pattern;
    pattern.start = cur().start;
    pattern.end = pattern.start;
    bool single_ident = false;
    uint32_t pattern_tokens = 0;
    {
      int depth = 0;
      bool in_type = false;
      while (!at_eof()) {
        if (depth == 0 && (cur().is_punct("=") || cur().is_punct(";"))) break;
        if (depth == 0 && cur().is_punct(":")) {
          in_type = true;
          advance();
          continue;
        }
        if (cur().is_punct("<") && in_type) {
          skip_generics();
          continue;
        }
        if (cur().is_open()) ++depth;
        if (cur().is_close()) {
          if (depth == 0) break;
          --depth;
        }
        if (!in_type) {
          if (pattern_tokens == 0) pattern.start = cur().start;
          pattern.end = cur().end;
          ++pattern_tokens;
          single_ident = pattern_tokens == 1 && cur().kind == TokenKind::Ident &&
                         !cur().is_ident("mut");
          if (cur().is_ident("mut") && pattern_tokens == 1) pattern_tokens = 0;
        }
        advance();
      }
    }
    pattern.kind = single_ident ? NodeKind::Path : NodeKind::Other;
    let.children.push_back(std::move(pattern));

    if (cur().is_punct("=")) {
      advance();
      SyntaxNode init = parse_expr(true);
      let.children.push_back(std::move(init));
      // let-else: `let Some(x) = e else { ... };`
      if (cur().is_ident("else")) {
        advance();
        if (cur().kind == TokenKind::OpenBrace) {
          let.children.push_back(parse_block());
        }
      }
    }
    if (cur().is_punct(";")) {
      let.end = cur().end;
      advance();
    } else {
      let.end = prev_end();
      sync_to_semi();
      let.end = std::max(let.end, prev_end());
    }
    return let;
  }

  void sync_to_semi() {
    while (!at_eof() && !cur().is_punct(";") && !cur().is_close()) {
      if (cur().is_open()) {
        skip_balanced();
        continue;
      }
      advance();
    }
    if (cur().is_punct(";")) advance();
  }

  // --- expressions -----------------------------------------------------------

  SyntaxNode parse_expr(bool allow_struct) {
    if (depth_ > kMaxDepth) {
      SyntaxNode n;
      n.kind = NodeKind::Other;
      n.start = cur().start;
      if (cur().is_open()) skip_balanced();
      else advance();
      n.end = prev_end();
      return n;
    }
    ++depth_;
    SyntaxNode n = parse_assign(allow_struct);
    --depth_;
    return n;
  }

  SyntaxNode parse_assign(bool allow_struct) {
    SyntaxNode lhs = parse_range(allow_struct);
    if (is_assign_op(cur())) {
      SyntaxNode node;
      node.kind = NodeKind::Assignment;
      node.op = std::string(cur().text);
      node.start = lhs.start;
      advance();
      SyntaxNode rhs = parse_assign(allow_struct);
      node.end = rhs.end;
      node.children.push_back(std::move(lhs));
      node.children.push_back(std::move(rhs));
      return node;
    }
    return lhs;
  }

  bool starts_expression() const {
    switch (cur().kind) {
      case TokenKind::Ident:
        return !cur().is_ident("else") && !cur().is_ident("in") &&
               !cur().is_ident("where");
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::CharLit:
      case TokenKind::OpenParen:
      case TokenKind::OpenBracket:
      case TokenKind::OpenBrace:
        return true;
      case TokenKind::Punct:
        return cur().is_punct("-") || cur().is_punct("!") || cur().is_punct("*") ||
               cur().is_punct("&") || cur().is_punct("&&") || cur().is_punct("|") ||
               cur().is_punct("||") || cur().is_punct("..") || cur().is_punct("..=") ||
               cur().is_punct("<");
      default:
        return false;
    }
  }

  SyntaxNode parse_range(bool allow_struct) {
    if (cur().is_punct("..") || cur().is_punct("..=")) {
      SyntaxNode node;
      node.kind = NodeKind::RangeExpr;
      node.op = std::string(cur().text);
      node.start = cur().start;
      node.end = cur().end;
      advance();
      if (starts_expression()) {
        SyntaxNode hi = parse_binary(0, allow_struct);
        node.end = hi.end;
        node.children.push_back(std::move(hi));
      }
      return node;
    }
    SyntaxNode lo = parse_binary(0, allow_struct);
    if (cur().is_punct("..") || cur().is_punct("..=")) {
      SyntaxNode node;
      node.kind = NodeKind::RangeExpr;
      node.op = std::string(cur().text);
      node.start = lo.start;
      node.end = cur().end;
      advance();
      node.children.push_back(std::move(lo));
      if (starts_expression()) {
        SyntaxNode hi = parse_binary(0, allow_struct);
        node.end = hi.end;
        node.children.push_back(std::move(hi));
      }
      return node;
    }
    return lo;
  }

  // Binary operators by ascending precedence tier.
  static int binary_precedence(const Token& t) {
    if (t.kind != TokenKind::Punct) return -1;
    std::string_view p = t.text;
    if (p == "||") return 0;
    if (p == "&&") return 1;
    if (p == "==" || p == "!=" || p == "<" || p == ">" || p == "<=" || p == ">=")
      return 2;
    if (p == "|") return 3;
    if (p == "^") return 4;
    if (p == "&") return 5;
    if (p == "<<" || p == ">>") return 6;
    if (p == "+" || p == "-") return 7;
    if (p == "*" || p == "/" || p == "%") return 8;
    return -1;
  }

  SyntaxNode parse_binary(int min_prec, bool allow_struct) {
    SyntaxNode lhs = parse_cast(allow_struct);
    while (true) {
      int prec = binary_precedence(cur());
      if (prec < min_prec || prec == -1) return lhs;
      SyntaxNode node;
      node.kind = NodeKind::BinaryExpr;
      node.op = std::string(cur().text);
      node.start = lhs.start;
      advance();
      SyntaxNode rhs = parse_binary(prec + 1, allow_struct);
      node.end = rhs.end;
      node.children.push_back(std::move(lhs));
      node.children.push_back(std::move(rhs));
      lhs = std::move(node);
    }
  }

  SyntaxNode parse_cast(bool allow_struct) {
    SyntaxNode inner = parse_unary(allow_struct);
    while (cur().is_ident("as")) {
      SyntaxNode node;
      node.kind = NodeKind::Other;
      node.start = inner.start;
      advance();
      skip_cast_type();
      node.end = prev_end();
      node.children.push_back(std::move(inner));
      inner = std::move(node);
    }
    return inner;
  }

  // Cast targets are simple paths (possibly pointer-prefixed); generic
  // arguments are not consumed, so `a as u32 < b` stays a comparison.
  void skip_cast_type() {
    while (cur().is_punct("&") || cur().is_punct("&&") || cur().is_punct("*") ||
           cur().is_ident("mut") || cur().is_ident("const") || cur().is_ident("dyn") ||
           cur().kind == TokenKind::Lifetime) {
      advance();
    }
    if (cur().kind == TokenKind::Ident) {
      advance();
      while (cur().is_punct("::") && peek().kind == TokenKind::Ident) {
        advance();
        advance();
      }
    } else if (cur().is_open()) {
      skip_balanced();
    }
  }

  SyntaxNode parse_unary(bool allow_struct) {
    if (cur().is_punct("-") || cur().is_punct("!") || cur().is_punct("*") ||
        cur().is_punct("&") || cur().is_punct("&&")) {
      SyntaxNode node;
      node.kind = NodeKind::Other;
      node.start = cur().start;
      advance();
      if (cur().is_ident("mut")) advance();
      SyntaxNode operand = parse_unary(allow_struct);
      node.end = operand.end;
      node.children.push_back(std::move(operand));
      return node;
    }
    return parse_postfix(allow_struct);
  }

  SyntaxNode parse_postfix(bool allow_struct) {
    SyntaxNode node = parse_primary(allow_struct);
    while (true) {
      if (cur().is_punct(".")) {
        if (peek().kind == TokenKind::Ident && peek(2).kind == TokenKind::OpenParen) {
          SyntaxNode call;
          call.kind = NodeKind::MethodCall;
          call.start = node.start;
          call.callee = std::string(peek().text);
          call.callee_start = peek().start;
          call.callee_end = peek().end;
          advance();  // .
          advance();  // name
          advance();  // (
          call.children.push_back(std::move(node));
          parse_call_args(call);
          node = std::move(call);
          continue;
        }
        if (peek().kind == TokenKind::Ident && peek(2).is_punct("::")) {
          // Turbofish method call: x.collect::<Vec<_>>()
          SyntaxNode call;
          call.kind = NodeKind::MethodCall;
          call.start = node.start;
          call.callee = std::string(peek().text);
          call.callee_start = peek().start;
          call.callee_end = peek().end;
          advance();  // .
          advance();  // name
          advance();  // ::
          if (cur().is_punct("<")) skip_generics();
          if (cur().kind == TokenKind::OpenParen) {
            advance();
            call.children.push_back(std::move(node));
            parse_call_args(call);
            node = std::move(call);
            continue;
          }
          // Not a call after all; degrade to a field-ish node.
          call.kind = NodeKind::Other;
          call.end = prev_end();
          call.children.push_back(std::move(node));
          node = std::move(call);
          continue;
        }
        if (peek().kind == TokenKind::Ident || peek().kind == TokenKind::Number) {
          SyntaxNode field;
          field.kind = NodeKind::Other;
          field.start = node.start;
          field.end = peek().end;
          advance();
          advance();
          field.children.push_back(std::move(node));
          node = std::move(field);
          continue;
        }
        advance();
        continue;
      }
      if (cur().kind == TokenKind::OpenParen) {
        SyntaxNode call;
        call.kind = NodeKind::FunctionCall;
        call.start = node.start;
        if (node.kind == NodeKind::Path) {
          call.callee = std::string(text_).substr(node.start, node.end - node.start);
        }
        advance();
        call.children.push_back(std::move(node));
        parse_call_args(call);
        node = std::move(call);
        continue;
      }
      if (cur().kind == TokenKind::OpenBracket) {
        SyntaxNode idx;
        idx.kind = NodeKind::IndexExpr;
        idx.start = node.start;
        advance();
        idx.children.push_back(std::move(node));
        if (cur().kind != TokenKind::CloseBracket) {
          idx.children.push_back(parse_expr(true));
        }
        idx.end = cur().end;
        if (cur().kind == TokenKind::CloseBracket) advance();
        node = std::move(idx);
        continue;
      }
      if (cur().is_punct("?")) {
        SyntaxNode q;
        q.kind = NodeKind::Other;
        q.start = node.start;
        q.end = cur().end;
        advance();
        q.children.push_back(std::move(node));
        node = std::move(q);
        continue;
      }
      return node;
    }
  }

  void parse_call_args(SyntaxNode& call) {
    while (!at_eof() && cur().kind != TokenKind::CloseParen) {
      call.children.push_back(parse_expr(true));
      if (cur().is_punct(",")) {
        advance();
        continue;
      }
      if (cur().kind != TokenKind::CloseParen) {
        if (cur().is_close() || cur().is_punct(";")) break;
        advance();
      }
    }
    call.end = cur().end;
    if (cur().kind == TokenKind::CloseParen) advance();
  }

  SyntaxNode parse_primary(bool allow_struct) {
    SyntaxNode node;
    node.start = cur().start;
    node.end = cur().end;

    switch (cur().kind) {
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::CharLit:
      case TokenKind::Lifetime:
        node.kind = NodeKind::Literal;
        advance();
        return node;
      case TokenKind::OpenParen: {
        node.kind = NodeKind::Other;
        advance();
        while (!at_eof() && cur().kind != TokenKind::CloseParen) {
          node.children.push_back(parse_expr(true));
          if (cur().is_punct(",")) advance();
          else break;
        }
        node.end = cur().end;
        if (cur().kind == TokenKind::CloseParen) advance();
        return node;
      }
      case TokenKind::OpenBracket: {
        node.kind = NodeKind::Other;
        advance();
        while (!at_eof() && cur().kind != TokenKind::CloseBracket) {
          node.children.push_back(parse_expr(true));
          if (cur().is_punct(",") || cur().is_punct(";")) advance();
          else break;
        }
        node.end = cur().end;
        if (cur().kind == TokenKind::CloseBracket) advance();
        return node;
      }
      case TokenKind::OpenBrace:
        return parse_block();
      case TokenKind::Punct:
        if (cur().is_punct("|") || cur().is_punct("||")) return parse_closure();
        if (cur().is_punct("<")) {
          // Qualified path <T as Trait>::method(...)
          node.kind = NodeKind::Path;
          skip_generics();
          while (cur().is_punct("::")) {
            advance();
            if (cur().is_punct("<")) {
              skip_generics();
              continue;
            }
            if (cur().kind == TokenKind::Ident) advance();
          }
          node.end = prev_end();
          return node;
        }
        node.kind = NodeKind::Other;
        advance();
        return node;
      case TokenKind::Ident:
        break;
      default:
        node.kind = NodeKind::Other;
        advance();
        return node;
    }

    // Identifier-led constructs.
    if (cur().is_ident("if")) return parse_if();
    if (cur().is_ident("match")) return parse_match();
    if (cur().is_ident("loop") || cur().is_ident("while") || cur().is_ident("for")) {
      return parse_loop_like();
    }
    if ((cur().is_ident("unsafe") || cur().is_ident("async")) &&
        (peek().kind == TokenKind::OpenBrace || peek().is_ident("move"))) {
      node.kind = NodeKind::Other;
      advance();
      if (cur().is_ident("move")) advance();
      if (cur().kind == TokenKind::OpenBrace) {
        SyntaxNode body = parse_block();
        node.end = body.end;
        node.children.push_back(std::move(body));
      }
      return node;
    }
    if (cur().is_ident("move")) {
      node.kind = NodeKind::Other;
      advance();
      if (cur().is_punct("|") || cur().is_punct("||")) {
        SyntaxNode closure = parse_closure();
        node.end = closure.end;
        node.children.push_back(std::move(closure));
      }
      return node;
    }
    if (cur().is_ident("return") || cur().is_ident("break") || cur().is_ident("continue")) {
      node.kind = NodeKind::Other;
      bool takes_value = !cur().is_ident("continue");
      advance();
      if (takes_value && starts_expression()) {
        SyntaxNode value = parse_expr(allow_struct);
        node.end = value.end;
        node.children.push_back(std::move(value));
      }
      return node;
    }
    if (cur().is_ident("true") || cur().is_ident("false")) {
      node.kind = NodeKind::Literal;
      advance();
      return node;
    }

    // Path: segments joined by '::', optional turbofish.
    node.kind = NodeKind::Path;
    advance();
    while (cur().is_punct("::")) {
      if (peek().is_punct("<")) {
        advance();
        skip_generics();
        continue;
      }
      if (peek().kind == TokenKind::Ident) {
        advance();
        advance();
        continue;
      }
      break;
    }
    node.end = prev_end();

    // Macro invocation: path '!' delimiter. Opaque by policy.
    if (cur().is_punct("!") && peek().is_open()) {
      node.kind = NodeKind::Other;
      node.opaque = true;
      advance();
      skip_balanced();
      node.end = prev_end();
      return node;
    }

    // Struct literal: path '{ field: expr, .. }' where permitted.
    if (allow_struct && cur().kind == TokenKind::OpenBrace) {
      SyntaxNode lit;
      lit.kind = NodeKind::Other;
      lit.start = node.start;
      lit.children.push_back(std::move(node));  // the type path
      advance();                                // {
      while (!at_eof() && cur().kind != TokenKind::CloseBrace) {
        skip_attributes();
        if (cur().is_punct("..")) {
          advance();
          if (starts_expression()) lit.children.push_back(parse_expr(true));
          break;
        }
        if (cur().kind != TokenKind::Ident) {
          advance();
          continue;
        }
        SyntaxNode field;
        field.kind = NodeKind::StructFieldInit;
        field.start = cur().start;
        field.end = cur().end;
        SyntaxNode name;
        name.kind = NodeKind::Path;
        name.start = cur().start;
        name.end = cur().end;
        advance();
        if (cur().is_punct(":")) {
          advance();
          SyntaxNode value = parse_expr(true);
          field.end = value.end;
          field.children.push_back(std::move(value));
        } else {
          field.children.push_back(std::move(name));
        }
        lit.children.push_back(std::move(field));
        if (cur().is_punct(",")) advance();
      }
      lit.end = cur().end;
      if (cur().kind == TokenKind::CloseBrace) advance();
      return lit;
    }

    return node;
  }

  SyntaxNode parse_closure() {
    SyntaxNode node;
    node.kind = NodeKind::Other;
    node.start = cur().start;
    if (cur().is_punct("||")) {
      advance();
    } else {
      advance();  // |
      int depth = 0;
      while (!at_eof()) {
        if (depth == 0 && cur().is_punct("|")) {
          advance();
          break;
        }
        if (cur().is_open()) ++depth;
        if (cur().is_close()) {
          if (depth == 0) break;
          --depth;
        }
        if (cur().is_punct("<")) {
          skip_generics();
          continue;
        }
        advance();
      }
    }
    if (cur().is_punct("->")) {
      advance();
      skip_cast_type();
    }
    SyntaxNode body = parse_expr(true);
    node.end = body.end;
    node.children.push_back(std::move(body));
    return node;
  }

  SyntaxNode parse_if() {
    SyntaxNode node;
    node.kind = NodeKind::IfExpr;
    node.op = "if";
    node.start = cur().start;
    advance();  // if
    if (cur().is_ident("let")) {
      node.op = "if let";
      advance();
      SyntaxNode pattern;
      pattern.kind = NodeKind::Other;
      pattern.start = cur().start;
      int depth = 0;
      while (!at_eof()) {
        if (depth == 0 && cur().is_punct("=")) break;
        if (cur().is_open()) ++depth;
        if (cur().is_close()) {
          if (depth == 0) break;
          --depth;
        }
        pattern.end = cur().end;
        advance();
      }
      if (cur().is_punct("=")) advance();
      node.children.push_back(std::move(pattern));
    }
    SyntaxNode cond = parse_expr(false);
    node.children.push_back(std::move(cond));
    if (cur().kind == TokenKind::OpenBrace) {
      node.children.push_back(parse_block());
    }
    node.end = prev_end();
    if (cur().is_ident("else")) {
      advance();
      if (cur().is_ident("if")) {
        node.children.push_back(parse_if());
      } else if (cur().kind == TokenKind::OpenBrace) {
        node.children.push_back(parse_block());
      }
      node.end = prev_end();
    }
    return node;
  }

  SyntaxNode parse_match() {
    SyntaxNode node;
    node.kind = NodeKind::MatchExpr;
    node.start = cur().start;
    advance();  // match
    node.children.push_back(parse_expr(false));
    if (cur().kind != TokenKind::OpenBrace) {
      node.end = prev_end();
      return node;
    }
    advance();  // {
    while (!at_eof() && cur().kind != TokenKind::CloseBrace) {
      skip_attributes();
      SyntaxNode pattern;
      pattern.kind = NodeKind::Other;
      pattern.start = cur().start;
      pattern.end = pattern.start;
      int depth = 0;
      while (!at_eof()) {
        if (depth == 0 && cur().is_punct("=>")) break;
        if (cur().is_open()) ++depth;
        if (cur().is_close()) {
          if (depth == 0) break;
          --depth;
        }
        pattern.end = cur().end;
        advance();
      }
      if (!cur().is_punct("=>")) break;
      advance();
      node.children.push_back(std::move(pattern));
      node.children.push_back(parse_expr(true));
      if (cur().is_punct(",")) advance();
    }
    node.end = cur().end;
    if (cur().kind == TokenKind::CloseBrace) advance();
    return node;
  }

  SyntaxNode parse_loop_like() {
    SyntaxNode node;
    node.kind = NodeKind::Other;
    node.start = cur().start;
    bool is_for = cur().is_ident("for");
    bool is_while = cur().is_ident("while");
    advance();
    if (is_for) {
      int depth = 0;
      while (!at_eof() && !(depth == 0 && cur().is_ident("in"))) {
        if (cur().is_open()) ++depth;
        if (cur().is_close()) {
          if (depth == 0) break;
          --depth;
        }
        advance();
      }
      if (cur().is_ident("in")) advance();
      node.children.push_back(parse_expr(false));
    } else if (is_while) {
      if (cur().is_ident("let")) {
        advance();
        int depth = 0;
        while (!at_eof()) {
          if (depth == 0 && cur().is_punct("=")) break;
          if (cur().is_open()) ++depth;
          if (cur().is_close()) {
            if (depth == 0) break;
            --depth;
          }
          advance();
        }
        if (cur().is_punct("=")) advance();
      }
      node.children.push_back(parse_expr(false));
    }
    if (cur().kind == TokenKind::OpenBrace) {
      node.children.push_back(parse_block());
    }
    node.end = prev_end();
    return node;
  }
};

void assign_pre_indices(SyntaxNode& node, uint32_t& counter) {
  node.pre_index = counter++;
  for (SyntaxNode& child : node.children) assign_pre_indices(child, counter);
}

const SyntaxNode* find_block_with_span(const SyntaxNode& node, uint32_t start, uint32_t end) {
  if (node.kind == NodeKind::Block && node.start == start && node.end == end) return &node;
  for (const SyntaxNode& child : node.children) {
    if (child.start <= start && end <= child.end) {
      if (const SyntaxNode* hit = find_block_with_span(child, start, end)) return hit;
    }
  }
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Unit / project loading
// ---------------------------------------------------------------------------

std::unique_ptr<SourceUnit> parse_unit(std::string rel_path, std::string text) {
  auto unit = std::make_unique<SourceUnit>();
  unit->rel_path = std::move(rel_path);
  unit->text = std::move(text);
  unit->line_index = std::make_unique<LineIndex>(unit->text);

  std::vector<Token> tokens;
  try {
    tokens = tokenize(unit->text);
  } catch (const LexError&) {
    unit->parsed = false;
    return unit;
  }

  std::vector<RawFn> raw_fns;
  Parser parser(unit->text, std::move(tokens));
  if (!parser.parse(unit->root, raw_fns)) {
    unit->parsed = false;
    unit->root = SyntaxNode{};
    return unit;
  }

  uint32_t counter = 0;
  assign_pre_indices(unit->root, counter);

  for (RawFn& raw : raw_fns) {
    FnInfo info;
    info.name = std::move(raw.name);
    info.params = std::move(raw.params);
    info.return_type = std::move(raw.return_type);
    info.body_start = raw.body_start;
    info.body_end = raw.body_end;
    info.body = find_block_with_span(unit->root, raw.body_start, raw.body_end);
    if (info.body != nullptr) unit->functions.push_back(std::move(info));
  }
  unit->parsed = true;
  return unit;
}

const SourceUnit* ProjectModel::find_unit(const std::string& rel_path) const {
  auto it = unit_by_path.find(rel_path);
  if (it == unit_by_path.end()) return nullptr;
  return units[it->second].get();
}

namespace {

ElementId make_element_id(uint32_t unit_index, uint32_t pre_index) {
  return (static_cast<uint64_t>(unit_index) << 32) | pre_index;
}

constexpr uint32_t kFileElementMarker = 0xFFFFFFFFu;

}  // namespace

ProjectModel load_project(const std::string& root, const std::vector<std::string>& source_dirs) {
  ProjectModel model;
  std::error_code ec;
  model.root = fs::weakly_canonical(fs::path(root), ec).string();
  if (ec) model.root = fs::absolute(root).string();

  std::vector<std::string> files;
  for (const std::string& dir : source_dirs) {
    fs::path base = fs::path(model.root) / dir;
    if (!fs::exists(base, ec)) continue;
    for (auto it = fs::recursive_directory_iterator(base, ec);
         !ec && it != fs::recursive_directory_iterator(); ++it) {
      if (it->is_regular_file() && it->path().extension() == ".rs") {
        files.push_back(fs::relative(it->path(), model.root, ec).generic_string());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw EmptyProject("no source files found under " + model.root);
  }

  // Parsing of distinct files is independent; shard across a few threads.
  model.units.resize(files.size());
  unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(), 4u);
  if (workers < 1) workers = 1;
  auto parse_range = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < files.size(); i += step) {
      std::ifstream in(fs::path(model.root) / files[i], std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      model.units[i] = parse_unit(files[i], buf.str());
    }
  };
  if (workers == 1 || files.size() < 2) {
    parse_range(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back(parse_range, w, workers);
    }
    for (auto& t : threads) t.join();
  }

  for (uint32_t i = 0; i < model.units.size(); ++i) {
    model.unit_by_path[model.units[i]->rel_path] = i;
    if (!model.units[i]->parsed) {
      model.unparsed.push_back(model.units[i]->rel_path);
      continue;
    }
    SourceUnit& unit = *model.units[i];
    for (uint32_t f = 0; f < unit.functions.size(); ++f) {
      const FnInfo& fn = unit.functions[f];
      model.fn_by_name.emplace(fn.name, std::make_pair(i, f));
      for (const SyntaxNode& stmt : fn.body->children) {
        if (!stmt.is_stmt) continue;
        CodeElement element;
        element.id = make_element_id(i, stmt.pre_index);
        element.unit_index = i;
        element.unit = &unit;
        element.node = &stmt;
        element.granularity = Granularity::Statement;
        model.statement_elements.push_back(element);
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Traversal and lookup
// ---------------------------------------------------------------------------

void descend(const SyntaxNode& node, const std::function<void(const SyntaxNode&)>& visit) {
  visit(node);
  for (const SyntaxNode& child : node.children) descend(child, visit);
}

std::vector<const SyntaxNode*> descend(const SyntaxNode& node) {
  std::vector<const SyntaxNode*> out;
  descend(node, [&out](const SyntaxNode& n) { out.push_back(&n); });
  return out;
}

namespace {

bool collect_ancestors(const SyntaxNode& cur, const SyntaxNode& target,
                       std::vector<const SyntaxNode*>& chain) {
  if (&cur == &target) return true;
  if (!(cur.start <= target.start && target.end <= cur.end)) return false;
  chain.push_back(&cur);
  for (const SyntaxNode& child : cur.children) {
    if (child.start <= target.start && target.end <= child.end) {
      if (collect_ancestors(child, target, chain)) return true;
    }
  }
  // Span containment can be ambiguous for zero-width nodes; linear fallback.
  for (const SyntaxNode& child : cur.children) {
    if (collect_ancestors(child, target, chain)) return true;
  }
  chain.pop_back();
  return false;
}

}  // namespace

std::vector<const SyntaxNode*> ancestors_of(const SourceUnit& unit, const SyntaxNode& node) {
  std::vector<const SyntaxNode*> chain;
  if (&unit.root == &node) return chain;
  if (!collect_ancestors(unit.root, node, chain)) chain.clear();
  return chain;
}

const SyntaxNode* enclosing_statement(const SourceUnit& unit, const SyntaxNode& node) {
  if (node.is_stmt) return &node;
  auto chain = ancestors_of(unit, node);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->is_stmt) return *it;
  }
  return nullptr;
}

const FnInfo* enclosing_function(const SourceUnit& unit, const SyntaxNode& node) {
  const FnInfo* best = nullptr;
  for (const FnInfo& fn : unit.functions) {
    if (fn.body_start <= node.start && node.end <= fn.body_end) {
      if (best == nullptr || fn.body_end - fn.body_start < best->body_end - best->body_start) {
        best = &fn;
      }
    }
  }
  return best;
}

std::optional<CodeElement> element_for_node(const ProjectModel& model, uint32_t unit_index,
                                            const SyntaxNode& node) {
  const SourceUnit& unit = *model.units[unit_index];
  const FnInfo* fn = enclosing_function(unit, node);
  if (fn == nullptr || fn->body == nullptr) return std::nullopt;
  for (const SyntaxNode& stmt : fn->body->children) {
    if (stmt.is_stmt && stmt.start <= node.start && node.end <= stmt.end) {
      CodeElement el;
      el.id = make_element_id(unit_index, stmt.pre_index);
      el.unit_index = unit_index;
      el.unit = &unit;
      el.node = &stmt;
      el.granularity = Granularity::Statement;
      return el;
    }
  }
  return std::nullopt;
}

std::optional<CodeElement> file_element(const ProjectModel& model, const std::string& rel_path) {
  auto it = model.unit_by_path.find(rel_path);
  if (it == model.unit_by_path.end()) return std::nullopt;
  CodeElement el;
  el.id = make_element_id(it->second, kFileElementMarker);
  el.unit_index = it->second;
  el.unit = model.units[it->second].get();
  el.node = model.units[it->second]->parsed ? &model.units[it->second]->root : nullptr;
  el.granularity = Granularity::File;
  return el;
}

CodeElement locate_element(const ProjectModel& model, const std::string& file,
                           uint32_t line, uint32_t column) {
  auto it = model.unit_by_path.find(file);
  if (it == model.unit_by_path.end()) {
    throw UnknownFile("file not part of the project model: " + file);
  }
  uint32_t unit_index = it->second;
  const SourceUnit& unit = *model.units[unit_index];
  if (!unit.parsed) return *file_element(model, file);

  auto offset = unit.line_index->offset_of(line, column);
  if (!offset) return *file_element(model, file);

  // Walk down the containment chain collecting the innermost expression and
  // statement nodes.
  const SyntaxNode* expr = nullptr;
  const SyntaxNode* expr_parent = nullptr;
  const SyntaxNode* stmt = nullptr;
  const SyntaxNode* block = nullptr;
  const SyntaxNode* cur = &unit.root;
  while (true) {
    if (cur->is_stmt) stmt = cur;
    if (cur->kind == NodeKind::Block && cur != &unit.root) block = cur;
    if (is_expression_kind(*cur) && cur != &unit.root) {
      expr_parent = expr;
      expr = cur;
    }
    const SyntaxNode* next = nullptr;
    for (const SyntaxNode& child : cur->children) {
      if (child.contains(*offset)) {
        next = &child;
        break;
      }
    }
    if (next == nullptr) break;
    cur = next;
  }

  // Widen atomic leaves to the enclosing expression, which is what the
  // pattern matchers operate on.
  if (expr != nullptr &&
      (expr->kind == NodeKind::Path || expr->kind == NodeKind::Literal) &&
      expr_parent != nullptr) {
    expr = expr_parent;
  }

  if (expr != nullptr) {
    CodeElement el;
    el.id = make_element_id(unit_index, expr->pre_index);
    el.unit_index = unit_index;
    el.unit = &unit;
    el.node = expr;
    el.granularity = Granularity::Expression;
    return el;
  }
  if (stmt == nullptr) stmt = block;
  if (stmt != nullptr) {
    CodeElement el;
    el.id = make_element_id(unit_index, stmt->pre_index);
    el.unit_index = unit_index;
    el.unit = &unit;
    el.node = stmt;
    el.granularity = Granularity::Statement;
    return el;
  }
  return *file_element(model, file);
}

}  // namespace panicfix
