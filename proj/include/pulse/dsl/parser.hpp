#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pulse/dsl/ast.hpp"

namespace pulse::dsl {

enum class TokKind { Ident, Int, Sym, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  int line = 1;
  int col = 1;
};

// Comments run from '#' or '//' to end of line.
inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  static constexpr std::string_view two[] = {"++", "&&", "||", "==", "!=", "<=", ">="};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = TokKind::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = TokKind::Int;
      t.text = std::string(src.substr(i, j - i));
      if (t.text.size() > 10 || std::stoll(t.text) > kInf)
        throw ParseError(line, col, "integer literal out of range");
      advance(j - i);
    } else {
      t.kind = TokKind::Sym;
      std::string_view rest = src.substr(i);
      bool matched = false;
      for (auto s : two)
        if (rest.starts_with(s)) {
          t.text = std::string(s);
          matched = true;
          break;
        }
      if (!matched) {
        static constexpr std::string_view single = "{}()<>[]=;,.!+-*";
        if (single.find(c) == std::string_view::npos)
          throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = TokKind::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

enum class BinderKind { Node, Edge, Int, Bool };

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Program parse_program() {
    Program p;
    scopes_.emplace_back();
    while (!at_end()) p.body.push_back(statement());
    scopes_.pop_back();
    number_statements(p);
    return p;
  }

 private:
  // Token helpers -----------------------------------------------------------
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == TokKind::End; }
  bool is_sym(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == TokKind::Sym && peek(k).text == s;
  }
  bool is_ident(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == TokKind::Ident && peek(k).text == s;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, msg);
  }
  std::string describe(const Token& t) const {
    if (t.kind == TokKind::End) return "end of input";
    return "'" + t.text + "'";
  }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  void expect_sym(std::string_view s) {
    if (!is_sym(s)) fail(peek(), "expected '" + std::string(s) + "' but found " + describe(peek()));
    take();
  }
  void expect_ident(std::string_view s) {
    if (!is_ident(s)) fail(peek(), "expected '" + std::string(s) + "' but found " + describe(peek()));
    take();
  }
  // Splits a lexed ">=" when a lone '>' is required (e.g. "<a.x>=<...>").
  void expect_close_angle() {
    if (is_sym(">=")) {
      toks_[pos_].text = "=";
      ++toks_[pos_].col;
      return;
    }
    expect_sym(">");
  }
  Token ident() {
    if (peek().kind != TokKind::Ident) fail(peek(), "expected identifier but found " + describe(peek()));
    return take();
  }
  SourcePos here() const { return {peek().line, peek().col}; }

  // Scopes --------------------------------------------------------------------
  void bind(const Token& t, BinderKind k) {
    if (is_reserved(t.text)) fail(t, "'" + t.text + "' is reserved");
    scopes_.back()[t.text] = k;
  }
  std::optional<BinderKind> lookup(const std::string& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto f = it->find(n); f != it->end()) return f->second;
    return std::nullopt;
  }
  static bool is_reserved(const std::string& s) {
    static const std::set<std::string> kw{
        "forall", "in", "while", "if", "else", "propNodes", "int", "bool", "Edge", "map",
        "true", "false", "INF", "SOURCE", "local", "queue", "fixSource", "Min", "Max", "Sum", "g"};
    return kw.contains(s);
  }
  static std::optional<ReductionOp> op_of(const std::string& s) {
    if (s == "Min") return ReductionOp::Min;
    if (s == "Max") return ReductionOp::Max;
    if (s == "Sum") return ReductionOp::Sum;
    return std::nullopt;
  }
  void require_prop(const Token& t, const std::string& name) const {
    if (!props_.contains(name)) fail(t, "unknown property '" + name + "'");
  }

  std::vector<Stmt> block() {
    expect_sym("{");
    std::vector<Stmt> out;
    while (!is_sym("}")) {
      if (at_end()) fail(peek(), "unterminated block: expected '}'");
      out.push_back(statement());
    }
    take();
    return out;
  }

  std::vector<Stmt> scoped_block(const Token* binder, BinderKind k) {
    scopes_.emplace_back();
    if (binder) bind(*binder, k);
    auto b = block();
    scopes_.pop_back();
    return b;
  }

  // Statements ----------------------------------------------------------------
  Stmt statement() {
    Stmt s;
    s.pos = here();
    const Token& t = peek();
    if (t.kind == TokKind::Sym && t.text == "<") return reduction_stmt(s);
    if (t.kind != TokKind::Ident) fail(t, "expected a statement but found " + describe(t));

    if (t.text == "propNodes") {
      take();
      expect_sym("<");
      auto ty = ident();
      if (ty.text != "int") fail(ty, "property element type must be 'int'");
      expect_close_angle();
      auto name = ident();
      if (is_reserved(name.text)) fail(name, "'" + name.text + "' is reserved");
      if (props_.contains(name.text)) fail(name, "property '" + name.text + "' redeclared");
      if (name.text == "weight") fail(name, "'weight' names the edge weight, not a node property");
      expect_sym("=");
      s.kind = StmtKind::PropDecl;
      s.type_name = "int";
      s.name = name.text;
      s.expr = expression();
      expect_sym(";");
      props_.insert(name.text);
      return s;
    }
    if (t.text == "int" || t.text == "bool" || t.text == "Edge") {
      auto ty = take();
      auto name = ident();
      expect_sym("=");
      s.kind = StmtKind::VarDecl;
      s.type_name = ty.text;
      s.name = name.text;
      s.expr = expression();
      expect_sym(";");
      bind(name, ty.text == "int" ? BinderKind::Int
                 : ty.text == "bool" ? BinderKind::Bool
                                     : BinderKind::Edge);
      return s;
    }
    if (t.text == "map") {
      take();
      auto name = ident();
      if (!name.text.starts_with("cache_")) fail(name, "memo tables must be named cache_<property>");
      s.kind = StmtKind::CacheDecl;
      s.name = name.text.substr(6);
      require_prop(name, s.name);
      expect_sym(";");
      return s;
    }
    if (t.text == "forall") return forall_stmt(s);
    if (t.text == "while") {
      take();
      expect_sym("(");
      s.kind = StmtKind::While;
      s.expr = expression();
      expect_sym(")");
      s.body = scoped_block(nullptr, BinderKind::Int);
      return s;
    }
    if (t.text == "if") {
      take();
      expect_sym("(");
      s.kind = StmtKind::If;
      s.expr = expression();
      expect_sym(")");
      s.body = scoped_block(nullptr, BinderKind::Int);
      if (is_ident("else")) {
        take();
        s.has_else = true;
        s.else_body = scoped_block(nullptr, BinderKind::Int);
      }
      return s;
    }
    if (t.text == "fixSource") {
      take();
      expect_sym("(");
      auto p = ident();
      require_prop(p, p.text);
      s.kind = StmtKind::FixSource;
      s.name = p.text;
      expect_sym(",");
      s.operands.push_back(expression());
      expect_sym(",");
      s.operands.push_back(expression());
      expect_sym(")");
      expect_sym(";");
      return s;
    }
    if (t.text == "g" && is_sym(".", 1) && is_ident("sync_reduction", 2)) {
      pos_ += 3;
      expect_sym("(");
      expect_sym(")");
      expect_sym(";");
      s.kind = StmtKind::Sync;
      return s;
    }
    if (op_of(t.text)) fail(t, "reduction operator '" + t.text + "' outside the <...> form");

    // Statements that start with an identifier.
    auto name = take();
    if (is_sym("++")) {
      take();
      expect_sym(";");
      auto k = lookup(name.text);
      if (!k) fail(name, "unknown identifier '" + name.text + "'");
      if (*k != BinderKind::Int) fail(name, "'" + name.text + "' is not an int variable");
      s.kind = StmtKind::Increment;
      s.name = name.text;
      return s;
    }
    if (is_sym(".") && is_ident("clear", 1) && name.text.starts_with("cache_")) {
      pos_ += 2;
      expect_sym("(");
      expect_sym(")");
      expect_sym(";");
      s.kind = StmtKind::CacheClear;
      s.name = name.text.substr(6);
      require_prop(name, s.name);
      return s;
    }
    if (is_sym(".")) {
      take();
      auto prop = ident();
      Expr target = resolve_prop(name, prop);
      expect_sym("=");
      if (starts_reduction_rhs()) {
        s.target = std::move(target);
        return reduction_rhs(s);
      }
      if (lookup(name.text) != BinderKind::Node)
        fail(name, "only node properties can be assigned");
      s.kind = StmtKind::PropAssign;
      s.target = std::move(target);
      s.expr = expression();
      expect_sym(";");
      return s;
    }
    if (is_sym("=")) {
      take();
      auto k = lookup(name.text);
      if (!k) fail(name, "unknown identifier '" + name.text + "'");
      s.kind = StmtKind::Assign;
      s.name = name.text;
      s.expr = expression();
      expect_sym(";");
      return s;
    }
    fail(peek(), "expected '=', '++' or '.' after '" + name.text + "' but found " + describe(peek()));
  }

  Stmt forall_stmt(Stmt& s) {
    take();  // forall
    bool paren = is_sym("(");
    if (paren) take();
    auto var = ident();
    expect_ident("in");
    expect_ident("g");
    expect_sym(".");
    auto what = ident();
    expect_sym("(");
    if (what.text == "nodes") {
      s.kind = StmtKind::ForAllNodes;
    } else if (what.text == "reduction_frontier") {
      s.kind = StmtKind::FrontierLoop;
    } else if (what.text == "neighbors") {
      s.kind = StmtKind::ForAllNeighbors;
      auto of = ident();
      if (lookup(of.text) != BinderKind::Node) fail(of, "'" + of.text + "' is not a node variable");
      s.of = of.text;
    } else {
      fail(what, "expected nodes(), neighbors(v) or reduction_frontier()");
    }
    expect_sym(")");
    if (paren) expect_sym(")");
    s.name = var.text;
    s.body = scoped_block(&var, BinderKind::Node);
    return s;
  }

  bool starts_reduction_rhs() const {
    if (is_ident("local") || is_ident("queue")) return true;
    return is_sym("<") && peek(1).kind == TokKind::Ident && op_of(peek(1).text).has_value();
  }

  Stmt reduction_stmt(Stmt& s) {
    take();  // '<'
    auto binder = ident();
    expect_sym(".");
    auto prop = ident();
    s.target = resolve_prop(binder, prop);
    if (lookup(binder.text) != BinderKind::Node)
      fail(binder, "reduction target must be a node property");
    expect_close_angle();
    expect_sym("=");
    if (!starts_reduction_rhs()) fail(peek(), "expected '<Op(...)>' on the right of a reduction");
    return reduction_rhs(s);
  }

  Stmt reduction_rhs(Stmt& s) {
    s.kind = StmtKind::Reduction;
    if (lookup(s.target.name) != BinderKind::Node)
      fail(peek(), "reduction target must be a node property");
    if (is_ident("local")) {
      take();
      s.mode = ReduceMode::Local;
    } else if (is_ident("queue")) {
      take();
      s.mode = ReduceMode::Queue;
    }
    expect_sym("<");
    auto opname = ident();
    auto op = op_of(opname.text);
    if (!op) fail(opname, "unknown reduction operator '" + opname.text + "'");
    s.op = *op;
    if (is_sym("<")) {
      take();
      auto inner = ident();
      auto iop = op_of(inner.text);
      if (!iop) fail(inner, "unknown reduction operator '" + inner.text + "'");
      s.composite = true;
      s.inner_op = *iop;
      s.operands = arg_list();
      expect_close_angle();
      while (is_sym(",")) {
        take();
        s.extra.push_back(additive());
      }
      if (s.extra.empty()) fail(peek(), "composite reduction needs an outer operand");
    } else {
      s.operands = arg_list();
    }
    if (s.operands.empty()) fail(opname, "reduction needs at least one operand");
    expect_close_angle();
    expect_sym(";");
    return s;
  }

  std::vector<Expr> arg_list() {
    expect_sym("(");
    std::vector<Expr> out;
    if (!is_sym(")")) {
      out.push_back(expression());
      while (is_sym(",")) {
        take();
        out.push_back(expression());
      }
    }
    expect_sym(")");
    return out;
  }

  Expr resolve_prop(const Token& binder, const Token& prop) const {
    auto k = lookup(binder.text);
    if (!k) fail(binder, "unknown identifier '" + binder.text + "'");
    if (*k == BinderKind::Edge) {
      if (prop.text != "weight") fail(prop, "edges only carry 'weight'");
    } else if (*k == BinderKind::Node) {
      require_prop(prop, prop.text);
    } else {
      fail(binder, "'" + binder.text + "' has no properties");
    }
    auto e = Expr::prop_access(binder.text, prop.text);
    e.pos = {binder.line, binder.col};
    return e;
  }

  // Expressions -------------------------------------------------------------
  Expr expression() { return logical_or(); }

  Expr logical_or() {
    auto l = logical_and();
    while (is_sym("||")) {
      take();
      l = Expr::binary("||", std::move(l), logical_and());
    }
    return l;
  }
  Expr logical_and() {
    auto l = equality();
    while (is_sym("&&")) {
      take();
      l = Expr::binary("&&", std::move(l), equality());
    }
    return l;
  }
  Expr equality() {
    auto l = relational();
    while (is_sym("==") || is_sym("!=")) {
      auto o = take().text;
      l = Expr::binary(o, std::move(l), relational());
    }
    return l;
  }
  Expr relational() {
    auto l = additive();
    while (is_sym("<") || is_sym(">") || is_sym("<=") || is_sym(">=")) {
      auto o = take().text;
      l = Expr::binary(o, std::move(l), additive());
    }
    return l;
  }
  Expr additive() {
    auto l = multiplicative();
    while (is_sym("+") || is_sym("-")) {
      auto o = take().text;
      l = Expr::binary(o, std::move(l), multiplicative());
    }
    return l;
  }
  Expr multiplicative() {
    auto l = unary();
    while (is_sym("*")) {
      take();
      l = Expr::binary("*", std::move(l), unary());
    }
    return l;
  }
  Expr unary() {
    if (is_sym("!") || is_sym("-")) {
      auto pos = here();
      auto o = take().text;
      auto e = Expr::unary(o, unary());
      e.pos = pos;
      return e;
    }
    return primary();
  }

  Expr primary() {
    const Token t = peek();
    SourcePos pos{t.line, t.col};
    if (t.kind == TokKind::Int) {
      take();
      auto e = Expr::int_lit(std::stoll(t.text));
      e.pos = pos;
      return e;
    }
    if (is_sym("(")) {
      take();
      auto e = expression();
      expect_sym(")");
      return e;
    }
    if (t.kind != TokKind::Ident) fail(t, "expected an expression but found " + describe(t));
    take();
    if (t.text == "true" || t.text == "false") {
      auto e = Expr::boolean(t.text == "true");
      e.pos = pos;
      return e;
    }
    if (t.text == "INF" || t.text == "SOURCE") {
      Expr e;
      e.kind = t.text == "INF" ? ExprKind::Inf : ExprKind::Source;
      e.pos = pos;
      return e;
    }
    if (op_of(t.text)) fail(t, "reduction operator '" + t.text + "' outside the <...> form");
    if (t.text == "g") {
      expect_sym(".");
      auto fn = ident();
      static const std::map<std::string, std::size_t> arity{
          {"get_edge", 2},     {"get_edge_i", 2},     {"get_edge_other", 2},
          {"reduction_frontier", 0}, {"is_local", 1}, {"frontier_empty", 0},
          {"all_finished", 1}, {"local_frontier", 0}};
      auto it = arity.find(fn.text);
      if (it == arity.end()) fail(fn, "unknown graph builtin 'g." + fn.text + "'");
      auto args = arg_list();
      if (args.size() != it->second)
        fail(fn, "g." + fn.text + " takes " + std::to_string(it->second) + " argument(s)");
      auto e = Expr::call(fn.text, std::move(args));
      e.pos = pos;
      return e;
    }
    if (is_sym(".") && is_ident("localdata", 1)) {
      require_prop(t, t.text);
      pos_ += 2;
      expect_sym("[");
      expect_ident("local");
      expect_sym("(");
      Expr e;
      e.kind = ExprKind::LocalRead;
      e.prop = t.text;
      e.args.push_back(expression());
      e.pos = pos;
      expect_sym(")");
      expect_sym("]");
      return e;
    }
    if (is_sym(".") && is_ident("cached", 1)) {
      require_prop(t, t.text);
      pos_ += 2;
      expect_sym("(");
      Expr e;
      e.kind = ExprKind::CachedRead;
      e.prop = t.text;
      e.args.push_back(expression());
      e.pos = pos;
      expect_sym(")");
      return e;
    }
    if (is_sym(".")) {
      take();
      auto prop = ident();
      return resolve_prop(t, prop);
    }
    if (!lookup(t.text)) fail(t, "unknown identifier '" + t.text + "'");
    auto e = Expr::var(t.text);
    e.pos = pos;
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::map<std::string, BinderKind>> scopes_;
  std::set<std::string> props_;
};

inline Program parse(std::string_view source) { return Parser(source).parse_program(); }

}  // namespace pulse::dsl
