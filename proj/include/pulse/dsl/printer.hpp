#pragma once

#include <sstream>
#include <string>

#include "pulse/dsl/ast.hpp"

namespace pulse::dsl {

namespace detail {

inline int precedence(const Expr& e) {
  if (e.kind == ExprKind::Unary) return 7;
  if (e.kind != ExprKind::Binary) return 8;
  const auto& o = e.op;
  if (o == "||") return 1;
  if (o == "&&") return 2;
  if (o == "==" || o == "!=") return 3;
  if (o == "<" || o == ">" || o == "<=" || o == ">=") return 4;
  if (o == "+" || o == "-") return 5;
  return 6;
}

inline void print_expr(std::ostream& out, const Expr& e);

inline void print_child(std::ostream& out, const Expr& child, int parent_prec, bool right) {
  int p = precedence(child);
  bool paren = p < parent_prec || (right && p == parent_prec);
  if (paren) out << '(';
  print_expr(out, child);
  if (paren) out << ')';
}

inline void print_args(std::ostream& out, const std::vector<Expr>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out << ", ";
    print_expr(out, args[i]);
  }
}

inline void print_expr(std::ostream& out, const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit: out << e.value; break;
    case ExprKind::BoolLit: out << (e.value ? "true" : "false"); break;
    case ExprKind::Inf: out << "INF"; break;
    case ExprKind::Source: out << "SOURCE"; break;
    case ExprKind::Var: out << e.name; break;
    case ExprKind::Prop: out << e.name << '.' << e.prop; break;
    case ExprKind::LocalRead:
      out << e.prop << ".localdata[local(";
      print_expr(out, e.args[0]);
      out << ")]";
      break;
    case ExprKind::CachedRead:
      out << e.prop << ".cached(";
      print_expr(out, e.args[0]);
      out << ')';
      break;
    case ExprKind::Unary:
      out << e.op;
      print_child(out, e.args[0], 7, false);
      break;
    case ExprKind::Binary: {
      int p = precedence(e);
      print_child(out, e.args[0], p, false);
      out << ' ' << e.op << ' ';
      print_child(out, e.args[1], p, true);
      break;
    }
    case ExprKind::Call:
      out << "g." << e.name << '(';
      print_args(out, e.args);
      out << ')';
      break;
  }
}

inline void print_block(std::ostream& out, const std::vector<Stmt>& body, int depth);

inline void print_stmt(std::ostream& out, const Stmt& s, int depth) {
  std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
  out << ind;
  switch (s.kind) {
    case StmtKind::PropDecl:
      out << "propNodes<" << s.type_name << "> " << s.name << " = ";
      print_expr(out, s.expr);
      out << ";\n";
      break;
    case StmtKind::VarDecl:
      out << s.type_name << ' ' << s.name << " = ";
      print_expr(out, s.expr);
      out << ";\n";
      break;
    case StmtKind::Assign:
      out << s.name << " = ";
      print_expr(out, s.expr);
      out << ";\n";
      break;
    case StmtKind::PropAssign:
      print_expr(out, s.target);
      out << " = ";
      print_expr(out, s.expr);
      out << ";\n";
      break;
    case StmtKind::Increment: out << s.name << "++;\n"; break;
    case StmtKind::ForAllNodes:
      out << "forall " << s.name << " in g.nodes() {\n";
      print_block(out, s.body, depth + 1);
      out << ind << "}\n";
      break;
    case StmtKind::ForAllNeighbors:
      out << "forall " << s.name << " in g.neighbors(" << s.of << ") {\n";
      print_block(out, s.body, depth + 1);
      out << ind << "}\n";
      break;
    case StmtKind::FrontierLoop:
      out << "forall (" << s.name << " in g.reduction_frontier()) {\n";
      print_block(out, s.body, depth + 1);
      out << ind << "}\n";
      break;
    case StmtKind::While:
      out << "while (";
      print_expr(out, s.expr);
      out << ") {\n";
      print_block(out, s.body, depth + 1);
      out << ind << "}\n";
      break;
    case StmtKind::If:
      out << "if (";
      print_expr(out, s.expr);
      out << ") {\n";
      print_block(out, s.body, depth + 1);
      if (s.has_else) {
        out << ind << "} else {\n";
        print_block(out, s.else_body, depth + 1);
      }
      out << ind << "}\n";
      break;
    case StmtKind::Reduction:
      out << '<';
      print_expr(out, s.target);
      out << "> = ";
      if (s.mode == ReduceMode::Local) out << "local";
      if (s.mode == ReduceMode::Queue) out << "queue";
      out << '<' << to_string(s.op);
      if (s.composite) {
        out << '<' << to_string(s.inner_op) << '(';
        print_args(out, s.operands);
        out << ")>";
        for (const auto& x : s.extra) {
          out << ", ";
          print_expr(out, x);
        }
      } else {
        out << '(';
        print_args(out, s.operands);
        out << ')';
      }
      out << ">;\n";
      break;
    case StmtKind::FixSource:
      out << "fixSource(" << s.name << ", ";
      print_args(out, s.operands);
      out << ");\n";
      break;
    case StmtKind::Sync: out << "g.sync_reduction();\n"; break;
    case StmtKind::CacheDecl: out << "map cache_" << s.name << ";\n"; break;
    case StmtKind::CacheClear: out << "cache_" << s.name << ".clear();\n"; break;
  }
}

inline void print_block(std::ostream& out, const std::vector<Stmt>& body, int depth) {
  for (const auto& s : body) print_stmt(out, s, depth);
}

}  // namespace detail

inline std::string to_source(const Expr& e) {
  std::ostringstream out;
  detail::print_expr(out, e);
  return out.str();
}

inline std::string pretty_print(const Program& p) {
  std::ostringstream out;
  detail::print_block(out, p.body, 0);
  return out.str();
}

inline std::string pretty_print(const std::vector<Stmt>& body, int depth = 0) {
  std::ostringstream out;
  detail::print_block(out, body, depth);
  return out.str();
}

}  // namespace pulse::dsl
