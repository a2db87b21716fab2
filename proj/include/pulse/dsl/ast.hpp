#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pulse/types.hpp"

namespace pulse::dsl {

struct SourcePos {
  int line = 0;
  int col = 0;
};

// Which transformation produced a node; Source for parsed code.
enum class Origin { Source, Reorder, Pulses, Bypass, Cache };

inline const char* to_string(Origin o) {
  switch (o) {
    case Origin::Source: return "source";
    case Origin::Reorder: return "reorder";
    case Origin::Pulses: return "pulses";
    case Origin::Bypass: return "bypass";
    case Origin::Cache: return "cache";
  }
  return "?";
}

enum class ExprKind {
  IntLit,      // value
  BoolLit,     // value 0/1
  Inf,         // INF
  Source,      // SOURCE: the run's source vertex
  Var,         // name
  Prop,        // name.prop (name is a node or edge binder)
  LocalRead,   // prop.localdata[local(args[0])]
  CachedRead,  // prop.cached(args[0])
  Unary,       // op args[0]
  Binary,      // args[0] op args[1]
  Call,        // g.name(args...)
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  std::int64_t value = 0;
  std::string name;  // variable, call or binder name
  std::string prop;  // property name for Prop / LocalRead / CachedRead
  std::string op;    // unary/binary operator spelling
  std::vector<Expr> args;
  Origin origin = Origin::Source;
  SourcePos pos;

  static Expr int_lit(std::int64_t v) {
    Expr e;
    e.kind = ExprKind::IntLit;
    e.value = v;
    return e;
  }
  static Expr boolean(bool b) {
    Expr e;
    e.kind = ExprKind::BoolLit;
    e.value = b ? 1 : 0;
    return e;
  }
  static Expr var(std::string n) {
    Expr e;
    e.kind = ExprKind::Var;
    e.name = std::move(n);
    return e;
  }
  static Expr prop_access(std::string binder, std::string p) {
    Expr e;
    e.kind = ExprKind::Prop;
    e.name = std::move(binder);
    e.prop = std::move(p);
    return e;
  }
  static Expr call(std::string fn, std::vector<Expr> a = {}) {
    Expr e;
    e.kind = ExprKind::Call;
    e.name = std::move(fn);
    e.args = std::move(a);
    return e;
  }
  static Expr unary(std::string o, Expr x) {
    Expr e;
    e.kind = ExprKind::Unary;
    e.op = std::move(o);
    e.args.push_back(std::move(x));
    return e;
  }
  static Expr binary(std::string o, Expr l, Expr r) {
    Expr e;
    e.kind = ExprKind::Binary;
    e.op = std::move(o);
    e.args.push_back(std::move(l));
    e.args.push_back(std::move(r));
    return e;
  }
};

enum class StmtKind {
  PropDecl,         // propNodes<int> name = expr;
  VarDecl,          // type name = expr;   type in {int, bool, Edge}
  Assign,           // name = expr;
  PropAssign,       // target = expr;   (plain write, target.name must be a node binder)
  Increment,        // name++;
  ForAllNodes,      // forall var in g.nodes() { body }
  ForAllNeighbors,  // forall var in g.neighbors(of) { body }
  FrontierLoop,     // forall (var in g.reduction_frontier()) { body }
  While,            // while (expr) { body }
  If,               // if (expr) { body } else { else_body }
  Reduction,        // <target> = <Op(operands...)>;
  FixSource,        // fixSource(name, operands[0], operands[1]);
  Sync,             // g.sync_reduction();
  CacheDecl,        // map cache_<name>;
  CacheClear,       // cache_<name>.clear();
};

// Reduction lowering mode chosen by the passes.
//   Default: every operand is fetched (including the target's own value),
//            then the contribution is queued.
//   Local:   the target is owned by the caller and the op is monotonic; fold
//            into local memory immediately.
//   Queue:   queue the contribution without fetching the target.
enum class ReduceMode { Default, Local, Queue };

struct Stmt {
  StmtKind kind = StmtKind::Assign;
  std::string name;       // declared/assigned variable, loop var, property
  std::string of;         // ForAllNeighbors: the node binder whose neighbors are iterated
  std::string type_name;  // VarDecl/PropDecl element type
  Expr expr;              // init / value / condition
  Expr target;            // Reduction/PropAssign target (ExprKind::Prop)
  ReductionOp op = ReductionOp::Min;
  std::vector<Expr> operands;
  ReduceMode mode = ReduceMode::Default;
  // Composite reduction <Outer<Inner(operands)>, extra...>.
  bool composite = false;
  ReductionOp inner_op = ReductionOp::Min;
  std::vector<Expr> extra;
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  Origin origin = Origin::Source;
  SourcePos pos;
  int id = -1;  // pre-order index, assigned by number_statements()
};

struct Program {
  std::vector<Stmt> body;
};

// Structural equality, ignoring positions, origins and statement ids.
inline bool same(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.value != b.value || a.name != b.name || a.prop != b.prop ||
      a.op != b.op || a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same(a.args[i], b.args[i])) return false;
  return true;
}

bool same(const std::vector<Stmt>& a, const std::vector<Stmt>& b);

inline bool same(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.name != b.name || a.of != b.of || a.type_name != b.type_name ||
      a.mode != b.mode || a.composite != b.composite || a.has_else != b.has_else)
    return false;
  if (!same(a.expr, b.expr) || !same(a.target, b.target)) return false;
  if (a.kind == StmtKind::Reduction) {
    if (a.op != b.op) return false;
    if (a.composite && a.inner_op != b.inner_op) return false;
  }
  auto same_list = [](const std::vector<Expr>& x, const std::vector<Expr>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!same(x[i], y[i])) return false;
    return true;
  };
  return same_list(a.operands, b.operands) && same_list(a.extra, b.extra) &&
         same(a.body, b.body) && same(a.else_body, b.else_body);
}

inline bool same(const std::vector<Stmt>& a, const std::vector<Stmt>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

inline bool same(const Program& a, const Program& b) { return same(a.body, b.body); }

// Visitors -----------------------------------------------------------------

inline void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  for (const auto& a : e.args) for_each_expr(a, fn);
}

inline void for_each_expr_mut(Expr& e, const std::function<void(Expr&)>& fn) {
  fn(e);
  for (auto& a : e.args) for_each_expr_mut(a, fn);
}

// Expressions owned directly by a statement (not by its children).
inline std::vector<const Expr*> own_exprs(const Stmt& s) {
  std::vector<const Expr*> out;
  out.push_back(&s.expr);
  if (s.kind == StmtKind::Reduction || s.kind == StmtKind::PropAssign) out.push_back(&s.target);
  for (const auto& o : s.operands) out.push_back(&o);
  for (const auto& o : s.extra) out.push_back(&o);
  return out;
}

inline std::vector<Expr*> own_exprs_mut(Stmt& s) {
  std::vector<Expr*> out;
  out.push_back(&s.expr);
  if (s.kind == StmtKind::Reduction || s.kind == StmtKind::PropAssign) out.push_back(&s.target);
  for (auto& o : s.operands) out.push_back(&o);
  for (auto& o : s.extra) out.push_back(&o);
  return out;
}

inline void for_each_stmt(const std::vector<Stmt>& list,
                          const std::function<void(const Stmt&)>& fn) {
  for (const auto& s : list) {
    fn(s);
    for_each_stmt(s.body, fn);
    for_each_stmt(s.else_body, fn);
  }
}

inline void for_each_stmt_mut(std::vector<Stmt>& list, const std::function<void(Stmt&)>& fn) {
  for (auto& s : list) {
    fn(s);
    for_each_stmt_mut(s.body, fn);
    for_each_stmt_mut(s.else_body, fn);
  }
}

inline void number_statements(Program& p) {
  int next = 0;
  for_each_stmt_mut(p.body, [&](Stmt& s) { s.id = next++; });
}

inline Expr frontier_nonempty_cond() {
  return Expr::unary("!", Expr::call("reduction_frontier"));
}

inline bool is_frontier_cond(const Expr& e) {
  return e.kind == ExprKind::Unary && e.op == "!" && e.args.size() == 1 &&
         e.args[0].kind == ExprKind::Call && e.args[0].name == "reduction_frontier";
}

inline bool is_local_frontier_cond(const Expr& e) {
  return e.kind == ExprKind::Call && e.name == "local_frontier";
}

}  // namespace pulse::dsl
