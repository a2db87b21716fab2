#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pulse/analyzer.hpp"
#include "pulse/dsl/ast.hpp"
#include "pulse/dsl/printer.hpp"
#include "pulse/runtime/world.hpp"

namespace pulse::engine {

using runtime::PropId;

enum class VarType { Node, Edge, Int, Bool };

enum class PExprKind {
  Const,
  Source,
  Var,
  Get,          // rma get of prop at args[0]
  LocalGet,     // bypassed read of own memory
  CachedGet,    // memoized get
  EdgeWeight,   // weight of the edge in slot
  Neg,
  Not,
  Binary,
  IsLocal,
  FrontierEmpty,   // this rank's frontier is empty
  LocalFrontier,   // this rank's frontier is non-empty
  FrontierAny,     // collective: some rank's frontier is non-empty
  AllFinished,     // collective: AND over ranks of args[0]
  GetEdge,
  GetEdgeI,
  GetEdgeOther,
};

enum class BinOp { Add, Sub, Mul, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

struct PExpr {
  PExprKind kind = PExprKind::Const;
  Value value = 0;
  int slot = -1;
  PropId prop = -1;
  BinOp bin = BinOp::Add;
  bool collective = false;  // the subtree contains a collective call
  std::vector<PExpr> args;
};

enum class NodeKind {
  PropDecl,
  VarDecl,
  Assign,
  PropWrite,
  Increment,
  ForOwned,
  ForNeighbors,
  ForFrontier,
  While,
  LocalFrontierWhile,
  If,
  Reduce,
  FixSource,
  Sync,
  CacheDecl,
  CacheClear,
};

struct PlanNode {
  NodeKind kind = NodeKind::Sync;
  int slot = -1;         // declared/assigned/bound variable
  int binder = -1;       // ForNeighbors: source vertex slot; Reduce/PropWrite: target vertex slot
  VarType type = VarType::Int;
  PropId prop = -1;
  PExpr expr;
  std::vector<PExpr> operands;  // Reduce: contribution; FixSource: vertex, value
  std::vector<PExpr> fetched;   // Reduce: self operands, fetched only in default mode
  ReductionOp op = ReductionOp::Min;
  dsl::ReduceMode mode = dsl::ReduceMode::Default;
  std::vector<PlanNode> body;
  std::vector<PlanNode> else_body;
  bool has_else = false;
  bool collective = false;  // executed in lock-step by all ranks
  bool implicit = false;    // inserted by lowering, not present in the AST
  dsl::Origin origin = dsl::Origin::Source;
  dsl::SourcePos pos;
  std::string text;
};

struct PropInfo {
  std::string name;
  PExpr init;
  std::optional<ReductionOp> op;
};

struct ExecPlan {
  std::vector<PlanNode> body;
  std::vector<PropInfo> props;
  int slot_count = 0;
  std::vector<std::pair<PropId, ReductionOp>> reduced;

  PropId prop_id(const std::string& name) const {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i].name == name) return static_cast<PropId>(i);
    return -1;
  }
};

namespace detail {

inline std::string where(const dsl::SourcePos& p) {
  return std::to_string(p.line) + ":" + std::to_string(p.col);
}

[[noreturn]] inline void lower_fail(const dsl::SourcePos& p, const std::string& msg) {
  throw LowerError(where(p) + ": " + msg);
}

inline bool is_node_loop(const Stmt& s) {
  return s.kind == StmtKind::ForAllNodes || s.kind == StmtKind::ForAllNeighbors ||
         s.kind == StmtKind::FrontierLoop;
}

inline bool has_reduction(const std::vector<Stmt>& body) {
  bool found = false;
  dsl::for_each_stmt(body, [&](const Stmt& s) { found |= s.kind == StmtKind::Reduction; });
  return found;
}

inline bool calls_all_finished(const Stmt& s) {
  bool found = false;
  for (const auto* e : dsl::own_exprs(s))
    dsl::for_each_expr(*e, [&](const Expr& x) {
      found |= x.kind == ExprKind::Call && x.name == "all_finished";
    });
  return found;
}

// Whether a statement at lock-step level must itself run in lock-step:
// it synchronizes, combines across ranks, or is control flow around a
// superstep (a node loop).
inline bool needs_lockstep(const Stmt& s) {
  switch (s.kind) {
    case StmtKind::Sync: return true;
    case StmtKind::ForAllNodes:
    case StmtKind::ForAllNeighbors:
    case StmtKind::FrontierLoop: return false;
    case StmtKind::While:
      if (dsl::is_local_frontier_cond(s.expr)) return false;
      if (dsl::is_frontier_cond(s.expr)) return true;
      [[fallthrough]];
    case StmtKind::If: {
      if (calls_all_finished(s)) return true;
      for (const auto* list : {&s.body, &s.else_body})
        for (const auto& c : *list)
          if (is_node_loop(c) || needs_lockstep(c)) return true;
      return false;
    }
    default: return calls_all_finished(s);
  }
}

class Lowerer {
 public:
  ExecPlan run(const Program& p) {
    scopes_.emplace_back();
    for (const auto& s : p.body)
      if (s.kind == StmtKind::PropDecl) declare_prop(s);
    dsl::for_each_stmt(p.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::PropDecl && !is_top_level(p, s))
        lower_fail(s.pos, "property '" + s.name + "' must be declared at top level");
      if (s.kind != StmtKind::Reduction) return;
      if (s.composite)
        lower_fail(s.pos, "unsupported construct: composite reduction <" + std::string(to_string(s.op)) +
                              "<" + std::string(to_string(s.inner_op)) + "(...)>, ...> on " +
                              dsl::to_source(s.target));
      auto& info = plan_.props[static_cast<std::size_t>(prop_of(s.target.prop, s.pos))];
      if (info.op && *info.op != s.op)
        lower_fail(s.pos, "property '" + info.name + "' is reduced with both " +
                              std::string(to_string(*info.op)) + " and " + std::string(to_string(s.op)));
      info.op = s.op;
    });
    for (std::size_t i = 0; i < plan_.props.size(); ++i)
      if (plan_.props[i].op) plan_.reduced.emplace_back(static_cast<PropId>(i), *plan_.props[i].op);
    plan_.body = lower_list(p.body, true);
    plan_.slot_count = next_slot_;
    return std::move(plan_);
  }

 private:
  static bool is_top_level(const Program& p, const Stmt& s) {
    for (const auto& t : p.body)
      if (&t == &s) return true;
    return false;
  }

  void declare_prop(const Stmt& s) {
    PropInfo info;
    info.name = s.name;
    info.init = lower_expr(s.expr, false);
    plan_.props.push_back(std::move(info));
  }

  PropId prop_of(const std::string& name, const dsl::SourcePos& pos) const {
    PropId id = plan_.prop_id(name);
    if (id < 0) lower_fail(pos, "unknown property '" + name + "'");
    return id;
  }

  std::pair<int, VarType> lookup(const std::string& name, const dsl::SourcePos& pos) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto f = it->find(name); f != it->end()) return f->second;
    lower_fail(pos, "unknown variable '" + name + "'");
  }

  int bind(const std::string& name, VarType t) {
    int slot = next_slot_++;
    scopes_.back()[name] = {slot, t};
    return slot;
  }

  PlanNode make(NodeKind k, const Stmt& s, std::string text) {
    PlanNode n;
    n.kind = k;
    n.origin = s.origin;
    n.pos = s.pos;
    n.text = std::move(text);
    return n;
  }

  std::vector<PlanNode> lower_list(const std::vector<Stmt>& list, bool lockstep) {
    std::vector<PlanNode> out;
    scopes_.emplace_back();
    for (const auto& s : list) {
      out.push_back(lower_stmt(s, lockstep));
      if (lockstep && is_node_loop(s) && has_reduction(s.body)) {
        PlanNode sync;
        sync.kind = NodeKind::Sync;
        sync.collective = true;
        sync.implicit = true;
        sync.pos = s.pos;
        sync.text = "bulk_synchronize" + reduced_text() + "  (implicit)";
        out.push_back(std::move(sync));
      }
    }
    scopes_.pop_back();
    return out;
  }

  std::string reduced_text() const {
    std::string t;
    for (auto [p, op] : plan_.reduced)
      t += " " + plan_.props[static_cast<std::size_t>(p)].name + ":" + std::string(to_string(op));
    return t;
  }

  void require_local_only(const PExpr& e, const dsl::SourcePos& pos, bool lockstep) {
    if (e.collective && !lockstep)
      lower_fail(pos, "collective g.all_finished(...) inside a rank-local region");
  }

  PlanNode lower_stmt(const Stmt& s, bool lockstep) {
    const bool ls = lockstep && needs_lockstep(s);
    switch (s.kind) {
      case StmtKind::PropDecl: {
        auto n = make(NodeKind::PropDecl, s, "prop " + s.name + " = " + dsl::to_source(s.expr));
        n.prop = prop_of(s.name, s.pos);
        return n;
      }
      case StmtKind::VarDecl: {
        VarType t = s.type_name == "Edge" ? VarType::Edge
                    : s.type_name == "bool" ? VarType::Bool
                                            : VarType::Int;
        auto n = make(NodeKind::VarDecl, s, "let " + s.type_name + " " + s.name + " = " + dsl::to_source(s.expr));
        n.type = t;
        n.expr = t == VarType::Edge ? lower_edge_expr(s.expr) : lower_expr(s.expr, lockstep);
        require_local_only(n.expr, s.pos, lockstep);
        n.collective = n.expr.collective;
        n.slot = bind(s.name, t);
        return n;
      }
      case StmtKind::Assign: {
        auto [slot, t] = lookup(s.name, s.pos);
        auto n = make(NodeKind::Assign, s, "set " + s.name + " = " + dsl::to_source(s.expr));
        n.slot = slot;
        n.type = t;
        n.expr = t == VarType::Edge ? lower_edge_expr(s.expr) : lower_expr(s.expr, lockstep);
        require_local_only(n.expr, s.pos, lockstep);
        n.collective = n.expr.collective;
        return n;
      }
      case StmtKind::PropAssign: {
        auto n = make(NodeKind::PropWrite, s, "write " + dsl::to_source(s.target) + " = " + dsl::to_source(s.expr));
        n.prop = prop_of(s.target.prop, s.pos);
        n.binder = node_slot(s.target.name, s.pos);
        n.expr = lower_expr(s.expr, false);
        return n;
      }
      case StmtKind::Increment: {
        auto [slot, t] = lookup(s.name, s.pos);
        auto n = make(NodeKind::Increment, s, "incr " + s.name);
        n.slot = slot;
        n.type = t;
        return n;
      }
      case StmtKind::ForAllNodes:
      case StmtKind::FrontierLoop: {
        bool frontier = s.kind == StmtKind::FrontierLoop;
        auto n = make(frontier ? NodeKind::ForFrontier : NodeKind::ForOwned, s,
                      frontier ? "for " + s.name + " in drain(frontier)" : "for " + s.name + " in owned(rank)");
        scopes_.emplace_back();
        n.slot = bind(s.name, VarType::Node);
        n.body = lower_list(s.body, false);
        scopes_.pop_back();
        return n;
      }
      case StmtKind::ForAllNeighbors: {
        auto n = make(NodeKind::ForNeighbors, s, "for " + s.name + " in neighbors(" + s.of + ")");
        n.binder = node_slot(s.of, s.pos);
        scopes_.emplace_back();
        n.slot = bind(s.name, VarType::Node);
        n.body = lower_list(s.body, false);
        scopes_.pop_back();
        return n;
      }
      case StmtKind::While: {
        if (dsl::is_local_frontier_cond(s.expr)) {
          auto n = make(NodeKind::LocalFrontierWhile, s, "while local frontier non-empty");
          n.body = lower_list(s.body, false);
          return n;
        }
        auto n = make(NodeKind::While, s, "");
        n.expr = lower_expr(s.expr, ls);
        n.collective = ls;
        if (ls && dsl::is_frontier_cond(s.expr))
          n.text = "while any rank has a frontier  (allreduce:or)";
        else
          n.text = "while " + dsl::to_source(s.expr) + (ls ? "  (lock-step)" : "");
        n.body = lower_list(s.body, ls);
        return n;
      }
      case StmtKind::If: {
        auto n = make(NodeKind::If, s, "if " + dsl::to_source(s.expr) + (ls ? "  (lock-step)" : ""));
        n.expr = lower_expr(s.expr, ls);
        n.collective = ls;
        n.body = lower_list(s.body, ls);
        n.has_else = s.has_else;
        n.else_body = lower_list(s.else_body, ls);
        return n;
      }
      case StmtKind::Reduction: return lower_reduction(s, lockstep);
      case StmtKind::FixSource: {
        auto n = make(NodeKind::FixSource, s,
                      "fix_source " + s.name + "[" + dsl::to_source(s.operands[0]) + "] = " +
                          dsl::to_source(s.operands[1]));
        n.prop = prop_of(s.name, s.pos);
        n.operands.push_back(lower_expr(s.operands[0], false));
        n.operands.push_back(lower_expr(s.operands[1], false));
        return n;
      }
      case StmtKind::Sync: {
        if (!lockstep) lower_fail(s.pos, "collective g.sync_reduction() inside a rank-local region");
        auto n = make(NodeKind::Sync, s, "bulk_synchronize" + reduced_text());
        n.collective = true;
        return n;
      }
      case StmtKind::CacheDecl: {
        auto n = make(NodeKind::CacheDecl, s, "memo " + s.name);
        n.prop = prop_of(s.name, s.pos);
        return n;
      }
      case StmtKind::CacheClear: {
        auto n = make(NodeKind::CacheClear, s, "memo_clear " + s.name);
        n.prop = prop_of(s.name, s.pos);
        return n;
      }
    }
    lower_fail(s.pos, "unsupported statement");
  }

  PlanNode lower_reduction(const Stmt& s, bool lockstep) {
    if (lockstep) lower_fail(s.pos, "reduction outside a node loop");
    static const char* mode_text[] = {"fetch-then-queue", "short-circuit-or-queue", "queue-only"};
    auto n = make(NodeKind::Reduce, s, "");
    n.prop = prop_of(s.target.prop, s.pos);
    n.binder = node_slot(s.target.name, s.pos);
    n.op = s.op;
    n.mode = s.mode;
    std::string contrib;
    for (const auto& o : s.operands) {
      if (is_self_operand(o, s.target)) {
        n.fetched.push_back(lower_expr(o, false));
        continue;
      }
      n.operands.push_back(lower_expr(o, false));
      contrib += (contrib.empty() ? "" : ", ") + dsl::to_source(o);
    }
    if (n.operands.empty())
      lower_fail(s.pos, "reduction on " + dsl::to_source(s.target) + " has no operand besides its target");
    n.text = "reduce " + s.target.prop + "[" + s.target.name + "] " + std::string(to_string(s.op)) + " " +
             mode_text[static_cast<int>(s.mode)] + " <- " + contrib;
    return n;
  }

  int node_slot(const std::string& name, const dsl::SourcePos& pos) const {
    auto [slot, t] = lookup(name, pos);
    if (t != VarType::Node) lower_fail(pos, "'" + name + "' is not a node variable");
    return slot;
  }

  PExpr lower_edge_expr(const Expr& e) {
    PExpr p;
    if (e.kind == ExprKind::Var) {
      auto [slot, t] = lookup(e.name, e.pos);
      if (t != VarType::Edge) lower_fail(e.pos, "'" + e.name + "' is not an edge");
      p.kind = PExprKind::Var;
      p.slot = slot;
      return p;
    }
    if (e.kind == ExprKind::Call && (e.name == "get_edge" || e.name == "get_edge_i")) {
      p.kind = e.name == "get_edge" ? PExprKind::GetEdge : PExprKind::GetEdgeI;
      p.args.push_back(lower_expr(e.args[0], false));
      p.args.push_back(lower_expr(e.args[1], false));
      return p;
    }
    lower_fail(e.pos, "expected an edge, found " + dsl::to_source(e));
  }

  PExpr lower_expr(const Expr& e, bool lockstep) {
    PExpr p;
    switch (e.kind) {
      case ExprKind::IntLit: p.kind = PExprKind::Const; p.value = clamp_value(e.value); break;
      case ExprKind::BoolLit: p.kind = PExprKind::Const; p.value = e.value ? 1 : 0; break;
      case ExprKind::Inf: p.kind = PExprKind::Const; p.value = kInf; break;
      case ExprKind::Source: p.kind = PExprKind::Source; break;
      case ExprKind::Var: {
        auto [slot, t] = lookup(e.name, e.pos);
        if (t == VarType::Edge) lower_fail(e.pos, "edge '" + e.name + "' used as a value");
        p.kind = PExprKind::Var;
        p.slot = slot;
        break;
      }
      case ExprKind::Prop: {
        auto [slot, t] = lookup(e.name, e.pos);
        if (t == VarType::Edge) {
          p.kind = PExprKind::EdgeWeight;
          p.slot = slot;
          break;
        }
        if (t != VarType::Node) lower_fail(e.pos, "'" + e.name + "' has no properties");
        p.kind = PExprKind::Get;
        p.prop = prop_of(e.prop, e.pos);
        PExpr v;
        v.kind = PExprKind::Var;
        v.slot = slot;
        p.args.push_back(std::move(v));
        break;
      }
      case ExprKind::LocalRead:
      case ExprKind::CachedRead:
        p.kind = e.kind == ExprKind::LocalRead ? PExprKind::LocalGet : PExprKind::CachedGet;
        p.prop = prop_of(e.prop, e.pos);
        p.args.push_back(lower_expr(e.args[0], false));
        break;
      case ExprKind::Unary:
        p.kind = e.op == "!" ? PExprKind::Not : PExprKind::Neg;
        if (e.op == "!" && dsl::is_frontier_cond(e)) {
          p.kind = lockstep ? PExprKind::FrontierAny : PExprKind::LocalFrontier;
          p.collective = lockstep;
          return p;
        }
        p.args.push_back(lower_expr(e.args[0], lockstep));
        break;
      case ExprKind::Binary: {
        static const std::map<std::string, BinOp> ops{
            {"+", BinOp::Add}, {"-", BinOp::Sub}, {"*", BinOp::Mul}, {"<", BinOp::Lt},
            {"<=", BinOp::Le}, {">", BinOp::Gt},  {">=", BinOp::Ge}, {"==", BinOp::Eq},
            {"!=", BinOp::Ne}, {"&&", BinOp::And}, {"||", BinOp::Or}};
        auto it = ops.find(e.op);
        if (it == ops.end()) lower_fail(e.pos, "unsupported operator '" + e.op + "'");
        p.kind = PExprKind::Binary;
        p.bin = it->second;
        p.args.push_back(lower_expr(e.args[0], lockstep));
        p.args.push_back(lower_expr(e.args[1], lockstep));
        break;
      }
      case ExprKind::Call:
        if (e.name == "is_local") {
          p.kind = PExprKind::IsLocal;
          p.args.push_back(lower_expr(e.args[0], false));
        } else if (e.name == "frontier_empty") {
          p.kind = PExprKind::FrontierEmpty;
        } else if (e.name == "local_frontier") {
          p.kind = PExprKind::LocalFrontier;
        } else if (e.name == "reduction_frontier") {
          lower_fail(e.pos, "g.reduction_frontier() is only a loop domain or a '!' loop condition");
        } else if (e.name == "all_finished") {
          if (!lockstep) lower_fail(e.pos, "collective g.all_finished(...) inside a rank-local region");
          p.kind = PExprKind::AllFinished;
          p.collective = true;
          p.args.push_back(lower_expr(e.args[0], false));
          return p;
        } else if (e.name == "get_edge_other") {
          p.kind = PExprKind::GetEdgeOther;
          p.args.push_back(lower_expr(e.args[0], false));
          p.args.push_back(lower_edge_expr(e.args[1]));
        } else {
          lower_fail(e.pos, "g." + e.name + "(...) does not produce a value");
        }
        break;
    }
    for (const auto& a : p.args) p.collective |= a.collective;
    return p;
  }

  ExecPlan plan_;
  std::vector<std::map<std::string, std::pair<int, VarType>>> scopes_;
  int next_slot_ = 0;
};

inline void dump(std::ostream& out, const std::vector<PlanNode>& list, int depth) {
  for (const auto& n : list) {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << n.text << "  ["
        << (n.implicit ? "lowering" : dsl::to_string(n.origin)) << "]\n";
    dump(out, n.body, depth + 1);
    if (n.has_else) {
      out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << "else\n";
      dump(out, n.else_body, depth + 1);
    }
  }
}

inline void collectives(const std::vector<PlanNode>& list, std::vector<std::string>& out);

inline void expr_collectives(const PExpr& e, std::vector<std::string>& out) {
  for (const auto& a : e.args) expr_collectives(a, out);
  if (e.kind == PExprKind::FrontierAny) out.push_back("allreduce:or");
  if (e.kind == PExprKind::AllFinished) out.push_back("allreduce:and");
}

inline void collectives(const std::vector<PlanNode>& list, std::vector<std::string>& out) {
  for (const auto& n : list) {
    if (!n.collective) continue;
    if (n.kind == NodeKind::Sync) out.push_back("sync");
    if (n.kind == NodeKind::While) out.push_back("(");
    expr_collectives(n.expr, out);
    if (n.kind == NodeKind::While || n.kind == NodeKind::If) {
      collectives(n.body, out);
      if (n.has_else) collectives(n.else_body, out);
    }
    if (n.kind == NodeKind::While) out.push_back(")*");
  }
}

}  // namespace detail

// Rejects composite reductions, collectives inside rank-local regions and
// properties reduced with two different operators.
inline ExecPlan lower(const Program& p) { return detail::Lowerer{}.run(p); }

inline std::string dump_plan(const ExecPlan& plan) {
  std::ostringstream out;
  for (const auto& info : plan.props)
    out << "property " << info.name << (info.op ? " reduced by " + std::string(to_string(*info.op)) : "")
        << "\n";
  detail::dump(out, plan.body, 0);
  return out.str();
}

// Collective points in plan order; a loop body is wrapped as "( ... )*".
inline std::vector<std::string> collective_sequence(const ExecPlan& plan) {
  std::vector<std::string> out;
  detail::collectives(plan.body, out);
  return out;
}

}  // namespace pulse::engine
