#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pulse/dsl/ast.hpp"
#include "pulse/engine/execute.hpp"
#include "pulse/graph.hpp"

namespace pulse::engine {

namespace detail {

// Sequential interpreter over the AST with one rank and no optimization.
// It defines what a program means: reads see the snapshot published at the
// last superstep boundary, plain writes land in live memory, and reductions
// are buffered until the next synchronization.
class Reference {
 public:
  Reference(const GlobalGraph& g, VertexId source, std::uint64_t max_pulses)
      : g_(g), source_(source), frontier_(g.n, 0) {
    limit_ = max_pulses ? max_pulses : 4 * static_cast<std::uint64_t>(std::max<VertexId>(g.n, 1));
  }

  PropertyArrays run(const Program& p) {
    if (g_.n > 0 && source_ >= g_.n) throw BoundsError("source vertex out of range");
    for (const auto& s : p.body)
      if (s.kind == StmtKind::PropDecl) {
        order_.push_back(s.name);
        live_[s.name].assign(g_.n, value(s.expr));
        ops_[s.name];
      }
    dsl::for_each_stmt(p.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::Reduction) {
        if (s.composite) throw LowerError("composite reduction is not executable");
        ops_[s.target.prop] = s.op;
      }
    });
    pub_ = live_;
    scopes_.emplace_back();
    top_block(p.body);
    bool pending = false;
    for (const auto& [name, q] : queued_) pending |= !q.empty();
    if (pending) sync();
    PropertyArrays out;
    for (const auto& name : order_) {
      out.names.push_back(name);
      out.values.push_back(live_[name]);
    }
    return out;
  }

 private:
  struct Var {
    Value val = 0;
    VertexId edge_src = 0;
    std::size_t edge_pos = 0;
  };

  bool is_loop(const Stmt& s) const {
    return s.kind == StmtKind::ForAllNodes || s.kind == StmtKind::ForAllNeighbors ||
           s.kind == StmtKind::FrontierLoop;
  }

  bool reduces(const Stmt& s) const {
    bool any = false;
    dsl::for_each_stmt(s.body, [&](const Stmt& x) { any |= x.kind == StmtKind::Reduction; });
    return any;
  }

  bool combines(const Stmt& s) const {
    bool any = false;
    for (const auto* e : dsl::own_exprs(s))
      dsl::for_each_expr(*e, [&](const Expr& x) { any |= x.kind == ExprKind::Call && x.name == "all_finished"; });
    return any;
  }

  // Statements that span superstep boundaries.
  bool spans(const Stmt& s) const {
    if (s.kind == StmtKind::Sync) return true;
    if (is_loop(s)) return false;
    if (s.kind == StmtKind::While && dsl::is_local_frontier_cond(s.expr)) return false;
    if (s.kind == StmtKind::While && dsl::is_frontier_cond(s.expr)) return true;
    if (s.kind == StmtKind::While || s.kind == StmtKind::If) {
      if (combines(s)) return true;
      for (const auto* list : {&s.body, &s.else_body})
        for (const auto& c : *list)
          if (is_loop(c) || spans(c)) return true;
      return false;
    }
    return combines(s);
  }

  void top_block(const std::vector<Stmt>& list) {
    scopes_.emplace_back();
    for (const auto& s : list) {
      if (s.kind == StmtKind::Sync) {
        sync();
      } else if (spans(s) && s.kind == StmtKind::While) {
        std::uint64_t it = 0;
        while (value(s.expr)) {
          top_block(s.body);
          if (++it > limit_ * (g_.n + 1ull)) throw NonTerminationError("loop does not terminate");
        }
      } else if (spans(s) && s.kind == StmtKind::If) {
        top_block(value(s.expr) ? s.body : s.else_body);
      } else {
        stmt(s);
        pub_ = live_;
        if (is_loop(s) && reduces(s)) sync();
      }
    }
    scopes_.pop_back();
  }

  void sync() {
    for (auto& [name, q] : queued_) {
      auto& arr = live_[name];
      ReductionOp op = *ops_[name];
      for (auto [v, val] : q) {
        Value next = apply(op, arr[v], val);
        if (next != arr[v]) {
          arr[v] = next;
          frontier_[v] = 1;
        }
      }
      q.clear();
    }
    pub_ = live_;
    if (++pulses_ > limit_) throw NonTerminationError("no fixed point within the pulse limit");
  }

  Var& var(const std::string& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto f = it->find(name); f != it->end()) return f->second;
    throw LowerError("unknown variable '" + name + "'");
  }

  VertexId as_vertex(Value x) const {
    if (x < 0 || static_cast<std::uint64_t>(x) >= g_.n) throw BoundsError("vertex out of range");
    return static_cast<VertexId>(x);
  }

  bool frontier_any() const {
    for (char c : frontier_)
      if (c) return true;
    return false;
  }

  void block(const std::vector<Stmt>& list) {
    scopes_.emplace_back();
    for (const auto& s : list) stmt(s);
    scopes_.pop_back();
  }

  void loop_body(const std::string& binder, VertexId v, const std::vector<Stmt>& body) {
    scopes_.emplace_back();
    scopes_.back()[binder].val = static_cast<Value>(v);
    block(body);
    scopes_.pop_back();
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::PropDecl:
      case StmtKind::CacheDecl:
      case StmtKind::CacheClear: return;
      case StmtKind::VarDecl: {
        Var v;
        if (s.type_name == "Edge") edge(s.expr, v);
        else v.val = value(s.expr);
        scopes_.back()[s.name] = v;
        return;
      }
      case StmtKind::Assign: {
        Var& v = var(s.name);
        bool is_edge = s.expr.kind == ExprKind::Call &&
                       (s.expr.name == "get_edge" || s.expr.name == "get_edge_i");
        if (is_edge) edge(s.expr, v);
        else if (s.expr.kind == ExprKind::Var) v = var(s.expr.name);
        else v.val = value(s.expr);
        return;
      }
      case StmtKind::PropAssign: {
        VertexId v = as_vertex(var(s.target.name).val);
        Value x = value(s.expr);
        auto& slot = live_.at(s.target.prop)[v];
        if (slot != x) {
          slot = x;
          frontier_[v] = 1;
        }
        return;
      }
      case StmtKind::Increment: var(s.name).val = saturating_add(var(s.name).val, 1); return;
      case StmtKind::ForAllNodes:
        for (VertexId v = 0; v < g_.n; ++v) loop_body(s.name, v, s.body);
        return;
      case StmtKind::FrontierLoop: {
        std::vector<VertexId> drained;
        for (VertexId v = 0; v < g_.n; ++v)
          if (frontier_[v]) {
            drained.push_back(v);
            frontier_[v] = 0;
          }
        for (VertexId v : drained) loop_body(s.name, v, s.body);
        return;
      }
      case StmtKind::ForAllNeighbors: {
        VertexId u = as_vertex(var(s.of).val);
        for (VertexId w : g_.neighbors(u)) loop_body(s.name, w, s.body);
        return;
      }
      case StmtKind::While: {
        std::uint64_t it = 0;
        while (dsl::is_local_frontier_cond(s.expr) ? frontier_any() : value(s.expr) != 0) {
          block(s.body);
          if (++it > limit_ * (g_.n + 1ull)) throw NonTerminationError("loop does not terminate");
        }
        return;
      }
      case StmtKind::If:
        block(value(s.expr) ? s.body : s.else_body);
        return;
      case StmtKind::Reduction: {
        VertexId t = as_vertex(var(s.target.name).val);
        bool have = false;
        Value c = 0;
        for (const auto& o : s.operands) {
          if (self_read(o, s.target)) continue;
          Value x = value(o);
          c = have ? apply(s.op, c, x) : x;
          have = true;
        }
        if (!have) throw LowerError("reduction without a contribution");
        queued_[s.target.prop].emplace_back(t, c);
        return;
      }
      case StmtKind::FixSource: {
        VertexId v = as_vertex(value(s.operands[0]));
        Value x = value(s.operands[1]);
        live_.at(s.name)[v] = x;
        pub_.at(s.name)[v] = x;
        frontier_[v] = 1;
        return;
      }
      case StmtKind::Sync: throw LowerError("synchronization inside a node loop");
    }
  }

  static bool self_read(const Expr& o, const Expr& target) {
    if (o.prop != target.prop) return false;
    if (o.kind == ExprKind::Prop) return o.name == target.name;
    if (o.kind == ExprKind::LocalRead || o.kind == ExprKind::CachedRead)
      return o.args[0].kind == ExprKind::Var && o.args[0].name == target.name;
    return false;
  }

  void edge(const Expr& e, Var& out) {
    if (e.kind == ExprKind::Var) {
      out = var(e.name);
      return;
    }
    VertexId u = as_vertex(value(e.args[0]));
    auto adj = g_.neighbors(u);
    out.edge_src = u;
    if (e.name == "get_edge") {
      VertexId w = as_vertex(value(e.args[1]));
      for (std::size_t i = 0; i < adj.size(); ++i)
        if (adj[i] == w) {
          out.edge_pos = i;
          return;
        }
      throw NotFoundError("no edge " + std::to_string(u) + " -> " + std::to_string(w));
    }
    Value i = value(e.args[1]);
    if (i < 0 || static_cast<std::size_t>(i) >= adj.size()) throw BoundsError("edge position out of range");
    out.edge_pos = static_cast<std::size_t>(i);
  }

  Value value(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return clamp_value(e.value);
      case ExprKind::BoolLit: return e.value ? 1 : 0;
      case ExprKind::Inf: return kInf;
      case ExprKind::Source: return static_cast<Value>(source_);
      case ExprKind::Var: return var(e.name).val;
      case ExprKind::Prop: {
        Var& b = var(e.name);
        if (e.prop == "weight") return g_.edge_weights(b.edge_src)[b.edge_pos];
        return pub_.at(e.prop)[as_vertex(b.val)];
      }
      case ExprKind::LocalRead: return live_.at(e.prop)[as_vertex(value(e.args[0]))];
      case ExprKind::CachedRead: return pub_.at(e.prop)[as_vertex(value(e.args[0]))];
      case ExprKind::Unary: {
        if (dsl::is_frontier_cond(e)) return frontier_any();
        Value x = value(e.args[0]);
        if (e.op == "!") return !x;
        return x == kInf ? kNegInf : x == kNegInf ? kInf : -x;
      }
      case ExprKind::Binary: {
        Value a = value(e.args[0]);
        if (e.op == "&&") return a ? value(e.args[1]) != 0 : 0;
        if (e.op == "||") return a ? 1 : value(e.args[1]) != 0;
        Value b = value(e.args[1]);
        std::int64_t wa = a, wb = b;
        if (e.op == "+") return saturating_add(a, b);
        if (e.op == "-") return saturating_add(a, b == kInf ? kNegInf : b == kNegInf ? kInf : -b);
        if (e.op == "*") return clamp_value(wa * wb);
        if (e.op == "<") return a < b;
        if (e.op == "<=") return a <= b;
        if (e.op == ">") return a > b;
        if (e.op == ">=") return a >= b;
        if (e.op == "==") return a == b;
        if (e.op == "!=") return a != b;
        throw LowerError("unsupported operator '" + e.op + "'");
      }
      case ExprKind::Call: {
        if (e.name == "is_local") return 1;
        if (e.name == "frontier_empty") return !frontier_any();
        if (e.name == "local_frontier") return frontier_any();
        if (e.name == "all_finished") return value(e.args[0]) != 0;
        if (e.name == "get_edge_other") {
          Var& ev = var(e.args[1].name);
          return static_cast<Value>(g_.neighbors(ev.edge_src)[ev.edge_pos]);
        }
        throw LowerError("g." + e.name + "(...) does not produce a value");
      }
    }
    return 0;
  }

  const GlobalGraph& g_;
  VertexId source_;
  std::uint64_t limit_ = 0;
  std::uint64_t pulses_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<Value>> live_, pub_;
  std::map<std::string, std::optional<ReductionOp>> ops_;
  std::map<std::string, std::vector<std::pair<VertexId, Value>>> queued_;
  std::vector<char> frontier_;
  std::vector<std::map<std::string, Var>> scopes_;
};

}  // namespace detail

// Ground-truth semantics: single rank, unoptimized, no short-circuiting.
inline PropertyArrays execute_reference(const Program& p, const GlobalGraph& g, VertexId source = 0,
                                        std::uint64_t max_pulses = 0) {
  return detail::Reference(g, source, max_pulses).run(p);
}

}  // namespace pulse::engine
