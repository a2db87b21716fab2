#pragma once

#include <string>
#include <vector>

#include "pulse/engine/plan.hpp"
#include "pulse/graph.hpp"
#include "pulse/runtime/world.hpp"

namespace pulse::engine {

struct RunOptions {
  VertexId source = 0;
};

// Final properties in declaration order, each gathered in global-id order.
struct PropertyArrays {
  std::vector<std::string> names;
  std::vector<std::vector<Value>> values;

  const std::vector<Value>& at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    throw NotFoundError("no property '" + name + "'");
  }
  bool operator==(const PropertyArrays&) const = default;
};

struct RunResult {
  PropertyArrays props;
  runtime::Metrics metrics;
};

namespace detail {

inline Value negate(Value x) {
  if (x == kInf) return kNegInf;
  if (x == kNegInf) return kInf;
  return -x;
}

inline Value binary(BinOp op, Value a, Value b) {
  switch (op) {
    case BinOp::Add: return saturating_add(a, b);
    case BinOp::Sub: return saturating_add(a, negate(b));
    case BinOp::Mul: return clamp_value(static_cast<std::int64_t>(a) * b);
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::And: return a && b;
    case BinOp::Or: return a || b;
  }
  return 0;
}

struct Cell {
  Value val = 0;
  EdgeHandle edge{};
};

class Executor {
 public:
  Executor(const ExecPlan& plan, const PartitionedGraph& g, runtime::World& w, RunOptions opt)
      : plan_(plan), g_(g), w_(w), opt_(opt),
        env_(static_cast<std::size_t>(g.world_size()), std::vector<Cell>(static_cast<std::size_t>(plan.slot_count))) {
    auto max = w.config().max_pulses;
    pulse_limit_ = max ? max : 4 * static_cast<std::uint64_t>(std::max<VertexId>(g.n(), 1));
    loop_limit_ = pulse_limit_ * (static_cast<std::uint64_t>(g.n()) + 1);
  }

  RunResult run() {
    if (g_.n() > 0 && opt_.source >= g_.n())
      throw BoundsError("source vertex " + std::to_string(opt_.source) + " out of range");
    for (const auto& info : plan_.props) {
      Value init = eval(0, info.init);
      if (w_.add_property(info.name, init) != plan_.prop_id(info.name))
        throw ExecError("world property layout does not match the plan");
    }
    exec_lockstep(plan_.body);
    if (!w_.queues_empty()) sync();
    w_.finish_run();
    RunResult out;
    for (std::size_t i = 0; i < plan_.props.size(); ++i) {
      out.props.names.push_back(plan_.props[i].name);
      out.props.values.push_back(w_.gather(static_cast<PropId>(i)));
    }
    out.metrics = w_.metrics();
    return out;
  }

 private:
  int ranks() const { return g_.world_size(); }

  VertexId vertex(Value x) const {
    if (x < 0 || static_cast<std::uint64_t>(x) >= g_.n())
      throw BoundsError("vertex " + format_value(x) + " out of range");
    return static_cast<VertexId>(x);
  }

  void sync() {
    w_.sync_reduction(plan_.reduced);
    if (w_.metrics().sync_rounds > pulse_limit_)
      throw NonTerminationError("no fixed point after " + std::to_string(pulse_limit_) + " pulses");
  }

  void guard(std::uint64_t& iterations, std::uint64_t limit, const dsl::SourcePos& pos) {
    if (++iterations > limit)
      throw NonTerminationError("loop at " + where(pos) + " exceeded " + std::to_string(limit) + " iterations");
  }

  // Lock-step evaluation: one value per rank. Collective calls combine
  // across ranks; everything else is evaluated rank by rank.
  std::vector<Value> eval_all(const PExpr& e) {
    std::vector<Value> out(static_cast<std::size_t>(ranks()));
    if (!e.collective) {
      for (Rank r = 0; r < ranks(); ++r) out[r] = eval(r, e);
      return out;
    }
    switch (e.kind) {
      case PExprKind::FrontierAny: {
        std::vector<bool> flags;
        for (Rank r = 0; r < ranks(); ++r) flags.push_back(w_.frontier_nonempty(r));
        Value any = w_.combine_termination_flag(flags, runtime::Combiner::Or);
        std::fill(out.begin(), out.end(), any);
        return out;
      }
      case PExprKind::AllFinished: {
        auto local = eval_all(e.args[0]);
        std::vector<bool> flags(local.begin(), local.end());
        Value all = w_.combine_termination_flag(flags, runtime::Combiner::And);
        std::fill(out.begin(), out.end(), all);
        return out;
      }
      case PExprKind::Not:
      case PExprKind::Neg: {
        auto a = eval_all(e.args[0]);
        for (Rank r = 0; r < ranks(); ++r) out[r] = e.kind == PExprKind::Not ? !a[r] : negate(a[r]);
        return out;
      }
      case PExprKind::Binary: {
        // Both sides always run so every rank reaches the same collectives.
        auto a = eval_all(e.args[0]);
        auto b = eval_all(e.args[1]);
        for (Rank r = 0; r < ranks(); ++r) out[r] = binary(e.bin, a[r], b[r]);
        return out;
      }
      default: throw ExecError("collective in an unsupported position");
    }
  }

  bool agree(const PExpr& cond, const PlanNode& n) {
    auto v = eval_all(cond);
    for (Rank r = 1; r < ranks(); ++r)
      if ((v[r] != 0) != (v[0] != 0)) {
        std::string detail;
        for (Rank q = 0; q < ranks(); ++q) detail += " rank " + std::to_string(q) + "=" + (v[q] ? "true" : "false");
        throw DeadlockError("ranks diverge on the condition at " + where(n.pos) + ":" + detail);
      }
    return v[0] != 0;
  }

  void exec_lockstep(const std::vector<PlanNode>& list) {
    for (const auto& n : list) {
      if (!n.collective) {
        for (Rank r = 0; r < ranks(); ++r) exec_local(r, n);
        w_.publish();
        continue;
      }
      switch (n.kind) {
        case NodeKind::Sync: sync(); break;
        case NodeKind::While: {
          std::uint64_t it = 0;
          while (agree(n.expr, n)) {
            exec_lockstep(n.body);
            guard(it, loop_limit_, n.pos);
          }
          break;
        }
        case NodeKind::If:
          if (agree(n.expr, n))
            exec_lockstep(n.body);
          else
            exec_lockstep(n.else_body);
          break;
        case NodeKind::VarDecl:
        case NodeKind::Assign: {
          auto v = eval_all(n.expr);
          for (Rank r = 0; r < ranks(); ++r) env_[r][n.slot].val = v[r];
          break;
        }
        default: throw ExecError("unexpected lock-step node: " + n.text);
      }
    }
  }

  void exec_local_list(Rank r, const std::vector<PlanNode>& list) {
    for (const auto& n : list) exec_local(r, n);
  }

  void exec_local(Rank r, const PlanNode& n) {
    auto& env = env_[r];
    switch (n.kind) {
      case NodeKind::PropDecl:
      case NodeKind::CacheDecl: break;
      case NodeKind::CacheClear: w_.clear_cache(n.prop, r); break;
      case NodeKind::VarDecl:
      case NodeKind::Assign:
        if (n.type == VarType::Edge)
          env[n.slot].edge = eval_edge(r, n.expr);
        else
          env[n.slot].val = eval(r, n.expr);
        break;
      case NodeKind::PropWrite:
        w_.write_local(n.prop, vertex(env[n.binder].val), r, eval(r, n.expr));
        break;
      case NodeKind::Increment: env[n.slot].val = saturating_add(env[n.slot].val, 1); break;
      case NodeKind::ForOwned: {
        const auto& part = g_.partition();
        for (VertexId v = part.begin(r); v < part.end(r); ++v) {
          env[n.slot].val = static_cast<Value>(v);
          exec_local_list(r, n.body);
        }
        break;
      }
      case NodeKind::ForFrontier:
        for (VertexId v : w_.frontier_drain(r)) {
          env[n.slot].val = static_cast<Value>(v);
          exec_local_list(r, n.body);
        }
        break;
      case NodeKind::ForNeighbors: {
        auto adj = g_.neighbors(r, vertex(env[n.binder].val));
        for (VertexId u : adj) {
          env[n.slot].val = static_cast<Value>(u);
          exec_local_list(r, n.body);
        }
        break;
      }
      case NodeKind::While: {
        std::uint64_t it = 0;
        while (eval(r, n.expr)) {
          exec_local_list(r, n.body);
          guard(it, loop_limit_, n.pos);
        }
        break;
      }
      case NodeKind::LocalFrontierWhile: {
        std::uint64_t it = 0;
        while (w_.frontier_nonempty(r)) {
          exec_local_list(r, n.body);
          guard(it, loop_limit_, n.pos);
        }
        break;
      }
      case NodeKind::If:
        if (eval(r, n.expr))
          exec_local_list(r, n.body);
        else
          exec_local_list(r, n.else_body);
        break;
      case NodeKind::Reduce: reduce(r, n); break;
      case NodeKind::FixSource: {
        VertexId v = vertex(eval(r, n.operands[0]));
        Value val = eval(r, n.operands[1]);
        if (g_.owner(v) == r) {
          w_.store(n.prop, v, val);
          w_.frontier_mark(v);
        }
        break;
      }
      case NodeKind::Sync: throw ExecError("synchronization inside a rank-local region");
    }
  }

  void reduce(Rank r, const PlanNode& n) {
    VertexId t = vertex(env_[r][n.binder].val);
    if (n.mode == dsl::ReduceMode::Default)
      for (const auto& f : n.fetched) eval(r, f);
    Value c = eval(r, n.operands[0]);
    for (std::size_t i = 1; i < n.operands.size(); ++i) c = apply(n.op, c, eval(r, n.operands[i]));
    if (n.mode == dsl::ReduceMode::Local && w_.short_circuit_local(n.prop, t, c, n.op, r)) return;
    w_.add_to_red(n.prop, r, t, c);
  }

  EdgeHandle eval_edge(Rank r, const PExpr& e) {
    auto& steps = w_.metrics().edge_search_steps;
    switch (e.kind) {
      case PExprKind::Var: return env_[r][e.slot].edge;
      case PExprKind::GetEdge:
        return g_.get_edge(r, vertex(eval(r, e.args[0])), vertex(eval(r, e.args[1])), steps);
      case PExprKind::GetEdgeI: {
        Value i = eval(r, e.args[1]);
        if (i < 0) throw BoundsError("negative edge position");
        return g_.get_edge_i(r, vertex(eval(r, e.args[0])), static_cast<EdgeIndex>(i), steps);
      }
      default: throw ExecError("expression does not produce an edge");
    }
  }

  Value eval(Rank r, const PExpr& e) {
    switch (e.kind) {
      case PExprKind::Const: return e.value;
      case PExprKind::Source: return static_cast<Value>(opt_.source);
      case PExprKind::Var: return env_[r][e.slot].val;
      case PExprKind::Get: return w_.rma_get(e.prop, vertex(eval(r, e.args[0])), r);
      case PExprKind::LocalGet: return w_.bypass_read(e.prop, vertex(eval(r, e.args[0])), r);
      case PExprKind::CachedGet: return w_.cached_get(e.prop, vertex(eval(r, e.args[0])), r);
      case PExprKind::EdgeWeight: return g_.weight(r, env_[r][e.slot].edge);
      case PExprKind::Neg: return negate(eval(r, e.args[0]));
      case PExprKind::Not: return !eval(r, e.args[0]);
      case PExprKind::Binary: {
        Value a = eval(r, e.args[0]);
        if (e.bin == BinOp::And && !a) return 0;
        if (e.bin == BinOp::Or && a) return 1;
        return binary(e.bin, a, eval(r, e.args[1]));
      }
      case PExprKind::IsLocal: return g_.owner(vertex(eval(r, e.args[0]))) == r;
      case PExprKind::FrontierEmpty: return !w_.frontier_nonempty(r);
      case PExprKind::LocalFrontier: return w_.frontier_nonempty(r);
      case PExprKind::GetEdgeOther: {
        vertex(eval(r, e.args[0]));
        return static_cast<Value>(g_.get_edge_other(r, eval_edge(r, e.args[1])));
      }
      case PExprKind::FrontierAny:
      case PExprKind::AllFinished: throw ExecError("collective evaluated inside a rank-local region");
      case PExprKind::GetEdge:
      case PExprKind::GetEdgeI: throw ExecError("edge used as a value");
    }
    return 0;
  }

  const ExecPlan& plan_;
  const PartitionedGraph& g_;
  runtime::World& w_;
  RunOptions opt_;
  std::vector<std::vector<Cell>> env_;
  std::uint64_t pulse_limit_ = 0;
  std::uint64_t loop_limit_ = 0;
};

}  // namespace detail

// Runs an SPMD plan on the world. The world must be fresh.
inline RunResult execute(const ExecPlan& plan, const PartitionedGraph& g, runtime::World& world,
                         RunOptions opt = {}) {
  return detail::Executor(plan, g, world, opt).run();
}

}  // namespace pulse::engine
