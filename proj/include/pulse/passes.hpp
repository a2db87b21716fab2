#pragma once

#include <set>
#include <string>
#include <vector>

#include "pulse/analyzer.hpp"
#include "pulse/dsl/printer.hpp"

namespace pulse {

using dsl::Origin;
using dsl::ReduceMode;

struct PassReport {
  std::string pass;
  bool fired = false;
  int sites = 0;
  std::string reason;  // why a pass did not fire, or why sites were skipped
};

struct PassResult {
  Program program;
  PassReport report;
};

enum class Pass { Reorder, Pulses, Bypass, Cache };

inline const char* pass_name(Pass p) {
  switch (p) {
    case Pass::Reorder: return "reorder";
    case Pass::Pulses: return "pulses";
    case Pass::Bypass: return "bypass";
    case Pass::Cache: return "cache";
  }
  return "?";
}

// Fixed application order.
inline constexpr Pass kPassOrder[] = {Pass::Reorder, Pass::Pulses, Pass::Bypass, Pass::Cache};

namespace detail {

inline std::set<std::string> all_names(const Program& p) {
  std::set<std::string> names;
  dsl::for_each_stmt(p.body, [&](const Stmt& s) {
    if (!s.name.empty()) names.insert(s.name);
    for (const auto* e : dsl::own_exprs(s))
      dsl::for_each_expr(*e, [&](const Expr& x) {
        if (!x.name.empty()) names.insert(x.name);
      });
  });
  return names;
}

inline std::string fresh_name(std::set<std::string>& taken, const std::string& stem, bool numbered) {
  if (!numbered && !taken.contains(stem)) {
    taken.insert(stem);
    return stem;
  }
  for (int k = numbered ? 1 : 2;; ++k) {
    std::string cand = stem + (numbered ? "" : "_") + std::to_string(k);
    if (!taken.contains(cand)) {
      taken.insert(cand);
      return cand;
    }
  }
}

inline void mark(Stmt& s, Origin o) { s.origin = o; }

inline void finish(PassResult& r, const std::string& not_fired_reason) {
  r.report.fired = r.report.sites > 0;
  if (!r.report.fired && r.report.reason.empty()) r.report.reason = not_fired_reason;
  dsl::number_statements(r.program);
}

inline bool is_get_edge(const Expr& e, const std::string& v, const std::string& nbr) {
  return e.kind == ExprKind::Call && e.name == "get_edge" && e.args.size() == 2 &&
         e.args[0].kind == ExprKind::Var && e.args[0].name == v &&
         e.args[1].kind == ExprKind::Var && e.args[1].name == nbr;
}

inline int count_get_edge(const std::vector<Stmt>& body, const std::string& v, const std::string& nbr) {
  int n = 0;
  dsl::for_each_stmt(body, [&](const Stmt& s) {
    for (const auto* e : dsl::own_exprs(s))
      dsl::for_each_expr(*e, [&](const Expr& x) { n += is_get_edge(x, v, nbr) ? 1 : 0; });
  });
  return n;
}

// The neighbor loop may be walked positionally when nothing in its body
// carries a value from one neighbor to the next.
inline bool order_independent(const Stmt& loop, const AnalysisFacts& facts) {
  if (facts.exclusive(loop)) return true;
  std::set<std::string> declared{loop.name};
  std::set<std::string> assigned;
  dsl::for_each_stmt(loop.body, [&](const Stmt& s) {
    if (s.kind == StmtKind::VarDecl || s.kind == StmtKind::ForAllNeighbors) declared.insert(s.name);
    if (s.kind == StmtKind::Assign || s.kind == StmtKind::Increment) assigned.insert(s.name);
  });
  for (const auto& a : assigned)
    if (!declared.contains(a)) return false;
  return true;
}

inline bool has_prop_assign(const std::vector<Stmt>& body) {
  bool found = false;
  dsl::for_each_stmt(body, [&](const Stmt& s) {
    found |= s.kind == StmtKind::PropAssign || s.kind == StmtKind::FixSource;
  });
  return found;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Neighborhood reordering: replace get_edge(v, nbr) searches inside
// "forall nbr in g.neighbors(v)" with a positional counter.

inline PassResult pass_reorder_neighborhood(Program p, const AnalysisFacts& facts) {
  PassResult r{std::move(p), {"reorder", false, 0, {}}};
  auto names = detail::all_names(r.program);
  int skipped = 0;

  std::function<void(std::vector<Stmt>&)> walk = [&](std::vector<Stmt>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      Stmt& s = list[i];
      if (s.kind == StmtKind::ForAllNeighbors) {
        int matches = detail::count_get_edge(s.body, s.of, s.name);
        if (matches > 0 && !detail::order_independent(s, facts)) {
          ++skipped;
          matches = 0;
        }
        if (matches > 0) {
          const std::string v = s.of, nbr = s.name;
          const std::string counter = detail::fresh_name(names, "_t", true);
          dsl::for_each_stmt_mut(s.body, [&](Stmt& c) {
            for (auto* e : dsl::own_exprs_mut(c))
              dsl::for_each_expr_mut(*e, [&](Expr& x) {
                if (detail::is_get_edge(x, v, nbr)) {
                  x.name = "get_edge_i";
                  x.args[1] = Expr::var(counter);
                  x.origin = Origin::Reorder;
                }
              });
          });
          // Re-derive the neighbor from the edge right after the first decl.
          for (std::size_t k = 0; k < s.body.size(); ++k) {
            const Stmt& c = s.body[k];
            if (c.kind == StmtKind::VarDecl && c.type_name == "Edge" &&
                c.expr.kind == ExprKind::Call && c.expr.name == "get_edge_i" &&
                c.expr.origin == Origin::Reorder) {
              Stmt other;
              other.kind = StmtKind::Assign;
              other.name = nbr;
              other.expr = Expr::call("get_edge_other", {Expr::var(v), Expr::var(c.name)});
              detail::mark(other, Origin::Reorder);
              s.body[k].origin = Origin::Reorder;
              s.body.insert(s.body.begin() + static_cast<std::ptrdiff_t>(k) + 1, std::move(other));
              break;
            }
          }
          Stmt inc;
          inc.kind = StmtKind::Increment;
          inc.name = counter;
          detail::mark(inc, Origin::Reorder);
          s.body.push_back(std::move(inc));
          r.report.sites += matches;

          Stmt decl;
          decl.kind = StmtKind::VarDecl;
          decl.type_name = "int";
          decl.name = counter;
          decl.expr = Expr::int_lit(0);
          detail::mark(decl, Origin::Reorder);
          list.insert(list.begin() + static_cast<std::ptrdiff_t>(i), std::move(decl));
          ++i;
        }
      }
      walk(list[i].body);
      walk(list[i].else_body);
    }
  };
  walk(r.program.body);
  if (skipped > 0)
    r.report.reason = std::to_string(skipped) + " loop(s) skipped: body carries state across neighbors";
  detail::finish(r, "no get_edge(v, nbr) query inside a neighbor loop");
  return r;
}

// ---------------------------------------------------------------------------
// Pulse aggregation: drain the local frontier repeatedly before one
// synchronization, and terminate on a combined "finished" flag.

inline PassResult pass_aggregate_pulses(Program p, const AnalysisFacts& facts) {
  PassResult r{std::move(p), {"pulses", false, 0, {}}};
  auto names = detail::all_names(r.program);
  std::vector<std::string> skipped;

  std::function<void(std::vector<Stmt>&)> walk = [&](std::vector<Stmt>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      Stmt& s = list[i];
      bool site = s.kind == StmtKind::While && dsl::is_frontier_cond(s.expr);
      if (site) {
        std::string why;
        if (s.body.size() != 1 || s.body[0].kind != StmtKind::FrontierLoop)
          why = "while body is not a single frontier loop";
        else if (!facts.exclusive(s))
          why = "while body is not reduction-exclusive";
        else if (detail::has_prop_assign(s.body))
          why = "while body writes properties outside its reduction";
        if (!why.empty()) {
          skipped.push_back(why);
          site = false;
        }
      }
      if (!site) {
        walk(s.body);
        walk(s.else_body);
        continue;
      }
      const std::string flag = detail::fresh_name(names, "finished", false);
      Stmt frontier = std::move(s.body[0]);

      Stmt drain;
      drain.kind = StmtKind::While;
      drain.expr = Expr::call("local_frontier");
      drain.body.push_back(std::move(frontier));
      detail::mark(drain, Origin::Pulses);

      Stmt sync;
      sync.kind = StmtKind::Sync;
      detail::mark(sync, Origin::Pulses);

      Stmt local_done;
      local_done.kind = StmtKind::Assign;
      local_done.name = flag;
      local_done.expr = Expr::call("frontier_empty");
      detail::mark(local_done, Origin::Pulses);

      Stmt combine;
      combine.kind = StmtKind::Assign;
      combine.name = flag;
      combine.expr = Expr::call("all_finished", {Expr::var(flag)});
      detail::mark(combine, Origin::Pulses);

      Stmt outer;
      outer.kind = StmtKind::While;
      outer.expr = Expr::unary("!", Expr::var(flag));
      outer.body.push_back(std::move(drain));
      outer.body.push_back(std::move(sync));
      outer.body.push_back(std::move(local_done));
      outer.body.push_back(std::move(combine));
      detail::mark(outer, Origin::Pulses);

      Stmt decl;
      decl.kind = StmtKind::VarDecl;
      decl.type_name = "bool";
      decl.name = flag;
      decl.expr = Expr::boolean(false);
      detail::mark(decl, Origin::Pulses);

      list[i] = std::move(outer);
      list.insert(list.begin() + static_cast<std::ptrdiff_t>(i), std::move(decl));
      ++i;
      ++r.report.sites;
    }
  };
  walk(r.program.body);
  if (!skipped.empty()) r.report.reason = skipped.front();
  detail::finish(r, "no while loop over the reduction frontier");
  return r;
}

// ---------------------------------------------------------------------------
// Get bypass: inside a reduction-exclusive node loop, reads of the loop
// vertex go straight to local memory, and reductions on owned targets fold
// locally (monotonic ops) while remote ones are queued without a fetch.

namespace detail {

inline bool contribution_reads(const Stmt& red, const std::string& prop) {
  bool hit = false;
  for (const auto* list : {&red.operands, &red.extra})
    for (const auto& o : *list) {
      if (is_self_operand(o, red.target)) continue;
      dsl::for_each_expr(o, [&](const Expr& x) { hit |= is_node_prop_read(x) && x.prop == prop; });
    }
  return hit;
}

inline int localize_reads(Expr& e, const std::string& binder) {
  int n = 0;
  dsl::for_each_expr_mut(e, [&](Expr& x) {
    if (x.kind == ExprKind::Prop && x.name == binder && x.prop != "weight") {
      Expr lr;
      lr.kind = ExprKind::LocalRead;
      lr.prop = x.prop;
      lr.args.push_back(Expr::var(binder));
      lr.origin = Origin::Bypass;
      lr.pos = x.pos;
      x = std::move(lr);
      ++n;
    }
  });
  return n;
}

struct BypassCtx {
  std::string binder;
  bool fixpoint;
  int sites = 0;
};

inline void bypass_list(std::vector<Stmt>& list, BypassCtx& ctx) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    Stmt& s = list[i];
    if (s.kind == StmtKind::Reduction) {
      for (auto& o : s.operands) ctx.sites += localize_reads(o, ctx.binder);
      for (auto& o : s.extra) ctx.sites += localize_reads(o, ctx.binder);
      if (s.mode != ReduceMode::Default || s.composite) continue;
      bool fold_ok = is_monotonic(s.op) && (ctx.fixpoint || !contribution_reads(s, s.target.prop));
      ++ctx.sites;
      if (!fold_ok) {
        s.mode = ReduceMode::Queue;
        s.origin = Origin::Bypass;
        continue;
      }
      if (s.target.name == ctx.binder) {
        s.mode = ReduceMode::Local;
        s.origin = Origin::Bypass;
        continue;
      }
      Stmt local = s;
      local.mode = ReduceMode::Local;
      local.origin = Origin::Bypass;
      for (auto& o : local.operands) localize_reads(o, s.target.name);
      Stmt remote = s;
      remote.mode = ReduceMode::Queue;
      remote.origin = Origin::Bypass;
      Stmt guard;
      guard.kind = StmtKind::If;
      guard.expr = Expr::call("is_local", {Expr::var(s.target.name)});
      guard.has_else = true;
      guard.body.push_back(std::move(local));
      guard.else_body.push_back(std::move(remote));
      guard.origin = Origin::Bypass;
      guard.pos = s.pos;
      list[i] = std::move(guard);
      continue;
    }
    if (guarded_reduction(s)) continue;
    // A nested loop rebinding the same name hides the outer vertex.
    bool shadows = (s.kind == StmtKind::ForAllNeighbors || s.kind == StmtKind::ForAllNodes ||
                    s.kind == StmtKind::FrontierLoop) && s.name == ctx.binder;
    for (auto* e : dsl::own_exprs_mut(s)) {
      if (e == &s.target) continue;
      ctx.sites += localize_reads(*e, ctx.binder);
    }
    if (shadows) continue;
    bypass_list(s.body, ctx);
    bypass_list(s.else_body, ctx);
  }
}

}  // namespace detail

inline PassResult pass_get_bypass(Program p, const AnalysisFacts& facts) {
  PassResult r{std::move(p), {"bypass", false, 0, {}}};
  int skipped = 0;
  std::function<void(std::vector<Stmt>&, bool)> walk = [&](std::vector<Stmt>& list, bool fixpoint) {
    for (auto& s : list) {
      bool node_loop = s.kind == StmtKind::ForAllNodes || s.kind == StmtKind::FrontierLoop;
      if (node_loop) {
        const auto& f = facts.at(s);
        if (f.reductions == 1 && (!f.reduction_exclusive || detail::has_prop_assign(s.body))) {
          ++skipped;
        } else if (f.reduction_exclusive) {
          detail::BypassCtx ctx{s.name, fixpoint};
          detail::bypass_list(s.body, ctx);
          r.report.sites += ctx.sites;
          continue;
        }
      }
      bool fp = fixpoint || (s.kind == StmtKind::While &&
                             (dsl::is_frontier_cond(s.expr) || dsl::is_local_frontier_cond(s.expr)));
      walk(s.body, fp);
      walk(s.else_body, fp);
    }
  };
  walk(r.program.body, false);
  if (skipped > 0)
    r.report.reason = std::to_string(skipped) + " node loop(s) skipped: not reduction-exclusive";
  detail::finish(r, "no reduction-exclusive node loop with property accesses");
  return r;
}

// ---------------------------------------------------------------------------
// Opportunistic caching: reads of possibly-remote vertices whose values
// cannot change before the pulse ends go through a per-pulse memo.

inline PassResult pass_opportunistic_cache(Program p, const AnalysisFacts& facts) {
  PassResult r{std::move(p), {"cache", false, 0, {}}};
  std::set<std::string> declared, cleared;
  dsl::for_each_stmt(r.program.body, [&](const Stmt& s) {
    if (s.kind == StmtKind::CacheDecl) declared.insert(s.name);
    if (s.kind == StmtKind::CacheClear) cleared.insert(s.name);
  });

  auto rewrite_expr = [&](Expr& e, const std::string& binder, const Stmt& scope,
                          const Expr* target, std::set<std::string>& used) {
    dsl::for_each_expr_mut(e, [&](Expr& x) {
      if (x.kind != ExprKind::Prop || x.prop == "weight" || x.name == binder) return;
      if (target && is_self_operand(x, *target)) return;
      if (!facts.cache_safe(scope, access_key(x))) return;
      Expr c;
      c.kind = ExprKind::CachedRead;
      c.prop = x.prop;
      c.args.push_back(Expr::var(x.name));
      c.origin = Origin::Cache;
      c.pos = x.pos;
      used.insert(x.prop);
      x = std::move(c);
      ++r.report.sites;
    });
  };

  std::function<void(std::vector<Stmt>&, const std::string&, const Stmt&, std::set<std::string>&)>
      rewrite_body = [&](std::vector<Stmt>& list, const std::string& binder, const Stmt& scope,
                         std::set<std::string>& used) {
        for (auto& s : list) {
          const Expr* target = s.kind == StmtKind::Reduction ? &s.target : nullptr;
          for (auto* e : dsl::own_exprs_mut(s)) {
            if (e == &s.target) continue;
            rewrite_expr(*e, binder, scope, target, used);
          }
          rewrite_body(s.body, binder, scope, used);
          rewrite_body(s.else_body, binder, scope, used);
        }
      };

  std::function<void(std::vector<Stmt>&, std::set<std::string>&)> find_loops =
      [&](std::vector<Stmt>& list, std::set<std::string>& used) {
        for (auto& s : list) {
          if ((s.kind == StmtKind::ForAllNodes || s.kind == StmtKind::FrontierLoop) &&
              facts.exclusive(s)) {
            // The scope statement's facts are read before its body mutates.
            const Stmt scope_copy = s;
            rewrite_body(s.body, s.name, scope_copy, used);
            continue;
          }
          find_loops(s.body, used);
          find_loops(s.else_body, used);
        }
      };

  auto& top = r.program.body;
  for (std::size_t i = 0; i < top.size(); ++i) {
    std::set<std::string> used;
    std::vector<Stmt> one;
    one.push_back(std::move(top[i]));
    find_loops(one, used);
    top[i] = std::move(one[0]);
    if (used.empty()) continue;

    // Clear after each explicit sync inside this statement, or after it.
    bool has_sync = false;
    std::function<void(std::vector<Stmt>&)> add_clears = [&](std::vector<Stmt>& list) {
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (list[k].kind == StmtKind::Sync) {
          has_sync = true;
          std::size_t at = k + 1;
          for (const auto& prop : used) {
            bool present = at < list.size() && list[at].kind == StmtKind::CacheClear &&
                           list[at].name == prop;
            if (present || cleared.contains(prop)) continue;
            Stmt c;
            c.kind = StmtKind::CacheClear;
            c.name = prop;
            c.origin = Origin::Cache;
            list.insert(list.begin() + static_cast<std::ptrdiff_t>(at), std::move(c));
            ++at;
          }
          k = at - 1;
          continue;
        }
        add_clears(list[k].body);
        add_clears(list[k].else_body);
      }
    };
    add_clears(top[i].body);
    if (!has_sync) {
      std::size_t at = i + 1;
      for (const auto& prop : used) {
        if (cleared.contains(prop)) continue;
        Stmt c;
        c.kind = StmtKind::CacheClear;
        c.name = prop;
        c.origin = Origin::Cache;
        top.insert(top.begin() + static_cast<std::ptrdiff_t>(at++), std::move(c));
      }
    }
    std::size_t before = i;
    for (const auto& prop : used) {
      cleared.insert(prop);
      if (declared.contains(prop)) continue;
      declared.insert(prop);
      Stmt d;
      d.kind = StmtKind::CacheDecl;
      d.name = prop;
      d.origin = Origin::Cache;
      top.insert(top.begin() + static_cast<std::ptrdiff_t>(before++), std::move(d));
      ++i;
    }
  }
  detail::finish(r, "no cache-safe read of a possibly remote vertex");
  return r;
}

// ---------------------------------------------------------------------------

struct PassSet {
  bool reorder = false;
  bool pulses = false;
  bool bypass = false;
  bool cache = false;

  static PassSet none() { return {}; }
  static PassSet all() { return {true, true, true, true}; }
  bool enabled(Pass p) const {
    switch (p) {
      case Pass::Reorder: return reorder;
      case Pass::Pulses: return pulses;
      case Pass::Bypass: return bypass;
      case Pass::Cache: return cache;
    }
    return false;
  }
  void set(Pass p, bool on) {
    switch (p) {
      case Pass::Reorder: reorder = on; break;
      case Pass::Pulses: pulses = on; break;
      case Pass::Bypass: bypass = on; break;
      case Pass::Cache: cache = on; break;
    }
  }
  // 4-bit mask in pass order: bit 0 reorder ... bit 3 cache.
  static PassSet from_mask(unsigned mask) {
    PassSet s;
    for (int i = 0; i < 4; ++i) s.set(kPassOrder[i], (mask >> i) & 1u);
    return s;
  }
  std::string to_string() const {
    std::string out;
    for (auto p : kPassOrder)
      if (enabled(p)) out += (out.empty() ? "" : ",") + std::string(pass_name(p));
    return out.empty() ? "none" : out;
  }
  friend bool operator==(const PassSet&, const PassSet&) = default;
};

// "reorder,pulses,bypass,cache" (any subset); "" or "none" for no passes,
// "all" for every pass.
inline PassSet parse_pass_set(const std::string& spec) {
  PassSet s;
  if (spec.empty() || spec == "none") return s;
  if (spec == "all") return PassSet::all();
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    auto tok = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    bool ok = false;
    for (auto p : kPassOrder)
      if (tok == pass_name(p)) {
        s.set(p, true);
        ok = true;
      }
    if (!ok) throw ConfigError("unknown pass '" + tok + "' (expected reorder,pulses,bypass,cache)");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return s;
}

struct PassStep {
  Pass pass;
  std::string before;
  std::string after;
  PassReport report;
};

struct OptimizeResult {
  Program program;
  std::vector<PassStep> steps;
};

inline PassResult run_pass(Pass p, Program prog) {
  dsl::number_statements(prog);
  auto facts = analyze(prog);
  switch (p) {
    case Pass::Reorder: return pass_reorder_neighborhood(std::move(prog), facts);
    case Pass::Pulses: return pass_aggregate_pulses(std::move(prog), facts);
    case Pass::Bypass: return pass_get_bypass(std::move(prog), facts);
    case Pass::Cache: return pass_opportunistic_cache(std::move(prog), facts);
  }
  return {std::move(prog), {}};
}

// Applies the enabled passes in the fixed order, re-analyzing between passes.
inline OptimizeResult optimize(Program prog, const PassSet& passes) {
  OptimizeResult out;
  for (auto p : kPassOrder) {
    if (!passes.enabled(p)) continue;
    std::string before = dsl::pretty_print(prog);
    auto res = run_pass(p, std::move(prog));
    prog = std::move(res.program);
    out.steps.push_back({p, std::move(before), dsl::pretty_print(prog), res.report});
  }
  dsl::number_statements(prog);
  out.program = std::move(prog);
  return out;
}

}  // namespace pulse
