#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pulse/dsl/ast.hpp"

namespace pulse {

using dsl::Expr;
using dsl::ExprKind;
using dsl::Program;
using dsl::Stmt;
using dsl::StmtKind;

// Per-statement results of the reduction-exclusivity and cache-safety
// analyses. Indexed by Stmt::id.
struct StatementFacts {
  bool reduction_exclusive = false;
  // Set for every statement nested inside a reduction-exclusive statement.
  bool in_exclusive_context = false;
  int reductions = 0;
  std::set<std::string> reads;   // node properties read anywhere in the subtree
  std::set<std::string> writes;  // node properties written anywhere in the subtree
  // Access keys "binder.prop" (or "e.weight") that may be served from a
  // per-pulse memo inside this statement.
  std::set<std::string> cache_safe;
  // Properties not updated anywhere inside this reduction-exclusive statement.
  std::set<std::string> cache_safe_props;
};

struct AnalysisFacts {
  std::vector<StatementFacts> stmts;

  const StatementFacts& at(const Stmt& s) const { return stmts.at(static_cast<std::size_t>(s.id)); }
  bool exclusive(const Stmt& s) const { return at(s).reduction_exclusive; }
  bool cache_safe(const Stmt& s, const std::string& access) const {
    return at(s).cache_safe.contains(access);
  }
};

inline std::string access_key(const Expr& e) { return e.name + "." + e.prop; }

inline bool is_node_prop_read(const Expr& e) {
  return (e.kind == ExprKind::Prop && e.prop != "weight") || e.kind == ExprKind::LocalRead ||
         e.kind == ExprKind::CachedRead;
}

// The binder whose vertex a read touches, if syntactically known.
inline std::string read_binder(const Expr& e) {
  if (e.kind == ExprKind::Prop) return e.name;
  if (!e.args.empty() && e.args[0].kind == ExprKind::Var) return e.args[0].name;
  return {};
}

// An operand that merely restates the reduction target's current value.
inline bool is_self_operand(const Expr& operand, const Expr& target) {
  if (!is_node_prop_read(operand) || operand.prop != target.prop) return false;
  return read_binder(operand) == target.name;
}

inline void collect_reads(const Expr& e, std::set<std::string>& out) {
  dsl::for_each_expr(e, [&](const Expr& x) {
    if (is_node_prop_read(x)) out.insert(x.prop);
  });
}

// An if/else produced by the bypass pass that guards one reduction on
// target ownership counts as a single reduction site.
inline const Stmt* guarded_reduction(const Stmt& s) {
  if (s.kind != StmtKind::If || !s.has_else) return nullptr;
  if (s.expr.kind != ExprKind::Call || s.expr.name != "is_local") return nullptr;
  if (s.body.size() != 1 || s.else_body.size() != 1) return nullptr;
  const Stmt& a = s.body[0];
  const Stmt& b = s.else_body[0];
  if (a.kind != StmtKind::Reduction || b.kind != StmtKind::Reduction) return nullptr;
  if (!dsl::same(a.target, b.target) || a.op != b.op) return nullptr;
  return &a;
}

namespace detail {

// Everything the subtree rooted at a statement touches, with reduction
// sites kept apart so exclusivity can subtract them.
struct Footprint {
  struct Site {
    const Stmt* reduction;
    std::set<std::string> e;  // properties the reduction reads or updates
  };
  std::vector<Site> sites;
  // Property accesses outside any reduction site.
  std::set<std::string> outside_reads;
  std::set<std::string> outside_writes;
  std::set<std::string> reads;
  std::set<std::string> writes;
  // All node-property reads as access keys with whether they hit a target.
  std::vector<std::pair<std::string, bool>> accesses;
  bool reads_weight = false;
};

inline std::set<std::string> reduction_e(const Stmt& r) {
  std::set<std::string> e{r.target.prop};
  for (const auto& o : r.operands) collect_reads(o, e);
  for (const auto& o : r.extra) collect_reads(o, e);
  return e;
}

inline void note_reduction_accesses(const Stmt& r, Footprint& fp) {
  for (const auto* list : {&r.operands, &r.extra})
    for (const auto& o : *list)
      dsl::for_each_expr(o, [&](const Expr& x) {
        if (is_node_prop_read(x)) {
          bool target = is_self_operand(x, r.target);
          fp.accesses.emplace_back(x.kind == ExprKind::Prop ? access_key(x)
                                                            : read_binder(x) + "." + x.prop,
                                   target);
        }
        if (x.kind == ExprKind::Prop && x.prop == "weight") fp.reads_weight = true;
      });
}

inline void note_outside_expr(const Expr& e, Footprint& fp) {
  dsl::for_each_expr(e, [&](const Expr& x) {
    if (is_node_prop_read(x)) {
      fp.outside_reads.insert(x.prop);
      fp.accesses.emplace_back(x.kind == ExprKind::Prop ? access_key(x)
                                                        : read_binder(x) + "." + x.prop,
                               false);
    }
    if (x.kind == ExprKind::Prop && x.prop == "weight") fp.reads_weight = true;
  });
}

inline Footprint footprint(const Stmt& s, AnalysisFacts& facts);

inline Footprint footprint_list(const std::vector<Stmt>& list, AnalysisFacts& facts) {
  Footprint total;
  for (const auto& c : list) {
    auto fp = footprint(c, facts);
    total.sites.insert(total.sites.end(), fp.sites.begin(), fp.sites.end());
    total.outside_reads.insert(fp.outside_reads.begin(), fp.outside_reads.end());
    total.outside_writes.insert(fp.outside_writes.begin(), fp.outside_writes.end());
    total.reads.insert(fp.reads.begin(), fp.reads.end());
    total.writes.insert(fp.writes.begin(), fp.writes.end());
    total.accesses.insert(total.accesses.end(), fp.accesses.begin(), fp.accesses.end());
    total.reads_weight |= fp.reads_weight;
  }
  return total;
}

inline void record(const Stmt& s, const Footprint& fp, AnalysisFacts& facts) {
  auto& f = facts.stmts.at(static_cast<std::size_t>(s.id));
  f.reductions = static_cast<int>(fp.sites.size());
  f.reads = fp.reads;
  f.writes = fp.writes;
  if (fp.sites.size() != 1) return;
  const auto& e = fp.sites[0].e;
  for (const auto& p : e)
    if (fp.outside_reads.contains(p) || fp.outside_writes.contains(p)) return;
  f.reduction_exclusive = true;
  for (const auto& [key, is_target] : fp.accesses)
    if (!is_target) f.cache_safe.insert(key);
  if (fp.reads_weight) f.cache_safe.insert("e.weight");
  for (const auto& p : fp.reads)
    if (!fp.writes.contains(p)) f.cache_safe_props.insert(p);
  if (fp.reads_weight) f.cache_safe_props.insert("weight");
}

inline Footprint footprint(const Stmt& s, AnalysisFacts& facts) {
  Footprint fp;
  if (const Stmt* r = guarded_reduction(s)) {
    // Both branches describe one logical reduction.
    for (const auto* branch : {&s.body, &s.else_body}) {
      const Stmt& red = (*branch)[0];
      Footprint inner;
      inner.sites.push_back({&red, reduction_e(red)});
      inner.writes.insert(red.target.prop);
      for (const auto& o : red.operands) collect_reads(o, inner.reads);
      note_reduction_accesses(red, inner);
      record(red, inner, facts);
    }
    fp.sites.push_back({r, reduction_e(*r)});
    fp.writes.insert(r->target.prop);
    for (const auto& o : r->operands) collect_reads(o, fp.reads);
    note_reduction_accesses(*r, fp);
    // The ownership guard itself reads no property.
    note_outside_expr(s.expr, fp);
    collect_reads(s.expr, fp.reads);
    record(s, fp, facts);
    return fp;
  }

  switch (s.kind) {
    case StmtKind::Reduction:
      fp.sites.push_back({&s, reduction_e(s)});
      fp.writes.insert(s.target.prop);
      for (const auto& o : s.operands) collect_reads(o, fp.reads);
      for (const auto& o : s.extra) collect_reads(o, fp.reads);
      note_reduction_accesses(s, fp);
      break;
    case StmtKind::PropAssign:
      fp.outside_writes.insert(s.target.prop);
      fp.writes.insert(s.target.prop);
      note_outside_expr(s.expr, fp);
      collect_reads(s.expr, fp.reads);
      break;
    case StmtKind::FixSource:
      fp.outside_writes.insert(s.name);
      fp.writes.insert(s.name);
      for (const auto& o : s.operands) {
        note_outside_expr(o, fp);
        collect_reads(o, fp.reads);
      }
      break;
    default:
      for (const auto* e : dsl::own_exprs(s)) {
        note_outside_expr(*e, fp);
        collect_reads(*e, fp.reads);
      }
      break;
  }
  if (!s.body.empty() || !s.else_body.empty()) {
    auto body = footprint_list(s.body, facts);
    auto els = footprint_list(s.else_body, facts);
    for (auto* child : {&body, &els}) {
      fp.sites.insert(fp.sites.end(), child->sites.begin(), child->sites.end());
      fp.outside_reads.insert(child->outside_reads.begin(), child->outside_reads.end());
      fp.outside_writes.insert(child->outside_writes.begin(), child->outside_writes.end());
      fp.reads.insert(child->reads.begin(), child->reads.end());
      fp.writes.insert(child->writes.begin(), child->writes.end());
      fp.accesses.insert(fp.accesses.end(), child->accesses.begin(), child->accesses.end());
      fp.reads_weight |= child->reads_weight;
    }
  }
  record(s, fp, facts);
  return fp;
}

inline void mark_context(const std::vector<Stmt>& list, bool inside, AnalysisFacts& facts) {
  for (const auto& s : list) {
    auto& f = facts.stmts.at(static_cast<std::size_t>(s.id));
    f.in_exclusive_context = inside;
    bool next = inside || f.reduction_exclusive;
    mark_context(s.body, next, facts);
    mark_context(s.else_body, next, facts);
  }
}

}  // namespace detail

// Flags every statement whose subtree reaches exactly one reduction R and
// touches R's property set nowhere outside R. Also fills cache-safety facts.
// Requires numbered statements (dsl::number_statements).
inline AnalysisFacts analyze_reduction_exclusive(const Program& p) {
  AnalysisFacts facts;
  int count = 0;
  dsl::for_each_stmt(p.body, [&](const Stmt& s) { count = std::max(count, s.id + 1); });
  facts.stmts.resize(static_cast<std::size_t>(count));
  detail::footprint_list(p.body, facts);
  detail::mark_context(p.body, false, facts);
  return facts;
}

// Cache-safety is derived alongside exclusivity; this entry point exists so
// callers can run the two analyses as separate steps.
inline AnalysisFacts analyze_cache_safety(const Program& p, AnalysisFacts facts) {
  auto fresh = analyze_reduction_exclusive(p);
  for (std::size_t i = 0; i < facts.stmts.size() && i < fresh.stmts.size(); ++i) {
    facts.stmts[i].cache_safe = facts.stmts[i].reduction_exclusive ? fresh.stmts[i].cache_safe
                                                                   : std::set<std::string>{};
    facts.stmts[i].cache_safe_props = facts.stmts[i].reduction_exclusive
                                          ? fresh.stmts[i].cache_safe_props
                                          : std::set<std::string>{};
  }
  return facts;
}

inline AnalysisFacts analyze(const Program& p) {
  return analyze_cache_safety(p, analyze_reduction_exclusive(p));
}

}  // namespace pulse
