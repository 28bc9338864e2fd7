#include "trl/concrete.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace trl {

Value Value::int_v(int64_t v) {
  Value x;
  x.kind = ValueKind::Int;
  x.i = v;
  return x;
}
Value Value::str_v(std::string v) {
  Value x;
  x.kind = ValueKind::Str;
  x.s = std::move(v);
  return x;
}
Value Value::cons(std::string ctor, std::vector<Value> args) {
  Value x;
  x.kind = ValueKind::Cons;
  x.s = std::move(ctor);
  x.children = std::move(args);
  return x;
}
Value Value::set(std::vector<Value> elems) {
  Value x;
  x.kind = ValueKind::Set;
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end(),
                          [](const Value& a, const Value& b) { return a == b; }),
              elems.end());
  x.children = std::move(elems);
  return x;
}

int Value::depth() const {
  int d = 0;
  for (const Value& c : children) d = std::max(d, c.depth());
  return d + 1;
}

std::string Value::to_string() const {
  switch (kind) {
    case ValueKind::Int: return std::to_string(i);
    case ValueKind::Str: return "\"" + s + "\"";
    case ValueKind::Cons: {
      std::string out = s + "(";
      for (size_t j = 0; j < children.size(); ++j) {
        if (j) out += ", ";
        out += children[j].to_string();
      }
      return out + ")";
    }
    case ValueKind::Set: {
      std::string out = "{";
      for (size_t j = 0; j < children.size(); ++j) {
        if (j) out += ", ";
        out += children[j].to_string();
      }
      return out + "}";
    }
  }
  return "?";
}

int compare(const Value& a, const Value& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind) ? -1 : 1;
  switch (a.kind) {
    case ValueKind::Int:
      return a.i < b.i ? -1 : a.i > b.i ? 1 : 0;
    case ValueKind::Str:
      return a.s.compare(b.s);
    case ValueKind::Cons: {
      if (int c = a.s.compare(b.s)) return c;
      [[fallthrough]];
    }
    case ValueKind::Set: {
      if (a.children.size() != b.children.size())
        return a.children.size() < b.children.size() ? -1 : 1;
      for (size_t j = 0; j < a.children.size(); ++j)
        if (int c = compare(a.children[j], b.children[j])) return c;
      return 0;
    }
  }
  return 0;
}

TypeExpr value_type(const Value& v, const Program& p) {
  switch (v.kind) {
    case ValueKind::Int: return TypeExpr::int_type();
    case ValueKind::Str: return TypeExpr::str_type();
    case ValueKind::Cons: {
      const DataDecl* d = nullptr;
      if (p.find_ctor(v.s, &d)) return TypeExpr::adt(d->name);
      return TypeExpr::value_type();
    }
    case ValueKind::Set: {
      TypeExpr elem = TypeExpr::void_type();
      for (const Value& c : v.children) elem = type_join(elem, value_type(c, p));
      return TypeExpr::set_type(elem);
    }
  }
  return TypeExpr::value_type();
}

// ---------------------------------------------------------------------------
// Pattern matching (backtracking, associative-commutative for sets)
// ---------------------------------------------------------------------------

namespace {

struct MatchCtx {
  const ConcreteStore& store;
  std::vector<BindingEnv> results;
};

// rho holds bindings made so far; store variables constrain first use.
bool bind_var(BindingEnv& rho, const ConcreteStore& store, const std::string& x,
              const Value& v) {
  auto it = rho.find(x);
  if (it != rho.end()) return it->second == v;
  auto st = store.find(x);
  if (st != store.end() && !(st->second == v)) return false;
  rho.emplace(x, v);
  return true;
}

void match_rec(const Pattern& p, const Value& v, BindingEnv rho, MatchCtx& ctx,
               const std::function<void(BindingEnv)>& k);

// Matches a sequence of set sub-patterns against a multiset of remaining
// elements, enumerating associative-commutative arrangements.
void match_set_seq(const Pattern& setpat, size_t idx, std::vector<Value> remaining,
                   BindingEnv rho, MatchCtx& ctx,
                   const std::function<void(BindingEnv)>& k) {
  if (idx == setpat.sub.size()) {
    if (remaining.empty()) k(std::move(rho));
    return;
  }
  if (setpat.star[idx]) {
    const std::string& x = setpat.sub[idx].name;
    // Star variable consumes any subset of the remaining elements.
    size_t n = remaining.size();
    if (n > 20) throw BudgetExceeded();
    for (uint64_t mask = 0; mask < (uint64_t(1) << n); ++mask) {
      std::vector<Value> chosen, rest;
      for (size_t j = 0; j < n; ++j)
        ((mask >> j) & 1 ? chosen : rest).push_back(remaining[j]);
      BindingEnv rho2 = rho;
      if (!bind_var(rho2, ctx.store, x, Value::set(std::move(chosen)))) continue;
      match_set_seq(setpat, idx + 1, std::move(rest), std::move(rho2), ctx, k);
    }
    return;
  }
  for (size_t j = 0; j < remaining.size(); ++j) {
    std::vector<Value> rest = remaining;
    rest.erase(rest.begin() + j);
    match_rec(setpat.sub[idx], remaining[j], rho, ctx,
              [&](BindingEnv rho2) {
                match_set_seq(setpat, idx + 1, rest, std::move(rho2), ctx, k);
              });
  }
}

void match_rec(const Pattern& p, const Value& v, BindingEnv rho, MatchCtx& ctx,
               const std::function<void(BindingEnv)>& k) {
  switch (p.kind) {
    case PatternKind::Var: {
      if (bind_var(rho, ctx.store, p.name, v)) k(std::move(rho));
      return;
    }
    case PatternKind::Cons: {
      if (v.kind != ValueKind::Cons || v.s != p.name) return;
      if (v.children.size() != p.sub.size()) return;
      std::function<void(size_t, BindingEnv)> go = [&](size_t j, BindingEnv r) {
        if (j == p.sub.size()) {
          k(std::move(r));
          return;
        }
        match_rec(p.sub[j], v.children[j], std::move(r), ctx,
                  [&](BindingEnv r2) { go(j + 1, std::move(r2)); });
      };
      go(0, std::move(rho));
      return;
    }
    case PatternKind::Set: {
      if (v.kind != ValueKind::Set) return;
      match_set_seq(p, 0, v.children, std::move(rho), ctx, k);
      return;
    }
  }
}

}  // namespace

std::vector<BindingEnv> ConcreteInterp::match(const Pattern& p, const Value& v,
                                              const ConcreteStore& store) {
  MatchCtx ctx{store, {}};
  match_rec(p, v, {}, ctx, [&](BindingEnv rho) {
    if (std::find(ctx.results.begin(), ctx.results.end(), rho) == ctx.results.end())
      ctx.results.push_back(std::move(rho));
  });
  return ctx.results;
}

// ---------------------------------------------------------------------------
// Traversal
// ---------------------------------------------------------------------------

ConcreteInterp::VisitOutcome ConcreteInterp::apply_cases(
    const std::vector<Case>& cases, const Value& v, ConcreteStore store) {
  for (const Case& c : cases) {
    std::vector<BindingEnv> envs = match(c.pat, v, store);
    for (const BindingEnv& rho : envs) {
      tick();
      ConcreteStore inner = store;
      for (const auto& [x, val] : rho) inner[x] = val;
      EvalResult r = eval_in(c.body, std::move(inner), locals_);
      if (r.type == ResType::Fail) continue;  // try next binding, then next case
      // Freshly bound case variables are scoped to the body; variables that
      // were already in the store keep whatever the body left there.
      ConcreteStore out = std::move(r.store);
      for (const auto& binding : rho) {
        if (!store.count(binding.first)) out.erase(binding.first);
      }
      return {r.type, r.value, std::move(out)};
    }
  }
  return {ResType::Fail, v, std::move(store)};
}

ConcreteInterp::VisitOutcome ConcreteInterp::traverse(const std::vector<Case>& cases,
                                                      const Value& v,
                                                      ConcreteStore store) {
  tick();
  bool rewritten = false;
  Value rebuilt = v;
  if (v.kind == ValueKind::Cons || v.kind == ValueKind::Set) {
    std::vector<Value> kids;
    kids.reserve(v.children.size());
    for (const Value& c : v.children) {
      VisitOutcome r = traverse(cases, c, std::move(store));
      if (r.type == ResType::Error) return r;
      store = std::move(r.store);
      if (r.type == ResType::Success) rewritten = true;
      kids.push_back(*r.value);
    }
    if (v.kind == ValueKind::Cons) {
      const ConstructorDecl* decl = prog_.find_ctor(v.s);
      for (size_t j = 0; j < kids.size(); ++j) {
        if (!subtype(value_type(kids[j], prog_), decl->params[j].type))
          return {ResType::Error, std::nullopt, std::move(store)};
      }
      rebuilt = Value::cons(v.s, std::move(kids));
    } else {
      rebuilt = Value::set(std::move(kids));
    }
  }
  VisitOutcome r = apply_cases(cases, rebuilt, std::move(store));
  if (r.type == ResType::Error) return r;
  if (r.type == ResType::Success) return r;
  // No case fired at this node; the node counts as rewritten if any child was.
  return {rewritten ? ResType::Success : ResType::Fail, rebuilt, std::move(r.store)};
}

EvalResult ConcreteInterp::visit_bottom_up(const std::vector<Case>& cases,
                                           const Value& v, ConcreteStore store) {
  VisitOutcome r = traverse(cases, v, std::move(store));
  return {r.type, r.value, std::move(r.store)};
}

// ---------------------------------------------------------------------------
// Expression evaluation
// ---------------------------------------------------------------------------

EvalResult ConcreteInterp::eval(const Expr& e, ConcreteStore store) {
  return eval_in(e, std::move(store), nullptr);
}

EvalResult ConcreteInterp::eval_in(const Expr& e, ConcreteStore store,
                                   const std::vector<Param>* locals) {
  tick();
  const std::vector<Param>* saved = locals_;
  locals_ = locals;
  struct Restore {
    ConcreteInterp* self;
    const std::vector<Param>* saved;
    ~Restore() { self->locals_ = saved; }
  } restore{this, saved};

  switch (e.kind) {
    case ExprKind::Var: {
      auto it = store.find(e.name);
      if (it == store.end()) return {ResType::Error, std::nullopt, std::move(store)};
      return {ResType::Success, it->second, std::move(store)};
    }
    case ExprKind::Assign: {
      EvalResult r = eval_in(e.args[0], std::move(store), locals);
      if (r.type != ResType::Success) return r;
      TypeExpr declared = prog_.declared_type(e.name, locals);
      if (!subtype(value_type(*r.value, prog_), declared))
        return {ResType::Error, std::nullopt, std::move(r.store)};
      r.store[e.name] = *r.value;
      return r;
    }
    case ExprKind::Seq: {
      EvalResult r1 = eval_in(e.args[0], std::move(store), locals);
      if (r1.type != ResType::Success) return r1;
      return eval_in(e.args[1], std::move(r1.store), locals);
    }
    case ExprKind::Cons: {
      const ConstructorDecl* decl = prog_.find_ctor(e.name);
      std::vector<Value> vals;
      for (const Expr& a : e.args) {
        EvalResult r = eval_in(a, std::move(store), locals);
        if (r.type != ResType::Success) return r;
        store = std::move(r.store);
        vals.push_back(*r.value);
      }
      for (size_t j = 0; j < vals.size(); ++j)
        if (!subtype(value_type(vals[j], prog_), decl->params[j].type))
          return {ResType::Error, std::nullopt, std::move(store)};
      return {ResType::Success, Value::cons(e.name, std::move(vals)), std::move(store)};
    }
    case ExprKind::SetLit: {
      std::vector<Value> vals;
      for (const Expr& a : e.args) {
        EvalResult r = eval_in(a, std::move(store), locals);
        if (r.type != ResType::Success) return r;
        store = std::move(r.store);
        vals.push_back(*r.value);
      }
      return {ResType::Success, Value::set(std::move(vals)), std::move(store)};
    }
    case ExprKind::Fail:
      return {ResType::Fail, std::nullopt, std::move(store)};
    case ExprKind::Visit: {
      EvalResult sub = eval_in(e.args[0], std::move(store), locals);
      if (sub.type != ResType::Success) return sub;
      EvalResult r = visit_bottom_up(e.cases, *sub.value, std::move(sub.store));
      // The visit expression yields the (possibly unchanged) value.
      if (r.type == ResType::Fail) r.type = ResType::Success;
      return r;
    }
    case ExprKind::Solve:
      return solve_eval(e.vars, e.args[0], std::move(store));
    case ExprKind::Call: {
      std::vector<Value> vals;
      for (const Expr& a : e.args) {
        EvalResult r = eval_in(a, std::move(store), locals);
        if (r.type != ResType::Success) return r;
        store = std::move(r.store);
        vals.push_back(*r.value);
      }
      const FunDecl* f = prog_.find_fun(e.name);
      ConcreteStore callee;
      for (const GlobalDecl& g : prog_.globals) {
        auto it = store.find(g.name);
        if (it != store.end()) callee[g.name] = it->second;
      }
      for (size_t j = 0; j < vals.size(); ++j) {
        if (!subtype(value_type(vals[j], prog_), f->params[j].type))
          return {ResType::Error, std::nullopt, std::move(store)};
        callee[f->params[j].name] = vals[j];
      }
      EvalResult r = eval_in(f->body, std::move(callee), &f->params);
      ConcreteStore out = std::move(store);
      for (const GlobalDecl& g : prog_.globals) {
        auto it = r.store.find(g.name);
        if (it != r.store.end()) out[g.name] = it->second;
      }
      return {r.type, r.value, std::move(out)};
    }
  }
  return {ResType::Error, std::nullopt, std::move(store)};
}

EvalResult ConcreteInterp::solve_eval(const std::vector<std::string>& vars,
                                      const Expr& body, ConcreteStore store) {
  for (;;) {
    tick();
    std::vector<std::optional<Value>> before;
    for (const std::string& x : vars) {
      auto it = store.find(x);
      before.push_back(it == store.end() ? std::nullopt
                                         : std::optional<Value>(it->second));
    }
    EvalResult r = eval_in(body, store, locals_);
    if (r.type != ResType::Success) return r;
    bool changed = false;
    for (size_t j = 0; j < vars.size(); ++j) {
      auto it = r.store.find(vars[j]);
      std::optional<Value> now =
          it == r.store.end() ? std::nullopt : std::optional<Value>(it->second);
      if (now.has_value() != before[j].has_value() ||
          (now && !(*now == *before[j])))
        changed = true;
    }
    if (!changed) return r;
    store = std::move(r.store);
  }
}

EvalResult ConcreteInterp::call_function(const std::string& name,
                                         const std::vector<Value>& args,
                                         ConcreteStore globals) {
  const FunDecl* f = prog_.find_fun(name);
  if (!f) throw StaticError("unknown function '" + name + "'");
  if (f->params.size() != args.size())
    throw StaticError("function '" + name + "' expects " +
                      std::to_string(f->params.size()) + " arguments");
  ConcreteStore store = std::move(globals);
  for (size_t j = 0; j < args.size(); ++j) store[f->params[j].name] = args[j];
  return eval_in(f->body, std::move(store), &f->params);
}

}  // namespace trl
