#include "trl/ast.hpp"

#include <functional>
#include <sstream>

namespace trl {

std::string TypeExpr::to_string() const {
  switch (kind_) {
    case TypeKind::Void: return "void";
    case TypeKind::Value: return "value";
    case TypeKind::Int: return "int";
    case TypeKind::Str: return "str";
    case TypeKind::Set: return "set<" + elem_->to_string() + ">";
    case TypeKind::Adt: return name_;
  }
  return "?";
}

std::set<std::string> pattern_vars(const Pattern& p) {
  std::set<std::string> out;
  std::function<void(const Pattern&)> go = [&](const Pattern& q) {
    if (q.kind == PatternKind::Var) {
      out.insert(q.name);
      return;
    }
    for (const Pattern& s : q.sub) go(s);
  };
  go(p);
  return out;
}

std::string Pattern::to_string() const {
  switch (kind) {
    case PatternKind::Var: return name;
    case PatternKind::Cons: {
      std::string s = name + "(";
      for (size_t i = 0; i < sub.size(); ++i) {
        if (i) s += ", ";
        s += sub[i].to_string();
      }
      return s + ")";
    }
    case PatternKind::Set: {
      std::string s = "{";
      for (size_t i = 0; i < sub.size(); ++i) {
        if (i) s += ", ";
        if (i < star.size() && star[i]) s += "*";
        s += star[i] ? sub[i].name : sub[i].to_string();
      }
      return s + "}";
    }
  }
  return "?";
}

Expr Expr::var(std::string x) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(x);
  return e;
}
Expr Expr::assign(std::string x, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Assign;
  e.name = std::move(x);
  e.args.push_back(std::move(rhs));
  return e;
}
Expr Expr::seq(Expr a, Expr b) {
  Expr e;
  e.kind = ExprKind::Seq;
  e.args.push_back(std::move(a));
  e.args.push_back(std::move(b));
  return e;
}
Expr Expr::cons(std::string k, std::vector<Expr> args) {
  Expr e;
  e.kind = ExprKind::Cons;
  e.name = std::move(k);
  e.args = std::move(args);
  return e;
}
Expr Expr::set(std::vector<Expr> elems) {
  Expr e;
  e.kind = ExprKind::SetLit;
  e.args = std::move(elems);
  return e;
}
Expr Expr::fail() {
  Expr e;
  e.kind = ExprKind::Fail;
  return e;
}
Expr Expr::visit(Expr subject, std::vector<Case> cases) {
  Expr e;
  e.kind = ExprKind::Visit;
  e.args.push_back(std::move(subject));
  e.cases = std::move(cases);
  return e;
}
Expr Expr::solve(std::vector<std::string> vars, Expr body) {
  Expr e;
  e.kind = ExprKind::Solve;
  e.vars = std::move(vars);
  e.args.push_back(std::move(body));
  return e;
}
Expr Expr::call(std::string f, std::vector<Expr> args) {
  Expr e;
  e.kind = ExprKind::Call;
  e.name = std::move(f);
  e.args = std::move(args);
  return e;
}

std::string Expr::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case ExprKind::Var: os << name; break;
    case ExprKind::Assign: os << name << " = " << args[0].to_string(); break;
    case ExprKind::Seq:
      os << "(" << args[0].to_string() << "; " << args[1].to_string() << ")";
      break;
    case ExprKind::Cons:
    case ExprKind::Call: {
      os << name << "(";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        os << args[i].to_string();
      }
      os << ")";
      break;
    }
    case ExprKind::SetLit: {
      os << "{";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        os << args[i].to_string();
      }
      os << "}";
      break;
    }
    case ExprKind::Fail: os << "fail"; break;
    case ExprKind::Visit: {
      os << "bottom-up visit (" << args[0].to_string() << ") {";
      for (const Case& c : cases)
        os << " case " << c.pat.to_string() << " => " << c.body.to_string();
      os << " }";
      break;
    }
    case ExprKind::Solve: {
      os << "solve (";
      for (size_t i = 0; i < vars.size(); ++i) {
        if (i) os << ", ";
        os << vars[i];
      }
      os << ") { " << args[0].to_string() << " }";
      break;
    }
  }
  return os.str();
}

const DataDecl* Program::find_data(const std::string& name) const {
  for (const DataDecl& d : datadecls)
    if (d.name == name) return &d;
  return nullptr;
}

const ConstructorDecl* Program::find_ctor(const std::string& name,
                                          const DataDecl** owner) const {
  for (const DataDecl& d : datadecls)
    for (const ConstructorDecl& c : d.constructors)
      if (c.name == name) {
        if (owner) *owner = &d;
        return &c;
      }
  return nullptr;
}

const FunDecl* Program::find_fun(const std::string& name) const {
  for (const FunDecl& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

const GlobalDecl* Program::find_global(const std::string& name) const {
  for (const GlobalDecl& g : globals)
    if (g.name == name) return &g;
  return nullptr;
}

TypeExpr Program::declared_type(const std::string& name,
                                const std::vector<Param>* locals) const {
  if (locals)
    for (const Param& p : *locals)
      if (p.name == name) return p.type;
  if (const GlobalDecl* g = find_global(name)) return g->type;
  return TypeExpr::value_type();
}

std::string Program::to_string() const {
  std::ostringstream os;
  for (const DataDecl& d : datadecls) {
    os << "data " << d.name << " = ";
    for (size_t i = 0; i < d.constructors.size(); ++i) {
      if (i) os << " | ";
      const ConstructorDecl& c = d.constructors[i];
      os << c.name << "(";
      for (size_t j = 0; j < c.params.size(); ++j) {
        if (j) os << ", ";
        os << c.params[j].type.to_string() << " " << c.params[j].name;
      }
      os << ")";
    }
    os << ";\n";
  }
  for (const GlobalDecl& g : globals)
    os << g.type.to_string() << " " << g.name << ";\n";
  for (const FunDecl& f : functions) {
    os << "fun " << f.ret.to_string() << " " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) os << ", ";
      os << f.params[i].type.to_string() << " " << f.params[i].name;
    }
    os << ") = " << f.body.to_string() << ";\n";
  }
  return os.str();
}

namespace {

void check_type(const TypeExpr& t, const Program& p, const SourceSpan& span) {
  if (t.kind() == TypeKind::Adt && !p.find_data(t.name()))
    throw StaticError("unknown data type '" + t.name() + "'", span);
  if (t.kind() == TypeKind::Set) check_type(t.elem(), p, span);
}

void check_pattern(const Pattern& pat, const Program& p) {
  switch (pat.kind) {
    case PatternKind::Var: return;
    case PatternKind::Cons: {
      const ConstructorDecl* c = p.find_ctor(pat.name);
      if (!c) throw StaticError("unknown constructor '" + pat.name + "'", pat.span);
      if (c->params.size() != pat.sub.size())
        throw StaticError("constructor '" + pat.name + "' expects " +
                              std::to_string(c->params.size()) + " arguments, got " +
                              std::to_string(pat.sub.size()),
                          pat.span);
      for (const Pattern& s : pat.sub) check_pattern(s, p);
      return;
    }
    case PatternKind::Set: {
      for (size_t i = 0; i < pat.sub.size(); ++i) {
        if (pat.star[i]) {
          if (pat.sub[i].kind != PatternKind::Var)
            throw StaticError("star pattern must be a variable", pat.span);
        } else {
          check_pattern(pat.sub[i], p);
        }
      }
      return;
    }
  }
}

void check_expr(Expr& e, const Program& p, int& next_site) {
  switch (e.kind) {
    case ExprKind::Var:
    case ExprKind::Fail:
      break;
    case ExprKind::Assign:
      check_expr(e.args[0], p, next_site);
      break;
    case ExprKind::Seq:
      check_expr(e.args[0], p, next_site);
      check_expr(e.args[1], p, next_site);
      break;
    case ExprKind::Cons: {
      const ConstructorDecl* c = p.find_ctor(e.name);
      if (!c) throw StaticError("unknown constructor '" + e.name + "'", e.span);
      if (c->params.size() != e.args.size())
        throw StaticError("constructor '" + e.name + "' expects " +
                              std::to_string(c->params.size()) + " arguments, got " +
                              std::to_string(e.args.size()),
                          e.span);
      for (Expr& a : e.args) check_expr(a, p, next_site);
      break;
    }
    case ExprKind::SetLit:
      for (Expr& a : e.args) check_expr(a, p, next_site);
      break;
    case ExprKind::Visit: {
      if (e.cases.empty())
        throw StaticError("visit requires at least one case", e.span);
      e.site_id = next_site++;
      check_expr(e.args[0], p, next_site);
      for (Case& c : e.cases) {
        check_pattern(c.pat, p);
        check_expr(c.body, p, next_site);
      }
      break;
    }
    case ExprKind::Solve: {
      if (e.vars.empty())
        throw StaticError("solve requires at least one watched variable", e.span);
      e.site_id = next_site++;
      check_expr(e.args[0], p, next_site);
      break;
    }
    case ExprKind::Call: {
      const FunDecl* f = p.find_fun(e.name);
      if (!f) throw StaticError("unknown function '" + e.name + "'", e.span);
      if (f->params.size() != e.args.size())
        throw StaticError("function '" + e.name + "' expects " +
                              std::to_string(f->params.size()) + " arguments, got " +
                              std::to_string(e.args.size()),
                          e.span);
      e.site_id = next_site++;
      for (Expr& a : e.args) check_expr(a, p, next_site);
      break;
    }
  }
}

}  // namespace

void check_program(Program& program) {
  std::set<std::string> adts, ctors, funs;
  for (const DataDecl& d : program.datadecls) {
    if (!adts.insert(d.name).second)
      throw StaticError("duplicate data type '" + d.name + "'", d.span);
    for (const ConstructorDecl& c : d.constructors)
      if (!ctors.insert(c.name).second)
        throw StaticError("duplicate constructor '" + c.name + "'", c.span);
  }
  for (const DataDecl& d : program.datadecls)
    for (const ConstructorDecl& c : d.constructors)
      for (const Param& pr : c.params) check_type(pr.type, program, c.span);
  for (const GlobalDecl& g : program.globals)
    check_type(g.type, program, g.span);
  int next_site = 0;
  for (FunDecl& f : program.functions) {
    if (!funs.insert(f.name).second)
      throw StaticError("duplicate function '" + f.name + "'", f.span);
    check_type(f.ret, program, f.span);
    for (const Param& pr : f.params) check_type(pr.type, program, f.span);
  }
  for (FunDecl& f : program.functions) check_expr(f.body, program, next_site);
}

bool subtype(const TypeExpr& a, const TypeExpr& b) {
  if (a.kind() == TypeKind::Void) return true;
  if (b.kind() == TypeKind::Value) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TypeKind::Int:
    case TypeKind::Str:
      return true;
    case TypeKind::Adt:
      return a.name() == b.name();
    case TypeKind::Set:
      return subtype(a.elem(), b.elem());
    default:
      return a == b;
  }
}

TypeExpr type_meet(const TypeExpr& a, const TypeExpr& b) {
  if (subtype(a, b)) return a;
  if (subtype(b, a)) return b;
  if (a.kind() == TypeKind::Set && b.kind() == TypeKind::Set)
    return TypeExpr::set_type(type_meet(a.elem(), b.elem()));
  return TypeExpr::void_type();
}

TypeExpr type_join(const TypeExpr& a, const TypeExpr& b) {
  if (subtype(a, b)) return b;
  if (subtype(b, a)) return a;
  if (a.kind() == TypeKind::Set && b.kind() == TypeKind::Set)
    return TypeExpr::set_type(type_join(a.elem(), b.elem()));
  return TypeExpr::value_type();
}

bool abstract_subtype(const TypeExpr& a, const TypeExpr& b) {
  return type_meet(a, b).kind() != TypeKind::Void;
}

}  // namespace trl
