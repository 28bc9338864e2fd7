#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace trl {

struct SourceSpan {
  std::string file;
  int line = 0, col = 0, end_line = 0, end_col = 0;
  std::string to_string() const {
    if (line == 0) return file;
    return file + ":" + std::to_string(line) + ":" + std::to_string(col);
  }
};

// Raised for well-formedness and parse failures; carries a span.
class StaticError : public std::runtime_error {
 public:
  StaticError(const std::string& msg, SourceSpan span = {})
      : std::runtime_error(span.line ? span.to_string() + ": " + msg : msg),
        span_(std::move(span)) {}
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

// ---------------------------------------------------------------------------
// Types: void | value | int | str | set<t> | <adt>
// ---------------------------------------------------------------------------

enum class TypeKind { Void, Value, Int, Str, Set, Adt };

class TypeExpr {
 public:
  TypeExpr() : kind_(TypeKind::Value) {}

  static TypeExpr void_type() { return TypeExpr(TypeKind::Void); }
  static TypeExpr value_type() { return TypeExpr(TypeKind::Value); }
  static TypeExpr int_type() { return TypeExpr(TypeKind::Int); }
  static TypeExpr str_type() { return TypeExpr(TypeKind::Str); }
  static TypeExpr set_type(TypeExpr elem) {
    TypeExpr t(TypeKind::Set);
    t.elem_ = std::make_shared<TypeExpr>(std::move(elem));
    return t;
  }
  static TypeExpr adt(std::string name) {
    TypeExpr t(TypeKind::Adt);
    t.name_ = std::move(name);
    return t;
  }

  TypeKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const TypeExpr& elem() const { return *elem_; }

  bool operator==(const TypeExpr& o) const {
    if (kind_ != o.kind_) return false;
    if (kind_ == TypeKind::Adt) return name_ == o.name_;
    if (kind_ == TypeKind::Set) return *elem_ == *o.elem_;
    return true;
  }
  bool operator!=(const TypeExpr& o) const { return !(*this == o); }

  std::string to_string() const;

 private:
  explicit TypeExpr(TypeKind k) : kind_(k) {}
  TypeKind kind_;
  std::string name_;
  std::shared_ptr<TypeExpr> elem_;
};

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

struct Param {
  TypeExpr type;
  std::string name;
};

struct ConstructorDecl {
  std::string name;
  std::vector<Param> params;
  SourceSpan span;
};

struct DataDecl {
  std::string name;
  std::vector<ConstructorDecl> constructors;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Patterns: x | k(p...) | { *p... }  (star elements bind set remainders)
// ---------------------------------------------------------------------------

enum class PatternKind { Var, Cons, Set };

struct Pattern {
  PatternKind kind = PatternKind::Var;
  std::string name;            // Var: variable; Cons: constructor
  std::vector<Pattern> sub;    // Cons arguments / Set elements
  std::vector<bool> star;      // Set only: star[i] marks sub[i] (a Var) as *x
  SourceSpan span;

  static Pattern var(std::string x) {
    Pattern p;
    p.kind = PatternKind::Var;
    p.name = std::move(x);
    return p;
  }
  static Pattern cons(std::string k, std::vector<Pattern> args) {
    Pattern p;
    p.kind = PatternKind::Cons;
    p.name = std::move(k);
    p.sub = std::move(args);
    return p;
  }
  static Pattern set(std::vector<Pattern> elems, std::vector<bool> stars) {
    Pattern p;
    p.kind = PatternKind::Set;
    p.sub = std::move(elems);
    p.star = std::move(stars);
    return p;
  }

  std::string to_string() const;
};

std::set<std::string> pattern_vars(const Pattern& p);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ExprKind { Var, Assign, Seq, Cons, SetLit, Fail, Visit, Solve, Call };

struct Case;

struct Expr {
  ExprKind kind = ExprKind::Fail;
  std::string name;               // Var/Assign: x; Cons: k; Call: f
  std::vector<Expr> args;         // Assign: [rhs]; Seq: [e1,e2]; Cons/SetLit/Call: args;
                                  // Visit: [subject]; Solve: [body]
  std::vector<Case> cases;        // Visit
  std::vector<std::string> vars;  // Solve: watched variables
  int site_id = -1;               // Visit/Solve/Call: memoization site, set by check_program
  SourceSpan span;

  static Expr var(std::string x);
  static Expr assign(std::string x, Expr rhs);
  static Expr seq(Expr a, Expr b);
  static Expr cons(std::string k, std::vector<Expr> args);
  static Expr set(std::vector<Expr> elems);
  static Expr fail();
  static Expr visit(Expr subject, std::vector<Case> cases);
  static Expr solve(std::vector<std::string> vars, Expr body);
  static Expr call(std::string f, std::vector<Expr> args);

  std::string to_string() const;
};

struct Case {
  Pattern pat;
  Expr body;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

struct GlobalDecl {
  TypeExpr type;
  std::string name;
  SourceSpan span;
};

struct FunDecl {
  std::string name;
  TypeExpr ret;
  std::vector<Param> params;
  Expr body;
  SourceSpan span;
};

struct Program {
  std::vector<DataDecl> datadecls;
  std::vector<GlobalDecl> globals;
  std::vector<FunDecl> functions;

  const DataDecl* find_data(const std::string& name) const;
  // Looks a constructor up; optionally reports the owning data declaration.
  const ConstructorDecl* find_ctor(const std::string& name,
                                   const DataDecl** owner = nullptr) const;
  const FunDecl* find_fun(const std::string& name) const;
  const GlobalDecl* find_global(const std::string& name) const;

  // Declared type for an assignable name: function-local params are resolved
  // by the interpreter; this resolves globals and defaults to value.
  TypeExpr declared_type(const std::string& name,
                         const std::vector<Param>* locals = nullptr) const;

  std::string to_string() const;
};

// Well-formedness: unique ADT/constructor/function names, known types,
// constructor arities, visit case counts. Assigns memoization site ids.
void check_program(Program& program);

// Subtyping: reflexive-transitive, void and value as bottom and top, set
// covariant, ADTs related only by name equality.
bool subtype(const TypeExpr& a, const TypeExpr& b);

// Greatest lower bound in the type order (void when none).
TypeExpr type_meet(const TypeExpr& a, const TypeExpr& b);

// Least upper bound (value when unrelated).
TypeExpr type_join(const TypeExpr& a, const TypeExpr& b);

// t1 and t2 share a common non-void subtype. Non-exclusive with the negation
// of subtype.
bool abstract_subtype(const TypeExpr& a, const TypeExpr& b);

}  // namespace trl
