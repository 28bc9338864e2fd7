#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trl/ast.hpp"

namespace trl {

enum class ResType { Success, Fail, Error };

inline const char* res_type_name(ResType t) {
  switch (t) {
    case ResType::Success: return "success";
    case ResType::Fail: return "fail";
    case ResType::Error: return "error";
  }
  return "?";
}

// Concrete values: integers, strings, constructor terms, finite sets.
// Sets keep their elements sorted and deduplicated under the canonical value
// order so evaluation is deterministic.
enum class ValueKind { Int, Str, Cons, Set };

struct Value {
  ValueKind kind = ValueKind::Int;
  int64_t i = 0;
  std::string s;                 // Str / Cons (constructor name)
  std::vector<Value> children;   // Cons arguments / Set elements

  static Value int_v(int64_t v);
  static Value str_v(std::string v);
  static Value cons(std::string ctor, std::vector<Value> args);
  static Value set(std::vector<Value> elems);  // sorts and dedups

  int depth() const;
  std::string to_string() const;
};

// Total canonical order: kind rank, then content (constructor name before
// children, set elements lexicographically).
int compare(const Value& a, const Value& b);
inline bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
inline bool operator!=(const Value& a, const Value& b) { return compare(a, b) != 0; }
inline bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

// Most precise type of a value (sets join their element types).
TypeExpr value_type(const Value& v, const Program& p);

using ConcreteStore = std::map<std::string, Value>;
using BindingEnv = std::map<std::string, Value>;

struct EvalResult {
  ResType type = ResType::Success;
  std::optional<Value> value;
  ConcreteStore store;
};

// Thrown when the reduction step budget is exhausted (guards oracle
// nontermination in tests).
struct BudgetExceeded : std::runtime_error {
  BudgetExceeded() : std::runtime_error("concrete evaluation budget exceeded") {}
};

class ConcreteInterp {
 public:
  explicit ConcreteInterp(const Program& program, int64_t step_budget = 1000000)
      : prog_(program), budget_(step_budget) {}

  EvalResult eval(const Expr& e, ConcreteStore store);

  // All binding environments (over vars(p)) under which v matches p,
  // consistent with variables already assigned in the store. Deterministic
  // order, duplicates removed.
  std::vector<BindingEnv> match(const Pattern& p, const Value& v,
                                const ConcreteStore& store);

  // Strict bottom-up traversal: success iff some rewrite happened anywhere;
  // fail carries the structurally unchanged value.
  EvalResult visit_bottom_up(const std::vector<Case>& cases, const Value& v,
                             ConcreteStore store);

  EvalResult solve_eval(const std::vector<std::string>& vars, const Expr& body,
                        ConcreteStore store);

  // Entry-point invocation: binds parameters, keeps globals from `globals`.
  EvalResult call_function(const std::string& name, const std::vector<Value>& args,
                           ConcreteStore globals = {});

 private:
  struct VisitOutcome {
    ResType type;  // Success = rewritten, Fail = untouched, Error
    std::optional<Value> value;
    ConcreteStore store;
  };

  VisitOutcome traverse(const std::vector<Case>& cases, const Value& v,
                        ConcreteStore store);
  VisitOutcome apply_cases(const std::vector<Case>& cases, const Value& v,
                           ConcreteStore store);
  EvalResult eval_in(const Expr& e, ConcreteStore store,
                     const std::vector<Param>* locals);

  void tick() {
    if (--budget_ < 0) throw BudgetExceeded();
  }

  const Program& prog_;
  int64_t budget_;
  const std::vector<Param>* locals_ = nullptr;  // enclosing function params
};

}  // namespace trl
