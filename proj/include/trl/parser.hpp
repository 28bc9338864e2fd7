#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trl/ast.hpp"
#include "trl/interval.hpp"

namespace trl {

// Syntactic shape terms from .shape files; lowered to abstract values by the
// shape module.
struct ShapeTerm {
  enum class Kind { IntT, StrT, Value, Void, SetT, Name, ConsT };
  Kind kind = Kind::Value;
  Interval interval;                 // IntT bounds / SetT cardinality
  bool has_interval = false;         // IntT: explicit [l;u]
  std::vector<std::string> strings;  // StrT constants (empty = top)
  std::string name;                  // Name / ConsT
  std::vector<ShapeTerm> sub;        // SetT element / ConsT arguments
  SourceSpan span;
};

struct RefinementDecl {
  std::string name;
  std::string base;  // ADT the refinement constrains
  std::vector<std::pair<std::string, std::vector<ShapeTerm>>> alternatives;
  SourceSpan span;
};

// Parses a .trl program, runs well-formedness checks, resolves calls.
Program parse_program(const std::string& text, const std::string& filename = "<input>");

// Parses a .shape refinement block and validates it against the program.
std::vector<RefinementDecl> parse_refinement(const std::string& text,
                                             const Program& program,
                                             const std::string& filename = "<input>");

// Parses a single shape term (used for CLI --param literals and tests).
// `nonterminals` lists refinement names the term may reference.
ShapeTerm parse_shape_term(const std::string& text, const Program& program,
                           const std::set<std::string>& nonterminals = {});

}  // namespace trl
