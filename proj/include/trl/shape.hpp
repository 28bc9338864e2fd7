#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trl/ast.hpp"
#include "trl/concrete.hpp"
#include "trl/interval.hpp"

namespace trl {

// ---------------------------------------------------------------------------
// String shapes: finite constant sets up to a bound, otherwise top.
// ---------------------------------------------------------------------------

inline constexpr size_t kStrConstBound = 8;

struct StrShape {
  bool top = true;
  std::set<std::string> consts;  // non-top: non-empty, size <= kStrConstBound

  static StrShape top_shape() { return {}; }
  static StrShape of(std::set<std::string> cs) {
    if (cs.size() > kStrConstBound) return {};
    StrShape s;
    s.top = false;
    s.consts = std::move(cs);
    return s;
  }
  bool operator==(const StrShape& o) const {
    return top == o.top && consts == o.consts;
  }
};

// ---------------------------------------------------------------------------
// Value shapes
// ---------------------------------------------------------------------------

enum class ShapeKind { Bottom, Top, IntS, StrS, SetS, DataS, Ref };

class Shape;
using ChoiceMap = std::map<std::string, std::vector<Shape>>;

struct ShapeNode {
  ShapeKind kind = ShapeKind::Bottom;
  Interval num;       // IntS: value interval; SetS: cardinality
  StrShape str;       // StrS
  std::vector<Shape> elem;  // SetS: single element shape
  ChoiceMap choices;  // DataS
  std::string name;   // DataS: adt; Ref: nonterminal
  std::string key;    // canonical structural key (cached)
};

class Shape {
 public:
  Shape();  // bottom

  static Shape bottom();
  static Shape top();
  static Shape int_shape(Interval iv);
  static Shape str_shape(StrShape s);
  static Shape str_const(const std::string& s);
  static Shape set_shape(Shape elem, Interval card);
  static Shape data(std::string adt, ChoiceMap choices);
  static Shape single(std::string adt, std::string ctor, std::vector<Shape> args);
  static Shape ref(std::string nonterminal);

  ShapeKind kind() const { return n_->kind; }
  bool is_bottom() const { return n_->kind == ShapeKind::Bottom; }
  bool is_top() const { return n_->kind == ShapeKind::Top; }
  const Interval& num() const { return n_->num; }
  const StrShape& str() const { return n_->str; }
  const Shape& elem() const { return n_->elem[0]; }
  const Interval& card() const { return n_->num; }
  const ChoiceMap& choices() const { return n_->choices; }
  const std::string& adt() const { return n_->name; }
  const std::string& ref_name() const { return n_->name; }
  const std::string& key() const { return n_->key; }

  bool operator==(const Shape& o) const { return n_->key == o.n_->key; }
  bool operator!=(const Shape& o) const { return n_->key != o.n_->key; }

 private:
  explicit Shape(std::shared_ptr<const ShapeNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const ShapeNode> n_;
};

// ---------------------------------------------------------------------------
// Refinement grammars: named productions over shapes
// ---------------------------------------------------------------------------

class Grammar {
 public:
  explicit Grammar(const Program* program = nullptr) : prog_(program) {}

  const Program* program() const { return prog_; }

  bool has(const std::string& name) const { return prods_.count(name) > 0; }
  const Shape& production(const std::string& name) const;
  void define(const std::string& name, Shape body);
  std::string fresh(const std::string& hint);

  // Follows a Ref one level; other shapes pass through.
  Shape resolve(const Shape& s) const;

  // The unrestricted shape of a type; ADTs become grammar nonterminals named
  // after the type itself.
  Shape full_type(const TypeExpr& t);

  const std::map<std::string, Shape>& productions() const { return prods_; }

  // Interning support for naming passes: returns an existing nonterminal
  // whose production currently matches `key`, if any.
  std::optional<std::string> interned(const std::string& key) const;
  void remember(const std::string& key, const std::string& name);

 private:
  const Program* prog_;
  std::map<std::string, Shape> prods_;
  std::map<std::string, std::string> intern_;
  long long counter_ = 0;
};

// ---------------------------------------------------------------------------
// Lattice operations
// ---------------------------------------------------------------------------

// Inclusion by simulation over grammar pairs; sound and complete for
// deterministic-choice grammars.
bool shape_leq(const Shape& a, const Shape& b, const Grammar& g);

inline bool shape_equiv(const Shape& a, const Shape& b, const Grammar& g) {
  return shape_leq(a, b, g) && shape_leq(b, a, g);
}

Shape shape_join(const Shape& a, const Shape& b, Grammar& g);
Shape shape_meet(const Shape& a, const Shape& b, Grammar& g);

// Widening: structural widen with interval thresholds {0,1}, then folding of
// repeated (adt, constructor-set) signatures deeper than kFoldDepth.
inline constexpr int kFoldDepth = 2;
Shape shape_widen(const Shape& a, const Shape& b, Grammar& g);

// Language emptiness (recursion-aware).
bool shape_is_empty(const Shape& s, const Grammar& g);

// Cleans empty sub-languages to bottom and normalizes intervals.
Shape shape_normalize(const Shape& s, Grammar& g);

// Most precise type of a shape.
TypeExpr shape_type(const Shape& s, const Grammar& g);

// Removes constructor `k` from a data shape's choices; other shapes pass
// through unchanged.
Shape exclude(const Shape& s, const std::string& ctor, Grammar& g);

// Greatest lower bound when non-bottom.
std::optional<Shape> abstract_eq(const Shape& a, const Shape& b, Grammar& g);

// Pairs of refinements under the assumption the two values differ.
std::vector<std::pair<Shape, Shape>> abstract_neq(const Shape& a, const Shape& b,
                                                  Grammar& g);

// Sound over-approximation of set difference gamma(a) \ gamma(b).
Shape rel_complement(const Shape& a, const Shape& b, Grammar& g);

// unfold: refine a shape to a type, splitting constructor alternatives.
struct Unfolding {
  std::vector<Shape> successes;
  bool error = false;
};
Unfolding unfold(const Shape& s, const TypeExpr& t, Grammar& g);

// children: per-constructor decomposition for traversal.
struct ChildrenEntry {
  Shape refined;
  bool is_set = false;
  std::vector<Shape> seq;  // data: heterogeneous child shapes
  Shape elem;              // set: element shape
  Interval card;           // set: cardinality
};
std::vector<ChildrenEntry> children(const Shape& s, Grammar& g);

// reconstruct: rebuild a refined shape from rewritten children.
struct Reconstructed {
  std::vector<Shape> successes;  // empty with !error means bottom propagation
  bool error = false;
};
Reconstructed reconstruct(const Shape& refined, const std::vector<Shape>& kids,
                          Grammar& g);
Reconstructed reconstruct_set(const Shape& refined, const Shape& elem,
                              const Interval& card, Grammar& g);

// ---------------------------------------------------------------------------
// Concretization and membership
// ---------------------------------------------------------------------------

// Exactly the concrete values of gamma(s) with tree depth <= depth and set
// width <= width. Unbounded leaves enumerate a fixed finite witness universe
// (ints clamped to a small window, str-top as {"s0","s1"}).
std::set<Value> concretize_bounded(const Shape& s, Grammar& g, int depth,
                                   int width);

// Exact membership test.
bool shape_contains(const Shape& s, const Value& v, const Grammar& g);

// ---------------------------------------------------------------------------
// Lowering of parsed shape terms and rendering
// ---------------------------------------------------------------------------

struct ShapeTerm;  // from parser.hpp

// Installs refinement declarations as grammar nonterminals; returns their
// shapes by name.
std::map<std::string, Shape> add_refinements(Grammar& g,
                                             const std::vector<struct RefinementDecl>& decls);

Shape shape_from_term(const struct ShapeTerm& term, Grammar& g,
                      const std::map<std::string, Shape>& nonterminals);

// Canonical textual rendering in .shape syntax. Nonterminal display names are
// base-type names with numeric suffixes in first-use order; full-type
// nonterminals print as the bare type name.
std::string render_shape(const Shape& s, const Grammar& g);
std::string render_grammar(const std::vector<std::pair<std::string, Shape>>& roots,
                           const Grammar& g);

}  // namespace trl
