#include "trl/shape.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "trl/parser.hpp"

namespace trl {

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const ShapeNode> make_node(ShapeNode n) {
  // Canonical structural key, with Refs kept symbolic.
  std::string k;
  switch (n.kind) {
    case ShapeKind::Bottom: k = "B"; break;
    case ShapeKind::Top: k = "T"; break;
    case ShapeKind::IntS: k = "I" + n.num.to_string(); break;
    case ShapeKind::StrS:
      if (n.str.top) {
        k = "S*";
      } else {
        k = "S{";
        for (const std::string& s : n.str.consts) k += s + ",";
        k += "}";
      }
      break;
    case ShapeKind::SetS:
      k = "E(" + n.elem[0].key() + ")" + n.num.to_string();
      break;
    case ShapeKind::DataS: {
      k = "D:" + n.name + "{";
      for (const auto& [c, args] : n.choices) {
        k += c + "(";
        for (const Shape& a : args) k += a.key() + ",";
        k += ");";
      }
      k += "}";
      break;
    }
    case ShapeKind::Ref: k = "&" + n.name; break;
  }
  n.key = std::move(k);
  return std::make_shared<const ShapeNode>(std::move(n));
}

const std::shared_ptr<const ShapeNode>& bottom_node() {
  static const std::shared_ptr<const ShapeNode> n = [] {
    ShapeNode b;
    b.kind = ShapeKind::Bottom;
    return make_node(std::move(b));
  }();
  return n;
}

}  // namespace

Shape::Shape() : n_(bottom_node()) {}

Shape Shape::bottom() { return Shape(bottom_node()); }

Shape Shape::top() {
  static const std::shared_ptr<const ShapeNode> n = [] {
    ShapeNode t;
    t.kind = ShapeKind::Top;
    return make_node(std::move(t));
  }();
  return Shape(n);
}

Shape Shape::int_shape(Interval iv) {
  if (iv.is_empty()) return bottom();
  ShapeNode n;
  n.kind = ShapeKind::IntS;
  n.num = iv;
  return Shape(make_node(std::move(n)));
}

Shape Shape::str_shape(StrShape s) {
  if (!s.top && s.consts.empty()) return bottom();
  ShapeNode n;
  n.kind = ShapeKind::StrS;
  n.str = std::move(s);
  return Shape(make_node(std::move(n)));
}

Shape Shape::str_const(const std::string& s) { return str_shape(StrShape::of({s})); }

Shape Shape::set_shape(Shape elem, Interval card) {
  card = card.clamp_card();
  if (card.is_empty()) return bottom();
  if (elem.is_bottom()) {
    card = card.meet(Interval(0, 0));
    if (card.is_empty()) return bottom();
  }
  if (card == Interval(0, 0)) elem = bottom();
  ShapeNode n;
  n.kind = ShapeKind::SetS;
  n.elem.push_back(std::move(elem));
  n.num = card;
  return Shape(make_node(std::move(n)));
}

Shape Shape::data(std::string adt, ChoiceMap choices) {
  for (auto it = choices.begin(); it != choices.end();) {
    bool dead = false;
    for (const Shape& a : it->second)
      if (a.is_bottom()) dead = true;
    it = dead ? choices.erase(it) : std::next(it);
  }
  if (choices.empty()) return bottom();
  ShapeNode n;
  n.kind = ShapeKind::DataS;
  n.name = std::move(adt);
  n.choices = std::move(choices);
  return Shape(make_node(std::move(n)));
}

Shape Shape::single(std::string adt, std::string ctor, std::vector<Shape> args) {
  ChoiceMap m;
  m.emplace(std::move(ctor), std::move(args));
  return data(std::move(adt), std::move(m));
}

Shape Shape::ref(std::string nonterminal) {
  ShapeNode n;
  n.kind = ShapeKind::Ref;
  n.name = std::move(nonterminal);
  return Shape(make_node(std::move(n)));
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

const Shape& Grammar::production(const std::string& name) const {
  auto it = prods_.find(name);
  if (it == prods_.end())
    throw StaticError("unknown nonterminal '" + name + "'");
  return it->second;
}

void Grammar::define(const std::string& name, Shape body) {
  prods_[name] = std::move(body);
}

std::string Grammar::fresh(const std::string& hint) {
  return hint + "$" + std::to_string(counter_++);
}

Shape Grammar::resolve(const Shape& s) const {
  if (s.kind() != ShapeKind::Ref) return s;
  return production(s.ref_name());
}

Shape Grammar::full_type(const TypeExpr& t) {
  switch (t.kind()) {
    case TypeKind::Void: return Shape::bottom();
    case TypeKind::Value: return Shape::top();
    case TypeKind::Int: return Shape::int_shape(Interval::full());
    case TypeKind::Str: return Shape::str_shape(StrShape::top_shape());
    case TypeKind::Set: return Shape::set_shape(full_type(t.elem()), card_full());
    case TypeKind::Adt: {
      const std::string& name = t.name();
      if (!has(name)) {
        const DataDecl* d = prog_ ? prog_->find_data(name) : nullptr;
        if (!d) throw StaticError("unknown data type '" + name + "'");
        define(name, Shape::bottom());  // placeholder guards recursion
        ChoiceMap m;
        for (const ConstructorDecl& c : d->constructors) {
          std::vector<Shape> args;
          for (const Param& p : c.params) args.push_back(full_type(p.type));
          m.emplace(c.name, std::move(args));
        }
        define(name, Shape::data(name, std::move(m)));
      }
      return Shape::ref(name);
    }
  }
  return Shape::bottom();
}

std::optional<std::string> Grammar::interned(const std::string& key) const {
  auto it = intern_.find(key);
  if (it == intern_.end()) return std::nullopt;
  auto p = prods_.find(it->second);
  if (p == prods_.end() || p->second.key() != key) return std::nullopt;
  return it->second;
}

void Grammar::remember(const std::string& key, const std::string& name) {
  intern_[key] = name;
}

// ---------------------------------------------------------------------------
// Emptiness
// ---------------------------------------------------------------------------

namespace {

void reachable_refs(const Shape& s, const Grammar& g, std::set<std::string>& out) {
  switch (s.kind()) {
    case ShapeKind::Ref:
      if (out.insert(s.ref_name()).second)
        reachable_refs(g.production(s.ref_name()), g, out);
      return;
    case ShapeKind::SetS:
      reachable_refs(s.elem(), g, out);
      return;
    case ShapeKind::DataS:
      for (const auto& [c, args] : s.choices())
        for (const Shape& a : args) reachable_refs(a, g, out);
      return;
    default:
      return;
  }
}

struct Productivity {
  std::map<std::string, bool> nt;

  bool productive(const Shape& s) const {
    switch (s.kind()) {
      case ShapeKind::Bottom: return false;
      case ShapeKind::Top: return true;
      case ShapeKind::IntS: return !s.num().is_empty();
      case ShapeKind::StrS: return true;
      case ShapeKind::SetS: {
        if (s.card().is_empty()) return false;
        if (s.card().contains(0)) return true;
        return productive(s.elem());
      }
      case ShapeKind::DataS: {
        for (const auto& [c, args] : s.choices()) {
          bool all = true;
          for (const Shape& a : args)
            if (!productive(a)) all = false;
          if (all) return true;
        }
        return false;
      }
      case ShapeKind::Ref: {
        auto it = nt.find(s.ref_name());
        return it != nt.end() && it->second;
      }
    }
    return false;
  }
};

Productivity compute_productivity(const Shape& s, const Grammar& g) {
  std::set<std::string> names;
  reachable_refs(s, g, names);
  Productivity p;
  for (const std::string& n : names) p.nt[n] = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const std::string& n : names) {
      if (!p.nt[n] && p.productive(g.production(n))) {
        p.nt[n] = true;
        changed = true;
      }
    }
  }
  return p;
}

}  // namespace

bool shape_is_empty(const Shape& s, const Grammar& g) {
  return !compute_productivity(s, g).productive(s);
}

Shape shape_normalize(const Shape& s, Grammar& g) {
  Productivity p = compute_productivity(s, g);
  std::set<std::string> cleaned;
  std::function<Shape(const Shape&)> clean = [&](const Shape& x) -> Shape {
    switch (x.kind()) {
      case ShapeKind::Bottom:
      case ShapeKind::Top:
      case ShapeKind::StrS:
        return x;
      case ShapeKind::IntS:
        return Shape::int_shape(x.num());
      case ShapeKind::SetS: {
        Shape e = p.productive(x.elem()) ? clean(x.elem()) : Shape::bottom();
        return Shape::set_shape(e, x.card());
      }
      case ShapeKind::DataS: {
        ChoiceMap m;
        for (const auto& [c, args] : x.choices()) {
          bool all = true;
          for (const Shape& a : args)
            if (!p.productive(a)) all = false;
          if (!all) continue;
          std::vector<Shape> cargs;
          for (const Shape& a : args) cargs.push_back(clean(a));
          m.emplace(c, std::move(cargs));
        }
        return Shape::data(x.adt(), std::move(m));
      }
      case ShapeKind::Ref: {
        auto it = p.nt.find(x.ref_name());
        if (it == p.nt.end() || !it->second) return Shape::bottom();
        if (cleaned.insert(x.ref_name()).second)
          g.define(x.ref_name(), clean(g.production(x.ref_name())));
        return x;
      }
    }
    return x;
  };
  return clean(s);
}

// ---------------------------------------------------------------------------
// Inclusion
// ---------------------------------------------------------------------------

namespace {

struct LeqCtx {
  const Grammar& g;
  std::set<std::pair<std::string, std::string>> assumed;

  bool rec(const Shape& a, const Shape& b) {
    if (a.key() == b.key()) return true;
    if (a.is_bottom()) return true;
    if (b.is_top()) return true;
    if (a.is_top()) return false;
    if (b.is_bottom()) return shape_is_empty(a, g);
    if (a.kind() == ShapeKind::Ref || b.kind() == ShapeKind::Ref) {
      auto pr = std::make_pair(a.key(), b.key());
      if (!assumed.insert(pr).second) return true;
      return resolved(g.resolve(a), g.resolve(b));
    }
    return resolved(a, b);
  }

  bool resolved(const Shape& a, const Shape& b) {
    if (a.is_bottom()) return true;
    if (b.is_top()) return true;
    if (a.is_top()) return false;
    if (b.is_bottom()) return shape_is_empty(a, g);
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case ShapeKind::IntS:
        return a.num().leq(b.num());
      case ShapeKind::StrS:
        if (b.str().top) return true;
        if (a.str().top) return false;
        return std::includes(b.str().consts.begin(), b.str().consts.end(),
                             a.str().consts.begin(), a.str().consts.end());
      case ShapeKind::SetS:
        return a.card().leq(b.card()) && rec(a.elem(), b.elem());
      case ShapeKind::DataS: {
        if (a.adt() != b.adt()) return false;
        for (const auto& [c, args] : a.choices()) {
          auto it = b.choices().find(c);
          if (it == b.choices().end()) return false;
          for (size_t i = 0; i < args.size(); ++i)
            if (!rec(args[i], it->second[i])) return false;
        }
        return true;
      }
      default:
        return false;
    }
  }
};

}  // namespace

bool shape_leq(const Shape& a, const Shape& b, const Grammar& g) {
  LeqCtx ctx{g, {}};
  return ctx.rec(a, b);
}

// ---------------------------------------------------------------------------
// Join / meet / widen
// ---------------------------------------------------------------------------

namespace {

enum class Combine { Join, Meet, Widen };

struct CombineCtx {
  Grammar& g;
  Combine op;
  std::map<std::pair<std::string, std::string>, std::string> memo;

  Shape rec(const Shape& a, const Shape& b) {
    if (a.key() == b.key()) return a;
    switch (op) {
      case Combine::Join:
      case Combine::Widen:
        if (a.is_bottom()) return b;
        if (b.is_bottom()) return a;
        if (a.is_top() || b.is_top()) return Shape::top();
        break;
      case Combine::Meet:
        if (a.is_bottom() || b.is_bottom()) return Shape::bottom();
        if (a.is_top()) return b;
        if (b.is_top()) return a;
        break;
    }
    if (a.kind() == ShapeKind::Ref || b.kind() == ShapeKind::Ref) {
      // Cheap canonicalization: comparable operands need no new nonterminal.
      if (op == Combine::Join) {
        if (shape_leq(a, b, g)) return b;
        if (shape_leq(b, a, g)) return a;
      } else if (op == Combine::Meet) {
        if (shape_leq(a, b, g)) return a;
        if (shape_leq(b, a, g)) return b;
      } else {
        if (shape_leq(b, a, g)) return a;
      }
      auto key = std::make_pair(a.key(), b.key());
      if (op != Combine::Widen && key.first > key.second)
        std::swap(key.first, key.second);  // join/meet are commutative
      auto it = memo.find(key);
      if (it != memo.end()) return Shape::ref(it->second);
      Shape ra = g.resolve(a), rb = g.resolve(b);
      std::string hint = ra.kind() == ShapeKind::DataS ? ra.adt()
                        : rb.kind() == ShapeKind::DataS ? rb.adt()
                                                        : "N";
      std::string name = g.fresh(hint);
      memo.emplace(key, name);
      g.define(name, Shape::bottom());
      Shape body = resolved(ra, rb);
      g.define(name, body);
      return Shape::ref(name);
    }
    return resolved(a, b);
  }

  Shape resolved(const Shape& a, const Shape& b) {
    if (a.is_bottom() || b.is_bottom() || a.is_top() || b.is_top() ||
        a.key() == b.key()) {
      // Re-run the boundary rules after resolution.
      switch (op) {
        case Combine::Join:
        case Combine::Widen:
          if (a.is_bottom()) return b;
          if (b.is_bottom()) return a;
          if (a.is_top() || b.is_top()) return Shape::top();
          break;
        case Combine::Meet:
          if (a.is_bottom() || b.is_bottom()) return Shape::bottom();
          if (a.is_top()) return b;
          if (b.is_top()) return a;
          break;
      }
      return a;
    }
    if (a.kind() != b.kind()) {
      // Mixed kinds: coalesced sum gives top for join, bottom for meet.
      return op == Combine::Meet ? Shape::bottom() : Shape::top();
    }
    switch (a.kind()) {
      case ShapeKind::IntS: {
        Interval iv = op == Combine::Join   ? a.num().join(b.num())
                      : op == Combine::Meet ? a.num().meet(b.num())
                                            : a.num().widen(b.num());
        return Shape::int_shape(iv);
      }
      case ShapeKind::StrS: {
        const StrShape &x = a.str(), &y = b.str();
        if (op == Combine::Meet) {
          if (x.top) return b;
          if (y.top) return a;
          std::set<std::string> inter;
          std::set_intersection(x.consts.begin(), x.consts.end(), y.consts.begin(),
                                y.consts.end(), std::inserter(inter, inter.begin()));
          return Shape::str_shape(StrShape::of(std::move(inter)));
        }
        if (x.top || y.top) return Shape::str_shape(StrShape::top_shape());
        std::set<std::string> uni = x.consts;
        uni.insert(y.consts.begin(), y.consts.end());
        if (uni.size() > kStrConstBound) return Shape::str_shape(StrShape::top_shape());
        return Shape::str_shape(StrShape::of(std::move(uni)));
      }
      case ShapeKind::SetS: {
        Shape e = rec(a.elem(), b.elem());
        Interval c = op == Combine::Join   ? a.card().join(b.card())
                     : op == Combine::Meet ? a.card().meet(b.card())
                                           : card_widen(a.card(), b.card());
        return Shape::set_shape(e, c);
      }
      case ShapeKind::DataS: {
        if (a.adt() != b.adt())
          return op == Combine::Meet ? Shape::bottom() : Shape::top();
        ChoiceMap m;
        if (op == Combine::Meet) {
          for (const auto& [c, args] : a.choices()) {
            auto it = b.choices().find(c);
            if (it == b.choices().end()) continue;
            std::vector<Shape> rs;
            for (size_t i = 0; i < args.size(); ++i)
              rs.push_back(rec(args[i], it->second[i]));
            m.emplace(c, std::move(rs));
          }
        } else {
          for (const auto& [c, args] : a.choices()) {
            auto it = b.choices().find(c);
            if (it == b.choices().end()) {
              m.emplace(c, args);
              continue;
            }
            std::vector<Shape> rs;
            for (size_t i = 0; i < args.size(); ++i)
              rs.push_back(rec(args[i], it->second[i]));
            m.emplace(c, std::move(rs));
          }
          for (const auto& [c, args] : b.choices())
            if (!a.choices().count(c)) m.emplace(c, args);
        }
        return Shape::data(a.adt(), std::move(m));
      }
      default:
        return a;
    }
  }
};

}  // namespace

Shape shape_join(const Shape& a, const Shape& b, Grammar& g) {
  if (shape_leq(a, b, g)) return b;
  if (shape_leq(b, a, g)) return a;
  CombineCtx ctx{g, Combine::Join, {}};
  return ctx.rec(a, b);
}

Shape shape_meet(const Shape& a, const Shape& b, Grammar& g) {
  if (shape_leq(a, b, g)) return a;
  if (shape_leq(b, a, g)) return b;
  CombineCtx ctx{g, Combine::Meet, {}};
  return shape_normalize(ctx.rec(a, b), g);
}

// ---------------------------------------------------------------------------
// Widening
// ---------------------------------------------------------------------------

namespace {

// Signature used by the fold rule: constructor alternatives for data shapes,
// a coarse element kind for sets.
std::string fold_signature(const Shape& body, const Grammar& g) {
  if (body.kind() == ShapeKind::DataS) {
    std::string s = "D:" + body.adt() + ":";
    for (const auto& [c, args] : body.choices()) s += c + ",";
    return s;
  }
  if (body.kind() == ShapeKind::SetS) {
    Shape e = g.resolve(body.elem());
    std::string k;
    switch (e.kind()) {
      case ShapeKind::DataS: k = "d" + e.adt(); break;
      case ShapeKind::SetS: k = "s"; break;
      case ShapeKind::IntS: k = "i"; break;
      case ShapeKind::StrS: k = "t"; break;
      case ShapeKind::Top: k = "T"; break;
      default: k = "b"; break;
    }
    return "S:" + k;
  }
  return "";
}

// Gives every data/set node a nonterminal so folding can rewire the graph.
struct Namer {
  Grammar& g;
  std::set<std::string> visited;

  Shape lift(const Shape& s) {
    switch (s.kind()) {
      case ShapeKind::DataS:
      case ShapeKind::SetS: {
        Shape body = lift_body(s);
        if (auto n = g.interned(body.key())) return Shape::ref(*n);
        std::string hint = s.kind() == ShapeKind::DataS ? s.adt() : "Set";
        std::string name = g.fresh(hint);
        g.define(name, body);
        g.remember(body.key(), name);
        return Shape::ref(name);
      }
      case ShapeKind::Ref: {
        if (visited.insert(s.ref_name()).second)
          g.define(s.ref_name(), lift_body(g.production(s.ref_name())));
        return s;
      }
      default:
        return s;
    }
  }

  Shape lift_body(const Shape& s) {
    switch (s.kind()) {
      case ShapeKind::DataS: {
        ChoiceMap m;
        for (const auto& [c, args] : s.choices()) {
          std::vector<Shape> ls;
          for (const Shape& a : args) ls.push_back(lift(a));
          m.emplace(c, std::move(ls));
        }
        return Shape::data(s.adt(), std::move(m));
      }
      case ShapeKind::SetS:
        return Shape::set_shape(lift(s.elem()), s.card());
      case ShapeKind::Ref:
        lift(s);
        return s;
      default:
        return s;
    }
  }
};

void immediate_refs(const Shape& body, std::vector<std::string>& out) {
  switch (body.kind()) {
    case ShapeKind::Ref:
      out.push_back(body.ref_name());
      return;
    case ShapeKind::SetS:
      immediate_refs(body.elem(), out);
      return;
    case ShapeKind::DataS:
      for (const auto& [c, args] : body.choices())
        for (const Shape& a : args) immediate_refs(a, out);
      return;
    default:
      return;
  }
}

Shape substitute_ref(const Shape& s, const std::string& from, const std::string& to) {
  switch (s.kind()) {
    case ShapeKind::Ref:
      return s.ref_name() == from ? Shape::ref(to) : s;
    case ShapeKind::SetS:
      return Shape::set_shape(substitute_ref(s.elem(), from, to), s.card());
    case ShapeKind::DataS: {
      ChoiceMap m;
      for (const auto& [c, args] : s.choices()) {
        std::vector<Shape> rs;
        for (const Shape& a : args) rs.push_back(substitute_ref(a, from, to));
        m.emplace(c, std::move(rs));
      }
      return Shape::data(s.adt(), std::move(m));
    }
    default:
      return s;
  }
}

struct FoldHit {
  std::string ancestor, node;
};

std::optional<FoldHit> find_fold(const Shape& root, const Grammar& g) {
  if (root.kind() != ShapeKind::Ref) return std::nullopt;
  std::vector<std::pair<std::string, std::string>> path;  // (name, sig)
  std::optional<FoldHit> hit;
  std::function<bool(const std::string&)> visit = [&](const std::string& name) {
    for (const auto& [n, sig] : path)
      if (n == name) return false;  // cycle: stop
    std::string sig = fold_signature(g.production(name), g);
    if (!sig.empty() && static_cast<int>(path.size()) + 1 > kFoldDepth) {
      for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if (it->second == sig && it->first != name) {
          hit = FoldHit{it->first, name};
          return true;
        }
      }
    }
    path.emplace_back(name, sig);
    std::vector<std::string> kids;
    immediate_refs(g.production(name), kids);
    for (const std::string& c : kids)
      if (visit(c)) return true;
    path.pop_back();
    return false;
  };
  visit(root.ref_name());
  return hit;
}

}  // namespace

Shape shape_widen(const Shape& a, const Shape& b, Grammar& g) {
  if (shape_leq(b, a, g)) return a;
  CombineCtx ctx{g, Combine::Widen, {}};
  Shape w = ctx.rec(a, b);
  Namer namer{g, {}};
  Shape named = namer.lift(w);
  for (int guard = 0; guard < 256; ++guard) {
    std::optional<FoldHit> hit = find_fold(named, g);
    if (!hit) break;
    // Merge the deep node into its ancestor: rewire, then join productions.
    std::vector<std::string> names;
    for (const auto& [n, body] : g.productions()) {
      (void)body;
      names.push_back(n);
    }
    for (const std::string& n : names)
      g.define(n, substitute_ref(g.production(n), hit->node, hit->ancestor));
    if (named.kind() == ShapeKind::Ref && named.ref_name() == hit->node)
      named = Shape::ref(hit->ancestor);
    Shape merged =
        shape_join(g.production(hit->ancestor), g.production(hit->node), g);
    g.define(hit->ancestor, g.resolve(merged));
    Namer renamer{g, {}};
    named = renamer.lift(named);
  }
  return shape_normalize(named, g);
}

// ---------------------------------------------------------------------------
// Types of shapes
// ---------------------------------------------------------------------------

TypeExpr shape_type(const Shape& s, const Grammar& g) {
  std::set<std::string> visiting;
  std::function<TypeExpr(const Shape&)> go = [&](const Shape& x) -> TypeExpr {
    switch (x.kind()) {
      case ShapeKind::Bottom: return TypeExpr::void_type();
      case ShapeKind::Top: return TypeExpr::value_type();
      case ShapeKind::IntS: return TypeExpr::int_type();
      case ShapeKind::StrS: return TypeExpr::str_type();
      case ShapeKind::SetS: return TypeExpr::set_type(go(x.elem()));
      case ShapeKind::DataS: return TypeExpr::adt(x.adt());
      case ShapeKind::Ref:
        if (!visiting.insert(x.ref_name()).second) return TypeExpr::value_type();
        return go(g.resolve(x));
    }
    return TypeExpr::value_type();
  };
  return go(s);
}

// ---------------------------------------------------------------------------
// Refinement operators
// ---------------------------------------------------------------------------

Shape exclude(const Shape& s, const std::string& ctor, Grammar& g) {
  Shape r = g.resolve(s);
  if (r.kind() != ShapeKind::DataS) return s;
  if (!r.choices().count(ctor)) return s;
  ChoiceMap m = r.choices();
  m.erase(ctor);
  return Shape::data(r.adt(), std::move(m));
}

std::optional<Shape> abstract_eq(const Shape& a, const Shape& b, Grammar& g) {
  Shape m = shape_meet(a, b, g);
  if (shape_is_empty(m, g)) return std::nullopt;
  return m;
}

std::vector<std::pair<Shape, Shape>> abstract_neq(const Shape& a, const Shape& b,
                                                  Grammar& g) {
  Shape m = shape_meet(a, b, g);
  std::vector<std::pair<Shape, Shape>> out;
  Shape ca = rel_complement(a, m, g);
  if (!shape_is_empty(ca, g)) out.emplace_back(ca, b);
  Shape cb = rel_complement(b, m, g);
  if (!shape_is_empty(cb, g)) out.emplace_back(a, cb);
  return out;
}

namespace {

struct ComplementCtx {
  Grammar& g;
  std::map<std::pair<std::string, std::string>, std::string> memo;

  Shape rec(const Shape& a, const Shape& b) {
    if (shape_leq(a, b, g)) return Shape::bottom();
    if (b.is_bottom()) return a;
    if (a.kind() == ShapeKind::Ref || b.kind() == ShapeKind::Ref) {
      auto key = std::make_pair(a.key(), b.key());
      auto it = memo.find(key);
      if (it != memo.end()) return Shape::ref(it->second);
      Shape ra = g.resolve(a), rb = g.resolve(b);
      std::string name = g.fresh(ra.kind() == ShapeKind::DataS ? ra.adt() : "C");
      memo.emplace(key, name);
      g.define(name, Shape::bottom());
      g.define(name, resolved(ra, rb));
      return Shape::ref(name);
    }
    return resolved(a, b);
  }

  Shape resolved(const Shape& a, const Shape& b) {
    if (b.is_top()) return Shape::bottom();
    if (a.kind() != b.kind()) return a;  // disjoint kinds: exact identity
    switch (a.kind()) {
      case ShapeKind::IntS:
        return Shape::int_shape(a.num().complement(b.num()));
      case ShapeKind::StrS: {
        if (a.str().top) return a;
        if (b.str().top) return Shape::bottom();
        std::set<std::string> diff;
        std::set_difference(a.str().consts.begin(), a.str().consts.end(),
                            b.str().consts.begin(), b.str().consts.end(),
                            std::inserter(diff, diff.begin()));
        return Shape::str_shape(StrShape::of(std::move(diff)));
      }
      case ShapeKind::SetS: {
        if (shape_leq(a.elem(), b.elem(), g))
          return Shape::set_shape(a.elem(), a.card().complement(b.card()));
        return a;
      }
      case ShapeKind::DataS: {
        if (a.adt() != b.adt()) return a;
        ChoiceMap m;
        for (const auto& [c, args] : a.choices()) {
          auto it = b.choices().find(c);
          if (it == b.choices().end()) {
            m.emplace(c, args);
            continue;
          }
          // A tuple escapes b iff some coordinate escapes; representable
          // exactly only when a single coordinate is not covered.
          std::vector<size_t> open;
          for (size_t i = 0; i < args.size(); ++i)
            if (!shape_leq(args[i], it->second[i], g)) open.push_back(i);
          if (open.empty()) continue;  // fully covered: drop constructor
          if (open.size() == 1) {
            std::vector<Shape> rs = args;
            rs[open[0]] = rec(args[open[0]], it->second[open[0]]);
            if (std::none_of(rs.begin(), rs.end(),
                             [&](const Shape& x) { return shape_is_empty(x, g); }))
              m.emplace(c, std::move(rs));
            continue;
          }
          m.emplace(c, args);  // multiple open coordinates: keep unrefined
        }
        return Shape::data(a.adt(), std::move(m));
      }
      default:
        return a;
    }
  }
};

}  // namespace

Shape rel_complement(const Shape& a, const Shape& b, Grammar& g) {
  ComplementCtx ctx{g, {}};
  return shape_normalize(ctx.rec(a, b), g);
}

// ---------------------------------------------------------------------------
// unfold / children / reconstruct
// ---------------------------------------------------------------------------

Unfolding unfold(const Shape& s, const TypeExpr& t, Grammar& g) {
  Unfolding out;
  Shape r = g.resolve(s);
  if (r.is_bottom()) return out;
  switch (t.kind()) {
    case TypeKind::Adt: {
      if (r.kind() == ShapeKind::DataS) {
        if (r.adt() == t.name()) {
          for (const auto& [c, args] : r.choices())
            out.successes.push_back(Shape::single(r.adt(), c, args));
        } else {
          out.error = true;
        }
      } else if (r.is_top()) {
        const DataDecl* d = g.program()->find_data(t.name());
        for (const ConstructorDecl& c : d->constructors) {
          std::vector<Shape> args;
          for (const Param& p : c.params) args.push_back(g.full_type(p.type));
          out.successes.push_back(Shape::single(t.name(), c.name, std::move(args)));
        }
        out.error = true;
      } else {
        out.error = true;
      }
      return out;
    }
    case TypeKind::Set: {
      if (r.kind() == ShapeKind::SetS) {
        out.successes.push_back(r);
        TypeExpr et = shape_type(r.elem(), g);
        if (abstract_subtype(et, t.elem())) {
          if (!subtype(et, t.elem())) out.error = true;
        } else if (!r.elem().is_bottom()) {
          out.successes.clear();
          out.error = true;
        }
      } else if (r.is_top()) {
        out.successes.push_back(Shape::set_shape(Shape::top(), card_full()));
        out.error = true;
      } else {
        out.error = true;
      }
      return out;
    }
    case TypeKind::Int: {
      if (r.kind() == ShapeKind::IntS) {
        out.successes.push_back(r);
      } else if (r.is_top()) {
        out.successes.push_back(Shape::int_shape(Interval::full()));
        out.error = true;
      } else {
        out.error = true;
      }
      return out;
    }
    case TypeKind::Str: {
      if (r.kind() == ShapeKind::StrS) {
        out.successes.push_back(r);
      } else if (r.is_top()) {
        out.successes.push_back(Shape::str_shape(StrShape::top_shape()));
        out.error = true;
      } else {
        out.error = true;
      }
      return out;
    }
    case TypeKind::Value:
      out.successes.push_back(r);
      return out;
    case TypeKind::Void:
      out.error = true;
      return out;
  }
  return out;
}

std::vector<ChildrenEntry> children(const Shape& s, Grammar& g) {
  std::vector<ChildrenEntry> out;
  Shape r = g.resolve(s);
  switch (r.kind()) {
    case ShapeKind::Bottom:
      return out;
    case ShapeKind::DataS: {
      for (const auto& [c, args] : r.choices()) {
        ChildrenEntry e;
        e.refined = Shape::single(r.adt(), c, args);
        e.seq = args;
        out.push_back(std::move(e));
      }
      return out;
    }
    case ShapeKind::SetS: {
      ChildrenEntry e;
      e.refined = r;
      e.is_set = true;
      e.elem = r.elem();
      e.card = r.card();
      out.push_back(std::move(e));
      return out;
    }
    case ShapeKind::IntS:
    case ShapeKind::StrS: {
      ChildrenEntry e;
      e.refined = r;
      out.push_back(std::move(e));
      return out;
    }
    case ShapeKind::Top: {
      ChildrenEntry st;
      st.refined = Shape::set_shape(Shape::top(), card_full());
      st.is_set = true;
      st.elem = Shape::top();
      st.card = card_full();
      out.push_back(std::move(st));
      if (g.program()) {
        for (const DataDecl& d : g.program()->datadecls) {
          for (const ConstructorDecl& c : d.constructors) {
            ChildrenEntry e;
            std::vector<Shape> args;
            for (const Param& p : c.params) args.push_back(g.full_type(p.type));
            e.seq = args;
            e.refined = Shape::single(d.name, c.name, std::move(args));
            out.push_back(std::move(e));
          }
        }
      }
      ChildrenEntry iv;
      iv.refined = Shape::int_shape(Interval::full());
      out.push_back(std::move(iv));
      ChildrenEntry sv;
      sv.refined = Shape::str_shape(StrShape::top_shape());
      out.push_back(std::move(sv));
      return out;
    }
    case ShapeKind::Ref:
      return out;  // unreachable: resolved above
  }
  return out;
}

Reconstructed reconstruct(const Shape& refined, const std::vector<Shape>& kids,
                          Grammar& g) {
  Reconstructed out;
  Shape r = g.resolve(refined);
  if (r.kind() != ShapeKind::DataS) {
    // Leaf reconstruction: no children, the value is unchanged.
    if (kids.empty()) {
      out.successes.push_back(refined);
      return out;
    }
    out.error = true;
    return out;
  }
  if (r.choices().size() != 1) {
    out.error = true;
    return out;
  }
  const auto& [ctor, old_args] = *r.choices().begin();
  (void)old_args;
  for (const Shape& k : kids)
    if (shape_is_empty(k, g)) return out;  // bottom child: nothing to rebuild
  const ConstructorDecl* decl = g.program()->find_ctor(ctor);
  bool ok = true;
  for (size_t i = 0; i < kids.size(); ++i) {
    TypeExpr kt = shape_type(kids[i], g);
    if (!abstract_subtype(kt, decl->params[i].type)) ok = false;
    if (!subtype(kt, decl->params[i].type)) out.error = true;
  }
  if (ok) out.successes.push_back(Shape::single(r.adt(), ctor, kids));
  return out;
}

Reconstructed reconstruct_set(const Shape& refined, const Shape& elem,
                              const Interval& card, Grammar& g) {
  (void)refined;
  Reconstructed out;
  Shape s = Shape::set_shape(elem, card);
  if (!shape_is_empty(s, g)) out.successes.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Concretization and membership
// ---------------------------------------------------------------------------

namespace {

constexpr int64_t kIntWindow = 4;

std::vector<int64_t> int_points(const Interval& iv) {
  std::vector<int64_t> out;
  if (iv.is_empty()) return out;
  int64_t lo = iv.lo_inf() ? -kIntWindow : iv.lo();
  int64_t hi = iv.hi_inf() ? kIntWindow : iv.hi();
  if (hi - lo > 64) {  // clamp large finite ranges to a window plus endpoints
    out.push_back(lo);
    int64_t wlo = std::max(lo, -kIntWindow), whi = std::min(hi, kIntWindow);
    for (int64_t v = wlo; v <= whi; ++v) out.push_back(v);
    out.push_back(hi);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  for (int64_t v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

void subsets_up_to(const std::vector<Value>& elems, size_t maxk,
                   const Interval& card, std::set<Value>& out) {
  std::vector<size_t> idx;
  std::function<void(size_t)> go = [&](size_t start) {
    if (card.contains(static_cast<int64_t>(idx.size()))) {
      std::vector<Value> chosen;
      for (size_t i : idx) chosen.push_back(elems[i]);
      out.insert(Value::set(std::move(chosen)));
    }
    if (idx.size() == maxk) return;
    for (size_t i = start; i < elems.size(); ++i) {
      idx.push_back(i);
      go(i + 1);
      idx.pop_back();
    }
  };
  go(0);
}

}  // namespace

std::set<Value> concretize_bounded(const Shape& s, Grammar& g, int depth,
                                   int width) {
  std::set<Value> out;
  if (depth <= 0) return out;
  Shape r = g.resolve(s);
  switch (r.kind()) {
    case ShapeKind::Bottom:
      return out;
    case ShapeKind::IntS: {
      for (int64_t v : int_points(r.num())) out.insert(Value::int_v(v));
      return out;
    }
    case ShapeKind::StrS: {
      if (r.str().top) {
        out.insert(Value::str_v("s0"));
        out.insert(Value::str_v("s1"));
      } else {
        for (const std::string& c : r.str().consts) out.insert(Value::str_v(c));
      }
      return out;
    }
    case ShapeKind::SetS: {
      std::set<Value> elems = concretize_bounded(r.elem(), g, depth - 1, width);
      std::vector<Value> ev(elems.begin(), elems.end());
      subsets_up_to(ev, static_cast<size_t>(width), r.card(), out);
      return out;
    }
    case ShapeKind::DataS: {
      for (const auto& [c, args] : r.choices()) {
        std::vector<std::set<Value>> domains;
        bool any_empty = false;
        for (const Shape& a : args) {
          domains.push_back(concretize_bounded(a, g, depth - 1, width));
          if (domains.back().empty()) any_empty = true;
        }
        if (any_empty && !args.empty()) continue;
        std::vector<Value> tuple;
        std::function<void(size_t)> go = [&](size_t i) {
          if (i == domains.size()) {
            out.insert(Value::cons(c, tuple));
            return;
          }
          for (const Value& v : domains[i]) {
            tuple.push_back(v);
            go(i + 1);
            tuple.pop_back();
          }
        };
        go(0);
      }
      return out;
    }
    case ShapeKind::Top: {
      for (int64_t v : int_points(Interval::full())) out.insert(Value::int_v(v));
      out.insert(Value::str_v("s0"));
      out.insert(Value::str_v("s1"));
      if (g.program()) {
        for (const DataDecl& d : g.program()->datadecls) {
          std::set<Value> vs =
              concretize_bounded(g.full_type(TypeExpr::adt(d.name)), g, depth, width);
          out.insert(vs.begin(), vs.end());
        }
      }
      std::set<Value> elems = concretize_bounded(Shape::top(), g, depth - 1, width);
      std::vector<Value> ev(elems.begin(), elems.end());
      subsets_up_to(ev, static_cast<size_t>(width), card_full(), out);
      return out;
    }
    case ShapeKind::Ref:
      return out;  // unreachable
  }
  return out;
}

bool shape_contains(const Shape& s, const Value& v, const Grammar& g) {
  Shape r = g.resolve(s);
  switch (r.kind()) {
    case ShapeKind::Bottom:
      return false;
    case ShapeKind::Top:
      return true;
    case ShapeKind::IntS:
      return v.kind == ValueKind::Int && r.num().contains(v.i);
    case ShapeKind::StrS:
      return v.kind == ValueKind::Str && (r.str().top || r.str().consts.count(v.s));
    case ShapeKind::SetS: {
      if (v.kind != ValueKind::Set) return false;
      if (!r.card().contains(static_cast<int64_t>(v.children.size()))) return false;
      for (const Value& c : v.children)
        if (!shape_contains(r.elem(), c, g)) return false;
      return true;
    }
    case ShapeKind::DataS: {
      if (v.kind != ValueKind::Cons) return false;
      auto it = r.choices().find(v.s);
      if (it == r.choices().end()) return false;
      for (size_t i = 0; i < v.children.size(); ++i)
        if (!shape_contains(it->second[i], v.children[i], g)) return false;
      return true;
    }
    case ShapeKind::Ref:
      return false;  // unreachable
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lowering parsed terms
// ---------------------------------------------------------------------------

Shape shape_from_term(const ShapeTerm& term, Grammar& g,
                      const std::map<std::string, Shape>& nonterminals) {
  switch (term.kind) {
    case ShapeTerm::Kind::IntT:
      return Shape::int_shape(term.interval);
    case ShapeTerm::Kind::StrT: {
      if (term.strings.empty()) return Shape::str_shape(StrShape::top_shape());
      std::set<std::string> cs(term.strings.begin(), term.strings.end());
      return Shape::str_shape(StrShape::of(std::move(cs)));
    }
    case ShapeTerm::Kind::Value:
      return Shape::top();
    case ShapeTerm::Kind::Void:
      return Shape::bottom();
    case ShapeTerm::Kind::SetT:
      return Shape::set_shape(shape_from_term(term.sub[0], g, nonterminals),
                              term.interval);
    case ShapeTerm::Kind::Name: {
      auto it = nonterminals.find(term.name);
      if (it != nonterminals.end()) return it->second;
      return g.full_type(TypeExpr::adt(term.name));
    }
    case ShapeTerm::Kind::ConsT: {
      const DataDecl* owner = nullptr;
      g.program()->find_ctor(term.name, &owner);
      std::vector<Shape> args;
      for (const ShapeTerm& t : term.sub)
        args.push_back(shape_from_term(t, g, nonterminals));
      return Shape::single(owner->name, term.name, std::move(args));
    }
  }
  return Shape::bottom();
}

std::map<std::string, Shape> add_refinements(Grammar& g,
                                             const std::vector<RefinementDecl>& decls) {
  std::map<std::string, Shape> byname;
  for (const RefinementDecl& d : decls) {
    g.define(d.name, Shape::bottom());
    byname.emplace(d.name, Shape::ref(d.name));
  }
  for (const RefinementDecl& d : decls) {
    ChoiceMap m;
    for (const auto& [ctor, terms] : d.alternatives) {
      std::vector<Shape> args;
      for (const ShapeTerm& t : terms) args.push_back(shape_from_term(t, g, byname));
      m.emplace(ctor, std::move(args));
    }
    g.define(d.name, Shape::data(d.base, std::move(m)));
  }
  return byname;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

struct Renderer {
  const Grammar& g;
  std::map<std::string, std::string> display;   // NT -> display name
  std::map<std::string, int> counters;          // base -> next suffix
  std::vector<std::string> queue;               // NTs needing refine lines
  std::set<std::string> queued;

  std::string base_of(const Shape& body) {
    if (body.kind() == ShapeKind::DataS) return body.adt();
    if (body.kind() == ShapeKind::SetS) return "Set";
    return "N";
  }

  std::string name_for(const std::string& nt) {
    auto it = display.find(nt);
    if (it != display.end()) return it->second;
    const Shape& body = g.production(nt);
    std::string base = base_of(body);
    // Nonterminals equivalent to the unrestricted type print as the type name.
    if (body.kind() == ShapeKind::DataS && g.has(body.adt()) &&
        shape_equiv(Shape::ref(nt), Shape::ref(body.adt()), g)) {
      display[nt] = body.adt();
      return body.adt();
    }
    std::string dn = base + std::to_string(++counters[base]);
    display[nt] = dn;
    if (queued.insert(nt).second) queue.push_back(nt);
    return dn;
  }

  std::string term(const Shape& s) {
    switch (s.kind()) {
      case ShapeKind::Bottom: return "void";
      case ShapeKind::Top: return "value";
      case ShapeKind::IntS:
        return s.num() == Interval::full() ? "int" : "int" + s.num().to_string();
      case ShapeKind::StrS: {
        if (s.str().top) return "str";
        std::string out = "str{";
        bool first = true;
        for (const std::string& c : s.str().consts) {
          if (!first) out += ", ";
          first = false;
          out += "\"" + c + "\"";
        }
        return out + "}";
      }
      case ShapeKind::SetS:
        return "{" + term(s.elem()) + "}" + s.card().to_string();
      case ShapeKind::DataS: {
        if (s.choices().size() == 1) {
          const auto& [c, args] = *s.choices().begin();
          return alt(c, args);
        }
        // Inline choice: parenthesized for display.
        std::string out = "(";
        bool first = true;
        for (const auto& [c, args] : s.choices()) {
          if (!first) out += " | ";
          first = false;
          out += alt(c, args);
        }
        return out + ")";
      }
      case ShapeKind::Ref:
        return name_for(s.ref_name());
    }
    return "?";
  }

  std::string alt(const std::string& ctor, const std::vector<Shape>& args) {
    std::string out = ctor + "(";
    for (size_t i = 0; i < args.size(); ++i) {
      if (i) out += ", ";
      out += term(args[i]);
    }
    return out + ")";
  }

  std::string lines() {
    std::string out;
    for (size_t i = 0; i < queue.size(); ++i) {  // queue grows while rendering
      const std::string& nt = queue[i];
      const Shape& body = g.production(nt);
      out += "refine " + display[nt] + " of " + base_of(body) + " = ";
      if (body.kind() == ShapeKind::DataS) {
        bool first = true;
        for (const auto& [c, args] : body.choices()) {
          if (!first) out += " | ";
          first = false;
          out += alt(c, args);
        }
      } else {
        out += term(body);
      }
      out += ";\n";
    }
    return out;
  }
};

}  // namespace

std::string render_grammar(const std::vector<std::pair<std::string, Shape>>& roots,
                           const Grammar& g) {
  Renderer r{g, {}, {}, {}, {}};
  std::string out;
  for (const auto& [label, s] : roots) {
    if (!label.empty()) out += label + ": ";
    out += r.term(s) + "\n";
  }
  std::string defs = r.lines();
  if (!defs.empty()) out += defs;
  return out;
}

std::string render_shape(const Shape& s, const Grammar& g) {
  return render_grammar({{"", s}}, g);
}

}  // namespace trl
