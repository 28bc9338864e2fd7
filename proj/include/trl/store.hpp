#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trl/shape.hpp"

namespace trl {

// Abstract store: variable -> (might be unassigned, value shape).
// Variables without an entry read as (maybe unassigned, top).
struct VarInfo {
  bool maybe_unassigned = true;
  Shape shape = Shape::top();
};

class AbstractStore {
 public:
  VarInfo get(const std::string& x) const {
    auto it = m_.find(x);
    return it == m_.end() ? VarInfo{} : it->second;
  }
  void set(const std::string& x, VarInfo v) { m_[x] = std::move(v); }
  void assign(const std::string& x, Shape s) { m_[x] = {false, std::move(s)}; }
  const std::map<std::string, VarInfo>& entries() const { return m_; }

  // A store is infeasible when some definitely-assigned variable has an
  // empty shape.
  bool is_bottom(const Grammar& g) const;

  std::string to_string(const Grammar& g) const;

 private:
  std::map<std::string, VarInfo> m_;
};

AbstractStore store_join(const AbstractStore& a, const AbstractStore& b, Grammar& g);
AbstractStore store_meet(const AbstractStore& a, const AbstractStore& b, Grammar& g);
AbstractStore store_widen(const AbstractStore& a, const AbstractStore& b, Grammar& g);
bool store_leq(const AbstractStore& a, const AbstractStore& b, const Grammar& g);
inline bool store_equiv(const AbstractStore& a, const AbstractStore& b,
                        const Grammar& g) {
  return store_leq(a, b, g) && store_leq(b, a, g);
}

// ---------------------------------------------------------------------------
// Result sets: res type -> (optional value shape, store)
// ---------------------------------------------------------------------------

struct ResultEntry {
  std::optional<Shape> value;  // absent encodes the valueless result
  AbstractStore store;
};

class ResultSet {
 public:
  bool has(ResType t) const { return m_.count(t) > 0; }
  const ResultEntry& at(ResType t) const { return m_.at(t); }
  bool empty() const { return m_.empty(); }
  const std::map<ResType, ResultEntry>& entries() const { return m_; }

  // Adds one entry, joining with an existing entry of the same type.
  // Bottom-shaped successes and infeasible stores are dropped.
  void add(ResType t, std::optional<Shape> value, AbstractStore store, Grammar& g);
  void join_with(const ResultSet& o, Grammar& g);
  void erase(ResType t) { m_.erase(t); }

  std::string to_string(const Grammar& g) const;

 private:
  std::map<ResType, ResultEntry> m_;
};

ResultSet resultset_join(const ResultSet& a, const ResultSet& b, Grammar& g);
ResultSet resultset_widen(const ResultSet& a, const ResultSet& b, Grammar& g);
bool resultset_leq(const ResultSet& a, const ResultSet& b, const Grammar& g);
inline bool resultset_equiv(const ResultSet& a, const ResultSet& b,
                            const Grammar& g) {
  return resultset_leq(a, b, g) && resultset_leq(b, a, g);
}

// ---------------------------------------------------------------------------
// Binding outcomes from abstract matching
// ---------------------------------------------------------------------------

using AbstractBindings = std::map<std::string, Shape>;

struct BindingOutcome {
  AbstractStore store;  // refined store
  Shape refined;        // refined matched shape
  bool success = false; // false: match failure (no bindings)
  AbstractBindings bindings;
};

using BindingOutcomeSet = std::vector<BindingOutcome>;

inline constexpr size_t kOutcomeCap = 64;

// Joins overflow outcomes beyond the cap (successes with successes, failures
// with failures) to bound analysis cost.
void cap_outcomes(BindingOutcomeSet& outcomes, Grammar& g);

// Pointwise meet of binding environments; absent result when any input is
// absent or any shared name meets to bottom.
std::optional<AbstractBindings> merge_bindings(
    const std::vector<const AbstractBindings*>& envs, Grammar& g);

}  // namespace trl
