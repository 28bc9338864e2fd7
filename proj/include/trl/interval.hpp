#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace trl {

// Extended integers with +/- infinity, used for both value intervals and
// set cardinalities (where the lower bound is clamped at 0).
struct Ext {
  static constexpr int64_t kNegInf = std::numeric_limits<int64_t>::min();
  static constexpr int64_t kPosInf = std::numeric_limits<int64_t>::max();
};

// Closed interval over extended integers. Empty is a distinguished state.
class Interval {
 public:
  Interval() : lo_(0), hi_(-1) {}  // empty
  Interval(int64_t lo, int64_t hi) : lo_(lo), hi_(hi) {}

  static Interval empty() { return Interval(); }
  static Interval point(int64_t v) { return Interval(v, v); }
  static Interval full() { return Interval(Ext::kNegInf, Ext::kPosInf); }
  static Interval at_least(int64_t lo) { return Interval(lo, Ext::kPosInf); }

  bool is_empty() const { return lo_ > hi_; }
  int64_t lo() const { return lo_; }
  int64_t hi() const { return hi_; }
  bool lo_inf() const { return lo_ == Ext::kNegInf; }
  bool hi_inf() const { return hi_ == Ext::kPosInf; }

  bool contains(int64_t v) const { return !is_empty() && lo_ <= v && v <= hi_; }

  bool leq(const Interval& o) const {
    if (is_empty()) return true;
    if (o.is_empty()) return false;
    return o.lo_ <= lo_ && hi_ <= o.hi_;
  }

  bool operator==(const Interval& o) const {
    if (is_empty() && o.is_empty()) return true;
    return !is_empty() && !o.is_empty() && lo_ == o.lo_ && hi_ == o.hi_;
  }

  Interval join(const Interval& o) const {
    if (is_empty()) return o;
    if (o.is_empty()) return *this;
    return Interval(std::min(lo_, o.lo_), std::max(hi_, o.hi_));
  }

  Interval meet(const Interval& o) const {
    if (is_empty() || o.is_empty()) return empty();
    Interval r(std::max(lo_, o.lo_), std::min(hi_, o.hi_));
    return r.is_empty() ? empty() : r;
  }

  // Threshold widening: unstable bounds jump to the nearest threshold, then
  // to infinity. Thresholds are {0, 1}.
  Interval widen(const Interval& o) const {
    if (is_empty()) return o;
    if (o.is_empty()) return *this;
    static const int64_t kThresholds[] = {0, 1};
    int64_t lo = lo_;
    if (o.lo_ < lo_) {
      lo = Ext::kNegInf;
      for (int64_t t : kThresholds)
        if (t <= o.lo_ && (lo == Ext::kNegInf || t > lo)) lo = t;
    }
    int64_t hi = hi_;
    if (o.hi_ > hi_) {
      hi = Ext::kPosInf;
      for (int64_t t : kThresholds)
        if (t >= o.hi_ && (hi == Ext::kPosInf || t < hi)) hi = t;
    }
    return Interval(lo, hi);
  }

  // Sound over-approximation of set difference; exact when o trims one end.
  Interval complement(const Interval& o) const {
    if (is_empty()) return empty();
    Interval cut = meet(o);
    if (cut.is_empty()) return *this;
    if (cut.lo_ <= lo_ && cut.hi_ >= hi_) return empty();
    if (cut.lo_ <= lo_) {
      // lower part removed
      return Interval(cut.hi_ == Ext::kPosInf ? Ext::kPosInf : cut.hi_ + 1, hi_);
    }
    if (cut.hi_ >= hi_) {
      return Interval(lo_, cut.lo_ == Ext::kNegInf ? Ext::kNegInf : cut.lo_ - 1);
    }
    return *this;  // hole in the middle: keep
  }

  // Arithmetic on bounds with infinity saturation; used for cardinalities.
  Interval add(int64_t d) const {
    if (is_empty()) return empty();
    int64_t lo = lo_inf() ? lo_ : lo_ + d;
    int64_t hi = hi_inf() ? hi_ : hi_ + d;
    return Interval(lo, hi);
  }

  // Clamp to non-negative (cardinality domain).
  Interval clamp_card() const {
    if (is_empty()) return empty();
    int64_t lo = std::max<int64_t>(lo_, 0);
    if (lo > hi_) return empty();
    return Interval(lo, hi_);
  }

  std::string to_string() const {
    if (is_empty()) return "[empty]";
    std::string l = lo_inf() ? "-inf" : std::to_string(lo_);
    std::string h = hi_inf() ? "inf" : std::to_string(hi_);
    return "[" + l + ";" + h + "]";
  }

 private:
  int64_t lo_, hi_;
};

inline Interval card_full() { return Interval(0, Ext::kPosInf); }

// Cardinality widening keeps the lower bound thresholds and sends unstable
// upper bounds straight to infinity.
inline Interval card_widen(const Interval& a, const Interval& b) {
  Interval w = a.widen(b);
  return w.clamp_card();
}

}  // namespace trl
