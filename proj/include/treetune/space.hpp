#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace treetune {

struct SpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A concrete hyperparameter value. Categorical values are level strings.
using ParamValue = std::variant<double, long long, bool, std::string>;

inline std::string value_to_string(const ParamValue& v) {
  std::ostringstream os;
  os.precision(17);
  if (std::holds_alternative<double>(v))
    os << std::get<double>(v);
  else if (std::holds_alternative<long long>(v))
    os << std::get<long long>(v);
  else if (std::holds_alternative<bool>(v))
    os << (std::get<bool>(v) ? "true" : "false");
  else
    os << std::get<std::string>(v);
  return os.str();
}

struct ParamSpec {
  enum class Kind { real, integer, categorical, boolean };

  std::string name;
  Kind kind = Kind::real;
  double lo = 0.0, hi = 1.0;          // real / integer bounds
  std::vector<std::string> levels;    // categorical levels
  ParamValue default_value;
  // Active only when parent parameter equals the given value.
  std::optional<std::pair<std::string, ParamValue>> condition;

  std::size_t level_count() const {
    return kind == Kind::boolean ? 2 : levels.size();
  }
};

struct Configuration {
  std::map<std::string, ParamValue> values;

  bool has(const std::string& name) const { return values.count(name) > 0; }
  const ParamValue& at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw SpaceError("parameter '" + name + "' not set");
    return it->second;
  }
  double real(const std::string& name) const { return std::get<double>(at(name)); }
  long long integer(const std::string& name) const {
    return std::get<long long>(at(name));
  }
  bool boolean(const std::string& name) const { return std::get<bool>(at(name)); }
  const std::string& level(const std::string& name) const {
    return std::get<std::string>(at(name));
  }

  bool operator==(const Configuration& o) const { return values == o.values; }

  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : values) {
      if (!first) out += ", ";
      out += k + "=" + value_to_string(v);
      first = false;
    }
    return out + "}";
  }
};

using EncodedConfig = std::vector<double>;  // one coordinate per spec, in [0,1]

class ParamSpace {
 public:
  std::string name;

  void add(ParamSpec spec) {
    if (index_of(spec.name) >= 0)
      throw SpaceError("duplicate parameter '" + spec.name + "'");
    if (spec.kind == ParamSpec::Kind::real && !(spec.lo < spec.hi))
      throw SpaceError("parameter '" + spec.name + "': lo must be < hi");
    if (spec.kind == ParamSpec::Kind::integer && !(spec.lo <= spec.hi))
      throw SpaceError("parameter '" + spec.name + "': lo must be <= hi");
    if (spec.condition && index_of(spec.condition->first) < 0)
      throw SpaceError("parameter '" + spec.name +
                       "': condition parent '" + spec.condition->first +
                       "' must be declared first");
    params_.push_back(std::move(spec));
  }

  const std::vector<ParamSpec>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  const ParamSpec& operator[](std::size_t i) const { return params_[i]; }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }
  const ParamSpec& spec(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw SpaceError("unknown parameter '" + name + "'");
    return params_[i];
  }

  bool active(const ParamSpec& spec, const Configuration& config) const {
    if (!spec.condition) return true;
    auto it = config.values.find(spec.condition->first);
    return it != config.values.end() && it->second == spec.condition->second;
  }

  Configuration defaults() const {
    Configuration c;
    for (const auto& p : params_)
      if (active(p, c)) c.values[p.name] = p.default_value;
    return c;
  }

  template <typename Rng>
  Configuration sample(Rng& rng) const {
    Configuration c;
    for (const auto& p : params_) {
      if (!active(p, c)) continue;
      c.values[p.name] = sample_value(p, rng);
    }
    return c;
  }

  std::vector<std::string> validate(const Configuration& config) const {
    std::vector<std::string> issues;
    for (const auto& [k, v] : config.values)
      if (index_of(k) < 0) issues.push_back("unknown parameter '" + k + "'");
    for (const auto& p : params_) {
      bool should = active(p, config);
      bool present = config.has(p.name);
      if (present && !should) {
        issues.push_back(p.name + " inactive");
        continue;
      }
      if (!present) {
        if (should) issues.push_back(p.name + " missing");
        continue;
      }
      const ParamValue& v = config.at(p.name);
      switch (p.kind) {
        case ParamSpec::Kind::real: {
          if (!std::holds_alternative<double>(v)) {
            issues.push_back(p.name + " has wrong type");
            break;
          }
          double x = std::get<double>(v);
          if (!(x > p.lo && x < p.hi))
            issues.push_back(p.name + " out of (" + fmt(p.lo) + "," + fmt(p.hi) + ")");
          break;
        }
        case ParamSpec::Kind::integer: {
          if (!std::holds_alternative<long long>(v)) {
            issues.push_back(p.name + " has wrong type");
            break;
          }
          auto x = std::get<long long>(v);
          if (x < static_cast<long long>(p.lo) || x > static_cast<long long>(p.hi))
            issues.push_back(p.name + " out of [" + fmt(p.lo) + "," + fmt(p.hi) + "]");
          break;
        }
        case ParamSpec::Kind::boolean:
          if (!std::holds_alternative<bool>(v))
            issues.push_back(p.name + " has wrong type");
          break;
        case ParamSpec::Kind::categorical: {
          if (!std::holds_alternative<std::string>(v)) {
            issues.push_back(p.name + " has wrong type");
            break;
          }
          const auto& s = std::get<std::string>(v);
          if (std::find(p.levels.begin(), p.levels.end(), s) == p.levels.end())
            issues.push_back(p.name + " has unknown level '" + s + "'");
          break;
        }
      }
    }
    return issues;
  }

  // Affine map to [0,1] per parameter. Inactive parameters are materialized at
  // their default's coordinate so the encoded space stays rectangular; decode
  // drops them again via the activation rules.
  EncodedConfig encode(const Configuration& config) const {
    EncodedConfig x(params_.size(), 0.0);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const ParamSpec& p = params_[i];
      const ParamValue& v = config.has(p.name) ? config.at(p.name) : p.default_value;
      x[i] = encode_value(p, v);
    }
    return x;
  }

  Configuration decode(const EncodedConfig& x) const {
    if (x.size() != params_.size())
      throw SpaceError("encoded vector has dimension " + std::to_string(x.size()) +
                       ", expected " + std::to_string(params_.size()));
    Configuration c;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const ParamSpec& p = params_[i];
      if (!active(p, c)) continue;
      c.values[p.name] = decode_value(p, std::clamp(x[i], 0.0, 1.0));
    }
    return c;
  }

  template <typename Rng>
  ParamValue sample_value(const ParamSpec& p, Rng& rng) const {
    switch (p.kind) {
      case ParamSpec::Kind::real: {
        // Table-style open intervals: shrink ends to avoid boundary values.
        std::uniform_real_distribution<double> d(p.lo + 1e-9, p.hi - 1e-9);
        return d(rng);
      }
      case ParamSpec::Kind::integer: {
        std::uniform_int_distribution<long long> d(
            static_cast<long long>(p.lo), static_cast<long long>(p.hi));
        return d(rng);
      }
      case ParamSpec::Kind::boolean: {
        std::uniform_int_distribution<int> d(0, 1);
        return d(rng) == 1;
      }
      case ParamSpec::Kind::categorical: {
        std::uniform_int_distribution<std::size_t> d(0, p.levels.size() - 1);
        return p.levels[d(rng)];
      }
    }
    throw SpaceError("unreachable");
  }

  static double encode_value(const ParamSpec& p, const ParamValue& v) {
    switch (p.kind) {
      case ParamSpec::Kind::real:
        return (std::get<double>(v) - p.lo) / (p.hi - p.lo);
      case ParamSpec::Kind::integer:
        if (p.hi == p.lo) return 0.5;
        return (static_cast<double>(std::get<long long>(v)) - p.lo) / (p.hi - p.lo);
      case ParamSpec::Kind::boolean:
        return std::get<bool>(v) ? 0.75 : 0.25;
      case ParamSpec::Kind::categorical: {
        const auto& s = std::get<std::string>(v);
        auto it = std::find(p.levels.begin(), p.levels.end(), s);
        if (it == p.levels.end())
          throw SpaceError(p.name + ": unknown level '" + s + "'");
        double i = static_cast<double>(it - p.levels.begin());
        return (i + 0.5) / static_cast<double>(p.levels.size());
      }
    }
    throw SpaceError("unreachable");
  }

  static ParamValue decode_value(const ParamSpec& p, double t) {
    switch (p.kind) {
      case ParamSpec::Kind::real: {
        double v = p.lo + t * (p.hi - p.lo);
        return std::clamp(v, p.lo + 1e-9, p.hi - 1e-9);
      }
      case ParamSpec::Kind::integer:
        return static_cast<long long>(std::llround(p.lo + t * (p.hi - p.lo)));
      case ParamSpec::Kind::boolean:
        return bin_index(t, 2) == 1;
      case ParamSpec::Kind::categorical:
        return p.levels[bin_index(t, p.levels.size())];
    }
    throw SpaceError("unreachable");
  }

 private:
  // Equal-width bins; an exact bin edge resolves to the lower bin.
  static std::size_t bin_index(double t, std::size_t n) {
    double scaled = t * static_cast<double>(n);
    auto idx = static_cast<long long>(std::ceil(scaled)) - 1;
    return static_cast<std::size_t>(
        std::clamp<long long>(idx, 0, static_cast<long long>(n) - 1));
  }
  static std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  std::vector<ParamSpec> params_;
};

enum class Learner { j48, cart, ctree };

inline std::string learner_name(Learner l) {
  switch (l) {
    case Learner::j48: return "j48";
    case Learner::cart: return "cart";
    case Learner::ctree: return "ctree";
  }
  return "?";
}

inline Learner learner_from_name(const std::string& s) {
  if (s == "j48") return Learner::j48;
  if (s == "cart") return Learner::cart;
  if (s == "ctree") return Learner::ctree;
  throw SpaceError("unknown learner '" + s + "'");
}

// The experiment search spaces for the three learners. `feature_count` sets
// the ctree mtry bounds, which scale with the number of features p as
// [p^0.1, p^0.9] rounded to integers and clamped to [1, p].
inline ParamSpace builtin_space(Learner learner, int feature_count) {
  if (feature_count < 1) throw SpaceError("feature_count must be >= 1");
  ParamSpace s;
  using K = ParamSpec::Kind;
  auto real = [](std::string n, double lo, double hi, double dflt,
                 std::optional<std::pair<std::string, ParamValue>> cond = {}) {
    return ParamSpec{std::move(n), K::real, lo, hi, {}, dflt, std::move(cond)};
  };
  auto integer = [](std::string n, long long lo, long long hi, long long dflt,
                    std::optional<std::pair<std::string, ParamValue>> cond = {}) {
    return ParamSpec{std::move(n), K::integer, static_cast<double>(lo),
                     static_cast<double>(hi), {}, dflt, std::move(cond)};
  };
  auto flag = [](std::string n, bool dflt) {
    return ParamSpec{std::move(n), K::boolean, 0, 1, {}, dflt, {}};
  };
  auto factor = [](std::string n, std::vector<std::string> lv, std::string dflt) {
    return ParamSpec{std::move(n), K::categorical, 0, 1, std::move(lv),
                     std::move(dflt), {}};
  };

  switch (learner) {
    case Learner::j48:
      s.name = "j48";
      s.add(integer("M", 1, 50, 2));
      s.add(flag("R", false));
      s.add(real("C", 0.001, 0.5, 0.25, {{"R", ParamValue(false)}}));
      s.add(integer("N", 2, 10, 3, {{"R", ParamValue(true)}}));
      s.add(flag("O", false));
      s.add(flag("B", false));
      s.add(flag("S", false));
      s.add(flag("A", false));
      s.add(flag("J", false));
      return s;
    case Learner::cart:
      s.name = "cart";
      s.add(real("cp", 0.0001, 0.1, 0.01));
      s.add(integer("minsplit", 1, 50, 20));
      s.add(integer("minbucket", 1, 50, 7));
      s.add(integer("maxdepth", 1, 30, 30));
      s.add(factor("usesurrogate", {"0", "1", "2"}, "2"));
      s.add(factor("surrogatestyle", {"0", "1"}, "0"));
      return s;
    case Learner::ctree: {
      s.name = "ctree";
      const double p = static_cast<double>(feature_count);
      auto lo = static_cast<long long>(std::llround(std::pow(p, 0.1)));
      auto hi = static_cast<long long>(std::llround(std::pow(p, 0.9)));
      lo = std::clamp<long long>(lo, 1, feature_count);
      hi = std::clamp<long long>(hi, lo, feature_count);
      s.add(real("mincriterion", 0.9, 0.999, 0.95));
      s.add(integer("minsplit", 1, 50, 20));
      s.add(integer("minbucket", 1, 50, 7));
      // mtry counts sampled features; the package default "0" (use all) is
      // mapped to the range maximum. With p=1 the range collapses to [1,1].
      s.add(integer("mtry", lo, hi, hi));
      s.add(integer("maxdepth", 1, 30, 30));
      s.add(flag("stump", false));
      return s;
    }
  }
  throw SpaceError("unknown learner tag");
}

}  // namespace treetune
