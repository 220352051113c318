#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace treetune {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeatureColumn {
  enum class Kind { numeric, categorical };

  std::string name;
  Kind kind = Kind::numeric;
  std::vector<double> num;    // numeric cells, NaN = missing
  std::vector<int> cat;       // category indices, -1 = missing
  std::vector<std::string> levels;

  std::size_t size() const {
    return kind == Kind::numeric ? num.size() : cat.size();
  }
  bool missing(std::size_t i) const {
    return kind == Kind::numeric ? std::isnan(num[i]) : cat[i] < 0;
  }
};

struct Dataset {
  std::string name;
  std::optional<long> external_id;
  std::vector<FeatureColumn> features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t n_instances() const { return labels.size(); }
  std::size_t n_features() const { return features.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (int y : labels) counts.at(static_cast<std::size_t>(y))++;
    return counts;
  }

  // True when every class has at least `k` instances (paper policy uses k=10).
  bool stratifiable(std::size_t k = 10) const {
    auto counts = class_counts();
    return std::all_of(counts.begin(), counts.end(),
                       [&](std::size_t c) { return c >= k; });
  }

  bool has_missing() const {
    for (const auto& f : features)
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f.missing(i)) return true;
    return false;
  }

  void check() const {
    if (labels.empty()) throw DataError("dataset '" + name + "' is empty");
    for (const auto& f : features)
      if (f.size() != labels.size())
        throw DataError("column '" + f.name + "' length mismatch");
    auto counts = class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] == 0)
        throw DataError("class '" + class_names[c] + "' has no instances");
  }
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per instance, in [0, k)

  std::vector<int> fold_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<int> complement_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != fold) out.push_back(static_cast<int>(i));
    return out;
  }
};

struct ConfusionMatrix {
  std::vector<std::vector<long>> counts;  // rows = true class, cols = predicted

  std::size_t n_classes() const { return counts.size(); }
  void add(int truth, int predicted) { counts.at(truth).at(predicted)++; }
  static ConfusionMatrix zeros(std::size_t c) {
    ConfusionMatrix cm;
    cm.counts.assign(c, std::vector<long>(c, 0));
    return cm;
  }
};

// Mean of per-class recalls. Classes absent from the test split (row sum 0)
// are excluded from the mean.
inline double balanced_accuracy(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < cm.counts.size(); ++c) {
    long row = std::accumulate(cm.counts[c].begin(), cm.counts[c].end(), 0L);
    if (row == 0) continue;
    sum += static_cast<double>(cm.counts[c][c]) / static_cast<double>(row);
    present++;
  }
  if (present == 0) throw DataError("confusion matrix has no populated rows");
  return sum / static_cast<double>(present);
}

// Stratified k-fold assignment. Within each class the instances are shuffled
// with the given seed and dealt round-robin, so per-fold class counts deviate
// from the proportional share by at most one.
inline FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed,
                                 bool strict = true) {
  if (k < 2) throw DataError("fold count must be >= 2");
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(ds.n_instances(), -1);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<int>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    by_class[ds.labels[i]].push_back(static_cast<int>(i));
  int offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (strict && idx.size() < static_cast<std::size_t>(k))
      throw DataError("class '" + ds.class_names[c] + "' has " +
                      std::to_string(idx.size()) + " instances, fewer than k=" +
                      std::to_string(k));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i)
      plan.assignment[idx[i]] = (offset + static_cast<int>(i)) % k;
    offset = (offset + static_cast<int>(idx.size())) % k;
  }
  return plan;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == delim && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

inline int intern(std::vector<std::string>& pool, const std::string& v) {
  auto it = std::find(pool.begin(), pool.end(), v);
  if (it != pool.end()) return static_cast<int>(it - pool.begin());
  pool.push_back(v);
  return static_cast<int>(pool.size()) - 1;
}

}  // namespace detail

// CSV loader. First row is the header; the label column may be named or given
// as a 0-based index in string form. Columns whose non-missing cells all parse
// as numbers become numeric, everything else categorical with levels in
// first-appearance order.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& missing_token = "?",
                        char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  auto header = detail::split_line(line, delimiter);
  for (auto& h : header) h = detail::trim(h);

  int label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = static_cast<int>(j);
  if (label_idx < 0) {
    double as_num;
    if (detail::parse_number(label_column, as_num) &&
        as_num >= 0 && as_num < static_cast<double>(header.size()))
      label_idx = static_cast<int>(as_num);
  }
  if (label_idx < 0)
    throw DataError("label column '" + label_column + "' not found in '" + path + "'");

  std::vector<std::vector<std::string>> cells(header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    auto parts = detail::split_line(line, delimiter);
    if (parts.size() != header.size())
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(parts.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t j = 0; j < parts.size(); ++j)
      cells[j].push_back(detail::trim(parts[j]));
  }
  if (cells[0].empty()) throw DataError("'" + path + "' has no data rows");

  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  const std::size_t n = cells[0].size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) == label_idx) {
      for (std::size_t i = 0; i < n; ++i)
        ds.labels.push_back(detail::intern(ds.class_names, cells[j][i]));
      continue;
    }
    bool numeric = true;
    for (std::size_t i = 0; i < n && numeric; ++i) {
      if (cells[j][i] == missing_token) continue;
      double v;
      if (!detail::parse_number(cells[j][i], v)) numeric = false;
    }
    FeatureColumn col;
    col.name = header[j];
    if (numeric) {
      col.kind = FeatureColumn::Kind::numeric;
      for (std::size_t i = 0; i < n; ++i) {
        if (cells[j][i] == missing_token) {
          col.num.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          double v;
          if (!detail::parse_number(cells[j][i], v))
            throw DataError(path + ": row " + std::to_string(i + 2) +
                            ", column '" + header[j] + "': cannot parse '" +
                            cells[j][i] + "'");
          col.num.push_back(v);
        }
      }
    } else {
      col.kind = FeatureColumn::Kind::categorical;
      for (std::size_t i = 0; i < n; ++i) {
        if (cells[j][i] == missing_token)
          col.cat.push_back(-1);
        else
          col.cat.push_back(detail::intern(col.levels, cells[j][i]));
      }
    }
    ds.features.push_back(std::move(col));
  }
  ds.check();
  return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path,
                     const std::string& missing_token = "?",
                     char delimiter = ',') {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& f : ds.features) out << f.name << delimiter;
  out << "class\n";
  out.precision(17);
  for (std::size_t i = 0; i < ds.n_instances(); ++i) {
    for (const auto& f : ds.features) {
      if (f.missing(i))
        out << missing_token;
      else if (f.kind == FeatureColumn::Kind::numeric)
        out << f.num[i];
      else
        out << f.levels[f.cat[i]];
      out << delimiter;
    }
    out << ds.class_names[ds.labels[i]] << "\n";
  }
}

// ARFF loader. Nominal attributes use the brace syntax; the last nominal
// attribute is the label unless `label_name` overrides it. Sparse data rows
// are rejected.
inline Dataset load_arff(const std::string& path,
                         const std::string& label_name = "") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  struct Attr {
    std::string name;
    bool nominal = false;
    std::vector<std::string> levels;
  };
  std::vector<Attr> attrs;
  std::string line;
  bool in_data = false;
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 0;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '%') continue;
    if (!in_data) {
      std::string lt = lower(t);
      if (lt.rfind("@relation", 0) == 0) continue;
      if (lt.rfind("@data", 0) == 0) {
        in_data = true;
        continue;
      }
      if (lt.rfind("@attribute", 0) == 0) {
        std::string rest = detail::trim(t.substr(10));
        Attr a;
        if (!rest.empty() && (rest[0] == '"' || rest[0] == '\'')) {
          char q = rest[0];
          std::size_t end = rest.find(q, 1);
          if (end == std::string::npos)
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": unterminated attribute name");
          a.name = rest.substr(1, end - 1);
          rest = detail::trim(rest.substr(end + 1));
        } else {
          std::size_t sp = rest.find_first_of(" \t");
          if (sp == std::string::npos)
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": malformed @attribute");
          a.name = rest.substr(0, sp);
          rest = detail::trim(rest.substr(sp));
        }
        if (!rest.empty() && rest[0] == '{') {
          std::size_t close = rest.find('}');
          if (close == std::string::npos)
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": unterminated nominal declaration");
          a.nominal = true;
          for (auto& lv : detail::split_line(rest.substr(1, close - 1), ','))
            a.levels.push_back(detail::trim(lv));
        } else {
          std::string kind = lower(detail::trim(rest));
          if (kind != "numeric" && kind != "real" && kind != "integer" &&
              kind.rfind("numeric", 0) != 0)
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": unsupported attribute type '" + rest + "'");
        }
        attrs.push_back(std::move(a));
        continue;
      }
      throw DataError(path + ": line " + std::to_string(lineno) +
                      ": malformed header line '" + t + "'");
    }
    if (t[0] == '{')
      throw DataError(path + ": line " + std::to_string(lineno) +
                      ": sparse ARFF unsupported");
    auto parts = detail::split_line(t, ',');
    if (parts.size() != attrs.size())
      throw DataError(path + ": line " + std::to_string(lineno) + " has " +
                      std::to_string(parts.size()) + " values, expected " +
                      std::to_string(attrs.size()));
    for (auto& p : parts) {
      p = detail::trim(p);
      if (p.size() >= 2 && (p.front() == '\'' || p.front() == '"') &&
          p.back() == p.front())
        p = p.substr(1, p.size() - 2);
    }
    rows.push_back(std::move(parts));
  }
  if (attrs.empty()) throw DataError(path + ": no @attribute declarations");
  if (rows.empty()) throw DataError(path + ": no data rows");

  int label_idx = -1;
  if (!label_name.empty()) {
    for (std::size_t j = 0; j < attrs.size(); ++j)
      if (attrs[j].name == label_name) label_idx = static_cast<int>(j);
    if (label_idx < 0)
      throw DataError(path + ": label attribute '" + label_name + "' not found");
  } else {
    for (std::size_t j = 0; j < attrs.size(); ++j)
      if (attrs[j].nominal) label_idx = static_cast<int>(j);
    if (label_idx < 0) throw DataError(path + ": no nominal attribute for label");
  }

  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    if (static_cast<int>(j) == label_idx) {
      for (const auto& r : rows)
        ds.labels.push_back(detail::intern(ds.class_names, r[j]));
      continue;
    }
    FeatureColumn col;
    col.name = attrs[j].name;
    if (attrs[j].nominal) {
      col.kind = FeatureColumn::Kind::categorical;
      col.levels = attrs[j].levels;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& v = rows[i][j];
        if (v == "?") {
          col.cat.push_back(-1);
        } else {
          auto it = std::find(col.levels.begin(), col.levels.end(), v);
          if (it == col.levels.end())
            throw DataError(path + ": undeclared nominal value '" + v +
                            "' in attribute '" + attrs[j].name + "'");
          col.cat.push_back(static_cast<int>(it - col.levels.begin()));
        }
      }
    } else {
      col.kind = FeatureColumn::Kind::numeric;
      for (const auto& r : rows) {
        if (r[j] == "?") {
          col.num.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          double v;
          if (!detail::parse_number(r[j], v))
            throw DataError(path + ": cannot parse numeric value '" + r[j] +
                            "' in attribute '" + attrs[j].name + "'");
          col.num.push_back(v);
        }
      }
    }
    ds.features.push_back(std::move(col));
  }
  ds.check();
  return ds;
}

}  // namespace treetune
