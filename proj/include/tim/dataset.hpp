#pragma once

// Typed data model, CSV ingestion and the coarsened / discretized views
// consumed by the matching pipeline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tim/error.hpp"

namespace tim {

enum class CovariateKind { Continuous, Discrete };

inline const char* to_string(CovariateKind kind) {
  return kind == CovariateKind::Continuous ? "continuous" : "discrete";
}

// Discrete columns with more levels than this are rejected at ingestion.
inline constexpr std::size_t kMaxDiscreteLevels = 1024;

struct Column {
  std::string name;
  CovariateKind kind = CovariateKind::Continuous;
  // Raw values for continuous columns; dense category codes 0..levels-1
  // (stored as doubles) for discrete columns.
  std::vector<double> values;
  // Code book of a discrete column: labels[code]. Empty for continuous.
  std::vector<std::string> labels;

  std::size_t levels() const noexcept { return labels.size(); }
};

// Immutable table of n units: typed covariates, binary treatment, outcome.
class Dataset {
 public:
  static Dataset create(std::vector<Column> columns, std::vector<std::uint8_t> treatment,
                        std::vector<double> outcome) {
    Dataset ds;
    ds.columns_ = std::move(columns);
    ds.treatment_ = std::move(treatment);
    ds.outcome_ = std::move(outcome);
    ds.validate();
    return ds;
  }

  std::size_t n() const noexcept { return treatment_.size(); }
  std::size_t k() const noexcept { return columns_.size(); }

  const Column& column(std::size_t j) const { return columns_.at(j); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  CovariateKind kind(std::size_t j) const { return columns_.at(j).kind; }
  double value(std::size_t i, std::size_t j) const { return columns_[j].values[i]; }
  std::int32_t code(std::size_t i, std::size_t j) const {
    return static_cast<std::int32_t>(columns_[j].values[i]);
  }

  const std::vector<std::uint8_t>& treatment() const noexcept { return treatment_; }
  const std::vector<double>& outcome() const noexcept { return outcome_; }
  bool treated(std::size_t i) const { return treatment_[i] != 0; }

  std::size_t n_treated() const noexcept { return n_treated_; }
  std::size_t n_control() const noexcept { return n() - n_treated_; }

  std::vector<std::size_t> treated_indices() const { return indices_with(1); }
  std::vector<std::size_t> control_indices() const { return indices_with(0); }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    names.reserve(k());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
  }

  // Min-max scaled copy of a continuous column in [0,1]; a constant column maps to 0.
  std::vector<double> normalized(std::size_t j) const {
    const auto& v = columns_.at(j).values;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<double> out(v.size(), 0.0);
    const double range = *hi - *lo;
    if (range > 0.0) {
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
    }
    return out;
  }

 private:
  std::vector<std::size_t> indices_with(std::uint8_t t) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < treatment_.size(); ++i) {
      if (treatment_[i] == t) idx.push_back(i);
    }
    return idx;
  }

  void validate() {
    const std::size_t rows = treatment_.size();
    if (columns_.empty()) throw SchemaError("dataset needs at least one covariate column");
    if (outcome_.size() != rows) throw SchemaError("outcome and treatment lengths differ");
    for (const auto& c : columns_) {
      if (c.values.size() != rows) {
        throw SchemaError("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                          " rows, expected " + std::to_string(rows));
      }
      if (c.kind == CovariateKind::Discrete) {
        if (c.labels.size() > kMaxDiscreteLevels) {
          throw ValidationError("discrete column '" + c.name + "' has " +
                                std::to_string(c.labels.size()) + " levels (limit " +
                                std::to_string(kMaxDiscreteLevels) + ")");
        }
        for (double v : c.values) {
          if (v < 0 || v >= static_cast<double>(c.labels.size()) || v != std::floor(v)) {
            throw ValidationError("discrete column '" + c.name + "' holds a non-dense code");
          }
        }
      } else {
        for (double v : c.values) {
          if (!std::isfinite(v)) {
            throw ValidationError("continuous column '" + c.name + "' holds a non-finite value");
          }
        }
      }
    }
    for (double y : outcome_) {
      if (!std::isfinite(y)) throw ValidationError("outcome holds a non-finite value");
    }
    n_treated_ = 0;
    for (auto t : treatment_) {
      if (t > 1) throw ValidationError("treatment must be 0 or 1");
      n_treated_ += t;
    }
    if (rows < 2) throw DegenerateDataError("dataset needs at least two rows");
    if (n_treated_ == 0) throw DegenerateDataError("dataset has no treated units");
    if (n_treated_ == rows) throw DegenerateDataError("dataset has no control units");
  }

  std::vector<Column> columns_;
  std::vector<std::uint8_t> treatment_;
  std::vector<double> outcome_;
  std::size_t n_treated_ = 0;
};

// ---------------------------------------------------------------------------
// Schema and CSV ingestion

enum class ColumnRole { Treatment, Outcome, CovariateContinuous, CovariateDiscrete, Ignore };

inline std::optional<ColumnRole> parse_role(std::string_view s) {
  if (s == "treatment") return ColumnRole::Treatment;
  if (s == "outcome") return ColumnRole::Outcome;
  if (s == "covariate_continuous") return ColumnRole::CovariateContinuous;
  if (s == "covariate_discrete") return ColumnRole::CovariateDiscrete;
  if (s == "ignore") return ColumnRole::Ignore;
  return std::nullopt;
}

inline const char* to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::Treatment: return "treatment";
    case ColumnRole::Outcome: return "outcome";
    case ColumnRole::CovariateContinuous: return "covariate_continuous";
    case ColumnRole::CovariateDiscrete: return "covariate_discrete";
    case ColumnRole::Ignore: return "ignore";
  }
  return "?";
}

// Column name -> role. Every CSV header column must be named.
struct Schema {
  std::map<std::string, ColumnRole> roles;

  void check() const {
    int t = 0, y = 0, x = 0;
    for (const auto& [name, role] : roles) {
      t += role == ColumnRole::Treatment;
      y += role == ColumnRole::Outcome;
      x += role == ColumnRole::CovariateContinuous || role == ColumnRole::CovariateDiscrete;
    }
    if (t != 1) throw SchemaError("schema must name exactly one treatment column");
    if (y != 1) throw SchemaError("schema must name exactly one outcome column");
    if (x < 1) throw SchemaError("schema must name at least one covariate column");
  }
};

struct CsvRecord {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

// RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
// quoted fields may span lines, CRLF or LF terminators.
inline std::vector<CsvRecord> read_csv_records(std::istream& in) {
  std::vector<CsvRecord> records;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  CsvRecord rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  rec.line = 1;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Skip blank lines.
    if (!(rec.fields.size() == 1 && rec.fields[0].empty())) records.push_back(std::move(rec));
    rec = CsvRecord{};
    rec.line = line;
  };

  for (std::size_t p = 0; p < text.size(); ++p) {
    const char c = text[p];
    if (in_quotes) {
      if (c == '"') {
        if (p + 1 < text.size() && text[p + 1] == '"') {
          field.push_back('"');
          ++p;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ValidationError("stray quote on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (p + 1 < text.size() && text[p + 1] == '\n') ++p;
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ValidationError("unterminated quoted field starting on line " + std::to_string(rec.line));
  if (field_started || !rec.fields.empty()) end_record();
  return records;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string row_list(const std::vector<std::size_t>& rows) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) os << (i ? ", " : "") << rows[i];
  if (rows.size() > shown) os << ", ... (" << rows.size() << " rows)";
  return os.str();
}

}  // namespace detail

// Builds a Dataset from parsed records (first record is the header). Rows are
// numbered from 1 starting at the first data row in every error message.
inline Dataset dataset_from_records(const std::vector<CsvRecord>& records, const Schema& schema) {
  schema.check();
  if (records.empty()) throw SchemaError("CSV has no header row");
  const auto& header = records.front().fields;

  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(detail::trim(header[c]));
    if (!position.emplace(name, c).second) throw SchemaError("duplicate CSV column '" + name + "'");
    if (!schema.roles.count(name)) {
      throw SchemaError("CSV column '" + name + "' is not in the schema (use role \"ignore\")");
    }
  }
  for (const auto& [name, role] : schema.roles) {
    if (!position.count(name)) throw SchemaError("schema column '" + name + "' missing from CSV header");
  }

  // Covariates keep CSV header order.
  std::vector<Column> columns;
  std::vector<std::size_t> column_pos;
  std::size_t t_pos = 0, y_pos = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(detail::trim(header[c]));
    switch (schema.roles.at(name)) {
      case ColumnRole::Treatment: t_pos = c; break;
      case ColumnRole::Outcome: y_pos = c; break;
      case ColumnRole::CovariateContinuous:
        columns.push_back({name, CovariateKind::Continuous, {}, {}});
        column_pos.push_back(c);
        break;
      case ColumnRole::CovariateDiscrete:
        columns.push_back({name, CovariateKind::Discrete, {}, {}});
        column_pos.push_back(c);
        break;
      case ColumnRole::Ignore: break;
    }
  }

  std::vector<std::unordered_map<std::string, std::size_t>> codebooks(columns.size());
  std::vector<std::uint8_t> treatment;
  std::vector<double> outcome;
  std::vector<std::size_t> bad_treatment, bad_cells;

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != header.size()) {
      bad_cells.push_back(r);
      continue;
    }
    bool ok = true;
    std::uint8_t t = 0;
    if (auto v = detail::parse_double(f[t_pos]); v && (*v == 0.0 || *v == 1.0)) {
      t = static_cast<std::uint8_t>(*v);
    } else {
      bad_treatment.push_back(r);
      ok = false;
    }
    auto y = detail::parse_double(f[y_pos]);
    if (!y) ok = false;
    std::vector<double> cells(columns.size());
    for (std::size_t j = 0; j < columns.size() && ok; ++j) {
      const std::string_view raw = f[column_pos[j]];
      if (detail::is_missing(raw)) {
        ok = false;
      } else if (columns[j].kind == CovariateKind::Continuous) {
        auto v = detail::parse_double(raw);
        if (!v) ok = false;
        else cells[j] = *v;
      }
    }
    if (!ok) {
      if (bad_treatment.empty() || bad_treatment.back() != r) bad_cells.push_back(r);
      continue;
    }
    // Codes are assigned only for accepted rows so that the code book is
    // dense over the data actually loaded.
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].kind == CovariateKind::Discrete) {
        std::string label(detail::trim(f[column_pos[j]]));
        auto [it, inserted] = codebooks[j].emplace(label, columns[j].labels.size());
        if (inserted) columns[j].labels.push_back(label);
        cells[j] = static_cast<double>(it->second);
      }
      columns[j].values.push_back(cells[j]);
    }
    treatment.push_back(t);
    outcome.push_back(*y);
  }

  if (!bad_treatment.empty()) {
    throw ValidationError("non-binary treatment value in row(s) " + detail::row_list(bad_treatment),
                          bad_treatment);
  }
  if (!bad_cells.empty()) {
    throw ValidationError("missing or unparseable cell in row(s) " + detail::row_list(bad_cells),
                          bad_cells);
  }
  return Dataset::create(std::move(columns), std::move(treatment), std::move(outcome));
}

inline Dataset read_csv(std::istream& in, const Schema& schema) {
  return dataset_from_records(read_csv_records(in), schema);
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open CSV file '" + path + "'");
  return read_csv(in, schema);
}

namespace detail {
inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}
}  // namespace detail

// Writes covariates, then treatment and outcome columns. Continuous values are
// printed with 17 significant digits so that reading the file back is exact.
inline void write_csv(std::ostream& out, const Dataset& ds, const std::string& treatment_name = "T",
                      const std::string& outcome_name = "Y") {
  for (std::size_t j = 0; j < ds.k(); ++j) out << detail::csv_quote(ds.column(j).name) << ',';
  out << detail::csv_quote(treatment_name) << ',' << detail::csv_quote(outcome_name) << '\n';
  char buf[64];
  auto num = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
  };
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.k(); ++j) {
      const auto& c = ds.column(j);
      if (c.kind == CovariateKind::Discrete) out << detail::csv_quote(c.labels[ds.code(i, j)]);
      else out << num(c.values[i]);
      out << ',';
    }
    out << static_cast<int>(ds.treatment()[i]) << ',' << num(ds.outcome()[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binning and coarsening

// Sturges' rule: ceil(log2(n) + 1).
inline int sturges_bins(std::size_t n) {
  if (n < 2) return 1;
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) + 1.0));
}

// Cut points of one column. A continuous value maps to the number of interior
// edges <= value; a discrete code maps to itself.
struct ColumnBins {
  CovariateKind kind = CovariateKind::Continuous;
  std::vector<double> edges;  // ascending interior cut points (continuous only)
  int cardinality = 1;        // number of distinct codes

  std::int32_t code_of(double v) const {
    if (kind == CovariateKind::Discrete) return static_cast<std::int32_t>(v);
    return static_cast<std::int32_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  }

  bool operator==(const ColumnBins&) const = default;
};

struct Binning {
  std::vector<ColumnBins> columns;
  bool operator==(const Binning&) const = default;
};

// Equal-width cut points between min and max; a constant column gets none.
inline ColumnBins equal_width_bins(const std::vector<double>& values, int bins) {
  ColumnBins out;
  out.kind = CovariateKind::Continuous;
  if (values.empty() || bins < 2) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) return out;
  const double width = (*hi - *lo) / bins;
  for (int b = 1; b < bins; ++b) out.edges.push_back(*lo + width * b);
  out.cardinality = bins;
  return out;
}

// Column-major integer code matrix.
struct CodeMatrix {
  std::vector<std::vector<std::int32_t>> columns;
  std::vector<int> cardinality;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  std::int32_t operator()(std::size_t i, std::size_t j) const { return columns[j][i]; }
};

inline CodeMatrix apply_binning(const Dataset& ds, const Binning& binning) {
  if (binning.columns.size() != ds.k()) throw SchemaError("binning does not match dataset columns");
  CodeMatrix m;
  m.columns.resize(ds.k());
  m.cardinality.resize(ds.k());
  for (std::size_t j = 0; j < ds.k(); ++j) {
    const auto& bins = binning.columns[j];
    const auto& v = ds.column(j).values;
    auto& out = m.columns[j];
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = bins.code_of(v[i]);
    m.cardinality[j] = bins.cardinality;
  }
  return m;
}

// Continuous columns: equal-width bins over the pooled sample, Sturges by
// default. Discrete columns: one bin per level.
inline Binning make_binning(const Dataset& ds, const std::map<std::size_t, int>& bins_per_column = {}) {
  Binning b;
  const int default_bins = sturges_bins(ds.n());
  for (std::size_t j = 0; j < ds.k(); ++j) {
    const auto& c = ds.column(j);
    if (c.kind == CovariateKind::Discrete) {
      ColumnBins cb;
      cb.kind = CovariateKind::Discrete;
      cb.cardinality = static_cast<int>(std::max<std::size_t>(c.levels(), 1));
      b.columns.push_back(std::move(cb));
      continue;
    }
    int bins = default_bins;
    if (auto it = bins_per_column.find(j); it != bins_per_column.end()) {
      if (it->second < 2) throw SchemaError("bin count for column '" + c.name + "' must be >= 2");
      bins = it->second;
    }
    b.columns.push_back(equal_width_bins(c.values, bins));
  }
  return b;
}

struct CoarsenedView {
  CodeMatrix codes;
  Binning binning;

  std::size_t n() const noexcept { return codes.rows(); }
  std::size_t k() const noexcept { return codes.cols(); }
  std::int32_t code(std::size_t i, std::size_t j) const { return codes(i, j); }
};

inline CoarsenedView coarsen(const Dataset& ds, const std::map<std::size_t, int>& bins_per_column = {}) {
  CoarsenedView view;
  view.binning = make_binning(ds, bins_per_column);
  view.codes = apply_binning(ds, view.binning);
  return view;
}

// All-discrete representation for the discrete distance model: continuous
// columns become their coarsened codes, discrete columns keep their codes.
inline CodeMatrix discretize_for_distance(const Dataset& ds, const CoarsenedView& view) {
  if (view.n() != ds.n() || view.k() != ds.k()) {
    throw SchemaError("coarsened view was not built from this dataset");
  }
  return view.codes;
}

}  // namespace tim
