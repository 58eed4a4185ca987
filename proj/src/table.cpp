#include "imputekit/table.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace imputekit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// --- ColumnKind / Schema ---------------------------------------------------

ColumnKind ColumnKind::categorical(std::vector<std::string> levels, bool ordered) {
  if (levels.size() < 2) {
    throw Error(ErrorCode::SchemaInvalid, "categorical column needs at least 2 levels");
  }
  std::set<std::string> seen;
  for (const auto& level : levels) {
    if (!seen.insert(level).second) {
      throw Error(ErrorCode::SchemaInvalid, "duplicate level '" + level + "'");
    }
  }
  ColumnKind kind;
  kind.levels_ = std::move(levels);
  kind.ordered_ = ordered;
  return kind;
}

std::optional<std::uint32_t> ColumnKind::level_index(std::string_view name) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const auto& column : columns_) {
    if (!names.insert(column.name).second) {
      throw Error(ErrorCode::SchemaInvalid, "duplicate column name '" + column.name + "'");
    }
    if (column.missing_tokens.empty()) {
      throw Error(ErrorCode::SchemaInvalid,
                  "column '" + column.name + "' has an empty missing-token list");
    }
  }
}

Schema Schema::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaInvalid, std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array()) {
    throw Error(ErrorCode::SchemaInvalid, "schema must be an object with a 'columns' array");
  }
  std::vector<Column> columns;
  try {
    for (const auto& entry : doc["columns"]) {
      Column column;
      column.name = entry.at("name").get<std::string>();
      const auto kind = entry.at("kind").get<std::string>();
      const bool ordered = entry.value("ordered", false);
      if (kind == "quantitative") {
        if (entry.contains("levels") || ordered) {
          throw Error(ErrorCode::SchemaInvalid,
                      "quantitative column '" + column.name + "' cannot have levels or ordered");
        }
        column.kind = ColumnKind::quantitative();
      } else if (kind == "categorical") {
        if (!entry.contains("levels")) {
          throw Error(ErrorCode::SchemaInvalid,
                      "categorical column '" + column.name + "' needs 'levels'");
        }
        column.kind = ColumnKind::categorical(entry["levels"].get<std::vector<std::string>>(),
                                              ordered);
      } else {
        throw Error(ErrorCode::SchemaInvalid, "unknown column kind '" + kind + "'");
      }
      if (entry.contains("missing_tokens")) {
        column.missing_tokens = entry["missing_tokens"].get<std::vector<std::string>>();
      }
      columns.push_back(std::move(column));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaInvalid, std::string("malformed schema: ") + e.what());
  }
  return Schema(std::move(columns));
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string Schema::to_json() const {
  nlohmann::ordered_json doc;
  doc["columns"] = nlohmann::ordered_json::array();
  for (const auto& column : columns_) {
    nlohmann::ordered_json entry;
    entry["name"] = column.name;
    if (column.kind.is_quantitative()) {
      entry["kind"] = "quantitative";
    } else {
      entry["kind"] = "categorical";
      entry["levels"] = column.kind.levels();
      if (column.kind.ordered()) entry["ordered"] = true;
    }
    if (column.missing_tokens != std::vector<std::string>{"NA", ""}) {
      entry["missing_tokens"] = column.missing_tokens;
    }
    doc["columns"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

void Schema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write schema file " + path.string());
  out << to_json();
  if (!out) throw Error(ErrorCode::Io, "failed writing schema file " + path.string());
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::require(std::string_view name) const {
  auto index = index_of(name);
  if (!index) throw Error(ErrorCode::UnknownColumn, "unknown column '" + std::string(name) + "'");
  return *index;
}

Schema Schema::select(std::span<const std::size_t> indices) const {
  std::vector<Column> columns;
  columns.reserve(indices.size());
  for (auto i : indices) columns.push_back(columns_.at(i));
  return Schema(std::move(columns));
}

const std::string& missing_token(const Column& column) { return column.missing_tokens.front(); }

// --- MixedTable -------------------------------------------------------------

MixedTable::MixedTable(Schema schema, std::size_t n_rows)
    : schema_(std::move(schema)),
      n_rows_(n_rows),
      data_(schema_.size(), std::vector<double>(n_rows, kNaN)) {}

MixedTable::MixedTable(Schema schema, std::vector<std::vector<double>> columns)
    : schema_(std::move(schema)), data_(std::move(columns)) {
  if (data_.size() != schema_.size()) {
    throw Error(ErrorCode::SchemaMismatch, "column count does not match schema");
  }
  n_rows_ = data_.empty() ? 0 : data_.front().size();
  for (std::size_t c = 0; c < data_.size(); ++c) {
    if (data_[c].size() != n_rows_) {
      throw Error(ErrorCode::SchemaMismatch, "ragged columns");
    }
    validate_column(c);
  }
}

void MixedTable::validate_column(std::size_t c) const {
  const auto& kind = schema_[c].kind;
  for (double v : data_[c]) {
    if (std::isnan(v)) continue;
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "non-finite value in column '" + name(c) + "'");
    }
    if (kind.is_categorical() &&
        (v < 0 || v != std::floor(v) || v >= static_cast<double>(kind.level_count()))) {
      throw Error(ErrorCode::InvalidArgument, "invalid level code in column '" + name(c) + "'");
    }
  }
}

Cell MixedTable::cell(std::size_t r, std::size_t c) const {
  const double v = data_.at(c).at(r);
  if (std::isnan(v)) return Missing{};
  if (kind(c).is_categorical()) return Level{static_cast<std::uint32_t>(v)};
  return v;
}

void MixedTable::set(std::size_t r, std::size_t c, Cell value) {
  auto& slot = data_.at(c).at(r);
  const auto& k = kind(c);
  if (std::holds_alternative<Missing>(value)) {
    slot = kNaN;
  } else if (const double* number = std::get_if<double>(&value)) {
    if (!k.is_quantitative() || !std::isfinite(*number)) {
      throw Error(ErrorCode::InvalidArgument, "cell does not fit column '" + name(c) + "'");
    }
    slot = *number;
  } else {
    const auto level = std::get<Level>(value).index;
    if (!k.is_categorical() || level >= k.level_count()) {
      throw Error(ErrorCode::InvalidArgument, "cell does not fit column '" + name(c) + "'");
    }
    slot = level;
  }
}

std::size_t MixedTable::missing_count(std::size_t c) const {
  return static_cast<std::size_t>(
      std::count_if(data_[c].begin(), data_[c].end(), [](double v) { return std::isnan(v); }));
}

std::size_t MixedTable::missing_count() const {
  std::size_t total = 0;
  for (std::size_t c = 0; c < cols(); ++c) total += missing_count(c);
  return total;
}

MixedTable MixedTable::select_columns(std::span<const std::size_t> indices) const {
  std::vector<std::vector<double>> columns;
  columns.reserve(indices.size());
  for (auto i : indices) columns.push_back(data_.at(i));
  MixedTable out;
  out.schema_ = schema_.select(indices);
  out.n_rows_ = n_rows_;
  out.data_ = std::move(columns);
  return out;
}

MixedTable MixedTable::select_rows(std::span<const std::size_t> indices) const {
  MixedTable out;
  out.schema_ = schema_;
  out.n_rows_ = indices.size();
  out.data_.assign(cols(), std::vector<double>(indices.size()));
  for (std::size_t c = 0; c < cols(); ++c) {
    for (std::size_t i = 0; i < indices.size(); ++i) out.data_[c][i] = data_[c].at(indices[i]);
  }
  return out;
}

bool MixedTable::operator==(const MixedTable& other) const {
  if (!(schema_ == other.schema_) || n_rows_ != other.n_rows_) return false;
  for (std::size_t c = 0; c < cols(); ++c) {
    for (std::size_t r = 0; r < n_rows_; ++r) {
      const double a = data_[c][r];
      const double b = other.data_[c][r];
      if (std::isnan(a) != std::isnan(b)) return false;
      if (!std::isnan(a) && a != b) return false;
    }
  }
  return true;
}

// --- MissingMask ------------------------------------------------------------

const char* to_string(Provenance p) noexcept {
  return p == Provenance::Original ? "original" : "amputed";
}

MissingMask::MissingMask(const MixedTable& table, std::vector<MaskEntry> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.row >= table.rows() || e.col >= table.cols()) {
      throw Error(ErrorCode::InvalidArgument, "mask position out of range");
    }
    if (!table.is_missing(e.row, e.col)) {
      throw Error(ErrorCode::InvalidArgument, "mask position (" + std::to_string(e.row) + ", " +
                                                  std::to_string(e.col) + ") is not missing");
    }
    if (i > 0 && entries_[i - 1].row == e.row && entries_[i - 1].col == e.col) {
      throw Error(ErrorCode::InvalidArgument, "duplicate mask position");
    }
  }
}

MissingMask MissingMask::original(const MixedTable& table) {
  std::vector<MaskEntry> entries;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (table.is_missing(r, c)) entries.push_back({r, c, Provenance::Original});
    }
  }
  return MissingMask(table, std::move(entries));
}

std::size_t MissingMask::count(Provenance p) const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [p](const MaskEntry& e) { return e.provenance == p; }));
}

bool MissingMask::contains(std::size_t row, std::size_t col) const {
  MaskEntry probe{row, col, Provenance::Original};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), probe);
  return it != entries_.end() && it->row == row && it->col == col;
}

std::string MissingMask::to_csv() const {
  std::string out = "row,col,provenance\n";
  for (const auto& e : entries_) {
    out += std::to_string(e.row) + "," + std::to_string(e.col) + "," + to_string(e.provenance) +
           "\n";
  }
  return out;
}

void MissingMask::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write mask file " + path.string());
  out << to_csv();
  if (!out) throw Error(ErrorCode::Io, "failed writing mask file " + path.string());
}

MissingMask MissingMask::read_csv(const std::filesystem::path& path, const MixedTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mask file " + path.string());
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields) ||
      fields != std::vector<std::string>{"row", "col", "provenance"}) {
    throw Error(ErrorCode::HeaderMismatch, "mask file header must be row,col,provenance");
  }
  std::vector<MaskEntry> entries;
  std::size_t line = 1;
  while (read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 3) {
      throw Error(ErrorCode::MalformedRow, "mask line " + std::to_string(line));
    }
    MaskEntry e;
    try {
      e.row = std::stoull(fields[0]);
      e.col = std::stoull(fields[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::UnparseableNumber, "mask line " + std::to_string(line));
    }
    if (fields[2] == "original") {
      e.provenance = Provenance::Original;
    } else if (fields[2] == "amputed") {
      e.provenance = Provenance::Amputed;
    } else {
      throw Error(ErrorCode::MalformedRow,
                  "mask line " + std::to_string(line) + ": bad provenance '" + fields[2] + "'");
    }
    entries.push_back(e);
  }
  return MissingMask(table, std::move(entries));
}

// --- Missingness / preprocessing ------------------------------------------

Missingness column_missingness(const MixedTable& table) {
  Missingness out;
  out.per_column.resize(table.cols(), 0.0);
  if (table.rows() == 0 || table.cols() == 0) return out;
  std::size_t total = 0;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto missing = table.missing_count(c);
    total += missing;
    out.per_column[c] = static_cast<double>(missing) / static_cast<double>(table.rows());
  }
  out.overall = static_cast<double>(total) / static_cast<double>(table.rows() * table.cols());
  return out;
}

std::vector<double> cumulative_missingness(const MixedTable& table,
                                           std::span<const std::string> column_order) {
  std::vector<double> out;
  out.reserve(column_order.size());
  std::size_t missing = 0;
  std::size_t cells = 0;
  for (const auto& name : column_order) {
    const auto c = table.schema().require(name);
    missing += table.missing_count(c);
    cells += table.rows();
    out.push_back(cells == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(cells));
  }
  return out;
}

DropResult drop_sparse_columns(const MixedTable& table, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1]");
  }
  const auto missingness = column_missingness(table);
  std::vector<std::size_t> keep;
  DropResult result;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (missingness.per_column[c] > threshold) {
      result.dropped.push_back(table.name(c));
    } else {
      keep.push_back(c);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::EmptyResult, "every column exceeds the threshold");
  result.table = table.select_columns(keep);
  return result;
}

MixedTable group_mean_aggregate(const MixedTable& table, std::string_view key_column) {
  const auto key = table.schema().require(key_column);
  if (!table.kind(key).is_categorical()) {
    throw Error(ErrorCode::KeyNotCategorical,
                "key column '" + std::string(key_column) + "' must be categorical");
  }
  if (table.cols() < 2) {
    throw Error(ErrorCode::InvalidArgument, "aggregation needs at least one non-key column");
  }
  // Group rows by key level, in level order.
  std::map<std::uint32_t, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.is_missing(r, key)) continue;
    groups[static_cast<std::uint32_t>(table.raw(r, key))].push_back(r);
  }
  std::vector<std::vector<double>> columns(table.cols(), std::vector<double>(groups.size(), kNaN));
  std::size_t g = 0;
  for (const auto& [level, rows] : groups) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c == key) {
        columns[c][g] = level;
        continue;
      }
      if (table.kind(c).is_quantitative()) {
        double sum = 0.0;
        std::size_t n = 0;
        for (auto r : rows) {
          if (table.is_missing(r, c)) continue;
          sum += table.raw(r, c);
          ++n;
        }
        if (n > 0) columns[c][g] = sum / static_cast<double>(n);
      } else {
        std::vector<std::size_t> counts(table.kind(c).level_count(), 0);
        bool any = false;
        for (auto r : rows) {
          if (table.is_missing(r, c)) continue;
          ++counts[static_cast<std::size_t>(table.raw(r, c))];
          any = true;
        }
        if (any) {
          columns[c][g] = static_cast<double>(
              std::max_element(counts.begin(), counts.end()) - counts.begin());
        }
      }
    }
    ++g;
  }
  return MixedTable(table.schema(), std::move(columns));
}

}  // namespace imputekit
