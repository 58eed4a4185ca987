#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "imputekit/error.hpp"

namespace imputekit {

class ColumnKind {
 public:
  static ColumnKind quantitative() { return ColumnKind(); }
  /// Throws SchemaInvalid unless there are at least two distinct levels.
  static ColumnKind categorical(std::vector<std::string> levels, bool ordered = false);

  bool is_quantitative() const noexcept { return levels_.empty(); }
  bool is_categorical() const noexcept { return !levels_.empty(); }
  bool ordered() const noexcept { return ordered_; }
  const std::vector<std::string>& levels() const noexcept { return levels_; }
  std::size_t level_count() const noexcept { return levels_.size(); }
  std::optional<std::uint32_t> level_index(std::string_view name) const;

  bool operator==(const ColumnKind&) const = default;

 private:
  ColumnKind() = default;
  std::vector<std::string> levels_;
  bool ordered_ = false;
};

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::quantitative();
  std::vector<std::string> missing_tokens{"NA", ""};

  bool operator==(const Column&) const = default;
};

class Schema {
 public:
  Schema() = default;
  /// Validates unique names and non-empty missing-token lists.
  explicit Schema(std::vector<Column> columns);

  static Schema from_json(std::string_view text);
  static Schema load(const std::filesystem::path& path);
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Like index_of but throws UnknownColumn.
  std::size_t require(std::string_view name) const;

  Schema select(std::span<const std::size_t> indices) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Column> columns_;
};

struct Missing {
  bool operator==(const Missing&) const = default;
};
struct Level {
  std::uint32_t index;
  bool operator==(const Level&) const = default;
};
using Cell = std::variant<Missing, double, Level>;

/// Column-major table of mixed cells. Internally each cell is one double:
/// NaN for missing, the value for quantitative columns, the level index for
/// categorical ones. Algorithms work on that raw encoding through column().
class MixedTable {
 public:
  MixedTable() = default;
  /// All cells missing.
  MixedTable(Schema schema, std::size_t n_rows);
  /// Raw-encoded columns; validated against the schema.
  MixedTable(Schema schema, std::vector<std::vector<double>> columns);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return schema_.size(); }
  const Schema& schema() const noexcept { return schema_; }
  const ColumnKind& kind(std::size_t c) const { return schema_[c].kind; }
  const std::string& name(std::size_t c) const { return schema_[c].name; }

  std::span<const double> column(std::size_t c) const { return data_[c]; }
  const std::vector<std::vector<double>>& raw_columns() const noexcept { return data_; }
  double raw(std::size_t r, std::size_t c) const { return data_[c][r]; }
  bool is_missing(std::size_t r, std::size_t c) const { return std::isnan(data_[c][r]); }

  Cell cell(std::size_t r, std::size_t c) const;
  /// Throws InvalidArgument when the cell does not fit the column kind.
  void set(std::size_t r, std::size_t c, Cell value);

  std::size_t missing_count() const;
  std::size_t missing_count(std::size_t c) const;
  bool has_missing() const { return missing_count() > 0; }

  MixedTable select_columns(std::span<const std::size_t> indices) const;
  MixedTable select_rows(std::span<const std::size_t> indices) const;

  /// Same schema and identical cells (missing == missing).
  bool operator==(const MixedTable& other) const;

 private:
  void validate_column(std::size_t c) const;

  Schema schema_;
  std::size_t n_rows_ = 0;
  std::vector<std::vector<double>> data_;
};

/// Token written for a missing cell in column `column`.
const std::string& missing_token(const Column& column);

// --- CSV -------------------------------------------------------------------

MixedTable parse_csv(std::istream& in, const Schema& schema);
MixedTable load_csv(const std::filesystem::path& path, const Schema& schema);
void format_csv(const MixedTable& table, std::ostream& out);
std::string to_csv_string(const MixedTable& table);
void write_csv(const MixedTable& table, const std::filesystem::path& path);

/// Splits one RFC-4180 record. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);
void write_csv_field(std::ostream& out, std::string_view field);

// --- Missing-value bookkeeping -----------------------------------------------

enum class Provenance { Original, Amputed };
const char* to_string(Provenance p) noexcept;

struct MaskEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Provenance provenance = Provenance::Original;

  auto operator<=>(const MaskEntry&) const = default;
};

class MissingMask {
 public:
  MissingMask() = default;
  /// Every entry must be a missing cell of `table`; duplicates are rejected.
  MissingMask(const MixedTable& table, std::vector<MaskEntry> entries);

  /// All missing cells of the table, tagged Original.
  static MissingMask original(const MixedTable& table);

  const std::vector<MaskEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t count(Provenance p) const;
  bool contains(std::size_t row, std::size_t col) const;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static MissingMask read_csv(const std::filesystem::path& path, const MixedTable& table);

  bool operator==(const MissingMask&) const = default;

 private:
  std::vector<MaskEntry> entries_;  // sorted by (row, col)
};

// --- Missingness and preprocessing ------------------------------------------

struct Missingness {
  std::vector<double> per_column;
  double overall = 0.0;
};

Missingness column_missingness(const MixedTable& table);

/// k-th entry: missing fraction of the sub-table made of the first k listed columns.
std::vector<double> cumulative_missingness(const MixedTable& table,
                                           std::span<const std::string> column_order);

struct DropResult {
  MixedTable table;
  std::vector<std::string> dropped;
};

/// Removes every column whose missing fraction exceeds `threshold`.
DropResult drop_sparse_columns(const MixedTable& table, double threshold);

/// One row per observed key level (in level order). Quantitative columns
/// become the mean of observed values in the group, categorical columns the
/// group mode (ties to the lowest level index). Rows with a missing key are
/// ignored.
MixedTable group_mean_aggregate(const MixedTable& table, std::string_view key_column);

}  // namespace imputekit
