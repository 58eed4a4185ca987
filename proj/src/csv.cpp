#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "imputekit/rng.hpp"
#include "imputekit/table.hpp"

namespace imputekit {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string where(std::size_t data_row, std::size_t col, const Column& column) {
  return "row " + std::to_string(data_row) + ", column " + std::to_string(col + 1) + " ('" +
         column.name + "')";
}

}  // namespace

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int ch = in.get();
  if (ch == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  while (true) {
    if (ch == std::char_traits<char>::eof()) {
      fields.push_back(std::move(field));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      field += c;
    }
    ch = in.get();
  }
}

void write_csv_field(std::ostream& out, std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

MixedTable parse_csv(std::istream& in, const Schema& schema) {
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) {
    throw Error(ErrorCode::HeaderMismatch, "missing header row");
  }
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  if (fields.size() != schema.size()) {
    throw Error(ErrorCode::HeaderMismatch, "header has " + std::to_string(fields.size()) +
                                               " fields, schema has " +
                                               std::to_string(schema.size()));
  }
  for (std::size_t c = 0; c < fields.size(); ++c) {
    if (fields[c] != schema[c].name) {
      throw Error(ErrorCode::HeaderMismatch, "header column " + std::to_string(c + 1) + " is '" +
                                                 fields[c] + "', schema expects '" +
                                                 schema[c].name + "'");
    }
  }

  const std::size_t p = schema.size();
  std::vector<std::vector<double>> columns(p);
  std::size_t data_row = 0;
  while (read_csv_record(in, fields)) {
    if (p > 1 && fields.size() == 1 && fields[0].empty()) continue;  // blank line
    ++data_row;
    if (fields.size() != p) {
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(data_row) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(p));
    }
    for (std::size_t c = 0; c < p; ++c) {
      const auto& column = schema[c];
      const std::string& token = fields[c];
      bool missing = false;
      for (const auto& m : column.missing_tokens) {
        if (token == m) {
          missing = true;
          break;
        }
      }
      if (missing) {
        columns[c].push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      if (column.kind.is_quantitative()) {
        const auto text = trim(token);
        double value = 0.0;
        const char* first = text.data();
        const char* last = text.data() + text.size();
        if (!text.empty() && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
          throw Error(ErrorCode::UnparseableNumber,
                      where(data_row, c, column) + ": cannot parse '" + token + "' as a number");
        }
        columns[c].push_back(value);
      } else {
        auto level = column.kind.level_index(token);
        if (!level) {
          throw Error(ErrorCode::UnknownLevel,
                      where(data_row, c, column) + ": unknown level '" + token + "'");
        }
        columns[c].push_back(*level);
      }
    }
  }
  return MixedTable(schema, std::move(columns));
}

MixedTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return parse_csv(in, schema);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

void format_csv(const MixedTable& table, std::ostream& out) {
  const auto& schema = table.schema();
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (c > 0) out << ',';
    write_csv_field(out, schema[c].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c > 0) out << ',';
      if (table.is_missing(r, c)) {
        write_csv_field(out, missing_token(schema[c]));
      } else if (table.kind(c).is_quantitative()) {
        out << format_number(table.raw(r, c));
      } else {
        write_csv_field(out, table.kind(c).levels()[static_cast<std::size_t>(table.raw(r, c))]);
      }
    }
    out << '\n';
  }
}

std::string to_csv_string(const MixedTable& table) {
  std::ostringstream out;
  format_csv(table, out);
  return out.str();
}

void write_csv(const MixedTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  format_csv(table, out);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace imputekit
