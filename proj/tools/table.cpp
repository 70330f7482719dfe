#include "table.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace glmphase::cli {

namespace {

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double x) const { return format_real(x); }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(bool x) const { return x ? "true" : "false"; }
    std::string operator()(const std::string& x) const { return x; }
  };
  return std::visit(Visitor{}, c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(double x) const {
      return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
    }
    nlohmann::ordered_json operator()(std::int64_t x) const { return x; }
    nlohmann::ordered_json operator()(bool x) const { return x; }
    nlohmann::ordered_json operator()(const std::string& x) const { return x; }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw std::logic_error("ResultTable: row has " + std::to_string(row.size()) +
                           " cells, expected " + std::to_string(columns_.size()));
  for (std::size_t j = 0; j < row.size(); ++j)
    if (!columns_[j].optional && std::holds_alternative<std::monostate>(row[j]))
      throw std::logic_error("ResultTable: required column '" + columns_[j].name + "' is empty");
  rows_.push_back(std::move(row));
}

void ResultTable::add_provenance(std::string key, std::string value) {
  provenance_.emplace_back(std::move(key), std::move(value));
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const ResultTable& table) {
  for (const auto& [k, v] : table.provenance()) out << "# " << k << ": " << v << '\n';
  const auto& cols = table.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << quote_csv(cols[j].name);
  out << '\n';
  for (const auto& row : table.rows()) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << quote_csv(cell_text(row[j]));
    out << '\n';
  }
}

void write_json(std::ostream& out, const ResultTable& table) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : table.provenance()) meta[k] = v;
  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  for (const auto& c : table.columns()) columns.push_back(c.name);
  meta["columns"] = columns;
  doc["metadata"] = meta;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows()) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < row.size(); ++j) obj[table.columns()[j].name] = cell_json(row[j]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = rows;
  out << doc.dump(2) << '\n';
}

}  // namespace glmphase::cli
