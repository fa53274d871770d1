#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tabdpd/error.hpp"
#include "tabdpd/text.hpp"

namespace tabdpd {

enum class TableFormat { Csv, Tsv };

/// Rows are stored row-major; every row has exactly columns.size() cells.
/// Column names are normalized and unique.
struct Table {
   std::string id;
   std::vector<std::string> columns;
   std::vector<std::vector<std::string>> rows;

   std::size_t num_rows() const noexcept { return rows.size(); }
   std::size_t num_columns() const noexcept { return columns.size(); }

   std::vector<std::string> column(std::size_t c) const
   {
      std::vector<std::string> out;
      out.reserve(rows.size());
      for (const auto& r : rows) out.push_back(r[c]);
      return out;
   }

   friend bool operator==(const Table&, const Table&) = default;
};

namespace detail {

// RFC 4180 records: quoted fields may contain separators, doubled quotes and
// newlines.
inline std::vector<std::vector<std::string>> split_csv(std::string_view text)
{
   std::vector<std::vector<std::string>> records;
   std::vector<std::string> rec;
   std::string field;
   bool quoted = false;
   bool any = false;
   for (std::size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (quoted) {
         if (c == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
               field.push_back('"');
               ++i;
            } else {
               quoted = false;
            }
         } else {
            field.push_back(c);
         }
         continue;
      }
      if (c == '"') {
         quoted = true;
         any = true;
      } else if (c == ',') {
         rec.push_back(std::move(field));
         field.clear();
         any = true;
      } else if (c == '\n' || c == '\r') {
         if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
         if (any || !field.empty()) {
            rec.push_back(std::move(field));
            records.push_back(std::move(rec));
         }
         rec.clear();
         field.clear();
         any = false;
      } else {
         field.push_back(c);
         any = true;
      }
   }
   if (quoted) throw TableError("unterminated quoted field");
   if (any || !field.empty()) {
      rec.push_back(std::move(field));
      records.push_back(std::move(rec));
   }
   return records;
}

inline std::vector<std::vector<std::string>> split_tsv(std::string_view text)
{
   std::vector<std::vector<std::string>> records;
   std::size_t start = 0;
   while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) {
         std::vector<std::string> rec;
         std::size_t p = 0;
         while (true) {
            std::size_t q = line.find('\t', p);
            rec.emplace_back(line.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p));
            if (q == std::string_view::npos) break;
            p = q + 1;
         }
         records.push_back(std::move(rec));
      }
      if (end == text.size()) break;
      start = end + 1;
   }
   return records;
}

} // namespace detail

/// Parse delimited text whose first record is the header.
inline Table parse_table(std::string_view raw, TableFormat format, std::string id = {})
{
   auto records = format == TableFormat::Csv ? detail::split_csv(raw) : detail::split_tsv(raw);
   if (records.empty()) throw TableError("empty header");
   std::vector<std::string> header;
   bool all_blank = true;
   for (const auto& h : records.front()) {
      header.push_back(trim(h));
      if (!header.back().empty()) all_blank = false;
   }
   if (all_blank) throw TableError("empty header");
   if (records.size() < 2) throw TableError("no data rows");

   Table t;
   t.id = std::move(id);
   t.columns = normalize_column_names(header);
   for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != header.size()) throw TableError("ragged row " + std::to_string(r));
      std::vector<std::string> row;
      row.reserve(header.size());
      for (const auto& cell : records[r]) row.push_back(trim(cell));
      t.rows.push_back(std::move(row));
   }
   return t;
}

inline TableFormat format_for_path(const std::string& path)
{
   auto dot = path.rfind('.');
   if (dot != std::string::npos && path.substr(dot) == ".csv") return TableFormat::Csv;
   return TableFormat::Tsv;
}

inline std::string read_file(const std::string& path)
{
   std::ifstream in(path, std::ios::binary);
   if (!in) throw IoError("cannot read " + path);
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

/// Reads .csv as CSV and anything else as TSV; the id is the path.
inline Table load_table(const std::string& path)
{
   return parse_table(read_file(path), format_for_path(path), path);
}

/// Tabs and newlines inside cells are replaced by spaces.
inline std::string to_tsv(const Table& t)
{
   auto clean = [](std::string s) {
      for (char& c : s)
         if (c == '\t' || c == '\n' || c == '\r') c = ' ';
      return s;
   };
   std::string out;
   for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "\t" : "") + clean(t.columns[c]);
   out += '\n';
   for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "\t" : "") + clean(row[c]);
      out += '\n';
   }
   return out;
}

} // namespace tabdpd
