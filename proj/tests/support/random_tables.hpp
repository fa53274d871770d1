#pragma once

// Seeded random examples: small tables with years, counts, ordinals and
// repeated entity names, a question mentioning some cells, and an answer
// read off a row that matches one of them.

#include <algorithm>
#include <string>
#include <vector>

#include "tabdpd/rng.hpp"
#include "tabdpd/table.hpp"

namespace randtab {

struct RandomExample {
   tabdpd::Table table;
   std::string question;
   std::vector<std::string> answer;
};

inline const std::vector<std::string>& names()
{
   static const std::vector<std::string> v = {"Oslo", "Lima", "Cairo", "Quito", "Perth", "Tokyo", "Dakar", "Bern"};
   return v;
}

inline std::string cell(tabdpd::Rng& rng, int kind, int row)
{
   switch (kind) {
   case 0: return std::to_string(1990 + 2 * row + static_cast<int>(rng.uniform_index(2))); // ascending years
   case 1: return std::to_string(1 + rng.uniform_index(6));
   case 2: {
      static const char* ord[] = {"1st", "2nd", "3rd", "4th"};
      return ord[rng.uniform_index(4)];
   }
   default: return names()[rng.uniform_index(5)];
   }
}

/// rows in [1, max_rows], columns in [2, max_cols].
inline RandomExample random_example(std::uint64_t seed, int max_rows = 5, int max_cols = 4)
{
   tabdpd::Rng rng(seed);
   const int rows = 1 + static_cast<int>(rng.uniform_index(max_rows));
   const int cols = 2 + static_cast<int>(rng.uniform_index(max_cols - 1));
   static const char* headers[] = {"Year", "Count", "Place", "City", "Team"};
   std::vector<int> kinds;
   RandomExample ex;
   for (int c = 0; c < cols; ++c) {
      const int kind = static_cast<int>(rng.uniform_index(4));
      kinds.push_back(kind);
      ex.table.columns.push_back(std::string(headers[kind]) + (c ? std::to_string(c) : ""));
   }
   for (int r = 0; r < rows; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < cols; ++c) row.push_back(cell(rng, kinds[c], r));
      ex.table.rows.push_back(row);
   }
   // Normalize names through the table parser so columns match the library.
   ex.table = tabdpd::parse_table(tabdpd::to_tsv(ex.table), tabdpd::TableFormat::Tsv, "rand" + std::to_string(seed));

   const int r = static_cast<int>(rng.uniform_index(rows));
   const int a = static_cast<int>(rng.uniform_index(cols));
   int b = static_cast<int>(rng.uniform_index(cols - 1));
   if (b >= a) ++b;
   const std::string key = ex.table.rows[r][a];
   ex.question = "which one had " + key;
   if (rng.uniform_index(2) == 0) {
      const int r2 = static_cast<int>(rng.uniform_index(rows));
      ex.question += " after " + ex.table.rows[r2][static_cast<int>(rng.uniform_index(cols))];
   }
   ex.question += "?";
   if (rng.uniform_index(4) == 0) {
      int n = 0;
      for (const auto& row : ex.table.rows) n += row[a] == key;
      ex.answer = {std::to_string(n)};
   } else {
      for (const auto& row : ex.table.rows)
         if (row[a] == key && std::find(ex.answer.begin(), ex.answer.end(), row[b]) == ex.answer.end()) ex.answer.push_back(row[b]);
   }
   return ex;
}

} // namespace randtab
