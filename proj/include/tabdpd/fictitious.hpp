#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabdpd/anchor.hpp"
#include "tabdpd/error.hpp"
#include "tabdpd/io.hpp"
#include "tabdpd/rng.hpp"
#include "tabdpd/table.hpp"
#include "tabdpd/text.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

struct SortedColumn {
   std::string column;
   bool descending = false;
   bool by_date = false;

   friend bool operator==(const SortedColumn&, const SortedColumn&) = default;
};

/// Original world plus k fictitious worlds sharing its columns, its sorted
/// columns and the question's anchored entities.
struct WorldSet {
   WorldPtr original;
   std::vector<WorldPtr> worlds;
   std::uint64_t seed = 0;
   std::vector<std::string> anchored;                        // canonical value text
   std::map<std::string, std::vector<std::string>> required; // column -> cell texts to keep
   std::vector<SortedColumn> sorted;

   int k() const noexcept { return static_cast<int>(worlds.size()); }
};

namespace detail {

/// Sort key of a cell: its first number, or its date.
struct CellKeyValue {
   std::optional<double> number;
   std::optional<Date> date;
};

inline std::optional<int> compare_cells(const CellKeyValue& a, const CellKeyValue& b, bool by_date)
{
   if (!by_date) return a.number < b.number ? -1 : (*a.number > *b.number ? 1 : 0);
   auto c = compare_dates(*a.date, *b.date);
   if (!c) return std::nullopt;
   return *c < 0 ? -1 : (*c > 0 ? 1 : 0);
}

inline std::vector<CellKeyValue> cell_keys(const std::vector<std::string>& cells)
{
   std::vector<CellKeyValue> out;
   for (const auto& c : cells) {
      auto n = normalize_cell(c);
      out.push_back({n.number, n.date});
   }
   return out;
}

/// Direction of a monotone sequence (nullopt if not monotone). Constant
/// sequences count as ascending.
inline std::optional<bool> monotone_descending(const std::vector<CellKeyValue>& keys, bool by_date)
{
   bool up = true, down = true;
   for (std::size_t i = 1; i < keys.size(); ++i) {
      auto c = compare_cells(keys[i - 1], keys[i], by_date);
      if (!c) return std::nullopt;
      up = up && *c <= 0;
      down = down && *c >= 0;
   }
   if (up) return false;
   if (down) return true;
   return std::nullopt;
}

} // namespace detail

/// A column is sorted when at least two cells exist, every cell has a number
/// (or every cell a date) and these are non-strictly monotone.
inline std::optional<SortedColumn> detect_sorted(const Table& t, std::size_t c)
{
   const auto cells = t.column(c);
   if (cells.size() < 2) return std::nullopt;
   const auto keys = detail::cell_keys(cells);
   for (bool by_date : {false, true}) {
      const bool all = std::all_of(keys.begin(), keys.end(), [&](const auto& k) { return by_date ? k.date.has_value() : k.number.has_value(); });
      if (!all) continue;
      if (auto desc = detail::monotone_descending(keys, by_date)) return SortedColumn{t.columns[c], *desc, by_date};
      return std::nullopt;
   }
   return std::nullopt;
}

inline bool is_sorted_as(const std::vector<std::string>& cells, const SortedColumn& s)
{
   const auto keys = detail::cell_keys(cells);
   for (const auto& k : keys)
      if (s.by_date ? !k.date : !k.number) return false;
   for (std::size_t i = 1; i < keys.size(); ++i) {
      auto c = detail::compare_cells(keys[i - 1], keys[i], s.by_date);
      if (!c || (s.descending ? *c < 0 : *c > 0)) return false;
   }
   return true;
}

/// For every anchored entity, the first cell of each column that denotes it
/// (directly or as a list item).
inline std::map<std::string, std::vector<std::string>> required_cells(const Table& t, const ValueSet& anchored)
{
   std::map<std::string, std::vector<std::string>> out;
   for (const Value& v : anchored) {
      if (!v.is_entity()) continue;
      for (std::size_t c = 0; c < t.num_columns(); ++c) {
         const auto cells = t.column(c);
         auto hit = std::find_if(cells.begin(), cells.end(), [&](const std::string& s) { return normalize_entity(s) == v.entity_name(); });
         if (hit == cells.end()) {
            hit = std::find_if(cells.begin(), cells.end(), [&](const std::string& s) {
               for (const auto& p : split_parts(s))
                  if (normalize_entity(p) == v.entity_name()) return true;
               return false;
            });
         }
         if (hit == cells.end()) continue;
         auto& req = out[t.columns[c]];
         if (std::find(req.begin(), req.end(), *hit) == req.end()) req.push_back(*hit);
      }
   }
   return out;
}

/// One resampled column: a permutation when the original cells are all
/// distinct, otherwise draws with replacement; then required cells are
/// written over uniformly chosen free positions and sorted columns re-sorted.
inline std::vector<std::string> resample_column(const std::vector<std::string>& cells, const std::vector<std::string>& required,
                                                const std::optional<SortedColumn>& sorted, const std::string& name, Rng& rng)
{
   const std::size_t n = cells.size();
   if (required.size() > n)
      throw ConfigError("column " + name + " cannot hold " + std::to_string(required.size()) + " anchored values in " +
                        std::to_string(n) + " rows");
   std::vector<std::string> out;
   const bool distinct = std::set<std::string>(cells.begin(), cells.end()).size() == n;
   if (distinct) {
      out = cells;
      rng.shuffle(out);
   } else {
      for (std::size_t i = 0; i < n; ++i) out.push_back(cells[rng.uniform_index(n)]);
   }
   std::vector<char> pinned(n, 0);
   for (const auto& r : required) {
      auto it = std::find(out.begin(), out.end(), r);
      if (it != out.end() && !pinned[it - out.begin()]) {
         pinned[it - out.begin()] = 1;
         continue;
      }
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
         if (!pinned[i]) free.push_back(i);
      const std::size_t at = free[rng.uniform_index(free.size())];
      out[at] = r;
      pinned[at] = 1;
   }
   if (sorted) {
      const auto keys = detail::cell_keys(out);
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
         auto c = detail::compare_cells(keys[a], keys[b], sorted->by_date);
         if (!c) return false;
         return sorted->descending ? *c > 0 : *c < 0;
      });
      std::vector<std::string> re;
      for (std::size_t i : order) re.push_back(out[i]);
      out = std::move(re);
   }
   return out;
}

inline Table resample_table(const Table& t, const std::map<std::string, std::vector<std::string>>& required,
                            const std::vector<SortedColumn>& sorted, Rng& rng, std::string id)
{
   Table out;
   out.id = std::move(id);
   out.columns = t.columns;
   out.rows.assign(t.num_rows(), std::vector<std::string>(t.num_columns()));
   static const std::vector<std::string> none;
   for (std::size_t c = 0; c < t.num_columns(); ++c) {
      const std::string& name = t.columns[c];
      auto req = required.find(name);
      std::optional<SortedColumn> s;
      for (const auto& sc : sorted)
         if (sc.column == name) s = sc;
      auto col = resample_column(t.column(c), req == required.end() ? none : req->second, s, name, rng);
      for (std::size_t r = 0; r < t.num_rows(); ++r) out.rows[r][c] = std::move(col[r]);
   }
   return out;
}

inline WorldSet generate_worlds(WorldPtr original, const std::vector<Anchor>& anchors, int k, std::uint64_t seed)
{
   if (k <= 0) throw ConfigError("k must be positive");
   WorldSet ws;
   ws.original = original;
   ws.seed = seed;
   const Table& t = original->table();
   const ValueSet anchored = anchored_values(anchors);
   for (const Value& v : anchored) ws.anchored.push_back(to_string(v));
   ws.required = required_cells(t, anchored);
   for (std::size_t c = 0; c < t.num_columns(); ++c)
      if (auto s = detect_sorted(t, c)) ws.sorted.push_back(*s);
   for (int i = 0; i < k; ++i) {
      Rng rng = stream(seed, "worlds", static_cast<std::uint64_t>(i));
      ws.worlds.push_back(make_world(resample_table(t, ws.required, ws.sorted, rng, "w" + std::to_string(i))));
   }
   return ws;
}

inline WorldSet generate_worlds(WorldPtr original, const std::string& utterance, int k, std::uint64_t seed)
{
   auto anchors = anchor_entities(utterance, *original);
   return generate_worlds(std::move(original), anchors, k, seed);
}

/// Fraction of the original's non-row nodes that also occur in `w`.
inline double value_coverage(const World& original, const World& w)
{
   std::size_t total = 0, hit = 0;
   for (const Value& v : original.nodes()) {
      if (v.is_row()) continue;
      ++total;
      hit += contains(w.nodes(), v);
   }
   return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

/// Violations of the world-set invariants: same columns, anchored entities
/// present, sorted columns still sorted. Empty when all hold.
inline std::vector<std::string> check_world_set(const WorldSet& ws)
{
   std::vector<std::string> out;
   const Table& orig = ws.original->table();
   for (const auto& w : ws.worlds) {
      const Table& t = w->table();
      if (t.columns != orig.columns) out.push_back(w->id() + ": columns differ");
      for (const auto& a : ws.anchored) {
         const Value v = parse_value(a);
         if (v.is_entity() && !contains(w->nodes(), v)) out.push_back(w->id() + ": missing anchored " + a);
      }
      for (const auto& s : ws.sorted) {
         auto it = std::find(t.columns.begin(), t.columns.end(), s.column);
         if (it == t.columns.end()) continue;
         if (!is_sorted_as(t.column(static_cast<std::size_t>(it - t.columns.begin())), s))
            out.push_back(w->id() + ": column " + s.column + " not sorted");
      }
   }
   return out;
}

inline nlohmann::json manifest(const WorldSet& ws)
{
   nlohmann::json sorted = nlohmann::json::array();
   for (const auto& s : ws.sorted)
      sorted.push_back({{"column", s.column}, {"direction", s.descending ? "descending" : "ascending"},
                        {"by", s.by_date ? "date" : "number"}});
   nlohmann::json worlds = nlohmann::json::array();
   for (int i = 0; i < ws.k(); ++i)
      worlds.push_back({{"id", i}, {"file", "w" + std::to_string(i) + ".tsv"},
                        {"value_coverage", value_coverage(*ws.original, *ws.worlds[i])}});
   return {{"seed", ws.seed},       {"k", ws.k()},         {"num_rows", ws.original->num_rows()},
           {"columns", ws.original->columns()}, {"anchored", ws.anchored}, {"required", ws.required},
           {"sorted_columns", sorted}, {"worlds", worlds}};
}

inline void save_world_set(const WorldSet& ws, const std::filesystem::path& dir)
{
   std::filesystem::create_directories(dir);
   for (int i = 0; i < ws.k(); ++i) write_atomic(dir / ("w" + std::to_string(i) + ".tsv"), to_tsv(ws.worlds[i]->table()));
   write_atomic(dir / "manifest.json", manifest(ws).dump(2) + "\n");
}

inline WorldSet load_world_set(WorldPtr original, const std::filesystem::path& dir)
{
   const auto m = nlohmann::json::parse(read_file((dir / "manifest.json").string()));
   WorldSet ws;
   ws.original = std::move(original);
   ws.seed = m.at("seed").get<std::uint64_t>();
   ws.anchored = m.at("anchored").get<std::vector<std::string>>();
   ws.required = m.at("required").get<std::map<std::string, std::vector<std::string>>>();
   for (const auto& s : m.at("sorted_columns"))
      ws.sorted.push_back({s.at("column").get<std::string>(), s.at("direction") == "descending", s.at("by") == "date"});
   for (const auto& w : m.at("worlds")) {
      Table t = load_table((dir / w.at("file").get<std::string>()).string());
      t.id = "w" + std::to_string(w.at("id").get<int>());
      ws.worlds.push_back(make_world(std::move(t)));
   }
   return ws;
}

} // namespace tabdpd
