#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <tuple>
#include <utility>
#include <vector>

#include "tabdpd/relation.hpp"
#include "tabdpd/table.hpp"
#include "tabdpd/text.hpp"
#include "tabdpd/value.hpp"

namespace tabdpd {

/// Edge set of one relation with adjacency in both directions.
class EdgeSet {
public:
   void add(const Value& src, const Value& dst)
   {
      forward_[src].push_back(dst);
      backward_[dst].push_back(src);
      pairs_.emplace_back(src, dst);
   }

   void seal()
   {
      for (auto& [_, s] : forward_) canonicalize(s);
      for (auto& [_, s] : backward_) canonicalize(s);
      std::sort(pairs_.begin(), pairs_.end());
      pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
   }

   /// Targets reachable from `src`.
   const ValueSet& image(const Value& src) const { return lookup(forward_, src); }
   /// Sources pointing at `dst`.
   const ValueSet& preimage(const Value& dst) const { return lookup(backward_, dst); }

   const std::vector<std::pair<Value, Value>>& pairs() const noexcept { return pairs_; }
   std::size_t size() const noexcept { return pairs_.size(); }

private:
   using Adjacency = std::unordered_map<Value, ValueSet, ValueHash>;

   static const ValueSet& lookup(const Adjacency& adj, const Value& v)
   {
      static const ValueSet empty;
      auto it = adj.find(v);
      return it == adj.end() ? empty : it->second;
   }

   Adjacency forward_;
   Adjacency backward_;
   std::vector<std::pair<Value, Value>> pairs_;
};

/// Directed graph built from a table: row nodes, cell entity nodes, column
/// edges, Next/Index edges and Number/Num2/Date/Part normalization edges.
/// Immutable after construction.
class World {
public:
   const Table& table() const noexcept { return table_; }
   const std::string& id() const noexcept { return table_.id; }
   int num_rows() const noexcept { return static_cast<int>(table_.num_rows()); }
   const std::vector<std::string>& columns() const noexcept { return table_.columns; }

   const ValueSet& nodes() const noexcept { return nodes_; }
   const ValueSet& rows() const noexcept { return rows_; }

   bool has_column(const std::string& name) const { return column_index_.count(name) != 0; }

   /// Edge set of a non-comparison relation (direction ignored), or nullptr
   /// for an unknown column.
   const EdgeSet* edges(const Relation& r) const
   {
      if (r.kind() == RelKind::Column) {
         auto it = column_index_.find(r.column_name());
         return it == column_index_.end() ? nullptr : &column_edges_[it->second];
      }
      if (r.kind() == RelKind::Compare) return nullptr;
      return &builtin_edges_[static_cast<std::size_t>(r.kind()) - 1];
   }

   /// Every edge as (relation token, source, target), sorted.
   std::vector<std::tuple<std::string, Value, Value>> edge_list() const
   {
      std::vector<std::tuple<std::string, Value, Value>> out;
      for (std::size_t c = 0; c < column_edges_.size(); ++c)
         for (const auto& [s, d] : column_edges_[c].pairs()) out.emplace_back(table_.columns[c], s, d);
      for (RelKind k : builtin_relations)
         for (const auto& [s, d] : builtin_edges_[static_cast<std::size_t>(k) - 1].pairs())
            out.emplace_back(std::string(builtin_token(k)), s, d);
      std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
         if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
         if (!(std::get<1>(a) == std::get<1>(b))) return std::get<1>(a) < std::get<1>(b);
         return std::get<2>(a) < std::get<2>(b);
      });
      return out;
   }

   friend World build_world(Table t);

private:
   Table table_;
   ValueSet nodes_;
   ValueSet rows_;
   std::map<std::string, std::size_t> column_index_;
   std::vector<EdgeSet> column_edges_;
   std::array<EdgeSet, builtin_relations.size()> builtin_edges_;
};

inline World build_world(Table t)
{
   World w;
   w.table_ = std::move(t);
   const Table& tab = w.table_;
   const int n = static_cast<int>(tab.num_rows());
   auto& builtin = w.builtin_edges_;
   auto slot = [](RelKind k) { return static_cast<std::size_t>(k) - 1; };
   std::vector<Value> nodes;

   w.column_edges_.resize(tab.num_columns());
   for (std::size_t c = 0; c < tab.num_columns(); ++c) w.column_index_[tab.columns[c]] = c;

   for (int i = 0; i < n; ++i) {
      const Value row = Value::row(i);
      nodes.push_back(row);
      w.rows_.push_back(row);
      builtin[slot(RelKind::Index)].add(row, Value::number(i));
      nodes.push_back(Value::number(i));
      if (i + 1 < n) builtin[slot(RelKind::Next)].add(row, Value::row(i + 1));
   }

   for (std::size_t c = 0; c < tab.num_columns(); ++c) {
      for (int i = 0; i < n; ++i) {
         const std::string& text = tab.rows[i][c];
         const Value cell = Value::entity(normalize_entity(text));
         w.column_edges_[c].add(Value::row(i), cell);
         nodes.push_back(cell);
         const CellNormalization norm = normalize_cell(text);
         if (norm.number) {
            builtin[slot(RelKind::Number)].add(cell, Value::number(*norm.number));
            nodes.push_back(Value::number(*norm.number));
         }
         if (norm.num2) {
            builtin[slot(RelKind::Num2)].add(cell, Value::number(*norm.num2));
            nodes.push_back(Value::number(*norm.num2));
         }
         if (norm.date) {
            builtin[slot(RelKind::Date)].add(cell, Value(*norm.date));
            nodes.push_back(Value(*norm.date));
         }
         for (const auto& part : norm.parts) {
            const Value p = Value::entity(normalize_entity(part));
            builtin[slot(RelKind::Part)].add(cell, p);
            nodes.push_back(p);
         }
      }
   }

   for (auto& e : w.column_edges_) e.seal();
   for (auto& e : builtin) e.seal();
   canonicalize(nodes);
   w.nodes_ = std::move(nodes);
   return w;
}

/// Debug dump: one `REL <relation> <src> <dst>` line per edge.
inline std::string export_world(const World& w)
{
   std::string out;
   for (const auto& [rel, s, d] : w.edge_list()) out += "REL " + rel + " " + to_string(s) + " " + to_string(d) + "\n";
   return out;
}

using WorldPtr = std::shared_ptr<const World>;

inline WorldPtr make_world(Table t) { return std::make_shared<const World>(build_world(std::move(t))); }

} // namespace tabdpd
