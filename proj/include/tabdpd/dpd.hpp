#pragma once

#include <algorithm>
#include <compare>
#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabdpd/anchor.hpp"
#include "tabdpd/answer.hpp"
#include "tabdpd/denotation.hpp"
#include "tabdpd/execute.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/rules.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

struct CellKey {
   Category category = Category::Set;
   int size = 0;
   std::string denotation;

   friend auto operator<=>(const CellKey&, const CellKey&) = default;
   friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
   std::size_t operator()(const CellKey& k) const noexcept
   {
      return std::hash<std::string>{}(k.denotation) ^ (static_cast<std::size_t>(k.category) * 0x9e3779b97f4a7c15ULL) ^
             (static_cast<std::size_t>(k.size) << 20);
   }
};

/// Hyperedge into a cell: a rule applied to one or two argument cells.
struct Combo {
   int rule = -1;
   int arg0 = -1;
   int arg1 = -1;
   bool marked = false;

   int arity() const noexcept { return arg1 < 0 ? 1 : 2; }
};

struct Cell {
   CellKey key;
   Denotation denotation;
   FormPtr representative;
   std::vector<FormPtr> base_forms; // size-0 cells only
   std::vector<Combo> combos;
   bool marked = false;
   bool final = false;
};

struct ChartStats {
   std::size_t pass1_cells = 0;
   std::size_t pass2_cells = 0;
   std::size_t pass1_combos = 0;
   std::size_t marked_combos = 0;
   std::size_t finals = 0;
   std::size_t z_size = 0;
   bool truncated = false;
};

/// Hypergraph over cells (category, size, denotation). Holds a pointer to the
/// world it was built on; the world must outlive the chart.
class Chart {
public:
   Chart(const World& w, TargetDenotation y, RuleSet rules, int s_max)
       : world_(&w), target_(std::move(y)), rules_(std::move(rules)), s_max_(s_max)
   {
   }

   const World& world() const noexcept { return *world_; }
   const TargetDenotation& target() const noexcept { return target_; }
   const RuleSet& rules() const noexcept { return rules_; }
   int s_max() const noexcept { return s_max_; }

   const std::deque<Cell>& cells() const noexcept { return cells_; }
   std::deque<Cell>& cells() noexcept { return cells_; }
   const std::vector<int>& finals() const noexcept { return finals_; }

   /// Cell id for a key, or -1.
   int find(const CellKey& k) const
   {
      auto it = index_.find(k);
      return it == index_.end() ? -1 : it->second;
   }

   const std::vector<int>& slot(Category c, int size) const
   {
      static const std::vector<int> none;
      auto it = slots_.find({c, size});
      return it == slots_.end() ? none : it->second;
   }

   int insert(CellKey key, Denotation d, FormPtr rep)
   {
      if (int id = find(key); id >= 0) return id;
      const int id = static_cast<int>(cells_.size());
      Cell c;
      c.key = key;
      c.denotation = std::move(d);
      c.representative = std::move(rep);
      cells_.push_back(std::move(c));
      slots_[{key.category, key.size}].push_back(id);
      index_.emplace(std::move(key), id);
      return id;
   }

   void add_combo(int cell, Combo c)
   {
      cells_[cell].combos.push_back(c);
      ++combos_;
   }

   void set_finals(std::vector<int> f)
   {
      for (int id : f) cells_[id].final = true;
      finals_ = std::move(f);
   }

   std::size_t combo_count() const noexcept { return combos_; }

   std::size_t marked_cells() const
   {
      return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.marked; }));
   }

   std::size_t marked_combos() const
   {
      std::size_t n = 0;
      for (const auto& c : cells_)
         for (const auto& e : c.combos) n += e.marked;
      return n;
   }

private:
   const World* world_;
   TargetDenotation target_;
   RuleSet rules_;
   int s_max_;
   std::deque<Cell> cells_;
   std::unordered_map<CellKey, int, CellKeyHash> index_;
   std::map<std::pair<Category, int>, std::vector<int>> slots_;
   std::vector<int> finals_;
   std::size_t combos_ = 0;
};

namespace detail {

inline void try_combo(Chart& chart, int rule_index, int size, int a, int b)
{
   const Rule& rule = chart.rules().rules()[rule_index];
   const auto& cells = chart.cells();
   const Denotation* dens[2] = {&cells[a].denotation, b >= 0 ? &cells[b].denotation : nullptr};
   std::span<const Denotation* const> args(dens, b >= 0 ? 2 : 1);
   Denotation result = rule.denote(chart.world(), args);
   if (!redundancy_guards(result, rule, args, chart.rules().guards())) return;
   const FormPtr forms[2] = {cells[a].representative, b >= 0 ? cells[b].representative : nullptr};
   const std::span<const FormPtr> fargs(forms, b >= 0 ? 2 : 1);
   if (rule.accepts && !rule.accepts(fargs)) return;
   CellKey key{rule.result, size, denotation_key(result)};
   int id = chart.find(key);
   if (id < 0) {
      std::optional<FormPtr> rep;
      try {
         rep = rule.build(fargs);
      } catch (const Error&) {
         return;
      }
      if (!rep) return;
      id = chart.insert(std::move(key), std::move(result), *rep);
   }
   chart.add_combo(id, Combo{rule_index, a, b, false});
}

} // namespace detail

/// Pass 1: every reachable cell up to s_max with one representative each,
/// recording all combinations, then the final cells (Set, s, y) for s >= 1.
/// Map cells of size s_max are not built since no Set cell can use them.
inline Chart first_pass(const std::vector<Anchor>& anchors, const World& w, const TargetDenotation& y, const RuleSet& rules,
                        int s_max)
{
   Chart chart(w, y, rules, s_max);
   for (const auto& d : base_cells(anchors, w, rules)) {
      Denotation den = execute(d->form, w);
      const int id = chart.insert(CellKey{d->category, 0, denotation_key(den)}, den, d->form);
      chart.cells()[id].base_forms.push_back(d->form);
   }
   const auto& rs = rules.rules();
   for (int s = 1; s <= s_max; ++s) {
      for (int ri = 0; ri < static_cast<int>(rs.size()); ++ri) {
         const Rule& r = rs[ri];
         // Cells that cannot reach a Set cell within s_max are dead.
         if (s + steps_to_set(r.result) > s_max) continue;
         if (r.kind == RuleKind::Unary) {
            for (int a : chart.slot(r.args[0], s - 1)) detail::try_combo(chart, ri, s, a, -1);
         } else if (r.kind == RuleKind::Binary) {
            for (int s1 = 0; s1 <= s - 1; ++s1) {
               const auto left = chart.slot(r.args[0], s1);
               const auto right = chart.slot(r.args[1], s - 1 - s1);
               for (int a : left)
                  for (int b : right)
                     if (!r.commutative || a <= b) detail::try_combo(chart, ri, s, a, b);
            }
         }
      }
   }
   std::vector<int> finals;
   for (int id = 0; id < static_cast<int>(chart.cells().size()); ++id) {
      const Cell& c = chart.cells()[id];
      if (c.key.category == Category::Set && c.key.size >= 1 && y.matches(c.denotation)) finals.push_back(id);
   }
   chart.set_finals(std::move(finals));
   return chart;
}

inline Chart first_pass(const std::string& utterance, const World& w, const TargetDenotation& y, const RuleSet& rules,
                        int s_max)
{
   return first_pass(anchor_entities(utterance, w), w, y, rules, s_max);
}

/// Marks the combos on some hyperpath into a final cell, and their cells.
inline void mark_backward(Chart& chart)
{
   auto& cells = chart.cells();
   std::vector<int> queue;
   for (int f : chart.finals()) {
      if (!cells[f].marked) {
         cells[f].marked = true;
         queue.push_back(f);
      }
   }
   while (!queue.empty()) {
      const int id = queue.back();
      queue.pop_back();
      for (Combo& c : cells[id].combos) {
         c.marked = true;
         for (int arg : {c.arg0, c.arg1}) {
            if (arg >= 0 && !cells[arg].marked) {
               cells[arg].marked = true;
               queue.push_back(arg);
            }
         }
      }
   }
}

struct SecondPassResult {
   std::vector<FormPtr> forms; // sorted by canonical string
   bool truncated = false;
};

inline constexpr std::size_t default_cap = 500000;

/// Pass 2: all forms of every marked cell, built bottom-up from marked
/// combos only; returns the forms of the final cells. `cap` bounds the total
/// number of forms materialized.
inline SecondPassResult second_pass(const Chart& chart, std::size_t cap = default_cap)
{
   const auto& cells = chart.cells();
   const auto& rules = chart.rules().rules();
   std::vector<std::vector<FormPtr>> forms(cells.size());
   std::size_t total = 0;
   bool truncated = false;
   for (std::size_t id = 0; id < cells.size() && !truncated; ++id) {
      const Cell& cell = cells[id];
      if (!cell.marked) continue;
      auto& out = forms[id];
      if (cell.key.size == 0) {
         out = cell.base_forms;
         total += out.size();
         continue;
      }
      for (const Combo& c : cell.combos) {
         if (!c.marked) continue;
         const Rule& rule = rules[c.rule];
         auto emit = [&](std::span<const FormPtr> args) {
            if (total >= cap) {
               truncated = true;
               return;
            }
            if (rule.accepts && !rule.accepts(args)) return;
            std::optional<FormPtr> f;
            try {
               f = rule.build(args);
            } catch (const Error&) {
               return;
            }
            if (!f) return;
            out.push_back(*f);
            ++total;
         };
         const auto& a = forms[c.arg0];
         if (c.arity() == 1) {
            for (const auto& fa : a) {
               emit(std::span<const FormPtr>(&fa, 1));
               if (truncated) break;
            }
            continue;
         }
         const auto& b = forms[c.arg1];
         const bool same = rule.commutative && c.arg0 == c.arg1;
         for (std::size_t i = 0; i < a.size() && !truncated; ++i) {
            for (std::size_t j = same ? i : 0; j < b.size() && !truncated; ++j) {
               const FormPtr pair[2] = {a[i], b[j]};
               emit(pair);
            }
         }
         if (truncated) break;
      }
   }
   SecondPassResult r;
   r.truncated = truncated;
   for (int f : chart.finals()) r.forms.insert(r.forms.end(), forms[f].begin(), forms[f].end());
   std::sort(r.forms.begin(), r.forms.end(), [](const FormPtr& x, const FormPtr& y) { return x->canonical() < y->canonical(); });
   r.forms.erase(std::unique(r.forms.begin(), r.forms.end(), same_form), r.forms.end());
   return r;
}

struct DpdResult {
   Chart chart;
   std::vector<FormPtr> forms;
   ChartStats stats;
};

inline ChartStats chart_stats(const Chart& chart, const SecondPassResult& z)
{
   ChartStats s;
   s.pass1_cells = chart.cells().size();
   s.pass2_cells = chart.marked_cells();
   s.pass1_combos = chart.combo_count();
   s.marked_combos = chart.marked_combos();
   s.finals = chart.finals().size();
   s.z_size = z.forms.size();
   s.truncated = z.truncated;
   return s;
}

/// first_pass, mark_backward and second_pass in sequence.
inline DpdResult run_dpd(const std::vector<Anchor>& anchors, const World& w, const TargetDenotation& y, const RuleSet& rules,
                         int s_max, std::size_t cap = default_cap)
{
   Chart chart = first_pass(anchors, w, y, rules, s_max);
   mark_backward(chart);
   SecondPassResult z = second_pass(chart, cap);
   ChartStats stats = chart_stats(chart, z);
   return DpdResult{std::move(chart), std::move(z.forms), stats};
}

inline DpdResult run_dpd(const std::string& utterance, const World& w, const TargetDenotation& y, const RuleSet& rules,
                         int s_max, std::size_t cap = default_cap)
{
   return run_dpd(anchor_entities(utterance, w), w, y, rules, s_max, cap);
}

inline nlohmann::json to_json(const ChartStats& s)
{
   return {{"pass1_cells", s.pass1_cells}, {"pass2_cells", s.pass2_cells}, {"pass1_combos", s.pass1_combos},
           {"marked_combos", s.marked_combos}, {"finals", s.finals}, {"z_size", s.z_size}, {"truncated", s.truncated}};
}

/// Debug dump of every cell.
inline nlohmann::json dump_chart(const Chart& chart)
{
   nlohmann::json cells = nlohmann::json::array();
   for (const auto& c : chart.cells()) {
      cells.push_back({{"category", std::string(to_string(c.key.category))},
                       {"size", c.key.size},
                       {"denotation", c.key.denotation},
                       {"representative", c.representative->canonical()},
                       {"combos", c.combos.size()},
                       {"marked", c.marked},
                       {"final", c.final}});
   }
   return {{"s_max", chart.s_max()}, {"cells", std::move(cells)}};
}

} // namespace tabdpd
