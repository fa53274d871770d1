#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "tabdpd/anchor.hpp"
#include "tabdpd/execute.hpp"
#include "tabdpd/rng.hpp"
#include "tabdpd/rules.hpp"

namespace tabdpd {

using Scorer = std::function<double(const Derivation&)>;

/// Seeded uniform scores: a hash of (seed, canonical form) mapped to [0, 1).
inline Scorer random_scorer(std::uint64_t seed)
{
   return [seed](const Derivation& d) {
      return static_cast<double>(mix64(fnv1a(d.form->canonical(), mix64(seed))) >> 11) * 0x1.0p-53;
   };
}

struct BeamOptions {
   int s_max = 7;
   int beam = 0; // 0: unbounded
   Scorer scorer;
};

struct BeamItem {
   DerivationPtr derivation;
   Denotation denotation;
};

/// Floating parser: fills cells (category, size) bottom-up from all rules,
/// deduplicates each cell by canonical form and keeps the `beam` best
/// derivations (score descending, then canonical ascending). Returns the
/// Set derivations of sizes 1..s_max sorted by canonical form.
inline std::vector<DerivationPtr> beam_search(const std::vector<Anchor>& anchors, const World& w, const RuleSet& rules,
                                              const BeamOptions& opt)
{
   if (opt.s_max < 1) throw ConfigError("s_max must be at least 1");
   if (opt.beam < 0) throw ConfigError("beam must be positive");
   const Scorer scorer = opt.scorer ? opt.scorer : random_scorer(0);
   std::map<std::pair<Category, int>, std::vector<BeamItem>> cells;
   for (const auto& d : base_cells(anchors, w, rules)) cells[{d->category, 0}].push_back({d, execute(d->form, w)});

   auto cell = [&](Category c, int s) -> const std::vector<BeamItem>& {
      static const std::vector<BeamItem> none;
      auto it = cells.find({c, s});
      return it == cells.end() ? none : it->second;
   };

   std::vector<DerivationPtr> out;
   for (int s = 1; s <= opt.s_max; ++s) {
      std::map<Category, std::vector<BeamItem>> fresh;
      auto combine = [&](const Rule& rule, const BeamItem& a, const BeamItem* b) {
         const Denotation* dens[2] = {&a.denotation, b ? &b->denotation : nullptr};
         std::span<const Denotation* const> args(dens, b ? 2 : 1);
         Denotation result = rule.denote(w, args);
         if (!redundancy_guards(result, rule, args, rules.guards())) return;
         const DerivationPtr kids[2] = {a.derivation, b ? b->derivation : nullptr};
         DerivationPtr d = apply_or_null(rule, std::span<const DerivationPtr>(kids, b ? 2 : 1));
         if (d) fresh[rule.result].push_back({std::move(d), std::move(result)});
      };
      for (const Rule& r : rules.rules()) {
         if (s + steps_to_set(r.result) > opt.s_max) continue;
         if (r.kind == RuleKind::Unary) {
            for (const auto& a : cell(r.args[0], s - 1)) combine(r, a, nullptr);
         } else if (r.kind == RuleKind::Binary) {
            for (int s1 = 0; s1 <= s - 1; ++s1) {
               const auto& left = cell(r.args[0], s1);
               const auto& right = cell(r.args[1], s - 1 - s1);
               for (std::size_t i = 0; i < left.size(); ++i)
                  for (std::size_t j = 0; j < right.size(); ++j)
                     if (!r.commutative || s1 != s - 1 - s1 || i <= j) combine(r, left[i], &right[j]);
            }
         }
      }
      for (auto& [cat, items] : fresh) {
         std::unordered_set<std::string> seen;
         std::vector<std::pair<double, BeamItem>> scored;
         for (auto& it : items)
            if (seen.insert(it.derivation->form->canonical()).second) scored.emplace_back(scorer(*it.derivation), std::move(it));
         std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second.derivation->form->canonical() < y.second.derivation->form->canonical();
         });
         if (opt.beam > 0 && scored.size() > static_cast<std::size_t>(opt.beam)) scored.resize(opt.beam);
         auto& dst = cells[{cat, s}];
         for (auto& [_, it] : scored) {
            if (cat == Category::Set) out.push_back(it.derivation);
            dst.push_back(std::move(it));
         }
      }
   }
   std::sort(out.begin(), out.end(), [](const DerivationPtr& a, const DerivationPtr& b) {
      return a->form->canonical() < b->form->canonical();
   });
   out.erase(std::unique(out.begin(), out.end(),
                         [](const DerivationPtr& a, const DerivationPtr& b) { return same_form(a->form, b->form); }),
             out.end());
   return out;
}

inline std::vector<DerivationPtr> beam_search(const std::string& utterance, const World& w, const RuleSet& rules,
                                              const BeamOptions& opt)
{
   return beam_search(anchor_entities(utterance, w), w, rules, opt);
}

/// Beam output restricted to forms consistent with a target answer.
inline std::vector<FormPtr> consistent_forms(const std::vector<DerivationPtr>& ds, const World& w, const TargetDenotation& y)
{
   std::vector<FormPtr> out;
   for (const auto& d : ds)
      if (y.matches(execute(d->form, w))) out.push_back(d->form);
   return out;
}

} // namespace tabdpd
