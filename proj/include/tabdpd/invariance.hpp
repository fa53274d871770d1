#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabdpd/execute.hpp"
#include "tabdpd/rng.hpp"
#include "tabdpd/rules.hpp"

namespace tabdpd {

struct InvarianceReport {
   bool passed = true;
   int trials = 0; // applicable trials actually run
   std::optional<std::string> counterexample;
};

/// Derivations of sizes 0..max_size over a world, built with `rules` without
/// redundancy guards, grouped by (category, denotation key). Literals come
/// from every non-row node of the world.
class DerivationPool {
public:
   DerivationPool(const World& w, const RuleSet& rules, int max_size = 2, std::size_t per_size_limit = 4000,
                  std::uint64_t seed = 0)
   {
      Rng rng(seed);
      std::vector<Anchor> anchors;
      for (const Value& v : w.nodes())
         if (!v.is_row()) anchors.push_back(Anchor{0, 0, v, 1.0});
      std::vector<std::vector<FormPtr>> by_size(max_size + 1);
      for (const auto& d : base_cells(anchors, w, rules)) by_size[0].push_back(d->form);
      for (int s = 1; s <= max_size; ++s) {
         std::vector<FormPtr> fresh;
         for (const Rule& r : rules.rules()) {
            if (!r.compositional()) continue;
            auto try_build = [&](std::span<const FormPtr> args) {
               for (std::size_t i = 0; i < args.size(); ++i)
                  if (args[i]->category() != r.args[i]) return;
               if (r.accepts && !r.accepts(args)) return;
               try {
                  if (auto f = r.build(args)) fresh.push_back(*f);
               } catch (const Error&) {
               }
            };
            if (r.kind == RuleKind::Unary) {
               for (const auto& a : by_size[s - 1]) try_build(std::span<const FormPtr>(&a, 1));
            } else {
               for (int s1 = 0; s1 <= s - 1; ++s1)
                  for (const auto& a : by_size[s1])
                     for (const auto& b : by_size[s - 1 - s1]) {
                        const FormPtr pair[2] = {a, b};
                        try_build(pair);
                     }
            }
         }
         rng.shuffle(fresh);
         if (fresh.size() > per_size_limit) fresh.resize(per_size_limit);
         by_size[s] = std::move(fresh);
      }
      for (const auto& level : by_size) {
         for (const auto& f : level) {
            Entry e{f, execute(f, w)};
            groups_[{f->category(), denotation_key(e.denotation)}].push_back(static_cast<int>(entries_.size()));
            entries_.push_back(std::move(e));
         }
      }
   }

   struct Entry {
      FormPtr form;
      Denotation denotation;
   };

   const std::vector<Entry>& entries() const noexcept { return entries_; }

   /// Entry ids sharing category and denotation with entry `i`.
   const std::vector<int>& equivalent(int i) const
   {
      return groups_.at({entries_[i].form->category(), denotation_key(entries_[i].denotation)});
   }

   std::vector<int> of_category(Category c) const
   {
      std::vector<int> out;
      for (int i = 0; i < static_cast<int>(entries_.size()); ++i)
         if (entries_[i].form->category() == c) out.push_back(i);
      return out;
   }

private:
   std::vector<Entry> entries_;
   std::map<std::pair<Category, std::string>, std::vector<int>> groups_;
};

/// Samples argument tuples z and z' with pairwise equal denotations, builds
/// g(z) and g(z') and checks that both execute to the same denotation, which
/// must also equal the rule's denote() on the argument denotations.
inline InvarianceReport check_invariance(const Rule& rule, int trials, const World& w, const DerivationPool& pool,
                                         std::uint64_t seed = 0)
{
   InvarianceReport rep;
   if (!rule.compositional()) return rep;
   Rng rng(seed);
   const auto& E = pool.entries();
   // usable[p][i]: entry i can stand at argument position p in some tuple the
   // rule accepts, probed against a sample of entries at the other positions.
   const std::size_t n_args = rule.args.size();
   std::vector<std::vector<char>> usable(n_args, std::vector<char>(E.size(), 0));
   for (std::size_t p = 0; p < n_args; ++p) {
      for (int i : pool.of_category(rule.args[p])) {
         if (!rule.accepts) {
            usable[p][i] = 1;
            continue;
         }
         std::vector<FormPtr> probe(n_args);
         probe[p] = E[i].form;
         if (n_args == 1) {
            usable[p][i] = rule.accepts(probe);
            continue;
         }
         const std::size_t q = 1 - p;
         const auto others = pool.of_category(rule.args[q]);
         const std::size_t stride = std::max<std::size_t>(1, others.size() / 400);
         for (std::size_t k = 0; k < others.size() && !usable[p][i]; k += stride) {
            probe[q] = E[others[k]].form;
            usable[p][i] = rule.accepts(probe);
         }
      }
   }
   std::vector<std::vector<int>> candidates;
   for (std::size_t p = 0; p < n_args; ++p) {
      std::vector<int> all, with_alt;
      for (int i : pool.of_category(rule.args[p])) {
         if (!usable[p][i]) continue;
         all.push_back(i);
         // Prefer arguments with at least one denotation-equal alternative.
         const auto& eq = pool.equivalent(i);
         if (std::count_if(eq.begin(), eq.end(), [&](int j) { return usable[p][j] != 0; }) > 1) with_alt.push_back(i);
      }
      if (all.empty()) return rep;
      candidates.push_back(with_alt.empty() ? std::move(all) : std::move(with_alt));
   }
   const int max_attempts = trials * 50;
   for (int attempt = 0; attempt < max_attempts && rep.trials < trials; ++attempt) {
      std::vector<FormPtr> z, z2;
      std::vector<const Denotation*> dens;
      for (std::size_t p = 0; p < n_args; ++p) {
         const auto& ids = candidates[p];
         const int i = ids[rng.uniform_index(ids.size())];
         std::vector<int> eq;
         for (int j : pool.equivalent(i))
            if (usable[p][j]) eq.push_back(j);
         const int j = eq[rng.uniform_index(eq.size())];
         z.push_back(E[i].form);
         z2.push_back(E[j].form);
         dens.push_back(&E[i].denotation);
      }
      if (rule.accepts && (!rule.accepts(z) || !rule.accepts(z2))) continue;
      std::optional<FormPtr> g1, g2;
      try {
         g1 = rule.build(z);
         g2 = rule.build(z2);
      } catch (const Error&) {
         continue;
      }
      if (!g1 || !g2) continue;
      ++rep.trials;
      const Denotation d1 = execute(*g1, w);
      const Denotation d2 = execute(*g2, w);
      const Denotation expect = rule.denote(w, dens);
      if (!(d1 == d2) || !(d1 == expect)) {
         rep.passed = false;
         rep.counterexample = (*g1)->canonical() + " => " + denotation_key(d1) + " vs " + (*g2)->canonical() + " => " +
                              denotation_key(d2) + " (rule denotation " + denotation_key(expect) + ")";
         return rep;
      }
   }
   return rep;
}

inline InvarianceReport check_invariance(const Rule& rule, int trials, const World& w, std::uint64_t seed = 0)
{
   DerivationPool pool(w, default_rules(), 2, 4000, seed);
   return check_invariance(rule, trials, w, pool, seed);
}

} // namespace tabdpd
