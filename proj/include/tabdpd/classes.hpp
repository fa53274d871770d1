#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabdpd/answer.hpp"
#include "tabdpd/denotation.hpp"
#include "tabdpd/execute.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

/// Denotation keys of one form, one per world of a designated world list.
using DenotationTuple = std::vector<std::string>;

struct EquivalenceClass {
   DenotationTuple tuple;
   std::vector<FormPtr> members; // sorted by canonical string
   FormPtr representative;       // smallest size, then canonical string
};

/// grid[f][i] = denotation key of forms[f] on worlds[i]. Worlds are split
/// across `jobs` threads; each thread shares subtree results per world.
inline std::vector<DenotationTuple> denotation_grid(const std::vector<FormPtr>& forms, const std::vector<WorldPtr>& worlds,
                                                    int jobs = 1)
{
   std::vector<DenotationTuple> grid(forms.size(), DenotationTuple(worlds.size()));
   auto work = [&](std::size_t first, std::size_t step) {
      for (std::size_t i = first; i < worlds.size(); i += step) {
         ExecMemo memo;
         for (std::size_t f = 0; f < forms.size(); ++f) grid[f][i] = denotation_key(execute(*forms[f], *worlds[i], memo));
      }
   };
   const std::size_t n = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), worlds.size()));
   if (n == 1) {
      work(0, 1);
   } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work, t, n);
      for (auto& t : pool) t.join();
   }
   return grid;
}

inline bool representative_before(const FormPtr& a, const FormPtr& b)
{
   if (a->size() != b->size()) return a->size() < b->size();
   return a->canonical() < b->canonical();
}

/// Groups forms by their full denotation tuple; classes come out sorted by
/// tuple. ErrorD keys are ordinary tuple components.
inline std::vector<EquivalenceClass> classes_from_grid(const std::vector<FormPtr>& forms, const std::vector<DenotationTuple>& grid)
{
   std::map<DenotationTuple, std::vector<FormPtr>> groups;
   for (std::size_t f = 0; f < forms.size(); ++f) groups[grid[f]].push_back(forms[f]);
   std::vector<EquivalenceClass> out;
   for (auto& [tuple, members] : groups) {
      std::sort(members.begin(), members.end(), [](const FormPtr& a, const FormPtr& b) { return a->canonical() < b->canonical(); });
      EquivalenceClass c;
      c.tuple = tuple;
      c.representative = *std::min_element(members.begin(), members.end(), representative_before);
      c.members = std::move(members);
      out.push_back(std::move(c));
   }
   return out;
}

inline std::vector<EquivalenceClass> equivalence_classes(const std::vector<FormPtr>& forms, const std::vector<WorldPtr>& worlds,
                                                         int jobs = 1)
{
   return classes_from_grid(forms, denotation_grid(forms, worlds, jobs));
}

// ---------------------------------------------------------------------------
// Annotation-world selection

/// Σ |F_t| log2 |F_t| over block sizes, summed in ascending size order so
/// equal size multisets give bit-identical results.
inline double partition_objective(std::vector<std::size_t> sizes)
{
   std::sort(sizes.begin(), sizes.end());
   double total = 0;
   for (std::size_t s : sizes)
      if (s > 1) total += static_cast<double>(s) * std::log2(static_cast<double>(s));
   return total;
}

/// (1/|Q|) Σ |F_t| log2 |F_t|.
inline double entropy(const std::vector<std::size_t>& sizes, std::size_t total_classes)
{
   if (total_classes == 0) throw Error("entropy of an empty class set");
   return partition_objective(sizes) / static_cast<double>(total_classes);
}

inline double entropy(const std::vector<std::vector<int>>& partition, std::size_t total_classes)
{
   std::vector<std::size_t> sizes;
   for (const auto& b : partition) sizes.push_back(b.size());
   return entropy(sizes, total_classes);
}

/// Per-world integer ids of the class tuple components: ids[w][c].
inline std::vector<std::vector<int>> world_outcome_ids(const std::vector<EquivalenceClass>& classes, int k,
                                                       const std::vector<int>& subset_of_classes)
{
   std::vector<std::vector<int>> ids(k, std::vector<int>(subset_of_classes.size()));
   for (int w = 0; w < k; ++w) {
      std::unordered_map<std::string, int> intern;
      for (std::size_t i = 0; i < subset_of_classes.size(); ++i) {
         const auto& key = classes[subset_of_classes[i]].tuple.at(w);
         ids[w][i] = intern.emplace(key, static_cast<int>(intern.size())).first->second;
      }
   }
   return ids;
}

namespace detail {

/// Refines labels by one world's outcome ids; returns the new block count.
/// Open addressing over a reused table: this runs once per node of the
/// subset search.
inline int refine(const std::vector<int>& labels, const std::vector<int>& outcome, std::vector<int>& out)
{
   thread_local std::vector<std::uint64_t> keys;
   thread_local std::vector<int> vals;
   thread_local std::vector<std::size_t> used;
   std::size_t cap = 16;
   int bits = 4;
   while (cap < 2 * labels.size()) cap <<= 1, ++bits;
   if (keys.size() < cap) {
      keys.assign(cap, ~std::uint64_t{0});
      vals.assign(cap, 0);
   }
   const std::size_t mask = cap - 1;
   used.clear();
   int blocks = 0;
   out.resize(labels.size());
   for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::uint64_t key = (static_cast<std::uint64_t>(labels[i]) << 32) | static_cast<std::uint32_t>(outcome[i]);
      std::size_t h = static_cast<std::size_t>((key * 0x9E3779B97F4A7C15ull) >> (64 - bits));
      while (keys[h] != key && keys[h] != ~std::uint64_t{0}) h = (h + 1) & mask;
      if (keys[h] != key) {
         keys[h] = key;
         vals[h] = blocks++;
         used.push_back(h);
      }
      out[i] = vals[h];
   }
   for (std::size_t h : used) keys[h] = ~std::uint64_t{0};
   return blocks;
}

/// Same sum as partition_objective, via a size histogram instead of a sort.
inline double labels_objective(const std::vector<int>& labels, int blocks)
{
   thread_local std::vector<std::size_t> sizes, hist;
   sizes.assign(blocks, 0);
   for (int l : labels) ++sizes[l];
   hist.assign(labels.size() + 1, 0);
   for (std::size_t s : sizes) ++hist[s];
   double total = 0;
   for (std::size_t s = 2; s < hist.size(); ++s) {
      if (!hist[s]) continue;
      const double term = static_cast<double>(s) * std::log2(static_cast<double>(s));
      for (std::size_t i = 0; i < hist[s]; ++i) total += term;
   }
   return total;
}

inline std::vector<std::vector<int>> blocks_of(const std::vector<int>& labels, const std::vector<int>& members)
{
   std::map<int, std::vector<int>> by;
   for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(members[i]);
   std::vector<std::vector<int>> out;
   for (auto& [_, b] : by) out.push_back(std::move(b));
   std::sort(out.begin(), out.end());
   return out;
}

} // namespace detail

struct Selection {
   std::vector<int> worlds;                  // world indices
   double objective = 0;                     // Σ |F_t| log2 |F_t|
   std::vector<std::vector<int>> partition;  // blocks of class indices
};

/// Partition of the given classes by their tuples restricted to `worlds`.
inline std::vector<std::vector<int>> partition_by(const std::vector<EquivalenceClass>& classes, const std::vector<int>& members,
                                                  const std::vector<int>& worlds)
{
   std::map<DenotationTuple, std::vector<int>> by;
   for (int c : members) {
      DenotationTuple t;
      for (int w : worlds) t.push_back(classes[c].tuple.at(w));
      by[t].push_back(c);
   }
   std::vector<std::vector<int>> out;
   for (auto& [_, b] : by) out.push_back(std::move(b));
   std::sort(out.begin(), out.end());
   return out;
}

inline std::vector<int> all_indices(std::size_t n)
{
   std::vector<int> v(n);
   for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
   return v;
}

/// Exhaustive search over all C(k, l) world subsets for the minimum of
/// Σ |F_t| log2 |F_t|; ties go to the lexicographically smallest index
/// tuple. With `greedy`, worlds are instead added one at a time, each the
/// best single addition (lowest index on ties).
inline Selection select_worlds(const std::vector<EquivalenceClass>& classes, int k, int l, bool greedy = false)
{
   if (l < 0 || l > k) throw ConfigError("l must be between 0 and the number of worlds");
   if (classes.empty()) throw ConfigError("no equivalence classes to separate");
   const std::vector<int> members = all_indices(classes.size());
   const auto ids = world_outcome_ids(classes, k, members);
   const std::vector<int> root(classes.size(), 0);

   Selection best;
   if (greedy) {
      std::vector<int> labels = root;
      std::vector<char> used(k, 0);
      for (int step = 0; step < l; ++step) {
         int pick = -1;
         double pick_obj = 0;
         std::vector<int> pick_labels, tmp;
         for (int w = 0; w < k; ++w) {
            if (used[w]) continue;
            const int blocks = detail::refine(labels, ids[w], tmp);
            const double obj = detail::labels_objective(tmp, blocks);
            if (pick < 0 || obj < pick_obj) {
               pick = w;
               pick_obj = obj;
               pick_labels = tmp;
            }
         }
         used[pick] = 1;
         best.worlds.push_back(pick);
         labels = std::move(pick_labels);
      }
      best.objective = detail::labels_objective(labels, static_cast<int>(classes.size()));
      best.partition = detail::blocks_of(labels, members);
      return best;
   }

   bool found = false;
   std::vector<int> chosen;
   std::vector<std::vector<int>> level(l + 1);
   level[0] = root;
   std::vector<int> best_labels = root;
   // Depth-first over increasing index tuples, refining labels per level.
   auto dfs = [&](auto&& self, int start, int depth) -> void {
      if (depth == l) {
         const double obj = detail::labels_objective(level[depth], static_cast<int>(classes.size()));
         if (!found || obj < best.objective) {
            found = true;
            best.objective = obj;
            best.worlds = chosen;
            best_labels = level[depth];
         }
         return;
      }
      for (int w = start; w <= k - (l - depth); ++w) {
         detail::refine(level[depth], ids[w], level[depth + 1]);
         chosen.push_back(w);
         self(self, w + 1, depth + 1);
         chosen.pop_back();
      }
   };
   dfs(dfs, 0, 0);
   best.partition = detail::blocks_of(best_labels, members);
   return best;
}

// ---------------------------------------------------------------------------
// Annotations and pruning

struct Annotation {
   int world_id = -1;
   std::vector<std::string> answer;
   std::string annotator;
   std::string ts;
};

inline nlohmann::json to_json(const Annotation& a)
{
   return {{"world_id", a.world_id}, {"answer", a.answer}, {"annotator", a.annotator}, {"ts", a.ts}};
}

inline Annotation annotation_from_json(const nlohmann::json& j)
{
   Annotation a;
   a.world_id = j.at("world_id").get<int>();
   a.answer = j.at("answer").get<std::vector<std::string>>();
   if (j.contains("annotator")) a.annotator = j.at("annotator").get<std::string>();
   if (j.contains("ts")) a.ts = j.at("ts").is_string() ? j.at("ts").get<std::string>() : j.at("ts").dump();
   return a;
}

/// JSON lines; blank lines are skipped. When `example_id` is given, lines
/// carrying a different "example_id" are ignored.
inline std::vector<Annotation> parse_annotations(const std::string& text, const std::string& example_id = {})
{
   std::vector<Annotation> out;
   std::istringstream in(text);
   std::string line;
   int lineno = 0;
   while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
         j = nlohmann::json::parse(line);
         if (!example_id.empty() && j.contains("example_id") && j.at("example_id").get<std::string>() != example_id) continue;
         out.push_back(annotation_from_json(j));
      } catch (const nlohmann::json::exception& e) {
         throw ParseError("annotation line " + std::to_string(lineno) + ": " + e.what(), 0);
      }
   }
   return out;
}

/// Expected outcome on one world: an answer to match, or an exact
/// denotation key.
class AnnotationTarget {
public:
   explicit AnnotationTarget(TargetDenotation answer) : data_(std::move(answer)) {}
   static AnnotationTarget exact(std::string key)
   {
      AnnotationTarget t;
      t.data_ = std::move(key);
      return t;
   }

   bool matches(const std::string& key) const
   {
      if (auto* k = std::get_if<std::string>(&data_)) return *k == key;
      return std::get<TargetDenotation>(data_).matches(denotation_from_json(key));
   }

private:
   AnnotationTarget() = default;
   std::variant<TargetDenotation, std::string> data_;
};

struct PruneResult {
   std::vector<int> surviving;   // class indices, ascending
   std::vector<int> mismatches;  // per class
   std::vector<FormPtr> forms;   // members of surviving classes, sorted
   bool all_pruned() const noexcept { return surviving.empty(); }
};

/// Keeps classes whose tuple on `worlds` differs from `targets` in at most
/// `tolerance` positions.
inline PruneResult prune(const std::vector<EquivalenceClass>& classes, const std::vector<int>& worlds,
                         const std::vector<AnnotationTarget>& targets, int tolerance)
{
   if (worlds.size() != targets.size()) throw ConfigError("one annotation per selected world is required");
   if (tolerance < 0) throw ConfigError("tolerance must be non-negative");
   PruneResult r;
   for (std::size_t c = 0; c < classes.size(); ++c) {
      int miss = 0;
      for (std::size_t i = 0; i < worlds.size(); ++i) miss += !targets[i].matches(classes[c].tuple.at(worlds[i]));
      r.mismatches.push_back(miss);
      if (miss <= tolerance) {
         r.surviving.push_back(static_cast<int>(c));
         r.forms.insert(r.forms.end(), classes[c].members.begin(), classes[c].members.end());
      }
   }
   std::sort(r.forms.begin(), r.forms.end(), [](const FormPtr& a, const FormPtr& b) { return a->canonical() < b->canonical(); });
   return r;
}

/// Latest annotation per world (later entries win), as parallel lists.
inline std::pair<std::vector<int>, std::vector<AnnotationTarget>> annotation_targets(const std::vector<Annotation>& anns, int k)
{
   std::map<int, const Annotation*> last;
   for (const auto& a : anns) {
      if (a.world_id < 0 || a.world_id >= k) throw ConfigError("annotation for unknown world " + std::to_string(a.world_id));
      last[a.world_id] = &a;
   }
   std::vector<int> worlds;
   std::vector<AnnotationTarget> targets;
   for (const auto& [w, a] : last) {
      worlds.push_back(w);
      targets.emplace_back(TargetDenotation(a->answer));
   }
   return {std::move(worlds), std::move(targets)};
}

struct NextWorld {
   enum class Kind { World, NoneNeeded, Exhausted };
   Kind kind = Kind::NoneNeeded;
   int world = -1;
   double objective = 0;
};

/// Among unannotated worlds, the one minimizing Σ |F_t| log2 |F_t| over the
/// surviving classes partitioned by annotated worlds plus the candidate.
inline NextWorld greedy_next_world(const std::vector<EquivalenceClass>& classes, const std::vector<int>& surviving,
                                   const std::vector<int>& annotated, int k)
{
   NextWorld r;
   if (surviving.size() <= 1) return r;
   std::vector<char> done(k, 0);
   for (int w : annotated) done.at(w) = 1;
   const auto ids = world_outcome_ids(classes, k, surviving);
   std::vector<int> base(surviving.size(), 0), tmp;
   int blocks_so_far = 1;
   for (int w : annotated) {
      blocks_so_far = detail::refine(base, ids[w], tmp);
      base = tmp;
   }
   if (blocks_so_far == static_cast<int>(surviving.size())) return r; // already separated
   r.kind = NextWorld::Kind::Exhausted;
   for (int w = 0; w < k; ++w) {
      if (done[w]) continue;
      const int blocks = detail::refine(base, ids[w], tmp);
      const double obj = detail::labels_objective(tmp, blocks);
      if (r.kind != NextWorld::Kind::World || obj < r.objective) {
         r.kind = NextWorld::Kind::World;
         r.world = w;
         r.objective = obj;
      }
   }
   return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const EquivalenceClass& c)
{
   std::vector<std::string> members;
   for (const auto& f : c.members) members.push_back(f->canonical());
   return {{"tuple", c.tuple}, {"representative", c.representative->canonical()}, {"size", c.members.size()},
           {"members", members}};
}

inline nlohmann::json classes_to_json(const std::vector<EquivalenceClass>& classes, int k)
{
   nlohmann::json arr = nlohmann::json::array();
   for (const auto& c : classes) arr.push_back(to_json(c));
   return {{"k", k}, {"classes", arr}};
}

/// Inverse of classes_to_json; forms with equal canonical text share nodes.
inline std::vector<EquivalenceClass> classes_from_json(const nlohmann::json& j)
{
   std::vector<EquivalenceClass> out;
   for (const auto& c : j.at("classes")) {
      EquivalenceClass e;
      e.tuple = c.at("tuple").get<DenotationTuple>();
      for (const auto& m : c.at("members")) e.members.push_back(parse_form(m.get<std::string>()));
      e.representative = *std::min_element(e.members.begin(), e.members.end(), representative_before);
      out.push_back(std::move(e));
   }
   return out;
}

} // namespace tabdpd
