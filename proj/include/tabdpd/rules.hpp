#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tabdpd/anchor.hpp"
#include "tabdpd/denotation.hpp"
#include "tabdpd/error.hpp"
#include "tabdpd/execute.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

enum class RuleKind : std::uint8_t { BaseSpan, BaseEmpty, Binary, Unary };

/// Semantic operation of a rule; redundancy guards key on it.
enum class RuleOp : std::uint8_t {
   Anchor,
   AllRows,
   Relations,
   Join,
   Intersect,
   Union,
   Count,
   Max,
   Min,
   Sum,
   Sub,
   MapInit,
   MapJoin,
   MapIntersect,
   MapCount,
   Argmax,
   Argmin,
   Custom
};

using BuildFn = std::function<std::optional<FormPtr>(std::span<const FormPtr>)>;
using DenoteFn = std::function<Denotation(const World&, std::span<const Denotation* const>)>;
using AcceptFn = std::function<bool(std::span<const FormPtr>)>;

/// A deduction rule c1[z1] (+ c2[z2]) -> c[g(z1, z2)]. `build` constructs the
/// logical form (nullopt when a structural precondition fails) and `denote`
/// computes the result denotation from argument denotations alone.
struct Rule {
   std::string id;
   RuleKind kind = RuleKind::Binary;
   RuleOp op = RuleOp::Custom;
   std::vector<Category> args;
   Category result = Category::Set;
   bool commutative = false;
   bool reconstructed = false;
   BuildFn build;
   DenoteFn denote;
   AcceptFn accepts; // structural precondition on argument forms; empty accepts all

   bool compositional() const noexcept { return kind == RuleKind::Binary || kind == RuleKind::Unary; }
};

/// Redundancy restrictions applied before a derivation enters a chart cell.
struct Guards {
   bool singleton_extremum = true; // max/min/sum over a one-element set
   bool singleton_count = true;    // count over a one-element set
   bool empty_set = true;          // Set results with no elements
   bool errors = true;             // ErrorD results
   bool equal_intersect = true;    // intersection of two equal denotations

   friend bool operator==(const Guards&, const Guards&) = default;
};

/// Whether a rule application may enter the chart, given its argument
/// denotations and result denotation. Union of non-entities and subtraction
/// inside Map chains are excluded structurally by the rules themselves.
inline bool redundancy_guards(const Denotation& result, const Rule& rule, std::span<const Denotation* const> args,
                              const Guards& g = {})
{
   if (g.errors && result.is_error()) return false;
   if (g.empty_set && rule.result == Category::Set && result.is_set() && result.values().empty()) return false;
   auto singleton = [&](std::size_t i) { return args.size() > i && args[i]->is_set() && args[i]->values().size() == 1; };
   switch (rule.op) {
   case RuleOp::Max:
   case RuleOp::Min:
   case RuleOp::Sum:
      if (g.singleton_extremum && singleton(0)) return false;
      break;
   case RuleOp::Count:
      if (g.singleton_count && singleton(0)) return false;
      break;
   case RuleOp::Intersect:
      if (g.equal_intersect && args.size() == 2 && *args[0] == *args[1]) return false;
      break;
   default: break;
   }
   return true;
}

/// Fewest rule applications turning a form of category c into a Set form.
inline int steps_to_set(Category c) noexcept { return c == Category::Set ? 0 : 1; }

class RuleSet {
public:
   RuleSet() = default;
   explicit RuleSet(std::vector<Rule> rules, Guards guards = {}) : rules_(std::move(rules)), guards_(guards) {}

   const std::vector<Rule>& rules() const noexcept { return rules_; }
   const Guards& guards() const noexcept { return guards_; }
   Guards& guards() noexcept { return guards_; }

   const Rule* find(const std::string& id) const
   {
      for (const auto& r : rules_)
         if (r.id == id) return &r;
      return nullptr;
   }

   bool enabled(const std::string& id) const { return find(id) != nullptr; }

   /// Keep only the listed rule ids (in the default order).
   RuleSet restricted_to(const std::vector<std::string>& ids) const
   {
      std::vector<Rule> kept;
      for (const auto& r : rules_)
         if (std::find(ids.begin(), ids.end(), r.id) != ids.end()) kept.push_back(r);
      return RuleSet(std::move(kept), guards_);
   }

   void add(Rule r)
   {
      if (find(r.id)) throw ConfigError("duplicate rule id " + r.id);
      rules_.push_back(std::move(r));
   }

private:
   std::vector<Rule> rules_;
   Guards guards_;
};

namespace rules {

inline Rule base(std::string id, RuleKind kind, RuleOp op, Category result, bool reconstructed = false)
{
   Rule r;
   r.id = std::move(id);
   r.kind = kind;
   r.op = op;
   r.result = result;
   r.reconstructed = reconstructed;
   return r;
}

inline Rule join()
{
   Rule r;
   r.id = "C1";
   r.op = RuleOp::Join;
   r.args = {Category::Set, Category::Rel};
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::join(a[1], a[0]); };
   r.denote = [](const World& w, std::span<const Denotation* const> d) { return sem::join(w, d[1]->relation(), *d[0]); };
   return r;
}

inline Rule intersect()
{
   Rule r;
   r.id = "C-isect";
   r.op = RuleOp::Intersect;
   r.args = {Category::Set, Category::Set};
   r.commutative = true;
   r.reconstructed = true;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::intersect(a[0], a[1]); };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::intersect(*d[0], *d[1]); };
   return r;
}

/// Union of two distinct non-row literals only.
inline Rule union_entities()
{
   Rule r;
   r.id = "C-union";
   r.op = RuleOp::Union;
   r.args = {Category::Set, Category::Set};
   r.commutative = true;
   r.accepts = [](std::span<const FormPtr> a) {
      for (const auto& f : a)
         if (f->kind() != FormKind::Literal || f->literal().is_row()) return false;
      return !(a[0]->literal() == a[1]->literal());
   };
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::union_ent(a[0], a[1]); };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::union_of(*d[0], *d[1]); };
   return r;
}

inline Rule aggregate(AggOp op)
{
   Rule r;
   r.id = "C-agg-" + std::string(to_string(op));
   r.kind = RuleKind::Unary;
   r.op = op == AggOp::Count ? RuleOp::Count : op == AggOp::Max ? RuleOp::Max : op == AggOp::Min ? RuleOp::Min : RuleOp::Sum;
   r.args = {Category::Set};
   r.reconstructed = true;
   r.build = [op](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::aggregate(op, a[0]); };
   r.denote = [op](const World&, std::span<const Denotation* const> d) { return sem::aggregate(op, *d[0]); };
   return r;
}

inline Rule subtract()
{
   Rule r;
   r.id = "C-sub";
   r.op = RuleOp::Sub;
   r.args = {Category::Set, Category::Set};
   r.reconstructed = true;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::sub(a[0], a[1]); };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::subtract(*d[0], *d[1]); };
   return r;
}

inline Rule map_init()
{
   Rule r;
   r.id = "M1";
   r.kind = RuleKind::Unary;
   r.op = RuleOp::MapInit;
   r.args = {Category::Set};
   r.result = Category::Map;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::map(a[0], Form::var()); };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::map_init(*d[0]); };
   return r;
}

inline Rule map_join()
{
   Rule r;
   r.id = "M2";
   r.op = RuleOp::MapJoin;
   r.args = {Category::Map, Category::Rel};
   r.result = Category::Map;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> {
      return Form::map(a[0]->child(0), Form::join(a[1], a[0]->child(1)));
   };
   r.denote = [](const World& w, std::span<const Denotation* const> d) { return sem::map_join(w, d[1]->relation(), *d[0]); };
   return r;
}

inline Rule map_intersect()
{
   Rule r;
   r.id = "M-isect";
   r.op = RuleOp::MapIntersect;
   r.args = {Category::Map, Category::Set};
   r.result = Category::Map;
   r.reconstructed = true;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> {
      return Form::map(a[0]->child(0), Form::intersect(a[0]->child(1), a[1]));
   };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::map_intersect(*d[0], *d[1]); };
   return r;
}

inline Rule map_count()
{
   Rule r;
   r.id = "M-count";
   r.kind = RuleKind::Unary;
   r.op = RuleOp::MapCount;
   r.args = {Category::Map};
   r.result = Category::Map;
   r.reconstructed = true;
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> {
      return Form::map(a[0]->child(0), Form::aggregate(AggOp::Count, a[0]->child(1)));
   };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return sem::map_count(*d[0]); };
   return r;
}

inline Rule superlative(SupOp op)
{
   Rule r;
   r.id = "M6-" + std::string(to_string(op));
   r.kind = RuleKind::Unary;
   r.op = op == SupOp::Argmax ? RuleOp::Argmax : RuleOp::Argmin;
   r.args = {Category::Map};
   r.build = [op](std::span<const FormPtr> a) -> std::optional<FormPtr> { return Form::superlative(op, a[0]); };
   r.denote = [op](const World&, std::span<const Denotation* const> d) { return sem::superlative(op, *d[0]); };
   return r;
}

} // namespace rules

/// The default grammar: base rules B1, B-rows, B5 and the compositional
/// rules over Set, Rel and Map.
inline RuleSet default_rules()
{
   std::vector<Rule> rs;
   rs.push_back(rules::base("B1", RuleKind::BaseSpan, RuleOp::Anchor, Category::Set));
   rs.push_back(rules::base("B-rows", RuleKind::BaseEmpty, RuleOp::AllRows, Category::Set));
   rs.push_back(rules::base("B5", RuleKind::BaseEmpty, RuleOp::Relations, Category::Rel));
   rs.push_back(rules::join());
   rs.push_back(rules::intersect());
   rs.push_back(rules::union_entities());
   for (AggOp op : {AggOp::Count, AggOp::Max, AggOp::Min, AggOp::Sum}) rs.push_back(rules::aggregate(op));
   rs.push_back(rules::subtract());
   rs.push_back(rules::map_init());
   rs.push_back(rules::map_join());
   rs.push_back(rules::map_intersect());
   rs.push_back(rules::map_count());
   rs.push_back(rules::superlative(SupOp::Argmax));
   rs.push_back(rules::superlative(SupOp::Argmin));
   return RuleSet(std::move(rs));
}

/// Rule manifest: one directive per line, '#' starts a comment.
///
///   C1                  enable a rule (family names C-agg and M6 expand)
///   guard <name> off    disable a redundancy guard (or `on`)
///
/// Guard names: singleton-extremum, singleton-count, empty-set, errors,
/// equal-intersect. Rules not listed are disabled.
inline RuleSet parse_rule_manifest(const std::string& text)
{
   const RuleSet all = default_rules();
   std::vector<std::string> ids;
   Guards g;
   std::istringstream in(text);
   std::string line;
   int lineno = 0;
   while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      std::string word;
      if (!(ls >> word)) continue;
      if (word == "guard") {
         std::string name, state;
         if (!(ls >> name >> state) || (state != "on" && state != "off"))
            throw ConfigError("manifest line " + std::to_string(lineno) + ": expected 'guard <name> on|off'");
         const bool on = state == "on";
         if (name == "singleton-extremum") g.singleton_extremum = on;
         else if (name == "singleton-count") g.singleton_count = on;
         else if (name == "empty-set") g.empty_set = on;
         else if (name == "errors") g.errors = on;
         else if (name == "equal-intersect") g.equal_intersect = on;
         else throw ConfigError("manifest line " + std::to_string(lineno) + ": unknown guard " + name);
         continue;
      }
      if (word == "rule" && !(ls >> word)) throw ConfigError("manifest line " + std::to_string(lineno) + ": missing rule id");
      bool matched = false;
      for (const auto& r : all.rules()) {
         if (r.id == word || r.id.rfind(word + "-", 0) == 0) {
            ids.push_back(r.id);
            matched = true;
         }
      }
      if (!matched) throw ConfigError("manifest line " + std::to_string(lineno) + ": unknown rule " + word);
   }
   RuleSet out = all.restricted_to(ids);
   out.guards() = g;
   return out;
}

inline RuleSet load_rule_manifest(const std::string& path) { return parse_rule_manifest(read_file(path)); }

/// A logical form together with how it was built.
struct Derivation {
   FormPtr form;
   Category category = Category::Set;
   int size = 0;
   std::string rule_id;
   std::vector<std::shared_ptr<const Derivation>> children;
   std::optional<Anchor> anchor;
};

using DerivationPtr = std::shared_ptr<const Derivation>;

inline DerivationPtr make_base(FormPtr f, std::string rule_id, std::optional<Anchor> anchor = std::nullopt)
{
   auto d = std::make_shared<Derivation>();
   d->category = f->category();
   d->size = f->size();
   d->form = std::move(f);
   d->rule_id = std::move(rule_id);
   d->anchor = std::move(anchor);
   return d;
}

/// Every base relation of a world: each column and built-in relation with its
/// reverse, plus the five comparisons.
inline std::vector<Relation> base_relations(const World& w)
{
   std::vector<Relation> out;
   for (const auto& c : w.columns()) {
      out.push_back(Relation::column(c));
      out.push_back(Relation::column(c).reversed());
   }
   for (RelKind k : builtin_relations) {
      out.push_back(Relation::builtin(k));
      out.push_back(Relation::builtin(k).reversed());
   }
   for (CompareOp op : compare_ops) out.push_back(Relation::compare(op));
   return out;
}

/// Size-0 derivations: anchored values (B1), all rows (B-rows) and every
/// relation (B5), deduplicated by canonical form.
inline std::vector<DerivationPtr> base_cells(const std::vector<Anchor>& anchors, const World& w, const RuleSet& rules)
{
   std::vector<DerivationPtr> out;
   std::set<std::string> seen;
   auto add = [&](DerivationPtr d) {
      if (seen.insert(d->form->canonical()).second) out.push_back(std::move(d));
   };
   if (rules.enabled("B1"))
      for (const auto& a : anchors) add(make_base(Form::literal(a.value), "B1", a));
   if (rules.enabled("B-rows")) add(make_base(Form::all_rows(), "B-rows"));
   if (rules.enabled("B5"))
      for (const auto& r : base_relations(w)) add(make_base(Form::rel(r), "B5"));
   return out;
}

inline std::vector<DerivationPtr> base_cells(const std::string& utterance, const World& w, const RuleSet& rules)
{
   return base_cells(anchor_entities(utterance, w), w, rules);
}

struct Reject {
   std::string reason; // "category" or "guard"
};

/// Apply a compositional rule to argument derivations.
inline std::variant<DerivationPtr, Reject> apply(const Rule& rule, std::span<const DerivationPtr> args)
{
   if (!rule.compositional() || args.size() != rule.args.size()) return Reject{"category"};
   std::vector<FormPtr> forms;
   for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i]->category != rule.args[i]) return Reject{"category"};
      forms.push_back(args[i]->form);
   }
   if (rule.accepts && !rule.accepts(forms)) return Reject{"guard"};
   std::optional<FormPtr> f;
   try {
      f = rule.build(forms);
   } catch (const Error&) {
      return Reject{"guard"};
   }
   if (!f || !*f) return Reject{"guard"};
   auto d = std::make_shared<Derivation>();
   d->form = *f;
   d->category = rule.result;
   d->size = (*f)->size();
   d->rule_id = rule.id;
   d->children.assign(args.begin(), args.end());
   return DerivationPtr(d);
}

inline DerivationPtr apply_or_null(const Rule& rule, std::span<const DerivationPtr> args)
{
   auto r = apply(rule, args);
   if (auto* d = std::get_if<DerivationPtr>(&r)) return *d;
   return nullptr;
}

/// Rebuild a derivation bottom-up from its provenance.
inline FormPtr replay(const Derivation& d, const RuleSet& rules)
{
   if (d.children.empty()) return d.form;
   const Rule* r = rules.find(d.rule_id);
   if (!r) throw Error("unknown rule in provenance: " + d.rule_id);
   std::vector<FormPtr> kids;
   for (const auto& c : d.children) kids.push_back(replay(*c, rules));
   auto f = r->build(kids);
   if (!f) throw Error("provenance does not replay");
   return *f;
}

} // namespace tabdpd
