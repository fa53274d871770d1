#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <unordered_map>

#include "tabdpd/denotation.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

namespace err {
inline constexpr const char* type = "type";
inline constexpr const char* empty = "empty";
inline constexpr const char* nonsingleton = "nonsingleton";
inline constexpr const char* unknown_relation = "unknown-relation";
inline constexpr const char* unbound = "unbound";
} // namespace err

/// Semantic functions on denotations. Each is a function of its argument
/// denotations only; ErrorD arguments are absorbing.
namespace sem {

namespace detail {

enum class Scale { None, Number, Date, Mixed };

inline Scale scale_of(const ValueSet& vs)
{
   bool num = false, date = false, other = false;
   for (const Value& v : vs) {
      num = num || v.is_number();
      date = date || v.is_date();
      other = other || !(v.is_number() || v.is_date());
   }
   if (other || (num && date)) return Scale::Mixed;
   if (num) return Scale::Number;
   if (date) return Scale::Date;
   return Scale::None;
}

/// -1/0/1 or nullopt when incomparable.
inline std::optional<int> compare(const Value& a, const Value& b)
{
   if (a.is_number() && b.is_number()) return a.number() < b.number() ? -1 : (a.number() > b.number() ? 1 : 0);
   if (a.is_date() && b.is_date()) {
      auto c = compare_dates(a.date(), b.date());
      if (!c) return std::nullopt;
      return *c < 0 ? -1 : (*c > 0 ? 1 : 0);
   }
   return std::nullopt;
}

inline bool holds(CompareOp op, int c)
{
   switch (op) {
   case CompareOp::Less: return c < 0;
   case CompareOp::Greater: return c > 0;
   case CompareOp::LessEq: return c <= 0;
   case CompareOp::GreaterEq: return c >= 0;
   case CompareOp::NotEq: return c != 0;
   }
   return false;
}

/// Extreme of comparable values (all numbers or all dates), or nullopt if
/// some pair is incomparable.
inline std::optional<Value> extreme(const std::vector<Value>& vs, bool want_max)
{
   std::optional<Value> best;
   for (const Value& v : vs) {
      if (!best) {
         best = v;
         continue;
      }
      auto c = compare(v, *best);
      if (!c) return std::nullopt;
      if ((want_max && *c > 0) || (!want_max && *c < 0)) best = v;
   }
   return best;
}

} // namespace detail

inline Denotation join(const World& w, const Relation& r, const Denotation& arg)
{
   if (arg.is_error()) return arg;
   if (!arg.is_set()) return Denotation::error(err::type);
   const ValueSet& targets = arg.values();
   std::vector<Value> out;
   if (r.is_compare()) {
      if (r.op() == CompareOp::NotEq) {
         for (const Value& x : w.nodes())
            if (std::any_of(targets.begin(), targets.end(), [&](const Value& s) { return !(x == s); })) out.push_back(x);
         return Denotation::set(make_set(std::move(out)));
      }
      const auto scale = detail::scale_of(targets);
      if (scale == detail::Scale::Mixed) return Denotation::error(err::type);
      for (const Value& x : w.nodes()) {
         if (!(x.is_number() || x.is_date())) continue;
         for (const Value& s : targets) {
            auto c = detail::compare(x, s);
            if (c && detail::holds(r.op(), *c)) {
               out.push_back(x);
               break;
            }
         }
      }
      return Denotation::set(make_set(std::move(out)));
   }
   const EdgeSet* edges = w.edges(r);
   if (!edges) return Denotation::error(err::unknown_relation);
   for (const Value& y : targets) {
      const ValueSet& hop = r.is_reversed() ? edges->image(y) : edges->preimage(y);
      out.insert(out.end(), hop.begin(), hop.end());
   }
   return Denotation::set(make_set(std::move(out)));
}

/// Error propagation for two arguments; independent of argument order.
inline std::optional<Denotation> first_error(const Denotation& a, const Denotation& b)
{
   if (a.is_error() && b.is_error()) return a.reason() <= b.reason() ? a : b;
   if (a.is_error()) return a;
   if (b.is_error()) return b;
   return std::nullopt;
}

inline Denotation intersect(const Denotation& a, const Denotation& b)
{
   if (auto e = first_error(a, b)) return *e;
   if (!a.is_set() || !b.is_set()) return Denotation::error(err::type);
   ValueSet out;
   std::set_intersection(a.values().begin(), a.values().end(), b.values().begin(), b.values().end(), std::back_inserter(out));
   return Denotation::set(std::move(out));
}

inline Denotation union_of(const Denotation& a, const Denotation& b)
{
   if (auto e = first_error(a, b)) return *e;
   if (!a.is_set() || !b.is_set()) return Denotation::error(err::type);
   ValueSet out;
   std::set_union(a.values().begin(), a.values().end(), b.values().begin(), b.values().end(), std::back_inserter(out));
   return Denotation::set(std::move(out));
}

inline Denotation aggregate(AggOp op, const Denotation& a)
{
   if (a.is_error()) return a;
   if (!a.is_set()) return Denotation::error(err::type);
   const ValueSet& vs = a.values();
   if (op == AggOp::Count) return Denotation::set({Value::number(static_cast<double>(vs.size()))});
   if (vs.empty()) return Denotation::error(err::empty);
   const auto scale = detail::scale_of(vs);
   if (op == AggOp::Sum) {
      if (scale != detail::Scale::Number) return Denotation::error(err::type);
      double total = 0;
      for (const Value& v : vs) total += v.number();
      return Denotation::set({Value::number(total)});
   }
   if (scale != detail::Scale::Number && scale != detail::Scale::Date) return Denotation::error(err::type);
   auto best = detail::extreme(vs, op == AggOp::Max);
   if (!best) return Denotation::error(err::type);
   return Denotation::set({*best});
}

inline Denotation subtract(const Denotation& a, const Denotation& b)
{
   if (a.is_error()) return a;
   if (b.is_error()) return b;
   if (!a.is_set() || !b.is_set()) return Denotation::error(err::type);
   if (a.values().size() != 1 || b.values().size() != 1) return Denotation::error(err::nonsingleton);
   const Value& x = a.values().front();
   const Value& y = b.values().front();
   if (x.is_number() && y.is_number()) return Denotation::set({Value::number(x.number() - y.number())});
   if (x.is_date() && y.is_date() && x.date().complete() && y.date().complete()) {
      using namespace std::chrono;
      auto days = [](const Date& d) {
         return sys_days{year{d.year} / month{static_cast<unsigned>(d.month)} / day{static_cast<unsigned>(d.day)}};
      };
      return Denotation::set({Value::number(static_cast<double>((days(x.date()) - days(y.date())).count()))});
   }
   return Denotation::error(err::type);
}

/// (u, x): every element maps to itself.
inline Denotation map_init(const Denotation& u)
{
   if (u.is_error()) return u;
   if (!u.is_set()) return Denotation::error(err::type);
   MapD m;
   m.pairs.reserve(u.values().size());
   for (const Value& v : u.values()) m.pairs.emplace_back(v, ValueSet{v});
   return m;
}

template <class F>
Denotation map_images(const Denotation& m, F&& f)
{
   if (m.is_error()) return m;
   if (!m.is_map()) return Denotation::error(err::type);
   MapD out;
   out.pairs.reserve(m.map().pairs.size());
   for (const auto& [k, img] : m.map().pairs) {
      Denotation d = f(Denotation::set(img));
      if (d.is_error()) return d;
      out.pairs.emplace_back(k, d.values());
   }
   return out;
}

inline Denotation map_join(const World& w, const Relation& r, const Denotation& m)
{
   return map_images(m, [&](const Denotation& img) { return join(w, r, img); });
}

inline Denotation map_intersect(const Denotation& m, const Denotation& s)
{
   if (auto e = first_error(m, s)) return *e;
   return map_images(m, [&](const Denotation& img) { return intersect(img, s); });
}

inline Denotation map_count(const Denotation& m)
{
   return map_images(m, [](const Denotation& img) { return aggregate(AggOp::Count, img); });
}

/// All keys whose image contains the extreme comparable value over all images.
inline Denotation superlative(SupOp op, const Denotation& m)
{
   if (m.is_error()) return m;
   if (!m.is_map()) return Denotation::error(err::type);
   const auto& pairs = m.map().pairs;
   if (pairs.empty()) return Denotation::error(err::empty);
   std::vector<Value> pool;
   bool num = false, date = false;
   for (const auto& [k, img] : pairs) {
      bool any = false;
      for (const Value& v : img) {
         if (v.is_number() || v.is_date()) {
            pool.push_back(v);
            any = true;
            num = num || v.is_number();
            date = date || v.is_date();
         }
      }
      if (!any) return Denotation::error(err::type);
   }
   if (num && date) return Denotation::error(err::type);
   auto best = detail::extreme(pool, op == SupOp::Argmax);
   if (!best) return Denotation::error(err::type);
   ValueSet out;
   for (const auto& [k, img] : pairs)
      if (std::any_of(img.begin(), img.end(), [&](const Value& v) { return detail::compare(v, *best) == 0; }))
         out.push_back(k);
   return Denotation::set(std::move(out));
}

} // namespace sem

/// Denotations of closed subforms keyed by canonical text, so equal subtrees
/// of separately parsed forms share one entry. Only valid while the forms it
/// was filled from are alive and for a single world.
using ExecMemo = std::unordered_map<std::string_view, Denotation>;

namespace detail {

inline Denotation execute_in(const Form& f, const World& w, const ValueSet* env, ExecMemo* memo = nullptr);

/// A map chain applied to the identity map of its unary, one chain step at
/// a time with the same operations the map rules use.
inline Denotation execute_chain(const Form& c, const World& w, Denotation init, ExecMemo* memo)
{
   switch (c.kind()) {
   case FormKind::Var: return init;
   case FormKind::Join: return sem::map_join(w, c.child(0)->relation(), execute_chain(*c.child(1), w, std::move(init), memo));
   case FormKind::Intersect: {
      const bool left = c.child(0)->has_var();
      const Form& chain = left ? *c.child(0) : *c.child(1);
      const Form& set = left ? *c.child(1) : *c.child(0);
      return sem::map_intersect(execute_chain(chain, w, std::move(init), memo), execute_in(set, w, nullptr, memo));
   }
   case FormKind::Aggregate:
      if (c.agg() == AggOp::Count) return sem::map_count(execute_chain(*c.child(0), w, std::move(init), memo));
      break;
   default: break;
   }
   return Denotation::error(err::type);
}

inline Denotation execute_node(const Form& f, const World& w, const ValueSet* env, ExecMemo* memo)
{
   switch (f.kind()) {
   case FormKind::Literal: return Denotation::set({f.literal()});
   case FormKind::AllRows: return Denotation::set(w.rows());
   case FormKind::Rel: return RelD{f.relation()};
   case FormKind::Var:
      if (!env) return Denotation::error(err::unbound);
      return Denotation::set(*env);
   case FormKind::Join: {
      Denotation arg = execute_in(*f.child(1), w, env, memo);
      return sem::join(w, f.child(0)->relation(), arg);
   }
   case FormKind::Intersect:
      return sem::intersect(execute_in(*f.child(0), w, env, memo), execute_in(*f.child(1), w, env, memo));
   case FormKind::UnionEnt:
      return sem::union_of(execute_in(*f.child(0), w, env, memo), execute_in(*f.child(1), w, env, memo));
   case FormKind::Aggregate: return sem::aggregate(f.agg(), execute_in(*f.child(0), w, env, memo));
   case FormKind::Sub: {
      Denotation a = execute_in(*f.child(0), w, env, memo);
      if (a.is_error()) return a;
      return sem::subtract(a, execute_in(*f.child(1), w, env, memo));
   }
   case FormKind::Map: return execute_chain(*f.child(1), w, sem::map_init(execute_in(*f.child(0), w, env, memo)), memo);
   case FormKind::Superlative: return sem::superlative(f.sup(), execute_in(*f.child(0), w, env, memo));
   }
   return Denotation::error(err::type);
}

inline Denotation execute_in(const Form& f, const World& w, const ValueSet* env, ExecMemo* memo)
{
   if (!memo || f.has_var()) return execute_node(f, w, env, memo);
   if (auto it = memo->find(f.canonical()); it != memo->end()) return it->second;
   Denotation d = execute_node(f, w, env, memo);
   memo->emplace(f.canonical(), d);
   return d;
}

} // namespace detail

/// Recursive evaluation of a logical form on a world. Never throws on
/// well-formed input; failures are ErrorD values.
inline Denotation execute(const Form& f, const World& w) { return detail::execute_in(f, w, nullptr); }
inline Denotation execute(const FormPtr& f, const World& w) { return execute(*f, w); }

/// Evaluation sharing results of common closed subtrees through `memo`.
inline Denotation execute(const Form& f, const World& w, ExecMemo& memo) { return detail::execute_in(f, w, nullptr, &memo); }

/// Map evaluation; the result is always a MapD or ErrorD.
inline Denotation execute_map(const FormPtr& m, const World& w)
{
   if (m->kind() != FormKind::Map) return Denotation::error(err::type);
   return execute(m, w);
}

} // namespace tabdpd
