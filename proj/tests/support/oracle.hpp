#pragma once

// Reference implementations used only by tests: a naive executor over the
// world's edge list and a brute-force enumerator that builds every guarded
// derivation up to a size bound without any denotation sharing.

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tabdpd/anchor.hpp"
#include "tabdpd/answer.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/world.hpp"

namespace oracle {

using tabdpd::Value;

enum class Cat { Set, Rel, Map };

struct Den {
   bool error = false;
   std::set<Value> set;
   std::vector<std::pair<Value, std::set<Value>>> map; // Map forms only
   bool operator==(const Den&) const = default;
};

inline Den err()
{
   Den d;
   d.error = true;
   return d;
}

/// Relation as its surface token plus direction.
struct Rel {
   std::string token; // column, @Next..., or @< ... for comparisons
   bool reversed = false;
   bool compare() const { return token.size() > 1 && token[0] == '@' && (token[1] == '<' || token[1] == '>' || token[1] == '!'); }
   std::string text() const { return reversed ? "(reverse " + token + ")" : token; }
};

/// Edges grouped by relation token.
struct Graph {
   std::map<std::string, std::vector<std::pair<Value, Value>>> edges;
   std::set<Value> nodes;

   explicit Graph(const tabdpd::World& w)
   {
      for (const auto& [rel, s, d] : w.edge_list()) {
         edges[rel].emplace_back(s, d);
         nodes.insert(s);
         nodes.insert(d);
      }
      // Relations without edges still exist.
      for (const auto& c : w.columns()) edges[c];
      for (const char* b : {"@Next", "@Index", "@Number", "@Num2", "@Date", "@Part"}) edges[b];
   }
};

inline std::optional<int> cmp(const Value& a, const Value& b)
{
   if (a.is_number() && b.is_number()) return a.number() < b.number() ? -1 : a.number() > b.number() ? 1 : 0;
   if (a.is_date() && b.is_date()) {
      const int x[3] = {a.date().year, a.date().month, a.date().day};
      const int y[3] = {b.date().year, b.date().month, b.date().day};
      for (int i = 0; i < 3; ++i) {
         if ((x[i] < 0) != (y[i] < 0)) return std::nullopt;
         if (x[i] != y[i]) return x[i] < y[i] ? -1 : 1;
      }
      return 0;
   }
   return std::nullopt;
}

inline Den set_of(std::set<Value> s)
{
   Den d;
   d.set = std::move(s);
   return d;
}

inline Den join(const Graph& g, const Rel& r, const Den& arg)
{
   if (arg.error) return arg;
   std::set<Value> out;
   if (r.compare()) {
      std::string op = r.token.substr(1);
      if (r.reversed) {
         if (op == "<") op = ">";
         else if (op == ">") op = "<";
         else if (op == "<=") op = ">=";
         else if (op == ">=") op = "<=";
      }
      if (op == "!=") {
         for (const Value& x : g.nodes)
            for (const Value& s : arg.set)
               if (!(x == s)) {
                  out.insert(x);
                  break;
               }
         return set_of(out);
      }
      bool num = false, date = false, other = false;
      for (const Value& s : arg.set) {
         num |= s.is_number();
         date |= s.is_date();
         other |= !(s.is_number() || s.is_date());
      }
      if (other || (num && date)) return err();
      for (const Value& x : g.nodes)
         for (const Value& s : arg.set) {
            const auto c = cmp(x, s);
            if (!c) continue;
            const bool ok = op == "<" ? *c < 0 : op == ">" ? *c > 0 : op == "<=" ? *c <= 0 : *c >= 0;
            if (ok) {
               out.insert(x);
               break;
            }
         }
      return set_of(out);
   }
   const auto it = g.edges.find(r.token);
   if (it == g.edges.end()) return err();
   for (const auto& [s, d] : it->second) {
      if (!r.reversed && arg.set.count(d)) out.insert(s);
      if (r.reversed && arg.set.count(s)) out.insert(d);
   }
   return set_of(out);
}

inline std::optional<Value> extreme(const std::set<Value>& vs, bool want_max)
{
   std::optional<Value> best;
   for (const Value& v : vs) {
      if (!best) {
         best = v;
         continue;
      }
      const auto c = cmp(v, *best);
      if (!c) return std::nullopt;
      if (want_max ? *c > 0 : *c < 0) best = v;
   }
   return best;
}

inline Den aggregate(const std::string& op, const Den& a)
{
   if (a.error) return a;
   if (op == "count") return set_of({Value::number(static_cast<double>(a.set.size()))});
   if (a.set.empty()) return err();
   bool num = true, date = true;
   for (const Value& v : a.set) {
      num &= v.is_number();
      date &= v.is_date();
   }
   if (op == "sum") {
      if (!num) return err();
      double t = 0;
      for (const Value& v : a.set) t += v.number();
      return set_of({Value::number(t)});
   }
   if (!num && !date) return err();
   const auto b = extreme(a.set, op == "max");
   if (!b) return err();
   return set_of({*b});
}

inline Den subtract(const Den& a, const Den& b)
{
   if (a.error) return a;
   if (b.error) return b;
   if (a.set.size() != 1 || b.set.size() != 1) return err();
   const Value& x = *a.set.begin();
   const Value& y = *b.set.begin();
   if (x.is_number() && y.is_number()) return set_of({Value::number(x.number() - y.number())});
   if (x.is_date() && y.is_date() && x.date().complete() && y.date().complete()) {
      using namespace std::chrono;
      auto days = [](const tabdpd::Date& d) {
         return sys_days{year{d.year} / month{static_cast<unsigned>(d.month)} / day{static_cast<unsigned>(d.day)}}.time_since_epoch().count();
      };
      return set_of({Value::number(static_cast<double>(days(x.date()) - days(y.date())))});
   }
   return err();
}

/// AST of the oracle. Chains inside maps are kept as trees over $x.
struct Node {
   enum Kind { Lit, AllRows, RelN, Var, Join, And, Or, Agg, Sub, Map, Sup } kind = Lit;
   Value lit;
   Rel rel;
   std::string op; // aggregate or superlative name
   std::vector<std::shared_ptr<const Node>> kids;
   std::string canon;
};
using NodeP = std::shared_ptr<const Node>;

inline Den eval(const Graph& g, const tabdpd::World& w, const Node& n, const std::set<Value>* x)
{
   switch (n.kind) {
   case Node::Lit: return set_of({n.lit});
   case Node::AllRows: {
      std::set<Value> rows;
      for (int i = 0; i < w.num_rows(); ++i) rows.insert(Value::row(i));
      return set_of(rows);
   }
   case Node::RelN: return err();
   case Node::Var: return x ? set_of(*x) : err();
   case Node::Join: return join(g, n.kids[0]->rel, eval(g, w, *n.kids[1], x));
   case Node::And:
   case Node::Or: {
      const Den a = eval(g, w, *n.kids[0], x);
      if (a.error) return a;
      const Den b = eval(g, w, *n.kids[1], x);
      if (b.error) return b;
      std::set<Value> out;
      if (n.kind == Node::And) {
         for (const Value& v : a.set)
            if (b.set.count(v)) out.insert(v);
      } else {
         out = a.set;
         out.insert(b.set.begin(), b.set.end());
      }
      return set_of(out);
   }
   case Node::Agg: return aggregate(n.op, eval(g, w, *n.kids[0], x));
   case Node::Sub: return subtract(eval(g, w, *n.kids[0], x), eval(g, w, *n.kids[1], x));
   case Node::Map: {
      const Den u = eval(g, w, *n.kids[0], x);
      if (u.error) return u;
      Den m;
      for (const Value& e : u.set) {
         const std::set<Value> env{e};
         const Den img = eval(g, w, *n.kids[1], &env);
         if (img.error) return img;
         m.map.emplace_back(e, img.set);
      }
      return m;
   }
   case Node::Sup: {
      const Den m = eval(g, w, *n.kids[0], x);
      if (m.error) return m;
      if (m.map.empty()) return err();
      std::set<Value> pool;
      bool num = false, date = false;
      for (const auto& [k, img] : m.map) {
         bool any = false;
         for (const Value& v : img)
            if (v.is_number() || v.is_date()) {
               pool.insert(v);
               any = true;
               num |= v.is_number();
               date |= v.is_date();
            }
         if (!any) return err();
      }
      if (num && date) return err();
      // The reference walks values in the same sorted order as the library.
      const auto best = extreme(pool, n.op == "argmax");
      if (!best) return err();
      std::set<Value> out;
      for (const auto& [k, img] : m.map)
         for (const Value& v : img)
            if (cmp(v, *best) == 0) {
               out.insert(k);
               break;
            }
      return set_of(out);
   }
   }
   return err();
}

inline NodeP make(Node n)
{
   auto p = std::make_shared<Node>(std::move(n));
   auto& s = p->canon;
   auto c = [&](int i) { return p->kids[i]->canon; };
   switch (p->kind) {
   case Node::Lit: s = tabdpd::Form::literal(p->lit)->canonical(); break;
   case Node::AllRows: s = "(all-rows)"; break;
   case Node::RelN: s = p->rel.text(); break;
   case Node::Var: s = "$x"; break;
   case Node::Join: s = "(join " + c(0) + " " + c(1) + ")"; break;
   case Node::And:
   case Node::Or: {
      std::string a = c(0), b = c(1);
      if (b < a) std::swap(a, b);
      s = std::string(p->kind == Node::And ? "(and " : "(or ") + a + " " + b + ")";
      break;
   }
   case Node::Agg:
   case Node::Sup: s = "(" + p->op + " " + c(0) + ")"; break;
   case Node::Sub: s = "(sub " + c(0) + " " + c(1) + ")"; break;
   case Node::Map: s = "(map " + c(0) + " " + c(1) + ")"; break;
   }
   return p;
}

/// Derivation of the brute-force enumerator: a Set or Map form with its
/// denotation on the world.
struct Item {
   NodeP node;
   Den den;
   int size = 0;
};

inline std::vector<Rel> relations(const tabdpd::World& w)
{
   std::vector<Rel> out;
   for (const auto& c : w.columns()) {
      out.push_back({c, false});
      out.push_back({c, true});
   }
   for (const char* b : {"@Next", "@Index", "@Number", "@Num2", "@Date", "@Part"}) {
      out.push_back({b, false});
      out.push_back({b, true});
   }
   for (const char* c : {"@<", "@>", "@<=", "@>=", "@!="}) out.push_back({c, false});
   return out;
}

/// Every Set form of size 1..s_max derivable by the default grammar with all
/// guards on, as canonical strings, with their denotations.
inline std::map<std::string, Den> enumerate(const tabdpd::World& w, const std::vector<tabdpd::Anchor>& anchors, int s_max)
{
   const Graph g(w);
   std::vector<std::map<std::string, Item>> sets(s_max + 1), maps(s_max + 1);
   auto add = [&](std::vector<std::map<std::string, Item>>& table, NodeP n, Den d, int size, bool is_set) {
      if (d.error) return;
      if (is_set && d.set.empty()) return;
      table[size].emplace(n->canon, Item{n, std::move(d), size});
   };
   for (const auto& a : anchors) {
      Node n;
      n.kind = Node::Lit;
      n.lit = a.value;
      auto p = make(n);
      add(sets, p, eval(g, w, *p, nullptr), 0, true);
   }
   {
      Node n;
      n.kind = Node::AllRows;
      auto p = make(n);
      add(sets, p, eval(g, w, *p, nullptr), 0, true);
   }
   const auto rels = relations(w);
   std::vector<NodeP> rel_nodes;
   for (const auto& r : rels) {
      Node n;
      n.kind = Node::RelN;
      n.rel = r;
      rel_nodes.push_back(make(n));
   }
   auto var = [] {
      Node n;
      n.kind = Node::Var;
      return make(n);
   }();

   for (int s = 1; s <= s_max; ++s) {
      // Set <- join(Rel, Set of size s-1)
      for (const auto& [_, a] : sets[s - 1])
         for (const auto& r : rel_nodes) {
            Node n;
            n.kind = Node::Join;
            n.kids = {r, a.node};
            auto p = make(n);
            add(sets, p, join(g, r->rel, a.den), s, true);
         }
      // Set <- and/sub over sizes summing to s-1; or over literals
      for (int i = 0; i <= s - 1; ++i) {
         const int j = s - 1 - i;
         for (const auto& [ka, a] : sets[i])
            for (const auto& [kb, b] : sets[j]) {
               if (!(a.den == b.den)) {
                  Node n;
                  n.kind = Node::And;
                  n.kids = {a.node, b.node};
                  auto p = make(n);
                  add(sets, p, eval(g, w, *p, nullptr), s, true);
               }
               {
                  Node n;
                  n.kind = Node::Sub;
                  n.kids = {a.node, b.node};
                  auto p = make(n);
                  add(sets, p, subtract(a.den, b.den), s, true);
               }
               if (a.node->kind == Node::Lit && b.node->kind == Node::Lit && !a.node->lit.is_row() && !b.node->lit.is_row() &&
                   !(a.node->lit == b.node->lit)) {
                  Node n;
                  n.kind = Node::Or;
                  n.kids = {a.node, b.node};
                  auto p = make(n);
                  add(sets, p, eval(g, w, *p, nullptr), s, true);
               }
            }
      }
      // Set <- aggregate(Set of size s-1), skipping singletons
      for (const auto& [_, a] : sets[s - 1]) {
         if (a.den.set.size() == 1) continue;
         for (const char* op : {"count", "max", "min", "sum"}) {
            Node n;
            n.kind = Node::Agg;
            n.op = op;
            n.kids = {a.node};
            auto p = make(n);
            add(sets, p, aggregate(op, a.den), s, true);
         }
      }
      // Map <- (map U $x)
      for (const auto& [_, a] : sets[s - 1]) {
         Node n;
         n.kind = Node::Map;
         n.kids = {a.node, var};
         auto p = make(n);
         add(maps, p, eval(g, w, *p, nullptr), s, false);
      }
      auto extend = [&](const Item& m, NodeP chain) {
         Node n;
         n.kind = Node::Map;
         n.kids = {m.node->kids[0], std::move(chain)};
         auto p = make(n);
         add(maps, p, eval(g, w, *p, nullptr), s, false);
      };
      for (const auto& [_, m] : maps[s - 1]) {
         for (const auto& r : rel_nodes) {
            Node c;
            c.kind = Node::Join;
            c.kids = {r, m.node->kids[1]};
            extend(m, make(c));
         }
         Node c;
         c.kind = Node::Agg;
         c.op = "count";
         c.kids = {m.node->kids[1]};
         extend(m, make(c));
         for (const char* op : {"argmax", "argmin"}) {
            Node n;
            n.kind = Node::Sup;
            n.op = op;
            n.kids = {m.node};
            auto p = make(n);
            add(sets, p, eval(g, w, *p, nullptr), s, true);
         }
      }
      for (int i = 0; i <= s - 1; ++i)
         for (const auto& [_, m] : maps[i])
            for (const auto& [__, b] : sets[s - 1 - i]) {
               Node c;
               c.kind = Node::And;
               c.kids = {m.node->kids[1], b.node};
               extend(m, make(c));
            }
   }
   std::map<std::string, Den> out;
   for (int size = 1; size <= s_max; ++size)
      for (const auto& [k, it] : sets[size]) out.emplace(k, it.den);
   return out;
}

inline tabdpd::Denotation to_library(const Den& d)
{
   if (d.error) return tabdpd::Denotation::error("oracle");
   return tabdpd::Denotation::set(tabdpd::ValueSet(d.set.begin(), d.set.end()));
}

/// Brute-force consistent forms: the enumerator's Set forms whose
/// denotation matches `y`.
inline std::set<std::string> consistent(const tabdpd::World& w, const std::vector<tabdpd::Anchor>& anchors,
                                        const tabdpd::TargetDenotation& y, int s_max)
{
   std::set<std::string> out;
   for (const auto& [k, d] : enumerate(w, anchors, s_max))
      if (y.matches(to_library(d))) out.insert(k);
   return out;
}

} // namespace oracle
