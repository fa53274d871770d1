#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabdpd/error.hpp"
#include "tabdpd/relation.hpp"
#include "tabdpd/value.hpp"

namespace tabdpd {

enum class Category : std::uint8_t { Set, Rel, Map };

inline std::string_view to_string(Category c)
{
   switch (c) {
   case Category::Set: return "Set";
   case Category::Rel: return "Rel";
   case Category::Map: return "Map";
   }
   return "";
}

enum class FormKind : std::uint8_t { Literal, AllRows, Rel, Var, Join, Intersect, UnionEnt, Aggregate, Sub, Map, Superlative };

enum class AggOp : std::uint8_t { Count, Max, Min, Sum };
enum class SupOp : std::uint8_t { Argmax, Argmin };

inline std::string_view to_string(AggOp op)
{
   switch (op) {
   case AggOp::Count: return "count";
   case AggOp::Max: return "max";
   case AggOp::Min: return "min";
   case AggOp::Sum: return "sum";
   }
   return "";
}

inline std::string_view to_string(SupOp op) { return op == SupOp::Argmax ? "argmax" : "argmin"; }

class Form;
using FormPtr = std::shared_ptr<const Form>;

/// Immutable lambda-DCS node. Children of commutative nodes are stored in
/// canonical order, so structural equality coincides with equality of the
/// canonical strings.
///
/// A Map node pairs a unary Set form with a chain over the variable $x:
///   chain := $x | (join REL chain) | (and chain SET) | (count chain)
class Form {
public:
   FormKind kind() const noexcept { return kind_; }
   const Value& literal() const noexcept { return literal_; }
   const Relation& relation() const noexcept { return relation_; }
   AggOp agg() const noexcept { return agg_; }
   SupOp sup() const noexcept { return sup_; }
   const FormPtr& child(std::size_t i) const noexcept { return children_[i]; }
   std::size_t arity() const noexcept { return arity_; }

   /// Number of compositional rule applications; base forms have size 0.
   int size() const noexcept { return size_; }
   bool has_var() const noexcept { return has_var_; }
   const std::string& canonical() const noexcept { return canonical_; }

   Category category() const noexcept
   {
      if (kind_ == FormKind::Rel) return Category::Rel;
      if (kind_ == FormKind::Map) return Category::Map;
      return Category::Set;
   }

   // Factories.
   static FormPtr literal(Value v);
   static FormPtr all_rows();
   static FormPtr rel(Relation r);
   static FormPtr var();
   static FormPtr join(FormPtr rel, FormPtr arg);
   static FormPtr join(const Relation& r, FormPtr arg) { return join(rel(r), std::move(arg)); }
   static FormPtr intersect(FormPtr a, FormPtr b);
   static FormPtr union_ent(FormPtr a, FormPtr b);
   static FormPtr aggregate(AggOp op, FormPtr arg);
   static FormPtr sub(FormPtr a, FormPtr b);
   static FormPtr map(FormPtr unary, FormPtr chain);
   static FormPtr superlative(SupOp op, FormPtr map);

   Form(FormKind k) : kind_(k) {}

private:
   static FormPtr finish(std::shared_ptr<Form> f);

   FormKind kind_;
   Value literal_;
   Relation relation_ = Relation::builtin(RelKind::Next);
   AggOp agg_ = AggOp::Count;
   SupOp sup_ = SupOp::Argmax;
   std::array<FormPtr, 2> children_;
   std::size_t arity_ = 0;
   int size_ = 0;
   bool has_var_ = false;
   std::string canonical_;
};

inline bool operator==(const Form& a, const Form& b) { return a.canonical() == b.canonical(); }

inline bool same_form(const FormPtr& a, const FormPtr& b) { return a == b || (a && b && a->canonical() == b->canonical()); }

inline FormPtr Form::finish(std::shared_ptr<Form> f)
{
   std::string s;
   int size = 0;
   bool var = false;
   for (std::size_t i = 0; i < f->arity_; ++i) {
      size += f->children_[i]->size_;
      var = var || f->children_[i]->has_var_;
   }
   switch (f->kind_) {
   case FormKind::Literal:
      switch (f->literal_.kind()) {
      case ValueKind::Entity: s = "(entity " + to_string(f->literal_) + ")"; break;
      case ValueKind::Number: s = "(number " + to_string(f->literal_) + ")"; break;
      case ValueKind::Date: s = "(date " + to_string(f->literal_) + ")"; break;
      case ValueKind::Row: s = "(row " + std::to_string(f->literal_.row_index()) + ")"; break;
      }
      break;
   case FormKind::AllRows: s = "(all-rows)"; break;
   case FormKind::Rel: s = f->relation_.to_string(); break;
   case FormKind::Var:
      s = "$x";
      var = true;
      break;
   case FormKind::Join: s = "(join " + f->children_[0]->canonical_ + " " + f->children_[1]->canonical_ + ")"; break;
   case FormKind::Intersect: s = "(and " + f->children_[0]->canonical_ + " " + f->children_[1]->canonical_ + ")"; break;
   case FormKind::UnionEnt: s = "(or " + f->children_[0]->canonical_ + " " + f->children_[1]->canonical_ + ")"; break;
   case FormKind::Aggregate: s = "(" + std::string(to_string(f->agg_)) + " " + f->children_[0]->canonical_ + ")"; break;
   case FormKind::Sub: s = "(sub " + f->children_[0]->canonical_ + " " + f->children_[1]->canonical_ + ")"; break;
   case FormKind::Map: s = "(map " + f->children_[0]->canonical_ + " " + f->children_[1]->canonical_ + ")"; break;
   case FormKind::Superlative: s = "(" + std::string(to_string(f->sup_)) + " " + f->children_[0]->canonical_ + ")"; break;
   }
   if (f->arity_ > 0) size += 1;
   if (f->kind_ == FormKind::Map) var = false;
   f->size_ = size;
   f->has_var_ = var;
   f->canonical_ = std::move(s);
   return f;
}

namespace detail {

inline void require(bool cond, const char* what)
{
   if (!cond) throw Error(std::string("ill-formed logical form: ") + what);
}

inline bool is_set_form(const FormPtr& f) { return f && f->category() == Category::Set; }

/// chain := $x | (join REL chain) | (and chain SET) | (count chain)
inline bool is_chain(const FormPtr& f)
{
   if (!f || !f->has_var()) return false;
   switch (f->kind()) {
   case FormKind::Var: return true;
   case FormKind::Join: return is_chain(f->child(1));
   case FormKind::Intersect: {
      const bool left = f->child(0)->has_var();
      const FormPtr& c = left ? f->child(0) : f->child(1);
      const FormPtr& s = left ? f->child(1) : f->child(0);
      return !s->has_var() && is_chain(c);
   }
   case FormKind::Aggregate: return f->agg() == AggOp::Count && is_chain(f->child(0));
   default: return false;
   }
}

} // namespace detail

inline FormPtr Form::literal(Value v)
{
   auto f = std::make_shared<Form>(FormKind::Literal);
   f->literal_ = std::move(v);
   return finish(f);
}

inline FormPtr Form::all_rows() { return finish(std::make_shared<Form>(FormKind::AllRows)); }

inline FormPtr Form::rel(Relation r)
{
   auto f = std::make_shared<Form>(FormKind::Rel);
   f->relation_ = std::move(r);
   return finish(f);
}

inline FormPtr Form::var() { return finish(std::make_shared<Form>(FormKind::Var)); }

inline FormPtr Form::join(FormPtr rel, FormPtr arg)
{
   detail::require(rel && rel->kind() == FormKind::Rel, "join needs a relation");
   detail::require(detail::is_set_form(arg), "join needs a set argument");
   auto f = std::make_shared<Form>(FormKind::Join);
   f->children_ = {std::move(rel), std::move(arg)};
   f->arity_ = 2;
   return finish(f);
}

inline FormPtr Form::intersect(FormPtr a, FormPtr b)
{
   detail::require(detail::is_set_form(a) && detail::is_set_form(b), "intersection of non-sets");
   detail::require(!(a->has_var() && b->has_var()), "intersection of two chains");
   if (b->canonical() < a->canonical()) std::swap(a, b);
   auto f = std::make_shared<Form>(FormKind::Intersect);
   f->children_ = {std::move(a), std::move(b)};
   f->arity_ = 2;
   return finish(f);
}

inline FormPtr Form::union_ent(FormPtr a, FormPtr b)
{
   detail::require(a && b && a->kind() == FormKind::Literal && b->kind() == FormKind::Literal,
                   "union arguments must be literals");
   if (b->canonical() < a->canonical()) std::swap(a, b);
   auto f = std::make_shared<Form>(FormKind::UnionEnt);
   f->children_ = {std::move(a), std::move(b)};
   f->arity_ = 2;
   return finish(f);
}

inline FormPtr Form::aggregate(AggOp op, FormPtr arg)
{
   detail::require(detail::is_set_form(arg), "aggregate of a non-set");
   auto f = std::make_shared<Form>(FormKind::Aggregate);
   f->agg_ = op;
   f->children_ = {std::move(arg), nullptr};
   f->arity_ = 1;
   return finish(f);
}

inline FormPtr Form::sub(FormPtr a, FormPtr b)
{
   detail::require(detail::is_set_form(a) && detail::is_set_form(b), "subtraction of non-sets");
   detail::require(!a->has_var() && !b->has_var(), "subtraction inside a map chain");
   auto f = std::make_shared<Form>(FormKind::Sub);
   f->children_ = {std::move(a), std::move(b)};
   f->arity_ = 2;
   return finish(f);
}

inline FormPtr Form::map(FormPtr unary, FormPtr chain)
{
   detail::require(detail::is_set_form(unary) && !unary->has_var(), "map unary must be a closed set");
   detail::require(detail::is_chain(chain), "map binary must be a chain over $x");
   auto f = std::make_shared<Form>(FormKind::Map);
   f->children_ = {std::move(unary), std::move(chain)};
   f->arity_ = 2;
   return finish(f);
}

inline FormPtr Form::superlative(SupOp op, FormPtr map)
{
   detail::require(map && map->kind() == FormKind::Map, "superlative needs a map");
   auto f = std::make_shared<Form>(FormKind::Superlative);
   f->sup_ = op;
   f->children_ = {std::move(map), nullptr};
   f->arity_ = 1;
   return finish(f);
}

namespace detail {

class FormParser {
public:
   explicit FormParser(std::string_view text) : text_(text) {}

   FormPtr parse_all()
   {
      FormPtr f = parse();
      skip_ws();
      if (pos_ != text_.size()) fail("trailing input");
      return f;
   }

private:
   [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

   void skip_ws()
   {
      while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
         ++pos_;
   }

   void expect(char c)
   {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
      ++pos_;
   }

   bool peek(char c)
   {
      skip_ws();
      return pos_ < text_.size() && text_[pos_] == c;
   }

   std::string atom()
   {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size()) {
         char c = text_[pos_];
         if (c == '(' || c == ')' || c == '"' || c == ' ' || c == '\t' || c == '\n' || c == '\r') break;
         ++pos_;
      }
      if (pos_ == start) fail("expected atom");
      return std::string(text_.substr(start, pos_ - start));
   }

   std::string string_literal()
   {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected string literal");
      ++pos_;
      std::string out;
      while (pos_ < text_.size() && text_[pos_] != '"') {
         if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
         out.push_back(text_[pos_++]);
      }
      if (pos_ >= text_.size()) fail("unterminated string literal");
      ++pos_;
      return out;
   }

   static std::optional<Relation> relation_from_token(const std::string& tok) { return parse_relation(tok); }

   FormPtr parse()
   {
      skip_ws();
      if (pos_ >= text_.size()) fail("unexpected end of input");
      if (text_[pos_] != '(') {
         const std::size_t at = pos_;
         std::string tok = atom();
         if (tok == "$x") return Form::var();
         auto r = relation_from_token(tok);
         if (!r) {
            pos_ = at;
            fail("unknown token '" + tok + "'");
         }
         return Form::rel(*r);
      }
      ++pos_;
      const std::size_t head_pos = pos_;
      std::string head = atom();
      FormPtr out;
      try {
         out = parse_compound(head);
      } catch (const ParseError&) {
         throw;
      } catch (const Error& e) {
         pos_ = head_pos;
         fail(e.what());
      }
      expect(')');
      return out;
   }

   FormPtr parse_compound(const std::string& head)
   {
      if (head == "entity") return Form::literal(Value::entity(string_literal()));
      if (head == "number" || head == "date") {
         const std::size_t at = pos_;
         std::string tok = atom();
         Value v;
         try {
            v = parse_value(tok);
         } catch (const Error&) {
            pos_ = at;
            fail("bad " + head + " literal");
         }
         if ((head == "number") != v.is_number()) {
            pos_ = at;
            fail("bad " + head + " literal");
         }
         return Form::literal(v);
      }
      if (head == "row") {
         std::string tok = atom();
         return Form::literal(Value::row(std::stoi(tok)));
      }
      if (head == "all-rows") return Form::all_rows();
      if (head == "reverse") {
         FormPtr r = parse();
         if (r->kind() != FormKind::Rel) fail("reverse needs a relation");
         return Form::rel(r->relation().reversed());
      }
      if (head == "join") {
         FormPtr r = parse();
         FormPtr a = parse();
         return Form::join(r, a);
      }
      if (head == "and" || head == "or" || head == "sub" || head == "map") {
         FormPtr a = parse();
         FormPtr b = parse();
         if (head == "and") return Form::intersect(a, b);
         if (head == "or") return Form::union_ent(a, b);
         if (head == "sub") return Form::sub(a, b);
         return Form::map(a, b);
      }
      for (AggOp op : {AggOp::Count, AggOp::Max, AggOp::Min, AggOp::Sum})
         if (head == to_string(op)) return Form::aggregate(op, parse());
      for (SupOp op : {SupOp::Argmax, SupOp::Argmin})
         if (head == to_string(op)) return Form::superlative(op, parse());
      fail("unknown operator '" + head + "'");
   }

   std::string_view text_;
   std::size_t pos_ = 0;
};

} // namespace detail

/// Parse canonical (or any whitespace-variant of canonical) form text.
inline FormPtr parse_form(std::string_view text) { return detail::FormParser(text).parse_all(); }

/// Infix rendering in the usual lambda-DCS style, e.g.
/// R[Venue].argmax(Position.1st, R[Index].x).
inline std::string to_infix(const FormPtr& f)
{
   switch (f->kind()) {
   case FormKind::Literal:
      return f->literal().is_entity() ? f->literal().entity_name() : to_string(f->literal());
   case FormKind::AllRows: return "Type.Row";
   case FormKind::Var: return "x";
   case FormKind::Rel: {
      const Relation& r = f->relation();
      std::string base = r.base_token();
      if (!base.empty() && base[0] == '@') base.erase(0, 1);
      return r.is_reversed() ? "R[" + base + "]" : base;
   }
   case FormKind::Join: return to_infix(f->child(0)) + "." + to_infix(f->child(1));
   case FormKind::Intersect: return "(" + to_infix(f->child(0)) + " ⊓ " + to_infix(f->child(1)) + ")";
   case FormKind::UnionEnt: return "(" + to_infix(f->child(0)) + " ⊔ " + to_infix(f->child(1)) + ")";
   case FormKind::Aggregate: return std::string(to_string(f->agg())) + "(" + to_infix(f->child(0)) + ")";
   case FormKind::Sub: return "(" + to_infix(f->child(0)) + " - " + to_infix(f->child(1)) + ")";
   case FormKind::Map: return to_infix(f->child(0)) + ", " + to_infix(f->child(1));
   case FormKind::Superlative: return std::string(to_string(f->sup())) + "(" + to_infix(f->child(0)) + ")";
   }
   return {};
}

} // namespace tabdpd
