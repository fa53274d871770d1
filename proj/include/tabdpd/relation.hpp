#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace tabdpd {

enum class RelKind : unsigned char { Column, Next, Index, Number, Num2, Date, Part, Compare };

enum class CompareOp : unsigned char { Less, Greater, LessEq, GreaterEq, NotEq };

inline constexpr std::array<RelKind, 6> builtin_relations = {RelKind::Next,   RelKind::Index, RelKind::Number,
                                                             RelKind::Num2,   RelKind::Date,  RelKind::Part};

inline constexpr std::array<CompareOp, 5> compare_ops = {CompareOp::Less, CompareOp::Greater, CompareOp::LessEq,
                                                         CompareOp::GreaterEq, CompareOp::NotEq};

inline constexpr CompareOp flip(CompareOp op) noexcept
{
   switch (op) {
   case CompareOp::Less: return CompareOp::Greater;
   case CompareOp::Greater: return CompareOp::Less;
   case CompareOp::LessEq: return CompareOp::GreaterEq;
   case CompareOp::GreaterEq: return CompareOp::LessEq;
   case CompareOp::NotEq: return CompareOp::NotEq;
   }
   return op;
}

inline constexpr std::string_view compare_token(CompareOp op) noexcept
{
   switch (op) {
   case CompareOp::Less: return "@<";
   case CompareOp::Greater: return "@>";
   case CompareOp::LessEq: return "@<=";
   case CompareOp::GreaterEq: return "@>=";
   case CompareOp::NotEq: return "@!=";
   }
   return "";
}

inline constexpr std::string_view builtin_token(RelKind k) noexcept
{
   switch (k) {
   case RelKind::Next: return "@Next";
   case RelKind::Index: return "@Index";
   case RelKind::Number: return "@Number";
   case RelKind::Num2: return "@Num2";
   case RelKind::Date: return "@Date";
   case RelKind::Part: return "@Part";
   default: return "";
   }
}

/// A binary relation of the world: a column, a built-in edge type or an
/// intensional comparison. Reverse(Reverse(r)) == r holds by construction,
/// and a reversed comparison is stored as the flipped operator.
class Relation {
public:
   static Relation column(std::string name) { return Relation(RelKind::Column, std::move(name), CompareOp::Less, false); }
   static Relation builtin(RelKind k) { return Relation(k, {}, CompareOp::Less, false); }
   static Relation compare(CompareOp op) { return Relation(RelKind::Compare, {}, op, false); }

   Relation reversed() const
   {
      if (kind_ == RelKind::Compare) return compare(flip(op_));
      Relation r = *this;
      r.reversed_ = !reversed_;
      return r;
   }

   RelKind kind() const noexcept { return kind_; }
   const std::string& column_name() const noexcept { return column_; }
   CompareOp op() const noexcept { return op_; }
   bool is_reversed() const noexcept { return reversed_; }
   bool is_compare() const noexcept { return kind_ == RelKind::Compare; }

   /// Token of the forward relation: column name, @Next, @<, ...
   std::string base_token() const
   {
      if (kind_ == RelKind::Column) return column_;
      if (kind_ == RelKind::Compare) return std::string(compare_token(op_));
      return std::string(builtin_token(kind_));
   }

   std::string to_string() const { return reversed_ ? "(reverse " + base_token() + ")" : base_token(); }

   friend bool operator==(const Relation&, const Relation&) = default;
   friend auto operator<=>(const Relation&, const Relation&) = default;

private:
   Relation(RelKind k, std::string col, CompareOp op, bool rev) : kind_(k), column_(std::move(col)), op_(op), reversed_(rev) {}

   RelKind kind_;
   std::string column_;
   CompareOp op_;
   bool reversed_;
};

/// Relation from a single token (`Venue`, `@Index`, `@<=`), or from
/// `(reverse TOKEN)`. Returns nullopt for anything else.
inline std::optional<Relation> parse_relation(std::string_view text)
{
   constexpr std::string_view rev = "(reverse ";
   if (text.size() > rev.size() && text.substr(0, rev.size()) == rev && text.back() == ')') {
      auto inner = parse_relation(text.substr(rev.size(), text.size() - rev.size() - 1));
      if (!inner) return std::nullopt;
      return inner->reversed();
   }
   if (text.empty() || text == "$x") return std::nullopt;
   for (char c : text)
      if (c == ' ' || c == '(' || c == ')' || c == '"' || c == '\t' || c == '\n') return std::nullopt;
   if (text[0] == '@') {
      for (RelKind k : builtin_relations)
         if (text == builtin_token(k)) return Relation::builtin(k);
      for (CompareOp op : compare_ops)
         if (text == compare_token(op)) return Relation::compare(op);
      return std::nullopt;
   }
   if (text[0] == '$') return std::nullopt;
   return Relation::column(std::string(text));
}

} // namespace tabdpd
