#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tabdpd/error.hpp"

namespace tabdpd {

/// Partial calendar date. Any component may be unknown, but not all of them.
struct Date {
   static constexpr int unknown = -1;

   int year = unknown;
   int month = unknown;
   int day = unknown;

   bool valid() const noexcept { return year != unknown || month != unknown || day != unknown; }
   bool complete() const noexcept { return year != unknown && month != unknown && day != unknown; }

   friend bool operator==(const Date&, const Date&) = default;
   friend auto operator<=>(const Date&, const Date&) = default;
};

/// Order two dates component-wise. Returns nullopt when a component is known
/// on one side only before the first difference.
inline std::optional<std::strong_ordering> compare_dates(const Date& a, const Date& b) noexcept
{
   const int lhs[3] = {a.year, a.month, a.day};
   const int rhs[3] = {b.year, b.month, b.day};
   for (int i = 0; i < 3; ++i) {
      const bool ka = lhs[i] != Date::unknown;
      const bool kb = rhs[i] != Date::unknown;
      if (ka != kb) return std::nullopt;
      if (ka && lhs[i] != rhs[i]) return lhs[i] <=> rhs[i];
   }
   return std::strong_ordering::equal;
}

struct RowRef {
   int index = 0;
   friend bool operator==(const RowRef&, const RowRef&) = default;
};

struct Entity {
   std::string name;
   friend bool operator==(const Entity&, const Entity&) = default;
};

struct Number {
   double value = 0.0;
   friend bool operator==(const Number&, const Number&) = default;
};

enum class ValueKind : std::uint8_t { Row = 0, Entity = 1, Number = 2, Date = 3 };

/// A node of a world: a row, a normalized cell string, a number or a date.
class Value {
public:
   Value() = default;
   Value(RowRef r) : data_(r) {}
   Value(Entity e) : data_(std::move(e)) {}
   Value(Number n) : data_(n) {}
   Value(Date d) : data_(d) {}

   static Value row(int i) { return Value(RowRef{i}); }
   static Value entity(std::string s) { return Value(Entity{std::move(s)}); }
   static Value number(double v) { return Value(Number{v}); }
   static Value date(int y, int m, int d) { return Value(Date{y, m, d}); }

   ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }
   bool is_row() const noexcept { return kind() == ValueKind::Row; }
   bool is_entity() const noexcept { return kind() == ValueKind::Entity; }
   bool is_number() const noexcept { return kind() == ValueKind::Number; }
   bool is_date() const noexcept { return kind() == ValueKind::Date; }

   int row_index() const { return std::get<RowRef>(data_).index; }
   const std::string& entity_name() const { return std::get<Entity>(data_).name; }
   double number() const { return std::get<Number>(data_).value; }
   const Date& date() const { return std::get<Date>(data_); }

   friend bool operator==(const Value&, const Value&) = default;

   /// Total order by (kind, payload).
   friend bool operator<(const Value& a, const Value& b)
   {
      if (a.data_.index() != b.data_.index()) return a.data_.index() < b.data_.index();
      switch (a.kind()) {
      case ValueKind::Row: return a.row_index() < b.row_index();
      case ValueKind::Entity: return a.entity_name() < b.entity_name();
      case ValueKind::Number: return a.number() < b.number();
      case ValueKind::Date: return a.date() < b.date();
      }
      return false;
   }

private:
   std::variant<RowRef, Entity, Number, Date> data_;
};

struct ValueHash {
   std::size_t operator()(const Value& v) const noexcept
   {
      const std::size_t k = static_cast<std::size_t>(v.kind()) * 0x9E3779B97F4A7C15ull;
      switch (v.kind()) {
      case ValueKind::Row: return k ^ std::hash<int>{}(v.row_index());
      case ValueKind::Entity: return k ^ std::hash<std::string>{}(v.entity_name());
      case ValueKind::Number: return k ^ std::hash<double>{}(v.number());
      case ValueKind::Date: {
         const Date& d = v.date();
         return k ^ std::hash<long long>{}((static_cast<long long>(d.year) << 20) ^ (d.month << 8) ^ d.day);
      }
      }
      return k;
   }
};

/// Sorted, duplicate-free vector of values.
using ValueSet = std::vector<Value>;

inline void canonicalize(ValueSet& s)
{
   std::sort(s.begin(), s.end());
   s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline ValueSet make_set(std::vector<Value> values)
{
   canonicalize(values);
   return values;
}

inline bool contains(const ValueSet& s, const Value& v)
{
   return std::binary_search(s.begin(), s.end(), v);
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v)
{
   if (v == 0.0) return "0";
   char buf[64];
   auto res = std::to_chars(buf, buf + sizeof(buf), v);
   return std::string(buf, res.ptr);
}

inline std::string format_date(const Date& d)
{
   auto part = [](int x, int width) {
      if (x == Date::unknown) return std::string("XX");
      std::string s = std::to_string(x);
      if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
      return s;
   };
   return part(d.year, 4) + "-" + part(d.month, 2) + "-" + part(d.day, 2);
}

inline std::string quote(std::string_view s)
{
   std::string out;
   out.reserve(s.size() + 2);
   out.push_back('"');
   for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
   }
   out.push_back('"');
   return out;
}

/// Canonical text: rows as r<i>, numbers as shortest decimals, dates as
/// Y-M-D with XX for unknown components, entities as quoted strings.
inline std::string to_string(const Value& v)
{
   switch (v.kind()) {
   case ValueKind::Row: return "r" + std::to_string(v.row_index());
   case ValueKind::Entity: return quote(v.entity_name());
   case ValueKind::Number: return format_number(v.number());
   case ValueKind::Date: return format_date(v.date());
   }
   return {};
}

namespace detail {

inline std::optional<int> parse_date_part(std::string_view s)
{
   if (s == "XX") return Date::unknown;
   int x = 0;
   auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
   if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
   return x;
}

inline std::string unquote(std::string_view s)
{
   std::string out;
   for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) ++i;
      out.push_back(s[i]);
   }
   return out;
}

} // namespace detail

/// Inverse of to_string(const Value&).
inline Value parse_value(std::string_view s)
{
   if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return Value::entity(detail::unquote(s));
   if (s.size() >= 2 && s.front() == 'r' && std::all_of(s.begin() + 1, s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return Value::row(std::stoi(std::string(s.substr(1))));
   const auto first = s.find('-', 1);
   if (first != std::string_view::npos) {
      const auto second = s.find('-', first + 1);
      if (second != std::string_view::npos) {
         auto y = detail::parse_date_part(s.substr(0, first));
         auto m = detail::parse_date_part(s.substr(first + 1, second - first - 1));
         auto d = detail::parse_date_part(s.substr(second + 1));
         if (y && m && d) return Value::date(*y, *m, *d);
      }
   }
   double x = 0;
   auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
   if (ec != std::errc{} || p != s.data() + s.size()) throw Error("bad value literal: " + std::string(s));
   return Value::number(x);
}

} // namespace tabdpd
