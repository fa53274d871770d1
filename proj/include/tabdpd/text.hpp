#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tabdpd/value.hpp"

namespace tabdpd {

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
// Bytes >= 0x80 belong to UTF-8 sequences and count as word characters.
inline bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || static_cast<unsigned char>(c) >= 0x80; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

} // namespace detail

inline std::string trim(std::string_view s)
{
   std::size_t b = 0, e = s.size();
   while (b < e && detail::is_space(s[b])) ++b;
   while (e > b && detail::is_space(s[e - 1])) --e;
   return std::string(s.substr(b, e - b));
}

/// Lowercase, collapse whitespace, strip surrounding punctuation.
inline std::string normalize_entity(std::string_view s)
{
   std::size_t b = 0, e = s.size();
   while (b < e && (detail::is_space(s[b]) || detail::is_punct(s[b]))) ++b;
   while (e > b && (detail::is_space(s[e - 1]) || detail::is_punct(s[e - 1]))) --e;
   std::string out;
   out.reserve(e - b);
   bool pending_space = false;
   for (std::size_t i = b; i < e; ++i) {
      if (detail::is_space(s[i])) {
         pending_space = true;
         continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(detail::lower(s[i]));
   }
   return out;
}

/// Lowercased word tokens; punctuation separates tokens and is dropped.
inline std::vector<std::string> tokenize(std::string_view s)
{
   std::vector<std::string> out;
   std::string cur;
   for (char c : s) {
      if (detail::is_word(c)) {
         cur.push_back(detail::lower(c));
      } else if (!cur.empty()) {
         out.push_back(std::move(cur));
         cur.clear();
      }
   }
   if (!cur.empty()) out.push_back(std::move(cur));
   return out;
}

/// Every decimal literal in `s`, in order. A '-' is a sign only when it does
/// not follow a word character ("3-4" yields 3 and 4). Comma groups of exactly
/// three digits are thousands separators.
inline std::vector<double> extract_numbers(std::string_view s)
{
   std::vector<double> out;
   std::size_t i = 0;
   while (i < s.size()) {
      if (!detail::is_digit(s[i])) {
         ++i;
         continue;
      }
      bool negative = i > 0 && s[i - 1] == '-' && (i == 1 || !detail::is_word(s[i - 2]));
      std::string lit;
      std::size_t j = i;
      while (j < s.size() && detail::is_digit(s[j])) lit.push_back(s[j++]);
      while (j + 3 < s.size() && s[j] == ',' && detail::is_digit(s[j + 1]) && detail::is_digit(s[j + 2]) &&
             detail::is_digit(s[j + 3]) && (j + 4 == s.size() || !detail::is_digit(s[j + 4]))) {
         lit.append(s.substr(j + 1, 3));
         j += 4;
      }
      if (j + 1 < s.size() && s[j] == '.' && detail::is_digit(s[j + 1])) {
         lit.push_back('.');
         ++j;
         while (j < s.size() && detail::is_digit(s[j])) lit.push_back(s[j++]);
      }
      double v = 0;
      std::from_chars(lit.data(), lit.data() + lit.size(), v);
      out.push_back(negative ? -v : v);
      i = j;
   }
   return out;
}

namespace detail {

inline int month_from_name(std::string_view name)
{
   static constexpr std::array<std::string_view, 12> full = {"january", "february", "march",     "april",   "may",      "june",
                                                             "july",    "august",   "september", "october", "november", "december"};
   for (int m = 0; m < 12; ++m) {
      if (name == full[m] || (name.size() >= 3 && name == full[m].substr(0, 3)) || (m == 8 && name == "sept"))
         return m + 1;
   }
   return 0;
}

inline bool valid_md(int m, int d) { return m >= 1 && m <= 12 && d >= 1 && d <= 31; }

} // namespace detail

/// Interpret the whole cell text as a (partial) date. Supported layouts:
///
///   YYYY           2004          -> 2004-XX-XX
///   Month YYYY     January 2004  -> 2004-01-XX
///   D Month YYYY   4 March 2004  -> 2004-03-04
///   YYYY-MM-DD     2004-03-04    -> 2004-03-04
///   M-D            3-4           -> XX-03-04
///   D/M/YYYY       4/3/2004      -> 2004-03-04
///
/// Month names match in full or by three-letter abbreviation, case-insensitively.
inline std::optional<Date> parse_date(std::string_view text)
{
   static const std::regex year_only(R"(^(\d{4})$)");
   static const std::regex month_year(R"(^([a-z]+)\.?\s+(\d{4})$)");
   static const std::regex day_month_year(R"(^(\d{1,2})\s+([a-z]+)\.?\s+(\d{4})$)");
   static const std::regex iso(R"(^(\d{4})-(\d{1,2})-(\d{1,2})$)");
   static const std::regex month_day(R"(^(\d{1,2})-(\d{1,2})$)");
   static const std::regex slashed(R"(^(\d{1,2})/(\d{1,2})/(\d{4})$)");

   std::string s = trim(text);
   for (char& c : s) c = detail::lower(c);
   std::smatch m;
   auto num = [&](int i) { return std::stoi(m[i].str()); };
   if (std::regex_match(s, m, year_only)) return Date{num(1), Date::unknown, Date::unknown};
   if (std::regex_match(s, m, month_year)) {
      if (int mo = detail::month_from_name(m[1].str())) return Date{num(2), mo, Date::unknown};
      return std::nullopt;
   }
   if (std::regex_match(s, m, day_month_year)) {
      int mo = detail::month_from_name(m[2].str());
      if (mo && detail::valid_md(mo, num(1))) return Date{num(3), mo, num(1)};
      return std::nullopt;
   }
   if (std::regex_match(s, m, iso)) {
      if (detail::valid_md(num(2), num(3))) return Date{num(1), num(2), num(3)};
      return std::nullopt;
   }
   if (std::regex_match(s, m, month_day)) {
      if (detail::valid_md(num(1), num(2))) return Date{Date::unknown, num(1), num(2)};
      return std::nullopt;
   }
   if (std::regex_match(s, m, slashed)) {
      if (detail::valid_md(num(2), num(1))) return Date{num(3), num(2), num(1)};
      return std::nullopt;
   }
   return std::nullopt;
}

/// Whole text is a single number literal (thousands separators allowed).
inline std::optional<double> parse_plain_number(std::string_view text)
{
   static const std::regex plain(R"(^-?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$)");
   std::string s = trim(text);
   if (!std::regex_match(s, plain)) return std::nullopt;
   auto nums = extract_numbers(s);
   if (nums.size() != 1) return std::nullopt;
   return nums.front();
}

struct CellNormalization {
   std::optional<double> number;
   std::optional<double> num2;
   std::optional<Date> date;
   std::vector<std::string> parts;
};

/// List items of a comma/semicolon/newline separated cell; empty unless the
/// text has at least two non-empty items and is not a number like "1,234".
inline std::vector<std::string> split_parts(std::string_view text)
{
   if (parse_plain_number(text)) return {};
   std::vector<std::string> items;
   std::string cur;
   for (char c : text) {
      if (c == ',' || c == ';' || c == '\n') {
         items.push_back(trim(cur));
         cur.clear();
      } else {
         cur.push_back(c);
      }
   }
   items.push_back(trim(cur));
   std::erase_if(items, [](const std::string& s) { return s.empty(); });
   if (items.size() < 2) return {};
   return items;
}

inline CellNormalization normalize_cell(std::string_view text)
{
   CellNormalization out;
   auto nums = extract_numbers(text);
   if (!nums.empty()) out.number = nums[0];
   if (nums.size() > 1) out.num2 = nums[1];
   out.date = parse_date(text);
   out.parts = split_parts(text);
   return out;
}

/// Column identifiers: whitespace becomes '_', parentheses and quotes are
/// dropped, and a leading '@' or '$' is removed so names never collide with
/// the built-in relation or variable syntax.
inline std::string normalize_column_name(std::string_view raw)
{
   std::string t = trim(raw);
   std::string out;
   bool pending = false;
   for (char c : t) {
      if (detail::is_space(c)) {
         pending = true;
         continue;
      }
      if (c == '(' || c == ')' || c == '"' || c == '\'') continue;
      if (pending && !out.empty()) out.push_back('_');
      pending = false;
      out.push_back(c);
   }
   while (!out.empty() && (out.front() == '@' || out.front() == '$')) out.erase(out.begin());
   if (out.empty()) out = "column";
   return out;
}

inline std::vector<std::string> normalize_column_names(const std::vector<std::string>& raw)
{
   std::vector<std::string> out;
   std::set<std::string> seen;
   for (const auto& r : raw) {
      std::string base = normalize_column_name(r);
      std::string name = base;
      for (int k = 2; seen.count(name); ++k) name = base + "_" + std::to_string(k);
      seen.insert(name);
      out.push_back(name);
   }
   return out;
}

} // namespace tabdpd
