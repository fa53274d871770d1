#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "tabdpd/text.hpp"
#include "tabdpd/world.hpp"

namespace tabdpd {

/// A contiguous token span [begin, end) of the utterance linked to a world value.
struct Anchor {
   int begin = 0;
   int end = 0;
   Value value;
   double score = 0.0;

   friend bool operator==(const Anchor&, const Anchor&) = default;
};

namespace detail {

inline bool is_stopword(const std::string& t)
{
   static const std::set<std::string> words = {"a",  "an", "and", "are", "as", "at",  "by",   "did", "do",  "for",
                                               "from", "had", "has", "in", "is", "it", "of", "on", "or", "the",
                                               "to", "was", "were", "what", "when", "where", "which", "who", "with"};
   return words.count(t) != 0;
}

inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
   std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
   std::size_t inter = 0;
   for (const auto& x : sa) inter += sb.count(x);
   const std::size_t uni = sa.size() + sb.size() - inter;
   return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace detail

/// Maximum span length considered when anchoring.
inline constexpr int max_anchor_span = 8;

/// Every (span, value) pair where the span approximately names a world
/// entity, number or date. Entity matching is on tokens: equal (score 1),
/// the span is a token prefix of the entity (score = covered fraction), or
/// token-set Jaccard >= 0.8. Numbers and dates match by parse equality.
/// Prefix and Jaccard matches need at least one non-stopword in the span.
inline std::vector<Anchor> anchor_entities(const std::string& utterance, const World& w)
{
   const auto tokens = tokenize(utterance);
   const int n = static_cast<int>(tokens.size());

   struct Candidate {
      Value value;
      std::vector<std::string> tokens;
   };
   std::vector<Candidate> entities;
   for (const Value& v : w.nodes()) {
      if (!v.is_entity() || v.entity_name().empty()) continue;
      entities.push_back({v, tokenize(v.entity_name())});
   }

   std::vector<Anchor> out;
   for (int b = 0; b < n; ++b) {
      for (int e = b + 1; e <= std::min(n, b + max_anchor_span); ++e) {
         std::vector<std::string> span(tokens.begin() + b, tokens.begin() + e);
         const bool content = std::any_of(span.begin(), span.end(), [](const auto& t) { return !detail::is_stopword(t); });
         for (const auto& cand : entities) {
            if (cand.tokens.empty()) continue;
            double score = 0.0;
            if (span == cand.tokens) {
               score = 1.0;
            } else if (content && span.size() < cand.tokens.size() &&
                       std::equal(span.begin(), span.end(), cand.tokens.begin())) {
               score = static_cast<double>(span.size()) / static_cast<double>(cand.tokens.size());
            } else if (content) {
               const double j = detail::jaccard(span, cand.tokens);
               if (j >= 0.8) score = j;
            }
            if (score > 0.0) out.push_back({b, e, cand.value, score});
         }
         if (e - b == 1) {
            const std::string& tok = span.front();
            if (std::any_of(tok.begin(), tok.end(), detail::is_digit)) {
               auto nums = extract_numbers(tok);
               if (!nums.empty() && contains(w.nodes(), Value::number(nums.front())))
                  out.push_back({b, e, Value::number(nums.front()), 1.0});
            }
         }
         std::string text;
         for (const auto& t : span) text += (text.empty() ? "" : " ") + t;
         if (auto d = parse_date(text)) {
            if (contains(w.nodes(), Value(*d))) out.push_back({b, e, Value(*d), 1.0});
         }
      }
   }
   return out;
}

/// Distinct anchored values, sorted.
inline ValueSet anchored_values(const std::vector<Anchor>& anchors)
{
   std::vector<Value> vals;
   for (const auto& a : anchors) vals.push_back(a.value);
   return make_set(std::move(vals));
}

} // namespace tabdpd
