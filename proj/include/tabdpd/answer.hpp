#pragma once

#include <string>
#include <vector>

#include "tabdpd/denotation.hpp"
#include "tabdpd/error.hpp"
#include "tabdpd/text.hpp"

namespace tabdpd {

/// Answer strings of a dataset example or an annotation, compared against
/// set denotations as multisets of normalized strings.
class TargetDenotation {
public:
   TargetDenotation() = default;

   explicit TargetDenotation(std::vector<std::string> answers)
   {
      if (answers.empty()) throw Error("answer must be non-empty");
      for (auto& a : answers) {
         Item it;
         it.text = normalize_entity(a);
         it.number = parse_plain_number(a);
         it.date = parse_date(a);
         if (it.text.empty() && !it.number && !it.date) throw Error("unparseable answer: '" + a + "'");
         items_.push_back(std::move(it));
      }
      raw_ = std::move(answers);
   }

   const std::vector<std::string>& answers() const noexcept { return raw_; }
   std::size_t size() const noexcept { return items_.size(); }

   /// Every answer string pairs with a distinct value and vice versa.
   bool matches(const Denotation& d) const
   {
      if (!d.is_set()) return false;
      const ValueSet& vs = d.values();
      if (vs.size() != items_.size()) return false;
      // Bipartite matching between answers and values (augmenting paths).
      std::vector<int> owner(vs.size(), -1);
      for (std::size_t a = 0; a < items_.size(); ++a) {
         std::vector<char> seen(vs.size(), 0);
         if (!augment(a, vs, owner, seen)) return false;
      }
      return true;
   }

   bool matches_value(std::size_t i, const Value& v) const
   {
      const Item& it = items_[i];
      switch (v.kind()) {
      case ValueKind::Entity: return v.entity_name() == it.text;
      case ValueKind::Number: return it.number && *it.number == v.number();
      case ValueKind::Date: return it.date && *it.date == v.date();
      case ValueKind::Row: return false;
      }
      return false;
   }

private:
   struct Item {
      std::string text;
      std::optional<double> number;
      std::optional<Date> date;
   };

   bool augment(std::size_t a, const ValueSet& vs, std::vector<int>& owner, std::vector<char>& seen) const
   {
      for (std::size_t v = 0; v < vs.size(); ++v) {
         if (seen[v] || !matches_value(a, vs[v])) continue;
         seen[v] = 1;
         if (owner[v] < 0 || augment(static_cast<std::size_t>(owner[v]), vs, owner, seen)) {
            owner[v] = static_cast<int>(a);
            return true;
         }
      }
      return false;
   }

   std::vector<std::string> raw_;
   std::vector<Item> items_;
};

} // namespace tabdpd
