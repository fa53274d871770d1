#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabdpd/error.hpp"
#include "tabdpd/relation.hpp"
#include "tabdpd/value.hpp"

namespace tabdpd {

struct SetD {
   ValueSet values;
   friend bool operator==(const SetD&, const SetD&) = default;
};

/// Unary restricted binary: one entry per element of the unary, sorted by key.
struct MapD {
   std::vector<std::pair<Value, ValueSet>> pairs;
   friend bool operator==(const MapD&, const MapD&) = default;
};

struct ErrorD {
   std::string reason;
   friend bool operator==(const ErrorD&, const ErrorD&) = default;
};

/// Denotation of a bare relation: the relation itself. Relations only act
/// through join, so two relations are interchangeable exactly when equal.
struct RelD {
   Relation relation;
   friend bool operator==(const RelD&, const RelD&) = default;
};

class Denotation {
public:
   Denotation() : data_(ErrorD{"empty-denotation"}) {}
   Denotation(SetD s) : data_(std::move(s)) {}
   Denotation(MapD m) : data_(std::move(m)) {}
   Denotation(ErrorD e) : data_(std::move(e)) {}
   Denotation(RelD r) : data_(std::move(r)) {}

   static Denotation set(ValueSet v) { return SetD{std::move(v)}; }
   static Denotation error(std::string reason) { return ErrorD{std::move(reason)}; }

   bool is_set() const noexcept { return std::holds_alternative<SetD>(data_); }
   bool is_map() const noexcept { return std::holds_alternative<MapD>(data_); }
   bool is_error() const noexcept { return std::holds_alternative<ErrorD>(data_); }
   bool is_relation() const noexcept { return std::holds_alternative<RelD>(data_); }

   const ValueSet& values() const { return std::get<SetD>(data_).values; }
   const MapD& map() const { return std::get<MapD>(data_); }
   const std::string& reason() const { return std::get<ErrorD>(data_).reason; }
   const Relation& relation() const { return std::get<RelD>(data_).relation; }

   friend bool operator==(const Denotation&, const Denotation&) = default;

private:
   std::variant<SetD, MapD, ErrorD, RelD> data_;
};

namespace detail {

inline void append_json_string(std::string& out, const std::string& s)
{
   out.push_back('"');
   for (unsigned char c : s) {
      switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
         if (c < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
         } else {
            out.push_back(static_cast<char>(c));
         }
      }
   }
   out.push_back('"');
}

inline void append_value_array(std::string& out, const ValueSet& vs)
{
   out.push_back('[');
   for (std::size_t i = 0; i < vs.size(); ++i) {
      if (i) out.push_back(',');
      append_json_string(out, to_string(vs[i]));
   }
   out.push_back(']');
}

} // namespace detail

/// Canonical compact JSON. Values are their canonical text inside JSON
/// strings; arrays are sorted. Equal denotations give equal strings.
///
///   {"kind":"set","values":["r1","r3"]}
///   {"kind":"map","pairs":[["r1",["1"]],["r3",["3"]]]}
///   {"kind":"error","reason":"type"}
///   {"kind":"relation","name":"(reverse Venue)"}
inline std::string to_json(const Denotation& d)
{
   std::string out;
   if (d.is_set()) {
      out = R"({"kind":"set","values":)";
      detail::append_value_array(out, d.values());
      out += "}";
   } else if (d.is_map()) {
      out = R"({"kind":"map","pairs":[)";
      const auto& pairs = d.map().pairs;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
         if (i) out.push_back(',');
         out.push_back('[');
         detail::append_json_string(out, to_string(pairs[i].first));
         out.push_back(',');
         detail::append_value_array(out, pairs[i].second);
         out.push_back(']');
      }
      out += "]}";
   } else if (d.is_error()) {
      out = R"({"kind":"error","reason":)";
      detail::append_json_string(out, d.reason());
      out += "}";
   } else {
      out = R"({"kind":"relation","name":)";
      detail::append_json_string(out, d.relation().to_string());
      out += "}";
   }
   return out;
}

/// Hashable identity of a denotation (its canonical JSON).
inline std::string denotation_key(const Denotation& d) { return to_json(d); }

/// Inverse of to_json.
inline Denotation denotation_from_json(const nlohmann::json& j)
{
   const std::string kind = j.at("kind").get<std::string>();
   auto values = [](const nlohmann::json& arr) {
      std::vector<Value> vs;
      for (const auto& v : arr) vs.push_back(parse_value(v.get<std::string>()));
      return make_set(std::move(vs));
   };
   if (kind == "set") return SetD{values(j.at("values"))};
   if (kind == "map") {
      MapD m;
      for (const auto& p : j.at("pairs")) m.pairs.emplace_back(parse_value(p.at(0).get<std::string>()), values(p.at(1)));
      std::sort(m.pairs.begin(), m.pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      return m;
   }
   if (kind == "error") return ErrorD{j.at("reason").get<std::string>()};
   if (kind == "relation") {
      auto r = parse_relation(j.at("name").get<std::string>());
      if (!r) throw Error("bad relation in denotation");
      return RelD{*r};
   }
   throw Error("unknown denotation kind: " + kind);
}

inline Denotation denotation_from_json(const std::string& text) { return denotation_from_json(nlohmann::json::parse(text)); }

} // namespace tabdpd
