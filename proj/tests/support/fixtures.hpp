#pragma once

#include <string>

#include "tabdpd/table.hpp"
#include "tabdpd/world.hpp"

namespace fixtures {

inline const char* fixture_a_tsv = "Year\tVenue\tPosition\tEvent\n"
                                   "2001\tHungary\t2nd\t5000 m\n"
                                   "2003\tFinland\t1st\t5000 m\n"
                                   "2005\tGermany\t11th\t10000 m\n"
                                   "2007\tThailand\t1st\trelay\n";

inline const char* fixture_a_question = "Where did the last 1st place finish occur?";

inline tabdpd::Table fixture_a_table() { return tabdpd::parse_table(fixture_a_tsv, tabdpd::TableFormat::Tsv, "fixture-a"); }

inline tabdpd::World fixture_a() { return tabdpd::build_world(fixture_a_table()); }

/// R[Venue].argmax(Position.1st, R[Index].x)
inline const char* z1 =
    R"((join (reverse Venue) (argmax (map (join Position (entity "1st")) (join (reverse @Index) $x)))))";

} // namespace fixtures
