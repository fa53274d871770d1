#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tabdpd/anchor.hpp"
#include "tabdpd/world.hpp"

using namespace tabdpd;

namespace {

bool has_edge(const World& w, const std::string& rel, const Value& s, const Value& d)
{
   for (const auto& [r, a, b] : w.edge_list())
      if (r == rel && a == s && b == d) return true;
   return false;
}

bool anchored(const std::vector<Anchor>& anchors, const Value& v)
{
   for (const auto& a : anchors)
      if (a.value == v) return true;
   return false;
}

} // namespace

TEST(ParseTable, HeaderAndOneRow)
{
   const Table t = parse_table("Year\tVenue\n2002\tFinland\n", TableFormat::Tsv);
   EXPECT_EQ(t.num_rows(), 1u);
   EXPECT_EQ(t.num_columns(), 2u);
   EXPECT_EQ(t.rows[0][1], "Finland");
}

TEST(ParseTable, FixtureHasFourRows) { EXPECT_EQ(fixtures::fixture_a_table().num_rows(), 4u); }

TEST(ParseTable, RaggedRowNamesRow)
{
   try {
      parse_table("A\tB\nx\ty\tz\n", TableFormat::Tsv);
      FAIL() << "expected rejection";
   } catch (const TableError& e) {
      EXPECT_NE(std::string(e.what()).find("ragged row 1"), std::string::npos);
   }
}

TEST(ParseTable, EmptyHeaderRejected)
{
   EXPECT_THROW(parse_table("\t\nx\ty\n", TableFormat::Tsv), TableError);
   EXPECT_THROW(parse_table("", TableFormat::Csv), TableError);
}

TEST(ParseTable, CsvQuotingAndEmptyCells)
{
   const Table t = parse_table("Name,Note\n\"Smith, J\",\n\" padded \",\"say \"\"hi\"\"\"\n", TableFormat::Csv);
   ASSERT_EQ(t.num_rows(), 2u);
   EXPECT_EQ(t.rows[0][0], "Smith, J");
   EXPECT_EQ(t.rows[0][1], "");
   EXPECT_EQ(t.rows[1][0], "padded");
   EXPECT_EQ(t.rows[1][1], "say \"hi\"");
}

TEST(ParseTable, DuplicateColumnsAreSuffixed)
{
   const Table t = parse_table("A\tA\tB\n1\t2\t3\n", TableFormat::Tsv);
   EXPECT_NE(t.columns[0], t.columns[1]);
}

TEST(NormalizeCell, ThreeDashFour)
{
   const auto n = normalize_cell("3-4");
   EXPECT_EQ(n.number, 3.0);
   EXPECT_EQ(n.num2, 4.0);
   ASSERT_TRUE(n.date);
   EXPECT_EQ(*n.date, (Date{Date::unknown, 3, 4}));
   EXPECT_TRUE(n.parts.empty());
}

TEST(NormalizeCell, PlainWordHasNothing)
{
   const auto n = normalize_cell("hello");
   EXPECT_FALSE(n.number);
   EXPECT_FALSE(n.num2);
   EXPECT_FALSE(n.date);
   EXPECT_TRUE(n.parts.empty());
}

TEST(NormalizeCell, MonthYear)
{
   const auto n = normalize_cell("January 2004");
   EXPECT_EQ(n.number, 2004.0);
   EXPECT_FALSE(n.num2);
   ASSERT_TRUE(n.date);
   EXPECT_EQ(*n.date, (Date{2004, 1, Date::unknown}));
}

TEST(NormalizeCell, DatePatterns)
{
   EXPECT_EQ(*parse_date("1999"), (Date{1999, Date::unknown, Date::unknown}));
   EXPECT_EQ(*parse_date("4 July 1976"), (Date{1976, 7, 4}));
   EXPECT_EQ(*parse_date("2010-05-06"), (Date{2010, 5, 6}));
   EXPECT_EQ(*parse_date("25/12/2000"), (Date{2000, 12, 25}));
   EXPECT_FALSE(parse_date("13-40"));
}

TEST(NormalizeCell, PartsSplitOnDelimiters)
{
   EXPECT_EQ(normalize_cell("red, green; blue").parts, (std::vector<std::string>{"red", "green", "blue"}));
   EXPECT_TRUE(normalize_cell("1,234").parts.empty());
}

TEST(NormalizeCell, NumberNullIffNoDigits)
{
   for (const char* s : {"", "abc", "x-y", "1", "a1b", "-2.5", "no. 7"}) {
      const bool digits = std::string(s).find_first_of("0123456789") != std::string::npos;
      EXPECT_EQ(normalize_cell(s).number.has_value(), digits) << s;
   }
}

TEST(NormalizeEntity, LowercaseCollapseStrip)
{
   EXPECT_EQ(normalize_entity("  The   Beatles! "), "the beatles");
   EXPECT_EQ(normalize_entity("\"Quoted\""), "quoted");
}

TEST(BuildWorld, ThreeDashFourEdges)
{
   const World w = build_world(parse_table("Score\n3-4\n", TableFormat::Tsv));
   const Value cell = Value::entity("3-4");
   EXPECT_TRUE(has_edge(w, "@Number", cell, Value::number(3)));
   EXPECT_TRUE(has_edge(w, "@Num2", cell, Value::number(4)));
   EXPECT_TRUE(has_edge(w, "@Date", cell, Value(Date{Date::unknown, 3, 4})));
}

TEST(BuildWorld, FixtureVenueRowOne)
{
   const World w = fixtures::fixture_a();
   EXPECT_TRUE(has_edge(w, "Venue", Value::row(1), Value::entity("finland")));
}

TEST(BuildWorld, OneRowTable)
{
   const World w = build_world(parse_table("A\nx\n", TableFormat::Tsv));
   EXPECT_EQ(w.edges(Relation::builtin(RelKind::Next))->size(), 0u);
   EXPECT_TRUE(has_edge(w, "@Index", Value::row(0), Value::number(0)));
}

TEST(BuildWorld, NextIsAPathAndIndexIsTotal)
{
   const World w = fixtures::fixture_a();
   const EdgeSet* next = w.edges(Relation::builtin(RelKind::Next));
   EXPECT_EQ(next->size(), 3u);
   for (int i = 1; i < 4; ++i) EXPECT_TRUE(has_edge(w, "@Next", Value::row(i - 1), Value::row(i)));
   for (int i = 0; i < 4; ++i) EXPECT_TRUE(has_edge(w, "@Index", Value::row(i), Value::number(i)));
}

TEST(BuildWorld, EachColumnMapsEachRowToOneCell)
{
   const World w = fixtures::fixture_a();
   for (const auto& c : w.columns()) {
      const EdgeSet* e = w.edges(Relation::column(c));
      for (int i = 0; i < w.num_rows(); ++i) EXPECT_EQ(e->image(Value::row(i)).size(), 1u) << c;
   }
}

TEST(BuildWorld, Deterministic)
{
   EXPECT_EQ(export_world(fixtures::fixture_a()), export_world(fixtures::fixture_a()));
}

TEST(BuildWorld, ExportFormat)
{
   const std::string dump = export_world(fixtures::fixture_a());
   EXPECT_NE(dump.find("REL Venue r1 \"finland\"\n"), std::string::npos);
   EXPECT_NE(dump.find("REL @Index r3 3\n"), std::string::npos);
}

TEST(Anchor, RunningQuestionAnchorsFirst)
{
   const World w = fixtures::fixture_a();
   const auto anchors = anchor_entities(fixtures::fixture_a_question, w);
   EXPECT_TRUE(anchored(anchors, Value::entity("1st")));
   for (const auto& a : anchors) EXPECT_TRUE(contains(w.nodes(), a.value));
}

TEST(Anchor, NoSharedTokens)
{
   EXPECT_TRUE(anchor_entities("completely unrelated words", fixtures::fixture_a()).empty());
}

TEST(Anchor, ExactMultiTokenScoreOne)
{
   const World w = build_world(parse_table("Name\nLukas Bauer\nAnna Berg\n", TableFormat::Tsv));
   const auto anchors = anchor_entities("When did Lukas Bauer win?", w);
   bool found = false;
   for (const auto& a : anchors)
      if (a.value == Value::entity("lukas bauer") && a.score == 1.0) found = true;
   EXPECT_TRUE(found);
}

TEST(Anchor, NumbersMatchByValue)
{
   const World w = fixtures::fixture_a();
   EXPECT_TRUE(anchored(anchor_entities("what happened in 2005", w), Value::number(2005)));
}
