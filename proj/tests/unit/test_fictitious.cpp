#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "random_tables.hpp"
#include "tabdpd/fictitious.hpp"

using namespace tabdpd;

namespace {

WorldPtr fixture_world() { return make_world(fixtures::fixture_a_table()); }

std::vector<std::string> column_of(const World& w, const std::string& name)
{
   const auto& cols = w.columns();
   return w.table().column(static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin()));
}

} // namespace

TEST(Worlds, FirstPlaceAlwaysPresent)
{
   const WorldSet ws = generate_worlds(fixture_world(), fixtures::fixture_a_question, 50, 3);
   ASSERT_EQ(ws.k(), 50);
   for (const auto& w : ws.worlds) {
      const auto pos = column_of(*w, "Position");
      EXPECT_NE(std::find(pos.begin(), pos.end(), "1st"), pos.end()) << w->id();
   }
   EXPECT_TRUE(check_world_set(ws).empty());
}

TEST(Worlds, SortedYearStaysSorted)
{
   const WorldSet ws = generate_worlds(fixture_world(), fixtures::fixture_a_question, 50, 4);
   ASSERT_EQ(ws.sorted.size(), 1u);
   EXPECT_EQ(ws.sorted[0].column, "Year");
   EXPECT_FALSE(ws.sorted[0].descending);
   for (const auto& w : ws.worlds) {
      const auto years = column_of(*w, "Year");
      EXPECT_TRUE(std::is_sorted(years.begin(), years.end())) << w->id();
   }
}

TEST(Worlds, DistinctColumnsDrawWithoutReplacement)
{
   const WorldPtr orig = fixture_world();
   const auto venues = column_of(*orig, "Venue");
   const std::set<std::string> pool(venues.begin(), venues.end());
   const WorldSet ws = generate_worlds(orig, fixtures::fixture_a_question, 50, 5);
   bool reordered = false;
   for (const auto& w : ws.worlds) {
      const auto v = column_of(*w, "Venue");
      EXPECT_EQ(std::set<std::string>(v.begin(), v.end()).size(), v.size());
      for (const auto& c : v) EXPECT_TRUE(pool.count(c)) << c;
      reordered |= v != venues;
      EXPECT_EQ(w->num_rows(), orig->num_rows());
      EXPECT_EQ(w->columns(), orig->columns());
   }
   EXPECT_TRUE(reordered);
}

TEST(Worlds, SameSeedSameManifest)
{
   const auto a = generate_worlds(fixture_world(), fixtures::fixture_a_question, 20, 9);
   const auto b = generate_worlds(fixture_world(), fixtures::fixture_a_question, 20, 9);
   const auto c = generate_worlds(fixture_world(), fixtures::fixture_a_question, 20, 10);
   EXPECT_EQ(manifest(a).dump(), manifest(b).dump());
   for (int i = 0; i < 20; ++i) EXPECT_EQ(export_world(*a.worlds[i]), export_world(*b.worlds[i]));
   bool differs = false;
   for (int i = 0; i < 20; ++i) differs |= export_world(*a.worlds[i]) != export_world(*c.worlds[i]);
   EXPECT_TRUE(differs);
}

TEST(Worlds, NonPositiveKRejected)
{
   EXPECT_THROW(generate_worlds(fixture_world(), fixtures::fixture_a_question, 0, 1), ConfigError);
}

TEST(Worlds, TooManyAnchorsForColumnRejected)
{
   // Required cells come from the column itself, so the table path cannot
   // overflow; the column resampler still guards it.
   Rng rng(1);
   try {
      resample_column({"Oslo", "Lima"}, {"Oslo", "Lima", "Bern"}, std::nullopt, "City", rng);
      FAIL() << "expected rejection";
   } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("City"), std::string::npos) << e.what();
   }
}

TEST(Worlds, SaveAndLoad)
{
   const auto dir = std::filesystem::temp_directory_path() / "tabdpd_worlds_test";
   std::filesystem::remove_all(dir);
   const WorldPtr orig = fixture_world();
   const auto ws = generate_worlds(orig, fixtures::fixture_a_question, 6, 2);
   save_world_set(ws, dir);
   const auto back = load_world_set(orig, dir);
   ASSERT_EQ(back.k(), 6);
   for (int i = 0; i < 6; ++i) EXPECT_EQ(export_world(*back.worlds[i]), export_world(*ws.worlds[i]));
   EXPECT_EQ(back.sorted, ws.sorted);
   EXPECT_EQ(manifest(back).dump(), manifest(ws).dump());
   std::filesystem::remove_all(dir);
}

TEST(Worlds, RandomTablesKeepInvariants)
{
   for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto ex = randtab::random_example(seed);
      const auto ws = generate_worlds(make_world(ex.table), ex.question, 10, seed);
      const auto v = check_world_set(ws);
      EXPECT_TRUE(v.empty()) << "seed " << seed << ": " << (v.empty() ? "" : v.front());
   }
}

TEST(Worlds, DetectSorted)
{
   const Table t = parse_table("A\tB\tC\tD\n3\tx\t2001\t1 May 2001\n2\ty\t1999\t1 June 2001\n2\tz\t2005\t3 June 2001\n",
                               TableFormat::Tsv);
   const auto a = detect_sorted(t, 0);
   ASSERT_TRUE(a);
   EXPECT_TRUE(a->descending);
   EXPECT_FALSE(detect_sorted(t, 1));
   EXPECT_FALSE(detect_sorted(t, 2));
   const auto d = detect_sorted(t, 3);
   ASSERT_TRUE(d);
   EXPECT_FALSE(d->descending);
}
