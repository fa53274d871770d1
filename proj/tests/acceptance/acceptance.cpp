// Acceptance suite: one PASS/FAIL line per criterion; non-zero exit on any
// failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "random_tables.hpp"
#include "select_oracle.hpp"
#include "tabdpd/beam.hpp"
#include "tabdpd/classes.hpp"
#include "tabdpd/dpd.hpp"
#include "tabdpd/fictitious.hpp"
#include "tabdpd/invariance.hpp"

using namespace tabdpd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
   bool pass = false;
   std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body)
{
   const auto t0 = Clock::now();
   Outcome o;
   try {
      o = body();
   } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
   }
   const double t = seconds_since(t0);
   if (budget_s > 0 && t >= budget_s) {
      o.pass = false;
      o.detail += "; over time budget of " + std::to_string(budget_s) + " s";
   }
   failures += !o.pass;
   std::printf("%s  %-28s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), t, o.detail.c_str());
   std::fflush(stdout);
}

std::set<std::string> canon(const std::vector<FormPtr>& fs)
{
   std::set<std::string> out;
   for (const auto& f : fs) out.insert(f->canonical());
   return out;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

// The random table suite shared by several criteria.
constexpr std::uint64_t suite_seed0 = 1000;
constexpr int suite_size = 24;
constexpr int suite_s_max = 4;

struct SuiteCase {
   std::uint64_t seed;
   randtab::RandomExample ex;
   WorldPtr world;
   std::vector<Anchor> anchors;
   TargetDenotation target;
};

const std::vector<SuiteCase>& suite()
{
   static const std::vector<SuiteCase> cases = [] {
      std::vector<SuiteCase> out;
      for (int i = 0; i < suite_size; ++i) {
         const std::uint64_t seed = suite_seed0 + static_cast<std::uint64_t>(i);
         auto ex = randtab::random_example(seed);
         WorldPtr w = make_world(ex.table);
         auto anchors = anchor_entities(ex.question, *w);
         TargetDenotation y(ex.answer);
         out.push_back(SuiteCase{seed, std::move(ex), std::move(w), std::move(anchors), std::move(y)});
      }
      return out;
   }();
   return cases;
}

std::map<std::uint64_t, std::set<std::string>>& suite_z()
{
   static std::map<std::uint64_t, std::set<std::string>> z;
   return z;
}

const std::set<std::string>& z_of(const SuiteCase& c)
{
   auto& z = suite_z();
   if (!z.count(c.seed)) z[c.seed] = canon(run_dpd(c.anchors, *c.world, c.target, default_rules(), suite_s_max).forms);
   return z[c.seed];
}

int run_cli(const std::string& args)
{
   const std::string cmd = std::string(TABDPD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
   const int status = std::system(cmd.c_str());
   return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const fs::path& p)
{
   std::ifstream in(p);
   return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome executor_goldens()
{
   const World w = fixtures::fixture_a();
   std::vector<std::string> bad;
   auto expect = [&](const char* form, const char* want) {
      const std::string got = to_json(execute(parse_form(form), w));
      if (got != want) bad.push_back(std::string(form) + " gave " + got);
   };
   expect(R"((join Position (entity "1st")))", R"({"kind":"set","values":["r1","r3"]})");
   expect(R"((map (join Position (entity "1st")) (join (reverse @Index) $x)))",
          R"({"kind":"map","pairs":[["r1",["1"]],["r3",["3"]]]})");
   expect(R"((argmax (map (join Position (entity "1st")) (join (reverse @Index) $x))))", R"({"kind":"set","values":["r3"]})");
   expect(fixtures::z1, R"({"kind":"set","values":["\"thailand\""]})");
   expect(R"((join (reverse Venue) (join Position (entity "1st"))))", R"({"kind":"set","values":["\"finland\"","\"thailand\""]})");
   expect(R"((join Event (entity "relay")))", R"({"kind":"set","values":["r3"]})");
   if (!TargetDenotation({"Thailand"}).matches(execute(parse_form(fixtures::z1), w))) bad.push_back("z1 does not match Thailand");
   return {bad.empty(), bad.empty() ? "6 goldens exact" : bad.front()};
}

Outcome dpd_oracle()
{
   int equal = 0, nonempty = 0;
   std::string first_bad;
   for (const auto& c : suite()) {
      const auto& got = z_of(c);
      const auto want = oracle::consistent(*c.world, c.anchors, c.target, suite_s_max);
      if (got == want) ++equal;
      else if (first_bad.empty())
         first_bad = "seed " + std::to_string(c.seed) + ": dpd " + std::to_string(got.size()) + " vs oracle " + std::to_string(want.size());
      nonempty += !got.empty();
   }
   std::ostringstream d;
   d << equal << "/" << suite().size() << " tables equal at s_max " << suite_s_max << ", " << nonempty << " with non-empty Z";
   if (!first_bad.empty()) d << "; " << first_bad;
   return {equal == static_cast<int>(suite().size()) && suite().size() >= 20, d.str()};
}

Outcome beam_subset()
{
   int runs = 0, violations = 0, unequal_inf = 0;
   std::map<int, std::pair<std::size_t, std::size_t>> recall; // beam -> (|Z_b|, |Z|)
   for (const auto& c : suite()) {
      const auto& z = z_of(c);
      for (int b : {1, 4, 16, 0}) {
         for (std::uint64_t s = 1; s <= 5; ++s) {
            const auto ds = beam_search(c.anchors, *c.world, default_rules(), BeamOptions{suite_s_max, b, random_scorer(s)});
            const auto zb = canon(consistent_forms(ds, *c.world, c.target));
            ++runs;
            violations += !subset(zb, z);
            if (b == 0) unequal_inf += zb != z;
            recall[b].first += zb.size();
            recall[b].second += z.size();
         }
      }
   }
   std::ostringstream d;
   d << runs << " runs, " << violations << " subset violations, " << unequal_inf << " unequal at beam=inf; recall";
   for (int b : {1, 4, 16, 0})
      d << " " << (b ? std::to_string(b) : std::string("inf")) << ":"
        << (recall[b].second ? static_cast<double>(recall[b].first) / static_cast<double>(recall[b].second) : 1.0);
   return {violations == 0 && unequal_inf == 0, d.str()};
}

Outcome cell_reduction()
{
   std::size_t p1 = 0, p2 = 0;
   int examples = 0, bad = 0;
   auto account = [&](const ChartStats& s) {
      if (s.z_size == 0) return;
      ++examples;
      bad += !(s.pass2_cells < s.pass1_cells);
      p1 += s.pass1_cells;
      p2 += s.pass2_cells;
   };
   const World fa = fixtures::fixture_a();
   account(run_dpd(fixtures::fixture_a_question, fa, TargetDenotation({"Thailand"}), default_rules(), 7).stats);
   for (const auto& c : suite()) account(run_dpd(c.anchors, *c.world, c.target, default_rules(), suite_s_max).stats);
   std::ostringstream d;
   d << examples << " examples with non-empty Z, " << bad << " without reduction; marked/pass-1 cells " << p2 << "/" << p1
     << " = " << (p1 ? static_cast<double>(p2) / static_cast<double>(p1) : 0.0) << " (reduction "
     << (p1 ? 100.0 * (1.0 - static_cast<double>(p2) / static_cast<double>(p1)) : 0.0) << "%)";
   return {examples > 0 && bad == 0, d.str()};
}

Rule larger_argument_rule()
{
   Rule r;
   r.id = "X-larger";
   r.op = RuleOp::Custom;
   r.args = {Category::Set, Category::Set};
   r.build = [](std::span<const FormPtr> a) -> std::optional<FormPtr> { return a[1]->size() > a[0]->size() ? a[1] : a[0]; };
   r.denote = [](const World&, std::span<const Denotation* const> d) { return *d[0]; };
   return r;
}

Outcome invariance_suite()
{
   const World w = fixtures::fixture_a();
   const RuleSet rules = default_rules();
   const DerivationPool pool(w, rules, 2, 4000, 5);
   std::ostringstream d;
   bool ok = true;
   int checked = 0, vacuous = 0, min_trials = -1;
   for (const Rule& r : rules.rules()) {
      const InvarianceReport rep = check_invariance(r, 500, w, pool, 17);
      if (!r.compositional()) {
         ++vacuous;
         ok &= rep.passed;
         continue;
      }
      ++checked;
      min_trials = min_trials < 0 ? rep.trials : std::min(min_trials, rep.trials);
      if (!rep.passed || rep.trials < 500) {
         ok = false;
         d << r.id << " " << (rep.passed ? "too few trials " + std::to_string(rep.trials) : "failed: " + rep.counterexample.value_or("")) << "; ";
      }
   }
   const InvarianceReport broken = check_invariance(larger_argument_rule(), 500, w, pool, 17);
   const bool caught = !broken.passed && broken.counterexample && !broken.counterexample->empty();
   ok &= caught;
   d << checked << " compositional rules, min " << min_trials << " trials each; " << vacuous
     << " argument-free rules vacuous; broken rule " << (caught ? "caught" : "NOT caught");
   return {ok, d.str()};
}

std::vector<EquivalenceClass> synthetic(const std::vector<std::vector<std::string>>& tuples)
{
   std::vector<EquivalenceClass> out;
   for (std::size_t i = 0; i < tuples.size(); ++i) {
      EquivalenceClass c;
      c.tuple = tuples[i];
      c.members = {Form::literal(Value::number(static_cast<double>(i)))};
      c.representative = c.members.front();
      out.push_back(std::move(c));
   }
   return out;
}

Outcome selection_oracle()
{
   Rng rng(4242);
   int equal = 0;
   const int n = 50;
   for (int inst = 0; inst < n; ++inst) {
      const int k = 1 + static_cast<int>(rng.uniform_index(10));
      const int l = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(std::min(3, k))));
      const int classes = 1 + static_cast<int>(rng.uniform_index(16));
      const int alphabet = 2 + static_cast<int>(rng.uniform_index(3));
      std::set<std::vector<std::string>> uniq;
      for (int tries = 0; static_cast<int>(uniq.size()) < classes && tries < 200; ++tries) {
         std::vector<std::string> t;
         for (int w = 0; w < k; ++w) t.push_back(std::to_string(rng.uniform_index(static_cast<std::size_t>(alphabet))));
         uniq.insert(t);
      }
      const std::vector<std::vector<std::string>> tuples(uniq.begin(), uniq.end());
      const auto best = select_oracle::minimum(tuples, k, l);
      const Selection s = select_worlds(synthetic(tuples), k, l);
      equal += s.objective == best.objective && s.worlds.size() == static_cast<std::size_t>(l);
   }
   const double h = entropy(std::vector<std::size_t>{2, 1, 1}, 4);
   const bool entropy_ok = h == 0.5;
   std::ostringstream d;
   d << equal << "/" << n << " instances at brute-force minimum; entropy({2,1,1}/4) = " << h;
   return {equal == n && entropy_ok, d.str()};
}

Outcome world_properties()
{
   int worlds = 0, violations = 0, mismatched_manifests = 0;
   std::string first;
   auto check = [&](const WorldPtr& orig, const std::string& question, int k, std::uint64_t seed) {
      const WorldSet a = generate_worlds(orig, question, k, seed);
      const WorldSet b = generate_worlds(orig, question, k, seed);
      worlds += a.k();
      const auto v = check_world_set(a);
      violations += static_cast<int>(v.size());
      if (!v.empty() && first.empty()) first = v.front();
      bool same = manifest(a).dump() == manifest(b).dump();
      for (int i = 0; i < a.k(); ++i) same &= export_world(*a.worlds[i]) == export_world(*b.worlds[i]);
      mismatched_manifests += !same;
   };
   check(make_world(fixtures::fixture_a_table()), fixtures::fixture_a_question, 200, 1);
   for (int i = 0; worlds < 1000; ++i) {
      const auto ex = randtab::random_example(5000 + static_cast<std::uint64_t>(i));
      check(make_world(ex.table), ex.question, 40, static_cast<std::uint64_t>(i));
   }
   std::ostringstream d;
   d << worlds << " worlds, " << violations << " invariant violations, " << mismatched_manifests << " seed-replay mismatches";
   if (!first.empty()) d << "; " << first;
   return {worlds >= 1000 && violations == 0 && mismatched_manifests == 0, d.str()};
}

Outcome refinement_and_safety()
{
   int merge_violations = 0, refined_cases = 0;
   struct Pool {
      std::vector<EquivalenceClass> classes;
      int k;
   };
   std::vector<Pool> pools;
   for (const auto& c : suite()) {
      const auto dpd = run_dpd(c.anchors, *c.world, c.target, default_rules(), suite_s_max);
      if (dpd.forms.empty()) continue;
      const WorldSet ws = generate_worlds(c.world, c.anchors, 300, c.seed);
      const std::vector<WorldPtr> first30(ws.worlds.begin(), ws.worlds.begin() + 30);
      const auto coarse = equivalence_classes(dpd.forms, first30);
      const auto fine = equivalence_classes(dpd.forms, ws.worlds);
      std::map<std::string, std::size_t> coarse_of;
      for (std::size_t i = 0; i < coarse.size(); ++i)
         for (const auto& f : coarse[i].members) coarse_of[f->canonical()] = i;
      for (const auto& cl : fine) {
         std::set<std::size_t> parents;
         for (const auto& f : cl.members) parents.insert(coarse_of.at(f->canonical()));
         merge_violations += parents.size() != 1;
      }
      ++refined_cases;
      if (fine.size() > 1) pools.push_back(Pool{fine, ws.k()});
   }
   if (pools.empty()) return {false, "no example with more than one class"};

   Rng rng(99);
   int removed = 0, not_nested = 0;
   const int trials = 1000;
   for (int t = 0; t < trials; ++t) {
      const Pool& p = pools[rng.uniform_index(pools.size())];
      const int star = static_cast<int>(rng.uniform_index(p.classes.size()));
      const int l = 1 + static_cast<int>(rng.uniform_index(5));
      std::vector<int> worlds;
      for (int i = 0; i < l; ++i) worlds.push_back(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(p.k))));
      std::sort(worlds.begin(), worlds.end());
      worlds.erase(std::unique(worlds.begin(), worlds.end()), worlds.end());
      std::vector<AnnotationTarget> ideal, noisy;
      for (int w : worlds) {
         ideal.push_back(AnnotationTarget::exact(p.classes[star].tuple[w]));
         const int other = static_cast<int>(rng.uniform_index(p.classes.size()));
         noisy.push_back(AnnotationTarget::exact(p.classes[rng.uniform_index(10) < 3 ? other : star].tuple[w]));
      }
      const auto kept = prune(p.classes, worlds, ideal, 0).surviving;
      removed += !std::binary_search(kept.begin(), kept.end(), star);
      for (const auto* targets : {&ideal, &noisy}) {
         const auto z0 = prune(p.classes, worlds, *targets, 0).surviving;
         const auto z1 = prune(p.classes, worlds, *targets, 1).surviving;
         not_nested += !std::includes(z1.begin(), z1.end(), z0.begin(), z0.end());
      }
   }
   std::ostringstream d;
   d << refined_cases << " examples, " << merge_violations << " merge violations (300 vs first 30); " << trials
     << " prune trials, " << removed << " ideal-class removals, " << not_nested << " Z_c(0) not within Z_c(1)";
   return {refined_cases > 0 && merge_violations == 0 && removed == 0 && not_nested == 0, d.str()};
}

Outcome cli_end_to_end()
{
   const fs::path out = fs::temp_directory_path() / "tabdpd_acceptance_cli";
   fs::remove_all(out);
   const std::string ex = std::string(TABDPD_SAMPLES_DIR) + "/fixture_a.jsonl " + out.string();
   for (const char* stage : {"dpd", "worlds", "classes", "select"})
      if (const int rc = run_cli(std::string(stage) + " " + ex); rc != 0) return {false, std::string(stage) + " exited " + std::to_string(rc)};
   if (const int rc = run_cli("annotate --form '" + std::string(fixtures::z1) + "' " + ex); rc != 0)
      return {false, "annotate exited " + std::to_string(rc)};
   if (const int rc = run_cli("prune " + ex); rc != 0) return {false, "prune exited " + std::to_string(rc)};
   const fs::path dir = out / "fixture-a";
   const auto report = nlohmann::json::parse(read_text(dir / "prune_report.json"));
   const bool all_pruned = report.at("all_pruned").get<bool>();
   std::set<std::string> kept;
   std::istringstream in(read_text(dir / "pruned.txt"));
   for (std::string line; std::getline(in, line);) kept.insert(line);
   const bool has_z1 = kept.count(fixtures::z1) > 0;
   std::ostringstream d;
   d << kept.size() << " surviving forms, all_pruned=" << all_pruned << ", answer form " << (has_z1 ? "kept" : "missing");
   fs::remove_all(out);
   return {!all_pruned && has_z1, d.str()};
}

} // namespace

int main()
{
   criterion("executor-goldens", 1.0, executor_goldens);
   criterion("dpd-completeness-oracle", 300.0, dpd_oracle);
   criterion("beam-subset-of-dpd", 0, beam_subset);
   criterion("cell-reduction", 0, cell_reduction);
   criterion("invariance-suite", 0, invariance_suite);
   criterion("selection-optimality", 0, selection_oracle);
   criterion("fictitious-world-properties", 0, world_properties);
   criterion("refinement-and-prune-safety", 0, refinement_and_safety);
   criterion("cli-end-to-end", 30.0, cli_end_to_end);
   std::printf("%d failing\n", failures);
   return failures == 0 ? 0 : 1;
}
