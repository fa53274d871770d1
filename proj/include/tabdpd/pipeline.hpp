#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabdpd/beam.hpp"
#include "tabdpd/classes.hpp"
#include "tabdpd/dpd.hpp"
#include "tabdpd/fictitious.hpp"
#include "tabdpd/io.hpp"
#include "tabdpd/rules.hpp"

namespace tabdpd {

namespace fs = std::filesystem;

struct Example {
   std::string id;
   std::string question;
   std::string table; // resolved path
   std::vector<std::string> answer;
};

struct RunConfig {
   std::uint64_t seed = 0;
   int s_max = 7;
   int beam = 100; // 0: unbounded
   int k = 30;
   int l = 5;
   int tolerance = 0;
   std::string rules_path;
   std::size_t cap = default_cap;
   int jobs = 1;
   bool greedy = false;
   bool timing = false;
   bool dump_chart = false;

   void validate() const
   {
      if (s_max < 1) throw ConfigError("--s-max must be at least 1");
      if (beam < 0) throw ConfigError("--beam must be non-negative");
      if (k < 1) throw ConfigError("--k must be positive");
      if (l < 0 || l > k) throw ConfigError("--l must be between 0 and --k");
      if (tolerance < 0) throw ConfigError("--tolerance must be non-negative");
      if (jobs < 1) throw ConfigError("--jobs must be positive");
      if (cap < 1) throw ConfigError("--cap must be positive");
   }

   RuleSet rules() const { return rules_path.empty() ? default_rules() : load_rule_manifest(rules_path); }
};

/// Exit codes of the command-line driver.
enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_io = 3 };

inline int exit_code_for(const std::exception& e)
{
   if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return exit_io;
   return exit_usage;
}

/// JSON lines `{id, question, table, answer}`; table paths are relative to
/// the examples file.
inline std::vector<Example> load_examples(const std::string& path)
{
   const std::string text = read_file(path);
   const fs::path base = fs::path(path).parent_path();
   std::vector<Example> out;
   std::istringstream in(text);
   std::string line;
   int lineno = 0;
   while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
         const auto j = nlohmann::json::parse(line);
         Example e;
         e.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
         e.question = j.at("question").get<std::string>();
         const fs::path table = j.at("table").get<std::string>();
         e.table = (table.is_absolute() ? table : base / table).lexically_normal().string();
         const auto& a = j.at("answer");
         if (a.is_string()) e.answer = {a.get<std::string>()};
         else e.answer = a.get<std::vector<std::string>>();
         if (e.answer.empty()) throw ConfigError("empty answer");
         out.push_back(std::move(e));
      } catch (const nlohmann::json::exception& e) {
         throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what(), 0);
      } catch (const ConfigError& e) {
         throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what(), 0);
      }
   }
   return out;
}

/// Per-example output directory; characters unsafe in file names become '_'.
inline fs::path example_dir(const fs::path& out, const std::string& id)
{
   std::string safe = id;
   for (char& c : safe)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
   if (safe.empty() || safe == "." || safe == "..") safe = "_" + safe;
   return out / safe;
}

inline std::string forms_text(const std::vector<FormPtr>& forms)
{
   std::string out;
   for (const auto& f : forms) out += f->canonical() + "\n";
   return out;
}

inline std::vector<FormPtr> read_forms(const fs::path& path)
{
   std::vector<FormPtr> out;
   std::istringstream in(read_file(path.string()));
   std::string line;
   while (std::getline(in, line))
      if (!line.empty()) out.push_back(parse_form(line));
   return out;
}

inline WorldPtr load_example_world(const Example& ex)
{
   Table t = load_table(ex.table);
   t.id = ex.id;
   return make_world(std::move(t));
}

inline void require_file(const fs::path& p, const std::string& producer)
{
   if (!fs::exists(p)) throw IoError("missing " + p.string() + " (run `" + producer + "` first)");
}

// ---------------------------------------------------------------------------
// Commands on one example. Each writes into example_dir(out, ex.id).

inline ChartStats cmd_dpd(const Example& ex, const RunConfig& cfg, const fs::path& out)
{
   const auto t0 = std::chrono::steady_clock::now();
   const WorldPtr w = load_example_world(ex);
   const TargetDenotation y(ex.answer);
   DpdResult r = run_dpd(ex.question, *w, y, cfg.rules(), cfg.s_max, cfg.cap);
   const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
   const fs::path dir = example_dir(out, ex.id);
   write_atomic(dir / "forms.txt", forms_text(r.forms));
   nlohmann::json stats = to_json(r.stats);
   stats["id"] = ex.id;
   stats["s_max"] = cfg.s_max;
   if (cfg.timing) stats["wall_ms"] = ms;
   write_atomic(dir / "stats.json", stats.dump(2) + "\n");
   if (cfg.dump_chart) write_atomic(dir / "chart.json", dump_chart(r.chart).dump() + "\n");
   return r.stats;
}

inline std::vector<FormPtr> cmd_beam(const Example& ex, const RunConfig& cfg, const fs::path& out)
{
   const WorldPtr w = load_example_world(ex);
   const TargetDenotation y(ex.answer);
   BeamOptions opt;
   opt.s_max = cfg.s_max;
   opt.beam = cfg.beam;
   opt.scorer = random_scorer(stream_seed(cfg.seed, "beam"));
   const auto z = consistent_forms(beam_search(ex.question, *w, cfg.rules(), opt), *w, y);
   write_atomic(example_dir(out, ex.id) / "beam_forms.txt", forms_text(z));
   return z;
}

inline WorldSet cmd_worlds(const Example& ex, const RunConfig& cfg, const fs::path& out)
{
   WorldSet ws = generate_worlds(load_example_world(ex), ex.question, cfg.k, cfg.seed);
   save_world_set(ws, example_dir(out, ex.id) / "worlds");
   return ws;
}

inline std::vector<EquivalenceClass> cmd_classes(const Example& ex, const RunConfig& cfg, const fs::path& out)
{
   const fs::path dir = example_dir(out, ex.id);
   require_file(dir / "forms.txt", "dpd");
   require_file(dir / "worlds" / "manifest.json", "worlds");
   const auto forms = read_forms(dir / "forms.txt");
   const WorldSet ws = load_world_set(load_example_world(ex), dir / "worlds");
   auto classes = equivalence_classes(forms, ws.worlds, cfg.jobs);
   write_atomic(dir / "classes.json", classes_to_json(classes, ws.k()).dump(1) + "\n");
   return classes;
}

inline std::pair<std::vector<EquivalenceClass>, int> load_classes(const fs::path& dir)
{
   require_file(dir / "classes.json", "classes");
   const auto j = nlohmann::json::parse(read_file((dir / "classes.json").string()));
   return {classes_from_json(j), j.at("k").get<int>()};
}

inline Selection cmd_select(const Example& ex, const RunConfig& cfg, const fs::path& out)
{
   const fs::path dir = example_dir(out, ex.id);
   const auto [classes, k] = load_classes(dir);
   Selection s;
   if (classes.empty()) {
      s.objective = 0;
   } else {
      s = select_worlds(classes, k, std::min(cfg.l, k), cfg.greedy);
   }
   std::vector<std::size_t> sizes;
   for (const auto& b : s.partition) sizes.push_back(b.size());
   nlohmann::json j = {{"worlds", s.worlds},   {"objective", s.objective}, {"classes", classes.size()},
                       {"partition", s.partition}, {"greedy", cfg.greedy}};
   j["entropy"] = classes.empty() ? 0.0 : entropy(sizes, classes.size());
   write_atomic(dir / "selection.json", j.dump(2) + "\n");
   return s;
}

/// Writes annotations.jsonl with the answers `form` gives on the selected
/// worlds, as a stand-in for a human annotator.
inline std::vector<Annotation> cmd_annotate(const Example& ex, const RunConfig&, const fs::path& out, const std::string& form_text)
{
   const fs::path dir = example_dir(out, ex.id);
   require_file(dir / "selection.json", "select");
   require_file(dir / "worlds" / "manifest.json", "worlds");
   const FormPtr form = parse_form(form_text);
   const auto sel = nlohmann::json::parse(read_file((dir / "selection.json").string()));
   const WorldSet ws = load_world_set(load_example_world(ex), dir / "worlds");
   std::vector<Annotation> anns;
   std::string text;
   for (int w : sel.at("worlds").get<std::vector<int>>()) {
      const Denotation d = execute(form, *ws.worlds.at(w));
      if (!d.is_set() || d.values().empty()) throw ConfigError("form has no answer on world " + std::to_string(w));
      Annotation a;
      a.world_id = w;
      a.annotator = "form";
      for (const Value& v : d.values()) {
         switch (v.kind()) {
         case ValueKind::Entity: a.answer.push_back(v.entity_name()); break;
         case ValueKind::Number: a.answer.push_back(format_number(v.number())); break;
         case ValueKind::Date: a.answer.push_back(format_date(v.date())); break;
         case ValueKind::Row: throw ConfigError("form denotes table rows, which cannot be written as answers");
         }
      }
      text += to_json(a).dump() + "\n";
      anns.push_back(std::move(a));
   }
   write_atomic(dir / "annotations.jsonl", text);
   return anns;
}

/// Prunes classes against annotations (default: <example dir>/annotations.jsonl).
inline PruneResult cmd_prune(const Example& ex, const RunConfig& cfg, const fs::path& out, const std::string& annotations_path = {})
{
   const fs::path dir = example_dir(out, ex.id);
   const auto [classes, k] = load_classes(dir);
   const fs::path ann_path = annotations_path.empty() ? dir / "annotations.jsonl" : fs::path(annotations_path);
   require_file(ann_path, "annotate");
   const auto anns = parse_annotations(read_file(ann_path.string()), annotations_path.empty() ? std::string{} : ex.id);
   auto [worlds, targets] = annotation_targets(anns, k);
   PruneResult r = prune(classes, worlds, targets, cfg.tolerance);
   nlohmann::json surviving = nlohmann::json::array();
   for (int c : r.surviving)
      surviving.push_back({{"class", c}, {"representative", classes[c].representative->canonical()},
                           {"members", classes[c].members.size()}, {"mismatches", r.mismatches[c]}});
   nlohmann::json report = {{"id", ex.id},
                            {"worlds", worlds},
                            {"tolerance", cfg.tolerance},
                            {"classes_before", classes.size()},
                            {"classes_after", r.surviving.size()},
                            {"forms_after", r.forms.size()},
                            {"all_pruned", r.all_pruned()},
                            {"surviving", surviving}};
   write_atomic(dir / "pruned.txt", forms_text(r.forms));
   write_atomic(dir / "prune_report.json", report.dump(2) + "\n");
   return r;
}

/// Aggregates stats.json files (and prune reports next to them) under `dir`.
inline nlohmann::json cmd_report(const fs::path& dir)
{
   if (!fs::is_directory(dir)) throw IoError("no stats: " + dir.string() + " is not a directory");
   std::vector<fs::path> files;
   for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "stats.json") files.push_back(e.path());
   if (files.empty()) throw IoError("no stats under " + dir.string());
   std::sort(files.begin(), files.end());
   std::vector<double> z;
   double p1 = 0, p2 = 0;
   std::size_t with_classes = 0, single = 0, pruned_reports = 0;
   double classes_total = 0;
   for (const auto& f : files) {
      const auto s = nlohmann::json::parse(read_file(f.string()));
      z.push_back(s.at("z_size").get<double>());
      p1 += s.at("pass1_cells").get<double>();
      p2 += s.at("pass2_cells").get<double>();
      const fs::path cj = f.parent_path() / "classes.json";
      if (fs::exists(cj)) {
         ++with_classes;
         classes_total += static_cast<double>(nlohmann::json::parse(read_file(cj.string())).at("classes").size());
      }
      const fs::path pj = f.parent_path() / "prune_report.json";
      if (fs::exists(pj)) {
         ++pruned_reports;
         single += nlohmann::json::parse(read_file(pj.string())).at("classes_after").get<std::size_t>() == 1;
      }
   }
   std::vector<double> sorted = z;
   std::sort(sorted.begin(), sorted.end());
   const std::size_t n = sorted.size();
   const double median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2;
   double mean = 0;
   for (double v : z) mean += v;
   mean /= static_cast<double>(n);
   nlohmann::json r = {{"examples", n},
                       {"mean_z", mean},
                       {"median_z", median},
                       {"pass1_cells", p1},
                       {"pass2_cells", p2},
                       {"cell_reduction", p1 > 0 ? 1.0 - p2 / p1 : 0.0}};
   r["mean_classes"] = with_classes ? nlohmann::json(classes_total / static_cast<double>(with_classes)) : nlohmann::json(nullptr);
   r["single_class_fraction"] =
       pruned_reports ? nlohmann::json(static_cast<double>(single) / static_cast<double>(pruned_reports)) : nlohmann::json(nullptr);
   return r;
}

/// Runs `fn` on every example with `jobs` workers. Failures are reported on
/// stderr; the result is the most severe exit code.
inline int for_each_example(const std::vector<Example>& examples, int jobs, const std::function<void(const Example&)>& fn)
{
   std::atomic<std::size_t> next{0};
   std::atomic<int> code{exit_ok};
   std::mutex err_mu;
   auto worker = [&] {
      for (std::size_t i; (i = next++) < examples.size();) {
         try {
            fn(examples[i]);
         } catch (const std::exception& e) {
            const int c = exit_code_for(e);
            int cur = code.load();
            while (c > cur && !code.compare_exchange_weak(cur, c)) {
            }
            std::lock_guard lk(err_mu);
            std::cerr << examples[i].id << ": " << e.what() << "\n";
         }
      }
   };
   const int n = std::max(1, std::min<int>(jobs, static_cast<int>(examples.size())));
   if (n == 1) {
      worker();
   } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
   }
   return code.load();
}

} // namespace tabdpd
