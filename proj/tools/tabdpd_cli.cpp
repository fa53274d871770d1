#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "tabdpd/tabdpd.hpp"
#include "tabdpd/service.hpp"

using namespace tabdpd;

namespace {

// WikiTableQuestions answer escapes: \n, \p (pipe), \\.
std::vector<std::string> split_wtq_answer(const std::string& s)
{
   std::vector<std::string> out(1);
   for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '|') {
         out.emplace_back();
      } else if (s[i] == '\\' && i + 1 < s.size()) {
         const char n = s[++i];
         out.back() += n == 'n' ? '\n' : n == 'p' ? '|' : n;
      } else {
         out.back() += s[i];
      }
   }
   return out;
}

void cmd_convert(const std::string& input, const std::string& root, const std::string& out)
{
   const auto rows = detail::split_tsv(read_file(input));
   if (rows.empty()) throw ParseError("empty dataset file", 0);
   const auto& header = rows[0];
   auto col = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i)
         if (header[i] == name) return i;
      throw ParseError("missing column " + name, 0);
   };
   const std::size_t id = col("id"), q = col("utterance"), ctx = col("context"), ans = col("targetValue");
   std::string text;
   for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != header.size()) throw ParseError("row " + std::to_string(r) + " has " + std::to_string(row.size()) + " fields", r);
      fs::path table = fs::path(root) / row[ctx];
      if (table.extension() == ".csv" && fs::exists(fs::path(table).replace_extension(".tsv"))) table.replace_extension(".tsv");
      nlohmann::json j = {{"id", row[id]}, {"question", row[q]}, {"table", fs::absolute(table).lexically_normal().string()},
                          {"answer", split_wtq_answer(row[ans])}};
      text += j.dump() + "\n";
   }
   write_atomic(out, text);
}

int serve(const RunConfig& cfg)
{
   const char* bind = std::getenv("BIND_ADDR");
   const char* data = std::getenv("DATA_DIR");
   const char* ui = std::getenv("UI_DIR");
   const auto [host, port] = parse_bind_addr(bind ? bind : "127.0.0.1:8080");
   ServiceOptions opt;
   opt.data_dir = data ? data : "data";
   opt.workers = cfg.jobs;
   opt.defaults.s_max = cfg.s_max;
   opt.defaults.k = cfg.k;
   opt.defaults.l = cfg.l;
   opt.defaults.tolerance = cfg.tolerance;
   opt.defaults.seed = cfg.seed;
   opt.defaults.cap = cfg.cap;
   Service service(opt);
   httplib::Server srv;
   service.mount(srv, ui ? ui : "");
   std::cerr << "listening on " << host << ":" << port << "\n";
   if (!srv.listen(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
   return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Logical form enumeration and disambiguation over tables"};
   app.require_subcommand(1);
   app.fallthrough();

   RunConfig cfg;
   std::string beam_text = std::to_string(cfg.beam);
   app.add_option("--seed", cfg.seed, "root random seed");
   app.add_option("--s-max", cfg.s_max, "maximum logical form size");
   app.add_option("--beam", beam_text, "beam size per cell (inf or 0: unbounded)");
   app.add_option("--k", cfg.k, "number of fictitious worlds");
   app.add_option("--l", cfg.l, "number of worlds to annotate");
   app.add_option("--tolerance", cfg.tolerance, "allowed annotation mismatches");
   app.add_option("--rules", cfg.rules_path, "rule manifest");
   app.add_option("--jobs", cfg.jobs, "worker threads");
   app.add_option("--cap", cfg.cap, "maximum forms enumerated per example");
   app.add_flag("--greedy", cfg.greedy, "greedy world selection");
   app.add_flag("--timing", cfg.timing, "record wall time in stats");
   app.add_flag("--dump-chart", cfg.dump_chart, "write chart.json");

   std::string form, table, examples, out, ann, input, root;

   auto* execute_cmd = app.add_subcommand("execute", "print the denotation of a form on a table");
   execute_cmd->add_option("FORM", form)->required();
   execute_cmd->add_option("TABLE", table)->required();

   auto batch = [&](const char* name, const char* help) {
      auto* sc = app.add_subcommand(name, help);
      sc->add_option("EXAMPLES", examples, "JSON-lines examples")->required();
      sc->add_option("OUT", out, "output directory")->required();
      return sc;
   };
   auto* dpd_cmd = batch("dpd", "enumerate consistent forms");
   auto* beam_cmd = batch("beam", "beam search baseline");
   auto* worlds_cmd = batch("worlds", "generate fictitious worlds");
   auto* classes_cmd = batch("classes", "group forms into equivalence classes");
   auto* select_cmd = batch("select", "choose worlds to annotate");
   auto* annotate_cmd = batch("annotate", "annotate selected worlds by executing a form");
   annotate_cmd->add_option("--form", form, "form whose answers serve as annotations")->required();
   auto* prune_cmd = batch("prune", "prune classes against annotations");
   prune_cmd->add_option("--annotations", ann, "annotations JSON-lines file");
   auto* report_cmd = app.add_subcommand("report", "aggregate statistics");
   report_cmd->add_option("DIR", out)->required();
   auto* serve_cmd = app.add_subcommand("serve", "run the annotation service (BIND_ADDR, DATA_DIR)");
   auto* convert_cmd = app.add_subcommand("convert", "convert a WikiTableQuestions TSV file to JSON lines");
   convert_cmd->add_option("INPUT", input)->required();
   convert_cmd->add_option("--root", root, "dataset root holding the csv/ directory")->required();
   convert_cmd->add_option("--out", out, "output JSON-lines file")->required();

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? exit_ok : exit_usage;
   }

   try {
      if (beam_text == "inf" || beam_text == "infinity") cfg.beam = 0;
      else cfg.beam = std::stoi(beam_text);
   } catch (const std::exception&) {
      std::cerr << "error: invalid --beam " << beam_text << "\n";
      return exit_usage;
   }

   try {
      cfg.validate();
      if (*execute_cmd) {
         const FormPtr f = parse_form(form);
         const WorldPtr w = make_world(load_table(table));
         std::cout << to_json(execute(f, *w)) << "\n";
         return exit_ok;
      }
      if (*report_cmd) {
         std::cout << cmd_report(out).dump(2) << "\n";
         return exit_ok;
      }
      if (*serve_cmd) return serve(cfg);
      if (*convert_cmd) {
         cmd_convert(input, root, out);
         return exit_ok;
      }

      (void)cfg.rules(); // fail early on a bad manifest
      const auto exs = load_examples(examples);
      std::mutex print_mu;
      std::function<void(const Example&)> fn;
      if (*dpd_cmd) {
         fn = [&](const Example& ex) {
            const ChartStats s = cmd_dpd(ex, cfg, out);
            std::lock_guard lk(print_mu);
            std::cout << ex.id << "\t" << s.z_size << (s.truncated ? "\ttruncated" : "") << "\n";
         };
      } else if (*beam_cmd) {
         fn = [&](const Example& ex) {
            const auto z = cmd_beam(ex, cfg, out);
            std::lock_guard lk(print_mu);
            std::cout << ex.id << "\t" << z.size() << "\n";
         };
      } else if (*worlds_cmd) {
         fn = [&](const Example& ex) { cmd_worlds(ex, cfg, out); };
      } else if (*classes_cmd) {
         fn = [&](const Example& ex) {
            const auto c = cmd_classes(ex, cfg, out);
            std::lock_guard lk(print_mu);
            std::cout << ex.id << "\t" << c.size() << "\n";
         };
      } else if (*select_cmd) {
         fn = [&](const Example& ex) {
            const Selection s = cmd_select(ex, cfg, out);
            std::lock_guard lk(print_mu);
            std::cout << ex.id << "\tworlds";
            for (int w : s.worlds) std::cout << " " << w;
            std::cout << "\tobjective " << s.objective << "\n";
         };
      } else if (*annotate_cmd) {
         fn = [&](const Example& ex) { cmd_annotate(ex, cfg, out, form); };
      } else if (*prune_cmd) {
         fn = [&](const Example& ex) {
            const PruneResult r = cmd_prune(ex, cfg, out, ann);
            std::lock_guard lk(print_mu);
            std::cout << ex.id << "\t" << r.surviving.size() << (r.all_pruned() ? "\tall-pruned" : "") << "\n";
         };
      }
      return for_each_example(exs, cfg.jobs, fn);
   } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code_for(e);
   }
}
