#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tabdpd/classes.hpp"
#include "tabdpd/dpd.hpp"
#include "tabdpd/fictitious.hpp"
#include "tabdpd/io.hpp"

namespace tabdpd {

/// Session states. Transitions: searching -> awaiting-annotation ->
/// (awaiting-annotation)* -> resolved | exhausted | all-pruned. A search that
/// throws ends in `failed`.
namespace state {
inline constexpr const char* searching = "searching";
inline constexpr const char* awaiting = "awaiting-annotation";
inline constexpr const char* resolved = "resolved";
inline constexpr const char* exhausted = "exhausted";
inline constexpr const char* all_pruned = "all-pruned";
inline constexpr const char* failed = "failed";
} // namespace state

struct SessionConfig {
   int s_max = 7;
   int k = 30;
   int l = 5;
   int tolerance = 0;
   std::uint64_t seed = 0;
   std::size_t cap = default_cap;
};

inline nlohmann::json to_json(const SessionConfig& c)
{
   return {{"s_max", c.s_max}, {"k", c.k}, {"l", c.l}, {"tolerance", c.tolerance}, {"seed", c.seed}, {"cap", c.cap}};
}

inline SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig c = {})
{
   if (j.contains("s_max")) c.s_max = j.at("s_max").get<int>();
   if (j.contains("k")) c.k = j.at("k").get<int>();
   if (j.contains("l")) c.l = j.at("l").get<int>();
   if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<int>();
   if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
   if (j.contains("cap")) c.cap = j.at("cap").get<std::size_t>();
   if (c.s_max < 1 || c.k < 1 || c.l < 0 || c.tolerance < 0 || c.cap < 1) throw ConfigError("invalid session config");
   return c;
}

struct Session {
   std::string id;
   std::string idempotency_key;
   Table table;
   std::string question;
   std::vector<std::string> answer;
   SessionConfig config;
   std::string state = state::searching;
   std::string error;
   nlohmann::json stats;
   std::vector<Table> worlds;
   std::vector<EquivalenceClass> classes;
   std::map<int, Annotation> annotations; // by world id, last write wins
   std::set<int> served;
   std::vector<int> surviving;
   std::vector<int> mismatches;

   mutable std::mutex mu;
};

inline nlohmann::json table_json(const Table& t) { return {{"columns", t.columns}, {"rows", t.rows}}; }

inline Table table_from_json(const nlohmann::json& j, std::string id)
{
   Table t;
   t.id = std::move(id);
   t.columns = j.at("columns").get<std::vector<std::string>>();
   t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
   return t;
}

inline nlohmann::json snapshot(const Session& s)
{
   nlohmann::json worlds = nlohmann::json::array();
   for (const auto& w : s.worlds) worlds.push_back(table_json(w));
   nlohmann::json anns = nlohmann::json::array();
   for (const auto& [_, a] : s.annotations) anns.push_back(to_json(a));
   return {{"id", s.id},
           {"idempotency_key", s.idempotency_key},
           {"table", table_json(s.table)},
           {"question", s.question},
           {"answer", s.answer},
           {"config", to_json(s.config)},
           {"state", s.state},
           {"error", s.error},
           {"stats", s.stats},
           {"worlds", worlds},
           {"classes", classes_to_json(s.classes, static_cast<int>(s.worlds.size()))},
           {"annotations", anns},
           {"served", s.served},
           {"surviving", s.surviving},
           {"mismatches", s.mismatches}};
}

inline std::unique_ptr<Session> session_from_snapshot(const nlohmann::json& j)
{
   auto s = std::make_unique<Session>();
   s->id = j.at("id").get<std::string>();
   s->idempotency_key = j.at("idempotency_key").get<std::string>();
   s->table = table_from_json(j.at("table"), s->id);
   s->question = j.at("question").get<std::string>();
   s->answer = j.at("answer").get<std::vector<std::string>>();
   s->config = session_config_from_json(j.at("config"));
   s->state = j.at("state").get<std::string>();
   s->error = j.at("error").get<std::string>();
   s->stats = j.at("stats");
   int i = 0;
   for (const auto& w : j.at("worlds")) s->worlds.push_back(table_from_json(w, "w" + std::to_string(i++)));
   s->classes = classes_from_json(j.at("classes"));
   for (const auto& a : j.at("annotations")) {
      Annotation ann = annotation_from_json(a);
      s->annotations[ann.world_id] = ann;
   }
   s->served = j.at("served").get<std::set<int>>();
   s->surviving = j.at("surviving").get<std::vector<int>>();
   s->mismatches = j.at("mismatches").get<std::vector<int>>();
   return s;
}

/// Error raised by handlers, rendered as a problem document.
struct HttpProblem : Error {
   HttpProblem(int status, std::string title, const std::string& detail) : Error(detail), status(status), title(std::move(title)) {}
   int status;
   std::string title;
};

struct ServiceOptions {
   std::filesystem::path data_dir = "data";
   int workers = 1; // 0: searches run only through run_pending()
   SessionConfig defaults;
};

/// Annotation-loop sessions: creation runs DPD, world generation and class
/// construction on a background worker; clients then alternate between
/// next-world and annotation submissions.
class Service {
public:
   explicit Service(ServiceOptions opt) : opt_(std::move(opt))
   {
      std::filesystem::create_directories(opt_.data_dir);
      load_snapshots();
      for (int i = 0; i < opt_.workers; ++i) workers_.emplace_back([this] { work(); });
   }

   ~Service()
   {
      {
         std::lock_guard lk(queue_mu_);
         stop_ = true;
      }
      queue_cv_.notify_all();
      for (auto& t : workers_) t.join();
   }

   Service(const Service&) = delete;
   Service& operator=(const Service&) = delete;

   /// Returns (session id, created).
   std::pair<std::string, bool> create(const nlohmann::json& body, const std::string& header_key)
   {
      std::string key = header_key;
      if (key.empty() && body.contains("idempotency_key")) key = body.at("idempotency_key").get<std::string>();
      auto s = std::make_unique<Session>();
      try {
         s->question = body.at("question").get<std::string>();
         const auto& a = body.at("answer");
         s->answer = a.is_string() ? std::vector<std::string>{a.get<std::string>()} : a.get<std::vector<std::string>>();
         TargetDenotation check(s->answer);
         const auto& t = body.at("table");
         if (t.is_string()) {
            const std::string fmt = body.value("format", "tsv");
            s->table = parse_table(t.get<std::string>(), fmt == "csv" ? TableFormat::Csv : TableFormat::Tsv);
         } else {
            // Structured form goes through the TSV parser for the same checks.
            Table raw = table_from_json(t, "");
            std::string tsv;
            for (std::size_t c = 0; c < raw.columns.size(); ++c) tsv += (c ? "\t" : "") + raw.columns[c];
            tsv += "\n";
            for (const auto& r : raw.rows) {
               for (std::size_t c = 0; c < r.size(); ++c) tsv += (c ? "\t" : "") + r[c];
               tsv += "\n";
            }
            s->table = parse_table(tsv, TableFormat::Tsv);
         }
         s->config = session_config_from_json(body.value("config", nlohmann::json::object()), opt_.defaults);
      } catch (const nlohmann::json::exception& e) {
         throw HttpProblem(400, "invalid session", e.what());
      } catch (const Error& e) {
         throw HttpProblem(400, "invalid session", e.what());
      }
      std::lock_guard lk(mu_);
      if (!key.empty()) {
         if (auto it = by_key_.find(key); it != by_key_.end()) return {it->second, false};
      }
      s->id = new_id();
      s->idempotency_key = key;
      s->table.id = s->id;
      const std::string id = s->id;
      persist(*s);
      if (!key.empty()) by_key_[key] = id;
      sessions_[id] = std::move(s);
      enqueue(id);
      return {id, true};
   }

   nlohmann::json status(const std::string& id) const
   {
      const Session& s = get(id);
      std::lock_guard lk(s.mu);
      return progress(s);
   }

   nlohmann::json next_world(const std::string& id, const std::string& mode)
   {
      Session& s = get(id);
      std::lock_guard lk(s.mu);
      require_searched(s);
      if (mode != "greedy" && mode != "batch") throw HttpProblem(400, "invalid mode", "mode must be greedy or batch");
      if (s.state != std::string(state::awaiting)) return done(s);
      if (mode == "batch") {
         std::vector<EquivalenceClass> live;
         for (int c : s.surviving) live.push_back(s.classes[c]);
         const int k = static_cast<int>(s.worlds.size());
         const Selection sel = select_worlds(live, k, std::min(s.config.l, k));
         nlohmann::json ws = nlohmann::json::array();
         for (int w : sel.worlds) {
            s.served.insert(w);
            ws.push_back({{"world_id", w}, {"table", table_json(s.worlds[w])}});
         }
         persist(s);
         return {{"done", false}, {"mode", "batch"}, {"question", s.question}, {"worlds", ws}, {"objective", sel.objective},
                 {"progress", progress(s)}};
      }
      std::vector<int> annotated;
      for (const auto& [w, _] : s.annotations) annotated.push_back(w);
      const NextWorld nw = greedy_next_world(s.classes, s.surviving, annotated, static_cast<int>(s.worlds.size()));
      if (nw.kind == NextWorld::Kind::NoneNeeded) {
         s.state = s.surviving.empty() ? state::all_pruned : state::resolved;
         persist(s);
         return done(s);
      }
      if (nw.kind == NextWorld::Kind::Exhausted) {
         s.state = state::exhausted;
         persist(s);
         return done(s);
      }
      s.served.insert(nw.world);
      persist(s);
      return {{"done", false},
              {"mode", "greedy"},
              {"world_id", nw.world},
              {"question", s.question},
              {"table", table_json(s.worlds[nw.world])},
              {"objective", nw.objective},
              {"progress", progress(s)}};
   }

   nlohmann::json annotate(const std::string& id, const nlohmann::json& body)
   {
      Session& s = get(id);
      std::lock_guard lk(s.mu);
      require_searched(s);
      Annotation a;
      try {
         a = annotation_from_json(body);
      } catch (const nlohmann::json::exception& e) {
         throw HttpProblem(422, "unparseable annotation", e.what());
      }
      if (!s.served.count(a.world_id)) throw HttpProblem(409, "world not served", "world " + std::to_string(a.world_id) + " was not served");
      if (s.state != std::string(state::awaiting))
         throw HttpProblem(409, "session closed", "session is " + s.state);
      try {
         TargetDenotation check(a.answer);
      } catch (const Error& e) {
         throw HttpProblem(422, "unparseable answer", e.what());
      }
      s.annotations[a.world_id] = a;
      recompute(s);
      persist(s);
      return progress(s);
   }

   nlohmann::json result(const std::string& id) const
   {
      const Session& s = get(id);
      std::lock_guard lk(s.mu);
      require_searched(s);
      std::vector<int> order = s.surviving;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return s.classes[a].members.size() > s.classes[b].members.size(); });
      nlohmann::json arr = nlohmann::json::array();
      for (int c : order) arr.push_back(class_json(s, c));
      return {{"state", s.state}, {"all_pruned", s.state == std::string(state::all_pruned)}, {"classes", arr}};
   }

   nlohmann::json classes(const std::string& id) const
   {
      const Session& s = get(id);
      std::lock_guard lk(s.mu);
      require_searched(s);
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t c = 0; c < s.classes.size(); ++c) {
         auto j = class_json(s, static_cast<int>(c));
         j["surviving"] = std::find(s.surviving.begin(), s.surviving.end(), static_cast<int>(c)) != s.surviving.end();
         arr.push_back(std::move(j));
      }
      return {{"state", s.state}, {"classes", arr}};
   }

   /// Runs queued searches on the calling thread.
   void run_pending()
   {
      for (;;) {
         std::string id;
         {
            std::lock_guard lk(queue_mu_);
            if (queue_.empty()) return;
            id = queue_.front();
            queue_.pop_front();
         }
         search(get(id));
      }
   }

   /// Blocks until no search is queued or running.
   void wait_idle()
   {
      std::unique_lock lk(queue_mu_);
      idle_cv_.wait(lk, [this] { return queue_.empty() && running_ == 0; });
   }

   /// Routes under the given server; static files under /ui when `ui_dir` exists.
   void mount(httplib::Server& srv, const std::filesystem::path& ui_dir = {})
   {
      auto guard = [](httplib::Response& res, auto&& fn) {
         try {
            fn();
         } catch (const HttpProblem& p) {
            problem(res, p.status, p.title, p.what());
         } catch (const nlohmann::json::exception& e) {
            problem(res, 400, "malformed request", e.what());
         } catch (const std::exception& e) {
            problem(res, 500, "internal error", e.what());
         }
      };
      srv.Post("/sessions", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] {
            const auto body = parse_body(req);
            auto [id, created] = create(body, req.get_header_value("Idempotency-Key"));
            reply(res, created ? 201 : 200, {{"id", id}, {"state", status(id).at("state")}});
         });
      });
      srv.Get(R"(/sessions/([^/]+))", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] { reply(res, 200, status(req.matches[1])); });
      });
      srv.Get(R"(/sessions/([^/]+)/next-world)", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] {
            const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : "greedy";
            reply(res, 200, next_world(req.matches[1], mode));
         });
      });
      srv.Post(R"(/sessions/([^/]+)/annotations)", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] { reply(res, 200, annotate(req.matches[1], parse_body(req))); });
      });
      srv.Get(R"(/sessions/([^/]+)/result)", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] { reply(res, 200, result(req.matches[1])); });
      });
      srv.Get(R"(/sessions/([^/]+)/classes)", [this, guard](const httplib::Request& req, httplib::Response& res) {
         guard(res, [&] { reply(res, 200, classes(req.matches[1])); });
      });
      if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir)) srv.set_mount_point("/ui", ui_dir.string());
   }

private:
   static nlohmann::json parse_body(const httplib::Request& req)
   {
      try {
         return nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
         throw HttpProblem(400, "malformed JSON", e.what());
      }
   }

   static void reply(httplib::Response& res, int status, const nlohmann::json& body)
   {
      res.status = status;
      res.set_content(body.dump(), "application/json");
   }

   static void problem(httplib::Response& res, int status, const std::string& title, const std::string& detail)
   {
      res.status = status;
      res.set_content(nlohmann::json{{"type", "about:blank"}, {"title", title}, {"status", status}, {"detail", detail}}.dump(),
                      "application/problem+json");
   }

   Session& get(const std::string& id) const
   {
      std::lock_guard lk(mu_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) throw HttpProblem(404, "unknown session", "no session " + id);
      return *it->second;
   }

   static void require_searched(const Session& s)
   {
      if (s.state == std::string(state::searching)) throw HttpProblem(409, "search in progress", "session is still searching");
      if (s.state == std::string(state::failed)) throw HttpProblem(409, "search failed", s.error);
   }

   static nlohmann::json class_json(const Session& s, int c)
   {
      const auto& cls = s.classes[c];
      return {{"class", c},
              {"representative", cls.representative->canonical()},
              {"pretty", to_infix(cls.representative)},
              {"members", cls.members.size()},
              {"mismatches", c < static_cast<int>(s.mismatches.size()) ? s.mismatches[c] : 0}};
   }

   static nlohmann::json progress(const Session& s)
   {
      nlohmann::json j = {{"id", s.id},
                          {"state", s.state},
                          {"question", s.question},
                          {"classes_initial", s.classes.size()},
                          {"classes_surviving", s.surviving.size()},
                          {"annotations", s.annotations.size()},
                          {"worlds", s.worlds.size()},
                          {"served", s.served},
                          {"stats", s.stats}};
      if (!s.error.empty()) j["error"] = s.error;
      return j;
   }

   static nlohmann::json done(const Session& s) { return {{"done", true}, {"state", s.state}, {"progress", progress(s)}}; }

   static void recompute(Session& s)
   {
      std::vector<int> worlds;
      std::vector<AnnotationTarget> targets;
      for (const auto& [w, a] : s.annotations) {
         worlds.push_back(w);
         targets.emplace_back(TargetDenotation(a.answer));
      }
      PruneResult r = prune(s.classes, worlds, targets, s.config.tolerance);
      s.surviving = r.surviving;
      s.mismatches = r.mismatches;
      if (s.surviving.empty()) s.state = state::all_pruned;
      else if (s.surviving.size() == 1) s.state = state::resolved;
      else if (s.annotations.size() == s.worlds.size()) s.state = state::exhausted;
   }

   void search(Session& s)
   {
      std::unique_lock lk(s.mu);
      const Table table = s.table;
      const std::string question = s.question;
      const std::vector<std::string> answer = s.answer;
      const SessionConfig cfg = s.config;
      lk.unlock();
      try {
         const WorldPtr w = make_world(table);
         DpdResult r = run_dpd(question, *w, TargetDenotation(answer), default_rules(), cfg.s_max, cfg.cap);
         WorldSet ws = generate_worlds(w, question, cfg.k, cfg.seed);
         auto classes = equivalence_classes(r.forms, ws.worlds);
         lk.lock();
         s.stats = to_json(r.stats);
         s.worlds.clear();
         for (const auto& x : ws.worlds) s.worlds.push_back(x->table());
         s.classes = std::move(classes);
         s.surviving = all_indices(s.classes.size());
         s.mismatches.assign(s.classes.size(), 0);
         s.state = s.classes.empty() ? state::all_pruned : state::awaiting;
      } catch (const std::exception& e) {
         if (!lk.owns_lock()) lk.lock();
         s.state = state::failed;
         s.error = e.what();
      }
      persist(s);
   }

   void work()
   {
      for (;;) {
         std::string id;
         {
            std::unique_lock lk(queue_mu_);
            queue_cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
            if (stop_) return;
            id = queue_.front();
            queue_.pop_front();
            ++running_;
         }
         search(get(id));
         {
            std::lock_guard lk(queue_mu_);
            --running_;
         }
         idle_cv_.notify_all();
      }
   }

   void enqueue(const std::string& id)
   {
      {
         std::lock_guard lk(queue_mu_);
         queue_.push_back(id);
      }
      queue_cv_.notify_one();
   }

   // Worlds are rebuilt on demand from stored tables.
   void persist(const Session& s) const { write_atomic(opt_.data_dir / (s.id + ".json"), snapshot(s).dump() + "\n"); }

   void load_snapshots()
   {
      for (const auto& e : std::filesystem::directory_iterator(opt_.data_dir)) {
         if (e.path().extension() != ".json") continue;
         auto s = session_from_snapshot(nlohmann::json::parse(read_file(e.path().string())));
         const std::string id = s->id;
         if (!s->idempotency_key.empty()) by_key_[s->idempotency_key] = id;
         const bool pending = s->state == std::string(state::searching);
         sessions_[id] = std::move(s);
         if (pending) queue_.push_back(id);
      }
   }

   std::string new_id()
   {
      static const char* hex = "0123456789abcdef";
      std::string id;
      do {
         id.clear();
         for (int i = 0; i < 16; ++i) id.push_back(hex[rng_() & 15]);
      } while (sessions_.count(id));
      return id;
   }

   ServiceOptions opt_;
   mutable std::mutex mu_;
   std::map<std::string, std::unique_ptr<Session>> sessions_;
   std::map<std::string, std::string> by_key_;
   std::random_device seed_source_;
   std::mt19937_64 rng_{seed_source_()};

   std::mutex queue_mu_;
   std::condition_variable queue_cv_, idle_cv_;
   std::deque<std::string> queue_;
   int running_ = 0;
   bool stop_ = false;
   std::vector<std::thread> workers_;
};

/// host:port from BIND_ADDR-style text; a bare port binds 127.0.0.1.
inline std::pair<std::string, int> parse_bind_addr(const std::string& text)
{
   const auto colon = text.rfind(':');
   try {
      if (colon == std::string::npos) return {"127.0.0.1", std::stoi(text)};
      return {text.substr(0, colon), std::stoi(text.substr(colon + 1))};
   } catch (const std::exception&) {
      throw ConfigError("invalid bind address: " + text);
   }
}

} // namespace tabdpd
