#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hyperclean/contract_io.hpp"
#include "hyperclean/fairness.hpp"
#include "hyperclean/hr_systems.hpp"
#include "hyperclean/rng.hpp"

namespace hyperclean {

// Error classes map onto HTTP statuses 404, 409 and 422.
class not_found_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class conflict_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// The persisted store is unreadable or inconsistent.
class store_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Action { accept, desk_reject, escalate };

inline const char* to_string(Action a) {
  switch (a) {
    case Action::accept: return "accept";
    case Action::desk_reject: return "desk-reject";
    case Action::escalate: return "escalate";
  }
  return "?";
}

inline Action action_from_string(const std::string& s) {
  if (s == "accept") return Action::accept;
  if (s == "desk-reject") return Action::desk_reject;
  if (s == "escalate") return Action::escalate;
  throw validation_error("unknown action '" + s + "'");
}

struct Decision {
  Action action = Action::accept;
  std::string rationale;
  std::string decided_at;
  std::string actor;
};

struct CaseRecord {
  std::string id;
  InputVec actual_input;
  double system_output = 0;
  std::optional<FairnessVerdict> verdict;
  /// Every recorded decision; the last one is binding.
  std::vector<Decision> decisions;
  std::string created_at;

  bool flagged() const { return verdict && verdict->flagged(); }
  const char* status() const {
    if (!decisions.empty()) return "decided";
    return verdict ? "analyzed" : "pending";
  }
};

struct AuditEntry {
  std::uint64_t sequence = 0;
  std::string timestamp;
  std::string actor;
  std::string event;
  std::string case_id;
  std::string digest;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Per-case seed: stable hash of the case id mixed with the base seed.
inline std::uint64_t case_seed(const std::string& id, std::uint64_t base) {
  return mix_seed(fnv1a(id) ^ base);
}

/// UTC wall clock with millisecond resolution, ISO 8601.
inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

// --- JSON views --------------------------------------------------------------

inline nlohmann::json verdict_to_json(const FairnessVerdict& v) {
  using detail::extended_to_json;
  return {{"system_output", v.system_output},
          {"normalized_score", extended_to_json(v.normalized_score)},
          {"normalized_text", normalized_text(v.normalized_score)},
          {"score", extended_to_json(v.score)},
          {"bound", extended_to_json(v.bound)},
          {"output_distance", extended_to_json(v.output_distance)},
          {"counterpart", {{"input", v.counterpart}, {"output", v.counterpart_output}}},
          {"flagged", v.flagged()}};
}

inline FairnessVerdict verdict_from_json(const nlohmann::json& j) {
  using detail::extended_from_json;
  FairnessVerdict v;
  v.system_output = j.at("system_output").get<double>();
  v.normalized_score = extended_from_json(j.at("normalized_score"), "normalized_score");
  v.score = extended_from_json(j.at("score"), "score");
  v.bound = extended_from_json(j.at("bound"), "bound");
  v.output_distance = extended_from_json(j.at("output_distance"), "output_distance");
  v.counterpart = j.at("counterpart").at("input").get<InputVec>();
  v.counterpart_output = j.at("counterpart").at("output").get<double>();
  return v;
}

inline nlohmann::json decision_to_json(const Decision& d) {
  return {{"action", to_string(d.action)},
          {"rationale", d.rationale},
          {"decided_at", d.decided_at},
          {"actor", d.actor}};
}

inline nlohmann::json case_to_json(const CaseRecord& c) {
  nlohmann::json j = {{"id", c.id},
                      {"actual_input", c.actual_input},
                      {"system_output", c.system_output},
                      {"status", c.status()},
                      {"flagged", c.flagged()},
                      {"created_at", c.created_at}};
  j["verdict"] = c.verdict ? verdict_to_json(*c.verdict) : nlohmann::json("pending");
  j["decision"] = c.decisions.empty() ? nlohmann::json(nullptr) : decision_to_json(c.decisions.back());
  nlohmann::json trail = nlohmann::json::array();
  for (const auto& d : c.decisions) trail.push_back(decision_to_json(d));
  j["decisions"] = trail;
  return j;
}

/// Listing row: identity, status and the normalized score.
inline nlohmann::json case_summary_json(const CaseRecord& c) {
  nlohmann::json j = {{"id", c.id},
                      {"status", c.status()},
                      {"flagged", c.flagged()},
                      {"system_output", c.system_output},
                      {"created_at", c.created_at}};
  j["normalized_score"] =
      c.verdict ? detail::extended_to_json(c.verdict->normalized_score) : nlohmann::json(nullptr);
  j["decision"] = c.decisions.empty() ? nlohmann::json(nullptr)
                                      : nlohmann::json(to_string(c.decisions.back().action));
  return j;
}

inline nlohmann::json audit_to_json(const AuditEntry& e) {
  return {{"sequence", e.sequence}, {"timestamp", e.timestamp}, {"actor", e.actor},
          {"event", e.event},       {"case", e.case_id},        {"digest", e.digest}};
}

// --- Service -------------------------------------------------------------------

struct OversightConfig {
  ScoringTable system;
  FairnessContract contract;
  std::filesystem::path store;
  std::uint64_t base_seed = 0;
  std::size_t iterations = MonitorDefaults::iterations;
  double beta = MonitorDefaults::beta;
  double step_bound = MonitorDefaults::step_bound;
  std::size_t workers = 2;
  std::size_t page_size = 20;
  std::function<std::string()> clock = utc_now;
};

struct CaseFilter {
  std::optional<std::string> status;
  bool flagged_only = false;
  std::size_t page = 0;
};

/// Case store plus fairness analysis. Every mutation is one line appended to
/// the store file; the in-memory index is rebuilt by replaying that file.
class OversightService {
 public:
  explicit OversightService(OversightConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.workers == 0) cfg_.workers = 1;
    if (cfg_.page_size == 0) throw std::invalid_argument("page size must be positive");
    if (cfg_.contract.d_in.kind() == DistanceKind::euclid_normalized &&
        cfg_.contract.d_in.dimension() != cfg_.system.dimension())
      throw std::invalid_argument("contract input dimension does not match the system");
    replay();
    log_.open(cfg_.store, std::ios::app | std::ios::binary);
    if (!log_) throw store_error("cannot open store " + cfg_.store.string());
    for (std::size_t k = 0; k < cfg_.workers; ++k) pool_.emplace_back([this] { work(); });
  }

  ~OversightService() {
    {
      std::lock_guard lk(queue_mu_);
      stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : pool_) t.join();
  }

  OversightService(const OversightService&) = delete;
  OversightService& operator=(const OversightService&) = delete;

  const OversightConfig& config() const { return cfg_; }

  std::string ingest_case(const InputVec& input, const std::string& actor = "system") {
    if (input.size() != cfg_.system.dimension())
      throw validation_error("expected " + std::to_string(cfg_.system.dimension()) +
                             " components, got " + std::to_string(input.size()));
    for (std::size_t k = 0; k < input.size(); ++k)
      if (!(input[k] >= cfg_.system.lower(k) && input[k] <= cfg_.system.upper(k)))
        throw validation_error("component " + std::to_string(k) + " outside its range");
    const double y = cfg_.system(input);
    std::unique_lock lk(mu_);
    const std::string id = next_id();
    nlohmann::json payload = {
        {"case", id}, {"input", input}, {"output", y}, {"created_at", cfg_.clock()}};
    append("ingested", actor, payload);
    return id;
  }

  /// Runs the analysis on the worker pool and waits for it. A case is
  /// analyzed at most once; later calls return the stored verdict.
  FairnessVerdict analyze_case(const std::string& id, const std::string& actor = "system") {
    return submit_analysis(id, actor).get();
  }

  /// Queues the analysis; the future yields the verdict.
  std::shared_future<FairnessVerdict> submit_analysis(const std::string& id,
                                                      const std::string& actor = "system") {
    {
      std::shared_lock lk(mu_);
      const CaseRecord& c = find(id);
      if (c.verdict) {
        std::promise<FairnessVerdict> done;
        done.set_value(*c.verdict);
        return done.get_future().share();
      }
    }
    std::lock_guard lk(queue_mu_);
    if (auto it = inflight_.find(id); it != inflight_.end()) return it->second;
    auto task = std::make_shared<std::packaged_task<FairnessVerdict()>>(
        [this, id, actor] { return run_analysis(id, actor); });
    auto fut = task->get_future().share();
    inflight_.emplace(id, fut);
    queue_.push_back([task] { (*task)(); });
    queue_cv_.notify_one();
    return fut;
  }

  CaseRecord record_decision(const std::string& id, const std::string& action,
                             const std::string& rationale, const std::string& actor = "system") {
    const Action a = action_from_string(action);
    std::unique_lock lk(mu_);
    const CaseRecord& c = find(id);
    if (!c.verdict) throw conflict_error("analysis required");
    if (!c.decisions.empty() && a != Action::escalate)
      throw conflict_error("case already decided; only escalation may follow");
    append("decided", actor,
           {{"case", id}, {"action", to_string(a)}, {"rationale", rationale},
            {"decided_at", cfg_.clock()}});
    return cases_.at(id);
  }

  CaseRecord get_case(const std::string& id) const {
    std::shared_lock lk(mu_);
    return find(id);
  }

  std::vector<CaseRecord> list_cases(const CaseFilter& filter = {}) const {
    std::shared_lock lk(mu_);
    std::vector<const CaseRecord*> rows;
    for (const auto& [id, c] : cases_) {
      if (filter.flagged_only && !c.flagged()) continue;
      if (filter.status && *filter.status != c.status()) continue;
      rows.push_back(&c);
    }
    std::sort(rows.begin(), rows.end(), [](const CaseRecord* a, const CaseRecord* b) {
      return a->created_at != b->created_at ? a->created_at < b->created_at : a->id < b->id;
    });
    std::vector<CaseRecord> page;
    const std::size_t from = filter.page * cfg_.page_size;
    for (std::size_t k = from; k < rows.size() && k < from + cfg_.page_size; ++k)
      page.push_back(*rows[k]);
    return page;
  }

  std::vector<AuditEntry> audit() const {
    std::shared_lock lk(mu_);
    return audit_;
  }

  std::size_t case_count() const {
    std::shared_lock lk(mu_);
    return cases_.size();
  }

 private:
  const CaseRecord& find(const std::string& id) const {
    const auto it = cases_.find(id);
    if (it == cases_.end()) throw not_found_error("unknown case '" + id + "'");
    return it->second;
  }

  std::string next_id() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%06llu", static_cast<unsigned long long>(++last_id_));
    return buf;
  }

  FairnessVerdict run_analysis(const std::string& id, const std::string& actor) {
    try {
      FairnessVerdict v = analyze_now(id, actor);
      forget(id);
      return v;
    } catch (...) {
      forget(id);
      throw;
    }
  }

  void forget(const std::string& id) {
    std::lock_guard lk(queue_mu_);
    inflight_.erase(id);
  }

  FairnessVerdict analyze_now(const std::string& id, const std::string& actor) {
    InputVec input;
    {
      std::shared_lock lk(mu_);
      input = find(id).actual_input;
    }
    FalsifierConfig fc;
    fc.beta = cfg_.beta;
    fc.max_iterations = cfg_.iterations;
    fc.rng_seed = case_seed(id, cfg_.base_seed);
    const ScoringTable& sys = cfg_.system;
    const ScoringFn P = [&sys](std::span<const double> x) { return sys(x); };
    const FairnessVerdict v =
        fairness_aware(P, cfg_.contract, input, fc, perturb_one(InputBox::of(sys), cfg_.step_bound));
    {
      std::unique_lock lk(mu_);
      if (!cases_.at(id).verdict) {
        append("analyzed", actor, {{"case", id}, {"seed", fc.rng_seed}, {"verdict", verdict_to_json(v)}});
        if (v.flagged())
          append("flag-raised", actor,
                 {{"case", id}, {"normalized_score", detail::extended_to_json(v.normalized_score)}});
      }
    }
    return v;
  }

  void work() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lk(queue_mu_);
        queue_cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
  }

  // Caller holds mu_ exclusively.
  void append(const std::string& event, const std::string& actor, const nlohmann::json& payload) {
    nlohmann::json line = {{"sequence", audit_.size() + 1},
                           {"timestamp", cfg_.clock()},
                           {"actor", actor},
                           {"event", event},
                           {"payload", payload},
                           {"digest", hex64(fnv1a(payload.dump()))}};
    apply(line);
    log_ << line.dump() << '\n';
    log_.flush();
    if (!log_) throw store_error("failed to append to " + cfg_.store.string());
  }

  void apply(const nlohmann::json& line) {
    const std::string event = line.at("event").get<std::string>();
    const nlohmann::json& p = line.at("payload");
    const std::string id = p.at("case").get<std::string>();
    if (event == "ingested") {
      CaseRecord c;
      c.id = id;
      c.actual_input = p.at("input").get<InputVec>();
      c.system_output = p.at("output").get<double>();
      c.created_at = p.at("created_at").get<std::string>();
      if (!cases_.emplace(id, std::move(c)).second) throw store_error("duplicate case " + id);
      if (id.size() > 1) last_id_ = std::max<std::uint64_t>(last_id_, std::stoull(id.substr(1)));
    } else if (event == "analyzed") {
      cases_.at(id).verdict = verdict_from_json(p.at("verdict"));
    } else if (event == "decided") {
      CaseRecord& c = cases_.at(id);
      if (!c.verdict) throw store_error("decision before analysis for " + id);
      c.decisions.push_back({action_from_string(p.at("action").get<std::string>()),
                             p.at("rationale").get<std::string>(),
                             p.at("decided_at").get<std::string>(),
                             line.at("actor").get<std::string>()});
    } else if (event != "flag-raised") {
      throw store_error("unknown event '" + event + "'");
    }
    audit_.push_back({line.at("sequence").get<std::uint64_t>(), line.at("timestamp").get<std::string>(),
                      line.at("actor").get<std::string>(), event, id,
                      line.at("digest").get<std::string>()});
  }

  void replay() {
    if (!std::filesystem::exists(cfg_.store)) return;
    std::ifstream in(cfg_.store, std::ios::binary);
    if (!in) throw store_error("cannot read store " + cfg_.store.string());
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
      ++lineno;
      if (text.empty()) continue;
      try {
        const auto line = nlohmann::json::parse(text);
        if (line.at("sequence").get<std::uint64_t>() != audit_.size() + 1)
          throw store_error("sequence gap");
        if (line.at("digest").get<std::string>() != hex64(fnv1a(line.at("payload").dump())))
          throw store_error("digest mismatch");
        apply(line);
      } catch (const std::exception& e) {
        throw store_error(cfg_.store.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  OversightConfig cfg_;
  mutable std::shared_mutex mu_;
  std::map<std::string, CaseRecord> cases_;
  std::vector<AuditEntry> audit_;
  std::uint64_t last_id_ = 0;
  std::ofstream log_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::function<void()>> queue_;
  std::map<std::string, std::shared_future<FairnessVerdict>> inflight_;
  bool stopping_ = false;
  std::vector<std::thread> pool_;
};

}  // namespace hyperclean
