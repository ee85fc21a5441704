#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "optarena/domain.hpp"
#include "optarena/sha256.hpp"

namespace optarena {

using json = nlohmann::json;

// Key of one experimental unit: (snippet, approach, combination, repetition).
struct UnitKey {
  std::string snippet_id;
  std::string approach_label;
  std::string combination_id;
  int repetition_index = 1;

  std::string str() const {
    return snippet_id + "|" + approach_label + "|" + combination_id + "|" +
           std::to_string(repetition_index);
  }
  auto operator<=>(const UnitKey&) const = default;
};

struct AccountingRow {
  std::string combination_id;
  std::string approach_label;
  int repetition_index = 0;
  std::string phase;  // "generate" or "evaluate"
  std::int64_t calls = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Money cost;
  double wall_time_seconds = 0.0;
};

struct AccountingReport {
  std::vector<AccountingRow> rows;  // sorted by (combination, approach, repetition, phase)
  std::int64_t total_calls = 0;
  Money total_cost;
};

// Append-only event log for one run: newline-delimited JSON records plus
// content-addressed blob files. Single writer, replayable; the sole source
// of truth for resume and analytics.
class RunLedger {
 public:
  // Creates a new run directory (or opens an existing one and replays it).
  static RunLedger open(const std::filesystem::path& dir, const std::string& run_id,
                        const std::string& config_hash, const std::string& template_hash) {
    RunLedger ledger(dir);
    std::filesystem::create_directories(dir / "blobs");
    if (std::filesystem::exists(ledger.events_path())) {
      ledger.replay();
      if (!ledger.config_hash_.empty() && ledger.config_hash_ != config_hash)
        throw std::runtime_error("ledger at " + dir.string() +
                                 " was written with a different configuration");
    }
    ledger.out_.open(ledger.events_path(), std::ios::app);
    if (!ledger.out_) throw std::runtime_error("cannot open ledger for append: " + dir.string());
    if (ledger.events_.empty()) {
      json meta = {{"type", "run_meta"},
                   {"run_id", run_id},
                   {"config_hash", config_hash},
                   {"template_hash", template_hash}};
      ledger.append(meta);
      ledger.config_hash_ = config_hash;
    }
    return ledger;
  }

  // Read-only open of an existing ledger (report/analytics side).
  static RunLedger open_readonly(const std::filesystem::path& dir) {
    RunLedger ledger(dir);
    if (!std::filesystem::exists(ledger.events_path()))
      throw std::runtime_error("no ledger found at " + dir.string());
    ledger.replay();
    return ledger;
  }

  RunLedger(RunLedger&&) = default;

  const std::string& config_hash() const { return config_hash_; }
  const std::filesystem::path& dir() const { return dir_; }

  // --- append side -------------------------------------------------------

  std::int64_t append_snippet(const CodeSnippet& s) {
    std::lock_guard lock(*mu_);
    if (snippets_.count(s.id)) return -1;  // idempotent re-ingest
    write_blob(s.content);
    json e = {{"type", "snippet"},
              {"id", s.id},
              {"source_path", s.source_path},
              {"language_tag", s.language_tag},
              {"start_line", s.line_span.start},
              {"end_line", s.line_span.end},
              {"blob", sha256_hex(s.content)}};
    return append(e);
  }

  // Assigns the record id from the sequence number; returns it.
  std::string append_call(CallRecord c) {
    std::lock_guard lock(*mu_);
    c.id = "c" + std::to_string(next_seq_);
    json e = {{"type", "call"},
              {"id", c.id},
              {"agent", c.agent_name},
              {"role", c.role},
              {"prompt_tokens", c.prompt_tokens},
              {"completion_tokens", c.completion_tokens},
              {"latency_s", c.latency_seconds},
              {"cost_picos", c.cost.picos()},
              {"success", c.outcome.success},
              {"failure_reason", c.outcome.failure_reason},
              {"tokens_estimated", c.tokens_estimated},
              {"snippet_id", c.snippet_id},
              {"approach", c.approach_label},
              {"combination", c.combination_id},
              {"repetition", c.repetition_index},
              {"phase", c.phase}};
    append(e);
    return c.id;
  }

  std::int64_t append_variant(const OptimizationVariant& v) {
    std::lock_guard lock(*mu_);
    for (const auto& call_id : v.trace)
      if (!calls_.count(call_id))
        throw std::runtime_error("variant references unknown call record " + call_id);
    write_blob(v.content);
    json e = {{"type", "variant"},
              {"id", v.id},
              {"snippet_id", v.snippet_id},
              {"approach", v.approach.label()},
              {"combination", v.combination_id},
              {"repetition", v.repetition_index},
              {"trace", v.trace},
              {"prompt_tokens", v.totals.prompt_tokens},
              {"completion_tokens", v.totals.completion_tokens},
              {"cost_picos", v.totals.cost.picos()},
              {"wall_time_s", v.totals.wall_time_seconds},
              {"blob", sha256_hex(v.content)}};
    return append(e);
  }

  std::int64_t mark_unit_complete(const UnitKey& key) {
    std::lock_guard lock(*mu_);
    if (completed_units_.count(key)) return -1;
    json e = {{"type", "unit_complete"},
              {"snippet_id", key.snippet_id},
              {"approach", key.approach_label},
              {"combination", key.combination_id},
              {"repetition", key.repetition_index}};
    return append(e);
  }

  std::int64_t mark_unit_failed(const UnitKey& key, const std::string& reason) {
    std::lock_guard lock(*mu_);
    json e = {{"type", "unit_failed"},
              {"snippet_id", key.snippet_id},
              {"approach", key.approach_label},
              {"combination", key.combination_id},
              {"repetition", key.repetition_index},
              {"reason", reason}};
    return append(e);
  }

  std::int64_t append_match(const MatchRecord& m) {
    std::lock_guard lock(*mu_);
    for (const auto& call_id : m.judge_call_ids)
      if (!calls_.count(call_id))
        throw std::runtime_error("match references unknown call record " + call_id);
    json e = {{"type", "match"},
              {"snippet_id", m.snippet_id},
              {"variant_a", m.variant_a},
              {"variant_b", m.variant_b},
              {"score_a", m.score_a},
              {"judge_calls", m.judge_call_ids},
              {"round", m.round_index},
              {"scope", m.scope_key}};
    return append(e);
  }

  std::int64_t mark_tournament_complete(const std::string& scope_key,
                                        const std::map<std::string, double>& ratings,
                                        int match_count) {
    std::lock_guard lock(*mu_);
    if (completed_tournaments_.count(scope_key)) return -1;
    json e = {{"type", "tournament_complete"},
              {"scope", scope_key},
              {"ratings", ratings},
              {"match_count", match_count}};
    return append(e);
  }

  // --- query side --------------------------------------------------------

  bool is_unit_complete(const UnitKey& key) const { return completed_units_.count(key) > 0; }
  bool is_unit_failed(const UnitKey& key) const { return failed_units_.count(key) > 0; }
  bool is_tournament_complete(const std::string& scope_key) const {
    return completed_tournaments_.count(scope_key) > 0;
  }

  const std::map<std::string, CodeSnippet>& snippets() const { return snippets_; }
  const std::map<std::string, CallRecord>& calls() const { return calls_; }
  const std::map<std::string, OptimizationVariant>& variants() const { return variants_; }
  const std::vector<MatchRecord>& matches() const { return matches_; }
  const std::map<std::string, std::map<std::string, double>>& tournament_ratings() const {
    return tournament_ratings_;
  }
  const std::set<UnitKey>& completed_units() const { return completed_units_; }
  const std::set<UnitKey>& failed_units() const { return failed_units_; }
  std::int64_t event_count() const { return static_cast<std::int64_t>(events_.size()); }

  std::optional<OptimizationVariant> find_variant(const UnitKey& key) const {
    auto it = unit_variants_.find(key);
    if (it == unit_variants_.end()) return std::nullopt;
    return variants_.at(it->second);
  }

  // Exact accounting from call records. Judge calls carry phase "evaluate"
  // (or the generating unit when issued inside GA fitness).
  AccountingReport reconcile() const {
    std::map<std::tuple<std::string, std::string, int, std::string>, AccountingRow> rows;
    AccountingReport report;
    for (const auto& [id, c] : calls_) {
      auto key = std::make_tuple(c.combination_id, c.approach_label, c.repetition_index, c.phase);
      auto& row = rows[key];
      row.combination_id = c.combination_id;
      row.approach_label = c.approach_label;
      row.repetition_index = c.repetition_index;
      row.phase = c.phase;
      row.calls += 1;
      row.prompt_tokens += c.prompt_tokens;
      row.completion_tokens += c.completion_tokens;
      row.cost += c.cost;
      row.wall_time_seconds += c.latency_seconds;
      report.total_calls += 1;
      report.total_cost += c.cost;
    }
    for (auto& [k, row] : rows) report.rows.push_back(row);
    return report;
  }

  // Hash over all events with the timestamp field removed; two runs are
  // byte-equivalent iff these match.
  std::string comparison_hash() const {
    Sha256 h;
    for (const auto& e : events_) {
      json copy = e;
      copy.erase("ts");
      std::string line = copy.dump();
      h.update(std::to_string(line.size()));
      h.update(":");
      h.update(line);
    }
    return h.hex_digest();
  }

 private:
  explicit RunLedger(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path events_path() const { return dir_ / "events.jsonl"; }

  void write_blob(const std::string& content) {
    auto path = dir_ / "blobs" / (sha256_hex(content) + ".txt");
    if (std::filesystem::exists(path)) return;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("failed to write blob " + path.string());
  }

  std::int64_t append(json& e) {
    e["seq"] = next_seq_;
    e["ts"] = now_iso8601();
    std::string line = e.dump();
    out_ << line << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("ledger append failed; aborting run");
    index(e);
    events_.push_back(std::move(e));
    return next_seq_++;
  }

  static std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  void replay() {
    std::ifstream in(events_path(), std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::string> valid_lines;
    std::size_t pos = 0;
    bool truncated = false;
    while (pos < raw.size()) {
      std::size_t nl = raw.find('\n', pos);
      if (nl == std::string::npos) { truncated = true; break; }  // partial trailing record
      std::string line = raw.substr(pos, nl - pos);
      pos = nl + 1;
      json e = json::parse(line, nullptr, false);
      if (e.is_discarded()) { truncated = true; break; }
      index(e);
      events_.push_back(std::move(e));
      valid_lines.push_back(std::move(line));
    }
    if (truncated) {
      // Keep only the valid prefix so future appends stay well-formed.
      std::ofstream rewrite(events_path(), std::ios::binary | std::ios::trunc);
      for (const auto& line : valid_lines) rewrite << line << "\n";
    }
    if (!events_.empty()) next_seq_ = events_.back().at("seq").get<std::int64_t>() + 1;
  }

  void index(const json& e) {
    const std::string type = e.at("type");
    if (type == "run_meta") {
      config_hash_ = e.at("config_hash");
    } else if (type == "snippet") {
      CodeSnippet s;
      s.id = e.at("id");
      s.source_path = e.at("source_path");
      s.language_tag = e.at("language_tag");
      s.line_span = {e.at("start_line"), e.at("end_line")};
      s.content = read_blob(e.at("blob"));
      snippets_[s.id] = std::move(s);
    } else if (type == "call") {
      CallRecord c;
      c.id = e.at("id");
      c.agent_name = e.at("agent");
      c.role = e.at("role");
      c.prompt_tokens = e.at("prompt_tokens");
      c.completion_tokens = e.at("completion_tokens");
      c.latency_seconds = e.at("latency_s");
      c.cost = Money::from_picos(e.at("cost_picos"));
      c.outcome.success = e.at("success");
      c.outcome.failure_reason = e.at("failure_reason");
      c.tokens_estimated = e.at("tokens_estimated");
      c.snippet_id = e.at("snippet_id");
      c.approach_label = e.at("approach");
      c.combination_id = e.at("combination");
      c.repetition_index = e.at("repetition");
      c.phase = e.at("phase");
      calls_[c.id] = std::move(c);
    } else if (type == "variant") {
      OptimizationVariant v;
      v.id = e.at("id");
      v.snippet_id = e.at("snippet_id");
      v.approach = ApproachTag::from_label(e.at("approach"));
      v.combination_id = e.at("combination");
      v.repetition_index = e.at("repetition");
      v.trace = e.at("trace").get<std::vector<std::string>>();
      v.totals.prompt_tokens = e.at("prompt_tokens");
      v.totals.completion_tokens = e.at("completion_tokens");
      v.totals.cost = Money::from_picos(e.at("cost_picos"));
      v.totals.wall_time_seconds = e.at("wall_time_s");
      v.content = read_blob(e.at("blob"));
      unit_variants_[{v.snippet_id, v.approach.label(), v.combination_id, v.repetition_index}] = v.id;
      variants_[v.id] = std::move(v);
    } else if (type == "unit_complete") {
      completed_units_.insert(
          {e.at("snippet_id"), e.at("approach"), e.at("combination"), e.at("repetition")});
    } else if (type == "unit_failed") {
      failed_units_.insert(
          {e.at("snippet_id"), e.at("approach"), e.at("combination"), e.at("repetition")});
    } else if (type == "match") {
      MatchRecord m;
      m.snippet_id = e.at("snippet_id");
      m.variant_a = e.at("variant_a");
      m.variant_b = e.at("variant_b");
      m.score_a = e.at("score_a");
      m.judge_call_ids = e.at("judge_calls").get<std::vector<std::string>>();
      m.round_index = e.at("round");
      m.scope_key = e.at("scope");
      matches_.push_back(std::move(m));
    } else if (type == "tournament_complete") {
      completed_tournaments_.insert(e.at("scope").get<std::string>());
      tournament_ratings_[e.at("scope")] =
          e.at("ratings").get<std::map<std::string, double>>();
    } else {
      throw std::runtime_error("unknown ledger event type: " + type);
    }
  }

  std::string read_blob(const std::string& hash) const {
    auto path = dir_ / "blobs" / (hash + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing blob " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }

  std::filesystem::path dir_;
  std::ofstream out_;
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  std::int64_t next_seq_ = 0;
  std::string config_hash_;

  std::vector<json> events_;
  std::map<std::string, CodeSnippet> snippets_;
  std::map<std::string, CallRecord> calls_;
  std::map<std::string, OptimizationVariant> variants_;
  std::map<UnitKey, std::string> unit_variants_;
  std::vector<MatchRecord> matches_;
  std::set<UnitKey> completed_units_;
  std::set<UnitKey> failed_units_;
  std::set<std::string> completed_tournaments_;
  std::map<std::string, std::map<std::string, double>> tournament_ratings_;
};

}  // namespace optarena
