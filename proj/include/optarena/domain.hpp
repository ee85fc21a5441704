#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optarena/money.hpp"
#include "optarena/sha256.hpp"

namespace optarena {

struct LineSpan {
  int start = 1;  // 1-based, inclusive
  int end = 1;
  bool operator==(const LineSpan&) const = default;
};

// Deterministic content-addressed snippet id. Field separators are
// length-prefixed so no two distinct (path, span, content) tuples collide on
// concatenation.
inline std::string snippet_id(const std::string& source_path, LineSpan span,
                              const std::string& content) {
  if (content.empty()) throw std::invalid_argument("snippet content must be non-empty");
  if (span.start > span.end) throw std::invalid_argument("line span start exceeds end");
  Sha256 h;
  auto field = [&](const std::string& s) {
    h.update(std::to_string(s.size()));
    h.update(":");
    h.update(s);
  };
  field("snippet");
  field(source_path);
  field(std::to_string(span.start));
  field(std::to_string(span.end));
  field(content);
  return h.hex_digest();
}

struct CodeSnippet {
  std::string id;
  std::string source_path;
  std::string language_tag;
  std::string content;
  LineSpan line_span;

  static CodeSnippet make(std::string source_path, LineSpan span,
                          std::string language_tag, std::string content) {
    CodeSnippet s;
    s.id = snippet_id(source_path, span, content);
    s.source_path = std::move(source_path);
    s.language_tag = std::move(language_tag);
    s.content = std::move(content);
    s.line_span = span;
    return s;
  }
};

enum class ProvenanceClass { open_source, commercial };

inline std::string to_string(ProvenanceClass p) {
  return p == ProvenanceClass::open_source ? "open_source" : "commercial";
}

inline ProvenanceClass provenance_from_string(const std::string& s) {
  if (s == "open_source") return ProvenanceClass::open_source;
  if (s == "commercial") return ProvenanceClass::commercial;
  throw std::invalid_argument("unknown provenance class: " + s);
}

struct Sampling {
  double temperature = 0.0;
  int max_output_tokens = 4096;
};

// One configured model endpoint plus its pricing and governance class.
struct AgentSpec {
  std::string name;
  std::string endpoint_id;
  ProvenanceClass provenance_class = ProvenanceClass::open_source;
  Sampling sampling;
  Pricing pricing;
};

// A named portfolio of 3 proposers plus an aggregator.
struct Combination {
  std::string id;
  std::vector<std::string> proposers;  // exactly 3 distinct names
  std::string aggregator;

  void validate() const {
    if (proposers.size() != 3)
      throw std::invalid_argument("combination " + id + " must list exactly 3 proposers");
    for (std::size_t i = 0; i < proposers.size(); ++i)
      for (std::size_t j = i + 1; j < proposers.size(); ++j)
        if (proposers[i] == proposers[j])
          throw std::invalid_argument("combination " + id + " has duplicate proposer " + proposers[i]);
    if (aggregator.empty())
      throw std::invalid_argument("combination " + id + " missing aggregator");
  }
};

enum class ApproachKind { MoA, GA, Individual };

inline std::string to_string(ApproachKind k) {
  switch (k) {
    case ApproachKind::MoA: return "moa";
    case ApproachKind::GA: return "ga";
    case ApproachKind::Individual: return "individual";
  }
  throw std::logic_error("bad approach kind");
}

inline ApproachKind approach_kind_from_string(const std::string& s) {
  if (s == "moa") return ApproachKind::MoA;
  if (s == "ga") return ApproachKind::GA;
  if (s == "individual") return ApproachKind::Individual;
  throw std::invalid_argument("unknown approach kind: " + s);
}

struct ApproachTag {
  ApproachKind kind = ApproachKind::MoA;
  std::optional<std::string> model_name;  // present iff kind == Individual

  // Stable label used as a ledger/report key, e.g. "moa" or
  // "individual:llama-3-1-405b".
  std::string label() const {
    if (kind == ApproachKind::Individual) {
      if (!model_name) throw std::logic_error("individual approach missing model name");
      return "individual:" + *model_name;
    }
    return to_string(kind);
  }

  static ApproachTag moa() { return {ApproachKind::MoA, std::nullopt}; }
  static ApproachTag ga() { return {ApproachKind::GA, std::nullopt}; }
  static ApproachTag individual(std::string model) {
    return {ApproachKind::Individual, std::move(model)};
  }

  static ApproachTag from_label(const std::string& label) {
    if (auto pos = label.find(':'); pos != std::string::npos && label.substr(0, pos) == "individual")
      return individual(label.substr(pos + 1));
    return {approach_kind_from_string(label), std::nullopt};
  }

  bool operator==(const ApproachTag&) const = default;
};

enum class CallRole {
  proposer_layer,   // carries a layer index
  aggregator,
  ga_generation,    // carries a generation index
  individual,
  judge,
};

inline std::string role_label(CallRole role, int index) {
  switch (role) {
    case CallRole::proposer_layer: return "proposer_layer_" + std::to_string(index);
    case CallRole::aggregator: return "aggregator";
    case CallRole::ga_generation: return "ga_generation_" + std::to_string(index);
    case CallRole::individual: return "individual";
    case CallRole::judge: return "judge";
  }
  throw std::logic_error("bad call role");
}

struct CallOutcome {
  bool success = true;
  std::string failure_reason;  // "timeout", "malformed", ... when !success
};

// One model invocation, success or failure; the accounting unit.
struct CallRecord {
  std::string id;
  std::string agent_name;
  std::string role;  // role_label() value
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_seconds = 0.0;
  Money cost;
  CallOutcome outcome;
  bool tokens_estimated = false;  // usage missing from endpoint, bytes/4 fallback
  // Unit attribution for reconciliation.
  std::string snippet_id;
  std::string approach_label;
  std::string combination_id;
  int repetition_index = 0;
  std::string phase;  // "generate" or "evaluate"
};

struct CallTotals {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Money cost;
  double wall_time_seconds = 0.0;

  void add(const CallRecord& c) {
    prompt_tokens += c.prompt_tokens;
    completion_tokens += c.completion_tokens;
    cost += c.cost;
    wall_time_seconds += c.latency_seconds;
  }
};

// One generated optimized snippet with full provenance.
struct OptimizationVariant {
  std::string id;  // content hash
  std::string snippet_id;
  ApproachTag approach;
  std::string combination_id;
  int repetition_index = 1;
  std::string content;
  std::vector<std::string> trace;  // CallRecord ids, in issue order
  CallTotals totals;
};

// One pairwise judge outcome. score_a in {1, 0.5, 0}; score for B is always
// 1 - score_a.
struct MatchRecord {
  std::string snippet_id;
  std::string variant_a;
  std::string variant_b;
  double score_a = 0.5;
  std::vector<std::string> judge_call_ids;  // both orderings; empty on short-circuit
  int round_index = 0;
  std::string scope_key;  // which tournament this match belongs to
};

inline std::string variant_content_id(const std::string& snippet_id,
                                      const std::string& approach_label,
                                      const std::string& combination_id,
                                      int repetition_index,
                                      const std::string& content) {
  Sha256 h;
  auto field = [&](const std::string& s) {
    h.update(std::to_string(s.size()));
    h.update(":");
    h.update(s);
  };
  field("variant");
  field(snippet_id);
  field(approach_label);
  field(combination_id);
  field(std::to_string(repetition_index));
  field(content);
  return h.hex_digest();
}

}  // namespace optarena
