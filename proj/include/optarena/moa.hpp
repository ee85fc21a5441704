#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optarena/domain.hpp"
#include "optarena/gateway.hpp"
#include "optarena/prompts.hpp"

namespace optarena {

// Layered feedforward plan: layers 1..L-1 run the proposers, layer L is a
// single aggregator synthesis.
struct MoAPlan {
  std::string combination_id;
  int layer_count = 3;  // >= 2
  std::vector<std::string> proposers;
  std::string aggregator;
  const PromptTemplates* templates = nullptr;

  void validate() const {
    if (layer_count < 2) throw std::invalid_argument("MoA needs at least 2 layers");
    if (proposers.empty()) throw std::invalid_argument("MoA needs at least 1 proposer");
    if (aggregator.empty()) throw std::invalid_argument("MoA needs an aggregator");
    if (!templates) throw std::invalid_argument("MoA plan missing prompt templates");
  }

  static MoAPlan for_combination(const Combination& c, int layers,
                                 const PromptTemplates& templates) {
    MoAPlan p;
    p.combination_id = c.id;
    p.layer_count = layers;
    p.proposers = c.proposers;
    p.aggregator = c.aggregator;
    p.templates = &templates;
    return p;
  }
};

struct MoATrace {
  // layer index (1-based) -> (agent_name, candidate text) in agent order
  std::vector<std::vector<std::pair<std::string, std::string>>> layers;
  std::string final_variant_id;
};

struct MoAResult {
  bool ok = false;
  std::string failure_reason;
  OptimizationVariant variant;
  MoATrace trace;
};

// Deterministic per-call seed so concurrent scheduling cannot change outputs.
inline std::uint64_t derive_call_seed(std::uint64_t global_seed, const UnitKey& unit,
                                      const std::string& stage, int index) {
  return hash_to_u64(std::to_string(global_seed) + "|" + unit.str() + "|" + stage + "|" +
                     std::to_string(index));
}

// Refiner prompt: original task + snippet + every prior candidate under a
// stable anonymous header, ordered by (layer, agent index). Producing model
// names never appear.
inline std::string render_refiner_prompt(const PromptTemplates& templates,
                                         const CodeSnippet& snippet,
                                         const std::vector<AnonymousCandidate>& prior) {
  if (prior.empty()) throw std::invalid_argument("refiner prompt needs at least 1 prior candidate");
  return render_template(templates.refiner, {{"language", snippet.language_tag},
                                             {"snippet", snippet.content},
                                             {"candidates", render_candidate_sections(prior)}});
}

inline std::string render_synthesis_prompt(const PromptTemplates& templates,
                                           const CodeSnippet& snippet,
                                           const std::vector<AnonymousCandidate>& candidates) {
  return render_template(templates.synthesis,
                         {{"language", snippet.language_tag},
                          {"snippet", snippet.content},
                          {"candidates", render_candidate_sections(candidates)}});
}

// Runs one MoA unit. Layer 1: one proposer call each with the plain
// optimization prompt. Layers 2..L-1: one call per proposer, conditioned on
// all candidates from all earlier layers. Layer L: a single aggregator call.
// Full success issues P*(L-1)+1 calls. A failed proposer degrades the layer;
// a failed aggregator (or an empty extraction) fails the whole unit.
inline MoAResult optimize_moa(const CodeSnippet& snippet, const MoAPlan& plan,
                              const UnitKey& unit, std::uint64_t global_seed,
                              ModelGateway& gateway) {
  plan.validate();
  MoAResult result;
  std::vector<AnonymousCandidate> accumulated;  // (layer, agent index) order
  std::vector<std::string> trace_ids;
  CallTotals totals;

  auto record = [&](const ModelGateway::CallResult& call) {
    trace_ids.push_back(call.call_id);
    if (call.ok) totals.add(gateway.ledger_call(call.call_id));
  };

  for (int layer = 1; layer <= plan.layer_count - 1; ++layer) {
    std::vector<std::pair<std::string, std::string>> layer_candidates;
    for (std::size_t agent_idx = 0; agent_idx < plan.proposers.size(); ++agent_idx) {
      std::string prompt;
      if (layer == 1) {
        prompt = render_template(plan.templates->proposer, {{"language", snippet.language_tag},
                                                            {"snippet", snippet.content}});
      } else {
        prompt = render_refiner_prompt(*plan.templates, snippet, accumulated);
      }
      ChatRequest req;
      req.agent_name = plan.proposers[agent_idx];
      req.messages = {{"user", prompt}};
      req.request_seed = derive_call_seed(global_seed, unit, "moa_layer_" + std::to_string(layer),
                                          static_cast<int>(agent_idx));
      CallContext ctx{CallRole::proposer_layer, layer, unit, "generate"};
      auto call = gateway.complete(req, ctx);
      record(call);
      if (call.ok) {
        layer_candidates.emplace_back(plan.proposers[agent_idx], call.response.text);
      }
    }
    if (layer_candidates.empty() && accumulated.empty()) {
      result.failure_reason = "all proposers failed with no surviving candidates";
      return result;
    }
    result.trace.layers.push_back(layer_candidates);
    for (auto& [agent, text] : layer_candidates) accumulated.push_back({text});
  }

  std::string synthesis = render_synthesis_prompt(*plan.templates, snippet, accumulated);
  ChatRequest req;
  req.agent_name = plan.aggregator;
  req.messages = {{"user", synthesis}};
  req.request_seed = derive_call_seed(global_seed, unit, "moa_aggregator", 0);
  CallContext ctx{CallRole::aggregator, plan.layer_count, unit, "generate"};
  auto call = gateway.complete(req, ctx);
  record(call);
  if (!call.ok) {
    result.failure_reason = "aggregator call failed: " + call.failure_reason;
    return result;
  }
  auto code = extract_code_block(call.response.text);
  if (!code) {
    result.failure_reason = "empty_variant";
    return result;
  }
  result.trace.layers.push_back({{plan.aggregator, call.response.text}});

  OptimizationVariant v;
  v.snippet_id = snippet.id;
  v.approach = ApproachTag::moa();
  v.combination_id = plan.combination_id;
  v.repetition_index = unit.repetition_index;
  v.content = *code;
  v.trace = trace_ids;
  v.totals = totals;
  v.id = variant_content_id(v.snippet_id, v.approach.label(), v.combination_id,
                            v.repetition_index, v.content);
  result.trace.final_variant_id = v.id;
  result.variant = std::move(v);
  result.ok = true;
  return result;
}

}  // namespace optarena
