#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "optarena/arena.hpp"
#include "optarena/domain.hpp"
#include "optarena/gateway.hpp"
#include "optarena/moa.hpp"
#include "optarena/prompts.hpp"

namespace optarena {

// Prompt genome: an ordered list of instruction-fragment indices plus the
// model the rendered prompt is sent to.
struct PromptGenome {
  std::vector<int> fragments;
  std::string target_agent;
};

struct GAParams {
  int population_size = 6;     // N >= 2
  int max_generations = 5;     // G_max
  int stall_generations = 2;   // stop after this many non-improving generations
  double mutation_rate = 0.2;  // per-fragment
  double crossover_rate = 0.9;
  int tournament_size = 2;
  int max_genome_length = 5;
  int judge_pairs_per_generation = 15;  // fitness comparison budget
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("GA population must be >= 2");
    if (max_generations < 1) throw std::invalid_argument("GA needs >= 1 generation");
    if (stall_generations < 1) throw std::invalid_argument("GA stall window must be >= 1");
    if (mutation_rate < 0 || mutation_rate > 1 || crossover_rate < 0 || crossover_rate > 1)
      throw std::invalid_argument("GA rates must be in [0,1]");
    if (max_genome_length < 1) throw std::invalid_argument("GA genome length bound must be >= 1");
    if (tournament_size < 1) throw std::invalid_argument("GA tournament size must be >= 1");
  }
};

namespace ga_detail {

// Dedup preserving first occurrence, then truncate to the length bound.
inline void normalize(std::vector<int>& fragments, int max_len) {
  std::vector<int> out;
  for (int f : fragments) {
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  }
  if (static_cast<int>(out.size()) > max_len) out.resize(max_len);
  fragments = std::move(out);
}

}  // namespace ga_detail

// Single-point crossover at explicit cut positions (1 <= cut <= parent size).
inline std::pair<PromptGenome, PromptGenome> crossover_at(const PromptGenome& a,
                                                          const PromptGenome& b,
                                                          std::size_t cut_a, std::size_t cut_b,
                                                          int max_len) {
  PromptGenome child1{{}, a.target_agent};
  PromptGenome child2{{}, b.target_agent};
  child1.fragments.assign(a.fragments.begin(), a.fragments.begin() + cut_a);
  child1.fragments.insert(child1.fragments.end(), b.fragments.begin() + cut_b, b.fragments.end());
  child2.fragments.assign(b.fragments.begin(), b.fragments.begin() + cut_b);
  child2.fragments.insert(child2.fragments.end(), a.fragments.begin() + cut_a, a.fragments.end());
  ga_detail::normalize(child1.fragments, max_len);
  ga_detail::normalize(child2.fragments, max_len);
  return {std::move(child1), std::move(child2)};
}

inline std::pair<PromptGenome, PromptGenome> crossover(const PromptGenome& a,
                                                       const PromptGenome& b,
                                                       std::uint64_t cut_seed, int max_len) {
  if (a.fragments.empty() || b.fragments.empty())
    throw std::invalid_argument("crossover requires non-empty genomes");
  std::mt19937_64 rng(cut_seed);
  std::uniform_int_distribution<std::size_t> da(1, a.fragments.size());
  std::uniform_int_distribution<std::size_t> db(1, b.fragments.size());
  return crossover_at(a, b, da(rng), db(rng), max_len);
}

// Per-fragment mutation: swap to a random fragment, insert after, or delete
// (kept non-empty). Normalized afterwards.
inline void mutate(PromptGenome& g, int library_size, double rate, int max_len,
                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick_fragment(0, library_size - 1);
  std::uniform_int_distribution<int> pick_op(0, 2);
  std::vector<int> out;
  for (int f : g.fragments) {
    if (coin(rng) >= rate) {
      out.push_back(f);
      continue;
    }
    switch (pick_op(rng)) {
      case 0: out.push_back(pick_fragment(rng)); break;            // swap
      case 1: out.push_back(f); out.push_back(pick_fragment(rng)); break;  // insert
      case 2: break;                                               // delete
    }
  }
  if (out.empty()) out.push_back(pick_fragment(rng));
  g.fragments = std::move(out);
  ga_detail::normalize(g.fragments, max_len);
}

struct GAGenerationStats {
  int generation = 0;
  double best_fitness = 0.0;       // within this generation
  double best_ever_fitness = 0.0;  // non-decreasing across generations
  int elicitation_calls = 0;
  int judge_calls = 0;
};

struct GAResult {
  bool ok = false;
  std::string failure_reason;
  OptimizationVariant variant;  // best-ever
  PromptGenome best_genome;
  std::vector<GAGenerationStats> history;
};

inline std::string render_ga_prompt(const PromptTemplates& templates, const CodeSnippet& snippet,
                                    const PromptGenome& genome,
                                    const std::vector<std::string>& library) {
  std::ostringstream directives;
  for (std::size_t i = 0; i < genome.fragments.size(); ++i)
    directives << (i + 1) << ". " << library.at(genome.fragments[i]) << "\n";
  return render_template(templates.ga_base, {{"language", snippet.language_tag},
                                             {"snippet", snippet.content},
                                             {"directives", directives.str()}});
}

// Vanilla prompt-evolution baseline. Each generation renders every genome to
// a prompt, elicits one code variant per genome, scores fitness as the
// judged pairwise win rate within the generation, then applies tournament
// selection, single-point crossover, and per-fragment mutation. Stops when
// the best-ever fitness has not improved for stall_generations in a row, or
// at max_generations.
inline GAResult optimize_ga(const CodeSnippet& snippet, const Combination& combination,
                            const GAParams& params, const UnitKey& unit,
                            std::uint64_t global_seed, ModelGateway& gateway,
                            PairJudge& judge, const PromptTemplates& templates,
                            const std::vector<std::string>& library) {
  params.validate();
  GAResult result;
  std::mt19937_64 rng(hash_to_u64(std::to_string(global_seed) + "|ga|" + unit.str() + "|" +
                                  std::to_string(params.seed)));
  const int lib_size = static_cast<int>(library.size());

  // Seeded random fragment subsets, round-robin across the proposers.
  std::vector<PromptGenome> population;
  std::uniform_int_distribution<int> pick_fragment(0, lib_size - 1);
  std::uniform_int_distribution<int> pick_len(1, params.max_genome_length);
  for (int i = 0; i < params.population_size; ++i) {
    PromptGenome g;
    g.target_agent = combination.proposers[i % combination.proposers.size()];
    int len = pick_len(rng);
    for (int f = 0; f < len; ++f) g.fragments.push_back(pick_fragment(rng));
    ga_detail::normalize(g.fragments, params.max_genome_length);
    population.push_back(std::move(g));
  }

  struct Scored {
    PromptGenome genome;
    std::optional<OptimizationVariant> variant;  // empty on elicitation failure
    std::vector<std::string> trace_ids;
    double fitness = 0.0;
  };

  double best_ever = -1.0;
  std::optional<OptimizationVariant> best_variant;
  PromptGenome best_genome;
  std::vector<std::string> all_trace_ids;
  CallTotals all_totals;
  int stall = 0;

  for (int generation = 1; generation <= params.max_generations; ++generation) {
    GAGenerationStats stats;
    stats.generation = generation;

    // Elicit one variant per genome.
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < population.size(); ++i) {
      Scored s;
      s.genome = population[i];
      ChatRequest req;
      req.agent_name = s.genome.target_agent;
      req.messages = {{"user", render_ga_prompt(templates, snippet, s.genome, library)}};
      req.request_seed = derive_call_seed(global_seed, unit,
                                          "ga_gen_" + std::to_string(generation),
                                          static_cast<int>(i));
      CallContext ctx{CallRole::ga_generation, generation, unit, "generate"};
      auto call = gateway.complete(req, ctx);
      s.trace_ids.push_back(call.call_id);
      ++stats.elicitation_calls;
      if (call.ok) {
        if (auto code = extract_code_block(call.response.text)) {
          OptimizationVariant v;
          v.snippet_id = snippet.id;
          v.approach = ApproachTag::ga();
          v.combination_id = combination.id;
          v.repetition_index = unit.repetition_index;
          v.content = *code;
          v.id = variant_content_id(v.snippet_id, v.approach.label(), v.combination_id,
                                    v.repetition_index, v.content);
          s.variant = std::move(v);
        }
      }
      scored.push_back(std::move(s));
    }
    for (auto& s : scored) {
      for (auto& id : s.trace_ids) {
        all_trace_ids.push_back(id);
        all_totals.add(gateway.ledger_call(id));
      }
    }
    bool any_alive = std::any_of(scored.begin(), scored.end(),
                                 [](const Scored& s) { return s.variant.has_value(); });
    if (!any_alive) {
      result.failure_reason = "all elicitation calls failed in generation " +
                              std::to_string(generation);
      return result;
    }

    // Fitness: pairwise win rate within the generation, canonical pair order,
    // capped by the per-generation judge budget.
    std::vector<double> score_sum(scored.size(), 0.0);
    std::vector<int> score_count(scored.size(), 0);
    int pairs_used = 0;
    for (std::size_t i = 0; i < scored.size() && pairs_used < params.judge_pairs_per_generation; ++i) {
      if (!scored[i].variant) continue;
      for (std::size_t j = i + 1;
           j < scored.size() && pairs_used < params.judge_pairs_per_generation; ++j) {
        if (!scored[j].variant) continue;
        TournamentEntry a{scored[i].variant->id, "a", scored[i].variant->content};
        TournamentEntry b{scored[j].variant->id, "b", scored[j].variant->content};
        CallContext ctx{CallRole::judge, generation, unit, "generate"};
        auto outcome = judge.judge_pair(
            snippet.content, a, b, ctx,
            derive_call_seed(global_seed, unit, "ga_fit_" + std::to_string(generation),
                             static_cast<int>(i * scored.size() + j)));
        stats.judge_calls += static_cast<int>(outcome.call_ids.size());
        for (auto& id : outcome.call_ids) {
          all_trace_ids.push_back(id);
          all_totals.add(gateway.ledger_call(id));
        }
        ++pairs_used;
        if (outcome.score_a) {
          score_sum[i] += *outcome.score_a;
          score_sum[j] += 1.0 - *outcome.score_a;
          ++score_count[i];
          ++score_count[j];
        }
      }
    }
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (!scored[i].variant) {
        scored[i].fitness = 0.0;
      } else {
        scored[i].fitness = score_count[i] > 0 ? score_sum[i] / score_count[i] : 0.5;
      }
    }

    // Track best-ever (ties keep the earlier winner).
    double gen_best = -1.0;
    std::size_t gen_best_idx = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (scored[i].variant && scored[i].fitness > gen_best) {
        gen_best = scored[i].fitness;
        gen_best_idx = i;
      }
    }
    stats.best_fitness = gen_best;
    bool improved = gen_best > best_ever;
    if (improved) {
      best_ever = gen_best;
      best_variant = scored[gen_best_idx].variant;
      best_genome = scored[gen_best_idx].genome;
    }
    stats.best_ever_fitness = best_ever;
    result.history.push_back(stats);

    // Adaptive termination: first generation always continues.
    if (generation > 1) {
      stall = improved ? 0 : stall + 1;
      if (stall >= params.stall_generations) break;
    }
    if (generation == params.max_generations) break;

    // Next generation: tournament selection, crossover, mutation.
    auto select = [&]() -> const Scored& {
      std::uniform_int_distribution<std::size_t> pick(0, scored.size() - 1);
      const Scored* best = &scored[pick(rng)];
      for (int t = 1; t < params.tournament_size; ++t) {
        const Scored& challenger = scored[pick(rng)];
        if (challenger.fitness > best->fitness) best = &challenger;
      }
      return *best;
    };
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<PromptGenome> next;
    while (static_cast<int>(next.size()) < params.population_size) {
      PromptGenome p1 = select().genome;
      PromptGenome p2 = select().genome;
      if (coin(rng) < params.crossover_rate) {
        auto [c1, c2] = crossover(p1, p2, rng(), params.max_genome_length);
        p1 = std::move(c1);
        p2 = std::move(c2);
      }
      mutate(p1, lib_size, params.mutation_rate, params.max_genome_length, rng);
      mutate(p2, lib_size, params.mutation_rate, params.max_genome_length, rng);
      next.push_back(std::move(p1));
      if (static_cast<int>(next.size()) < params.population_size)
        next.push_back(std::move(p2));
    }
    population = std::move(next);
  }

  result.variant = *best_variant;
  result.variant.trace = all_trace_ids;
  result.variant.totals = all_totals;
  result.best_genome = best_genome;
  result.ok = true;
  return result;
}

}  // namespace optarena
