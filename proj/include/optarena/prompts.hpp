#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "optarena/sha256.hpp"

namespace optarena {

// Candidate text shown to a refiner/aggregator under an anonymous header.
// Headers are "Candidate <n>"; producing model names never appear in prompts.
struct AnonymousCandidate {
  std::string content;
};

// Placeholder syntax: {{snippet}}, {{language}}, {{candidates}},
// {{directives}}, {{candidate_1}}, {{candidate_2}}. Unknown placeholders are
// left verbatim so template typos surface in rendered output.
inline std::string render_template(std::string text,
                                   const std::vector<std::pair<std::string, std::string>>& values) {
  for (const auto& [key, value] : values) {
    const std::string needle = "{{" + key + "}}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return text;
}

struct PromptTemplates {
  std::string proposer;
  std::string refiner;
  std::string synthesis;
  std::string judge;
  std::string ga_base;

  // Hash over all template texts, recorded per run so reports are
  // interpretable against the exact wording used.
  std::string version_hash() const {
    Sha256 h;
    for (const std::string* t : {&proposer, &refiner, &synthesis, &judge, &ga_base}) {
      h.update(std::to_string(t->size()));
      h.update(":");
      h.update(*t);
    }
    return h.hex_digest();
  }

  static PromptTemplates defaults() {
    PromptTemplates t;
    t.proposer =
        "You are an expert performance engineer. Rewrite the following "
        "{{language}} code to run faster and use fewer resources while "
        "preserving its exact observable behavior. Keep the code readable.\n"
        "Return only the optimized code in a single fenced code block.\n\n"
        "Original code:\n```{{language}}\n{{snippet}}\n```\n";
    t.refiner =
        "You are an expert performance engineer. Rewrite the following "
        "{{language}} code to run faster and use fewer resources while "
        "preserving its exact observable behavior. Keep the code readable.\n"
        "Return only the optimized code in a single fenced code block.\n\n"
        "Original code:\n```{{language}}\n{{snippet}}\n```\n\n"
        "Earlier optimization candidates are listed below. Build on their "
        "strengths and avoid their mistakes.\n\n{{candidates}}";
    t.synthesis =
        "You are an expert performance engineer acting as a final reviewer. "
        "Several optimization candidates for the same {{language}} code are "
        "listed below. Synthesize them into a single best version that "
        "combines their most effective ideas, reconciles conflicts, and "
        "preserves the original observable behavior.\n"
        "Return only the final optimized code in a single fenced code block.\n\n"
        "Original code:\n```{{language}}\n{{snippet}}\n```\n\n{{candidates}}";
    t.judge =
        "You are judging two optimized versions of the same original code. "
        "Decide which candidate is the better optimization: prefer correct, "
        "faster, cleaner code.\n\n"
        "Original code:\n```\n{{snippet}}\n```\n\n"
        "Candidate 1:\n```\n{{candidate_1}}\n```\n\n"
        "Candidate 2:\n```\n{{candidate_2}}\n```\n\n"
        "Respond with exactly one character: 1 if Candidate 1 is better, "
        "2 if Candidate 2 is better.\n";
    t.ga_base =
        "You are an expert performance engineer. Rewrite the following "
        "{{language}} code to run faster and use fewer resources while "
        "preserving its exact observable behavior.\n"
        "Apply the following optimization directives:\n{{directives}}\n"
        "Return only the optimized code in a single fenced code block.\n\n"
        "Original code:\n```{{language}}\n{{snippet}}\n```\n";
    return t;
  }
};

// Renders prior candidates under stable anonymous headers, ordered by the
// caller (layer, then agent index). No producing agent is ever named.
inline std::string render_candidate_sections(const std::vector<AnonymousCandidate>& candidates) {
  std::ostringstream out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out << "Candidate " << (i + 1) << ":\n```\n" << candidates[i].content << "\n```\n\n";
  }
  return out.str();
}

// Instruction-fragment library for the GA prompt genome. Repo-owned asset;
// an external file with one fragment per line can replace the defaults.
inline std::vector<std::string> default_fragment_library() {
  return {
      "Vectorize loops where the target language supports it.",
      "Reduce heap allocations inside hot loops.",
      "Hoist loop-invariant computations out of loops.",
      "Replace linear scans with hash-based lookups where applicable.",
      "Avoid repeated recomputation by caching intermediate results.",
      "Prefer in-place updates over building new collections.",
      "Minimize string concatenation in loops; use a builder or join.",
      "Use lazy evaluation or generators to avoid materializing large lists.",
      "Short-circuit early when a result is already determined.",
      "Batch I/O operations instead of issuing them one at a time.",
      "Choose asymptotically better algorithms when input size can be large.",
      "Eliminate redundant branching inside tight loops.",
      "Prefer primitive numeric operations over boxed or dynamic dispatch.",
      "Reuse buffers instead of reallocating them per iteration.",
      "Exploit data locality; iterate memory in contiguous order.",
      "Remove dead code and unused intermediate values.",
      "Use built-in library routines instead of hand-rolled equivalents.",
      "Parallelize independent work when it is safe to do so.",
      "Preserve readability; do not obfuscate the code for minor gains.",
      "Keep the public interface and observable behavior unchanged.",
  };
}

inline std::vector<std::string> load_fragment_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fragment library: " + path);
  std::vector<std::string> fragments;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') fragments.push_back(line);
  }
  if (fragments.empty()) throw std::runtime_error("fragment library is empty: " + path);
  return fragments;
}

}  // namespace optarena
