// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latent_edit/backend.hpp"
#include "latent_edit/embedding_store.hpp"
#include "latent_edit/svm.hpp"

namespace latent_edit {

enum class DirectionMethod { SvmNormal, NeutralDiff };

std::string_view method_name(DirectionMethod method) noexcept;
// Accepts "svm" / "svm_normal" and "baseline" / "neutral_diff".
DirectionMethod parse_method(std::string_view text);

/// Unit-norm edit direction in embedding space plus where it came from.
struct EditTextDirection {
  EmbeddingVector delta_t;
  DirectionMethod method = DirectionMethod::SvmNormal;
  std::string instruction;
  // SvmNormal provenance.
  std::vector<ScoredId> positives;
  std::vector<ScoredId> negatives;
  std::optional<Hyperplane> hyperplane;
  // NeutralDiff provenance.
  std::string neutral;
  std::string prompt_bank_hash;
};

/// Prompt prefixes averaged over by the neutral-text baseline.
class PromptBank {
 public:
  explicit PromptBank(std::vector<std::string> prompts);

  /// One prompt per line; trailing whitespace is trimmed, blank lines skipped.
  static PromptBank load(const std::filesystem::path& path);
  /// The 80-prompt bank shipped in data/prompts_80.txt.
  static const PromptBank& reference();

  const std::vector<std::string>& prompts() const noexcept { return prompts_; }
  std::size_t size() const noexcept { return prompts_.size(); }
  const std::string& hash() const noexcept { return hash_; }

  /// "<prompt> <text>"
  static std::string compose(const std::string& prompt, const std::string& text);

 private:
  std::vector<std::string> prompts_;
  std::string hash_;
};

/// Positives = k most similar corpus rows, negatives = k least similar.
/// Requires 2k <= N so the two tails cannot overlap.
LabeledEmbeddingSet retrieve_training_set(const CorpusIndex& corpus, std::span<const float> query,
                                          std::size_t k, RetrievalPair* provenance = nullptr);

/// SVM normal direction for an already-embedded instruction.
EditTextDirection svm_direction_for_query(const CorpusIndex& corpus, std::span<const float> query,
                                          std::size_t k = 100, const SvmOptions& options = {});

/// Embeds the instruction, retrieves both tails, trains the SVM and returns
/// w / |w|.
EditTextDirection svm_direction(const CorpusIndex& corpus, const std::string& instruction,
                                Backend& text_embedder, std::size_t k = 100,
                                const SvmOptions& options = {});

/// Average over prompts of embed("<p> <t>") - embed("<p> <t0>"), normalized.
/// Throws ZeroDirection when the average vanishes.
EditTextDirection neutral_diff_direction(const std::string& text, const std::string& neutral,
                                         const PromptBank& prompts, Backend& text_embedder);

}  // namespace latent_edit
