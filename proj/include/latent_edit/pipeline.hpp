// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "latent_edit/backend.hpp"
#include "latent_edit/channel_directions.hpp"
#include "latent_edit/direction.hpp"
#include "latent_edit/embedding_store.hpp"
#include "latent_edit/style_mapper.hpp"

namespace latent_edit {

/// Everything needed to turn an instruction into a text-space direction.
struct DirectionRequest {
  std::string instruction;
  DirectionMethod method = DirectionMethod::SvmNormal;
  std::string neutral;  // required iff method == NeutralDiff
  std::size_t k = kDefaultRetrievalK;
};

/// Usage errors for the instruction/neutral/k combination.
void validate(const DirectionRequest& request);

/// A direction together with the instruction embedding used to score edits.
struct DirectionBundle {
  EditTextDirection direction;
  std::optional<EmbeddingVector> instruction_embedding;
};

/// Computes the text direction. SvmNormal needs a corpus; NeutralDiff uses
/// the prompt bank. The instruction embedding is kept when the backend can
/// also embed images, so edits can be scored.
DirectionBundle compute_direction(const DirectionRequest& request, const CorpusIndex* corpus,
                                  Backend& backend, const PromptBank& prompts = PromptBank::reference());

/// Exactly one of image / style must be set.
struct EditSource {
  std::optional<Bytes> image;
  std::optional<StyleVector> style;
};

/// Inverts the image or validates the style against the backend.
StyleVector resolve_source(const EditSource& source, Backend& backend);

void validate_edit_params(double alpha, double beta);

/// Plain-data form of an edit for reports and HTTP responses.
Json scored_ids_to_json(std::span<const ScoredId> ids, const std::string& thumb_prefix = {});
Json edit_report(const EditResult& result, double alpha, double beta);
Json sweep_to_json(const SweepResult& result);
std::string sweep_to_csv(const SweepResult& result);
std::string sweep_to_text(const SweepResult& result);

}  // namespace latent_edit
