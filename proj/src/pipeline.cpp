// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "latent_edit/error.hpp"

namespace latent_edit {

void validate(const DirectionRequest& request) {
  if (request.instruction.empty()) throw Error(ErrorCode::Usage, "instruction text is empty");
  if (request.method == DirectionMethod::NeutralDiff && request.neutral.empty()) {
    throw Error(ErrorCode::Usage, "method baseline requires a neutral text");
  }
  if (request.method == DirectionMethod::SvmNormal && !request.neutral.empty()) {
    throw Error(ErrorCode::Usage, "method svm does not take a neutral text");
  }
  if (request.k == 0) throw Error(ErrorCode::Usage, "k must be positive");
}

DirectionBundle compute_direction(const DirectionRequest& request, const CorpusIndex* corpus,
                                  Backend& backend, const PromptBank& prompts) {
  validate(request);
  const BackendDescriptor desc = backend.describe();
  desc.require(Capability::EmbedText);

  DirectionBundle out;
  const EmbeddingVector query = backend.embed_text(request.instruction);
  if (request.method == DirectionMethod::SvmNormal) {
    if (corpus == nullptr) throw Error(ErrorCode::Usage, "method svm needs a corpus index");
    if (query.size() != corpus->dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "text embedding has dimension " + std::to_string(query.size()) +
                      ", corpus has " + std::to_string(corpus->dim()));
    }
    out.direction = svm_direction_for_query(*corpus, query, request.k);
    out.direction.instruction = request.instruction;
  } else {
    out.direction = neutral_diff_direction(request.instruction, request.neutral, prompts, backend);
  }
  if (desc.has(Capability::EmbedImage)) out.instruction_embedding = query;
  return out;
}

StyleVector resolve_source(const EditSource& source, Backend& backend) {
  if (source.image.has_value() == source.style.has_value()) {
    throw Error(ErrorCode::Usage, "give exactly one of an image or a style vector");
  }
  if (source.image) return invert_image(*source.image, backend);
  const BackendDescriptor desc = backend.describe();
  if (source.style->size() != desc.style_dim) {
    throw Error(ErrorCode::DimensionMismatch, "style has " + std::to_string(source.style->size()) +
                                                  " channels, backend expects " +
                                                  std::to_string(desc.style_dim));
  }
  for (float v : source.style->values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "style has a non-finite entry");
  }
  StyleVector style = *source.style;
  if (style.layer_offsets.empty()) style.layer_offsets = desc.layer_offsets;
  return style;
}

void validate_edit_params(double alpha, double beta) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::Usage, "alpha must be finite");
  if (!std::isfinite(beta) || beta < 0.0) throw Error(ErrorCode::Usage, "beta must be finite and >= 0");
}

Json scored_ids_to_json(std::span<const ScoredId> ids, const std::string& thumb_prefix) {
  Json arr = Json::array();
  for (const auto& s : ids) {
    Json item = {{"id", s.id}, {"score", s.score}};
    if (!thumb_prefix.empty()) item["thumb_url"] = thumb_prefix + s.id;
    arr.push_back(std::move(item));
  }
  return arr;
}

Json edit_report(const EditResult& result, double alpha, double beta) {
  const auto& dir = result.text_direction;
  Json report = {
      {"instruction", dir.instruction},
      {"method", std::string(method_name(dir.method))},
      {"alpha", alpha},
      {"beta", beta},
      {"support", result.applied_direction.support},
      {"support_size", result.applied_direction.support.size()},
      {"delta_s", result.applied_direction.delta_s},
      {"edited_style", result.edited_style.values},
      {"objective", result.objective ? Json(*result.objective) : Json(nullptr)},
      {"positives", scored_ids_to_json(dir.positives)},
      {"negatives", scored_ids_to_json(dir.negatives)},
  };
  if (dir.method == DirectionMethod::NeutralDiff) {
    report["neutral"] = dir.neutral;
    report["prompt_bank_hash"] = dir.prompt_bank_hash;
  }
  if (dir.hyperplane) {
    report["svm"] = {{"bias", dir.hyperplane->b},
                     {"objective", dir.hyperplane->objective},
                     {"converged", dir.hyperplane->converged},
                     {"iterations", dir.hyperplane->iterations}};
  }
  return report;
}

Json sweep_to_json(const SweepResult& result) {
  Json points = Json::array();
  for (const auto& p : result.points) {
    points.push_back({{"alpha", p.alpha},
                      {"beta", p.beta},
                      {"objective", p.objective ? Json(*p.objective) : Json(nullptr)},
                      {"error", p.error ? Json(std::string(error_code_name(*p.error))) : Json(nullptr)},
                      {"message", p.message},
                      {"support_size", p.support_size}});
  }
  const auto& best = result.best_point();
  return {{"points", points},
          {"best", {{"alpha", best.alpha}, {"beta", best.beta}, {"objective", *best.objective}}}};
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "alpha,beta,objective,error,support_size,best\n";
  char buf[64];
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", p.alpha, p.beta);
    out << buf;
    if (p.objective) {
      std::snprintf(buf, sizeof buf, "%.17g", *p.objective);
      out << buf;
    }
    out << ',' << (p.error ? error_code_name(*p.error) : "") << ',' << p.support_size << ','
        << (i == result.best ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string sweep_to_text(const SweepResult& result) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s %8s %12s %8s  %s\n", "alpha", "beta", "objective", "support", "status");
  out << buf;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    if (p.objective) {
      std::snprintf(buf, sizeof buf, "%8.3f %8.3f %12.6f %8zu  %s\n", p.alpha, p.beta, *p.objective,
                    p.support_size, i == result.best ? "best" : "ok");
    } else {
      std::snprintf(buf, sizeof buf, "%8.3f %8.3f %12s %8s  %s\n", p.alpha, p.beta, "-", "-",
                    std::string(p.error ? error_code_name(*p.error) : "error").c_str());
    }
    out << buf;
  }
  const auto& best = result.best_point();
  std::snprintf(buf, sizeof buf, "best: alpha=%.3f beta=%.3f objective=%.6f (%zu points)\n", best.alpha,
                best.beta, *best.objective, result.points.size());
  out << buf;
  return out.str();
}

}  // namespace latent_edit
