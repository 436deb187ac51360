// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/direction.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

// Generated from data/prompts_80.txt.
constexpr const char* kReferencePrompts =
#include "prompts_80.inc"
    ;

std::vector<std::string> split_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

EmbeddingVector unit_or_throw(const std::vector<double>& v, ErrorCode code, const char* what) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw Error(code, what);
  const double inv = 1.0 / std::sqrt(n2);
  EmbeddingVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

}  // namespace

std::string_view method_name(DirectionMethod method) noexcept {
  return method == DirectionMethod::SvmNormal ? "svm" : "baseline";
}

DirectionMethod parse_method(std::string_view text) {
  if (text == "svm" || text == "svm_normal" || text == "feu") return DirectionMethod::SvmNormal;
  if (text == "baseline" || text == "neutral_diff") return DirectionMethod::NeutralDiff;
  throw Error(ErrorCode::Usage, "unknown method '" + std::string(text) + "' (svm|baseline)");
}

PromptBank::PromptBank(std::vector<std::string> prompts) : prompts_(std::move(prompts)) {
  if (prompts_.empty()) throw Error(ErrorCode::InvalidArgument, "prompt bank is empty");
  std::unordered_set<std::string_view> seen;
  Fingerprinter fp;
  for (const auto& p : prompts_) {
    if (!seen.insert(p).second) throw Error(ErrorCode::InvalidArgument, "duplicate prompt '" + p + "'");
    fp.update(p);
  }
  hash_ = fp.hex();
}

PromptBank PromptBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open prompt bank " + path.string());
  return PromptBank(split_lines(in));
}

const PromptBank& PromptBank::reference() {
  static const PromptBank bank = [] {
    std::istringstream in(kReferencePrompts);
    return PromptBank(split_lines(in));
  }();
  return bank;
}

std::string PromptBank::compose(const std::string& prompt, const std::string& text) {
  return prompt + " " + text;
}

LabeledEmbeddingSet retrieve_training_set(const CorpusIndex& corpus, std::span<const float> query,
                                          std::size_t k, RetrievalPair* provenance) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (2 * k > corpus.size()) {
    throw Error(ErrorCode::OverlappingSets,
                "2k = " + std::to_string(2 * k) + " exceeds corpus size " +
                    std::to_string(corpus.size()) + "; positive and negative sets would overlap");
  }
  RetrievalPair pair = corpus.retrieve_extremes(query, k);
  LabeledEmbeddingSet set;
  for (const auto& s : pair.most_similar) {
    set.positives.append_row(corpus.row(s.row));
    set.positive_ids.push_back(s.id);
  }
  for (const auto& s : pair.least_similar) {
    set.negatives.append_row(corpus.row(s.row));
    set.negative_ids.push_back(s.id);
  }
  if (provenance != nullptr) *provenance = std::move(pair);
  return set;
}

EditTextDirection svm_direction_for_query(const CorpusIndex& corpus, std::span<const float> query,
                                          std::size_t k, const SvmOptions& options) {
  RetrievalPair pair;
  const LabeledEmbeddingSet set = retrieve_training_set(corpus, query, k, &pair);
  Hyperplane plane = train_svm(set, options);

  EditTextDirection dir;
  dir.method = DirectionMethod::SvmNormal;
  dir.delta_t = unit_or_throw(plane.w, ErrorCode::DegenerateData, "SVM normal vector is zero");
  dir.positives = std::move(pair.most_similar);
  dir.negatives = std::move(pair.least_similar);
  dir.hyperplane = std::move(plane);
  return dir;
}

EditTextDirection svm_direction(const CorpusIndex& corpus, const std::string& instruction,
                                Backend& text_embedder, std::size_t k, const SvmOptions& options) {
  if (instruction.empty()) throw Error(ErrorCode::InvalidArgument, "instruction text is empty");
  const EmbeddingVector query = text_embedder.embed_text(instruction);
  if (query.size() != corpus.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "text embedding has dimension " + std::to_string(query.size()) +
                    ", corpus has " + std::to_string(corpus.dim()));
  }
  EditTextDirection dir = svm_direction_for_query(corpus, query, k, options);
  dir.instruction = instruction;
  return dir;
}

EditTextDirection neutral_diff_direction(const std::string& text, const std::string& neutral,
                                         const PromptBank& prompts, Backend& text_embedder) {
  if (text.empty() || neutral.empty()) {
    throw Error(ErrorCode::InvalidArgument, "baseline needs both instruction and neutral text");
  }
  std::vector<std::string> batch;
  batch.reserve(2 * prompts.size());
  for (const auto& p : prompts.prompts()) {
    batch.push_back(PromptBank::compose(p, text));
    batch.push_back(PromptBank::compose(p, neutral));
  }
  const auto emb = text_embedder.embed_text(std::span<const std::string>(batch));
  if (emb.size() != batch.size()) throw Error(ErrorCode::BackendFailure, "embed_text count mismatch");
  const std::size_t d = emb.front().size();
  std::vector<double> avg(d, 0.0);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& a = emb[2 * i];
    const auto& b = emb[2 * i + 1];
    if (a.size() != d || b.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "text embeddings differ in dimension");
    }
    for (std::size_t j = 0; j < d; ++j) avg[j] += static_cast<double>(a[j]) - static_cast<double>(b[j]);
  }
  for (auto& v : avg) v /= static_cast<double>(prompts.size());

  EditTextDirection dir;
  dir.method = DirectionMethod::NeutralDiff;
  dir.delta_t = unit_or_throw(avg, ErrorCode::ZeroDirection,
                              "instruction and neutral text embed identically under every prompt");
  dir.instruction = text;
  dir.neutral = neutral;
  dir.prompt_bank_hash = prompts.hash();
  return dir;
}

}  // namespace latent_edit
