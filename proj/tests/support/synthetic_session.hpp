// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latent_edit/channel_directions.hpp"
#include "latent_edit/embedding_store.hpp"
#include "latent_edit/synthetic_backend.hpp"

namespace latent_edit::testing {

/// Corpus of generated images, their styles and channel directions, all
/// produced by one synthetic backend.
struct SyntheticWorld {
  std::shared_ptr<SyntheticBackend> backend;
  std::vector<StyleVector> corpus_styles;
  std::vector<Bytes> corpus_images;
  std::shared_ptr<const CorpusIndex> corpus;
  std::shared_ptr<const ChannelDirectionMatrix> channels;
};

inline SyntheticWorld make_world(std::size_t corpus_size = 400, SyntheticBackendConfig cfg = {},
                                 std::uint64_t seed = 1) {
  SyntheticWorld w;
  w.backend = std::make_shared<SyntheticBackend>(std::move(cfg));
  w.corpus_styles = w.backend->sample_styles(corpus_size, seed);
  w.corpus_images = w.backend->generate(w.corpus_styles);
  const auto emb = w.backend->embed_image(w.corpus_images);
  EmbeddingMatrix rows;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    rows.append_row(emb[i]);
    ids.push_back("img_" + std::to_string(i));
  }
  CorpusMetadata meta;
  meta.backend = w.backend->describe().fingerprint;
  w.corpus = std::make_shared<const CorpusIndex>(CorpusIndex::from_rows(std::move(rows), std::move(ids), meta));
  const auto samples = w.backend->sample_styles(100, seed + 1000);
  w.channels = std::make_shared<const ChannelDirectionMatrix>(
      compute_channel_directions(*w.backend, samples, compute_style_statistics(samples)));
  return w;
}

}  // namespace latent_edit::testing
