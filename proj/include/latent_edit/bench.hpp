// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "latent_edit/embedding_store.hpp"
#include "latent_edit/svm.hpp"

namespace latent_edit {

/// Unit-norm Gaussian rows with ids "row_000000", ...
CorpusIndex make_random_corpus(std::size_t rows, std::size_t dim, std::uint64_t seed);

/// Unit-norm Gaussian query vectors.
std::vector<EmbeddingVector> make_random_queries(std::size_t count, std::size_t dim, std::uint64_t seed);

struct BenchOptions {
  std::size_t k = 100;
  std::size_t trials = 50;
  std::size_t warmup = 3;
  std::uint64_t seed = 1;
  SvmOptions svm;
};

struct BenchReport {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  std::vector<double> samples_ms;  // one per trial, in run order
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  double min_ms = 0.0;
  std::size_t unconverged = 0;

  std::string to_text() const;
};

/// Times retrieval of the top and bottom k plus SVM training on them, one
/// fresh query per trial.
BenchReport run_bench(const CorpusIndex& corpus, const BenchOptions& options = {});

/// Nearest-rank percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> samples, double q);

}  // namespace latent_edit
