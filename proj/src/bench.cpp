// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "latent_edit/direction.hpp"
#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

void fill_unit_gaussian(std::span<float> out, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(out.size());
  double ss = 0.0;
  do {
    ss = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      ss += x * x;
    }
  } while (ss == 0.0);
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
}

}  // namespace

CorpusIndex make_random_corpus(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  if (rows == 0 || dim == 0) throw Error(ErrorCode::InvalidArgument, "corpus must be non-empty");
  std::mt19937_64 rng(seed);
  EmbeddingMatrix m(rows, dim);
  std::vector<std::string> ids;
  ids.reserve(rows);
  char buf[32];
  for (std::size_t i = 0; i < rows; ++i) {
    fill_unit_gaussian(m.row(i), rng);
    std::snprintf(buf, sizeof buf, "row_%06zu", i);
    ids.emplace_back(buf);
  }
  CorpusMetadata meta;
  meta.backend = "random";
  return CorpusIndex::from_rows(std::move(m), std::move(ids), std::move(meta));
}

std::vector<EmbeddingVector> make_random_queries(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<EmbeddingVector> out(count, EmbeddingVector(dim));
  for (auto& q : out) fill_unit_gaussian(q, rng);
  return out;
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double rank = std::ceil(q * static_cast<double>(samples.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(samples.size())));
  return samples[idx - 1];
}

BenchReport run_bench(const CorpusIndex& corpus, const BenchOptions& options) {
  if (options.trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
  const auto queries = make_random_queries(options.warmup + options.trials, corpus.dim(), options.seed);

  BenchReport report;
  report.rows = corpus.size();
  report.dim = corpus.dim();
  report.k = options.k;
  report.trials = options.trials;
  for (std::size_t t = 0; t < queries.size(); ++t) {
    const auto start = std::chrono::steady_clock::now();
    const EditTextDirection dir = svm_direction_for_query(corpus, queries[t], options.k, options.svm);
    const auto stop = std::chrono::steady_clock::now();
    if (t < options.warmup) continue;
    report.samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    if (!dir.hyperplane->converged) ++report.unconverged;
  }
  report.p50_ms = percentile(report.samples_ms, 0.50);
  report.p95_ms = percentile(report.samples_ms, 0.95);
  report.max_ms = *std::max_element(report.samples_ms.begin(), report.samples_ms.end());
  report.min_ms = *std::min_element(report.samples_ms.begin(), report.samples_ms.end());
  return report;
}

std::string BenchReport::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "corpus      %zu x %zu\n"
                "k           %zu (top) + %zu (bottom)\n"
                "trials      %zu\n"
                "p50_ms      %.3f\n"
                "p95_ms      %.3f\n"
                "max_ms      %.3f\n"
                "min_ms      %.3f\n"
                "unconverged %zu\n",
                rows, dim, k, k, trials, p50_ms, p95_ms, max_ms, min_ms, unconverged);
  return buf;
}

}  // namespace latent_edit
