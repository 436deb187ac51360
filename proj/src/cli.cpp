// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "latent_edit/bench.hpp"
#include "latent_edit/error.hpp"
#include "latent_edit/pipeline.hpp"
#include "latent_edit/service.hpp"
#include "latent_edit/synthetic_backend.hpp"
#include "latent_edit/wire.hpp"

namespace latent_edit {
namespace {

namespace fs = std::filesystem;

constexpr const char* kBackendUrlEnv = "LATENT_EDIT_BACKEND_URL";
constexpr const char* kPortEnv = "LATENT_EDIT_PORT";

struct GlobalOptions {
  std::string backend_url;
  std::optional<std::uint64_t> synthetic_seed;
  std::size_t synthetic_embed_dim = 16;
  std::size_t synthetic_style_dim = 8;
  std::size_t synthetic_channels_per_layer = 4;
  bool synthetic_raw = false;
  std::size_t max_in_flight = 4;
};

std::shared_ptr<Backend> make_backend(const GlobalOptions& g) {
  std::string url = g.backend_url;
  if (!url.empty() && g.synthetic_seed) {
    throw Error(ErrorCode::Usage, "give either --backend-url or --synthetic-seed, not both");
  }
  if (url.empty() && !g.synthetic_seed) {
    if (const char* env = std::getenv(kBackendUrlEnv); env != nullptr) url = env;
  }
  if (url.empty() && !g.synthetic_seed) {
    throw Error(ErrorCode::Usage, std::string("no backend: pass --backend-url, set ") + kBackendUrlEnv +
                                      ", or pass --synthetic-seed");
  }
  std::shared_ptr<Backend> inner;
  if (g.synthetic_seed) {
    SyntheticBackendConfig cfg;
    cfg.seed = *g.synthetic_seed;
    cfg.embed_dim = g.synthetic_embed_dim;
    cfg.style_dim = g.synthetic_style_dim;
    cfg.channels_per_layer = g.synthetic_channels_per_layer;
    cfg.normalize_embeddings = !g.synthetic_raw;
    inner = std::make_shared<SyntheticBackend>(std::move(cfg));
  } else {
    inner = std::make_shared<RemoteBackend>(url);
  }
  return std::make_shared<ThrottledBackend>(std::move(inner),
                                            static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, g.max_in_flight)));
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size()))) {
    throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  }
}

void write_file(const fs::path& path, const Bytes& data) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---------------------------------------------------------------------------
// index build

struct IndexBuildOptions {
  std::string manifest;
  std::string out;
  bool strict = false;
  std::size_t batch = 32;
};

struct ManifestEntry {
  std::string id;
  fs::path path;
};

std::vector<ManifestEntry> read_image_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string first;
    std::string second;
    fields >> first >> second;
    if (first.empty() || first.front() == '#') continue;
    ManifestEntry e;
    if (second.empty()) {
      e.path = first;
      e.id = fs::path(first).stem().string();
    } else {
      e.id = first;
      e.path = second;
    }
    if (e.path.is_relative()) e.path = base / e.path;
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  "duplicate id '" + e.id + "' at " + manifest.string() + ":" + std::to_string(lineno));
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error(ErrorCode::EmptyIndex, "manifest lists no images");
  return entries;
}

int cmd_index_build(const IndexBuildOptions& o, Backend& backend, std::ostream& out, std::ostream& err) {
  const auto entries = read_image_manifest(o.manifest);
  const BackendDescriptor desc = backend.describe();
  desc.require(Capability::EmbedImage);

  EmbeddingFileWriter writer(o.out, static_cast<std::uint32_t>(desc.embed_dim));
  Json image_paths = Json::object();
  Json failures = Json::array();
  bool all_unit = true;

  const auto record_failure = [&](const ManifestEntry& e, const Error& error) {
    if (o.strict) throw error;
    err << "warning: skipping " << e.id << " (" << e.path.string() << "): " << error.what() << '\n';
    failures.push_back({{"id", e.id}, {"path", e.path.string()}, {"error", error_code_name(error.code())}});
  };
  const auto accept = [&](const ManifestEntry& e, const EmbeddingVector& v) {
    if (v.size() != desc.embed_dim) {
      throw Error(ErrorCode::DimensionMismatch, "backend returned an embedding of the wrong size");
    }
    writer.append(e.id, v);
    image_paths[e.id] = fs::absolute(e.path).lexically_normal().string();
    all_unit = all_unit && std::abs(norm_f64(v) - 1.0) <= 1e-5;
  };

  // Images are read one batch at a time so memory stays bounded.
  const std::size_t batch = std::max<std::size_t>(1, o.batch);
  for (std::size_t begin = 0; begin < entries.size(); begin += batch) {
    const std::size_t end = std::min(entries.size(), begin + batch);
    std::vector<const ManifestEntry*> ok;
    std::vector<Bytes> images;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        images.push_back(read_file(entries[i].path));
        ok.push_back(&entries[i]);
      } catch (const Error& e) {
        record_failure(entries[i], e);
      }
    }
    if (images.empty()) continue;
    try {
      const auto embs = backend.embed_image(images);
      for (std::size_t i = 0; i < ok.size(); ++i) accept(*ok[i], embs.at(i));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DecodeError) throw;
      // Isolate the undecodable images.
      for (std::size_t i = 0; i < ok.size(); ++i) {
        try {
          accept(*ok[i], backend.embed_image(std::span<const Bytes>(&images[i], 1)).at(0));
        } catch (const Error& single) {
          if (single.code() != ErrorCode::DecodeError) throw;
          record_failure(*ok[i], single);
        }
      }
    }
  }
  if (writer.rows() == 0) throw Error(ErrorCode::EmptyIndex, "no image could be embedded");
  const std::size_t rows = writer.rows();
  writer.finish({{"kind", "corpus"},
                 {"backend", desc.fingerprint},
                 {"source_manifest", fs::absolute(o.manifest).lexically_normal().string()},
                 {"unit_normalized", all_unit},
                 {"image_paths", image_paths},
                 {"failures", failures}});
  out << "indexed " << rows << " of " << entries.size() << " images (" << failures.size()
      << " failed) -> " << o.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// synth-corpus

struct SynthCorpusOptions {
  std::string out;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::string images_dir;
  std::size_t batch = 64;
};

int cmd_synth_corpus(const SynthCorpusOptions& o, Backend& backend, std::ostream& out) {
  if (o.count == 0) throw Error(ErrorCode::Usage, "--count must be positive");
  const BackendDescriptor desc = backend.describe();
  desc.require(Capability::Generate);
  desc.require(Capability::EmbedImage);
  const auto styles = backend.sample_styles(o.count, o.seed);

  EmbeddingFileWriter writer(o.out, static_cast<std::uint32_t>(desc.embed_dim));
  Json image_paths = Json::object();
  bool all_unit = true;
  char id[32];
  const std::size_t batch = std::max<std::size_t>(1, o.batch);
  for (std::size_t begin = 0; begin < styles.size(); begin += batch) {
    const auto part = std::span(styles).subspan(begin, std::min(batch, styles.size() - begin));
    const auto images = backend.generate(part);
    const auto embs = backend.embed_image(images);
    for (std::size_t i = 0; i < part.size(); ++i) {
      std::snprintf(id, sizeof id, "img_%06zu", begin + i);
      writer.append(id, embs.at(i));
      all_unit = all_unit && std::abs(norm_f64(embs[i]) - 1.0) <= 1e-5;
      if (!o.images_dir.empty()) {
        const fs::path p = fs::path(o.images_dir) / (std::string(id) + ".png");
        write_file(p, images[i]);
        image_paths[id] = fs::absolute(p).lexically_normal().string();
      }
    }
  }
  writer.finish({{"kind", "corpus"},
                 {"backend", desc.fingerprint},
                 {"source_manifest", "synthetic:seed=" + std::to_string(o.seed)},
                 {"unit_normalized", all_unit},
                 {"image_paths", image_paths}});
  out << "wrote " << o.count << " synthetic corpus rows -> " << o.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// sample-styles / directions precompute

struct SampleStylesOptions {
  std::string out;
  std::size_t count = 100;
  std::uint64_t seed = 0;
};

int cmd_sample_styles(const SampleStylesOptions& o, Backend& backend, std::ostream& out) {
  if (o.count == 0) throw Error(ErrorCode::Usage, "--count must be positive");
  const auto styles = backend.sample_styles(o.count, o.seed);
  save_styles(styles, o.out, backend.describe().fingerprint);
  out << "wrote " << styles.size() << " style vectors -> " << o.out << '\n';
  return 0;
}

struct PrecomputeOptions {
  std::string out;
  std::string styles;
  std::string invert_manifest;
  std::size_t samples = 100;
  double multiplier = 5.0;
  std::uint64_t seed = 0;
  std::string checkpoint;
  bool no_normalize = false;
  bool keep_checkpoint = false;
};

int cmd_directions_precompute(const PrecomputeOptions& o, const GlobalOptions& g, Backend& backend,
                              std::ostream& out, std::ostream& err) {
  if (o.samples < 2) throw Error(ErrorCode::Usage, "--samples must be at least 2");
  if (!(o.multiplier > 0.0)) throw Error(ErrorCode::Usage, "--multiplier must be positive");
  std::vector<StyleVector> styles;
  if (!o.invert_manifest.empty()) {
    // Real-image statistics: invert the first `samples` manifest images.
    backend.describe().require(Capability::Invert);
    auto entries = read_image_manifest(o.invert_manifest);
    if (entries.size() > o.samples) entries.resize(o.samples);
    constexpr std::size_t kInvertBatch = 16;
    for (std::size_t begin = 0; begin < entries.size(); begin += kInvertBatch) {
      std::vector<Bytes> images;
      for (std::size_t i = begin; i < std::min(entries.size(), begin + kInvertBatch); ++i) {
        images.push_back(read_file(entries[i].path));
      }
      auto part = backend.invert(images);
      if (part.size() != images.size()) throw Error(ErrorCode::BackendFailure, "invert count mismatch");
      std::move(part.begin(), part.end(), std::back_inserter(styles));
    }
  } else if (o.styles.empty()) {
    styles = backend.sample_styles(o.samples, o.seed);
  } else {
    styles = load_styles(o.styles);
    if (styles.size() > o.samples) styles.resize(o.samples);
  }
  const StyleStatistics stats = compute_style_statistics(styles, o.seed);

  ChannelDirectionOptions opts;
  opts.multiplier = o.multiplier;
  opts.normalize_embeddings = !o.no_normalize;
  opts.max_in_flight = std::max<std::size_t>(1, g.max_in_flight);
  opts.checkpoint = o.checkpoint.empty() ? fs::path(o.out + ".ckpt") : fs::path(o.checkpoint);
  std::size_t last_decile = 0;
  opts.progress = [&err, &last_decile](std::size_t done, std::size_t total) {
    const std::size_t decile = total == 0 ? 10 : done * 10 / total;
    if (decile > last_decile) {
      last_decile = decile;
      err << "channels " << done << "/" << total << '\n';
    }
  };
  const auto start = std::chrono::steady_clock::now();
  const ChannelDirectionMatrix m = compute_channel_directions(backend, styles, stats, opts);
  save_channel_directions(m, o.out);
  if (!o.keep_checkpoint) fs::remove(opts.checkpoint);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "channels    " << m.channels() << " (" << m.degenerate_channels.size() << " degenerate)\n"
      << "dim         " << m.dim() << '\n'
      << "samples     " << m.sample_count << '\n'
      << "multiplier  " << m.sigma_multiplier << '\n'
      << "seconds     " << fmt("%.3f", secs) << '\n'
      << "wrote       " << o.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// edit / retrieve / sweep

struct SourceOptions {
  std::string image;
  std::string style;
  std::size_t style_row = 0;
};

EditSource load_source(const SourceOptions& s) {
  if (s.image.empty() == s.style.empty()) throw Error(ErrorCode::Usage, "give exactly one of --image or --style");
  EditSource src;
  if (!s.image.empty()) {
    src.image = read_file(s.image);
  } else {
    auto styles = load_styles(s.style);
    if (s.style_row >= styles.size()) {
      throw Error(ErrorCode::Usage, "--style-row " + std::to_string(s.style_row) + " out of range");
    }
    src.style = std::move(styles[s.style_row]);
  }
  return src;
}

struct DirectionOptions {
  std::string text;
  std::string neutral;
  std::string method = "svm";
  std::size_t k = kDefaultRetrievalK;
  std::string corpus;
  std::string directions;
  bool strict_fingerprint = false;
};

DirectionRequest direction_request(const DirectionOptions& d) {
  DirectionRequest req{d.text, parse_method(d.method), d.neutral, d.k};
  validate(req);
  return req;
}

std::shared_ptr<const CorpusIndex> load_corpus_for(const DirectionRequest& req, const std::string& path) {
  if (req.method != DirectionMethod::SvmNormal) return nullptr;
  if (path.empty()) throw Error(ErrorCode::Usage, "method svm needs --corpus");
  return std::make_shared<const CorpusIndex>(CorpusIndex::load(path));
}

ChannelDirectionMatrix load_checked_directions(const std::string& path, Backend& backend, bool strict,
                                               std::ostream& err) {
  if (path.empty()) throw Error(ErrorCode::Usage, "--directions is required");
  ChannelDirectionMatrix m = load_channel_directions(path);
  if (!check_backend_fingerprint(m, backend.describe(), strict)) {
    err << "warning: channel directions were computed with backend " << m.backend_fingerprint
        << ", current backend is " << backend.describe().fingerprint << '\n';
  }
  return m;
}

struct EditOptions {
  SourceOptions source;
  DirectionOptions direction;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  std::string out_dir = ".";
  std::string prefix = "edited";
};

void print_ids(std::ostream& out, const char* label, const std::vector<ScoredId>& ids, std::size_t show) {
  out << label;
  for (std::size_t i = 0; i < std::min(show, ids.size()); ++i) out << ' ' << ids[i].id;
  if (ids.size() > show) out << " ... (" << ids.size() << " total)";
  out << '\n';
}

int cmd_edit(const EditOptions& o, Backend& backend, std::ostream& out, std::ostream& err) {
  const DirectionRequest req = direction_request(o.direction);
  validate_edit_params(o.alpha, o.beta);
  const EditSource src = load_source(o.source);
  const ChannelDirectionMatrix channels =
      load_checked_directions(o.direction.directions, backend, o.direction.strict_fingerprint, err);
  const auto corpus = load_corpus_for(req, o.direction.corpus);

  const StyleVector source = resolve_source(src, backend);
  const DirectionBundle bundle = compute_direction(req, corpus.get(), backend);
  const StyleEditDirection mapped = map_direction(channels, bundle.direction.delta_t, o.beta);
  const EditResult result =
      apply_edit(source, mapped, bundle.direction, o.alpha, backend, bundle.instruction_embedding);

  const fs::path dir(o.out_dir);
  const fs::path png = dir / (o.prefix + ".png");
  const fs::path report_path = dir / (o.prefix + "_report.json");
  write_file(png, result.edited_image);
  Json report = edit_report(result, o.alpha, o.beta);
  report["k"] = req.k;
  report["backend"] = backend.describe().fingerprint;
  report["channel_directions"] = channels.fingerprint();
  if (corpus) report["corpus"] = corpus->fingerprint();
  write_file(report_path, report.dump(2) + "\n");

  out << "instruction " << req.instruction << '\n' << "method      " << method_name(req.method);
  if (req.method == DirectionMethod::SvmNormal) out << " (k=" << req.k << ")";
  else out << " (neutral: " << req.neutral << ")";
  out << '\n'
      << "alpha       " << o.alpha << '\n'
      << "beta        " << o.beta << '\n'
      << "support     " << mapped.support.size() << " of " << channels.channels() << " channels\n"
      << "objective   " << (result.objective ? fmt("%.6f", *result.objective) : std::string("n/a")) << '\n';
  if (req.method == DirectionMethod::SvmNormal) {
    print_ids(out, "positives  ", bundle.direction.positives, 16);
    print_ids(out, "negatives  ", bundle.direction.negatives, 16);
  }
  out << "wrote       " << png.string() << ", " << report_path.string() << '\n';
  return 0;
}

struct RetrieveOptions {
  std::string text;
  std::size_t k = kDefaultRetrievalK;
  std::size_t show = 16;
  std::string corpus;
  bool json = false;
};

int cmd_retrieve(const RetrieveOptions& o, Backend& backend, std::ostream& out) {
  if (o.text.empty()) throw Error(ErrorCode::Usage, "--text is empty");
  if (o.k == 0) throw Error(ErrorCode::Usage, "--k must be positive");
  if (o.show > o.k) throw Error(ErrorCode::Usage, "--show cannot exceed --k");
  if (o.corpus.empty()) throw Error(ErrorCode::Usage, "--corpus is required");
  const CorpusIndex corpus = CorpusIndex::load(o.corpus);
  if (o.k > corpus.size()) {
    throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(o.k) + " exceeds corpus size " +
                                          std::to_string(corpus.size()));
  }
  backend.describe().require(Capability::EmbedText);
  const EmbeddingVector query = backend.embed_text(o.text);
  if (query.size() != corpus.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "text embedding dimension differs from the corpus");
  }
  const RetrievalPair pair = corpus.retrieve_extremes(query, o.k);
  const auto pos = std::span(pair.most_similar).first(o.show);
  const auto neg = std::span(pair.least_similar).first(o.show);
  if (o.json) {
    out << Json{{"text", o.text}, {"k", o.k}, {"positives", scored_ids_to_json(pos)},
                {"negatives", scored_ids_to_json(neg)}}
               .dump(2)
        << '\n';
    return 0;
  }
  out << "top " << o.show << " of " << o.k << " positives for \"" << o.text << "\"\n";
  for (const auto& s : pos) out << "  " << s.id << ' ' << fmt("%.6f", s.score) << '\n';
  out << "top " << o.show << " of " << o.k << " negatives\n";
  for (const auto& s : neg) out << "  " << s.id << ' ' << fmt("%.6f", s.score) << '\n';
  return 0;
}

struct SweepOptions {
  SourceOptions source;
  DirectionOptions direction;
  std::string alpha_range = "2.0:6.0:0.5";
  std::string beta_range = "0.1:0.2:0.05";
  std::string csv;
  std::string json;
};

int cmd_sweep(const SweepOptions& o, const GlobalOptions& g, Backend& backend, std::ostream& out,
              std::ostream& err) {
  const GridRange alphas = GridRange::parse(o.alpha_range);
  const GridRange betas = GridRange::parse(o.beta_range);
  const DirectionRequest req = direction_request(o.direction);
  const EditSource src = load_source(o.source);
  const ChannelDirectionMatrix channels =
      load_checked_directions(o.direction.directions, backend, o.direction.strict_fingerprint, err);
  const auto corpus = load_corpus_for(req, o.direction.corpus);

  const StyleVector source = resolve_source(src, backend);
  const DirectionBundle bundle = compute_direction(req, corpus.get(), backend);
  if (!bundle.instruction_embedding) {
    throw Error(ErrorCode::CapabilityMissing, "sweep needs a backend that embeds text and images");
  }
  const SweepResult result = sweep(channels, bundle.direction, source, *bundle.instruction_embedding,
                                   alphas, betas, backend, std::max<std::size_t>(1, g.max_in_flight));
  out << sweep_to_text(result);
  if (!o.csv.empty()) write_file(o.csv, sweep_to_csv(result));
  if (!o.json.empty()) write_file(o.json, sweep_to_json(result).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// bench / serve

struct BenchCliOptions {
  std::string corpus;
  std::size_t rows = 70000;
  std::size_t dim = 512;
  std::size_t trials = 50;
  std::size_t k = kDefaultRetrievalK;
  std::uint64_t seed = 1;
  std::string json;
};

int cmd_bench(const BenchCliOptions& o, std::ostream& out) {
  if (o.trials == 0) throw Error(ErrorCode::Usage, "--trials must be positive");
  const CorpusIndex corpus =
      o.corpus.empty() ? make_random_corpus(o.rows, o.dim, o.seed) : CorpusIndex::load(o.corpus);
  if (2 * o.k > corpus.size()) {
    throw Error(ErrorCode::KTooLarge, "2k = " + std::to_string(2 * o.k) + " exceeds corpus size " +
                                          std::to_string(corpus.size()));
  }
  BenchOptions opts;
  opts.k = o.k;
  opts.trials = o.trials;
  opts.seed = o.seed;
  const BenchReport r = run_bench(corpus, opts);
  out << "retrieval (top + bottom k) + SVM training, wall time per query\n" << r.to_text();
  if (!o.json.empty()) {
    write_file(o.json, Json{{"rows", r.rows},
                            {"dim", r.dim},
                            {"k", r.k},
                            {"trials", r.trials},
                            {"p50_ms", r.p50_ms},
                            {"p95_ms", r.p95_ms},
                            {"max_ms", r.max_ms},
                            {"min_ms", r.min_ms},
                            {"samples_ms", r.samples_ms}}
                               .dump(2) + "\n");
  }
  return 0;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string corpus;
  std::string directions;
  std::size_t cache = 64;
  std::string cors_origin = "*";
  bool strict_fingerprint = false;
};

int cmd_serve(const ServeOptions& o, const GlobalOptions& g, std::shared_ptr<Backend> backend,
              std::ostream& out, std::ostream& err) {
  SessionState state;
  state.backend = backend;
  if (!o.corpus.empty()) state.corpus = std::make_shared<const CorpusIndex>(CorpusIndex::load(o.corpus));
  if (!o.directions.empty()) {
    state.channels = std::make_shared<const ChannelDirectionMatrix>(
        load_checked_directions(o.directions, *backend, o.strict_fingerprint, err));
  }
  ServiceConfig cfg;
  cfg.cache_capacity = o.cache;
  cfg.cors_origin = o.cors_origin;
  cfg.sweep_in_flight = std::max<std::size_t>(1, g.max_in_flight);
  auto service = std::make_shared<Service>(std::move(state), cfg);
  HttpServer server(service, o.cors_origin);
  out << "serving /api on http://" << o.host << ":" << o.port << std::endl;
  server.listen(o.host, o.port);
  return 0;
}

struct ServeBackendOptions {
  std::string host = "127.0.0.1";
  int port = 8090;
};

int cmd_serve_backend(const ServeBackendOptions& o, std::shared_ptr<Backend> backend, std::ostream& out) {
  BackendServer server(std::move(backend));
  out << "serving /v1 on http://" << o.host << ":" << o.port << std::endl;
  server.listen(o.host, o.port);
  return 0;
}

// ---------------------------------------------------------------------------

void add_source_options(CLI::App* cmd, SourceOptions& s) {
  cmd->add_option("--image", s.image, "Source image (inverted by the backend)");
  cmd->add_option("--style", s.style, "Styles file holding the source style vector");
  cmd->add_option("--style-row", s.style_row, "Row of --style to edit")->capture_default_str();
}

void add_direction_options(CLI::App* cmd, DirectionOptions& d) {
  cmd->add_option("--text", d.text, "Edit instruction")->required();
  cmd->add_option("--neutral", d.neutral, "Neutral text (baseline method only)");
  cmd->add_option("--method", d.method, "svm | baseline")->capture_default_str();
  cmd->add_option("--k", d.k, "Positives and negatives retrieved for the SVM")->capture_default_str();
  cmd->add_option("--corpus", d.corpus, "Corpus embedding file (svm method)");
  cmd->add_option("--directions", d.directions, "Channel direction file")->required();
  cmd->add_flag("--strict-fingerprint", d.strict_fingerprint,
                "Fail when the directions were computed with another backend");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-driven style-space image editing"};
  app.name("latent-edit");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with default option values; flags win");

  GlobalOptions g;
  std::uint64_t seed_value = 0;
  auto* url_opt = app.add_option("--backend-url", g.backend_url,
                                 std::string("Remote backend base URL (default: $") + kBackendUrlEnv + ")");
  auto* seed_opt = app.add_option("--synthetic-seed", seed_value, "Use the in-process synthetic backend");
  url_opt->excludes(seed_opt);
  app.add_option("--synthetic-embed-dim", g.synthetic_embed_dim)->capture_default_str();
  app.add_option("--synthetic-style-dim", g.synthetic_style_dim)->capture_default_str();
  app.add_option("--synthetic-channels-per-layer", g.synthetic_channels_per_layer)->capture_default_str();
  app.add_flag("--synthetic-raw", g.synthetic_raw, "Do not unit-normalize synthetic embeddings");
  app.add_option("--max-in-flight", g.max_in_flight, "Concurrent backend calls")->capture_default_str();

  auto* index = app.add_subcommand("index", "Corpus index operations");
  index->require_subcommand(1);
  IndexBuildOptions ib;
  auto* index_build = index->add_subcommand("build", "Embed the images listed in a manifest");
  index_build->add_option("--manifest", ib.manifest, "Lines of '<path>' or '<id> <path>'")->required();
  index_build->add_option("--out", ib.out, "Output embedding file")->required();
  index_build->add_flag("--strict", ib.strict, "Abort on the first unreadable image");
  index_build->add_option("--batch", ib.batch)->capture_default_str();

  SynthCorpusOptions sc;
  auto* synth = app.add_subcommand("synth-corpus", "Build a corpus from images sampled from the generator");
  synth->add_option("--out", sc.out)->required();
  synth->add_option("--count", sc.count)->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();
  synth->add_option("--images-dir", sc.images_dir, "Also write the generated PNGs here");
  synth->add_option("--batch", sc.batch)->capture_default_str();

  SampleStylesOptions ss;
  auto* sample = app.add_subcommand("sample-styles", "Sample style vectors from the generator prior");
  sample->add_option("--out", ss.out)->required();
  sample->add_option("--count", ss.count)->capture_default_str();
  sample->add_option("--seed", ss.seed)->capture_default_str();

  auto* directions = app.add_subcommand("directions", "Channel direction operations");
  directions->require_subcommand(1);
  PrecomputeOptions pc;
  auto* precompute = directions->add_subcommand("precompute", "Compute per-channel embedding directions");
  precompute->add_option("--out", pc.out)->required();
  auto* styles_opt =
      precompute->add_option("--styles", pc.styles, "Styles file (default: sample from the backend)");
  precompute->add_option("--invert-manifest", pc.invert_manifest, "Invert these images to get style samples")
      ->excludes(styles_opt);
  precompute->add_option("--samples", pc.samples, "Style samples per channel")->capture_default_str();
  precompute->add_option("--multiplier", pc.multiplier, "Perturbation in standard deviations")
      ->capture_default_str();
  precompute->add_option("--seed", pc.seed)->capture_default_str();
  precompute->add_option("--checkpoint", pc.checkpoint, "Resume file (default: <out>.ckpt)");
  precompute->add_flag("--no-normalize", pc.no_normalize, "Difference raw image embeddings");
  precompute->add_flag("--keep-checkpoint", pc.keep_checkpoint);

  EditOptions ed;
  auto* edit = app.add_subcommand("edit", "Edit one image with a text instruction");
  add_source_options(edit, ed.source);
  add_direction_options(edit, ed.direction);
  edit->add_option("--alpha", ed.alpha, "Edit strength")->capture_default_str();
  edit->add_option("--beta", ed.beta, "Sparsity threshold")->capture_default_str();
  edit->add_option("--out-dir", ed.out_dir)->capture_default_str();
  edit->add_option("--prefix", ed.prefix)->capture_default_str();

  RetrieveOptions rt;
  auto* retrieve = app.add_subcommand("retrieve", "List the corpus images most and least similar to a text");
  retrieve->add_option("--text", rt.text)->required();
  retrieve->add_option("--k", rt.k)->capture_default_str();
  retrieve->add_option("--show", rt.show)->capture_default_str();
  retrieve->add_option("--corpus", rt.corpus)->required();
  retrieve->add_flag("--json", rt.json);

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over alpha and beta");
  add_source_options(sweep_cmd, sw.source);
  add_direction_options(sweep_cmd, sw.direction);
  sweep_cmd->add_option("--alpha-range", sw.alpha_range, "start:stop:step")->capture_default_str();
  sweep_cmd->add_option("--beta-range", sw.beta_range, "start:stop:step")->capture_default_str();
  sweep_cmd->add_option("--csv", sw.csv, "Write the table as CSV");
  sweep_cmd->add_option("--json", sw.json, "Write the table as JSON");

  BenchCliOptions bn;
  auto* bench = app.add_subcommand("bench", "Time retrieval plus SVM training");
  bench->add_option("--corpus", bn.corpus, "Corpus file (default: random unit rows)");
  bench->add_option("--rows", bn.rows)->capture_default_str();
  bench->add_option("--dim", bn.dim)->capture_default_str();
  bench->add_option("--trials", bn.trials)->capture_default_str();
  bench->add_option("--k", bn.k)->capture_default_str();
  bench->add_option("--seed", bn.seed)->capture_default_str();
  bench->add_option("--json", bn.json, "Write the report as JSON");

  ServeOptions sv;
  auto* serve = app.add_subcommand("serve", "HTTP API on /api/*");
  serve->add_option("--host", sv.host)->capture_default_str();
  serve->add_option("--port", sv.port)->envname(kPortEnv)->capture_default_str();
  serve->add_option("--corpus", sv.corpus);
  serve->add_option("--directions", sv.directions);
  serve->add_option("--cache", sv.cache, "Direction cache entries")->capture_default_str();
  serve->add_option("--cors-origin", sv.cors_origin)->capture_default_str();
  serve->add_flag("--strict-fingerprint", sv.strict_fingerprint);

  ServeBackendOptions sb;
  auto* serve_backend = app.add_subcommand("serve-backend", "Expose the configured backend on /v1/*");
  serve_backend->add_option("--host", sb.host)->capture_default_str();
  serve_backend->add_option("--port", sb.port)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }
  if (seed_opt->count() > 0) g.synthetic_seed = seed_value;

  if (bench->parsed()) return cmd_bench(bn, out);
  const auto backend = make_backend(g);
  if (index_build->parsed()) return cmd_index_build(ib, *backend, out, err);
  if (synth->parsed()) return cmd_synth_corpus(sc, *backend, out);
  if (sample->parsed()) return cmd_sample_styles(ss, *backend, out);
  if (precompute->parsed()) return cmd_directions_precompute(pc, g, *backend, out, err);
  if (edit->parsed()) return cmd_edit(ed, *backend, out, err);
  if (retrieve->parsed()) return cmd_retrieve(rt, *backend, out);
  if (sweep_cmd->parsed()) return cmd_sweep(sw, g, *backend, out, err);
  if (serve->parsed()) return cmd_serve(sv, g, backend, out, err);
  if (serve_backend->parsed()) return cmd_serve_backend(sb, backend, out);
  throw Error(ErrorCode::Usage, "no command given");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    err << "error [IoFailure]: " << e.what() << '\n';
    return static_cast<int>(ExitCode::IoFormat);
  } catch (const Json::exception& e) {
    err << "error [ManifestMismatch]: " << e.what() << '\n';
    return static_cast<int>(ExitCode::IoFormat);
  }
}

}  // namespace latent_edit
