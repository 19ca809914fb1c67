// Copyright 2026 The SmoothCLAP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// smoothclap: the pipeline as subcommands.
//
//   synth      write a small labeled WAV corpus
//   extract    WAV files -> acoustic profiles (JSONL) and a feature CSV
//   tags       profiles + labels -> tag records, fitting or reusing thresholds
//   train      features + tags -> model
//   eval       zero-shot classification report
//   gradcheck  analytic vs finite-difference gradients
//   sweep      (gamma, beta) grid on the built-in fuzzy fixture
//
// Exit codes: 0 success, 1 computation failure, 2 usage or I/O error.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smoothclap/config.hpp"
#include "smoothclap/error.hpp"
#include "smoothclap/evaluation.hpp"
#include "smoothclap/fixture.hpp"
#include "smoothclap/gradcheck.hpp"
#include "smoothclap/io.hpp"
#include "smoothclap/log.hpp"
#include "smoothclap/paralinguistics.hpp"
#include "smoothclap/synth.hpp"
#include "smoothclap/tagging.hpp"
#include "smoothclap/trainer.hpp"
#include "smoothclap/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smoothclap;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Bad inputs and bad configuration are usage errors; everything else is a
/// failure of the computation itself.
int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::GammaOutOfRange:
    case ErrorCode::BetaOutOfRange:
    case ErrorCode::NonPositiveTemperature:
    case ErrorCode::RaggedRows:
    case ErrorCode::NonNumericCell:
    case ErrorCode::DuplicateId:
    case ErrorCode::UnknownQueryLabel:
    case ErrorCode::UnknownLabel:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

// Shared flags ----------------------------------------------------------------

struct SharedFlags {
  std::string configPath;
  std::uint64_t seed = 0;
  double gamma = 0, beta = 0, tauA2A = 0, tauT2T = 0, tauPred = 0, floor = 0, clapWeight = 0, lr = 0, lrText = 0;
  std::string klMode, objective;
  std::size_t batchSize = 0, epochs = 0, embedDim = 0;
  bool strict = false;
  struct Binding {
    CLI::Option* option;
    std::string key;
    std::function<json()> value;
  };
  std::vector<Binding> bound;

  template <typename T>
  CLI::Option* bind(CLI::App* app, const std::string& flag, T& target, const std::string& key,
                    const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    bound.push_back({opt, key, [&target] { return json(target); }});
    return opt;
  }

  void attach(CLI::App* app, bool training) {
    app->add_option("--config", configPath, "JSON config file (flags override it)");
    bind(app, "--seed", seed, "seed", "seed for every random stream");
    app->add_flag("--strict", strict, "treat per-item failures as errors");
    if (!training) return;
    bind(app, "--gamma", gamma, "smoothing.gamma", "audio/text target mix in [0,1]");
    bind(app, "--beta", beta, "smoothing.beta", "identity/soft target fusion in [0,1]");
    bind(app, "--tau-a2a", tauA2A, "smoothing.tau_a2a", "audio-to-audio target temperature");
    bind(app, "--tau-t2t", tauT2T, "smoothing.tau_t2t", "text-to-text target temperature");
    bind(app, "--tau-pred", tauPred, "smoothing.tau_pred", "initial prediction temperature");
    bind(app, "--floor", floor, "smoothing.floor", "probability floor inside KL logs");
    bind(app, "--clap-weight", clapWeight, "smoothing.clap_weight", "InfoNCE weight inside the soft objective");
    bind(app, "--kl-mode", klMode, "smoothing.kl_mode", "symmetric | forward")
        ->check(CLI::IsMember({"symmetric", "forward"}));
    bind(app, "--objective", objective, "train.objective", "clap | smooth")->check(CLI::IsMember({"clap", "smooth"}));
    bind(app, "--batch-size", batchSize, "train.batch_size", "minibatch size");
    bind(app, "--epochs", epochs, "train.epochs", "training epochs");
    bind(app, "--lr", lr, "train.lr_projection", "Adam learning rate");
    bind(app, "--lr-text", lrText, "train.lr_text", "text-encoder learning rate");
    bind(app, "--embed-dim", embedDim, "train.embed_dim", "shared embedding dimension");
  }

  /// File values first, then explicit flags on top of `defaults`.
  RunConfig resolve(RunConfig defaults = {}) const {
    RunConfig rc = std::move(defaults);
    if (!configPath.empty()) {
      for (const auto& [k, v] : RunConfig::from_file(configPath).values()) rc.set(k, v);
    }
    for (const auto& b : bound)
      if (b.option->count() > 0) rc.set(b.key, b.value());
    return rc;
  }
};

/// Reproducibility header embedded in every artifact. Holds no paths so
/// identical runs in different directories write identical bytes.
json meta(const std::string& command, std::uint64_t seed, const json& config) {
  return {{"tool", "smoothclap"}, {"version", kVersion}, {"command", command}, {"seed", seed}, {"config", config}};
}

json meta(const std::string& command, const RunConfig& rc) { return meta(command, rc.seed(), rc.effective()); }

json with_meta(json body, const json& m) {
  body[std::string(kMetaKey)] = m;
  return body;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& cell : split_csv_row(s))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& cell : split_list(s)) {
    double v;
    if (!parse_double(cell, v)) fail(ErrorCode::InvalidConfig, what + " grid value '" + cell + "' is not a number");
    if (v < 0.0 || v > 1.0) fail(ErrorCode::InvalidConfig, what + " grid value " + cell + " is outside [0, 1]");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::InvalidConfig, what + " grid is empty");
  return out;
}

// synth -----------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t count = 40;
};

int cmd_synth(const SynthArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  const auto entries = write_synth_corpus(a.out, a.count, rc.seed());
  std::cout << "wrote " << entries.size() << " utterances to " << a.out << "\n";
  return kExitOk;
}

// extract ---------------------------------------------------------------------

struct ExtractArgs {
  std::string manifest, inDir, out, featuresOut;
};

const std::vector<std::string>& feature_columns() {
  static const std::vector<std::string> cols{"pitch_mean_hz", "pitch_std_hz", "intensity_mean_db", "intensity_std_db",
                                             "jitter",        "shimmer",      "duration_s",        "voiced_fraction"};
  return cols;
}

int cmd_extract(const ExtractArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  struct Item {
    std::string id;
    fs::path path;
  };
  std::vector<Item> items;
  if (!a.manifest.empty()) {
    std::vector<json> lines;
    try {
      lines = read_jsonl(a.manifest);
    } catch (const Error& e) {
      log::error(std::string("extract: cannot read manifest: ") + e.what());
      return kExitUsage;
    }
    const fs::path base = fs::path(a.manifest).parent_path();
    for (const auto& j : lines) {
      const std::string wav = j.value("wav", j.value("path", std::string{}));
      if (wav.empty()) {
        log::error("extract: manifest entry without a wav path: " + j.dump());
        return kExitUsage;
      }
      const fs::path p = fs::path(wav).is_absolute() ? fs::path(wav) : base / wav;
      items.push_back({j.value("id", fs::path(wav).stem().string()), p});
    }
  } else {
    std::error_code ec;
    if (!fs::is_directory(a.inDir, ec)) {
      log::error("extract: not a directory: " + a.inDir);
      return kExitUsage;
    }
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(a.inDir))
      if (e.is_regular_file() && e.path().extension() == ".wav") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) items.push_back({p.stem().string(), p});
  }

  const json m = meta("extract", rc);
  std::string jsonl = jsonl_meta_line(m);
  std::string csv = csv_meta_line(m) + "id";
  for (const auto& c : feature_columns()) csv += "," + c;
  csv += "\n";

  std::size_t failures = 0;
  for (const auto& item : items) {
    AcousticProfile p;
    try {
      p = acoustic_profile(load_wav(item.path));
    } catch (const Error& e) {
      ++failures;
      log::warn("extract: skipping " + item.id + ": " + e.what());
      continue;
    }
    json line = to_json(p);
    line["id"] = item.id;
    jsonl += line.dump() + "\n";
    const json flat = to_json(p);
    csv += item.id;
    for (const auto& c : feature_columns()) csv += "," + format_double(flat.at(c).get<double>());
    csv += "\n";
  }
  write_text_file(a.out, jsonl);
  if (!a.featuresOut.empty()) write_text_file(a.featuresOut, csv);
  std::cout << "extracted " << items.size() - failures << " of " << items.size() << " files";
  if (failures) std::cout << " (" << failures << " failed)";
  std::cout << "\n";
  return failures > 0 && f.strict ? kExitFailure : kExitOk;
}

// tags ------------------------------------------------------------------------

struct TagsArgs {
  std::string profiles, labels, thresholds, out;
  bool fit = false;
};

TagSources label_sources(const json& j) {
  TagSources s;
  if (j.contains("emotion")) s.emotion = j.at("emotion").get<std::string>();
  else if (j.contains("label")) s.emotion = j.at("label").get<std::string>();
  if (j.contains("gender")) s.gender = j.at("gender").get<std::string>();
  for (const auto& d : dimensional_features())
    if (j.contains(d) && j.at(d).is_number()) s.dims[d] = j.at(d).get<double>();
  return s;
}

int cmd_tags(const TagsArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  if (a.profiles.empty() && a.labels.empty()) fail(ErrorCode::InvalidConfig, "tags needs --profiles and/or --labels");
  if (!a.fit && a.thresholds.empty()) fail(ErrorCode::InvalidConfig, "apply mode needs --thresholds (or pass --fit)");

  std::vector<std::string> order;
  std::unordered_map<std::string, TagSources> sources;
  std::size_t unmatchedProfiles = 0, unmatchedLabels = 0;

  if (!a.profiles.empty()) {
    for (const auto& j : read_jsonl(a.profiles)) {
      const auto id = j.at("id").get<std::string>();
      if (sources.contains(id)) fail(ErrorCode::DuplicateId, "duplicate profile id '" + id + "'");
      order.push_back(id);
      sources[id].profile = profile_from_json(j);
    }
  }
  if (!a.labels.empty()) {
    std::set<std::string> labelled;
    for (const auto& j : read_jsonl(a.labels)) {
      const auto id = j.at("id").get<std::string>();
      if (!labelled.insert(id).second) fail(ErrorCode::DuplicateId, "duplicate label id '" + id + "'");
      TagSources s = label_sources(j);
      if (a.profiles.empty()) {
        order.push_back(id);
        sources[id] = std::move(s);
        continue;
      }
      auto it = sources.find(id);
      if (it == sources.end()) {
        ++unmatchedLabels;
        continue;
      }
      s.profile = it->second.profile;
      it->second = std::move(s);
    }
    if (!a.profiles.empty()) unmatchedProfiles = order.size() - (labelled.size() - unmatchedLabels);
  }
  if (unmatchedLabels) log::warn("tags: " + std::to_string(unmatchedLabels) + " label ids have no profile");
  if (unmatchedProfiles) log::warn("tags: " + std::to_string(unmatchedProfiles) + " profile ids have no labels");

  const json m = meta("tags", rc);
  ThresholdSet thresholds;
  if (a.fit) {
    std::vector<TagSources> corpus;
    for (const auto& id : order) corpus.push_back(sources.at(id));
    thresholds = fit_thresholds(corpus);
    if (!a.thresholds.empty()) write_text_file(a.thresholds, with_meta(to_json(thresholds), m).dump(2) + "\n");
  } else {
    thresholds = thresholds_from_json(json::parse(read_text_file(a.thresholds)));
  }

  std::string out = jsonl_meta_line(m);
  for (const auto& id : order) out += to_json(render_tags(id, sources.at(id), thresholds)).dump() + "\n";
  write_text_file(a.out, out);
  std::cout << "tagged " << order.size() << " utterances";
  if (unmatchedLabels || unmatchedProfiles) {
    std::cout << " (" << unmatchedProfiles << " without labels, " << unmatchedLabels << " labels without profiles)";
  }
  std::cout << "\n";
  return (unmatchedLabels || unmatchedProfiles) && f.strict ? kExitFailure : kExitOk;
}

// train -----------------------------------------------------------------------

struct TrainArgs {
  std::string features, tags, out, history;
};

int cmd_train(const TrainArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  TrainConfig cfg = rc.train_config();
  cfg.validate();  // before any data is touched

  const IdMatrix feats = read_id_matrix_csv(a.features);
  std::unordered_map<std::string, std::vector<std::string>> tagById;
  for (const auto& j : read_jsonl(a.tags)) {
    TagRecord r = tag_record_from_json(j);
    if (!tagById.emplace(r.utteranceId, std::move(r.tags)).second) {
      fail(ErrorCode::DuplicateId, "duplicate tag id '" + j.at("id").get<std::string>() + "'");
    }
  }
  std::vector<std::size_t> rows;
  std::vector<std::vector<std::string>> tagLists;
  for (std::size_t i = 0; i < feats.ids.size(); ++i) {
    auto it = tagById.find(feats.ids[i]);
    if (it == tagById.end()) continue;
    rows.push_back(i);
    tagLists.push_back(it->second);
  }
  const std::size_t missing = feats.ids.size() - rows.size();
  if (missing) {
    log::warn("train: " + std::to_string(missing) + " feature rows have no tags");
    if (f.strict) return kExitFailure;
  }
  const Matrix x = detail::gather_rows(feats.values, rows);

  const TrainedModel model = train(x, tagLists, cfg, [](std::size_t e, double loss) {
    log::info("epoch " + std::to_string(e + 1) + " loss " + format_double(loss));
  });

  const json m = meta("train", rc);
  write_text_file(a.out, with_meta(to_json(model), m).dump() + "\n");
  if (!a.history.empty()) {
    std::string csv = csv_meta_line(m) + "epoch,loss\n";
    for (std::size_t e = 0; e < model.history.size(); ++e)
      csv += std::to_string(e + 1) + "," + format_double(model.history[e]) + "\n";
    write_text_file(a.history, csv);
  }
  std::cout << "final loss " << format_double(model.history.back()) << "\n";
  return kExitOk;
}

// eval ------------------------------------------------------------------------

struct EvalArgs {
  std::string model, features, embeddings, queryEmbeddings, labels, out, predictions;
  std::string audioEmbeddingsOut, queryEmbeddingsOut;
  std::vector<std::string> queries;
};

int cmd_eval(const EvalArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  std::optional<TrainedModel> model;
  if (!a.model.empty()) model = model_from_json(json::parse(read_text_file(a.model)));

  // Audio side.
  std::vector<std::string> ids;
  Matrix audio;
  if (!a.embeddings.empty()) {
    auto ext = ingest_external_embeddings(a.embeddings);
    ids = std::move(ext.ids);
    audio = std::move(ext.values);
  } else {
    if (!model || a.features.empty()) fail(ErrorCode::InvalidConfig, "eval needs --model with --features, or --embeddings");
    const IdMatrix feats = read_id_matrix_csv(a.features);
    ids = feats.ids;
    audio = model->embed_audio(feats.values);
  }

  // Query side.
  std::vector<std::string> classNames;
  Matrix queries;
  if (!a.queryEmbeddings.empty()) {
    auto ext = ingest_external_embeddings(a.queryEmbeddings);
    classNames = std::move(ext.ids);
    queries = std::move(ext.values);
  } else {
    for (const auto& q : a.queries)
      for (auto& s : split_list(q)) classNames.push_back(std::move(s));
    if (classNames.empty()) fail(ErrorCode::InvalidConfig, "eval needs --queries or --query-embeddings");
    if (!model) fail(ErrorCode::InvalidConfig, "label queries need --model to featurize them");
    std::vector<std::string> unknown;
    for (const auto& q : classNames)
      if (!std::binary_search(model->vocabulary.begin(), model->vocabulary.end(), q)) unknown.push_back(q);
    if (!unknown.empty()) {
      std::string list;
      for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
      fail(ErrorCode::UnknownQueryLabel, "query labels not in the model vocabulary: " + list);
    }
    std::vector<std::vector<std::string>> lists;
    for (const auto& q : classNames) lists.push_back({q});
    queries = model->embed_text(lists);
  }

  // Labels.
  const CsvTable t = read_csv(a.labels);
  const auto col = [&t](const std::string& name) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) fail(ErrorCode::ParseError, "labels file needs an '" + name + "' column");
    return static_cast<std::size_t>(it - t.header.begin());
  };
  const std::size_t idCol = col("id"), labelCol = col("label");
  std::unordered_map<std::string, std::string> labelById;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) fail(ErrorCode::RaggedRows, "labels file has a ragged row");
    if (!labelById.emplace(row[idCol], row[labelCol]).second) {
      fail(ErrorCode::DuplicateId, "duplicate label id '" + row[idCol] + "'");
    }
  }

  std::vector<std::size_t> rows, yTrue;
  std::vector<std::string> keptIds;
  std::set<std::string> unknownLabels;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = labelById.find(ids[i]);
    if (it == labelById.end()) continue;
    auto c = std::find(classNames.begin(), classNames.end(), it->second);
    if (c == classNames.end()) {
      unknownLabels.insert(it->second);
      continue;
    }
    rows.push_back(i);
    keptIds.push_back(ids[i]);
    yTrue.push_back(static_cast<std::size_t>(c - classNames.begin()));
  }
  if (!unknownLabels.empty()) {
    std::string list;
    for (const auto& u : unknownLabels) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorCode::UnknownLabel, "true labels with no matching query: " + list);
  }
  if (rows.size() < ids.size()) {
    log::warn("eval: " + std::to_string(ids.size() - rows.size()) + " embeddings have no label");
  }
  if (keptIds.size() < labelById.size()) {
    log::warn("eval: " + std::to_string(labelById.size() - keptIds.size()) + " labels have no embedding");
  }

  const Matrix audioKept = detail::gather_rows(audio, rows);
  const EvalReport report = evaluate_zero_shot(audioKept, keptIds, yTrue, queries, classNames);

  // With a model, the report echoes the configuration it was trained with.
  const json m = model ? meta("eval", model->config.seed, to_json(model->config)) : meta("eval", rc);
  write_text_file(a.out, with_meta(to_json(report), m).dump(2) + "\n");
  if (!a.predictions.empty()) write_text_file(a.predictions, csv_meta_line(m) + predictions_csv(report));
  if (!a.audioEmbeddingsOut.empty()) {
    write_text_file(a.audioEmbeddingsOut, csv_meta_line(m) + id_matrix_csv(ids, audio, "e"));
  }
  if (!a.queryEmbeddingsOut.empty()) {
    write_text_file(a.queryEmbeddingsOut, csv_meta_line(m) + id_matrix_csv(classNames, queries, "e"));
  }
  for (const auto& w : report.warnings) log::warn("eval: " + w);
  std::cout << confusion_table(report);
  return kExitOk;
}

// gradcheck -------------------------------------------------------------------

struct GradcheckArgs {
  std::string sizes, out;
  bool corrupt = false;
};

std::pair<std::size_t, std::size_t> parse_sizes(const std::string& s) {
  std::size_t b = 0, d = 0;
  for (const auto& cell : split_list(s)) {
    const auto eq = cell.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidConfig, "--sizes expects B=<n>,d=<n>, got '" + s + "'");
    const std::string k = cell.substr(0, eq);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data() + eq + 1, cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      fail(ErrorCode::InvalidConfig, "--sizes value '" + cell + "' is not an integer");
    }
    if (k == "B") b = v;
    else if (k == "d") d = v;
    else fail(ErrorCode::InvalidConfig, "--sizes key '" + k + "' is not B or d");
  }
  if (b < 2 || d < 1) fail(ErrorCode::InvalidConfig, "--sizes needs B >= 2 and d >= 1");
  return {b, d};
}

int cmd_gradcheck(const GradcheckArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve();
  auto cases = default_gradcheck_suite(rc.seed());
  if (!a.sizes.empty()) {
    const auto [b, d] = parse_sizes(a.sizes);
    for (auto& c : cases) {
      c.batch = b;
      c.dim = d;
    }
  }
  constexpr double kTolerance = 1e-5;
  double worst = 0.0;
  std::size_t params = 0;
  std::optional<std::pair<GradCheckCase, GradCheckResult>> offender;
  json perCase = json::array();
  for (const auto& c : cases) {
    const GradCheckResult r = check_gradients(c, 1e-5, a.corrupt);
    params += r.parametersChecked;
    log::info(c.describe() + " max rel error " + format_double(r.maxRelError));
    perCase.push_back({{"config", c.describe()}, {"max_rel_error", r.maxRelError}, {"worst", r.worstParameter}});
    if (r.maxRelError > worst) worst = r.maxRelError;
    if (r.maxRelError >= kTolerance && !offender) offender.emplace(c, r);
  }
  if (!a.out.empty()) {
    write_text_file(a.out, with_meta({{"max_rel_error", worst}, {"cases", perCase}}, meta("gradcheck", rc)).dump(2) + "\n");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", worst);
  std::cout << "max relative error " << buf << " over " << cases.size() << " configurations (" << params
            << " parameters)\n";
  if (offender) {
    std::snprintf(buf, sizeof buf, "%.3e", offender->second.maxRelError);
    std::cout << "FAILED: " << offender->first.describe() << " parameter " << offender->second.worstParameter
              << " relative error " << buf << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// sweep -----------------------------------------------------------------------

struct SweepArgs {
  std::string gammas = "0.5";
  std::string betas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string out;
};

/// The fixture needs more optimization than the train defaults give
/// it; these apply unless a config file or flag says otherwise.
RunConfig sweep_defaults() {
  RunConfig rc;
  rc.set("train.epochs", 30);
  rc.set("train.lr_projection", 1e-2);
  return rc;
}

int cmd_sweep(const SweepArgs& a, const SharedFlags& f) {
  const RunConfig rc = f.resolve(sweep_defaults());
  const auto gammas = parse_grid(a.gammas, "gamma");
  const auto betas = parse_grid(a.betas, "beta");
  TrainConfig base = rc.train_config();
  base.objective = Objective::Smooth;
  const FuzzyFixture fx = make_fuzzy_fixture(rc.seed());

  std::string csv = csv_meta_line(meta("sweep", rc)) + "gamma,beta,uar,finalLoss\n";
  std::size_t failures = 0;
  for (double g : gammas) {
    for (double b : betas) {
      TrainConfig cfg = base;
      cfg.smoothing.gamma = g;
      cfg.smoothing.beta = b;
      std::string uar = "nan", loss = "nan";
      try {
        const FixtureRunResult r = run_fixture(fx, cfg);
        uar = format_double(r.report.uar);
        loss = format_double(r.finalLoss);
      } catch (const Error& e) {
        ++failures;
        log::warn("sweep: gamma=" + format_double(g) + " beta=" + format_double(b) + ": " + e.what());
      }
      csv += format_double(g) + "," + format_double(b) + "," + uar + "," + loss + "\n";
      std::cout << "gamma " << format_double(g) << " beta " << format_double(b) << " uar " << uar << " loss "
                << loss << "\n";
    }
  }
  write_text_file(a.out, csv);
  return failures ? kExitFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smoothclap: soft-target contrastive audio-text training pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SharedFlags shared;

  SynthArgs synthArgs;
  auto* synth = app.add_subcommand("synth", "Write a small labeled WAV corpus");
  synth->add_option("--out", synthArgs.out, "output directory")->required();
  synth->add_option("--count", synthArgs.count, "number of utterances");

  ExtractArgs extractArgs;
  auto* extract = app.add_subcommand("extract", "Extract acoustic profiles from WAV files");
  auto* manifestOpt = extract->add_option("--manifest", extractArgs.manifest, "JSONL with id and wav per line");
  auto* inDirOpt = extract->add_option("--in-dir", extractArgs.inDir, "directory of .wav files");
  manifestOpt->excludes(inDirOpt);
  extract->add_option("--out", extractArgs.out, "profiles JSONL")->required();
  extract->add_option("--features-out", extractArgs.featuresOut, "feature CSV for training");

  TagsArgs tagsArgs;
  auto* tags = app.add_subcommand("tags", "Turn profiles and labels into tag records");
  tags->add_option("--profiles", tagsArgs.profiles, "profiles JSONL from extract");
  tags->add_option("--labels", tagsArgs.labels, "JSONL with id, emotion, gender, arousal, valence, dominance");
  tags->add_option("--thresholds", tagsArgs.thresholds, "threshold JSON (written with --fit, read otherwise)");
  tags->add_flag("--fit", tagsArgs.fit, "fit thresholds on this corpus");
  tags->add_option("--out", tagsArgs.out, "tag records JSONL")->required();

  TrainArgs trainArgs;
  auto* trainCmd = app.add_subcommand("train", "Train the projection heads");
  trainCmd->add_option("--features", trainArgs.features, "feature CSV (id, values...)")->required();
  trainCmd->add_option("--tags", trainArgs.tags, "tag records JSONL")->required();
  trainCmd->add_option("--out", trainArgs.out, "model JSON")->required();
  trainCmd->add_option("--history", trainArgs.history, "per-epoch loss CSV");

  EvalArgs evalArgs;
  auto* evalCmd = app.add_subcommand("eval", "Zero-shot evaluation");
  evalCmd->add_option("--model", evalArgs.model, "model JSON from train");
  evalCmd->add_option("--features", evalArgs.features, "feature CSV to embed with the model");
  evalCmd->add_option("--embeddings", evalArgs.embeddings, "precomputed audio embeddings CSV");
  evalCmd->add_option("--queries", evalArgs.queries, "class labels used as text queries (comma separated)");
  evalCmd->add_option("--query-embeddings", evalArgs.queryEmbeddings, "precomputed query embeddings CSV");
  evalCmd->add_option("--labels", evalArgs.labels, "CSV with id,label")->required();
  evalCmd->add_option("--out", evalArgs.out, "report JSON")->required();
  evalCmd->add_option("--predictions", evalArgs.predictions, "per-utterance predictions CSV");
  evalCmd->add_option("--audio-embeddings-out", evalArgs.audioEmbeddingsOut, "write the audio embeddings used");
  evalCmd->add_option("--query-embeddings-out", evalArgs.queryEmbeddingsOut, "write the query embeddings used");

  GradcheckArgs gcArgs;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradcheck->add_option("--sizes", gcArgs.sizes, "restrict to one size, e.g. B=2,d=3");
  gradcheck->add_option("--out", gcArgs.out, "per-configuration report JSON");
#ifdef SMOOTHCLAP_TESTING
  gradcheck->add_flag("--corrupt-gradient", gcArgs.corrupt, "perturb one analytic gradient entry");
#endif

  SweepArgs sweepArgs;
  auto* sweep = app.add_subcommand("sweep", "Grid over gamma and beta on the fuzzy fixture");
  sweep->add_option("--gammas", sweepArgs.gammas, "comma-separated gamma values");
  sweep->add_option("--betas", sweepArgs.betas, "comma-separated beta values");
  sweep->add_option("--out", sweepArgs.out, "result CSV")->required();

  for (auto* sub : {synth, extract, tags, evalCmd, gradcheck}) shared.attach(sub, false);
  for (auto* sub : {trainCmd, sweep}) shared.attach(sub, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synthArgs, shared);
    if (*extract) {
      if (extractArgs.manifest.empty() && extractArgs.inDir.empty()) {
        std::cerr << "error: extract needs --manifest or --in-dir\n\n" << extract->help();
        return kExitUsage;
      }
      return cmd_extract(extractArgs, shared);
    }
    if (*tags) return cmd_tags(tagsArgs, shared);
    if (*trainCmd) return cmd_train(trainArgs, shared);
    if (*evalCmd) return cmd_eval(evalArgs, shared);
    if (*gradcheck) return cmd_gradcheck(gcArgs, shared);
    if (*sweep) return cmd_sweep(sweepArgs, shared);
  } catch (const Error& e) {
    log::error(std::string(to_string(e.code())) + ": " + e.what());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    log::error(std::string("malformed JSON input: ") + e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    log::error(e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
