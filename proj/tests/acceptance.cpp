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

// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/config.hpp"
#include "smoothclap/evaluation.hpp"
#include "smoothclap/fixture.hpp"
#include "smoothclap/gradcheck.hpp"
#include "smoothclap/io.hpp"
#include "smoothclap/objective.hpp"
#include "smoothclap/paralinguistics.hpp"
#include "smoothclap/random.hpp"
#include "smoothclap/synth.hpp"
#include "smoothclap/tagging.hpp"

using namespace smoothclap;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << id << " " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(SMOOTHCLAP_CLI) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// 1 ------------------------------------------------------------------------------

void gradient_fidelity(const fs::path& work) {
  const auto t0 = Clock::now();
  const Outcome r = cli("gradcheck --seed 0 --out " + q(work / "gradcheck.json"));
  const double secs = seconds_since(t0);
  if (r.code != 0) {
    report(1, "gradient fidelity", false, "gradcheck exited " + std::to_string(r.code) + ": " + r.output);
    return;
  }
  const auto j = nlohmann::json::parse(read_text_file(work / "gradcheck.json"));
  const double worst = j.at("max_rel_error").get<double>();
  const std::size_t n = j.at("cases").size();
  // Every grid value must appear in at least one configuration.
  std::set<std::string> missing{"B=2 ", "B=4 ", "B=8 ", "d=3 ", "d=16 ", "gamma=0 ", "gamma=0.5 ", "gamma=1 ",
                                "beta=0.1 ", "beta=0.5 ", "beta=1 ", "kl=symmetric", "kl=forward",
                                "objective=smooth", "objective=clap"};
  for (const auto& c : j.at("cases")) {
    const std::string s = c.at("config").get<std::string>() + " ";
    std::erase_if(missing, [&s](const std::string& v) { return s.find(v) != std::string::npos; });
  }
  std::string gap;
  for (const auto& m : missing) gap += " " + m;
  const bool ok = worst < 1e-5 && n >= 20 && secs < 30.0 && missing.empty();
  report(1, "gradient fidelity", ok,
         "max rel error " + fmt("%.3e", worst) + " over " + std::to_string(n) + " configurations in " +
             fmt("%.2f", secs) + " s" + (missing.empty() ? "" : "; grid values not covered:" + gap));
}

// 2 ------------------------------------------------------------------------------

bool row_stochastic(const RowStochasticMatrix& p) {
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (double v : p.row(i)) {
      if (v < 0.0) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) return false;
  }
  return true;
}

void distribution_invariants() {
  Rng rng(2024);
  int cases = 0, bad = 0;
  for (; cases < 1000; ++cases) {
    const std::size_t b = 2 + rng.below(15), d = 1 + rng.below(16), l = 1 + rng.below(8);
    const EmbeddingBatch batch = random_batch(b, d, l, rng.next());
    const double gamma = rng.uniform(), beta = rng.uniform(1e-3, 1.0);
    const auto qa = intra_modal_targets(batch.localAudio(), rng.uniform(0.05, 2.0));
    const auto qt = intra_modal_targets(batch.text(), rng.uniform(0.05, 2.0));
    const auto qm = mix_targets(qa, qt, gamma);
    const auto y = smooth_targets(qm, beta);
    const auto p = predicted_distributions(gram(batch.audio(), batch.text()), rng.uniform(0.02, 1.0));
    bool ok = row_stochastic(qa) && row_stochastic(qt) && row_stochastic(qm) && row_stochastic(y) &&
              row_stochastic(p.audioToText) && row_stochastic(p.textToAudio);
    for (double v : y.matrix().data()) ok = ok && v > 0.0;
    // Diagonal argmax on distinct unit rows.
    Matrix f(b, 1 + rng.below(8));
    for (double& v : f.data()) v = rng.normal();
    const auto self = intra_modal_targets(l2_normalize_rows(f), rng.uniform(0.05, 2.0));
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) ok = ok && self(i, i) >= self(i, j);
    if (!ok) ++bad;
  }
  report(2, "distribution invariants", bad == 0 && cases >= 1000,
         std::to_string(cases) + " random cases, " + std::to_string(bad) + " violations");
}

// 3 ------------------------------------------------------------------------------

void hard_target_recovery() {
  // tau_pred is drawn from [0.2, 1]: below that the 1e-8 KL floor can bind on
  // a diagonal probability and the identity no longer holds exactly.
  Rng rng(77);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const EmbeddingBatch batch = random_batch(2 + rng.below(15), 1 + rng.below(16), 1 + rng.below(8), rng.next());
    SmoothingConfig cfg;
    cfg.gamma = rng.uniform();
    cfg.beta = 0.0;
    cfg.klMode = KlMode::ForwardOnly;
    cfg.tauA2A = rng.uniform(0.2, 2.0);
    cfg.tauT2T = rng.uniform(0.2, 2.0);
    cfg.tauPred = rng.uniform(0.2, 1.0);
    const Matrix s = gram(batch.audio(), batch.text());
    const auto p = predicted_distributions(s, cfg.tauPred);
    const double soft = soft_loss(build_targets(batch, cfg), p.audioToText, p.textToAudio, cfg);
    worst = std::max(worst, std::abs(soft - clap_infonce(s, cfg.tauPred)));
  }
  report(3, "hard-target recovery", worst <= 1e-9,
         "100 batches, max |soft - infonce| = " + fmt("%.3e", worst) + " (tau_pred in [0.2, 1])");
}

// 4 ------------------------------------------------------------------------------

void golden_values() {
  std::ifstream in(SMOOTHCLAP_GOLDEN_JSON);
  if (!in) {
    report(4, "oracle golden values", false, "cannot open " SMOOTHCLAP_GOLDEN_JSON);
    return;
  }
  const auto g = nlohmann::json::parse(in);
  double worst = 0.0;
  std::size_t compared = 0;
  auto cmp = [&](double actual, const nlohmann::json& expected) {
    worst = std::max(worst, std::abs(actual - expected.get<double>()));
    ++compared;
  };
  auto cmp_row = [&](std::span<const double> actual, const nlohmann::json& expected) {
    for (std::size_t i = 0; i < actual.size(); ++i) cmp(actual[i], expected.at(i));
  };
  auto cmp_mat = [&](const Matrix& m, const nlohmann::json& expected) {
    for (std::size_t i = 0; i < m.rows(); ++i) cmp_row(m.row(i), expected.at(i));
  };
  const std::vector<double> one{1, 0}, half{0.5, 0.5}, a{0.9, 0.1}, b{0.1, 0.9};
  cmp_row(l2_normalize_rows(Matrix::from_rows({{3, 4}})).row(0), g["l2_normalize_3_4"]);
  cmp_row(row_softmax(Matrix::from_rows({{std::log(2.0), 0}}), 1).row(0), g["softmax_ln2_0"]);
  cmp_row(row_softmax(Matrix::from_rows({{1000, 999}}), 1).row(0), g["softmax_1000_999"]);
  cmp(kl_row(one, half, 1e-12), g["kl_onehot_vs_uniform"]);
  cmp(kl_row(a, b, 1e-12), g["kl_09_01_vs_01_09"]);
  cmp(gram(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3, 4}}))(0, 0), g["gram_1_2_by_3_4"]);
  const std::vector<double> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const BinThresholds t = fit_bins(ten, "x");
  cmp(t.low, g["percentile_30_of_1_to_10"]);
  cmp(t.high, g["percentile_70_of_1_to_10"]);
  cmp(gram(Matrix::from_rows({{0.6, 0.8}}), Matrix::from_rows({{0.8, 0.6}}))(0, 0), g["score_06_08_vs_08_06"]);
  cmp_mat(intra_modal_targets(Matrix::identity(2), 1).matrix(), g["intra_orthogonal_tau1"]);
  cmp_row(mix_targets(RowStochasticMatrix(Matrix::from_rows({{0.6, 0.4}})),
                      RowStochasticMatrix(Matrix::from_rows({{0.2, 0.8}})), 0.5)
              .row(0),
          g["mix_gamma05"]);
  cmp_mat(smooth_targets(RowStochasticMatrix(Matrix::from_rows({{0.6, 0.4}, {0.4, 0.6}})), 0.5).matrix(),
          g["smooth_beta05"]);
  cmp_mat(predicted_distributions(Matrix::from_rows({{2, 0}, {0, 2}}), 1).audioToText.matrix(), g["predicted_2_0_0_2"]);
  const RowStochasticMatrix y(Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}}));
  const RowStochasticMatrix u(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  cmp(soft_loss(y, u, u, SmoothingConfig{}), g["soft_loss_b2_uniform_pred"]);
  cmp(clap_infonce(Matrix(2, 2), 1), g["infonce_zero_scores"]);
  cmp(clap_infonce(Matrix::identity(2), 1), g["infonce_identity_scores"]);
  std::vector<std::size_t> yt, yp;
  for (auto [tr, pr, n] : {std::tuple{0, 0, 8}, {0, 1, 2}, {1, 0, 4}, {1, 1, 6}})
    for (int k = 0; k < n; ++k) {
      yt.push_back(tr);
      yp.push_back(pr);
    }
  const EvalReport r = confusion_and_uar(yt, yp, 2);
  cmp(r.uar, g["uar_8_2_4_6"]);
  cmp_row(r.perClassRecall, g["recalls_8_2_4_6"]);
  const auto& fb = g["full_batch"];
  SmoothingConfig cfg;
  cfg.gamma = fb["gamma"];
  cfg.beta = fb["beta"];
  cfg.tauA2A = fb["tau_a2a"];
  cfg.tauT2T = fb["tau_t2t"];
  cfg.tauPred = fb["tau_pred"];
  cfg.floor = fb["floor"];
  auto rows = [](const nlohmann::json& j) { return Matrix::from_rows(j.get<std::vector<std::vector<double>>>()); };
  const EmbeddingBatch batch(rows(fb["audio"]), rows(fb["text"]), rows(fb["local"]));
  cmp(loss_and_grad(batch, cfg, Objective::Smooth).value, fb["loss"]);

  // 3/4/3 on 1..10 is an exact count, not a tolerance.
  std::map<Bin, int> counts;
  for (double v : ten) ++counts[assign_bin(v, t)];
  const bool bins = counts[Bin::Low] == 3 && counts[Bin::Mid] == 4 && counts[Bin::High] == 3;
  report(4, "oracle golden values", worst <= 1e-9 && bins,
         std::to_string(compared) + " values, max deviation " + fmt("%.3e", worst) + ", bins on 1..10 = " +
             std::to_string(counts[Bin::Low]) + "/" + std::to_string(counts[Bin::Mid]) + "/" +
             std::to_string(counts[Bin::High]));
}

// 5 ------------------------------------------------------------------------------

void dsp_ground_truth() {
  const auto t0 = Clock::now();
  const AcousticProfile sine = acoustic_profile(sine_wave(220.0, 0.5, 2.0));
  const bool sineOk = std::abs(sine.pitchMeanHz - 220.0) <= 2.0 && sine.jitter < 0.005 && sine.shimmer < 0.01;

  F0Track alt;
  for (int i = 0; i < 40; ++i) {
    alt.framesHz.push_back(1.0 / (i % 2 ? 0.0055 : 0.0045));
    alt.voicedFlags.push_back(true);
  }
  const double jit = jitter_local(alt).ratio;

  const Waveform voice = synth_voice({}, 11);
  const auto base = rms_intensity(frame_signal(voice));
  double scaleErr = 0.0;
  for (double c : {0.01, 0.3, 3.0}) {
    Waveform w = voice;
    for (double& v : w.samples) v *= c;
    const auto db = rms_intensity(frame_signal(w));
    for (std::size_t i = 0; i < db.size(); ++i)
      if (base[i] > -200.0) scaleErr = std::max(scaleErr, std::abs(db[i] - base[i] - 20.0 * std::log10(c)));
  }
  const double secs = seconds_since(t0);
  const bool ok = sineOk && std::abs(jit - 0.2) <= 1e-6 && scaleErr <= 1e-6 && secs < 10.0;
  report(5, "DSP ground truth", ok,
         "sine pitch " + fmt("%.3f", sine.pitchMeanHz) + " Hz, jitter " + fmt("%.2e", sine.jitter) + ", shimmer " +
             fmt("%.2e", sine.shimmer) + "; alternating-period jitter " + fmt("%.9f", jit) +
             "; intensity scaling error " + fmt("%.2e", scaleErr) + " dB; " + fmt("%.2f", secs) + " s");
}

// Pipeline shared by 6 and 9 ----------------------------------------------------------

struct PipelineRun {
  bool ok = true;
  std::string log;
};

PipelineRun pipeline(const fs::path& dir) {
  PipelineRun p;
  auto step = [&](const std::string& args) {
    if (!p.ok) return;
    const Outcome r = cli(args);
    if (r.code != 0) {
      p.ok = false;
      p.log = args + " -> exit " + std::to_string(r.code) + "\n" + r.output;
    }
  };
  const fs::path audio = dir / "audio";
  step("synth --out " + q(audio) + " --count 48 --seed 7");
  step("extract --manifest " + q(audio / "labels.jsonl") + " --out " + q(dir / "profiles.jsonl") +
       " --features-out " + q(dir / "features.csv") + " --seed 7");
  step("tags --profiles " + q(dir / "profiles.jsonl") + " --labels " + q(audio / "labels.jsonl") +
       " --fit --thresholds " + q(dir / "thresholds.json") + " --out " + q(dir / "tags.jsonl") + " --seed 7");
  step("tags --profiles " + q(dir / "profiles.jsonl") + " --labels " + q(audio / "labels.jsonl") + " --thresholds " +
       q(dir / "thresholds.json") + " --out " + q(dir / "tags_apply_1.jsonl") + " --seed 7");
  step("tags --profiles " + q(dir / "profiles.jsonl") + " --labels " + q(audio / "labels.jsonl") + " --thresholds " +
       q(dir / "thresholds.json") + " --out " + q(dir / "tags_apply_2.jsonl") + " --seed 7");
  step("train --features " + q(dir / "features.csv") + " --tags " + q(dir / "tags.jsonl") + " --out " +
       q(dir / "model.json") + " --batch-size 8 --epochs 30 --lr 0.01 --seed 7");
  step("eval --model " + q(dir / "model.json") + " --features " + q(dir / "features.csv") +
       " --queries angry,fear,sad,calm --labels " + q(audio / "labels.csv") + " --out " + q(dir / "report.json") +
       " --predictions " + q(dir / "predictions.csv") + " --seed 7");
  step("sweep --out " + q(dir / "sweep.csv") + " --seed 7");
  return p;
}

// 6 ------------------------------------------------------------------------------

void tagging(const fs::path& run) {
  Rng rng(6);
  int worstDev = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::set<double> distinct;
    while (distinct.size() < 100) distinct.insert(trial % 2 ? rng.normal() * 5.0 : rng.uniform(-1.0, 1.0) * 1e3);
    std::vector<double> v(distinct.begin(), distinct.end());
    rng.shuffle(v);
    const BinThresholds t = fit_bins(v, "x");
    std::map<Bin, int> c;
    for (double x : v) ++c[assign_bin(x, t)];
    worstDev = std::max({worstDev, std::abs(c[Bin::Low] - 30), std::abs(c[Bin::Mid] - 40), std::abs(c[Bin::High] - 30)});
  }

  const bool bytes = fs::exists(run / "tags_apply_1.jsonl") &&
                     read_text_file(run / "tags_apply_1.jsonl") == read_text_file(run / "tags_apply_2.jsonl");
  const auto vocab = TemplateSet{}.vocabulary();
  std::size_t tagCount = 0, outside = 0;
  if (fs::exists(run / "tags.jsonl")) {
    for (const auto& rec : read_jsonl(run / "tags.jsonl"))
      for (const auto& tag : rec.at("tags")) {
        ++tagCount;
        if (!vocab.contains(tag.get<std::string>())) ++outside;
      }
  }
  const bool ok = worstDev <= 1 && bytes && tagCount > 0 && outside == 0;
  report(6, "tagging determinism and occupancy", ok,
         "200 corpora of 100 distinct values, worst bin deviation " + std::to_string(worstDev) +
             "; apply byte-identical: " + (bytes ? "yes" : "no") + "; " + std::to_string(outside) + " of " +
             std::to_string(tagCount) + " tags outside the template vocabulary");
}

// 7 ------------------------------------------------------------------------------

void smoothing_benefit() {
  const auto t0 = Clock::now();
  RunConfig rc;
  rc.set("train.epochs", 30);
  rc.set("train.lr_projection", 1e-2);
  int wins = 0, ties = 0;
  double minUarSmooth = 1.0, minUarClap = 1.0;
  std::ostringstream per;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig smooth = rc.train_config();
    smooth.seed = seed;
    smooth.smoothing.gamma = 0.5;
    smooth.smoothing.beta = 0.1;
    TrainConfig clap = smooth;
    clap.objective = Objective::Clap;
    const FuzzyFixture fx = make_fuzzy_fixture(seed);
    const FixtureRunResult s = run_fixture(fx, smooth);
    const FixtureRunResult c = run_fixture(fx, clap);
    if (s.structureCorrelation >= c.structureCorrelation) ++wins;
    if (s.structureCorrelation == c.structureCorrelation) ++ties;
    minUarSmooth = std::min(minUarSmooth, s.report.uar);
    minUarClap = std::min(minUarClap, c.report.uar);
    per << (seed > 1 ? " " : "") << fmt("%.3f", s.structureCorrelation) << "/" << fmt("%.3f", c.structureCorrelation);
  }
  const double secs = seconds_since(t0);
  const bool ok = wins >= 8 && minUarSmooth >= 0.40 && minUarClap >= 0.40 && secs < 120.0;
  report(7, "smoothing benefit", ok,
         "smooth >= clap Spearman in " + std::to_string(wins) + "/10 seeds (" + std::to_string(ties) +
             " ties; smooth/clap: " + per.str() + "); min UAR smooth " + fmt("%.3f", minUarSmooth) + ", clap " +
             fmt("%.3f", minUarClap) + "; " + fmt("%.1f", secs) + " s");
}

// 8 ------------------------------------------------------------------------------

void sweep_shape(const fs::path& run) {
  if (!fs::exists(run / "sweep.csv")) {
    report(8, "sweep shape", false, "no sweep output");
    return;
  }
  std::map<std::string, double> uar;
  for (const auto& line : split_lines(read_text_file(run / "sweep.csv"))) {
    if (line.empty() || line.front() == '#' || line.starts_with("gamma")) continue;
    const auto cells = split_csv_row(line);
    uar[cells[1]] = std::stod(cells[2]);
  }
  const bool ok = uar.size() == 9 && uar.contains("0.1") && uar.contains("0.9") && uar["0.9"] <= uar["0.1"];
  report(8, "sweep shape", ok,
         "UAR at beta=0.1 " + fmt("%.4f", uar["0.1"]) + ", at beta=0.9 " + fmt("%.4f", uar["0.9"]) + " (" +
             std::to_string(uar.size()) + " grid points)");
}

// 9 ------------------------------------------------------------------------------

void end_to_end(const fs::path& a, const fs::path& b, const PipelineRun& ra, const PipelineRun& rb) {
  if (!ra.ok || !rb.ok) {
    report(9, "end-to-end determinism", false, "pipeline failed: " + (ra.ok ? rb.log : ra.log));
    return;
  }
  std::string differ;
  for (const char* f : {"profiles.jsonl", "tags.jsonl", "model.json", "report.json", "predictions.csv", "sweep.csv"})
    if (read_text_file(a / f) != read_text_file(b / f)) differ += std::string(" ") + f;
  report(9, "end-to-end determinism", differ.empty(),
         differ.empty() ? "two seed-7 runs produced byte-identical profiles, tags, model, report, predictions, sweep"
                        : "differing artifacts:" + differ);
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("smoothclap_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  try {
    gradient_fidelity(work);
    distribution_invariants();
    hard_target_recovery();
    golden_values();
    dsp_ground_truth();
    const PipelineRun ra = pipeline(work / "run_a");
    const PipelineRun rb = pipeline(work / "run_b");
    if (!ra.ok) std::cerr << ra.log << "\n";
    tagging(work / "run_a");
    smoothing_benefit();
    sweep_shape(work / "run_a");
    end_to_end(work / "run_a", work / "run_b", ra, rb);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance harness aborted: " << e.what() << std::endl;
    ++failures;
  }
  fs::remove_all(work);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
