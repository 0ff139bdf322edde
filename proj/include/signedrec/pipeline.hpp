#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "signedrec/evaluator.hpp"
#include "signedrec/mf.hpp"
#include "signedrec/trainer.hpp"

namespace signedrec {

// Model names: "bpr", "dpl", "spl", "sdpl", and "sdpl-random" (SDPL trained
// from random initialization instead of the DPL checkpoint).
struct ExperimentConfig {
  std::vector<std::string> models{"bpr", "dpl", "spl", "sdpl"};
  std::vector<double> ratios{0.7};
  int repeats = 5;
  std::uint64_t seed = 1;
  bool stratified = false;
  MFConfig mf;
  TrainConfig train;
  EvalConfig eval;
  // When set, checkpoints and embeddings of every run are written here.
  std::optional<std::filesystem::path> artifacts;
};

struct RunRecord {
  std::string model;
  double ratio = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<TrainReport> stages;
  RunMetrics metrics;
};

struct ExperimentResult {
  EvalReport report;
  std::vector<RunRecord> runs;
};

void validate_experiment(const ExperimentConfig& cfg, bool have_graph);

// Root seed of one repeat; split, mf, init and sampler streams derive from it.
std::uint64_t repeat_seed(std::uint64_t root, int repeat);

ExperimentResult run_experiment(const Dataset& ds, const SignedSocialGraph* graph,
                                const ExperimentConfig& cfg);

// Embeddings for one split: NNMF for explicit, WMF for implicit feedback,
// with untrained rows filled by the trained mean.
EmbeddingTable split_embeddings(const Dataset& ds, const Split& split, const ObservedSets& observed,
                                const MFConfig& cfg);

}  // namespace signedrec
