#pragma once

#include <span>
#include <string>
#include <vector>

#include "signedrec/criteria.hpp"
#include "signedrec/data.hpp"
#include "signedrec/linear.hpp"
#include "signedrec/mf.hpp"
#include "signedrec/sampler.hpp"
#include "signedrec/tower.hpp"

namespace signedrec {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

enum class TrainMode { BPR, DPL, SPL, SDPL };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view text);

struct TrainConfig {
  std::size_t batch_size = 512;
  double learning_rate = 1e-4;
  double lambda = 1e-4;
  int epochs = 30;           // single-stage runs and the SDPL fine-tuning stage
  int pretrain_epochs = 30;  // DPL stage feeding SDPL
  std::size_t negatives_per_positive = 5;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int hidden_layers = 4;
  bool trainable_embeddings = false;
  bool shared_item_branches = true;
  // Criterion weights for the social stages (SPL, SDPL).
  CaseWeights case_weights = kUniformCases;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct TrainReport {
  std::string stage;
  std::vector<double> epoch_loss;  // mean loss per relation
  double wall_seconds = 0.0;
  std::size_t relations = 0;
  std::size_t fallback_draws = 0;  // social pool empty, sampled from I-_u instead
  std::size_t skipped_draws = 0;   // no negative available at all
  bool diverged = false;
  std::string checkpoint;
};

// Generic stochastic training loop: every train positive of every user
// contributes `negatives_per_positive` relations per epoch, each drawn from a
// fresh context (sampled negatives, one friend and one foe drawn uniformly).
// Adam state starts from zero. `sampler_stream` names the RNG stream.
TrainReport train_scorer(Scorer& scorer, const ObservedSets& observed,
                         const SignedSocialGraph* graph, SamplingMode sampling,
                         const CaseWeights& weights, int epochs, const TrainConfig& cfg,
                         std::string_view sampler_stream = "sampler");

// DPL: tower from random initialization, criterion 1 only, unconditional
// negatives. Also serves as the pretraining stage of SDPL.
TowerNetwork pretrain_dpl(const ObservedSets& observed, const EmbeddingTable& embeddings,
                          const TrainConfig& cfg, TrainReport* report = nullptr);

// SDPL: tower fine-tuned with all six criteria and social negatives. With
// `init` the parameters start from that checkpoint; otherwise from the same
// random initialization DPL uses.
TowerNetwork train_sdpl(const ObservedSets& observed, const SignedSocialGraph* graph,
                        const EmbeddingTable& embeddings, const TrainConfig& cfg,
                        const TowerNetwork* init = nullptr, TrainReport* report = nullptr);

// SPL: same criteria and sampler as SDPL on the shallow scorer.
LinearScorer train_spl(const ObservedSets& observed, const SignedSocialGraph* graph,
                       const EmbeddingTable& embeddings, const TrainConfig& cfg,
                       TrainReport* report = nullptr);

// BPR: shallow scorer, criterion 1 only, unconditional negatives.
LinearScorer train_bpr(const ObservedSets& observed, const EmbeddingTable& embeddings,
                       const TrainConfig& cfg, TrainReport* report = nullptr);

}  // namespace signedrec
