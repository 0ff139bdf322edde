#include "signedrec/trainer.hpp"

#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

namespace signedrec {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractError("adam_step: shape mismatch");
  }
  ++state.t;
  const double t = double(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::BPR: return "bpr";
    case TrainMode::DPL: return "dpl";
    case TrainMode::SPL: return "spl";
    case TrainMode::SDPL: return "sdpl";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "bpr") return TrainMode::BPR;
  if (text == "dpl") return TrainMode::DPL;
  if (text == "spl") return TrainMode::SPL;
  if (text == "sdpl") return TrainMode::SDPL;
  throw ValidationError("unknown mode: " + std::string(text));
}

namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (cfg.learning_rate < 0.0 || cfg.lambda < 0.0) {
    throw ContractError("learning_rate and lambda must be >= 0");
  }
  if (cfg.negatives_per_positive < 1) throw ContractError("negatives_per_positive must be >= 1");
  if (cfg.epochs < 0 || cfg.pretrain_epochs < 0) throw ContractError("epochs must be >= 0");
}

std::optional<NeighborView> pick_neighbor(std::span<const UserId> candidates,
                                          const ObservedSets& observed, Rng& rng) {
  if (candidates.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const UserId who = candidates[pick(rng)];
  return NeighborView{who, observed.observed(who)};
}

}  // namespace

TrainReport train_scorer(Scorer& scorer, const ObservedSets& observed,
                         const SignedSocialGraph* graph, SamplingMode sampling,
                         const CaseWeights& weights, int epochs, const TrainConfig& cfg,
                         std::string_view sampler_stream) {
  check_config(cfg);
  if (scorer.n_users() != observed.n_users() || scorer.n_items() != observed.n_items()) {
    throw ContractError("scorer shape does not match the observed sets");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  auto rng = make_rng(cfg.seed, sampler_stream);
  NegativeSampler sampler(observed, graph,
                          SamplerConfig{cfg.negatives_per_positive, sampling});
  const bool social = sampling == SamplingMode::Social;

  std::vector<std::pair<UserId, ItemId>> positives;
  for (UserId u = 0; u < observed.n_users(); ++u) {
    for (const auto i : observed.observed(u)) positives.emplace_back(u, i);
  }

  auto& params = scorer.parameters();
  AdamState adam(params.size());
  const auto adam_cfg = cfg.adam();
  std::vector<double> grad(params.size());
  std::vector<PartialRelation> batch;
  batch.reserve(cfg.batch_size);
  std::vector<double> last_good(params.values().begin(), params.values().end());

  double epoch_loss = 0.0;
  std::size_t epoch_relations = 0;
  auto step = [&] {
    const double loss = scorer.loss_and_gradients(batch, cfg.lambda, grad);
    adam_step(params.values(), grad, adam, adam_cfg);
    epoch_loss += loss;
    epoch_relations += batch.size();
    batch.clear();
  };

  try {
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::copy(params.values().begin(), params.values().end(), last_good.begin());
      epoch_loss = 0.0;
      epoch_relations = 0;
      std::shuffle(positives.begin(), positives.end(), rng);
      for (const auto& [u, pos] : positives) {
        const auto drawn = sampler.draw(u, 1, rng);
        if (drawn.draw.skipped) {
          ++report.skipped_draws;
          continue;
        }
        CriterionContext ctx;
        ctx.user = u;
        ctx.observed = observed.observed(u);
        ctx.negatives = drawn.draw.items;
        // A fallback draw may hit neighbor items, so it runs without social
        // context (criterion 1 only).
        if (social && !drawn.fell_back) {
          ctx.friend_view = pick_neighbor(graph->friends(u), observed, rng);
          ctx.foe_view = pick_neighbor(graph->foes(u), observed, rng);
        }
        const RelationDrawer drawer(ctx);
        for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
          auto rel = drawer.draw(weights, rng);
          if (!rel) break;
          if (!relation_holds(*rel, ctx)) {
            throw ContractError("sampled relation violates its criterion");
          }
          batch.push_back(*rel);
          if (batch.size() == cfg.batch_size) step();
        }
      }
      if (!batch.empty()) step();
      const double mean = epoch_relations ? epoch_loss / double(epoch_relations) : 0.0;
      if (!std::isfinite(mean)) throw NumericError("non-finite epoch loss");
      report.epoch_loss.push_back(mean);
      report.relations += epoch_relations;
    }
  } catch (const NumericError& e) {
    spdlog::error("training diverged ({}); restoring the last finite parameters", e.what());
    std::copy(last_good.begin(), last_good.end(), params.values().begin());
    report.diverged = true;
  }
  report.fallback_draws = sampler.fallbacks();
  if (report.fallback_draws > 0) {
    spdlog::info("{} social draws fell back to unconditional negatives", report.fallback_draws);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TowerNetwork pretrain_dpl(const ObservedSets& observed, const EmbeddingTable& embeddings,
                          const TrainConfig& cfg, TrainReport* report) {
  const TowerShape shape{embeddings.dim(), cfg.hidden_layers, observed.n_users(),
                         observed.n_items(), cfg.shared_item_branches};
  auto net = TowerNetwork::initialized(shape, embeddings, interaction_frequency(observed),
                                       cfg.seed, cfg.trainable_embeddings);
  auto r = train_scorer(net, observed, nullptr, SamplingMode::Unconditional, kFirstCaseOnly,
                        cfg.pretrain_epochs, cfg);
  r.stage = "pretrain";
  if (report) *report = std::move(r);
  return net;
}

TowerNetwork train_sdpl(const ObservedSets& observed, const SignedSocialGraph* graph,
                        const EmbeddingTable& embeddings, const TrainConfig& cfg,
                        const TowerNetwork* init, TrainReport* report) {
  if (graph == nullptr) {
    throw ValidationError("SDPL needs trust/distrust data; use the dpl mode without a graph");
  }
  if (graph->n_users() != observed.n_users()) throw ContractError("graph/user count mismatch");
  const TowerShape shape{embeddings.dim(), cfg.hidden_layers, observed.n_users(),
                         observed.n_items(), cfg.shared_item_branches};
  TowerNetwork net = init ? *init
                          : TowerNetwork::initialized(shape, embeddings,
                                                      interaction_frequency(observed), cfg.seed,
                                                      cfg.trainable_embeddings);
  if (net.shape().dim != shape.dim || net.shape().hidden_layers != shape.hidden_layers ||
      net.n_users() != shape.n_users || net.n_items() != shape.n_items ||
      net.shape().shared_item_branches != shape.shared_item_branches) {
    throw ContractError("initial checkpoint is not dimension-compatible");
  }
  auto r = train_scorer(net, observed, graph, SamplingMode::Social, cfg.case_weights, cfg.epochs,
                        cfg, init ? "sampler.finetune" : "sampler");
  r.stage = "finetune";
  if (report) *report = std::move(r);
  return net;
}

LinearScorer train_spl(const ObservedSets& observed, const SignedSocialGraph* graph,
                       const EmbeddingTable& embeddings, const TrainConfig& cfg,
                       TrainReport* report) {
  if (graph == nullptr) {
    throw ValidationError("SPL needs trust/distrust data; use the bpr mode without a graph");
  }
  auto scorer = LinearScorer::initialized(embeddings, interaction_frequency(observed));
  auto r = train_scorer(scorer, observed, graph, SamplingMode::Social, cfg.case_weights,
                        cfg.epochs, cfg);
  r.stage = "train";
  if (report) *report = std::move(r);
  return scorer;
}

LinearScorer train_bpr(const ObservedSets& observed, const EmbeddingTable& embeddings,
                       const TrainConfig& cfg, TrainReport* report) {
  auto scorer = LinearScorer::initialized(embeddings, interaction_frequency(observed));
  auto r = train_scorer(scorer, observed, nullptr, SamplingMode::Unconditional, kFirstCaseOnly,
                        cfg.epochs, cfg);
  r.stage = "train";
  if (report) *report = std::move(r);
  return scorer;
}

}  // namespace signedrec
