#include "signedrec/pipeline.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace signedrec {

namespace {

constexpr std::array<std::string_view, 5> kModels{"bpr", "dpl", "spl", "sdpl", "sdpl-random"};

bool wants(const ExperimentConfig& cfg, std::string_view model) {
  return std::find(cfg.models.begin(), cfg.models.end(), model) != cfg.models.end();
}

}  // namespace

void validate_experiment(const ExperimentConfig& cfg, bool have_graph) {
  if (cfg.models.empty()) throw ValidationError("no model selected");
  for (const auto& model : cfg.models) {
    if (std::find(kModels.begin(), kModels.end(), model) == kModels.end()) {
      throw ValidationError("unknown model: " + model);
    }
    const bool social = model == "spl" || model == "sdpl" || model == "sdpl-random";
    if (social && !have_graph) {
      throw ValidationError("model " + model +
                            " needs trust/distrust files; use dpl or bpr without a graph");
    }
  }
  if (cfg.ratios.empty()) throw ValidationError("no split ratio given");
  for (const double r : cfg.ratios) {
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("split ratio must lie in (0, 1)");
  }
  if (cfg.repeats < 1) throw ValidationError("repeats must be >= 1");
  validate_eval_config(cfg.eval);
  validate_tower_shape(cfg.mf.dim, cfg.train.hidden_layers);
}

std::uint64_t repeat_seed(std::uint64_t root, int repeat) {
  return derive_seed(root, "repeat." + std::to_string(repeat));
}

EmbeddingTable split_embeddings(const Dataset& ds, const Split& split, const ObservedSets& observed,
                                const MFConfig& cfg) {
  std::vector<Interaction> train;
  train.reserve(split.train.size());
  for (const auto idx : split.train) train.push_back(ds.interactions()[idx]);
  auto result = ds.kind() == FeedbackKind::Explicit
                    ? factorize_explicit(train, ds.n_users(), ds.n_items(), cfg)
                    : factorize_implicit(train, ds.n_users(), ds.n_items(), cfg);
  if (!result.converged) {
    spdlog::info("matrix factorization stopped after {} iterations without meeting the tolerance",
                 result.objective.size() - 1);
  }
  fill_untrained_rows(result.table, observed);
  return std::move(result.table);
}

ExperimentResult run_experiment(const Dataset& ds, const SignedSocialGraph* graph,
                                const ExperimentConfig& cfg) {
  validate_experiment(cfg, graph != nullptr);
  if (graph && graph->n_users() != ds.n_users()) {
    throw ContractError("graph and dataset disagree on the user count");
  }
  ExperimentResult out;
  for (const double ratio : cfg.ratios) {
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const auto seed = repeat_seed(cfg.seed, rep);
      const auto split = split_ratings(ds, ratio, derive_seed(seed, "split"), cfg.stratified);
      const auto observed = observed_sets(split, ds);
      auto mf_cfg = cfg.mf;
      mf_cfg.seed = derive_seed(seed, "mf");
      const auto embeddings = split_embeddings(ds, split, observed, mf_cfg);
      auto train_cfg = cfg.train;
      train_cfg.seed = seed;
      spdlog::info("ratio {} repeat {}: {} train / {} test interactions", ratio, rep,
                   split.train.size(), split.test.size());

      std::optional<std::filesystem::path> dir;
      if (cfg.artifacts) {
        dir = *cfg.artifacts / fmt::format("ratio{}_rep{}", ratio, rep);
        std::filesystem::create_directories(*dir);
        write_split(split, *dir / "split.txt");
        write_embeddings(embeddings,
                         ds.kind() == FeedbackKind::Explicit ? MFMode::NonNegative : MFMode::Weighted,
                         mf_cfg.seed, *dir / "embeddings.bin");
      }
      auto record = [&](const std::string& model, const Scorer& scorer,
                        std::vector<TrainReport> stages) {
        RunRecord run{model, ratio, rep, seed, std::move(stages), {}};
        run.metrics = evaluate_scorer(scorer, ds, split, observed, cfg.eval);
        if (dir) {
          const auto path = *dir / (model + ".ckpt");
          write_checkpoint(scorer, {seed, run.stages.back().stage}, path);
          run.stages.back().checkpoint = path.string();
        }
        spdlog::info("  {:<12} NDCG@{} = {:.4f}", model, cfg.eval.ks.front(),
                     run.metrics.all.ndcg.at(cfg.eval.ks.front()));
        out.report.add(model, ratio, run.metrics);
        out.runs.push_back(std::move(run));
      };

      bool tower_done = false;
      for (const auto& model : cfg.models) {
        if (model == "bpr") {
          TrainReport r;
          const auto s = train_bpr(observed, embeddings, train_cfg, &r);
          record(model, s, {r});
        } else if (model == "spl") {
          TrainReport r;
          const auto s = train_spl(observed, graph, embeddings, train_cfg, &r);
          record(model, s, {r});
        } else if (model == "dpl" || model == "sdpl") {
          // SDPL continues from the DPL checkpoint of the same repeat.
          if (tower_done) continue;
          tower_done = true;
          TrainReport pre;
          const auto dpl = pretrain_dpl(observed, embeddings, train_cfg, &pre);
          if (wants(cfg, "dpl")) record("dpl", dpl, {pre});
          if (wants(cfg, "sdpl")) {
            TrainReport fine;
            const auto sdpl = train_sdpl(observed, graph, embeddings, train_cfg, &dpl, &fine);
            record("sdpl", sdpl, {pre, fine});
          }
        } else if (model == "sdpl-random") {
          TrainReport r;
          const auto s = train_sdpl(observed, graph, embeddings, train_cfg, nullptr, &r);
          record(model, s, {r});
        }
      }
    }
  }
  return out;
}

}  // namespace signedrec
