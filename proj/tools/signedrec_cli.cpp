// signedrec: ingest, synth, pipeline and recommend subcommands.
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "signedrec/config.hpp"
#include "signedrec/pipeline.hpp"
#include "signedrec/synth.hpp"

namespace fs = std::filesystem;
using namespace signedrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

// Wraps errors that stem from user input so main() can map them to exit 2.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("fnv1a64:{:016x}", h);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Line-oriented `key = value` manifest; the `config.` and `input.` entries
// are enough to replay a pipeline run.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void config(const KeyValues& kv) {
    for (const auto& [k, v] : kv) kv_["config." + k] = v;
  }
  void input(const std::string& name, const fs::path& path) {
    kv_["input." + name] = fs::absolute(path).string();
    kv_["digest." + name] = file_digest(path);
  }
  void artifact(const std::string& name, const fs::path& path) {
    kv_["artifact." + name] = fs::absolute(path).string();
  }
  void stage(const std::string& name) { kv_["stage." + name] = timestamp(); }
  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw UserError("cannot write file: " + path.string());
    out << "# signedrec run manifest\n";
    write_key_values(kv_, out);
  }

 private:
  KeyValues kv_;
};

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw UserError("missing file: " + p.string());
}

void set_threads(ExperimentConfig& cfg, unsigned threads, bool deterministic) {
  const unsigned t = deterministic ? 1u : std::max(1u, threads);
  cfg.eval.threads = cfg.mf.threads = t;
}

struct Common {
  unsigned threads = 1;
  bool deterministic = false;
  std::string log_level = "info";
};

int cmd_ingest(const std::string& ratings, const std::string& trust, const std::string& distrust,
               const std::string& kind_text, const std::string& out_dir) {
  const auto kind = parse_feedback_kind(kind_text);
  require_file(ratings);
  if (trust.empty() != distrust.empty()) {
    throw UserError("--trust and --distrust must be given together");
  }
  if (!trust.empty()) {
    require_file(trust);
    require_file(distrust);
  }
  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.set("command", "ingest");
  manifest.set("config.kind", to_string(kind));
  manifest.input("ratings", ratings);
  manifest.stage("start");
  const auto ds = ingest_interactions(ratings, kind);
  const fs::path out(out_dir);
  write_dataset(ds, out / "dataset.txt");
  manifest.artifact("dataset", out / "dataset.txt");
  spdlog::info("{} users, {} items, {} interactions", ds.n_users(), ds.n_items(), ds.size());
  if (!trust.empty()) {
    manifest.input("trust", trust);
    manifest.input("distrust", distrust);
    GraphIngestStats stats;
    const auto graph = ingest_signed_graph(trust, distrust, ds.user_ids(), &stats);
    write_graph(graph, out / "graph.txt");
    manifest.artifact("graph", out / "graph.txt");
    spdlog::info("{} trust and {} distrust edges", graph.trust_edges(), graph.distrust_edges());
  }
  manifest.stage("done");
  manifest.write(out / "manifest.txt");
  return kExitOk;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_dir) {
  const auto data = generate_synthetic(cfg);
  const fs::path out(out_dir);
  fs::create_directories(out);
  Manifest manifest;
  manifest.set("command", "synth");
  manifest.config(to_key_values(cfg));
  manifest.stage("start");
  write_dataset(data.dataset, out / "dataset.txt");
  write_interactions_tsv(data.dataset, out / "ratings.tsv");
  write_graph(data.graph, out / "graph.txt");
  manifest.artifact("dataset", out / "dataset.txt");
  manifest.artifact("ratings", out / "ratings.tsv");
  manifest.artifact("graph", out / "graph.txt");
  manifest.stage("done");
  manifest.write(out / "manifest.txt");
  spdlog::info("{} users, {} items, {} interactions, {} trust / {} distrust edges",
               data.dataset.n_users(), data.dataset.n_items(), data.dataset.size(),
               data.graph.trust_edges(), data.graph.distrust_edges());
  return kExitOk;
}

int cmd_pipeline(const ExperimentConfig& cfg, const KeyValues& snapshot, const fs::path& data_dir,
                 const fs::path& out, bool save_checkpoints) {
  require_file(data_dir / "dataset.txt");
  const bool have_graph = fs::is_regular_file(data_dir / "graph.txt");
  validate_experiment(cfg, have_graph);

  fs::create_directories(out);
  Manifest manifest;
  manifest.set("command", "pipeline");
  manifest.config(snapshot);
  manifest.input("data", data_dir / "dataset.txt");
  if (have_graph) manifest.input("graph", data_dir / "graph.txt");
  manifest.stage("start");

  const auto ds = read_dataset(data_dir / "dataset.txt");
  std::optional<SignedSocialGraph> graph;
  if (have_graph) graph = read_graph(data_dir / "graph.txt");
  manifest.stage("loaded");

  auto run_cfg = cfg;
  if (save_checkpoints) run_cfg.artifacts = out / "runs";
  const auto result = run_experiment(ds, graph ? &*graph : nullptr, run_cfg);
  manifest.stage("evaluated");

  {
    std::ofstream table(out / "report.txt");
    result.report.write_table(table);
    std::ofstream csv(out / "report.csv");
    result.report.write_csv(csv);
    std::ofstream seeds(out / "per_seed.csv");
    result.report.write_per_seed(seeds);
  }
  manifest.artifact("report_table", out / "report.txt");
  manifest.artifact("report_csv", out / "report.csv");
  manifest.artifact("per_seed", out / "per_seed.csv");
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& run = result.runs[r];
    const auto tag = fmt::format("run.{}.{}.{}", run.model, run.ratio, run.repeat);
    manifest.set(tag + ".seed", fmt::format("{}", run.seed));
    if (!run.stages.empty() && !run.stages.back().checkpoint.empty()) {
      manifest.artifact(tag + ".checkpoint", run.stages.back().checkpoint);
    }
  }
  if (save_checkpoints) manifest.artifact("runs", out / "runs");
  manifest.stage("done");
  manifest.write(out / "manifest.txt");
  result.report.write_table(std::cout);
  return kExitOk;
}

int cmd_recommend(const fs::path& data_dir, const fs::path& checkpoint, const std::string& split_path,
                  const std::string& user, int k) {
  require_file(data_dir / "dataset.txt");
  require_file(checkpoint);
  if (k < 1) throw UserError("-k must be >= 1");
  const auto ds = read_dataset(data_dir / "dataset.txt");
  const auto u = ds.user_ids().find(user);
  if (!u) throw UserError("unknown user id: " + user);
  const auto scorer = read_checkpoint(checkpoint);
  if (scorer->n_users() != ds.n_users() || scorer->n_items() != ds.n_items()) {
    throw UserError("checkpoint does not match the dataset");
  }
  Split split;
  if (!split_path.empty()) {
    require_file(split_path);
    split = read_split(split_path);
  } else {
    for (std::size_t r = 0; r < ds.size(); ++r) split.train.push_back(r);
  }
  const auto observed = observed_sets(split, ds);
  const auto seen = observed.observed(*u);
  std::vector<ItemId> candidates;
  for (ItemId i = 0; i < ds.n_items(); ++i) {
    if (!std::binary_search(seen.begin(), seen.end(), i)) candidates.push_back(i);
  }
  if (candidates.empty()) {
    spdlog::warn("user {} has observed every item; nothing to recommend", user);
    return kExitOk;
  }
  const auto ranked = score_all_items(scorer->scoring_table(), *u, candidates);
  for (std::size_t r = 0; r < ranked.size() && r < std::size_t(k); ++r) {
    std::cout << ds.item_ids().external(ranked[r].item) << '\t'
              << fmt::format("{:.6f}", ranked[r].probability) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust/distrust-aware pairwise ranking recommender"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker threads for MF and evaluation")
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", common.deterministic,
               "Serialize all reductions for bitwise-reproducible output");
  app.add_option("--log-level", common.log_level, "trace|debug|info|warn|error|off");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse rating and trust/distrust files into a cache");
  std::string ratings, trust, distrust, kind = "explicit", ingest_out;
  ingest->add_option("--ratings", ratings, "user<TAB>item<TAB>value file")->required();
  ingest->add_option("--trust", trust, "user<TAB>user trust edges");
  ingest->add_option("--distrust", distrust, "user<TAB>user distrust edges");
  ingest->add_option("--kind", kind, "explicit|implicit");
  ingest->add_option("--out", ingest_out, "Cache directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  SynthConfig synth_cfg;
  std::string synth_config_file, synth_kind, synth_out;
  synth->add_option("--config", synth_config_file, "key = value file");
  synth->add_option("--users", synth_cfg.users);
  synth->add_option("--items", synth_cfg.items);
  synth->add_option("--clusters", synth_cfg.clusters);
  synth->add_option("--niches", synth_cfg.niches);
  synth->add_option("--density", synth_cfg.density);
  synth->add_option("--friends", synth_cfg.friends_per_user);
  synth->add_option("--foes", synth_cfg.foes_per_user);
  synth->add_option("--kind", synth_kind, "explicit|implicit");
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--out", synth_out, "Output directory")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "MF, training and evaluation over seeds and ratios");
  std::string data_dir, pipeline_config, pipeline_out = "report", from_manifest;
  std::string modes, ratios_text;
  std::optional<double> ratio;
  std::optional<int> repeats, epochs, pretrain_epochs, dim, hidden_layers;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, lambda;
  std::optional<std::size_t> batch_size, negatives;
  bool save_checkpoints = false, unfreeze = false;
  pipeline->add_option("--data", data_dir, "Directory with dataset.txt and optional graph.txt");
  pipeline->add_option("--config", pipeline_config, "key = value file; flags override it");
  pipeline->add_option("--from-manifest", from_manifest, "Replay the configuration of a manifest");
  pipeline->add_option("--mode,--modes", modes, "Comma list of bpr,dpl,spl,sdpl,sdpl-random");
  pipeline->add_option("--ratio", ratio, "Train fraction");
  pipeline->add_option("--ratios", ratios_text, "Comma list of train fractions");
  pipeline->add_option("--repeats", repeats);
  pipeline->add_option("--seed", seed);
  pipeline->add_option("--epochs", epochs);
  pipeline->add_option("--pretrain-epochs", pretrain_epochs);
  pipeline->add_option("--dim", dim);
  pipeline->add_option("--hidden-layers", hidden_layers);
  pipeline->add_option("--lr", lr);
  pipeline->add_option("--lambda", lambda);
  pipeline->add_option("--batch-size", batch_size);
  pipeline->add_option("--negatives", negatives);
  pipeline->add_flag("--trainable-embeddings", unfreeze, "Let the tower update U and V");
  pipeline->add_flag("--save-checkpoints", save_checkpoints, "Keep splits, embeddings, checkpoints");
  pipeline->add_option("--out", pipeline_out, "Report directory");

  // recommend
  auto* recommend = app.add_subcommand("recommend", "Top-k unobserved items for one user");
  std::string rec_data, rec_ckpt, rec_split, rec_user;
  int rec_k = 10;
  recommend->add_option("--data", rec_data, "Directory with dataset.txt")->required();
  recommend->add_option("--checkpoint", rec_ckpt)->required();
  recommend->add_option("--split", rec_split, "Split file; its train part defines observed items");
  recommend->add_option("--user", rec_user, "External user id")->required();
  recommend->add_option("-k", rec_k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(common.log_level));
    spdlog::set_pattern("[%l] %v");

    if (*ingest) return cmd_ingest(ratings, trust, distrust, kind, ingest_out);

    if (*synth) {
      SynthConfig cfg;
      if (!synth_config_file.empty()) apply_config(read_config_file(synth_config_file), cfg);
      // Flags given on the command line override the file.
      if (synth->count("--users")) cfg.users = synth_cfg.users;
      if (synth->count("--items")) cfg.items = synth_cfg.items;
      if (synth->count("--clusters")) cfg.clusters = synth_cfg.clusters;
      if (synth->count("--niches")) cfg.niches = synth_cfg.niches;
      if (synth->count("--density")) cfg.density = synth_cfg.density;
      if (synth->count("--friends")) cfg.friends_per_user = synth_cfg.friends_per_user;
      if (synth->count("--foes")) cfg.foes_per_user = synth_cfg.foes_per_user;
      if (synth->count("--seed")) cfg.seed = synth_cfg.seed;
      if (!synth_kind.empty()) cfg.kind = parse_feedback_kind(synth_kind);
      return cmd_synth(cfg, synth_out);
    }

    if (*pipeline) {
      ExperimentConfig cfg;
      if (!from_manifest.empty()) {
        require_file(from_manifest);
        KeyValues replay;
        for (const auto& [k, v] : read_config_file(from_manifest)) {
          if (k.starts_with("config.")) replay[k.substr(7)] = v;
          if (k == "input.data" && data_dir.empty()) data_dir = fs::path(v).parent_path().string();
        }
        apply_config(replay, cfg);
      }
      if (!pipeline_config.empty()) apply_config(read_config_file(pipeline_config), cfg);
      if (data_dir.empty()) throw UserError("--data is required");
      KeyValues flags;
      if (!modes.empty()) flags["models"] = modes;
      if (ratio) flags["ratios"] = fmt::format("{}", *ratio);
      if (!ratios_text.empty()) flags["ratios"] = ratios_text;
      if (repeats) flags["repeats"] = fmt::format("{}", *repeats);
      if (seed) flags["seed"] = fmt::format("{}", *seed);
      if (epochs) flags["epochs"] = fmt::format("{}", *epochs);
      if (pretrain_epochs) flags["pretrain_epochs"] = fmt::format("{}", *pretrain_epochs);
      if (dim) flags["dim"] = fmt::format("{}", *dim);
      if (hidden_layers) flags["hidden_layers"] = fmt::format("{}", *hidden_layers);
      if (lr) flags["learning_rate"] = fmt::format("{}", *lr);
      if (lambda) flags["lambda"] = fmt::format("{}", *lambda);
      if (batch_size) flags["batch_size"] = fmt::format("{}", *batch_size);
      if (negatives) flags["negatives"] = fmt::format("{}", *negatives);
      if (unfreeze) flags["trainable_embeddings"] = "true";
      apply_config(flags, cfg);
      if (app.count("--threads") || common.deterministic) {
        set_threads(cfg, common.threads, common.deterministic);
      }
      try {
        validate_experiment(cfg, true);
      } catch (const ContractError& e) {
        throw UserError(e.what());
      }
      return cmd_pipeline(cfg, to_key_values(cfg), data_dir, pipeline_out, save_checkpoints);
    }

    if (*recommend) return cmd_recommend(rec_data, rec_ckpt, rec_split, rec_user, rec_k);
  } catch (const UserError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const ConflictError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    spdlog::error("internal failure: {}", e.what());
    return kExitInternal;
  }
  return kExitOk;
}
