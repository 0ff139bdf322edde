#include "signedrec/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "signedrec/linear.hpp"
#include "signedrec/tower.hpp"

namespace signedrec {

std::size_t ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols,
                              bool trainable) {
  Block b{std::move(name), values_.size(), rows, cols, trainable};
  values_.resize(values_.size() + b.size(), 0.0);
  blocks_.push_back(std::move(b));
  return blocks_.size() - 1;
}

ParameterSet::Map ParameterSet::map(std::span<double> buffer, std::size_t block) const {
  const auto& b = blocks_.at(block);
  if (buffer.size() != values_.size()) throw ContractError("buffer does not match parameter layout");
  return Map(buffer.data() + b.offset, b.rows, b.cols);
}

ParameterSet::ConstMap ParameterSet::map(std::span<const double> buffer, std::size_t block) const {
  const auto& b = blocks_.at(block);
  if (buffer.size() != values_.size()) throw ContractError("buffer does not match parameter layout");
  return ConstMap(buffer.data() + b.offset, b.rows, b.cols);
}

std::size_t ParameterSet::find(std::string_view name) const {
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].name == name) return k;
  }
  throw ContractError("no parameter block named " + std::string(name));
}

const ParameterSet::Block& ParameterSet::block_of(std::size_t k) const {
  for (const auto& b : blocks_) {
    if (k >= b.offset && k < b.offset + b.size()) return b;
  }
  throw ContractError("parameter index out of range");
}

double ParameterSet::trainable_squared_norm() const {
  double sum = 0.0;
  for (const auto& b : blocks_) {
    if (!b.trainable) continue;
    for (std::size_t k = b.offset; k < b.offset + b.size(); ++k) sum += values_[k] * values_[k];
  }
  return sum;
}

std::string to_string(ScorerKind kind) { return kind == ScorerKind::Tower ? "tower" : "linear"; }

double Scorer::loss(std::span<const PartialRelation> batch, double lambda) const {
  std::vector<double> scratch(params_.size());
  return loss_and_gradients(batch, lambda, scratch);
}

void Scorer::add_regularization(double lambda, double& loss, std::span<double> grad) const {
  if (lambda < 0.0) throw ContractError("lambda must be >= 0");
  if (lambda == 0.0) return;
  const auto values = params_.values();
  for (const auto& b : params_.blocks()) {
    if (!b.trainable) continue;
    for (std::size_t k = b.offset; k < b.offset + b.size(); ++k) {
      loss += lambda * values[k] * values[k];
      grad[k] += 2.0 * lambda * values[k];
    }
  }
}

void Scorer::check_gradient(std::span<const double> grad) const {
  for (const auto& b : params_.blocks()) {
    for (std::size_t k = b.offset; k < b.offset + b.size(); ++k) {
      if (!std::isfinite(grad[k])) throw NumericError("non-finite gradient in block " + b.name);
      if (!std::isfinite(params_.values()[k])) {
        throw NumericError("non-finite value in parameter block " + b.name);
      }
    }
  }
}

double softplus_neg(double z) {
  // -ln sigma(z) = ln(1 + e^{-z})
  const double x = -z;
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double relation_probability(double x_ui, double x_uj) { return (x_ui - x_uj) / 2.0 + 0.5; }

double predict_probability(const ScoringTable& table, UserId u, ItemId i, ItemId j) {
  return relation_probability(sigmoid(table.logit(u, i)), sigmoid(table.logit(u, j)));
}

std::vector<RankedItem> score_all_items(const ScoringTable& table, UserId u,
                                        std::span<const ItemId> candidates) {
  std::vector<std::pair<double, ItemId>> logits;
  logits.reserve(candidates.size());
  for (const auto i : candidates) logits.emplace_back(table.logit(u, i), i);
  // sigma is monotone, so ordering by logit equals ordering by x_ui; the
  // logit keeps ties that sigma would create through saturation apart.
  std::sort(logits.begin(), logits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<RankedItem> out;
  out.reserve(logits.size());
  for (const auto& [s, i] : logits) out.push_back({i, sigmoid(s)});
  return out;
}

void write_checkpoint(const Scorer& scorer, const CheckpointMeta& meta,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  const auto& params = scorer.parameters();
  out << "signedrec-checkpoint 1\n"
      << "kind " << to_string(scorer.kind()) << '\n'
      << "d " << scorer.dim() << '\n'
      << "h " << scorer.hidden_layers() << '\n'
      << "users " << scorer.n_users() << '\n'
      << "items " << scorer.n_items() << '\n'
      << "seed " << meta.seed << '\n'
      << "stage " << (meta.stage.empty() ? "train" : meta.stage) << '\n'
      << "blocks " << params.blocks().size() << '\n';
  for (const auto& b : params.blocks()) {
    out << b.name << ' ' << b.rows << ' ' << b.cols << ' ' << (b.trainable ? 1 : 0) << '\n';
  }
  out << "data\n";
  out.write(reinterpret_cast<const char*>(params.values().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
}

std::unique_ptr<Scorer> read_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("checkpoint " + path.string() + ": " + why, 0);
  };
  auto key = [&](std::string_view expected) {
    std::string k;
    if (!(in >> k) || k != expected) throw fail("expected " + std::string(expected));
  };
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "signedrec-checkpoint" || version != 1) throw fail("bad magic");
  std::string kind;
  int d = 0;
  int h = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  CheckpointMeta local;
  std::size_t n_blocks = 0;
  key("kind");
  in >> kind;
  key("d");
  in >> d;
  key("h");
  in >> h;
  key("users");
  in >> n;
  key("items");
  in >> m;
  key("seed");
  in >> local.seed;
  key("stage");
  in >> local.stage;
  key("blocks");
  in >> n_blocks;
  std::vector<ParameterSet::Block> layout(n_blocks);
  for (auto& b : layout) {
    int trainable = 0;
    in >> b.name >> b.rows >> b.cols >> trainable;
    b.trainable = trainable != 0;
  }
  key("data");
  in.get();
  if (!in) throw fail("truncated header");

  std::unique_ptr<Scorer> scorer;
  if (kind == "tower") {
    const auto emb = std::find_if(layout.begin(), layout.end(),
                                  [](const auto& b) { return b.name == "user_embedding"; });
    const bool trainable_embeddings = emb != layout.end() && emb->trainable;
    const bool shared = std::none_of(layout.begin(), layout.end(),
                                     [](const auto& b) { return b.name == "item_neg.W1"; });
    scorer = std::make_unique<TowerNetwork>(TowerShape{d, h, n, m, shared}, trainable_embeddings);
  } else if (kind == "linear") {
    scorer = std::make_unique<LinearScorer>(n, m, d);
  } else {
    throw fail("unknown scorer kind " + kind);
  }
  auto& params = scorer->parameters();
  if (params.blocks().size() != layout.size()) throw fail("block count mismatch");
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& want = params.blocks()[k];
    const auto& got = layout[k];
    if (want.name != got.name || want.rows != got.rows || want.cols != got.cols ||
        want.trainable != got.trainable) {
      throw fail("block layout mismatch at " + got.name);
    }
  }
  in.read(reinterpret_cast<char*>(params.values().data()),
          static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!in) throw fail("truncated data");
  if (meta) *meta = local;
  return scorer;
}

}  // namespace signedrec
