#include "signedrec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace signedrec {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += values[k];
    } else {
      out += fmt::format("{}", values[k]);
    }
  }
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void dispatch(const KeyValues& kv, const std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError("unknown config key: " + key);
    it->second(key, value);
  }
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value", lineno);
    }
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key", lineno);
    kv[std::move(key)] = std::move(value);
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return parse_key_values(in);
}

void apply_config(const KeyValues& kv, ExperimentConfig& cfg) {
  std::map<std::string, Setter> s;
  s["models"] = [&](auto&, auto& v) { cfg.models = split_list(v); };
  s["ratios"] = [&](auto& k, auto& v) {
    cfg.ratios.clear();
    for (const auto& p : split_list(v)) cfg.ratios.push_back(parse_number<double>(k, p));
  };
  s["repeats"] = [&](auto& k, auto& v) { cfg.repeats = parse_number<int>(k, v); };
  s["seed"] = [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); };
  s["stratified"] = [&](auto& k, auto& v) { cfg.stratified = parse_bool(k, v); };
  s["dim"] = [&](auto& k, auto& v) { cfg.mf.dim = parse_number<int>(k, v); };
  s["mf_iters"] = [&](auto& k, auto& v) { cfg.mf.max_iters = parse_number<int>(k, v); };
  s["mf_tolerance"] = [&](auto& k, auto& v) { cfg.mf.tolerance = parse_number<double>(k, v); };
  s["mf_alpha"] = [&](auto& k, auto& v) { cfg.mf.alpha = parse_number<double>(k, v); };
  s["mf_regularization"] = [&](auto& k, auto& v) {
    cfg.mf.regularization = parse_number<double>(k, v);
  };
  s["batch_size"] = [&](auto& k, auto& v) { cfg.train.batch_size = parse_number<std::size_t>(k, v); };
  s["learning_rate"] = [&](auto& k, auto& v) {
    cfg.train.learning_rate = parse_number<double>(k, v);
  };
  s["lambda"] = [&](auto& k, auto& v) { cfg.train.lambda = parse_number<double>(k, v); };
  s["epochs"] = [&](auto& k, auto& v) { cfg.train.epochs = parse_number<int>(k, v); };
  s["pretrain_epochs"] = [&](auto& k, auto& v) {
    cfg.train.pretrain_epochs = parse_number<int>(k, v);
  };
  s["negatives"] = [&](auto& k, auto& v) {
    cfg.train.negatives_per_positive = parse_number<std::size_t>(k, v);
  };
  s["hidden_layers"] = [&](auto& k, auto& v) { cfg.train.hidden_layers = parse_number<int>(k, v); };
  s["trainable_embeddings"] = [&](auto& k, auto& v) {
    cfg.train.trainable_embeddings = parse_bool(k, v);
  };
  s["item_branches"] = [&](auto& k, auto& v) {
    if (v != "shared" && v != "separate") {
      throw ValidationError("config key '" + k + "': expected shared or separate");
    }
    cfg.train.shared_item_branches = v == "shared";
  };
  s["beta1"] = [&](auto& k, auto& v) { cfg.train.beta1 = parse_number<double>(k, v); };
  s["beta2"] = [&](auto& k, auto& v) { cfg.train.beta2 = parse_number<double>(k, v); };
  s["epsilon"] = [&](auto& k, auto& v) { cfg.train.epsilon = parse_number<double>(k, v); };
  s["case_weights"] = [&](auto& k, auto& v) {
    const auto parts = split_list(v);
    if (parts.size() != cfg.train.case_weights.size()) {
      throw ValidationError("config key 'case_weights' needs 6 comma-separated values");
    }
    for (std::size_t r = 0; r < parts.size(); ++r) {
      cfg.train.case_weights[r] = parse_number<double>(k, parts[r]);
    }
  };
  s["ks"] = [&](auto& k, auto& v) {
    cfg.eval.ks.clear();
    for (const auto& p : split_list(v)) cfg.eval.ks.push_back(parse_number<int>(k, p));
  };
  s["cold_threshold"] = [&](auto& k, auto& v) {
    cfg.eval.cold_start_threshold = parse_number<std::size_t>(k, v);
  };
  s["threads"] = [&](auto& k, auto& v) {
    cfg.eval.threads = cfg.mf.threads = parse_number<unsigned>(k, v);
  };
  dispatch(kv, s);
}

void apply_config(const KeyValues& kv, SynthConfig& cfg) {
  std::map<std::string, Setter> s;
  s["users"] = [&](auto& k, auto& v) { cfg.users = parse_number<std::size_t>(k, v); };
  s["items"] = [&](auto& k, auto& v) { cfg.items = parse_number<std::size_t>(k, v); };
  s["clusters"] = [&](auto& k, auto& v) { cfg.clusters = parse_number<std::size_t>(k, v); };
  s["niches"] = [&](auto& k, auto& v) { cfg.niches = parse_number<std::size_t>(k, v); };
  s["density"] = [&](auto& k, auto& v) { cfg.density = parse_number<double>(k, v); };
  s["friends"] = [&](auto& k, auto& v) { cfg.friends_per_user = parse_number<std::size_t>(k, v); };
  s["foes"] = [&](auto& k, auto& v) { cfg.foes_per_user = parse_number<std::size_t>(k, v); };
  s["niche_share"] = [&](auto& k, auto& v) { cfg.niche_share = parse_number<double>(k, v); };
  s["cluster_share"] = [&](auto& k, auto& v) { cfg.cluster_share = parse_number<double>(k, v); };
  s["activity_spread"] = [&](auto& k, auto& v) {
    cfg.activity_spread = parse_number<double>(k, v);
  };
  s["kind"] = [&](auto&, auto& v) { cfg.kind = parse_feedback_kind(v); };
  s["seed"] = [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); };
  dispatch(kv, s);
}

KeyValues to_key_values(const ExperimentConfig& cfg) {
  std::vector<double> weights(cfg.train.case_weights.begin(), cfg.train.case_weights.end());
  return {
      {"models", join(cfg.models)},
      {"ratios", join(cfg.ratios)},
      {"repeats", fmt::format("{}", cfg.repeats)},
      {"seed", fmt::format("{}", cfg.seed)},
      {"stratified", cfg.stratified ? "true" : "false"},
      {"dim", fmt::format("{}", cfg.mf.dim)},
      {"mf_iters", fmt::format("{}", cfg.mf.max_iters)},
      {"mf_tolerance", fmt::format("{}", cfg.mf.tolerance)},
      {"mf_alpha", fmt::format("{}", cfg.mf.alpha)},
      {"mf_regularization", fmt::format("{}", cfg.mf.regularization)},
      {"batch_size", fmt::format("{}", cfg.train.batch_size)},
      {"learning_rate", fmt::format("{}", cfg.train.learning_rate)},
      {"lambda", fmt::format("{}", cfg.train.lambda)},
      {"epochs", fmt::format("{}", cfg.train.epochs)},
      {"pretrain_epochs", fmt::format("{}", cfg.train.pretrain_epochs)},
      {"negatives", fmt::format("{}", cfg.train.negatives_per_positive)},
      {"hidden_layers", fmt::format("{}", cfg.train.hidden_layers)},
      {"trainable_embeddings", cfg.train.trainable_embeddings ? "true" : "false"},
      {"item_branches", cfg.train.shared_item_branches ? "shared" : "separate"},
      {"beta1", fmt::format("{}", cfg.train.beta1)},
      {"beta2", fmt::format("{}", cfg.train.beta2)},
      {"epsilon", fmt::format("{}", cfg.train.epsilon)},
      {"case_weights", join(weights)},
      {"ks", join(cfg.eval.ks)},
      {"cold_threshold", fmt::format("{}", cfg.eval.cold_start_threshold)},
      {"threads", fmt::format("{}", cfg.eval.threads)},
  };
}

KeyValues to_key_values(const SynthConfig& cfg) {
  return {
      {"users", fmt::format("{}", cfg.users)},
      {"items", fmt::format("{}", cfg.items)},
      {"clusters", fmt::format("{}", cfg.clusters)},
      {"niches", fmt::format("{}", cfg.niches)},
      {"density", fmt::format("{}", cfg.density)},
      {"friends", fmt::format("{}", cfg.friends_per_user)},
      {"foes", fmt::format("{}", cfg.foes_per_user)},
      {"niche_share", fmt::format("{}", cfg.niche_share)},
      {"cluster_share", fmt::format("{}", cfg.cluster_share)},
      {"activity_spread", fmt::format("{}", cfg.activity_spread)},
      {"kind", to_string(cfg.kind)},
      {"seed", fmt::format("{}", cfg.seed)},
  };
}

void write_key_values(const KeyValues& kv, std::ostream& out) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

}  // namespace signedrec
