#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "signedrec/config.hpp"
#include "signedrec/criteria.hpp"
#include "signedrec/pipeline.hpp"
#include "signedrec/sampler.hpp"
#include "signedrec/synth.hpp"
#include "signedrec/tower.hpp"

namespace py = pybind11;
using namespace signedrec;

namespace {

std::vector<ItemId> sorted_unique(std::vector<ItemId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// (criterion, preferred, other) triples for one user context.
std::vector<std::tuple<int, ItemId, ItemId>> relations(std::vector<ItemId> observed,
                                                       std::vector<ItemId> negatives,
                                                       std::optional<std::vector<ItemId>> friend_items,
                                                       std::optional<std::vector<ItemId>> foe_items) {
  observed = sorted_unique(std::move(observed));
  negatives = sorted_unique(std::move(negatives));
  CriterionContext ctx;
  ctx.observed = observed;
  ctx.negatives = negatives;
  if (friend_items) {
    *friend_items = sorted_unique(std::move(*friend_items));
    ctx.friend_view = NeighborView{1, *friend_items};
  }
  if (foe_items) {
    *foe_items = sorted_unique(std::move(*foe_items));
    ctx.foe_view = NeighborView{2, *foe_items};
  }
  std::vector<std::tuple<int, ItemId, ItemId>> out;
  for (const auto& r : enumerate_relations(ctx)) out.emplace_back(r.criterion, r.preferred, r.other);
  return out;
}

std::vector<ItemId> eligible(std::size_t n_items, std::vector<std::vector<ItemId>> observed,
                             std::vector<std::pair<UserId, UserId>> trust,
                             std::vector<std::pair<UserId, UserId>> distrust, UserId user) {
  for (auto& list : observed) list = sorted_unique(std::move(list));
  const auto n_users = observed.size();
  const ObservedSets sets(n_items, std::move(observed));
  const auto graph = SignedSocialGraph::from_edges(n_users, trust, distrust);
  return eligible_negatives(user, sets, graph);
}

py::dict synthetic(const std::map<std::string, std::string>& settings) {
  SynthConfig cfg;
  apply_config(settings, cfg);
  const auto data = generate_synthetic(cfg);
  py::list interactions;
  for (const auto& r : data.dataset.interactions()) interactions.append(py::make_tuple(r.user, r.item, r.value));
  py::list trust;
  py::list distrust;
  for (UserId u = 0; u < data.graph.n_users(); ++u) {
    for (const auto v : data.graph.friends(u)) trust.append(py::make_tuple(u, v));
    for (const auto v : data.graph.foes(u)) distrust.append(py::make_tuple(u, v));
  }
  py::dict out;
  out["n_users"] = data.dataset.n_users();
  out["n_items"] = data.dataset.n_items();
  out["interactions"] = interactions;
  out["trust"] = trust;
  out["distrust"] = distrust;
  return out;
}

// Runs the full pipeline on generated data and returns the summary CSV.
std::string experiment(const std::map<std::string, std::string>& synth_settings,
                       const std::map<std::string, std::string>& experiment_settings) {
  SynthConfig sc;
  apply_config(synth_settings, sc);
  ExperimentConfig cfg;
  apply_config(experiment_settings, cfg);
  validate_experiment(cfg, true);
  const auto data = generate_synthetic(sc);
  ExperimentResult result;
  {
    py::gil_scoped_release release;
    result = run_experiment(data.dataset, &data.graph, cfg);
  }
  std::ostringstream csv;
  result.report.write_csv(csv);
  return csv.str();
}

}  // namespace

PYBIND11_MODULE(_signedrec, m) {
  m.doc() = "Trust/distrust-aware pairwise ranking recommender";
  static py::exception<std::exception> error(m, "SignedRecError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      error(e.what());
    } catch (const ValidationError& e) {
      error(e.what());
    } catch (const ConflictError& e) {
      error(e.what());
    } catch (const ContractError& e) {
      error(e.what());
    } catch (const NumericError& e) {
      error(e.what());
    }
  });

  m.def("recall_at_k",
        [](const std::vector<ItemId>& ranked, std::vector<ItemId> relevant, int k) {
          relevant = sorted_unique(std::move(relevant));
          return recall_at_k(ranked, relevant, k);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("k"));
  m.def("ndcg_at_k",
        [](const std::vector<ItemId>& ranked, std::vector<ItemId> relevant, int k) {
          relevant = sorted_unique(std::move(relevant));
          return ndcg_at_k(ranked, relevant, k);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("k"));
  m.def("enumerate_relations", &relations, py::arg("observed"), py::arg("negatives"),
        py::arg("friend_items") = py::none(), py::arg("foe_items") = py::none());
  m.def("eligible_negatives", &eligible, py::arg("n_items"), py::arg("observed"), py::arg("trust"),
        py::arg("distrust"), py::arg("user"));
  m.def("validate_tower_shape", &validate_tower_shape, py::arg("dim"), py::arg("hidden_layers"));
  m.def("generate_synthetic", &synthetic, py::arg("settings") = std::map<std::string, std::string>{});
  m.def("run_synthetic_experiment", &experiment, py::arg("synth"), py::arg("experiment"));
}
