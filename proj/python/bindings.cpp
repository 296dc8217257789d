#include "preauction/auction.hpp"
#include "preauction/auction_log.hpp"
#include "preauction/cli.hpp"
#include "preauction/ctr_env.hpp"
#include "preauction/plackett_luce.hpp"
#include "preauction/selection.hpp"
#include "preauction/training.hpp"
#include "preauction/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace preauction;

namespace {

using Support = std::vector<std::pair<double, double>>;

SimpaInstance make_instance(std::vector<double> bids, const std::vector<Support> &supports,
                            std::size_t m, std::size_t k)
{
  SimpaInstance inst;
  inst.bids = std::move(bids);
  for (const auto &s : supports) {
    std::vector<CtrAtom> atoms;
    for (const auto &[v, p] : s) {
      atoms.push_back({v, p});
    }
    inst.dists.emplace_back(std::move(atoms));
  }
  inst.m = m;
  inst.k = k;
  inst.validate();
  return inst;
}

py::dict outcome_dict(const AuctionOutcome &o)
{
  py::dict d;
  d["allocation"]         = o.allocation;
  d["payments_per_click"] = o.payments_per_click;
  d["expected_revenue"]   = o.expected_revenue;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Two-stage ad auction toolkit: GSP, pre-auction selection, PAS";

  py::register_exception<TooLargeError>(m, "TooLargeError");

  m.def("sum_top_k", [](const std::vector<double> &v, std::size_t k) { return sum_top_k(v, k); },
        py::arg("values"), py::arg("k"));
  m.def("rank_by_score", [](const std::vector<double> &s) { return rank_by_score(s); },
        py::arg("scores"), "Indices by descending score, ties by index (0-based).");
  m.def(
      "gsp_run",
      [](const std::vector<double> &bids, const std::vector<double> &ctrs, std::size_t k) {
        return outcome_dict(gsp_run(bids, ctrs, k));
      },
      py::arg("bids"), py::arg("ctrs"), py::arg("k"));
  m.def(
      "compute_metrics",
      [](const std::vector<std::size_t> &selected, const std::vector<double> &bids,
         const std::vector<double> &ctrs, std::size_t k) {
        const auto r = compute_metrics(selected, bids, ctrs, k);
        py::dict   d;
        d["swr"]    = r.swr;
        d["recall"] = r.recall;
        d["revr"]   = r.revr;
        return d;
      },
      py::arg("selected"), py::arg("bids"), py::arg("realized_ctrs"), py::arg("k"));
  m.def("calibrate_downsampled", &calibrate_downsampled, py::arg("p"), py::arg("eta"));

  py::class_<SimpaInstance>(m, "SimpaInstance")
      .def(py::init(&make_instance), py::arg("bids"), py::arg("supports"), py::arg("m"),
           py::arg("k"),
           "supports[i] is a list of (ctr value, probability) pairs for ad i.")
      .def_readonly("bids", &SimpaInstance::bids)
      .def_readonly("m", &SimpaInstance::m)
      .def_readonly("k", &SimpaInstance::k)
      .def("coarse_ctrs", &SimpaInstance::coarse_ctrs)
      .def("__len__", &SimpaInstance::size);

  m.def("example1_instance", [] { return generate_example1(Example1Params{}); });
  m.def(
      "set_cover_to_simpa",
      [](std::size_t l, const std::vector<std::vector<std::size_t>> &sets, std::size_t mm) {
        std::vector<std::set<std::size_t>> s;
        for (const auto &v : sets) {
          s.emplace_back(v.begin(), v.end());
        }
        return set_cover_to_simpa(l, s, mm);
      },
      py::arg("universe_size"), py::arg("subsets"), py::arg("m"));

  m.def("select_gdy",
        [](const std::vector<double> &bids, const std::vector<double> &coarse, std::size_t mm) {
          return select_gdy(bids, coarse, mm).selected;
        },
        py::arg("bids"), py::arg("coarse_ctrs"), py::arg("m"));
  m.def("pas_exact", [](const SimpaInstance &inst) { return pas_exact(inst).probs; });
  m.def(
      "pas_monte_carlo",
      [](const SimpaInstance &inst, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return pas_monte_carlo(inst, n, rng).probs;
      },
      py::arg("instance"), py::arg("n_samples"), py::arg("seed") = 0);
  m.def(
      "simpa_objective",
      [](const SimpaInstance &inst, const std::vector<std::size_t> &subset) {
        return simpa_objective(subset, inst).value;
      },
      py::arg("instance"), py::arg("subset"));
  m.def("brute_force_optimal_subset", [](const SimpaInstance &inst) {
    const auto r = brute_force_optimal_subset(inst);
    return std::make_pair(r.subset, r.objective);
  });
  m.def("lazy_greedy_subset", [](const SimpaInstance &inst) {
    const auto r = lazy_greedy_subset(inst);
    return std::make_pair(r.subset, r.objective);
  });

  m.def("pl_permutation_prob",
        [](const std::vector<std::size_t> &perm, const std::vector<double> &y) {
          return pl_permutation_prob(perm, y);
        },
        py::arg("perm"), py::arg("y"));
  m.def("pl_top1", [](const std::vector<double> &y) { return pl_top1(y); }, py::arg("y"));
  m.def("pl_prob_in_topk",
        [](const std::vector<double> &y, std::size_t k) { return pl_prob_in_topk(y, k); },
        py::arg("y"), py::arg("k"));
  m.def("listwise_loss", &listwise_loss, py::arg("logits"), py::arg("y"));
  m.def("listwise_loss_grad", &listwise_loss_grad, py::arg("logits"), py::arg("y"));

  m.def(
      "generate_log_lines",
      [](const std::string &preset, std::size_t n, std::uint64_t seed) {
        Rng                      rng(seed);
        std::vector<std::string> lines;
        const auto               env = preset_config(preset);
        for (std::size_t i = 0; i < n; ++i) {
          auto inst       = generate_auction(env, rng);
          inst.auction_id = static_cast<std::int64_t>(i);
          lines.push_back(auction_to_json_line(inst));
        }
        return lines;
      },
      py::arg("preset"), py::arg("n"), py::arg("seed") = 0,
      "Synthetic auctions serialized as auction-log lines.");

  m.def("oracle_check", [](std::uint64_t seed) {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto &r : run_oracle_suite(seed)) {
      out.emplace_back(r.name, r.passed, r.detail);
    }
    return out;
  }, py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args) {
        std::vector<const char *> argv{"preauction"};
        for (const auto &a : args) {
          argv.push_back(a.c_str());
        }
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command line tool in-process; returns the exit code.");
}
