#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "teforge/ensemble.hpp"
#include "teforge/paths.hpp"
#include "teforge/pipeline.hpp"

namespace py = pybind11;
using namespace teforge;

namespace {

// The python surface works on JSON strings so the module stays a thin shim
// over the C++ core.

Topology topology_from_text(const std::string& text) {
  return Topology::from_json(parse_json(text, "topology"));
}

DemandMatrix demands_from_text(const std::string& text) {
  return DemandMatrix::from_json(parse_json(text, "demands"));
}

std::vector<std::vector<std::string>> py_k_shortest_paths(const std::string& topology_json,
                                                          const std::string& src,
                                                          const std::string& dst, int k) {
  Topology topo = topology_from_text(topology_json);
  std::vector<std::vector<std::string>> out;
  for (const Path& p : k_shortest_paths(topo, src, dst, k))
    out.push_back(p.node_sequence(topo));
  return out;
}

double py_solve_optimal_total(const std::string& topology_json, const std::string& demands_json,
                              int k) {
  Topology topo = topology_from_text(topology_json);
  DemandMatrix demands = demands_from_text(demands_json);
  std::vector<PairKey> pairs;
  for (const Demand& d : demands.demands) pairs.push_back(d.pair());
  PathSet paths = build_path_set(topo, pairs, k);
  return solve_optimal(topo, demands, paths).total_met();
}

py::dict py_interpret(const std::string& program_json, const std::string& topology_json,
                      const std::string& demands_json, int k) {
  Topology topo = topology_from_text(topology_json);
  DemandMatrix demands = demands_from_text(demands_json);
  HeuristicProgram program = parse_program(program_json);
  std::vector<PairKey> pairs;
  for (const Demand& d : demands.demands) pairs.push_back(d.pair());
  PathSet paths = build_path_set(topo, pairs, k);
  RoutingOutcome outcome = interpret(program, topo, demands, paths);
  py::dict out;
  out["total_met"] = outcome.total_met;
  out["total_unmet"] = outcome.total_unmet;
  out["timed_out"] = outcome.timed_out;
  out["elapsed_ms"] = outcome.elapsed_ms;
  return out;
}

std::string py_base_heuristic(double threshold) {
  return serialize_program(base_heuristic(threshold));
}

std::vector<std::string> py_validate_program(const std::string& program_json) {
  try {
    return validate(parse_program(program_json));
  } catch (const ProgramError& e) {
    return {e.what()};
  }
}

std::string py_explain(const std::string& program_json, const std::string& topology_json,
                       const std::string& demands_json, int k) {
  Topology topo = topology_from_text(topology_json);
  DemandMatrix demands = demands_from_text(demands_json);
  HeuristicProgram program = parse_program(program_json);
  std::vector<PairKey> pairs;
  for (const Demand& d : demands.demands) pairs.push_back(d.pair());
  PathSet paths = build_path_set(topo, pairs, k);
  RoutingOutcome heuristic = interpret(program, topo, demands, paths);
  FlowAssignment optimal = solve_optimal(topo, demands, paths);
  return explain(heuristic, optimal, topo, demands, paths).to_json().dump();
}

std::string py_find_adversarial(const std::string& program_json,
                                const std::string& topology_json,
                                const std::string& space_json, int budget,
                                std::uint64_t seed, int k) {
  Topology topo = topology_from_text(topology_json);
  DemandSpace space = DemandSpace::from_json(parse_json(space_json, "demand space"));
  HeuristicProgram program = parse_program(program_json);
  json out = json::array();
  for (const AdversarialSample& s : find_adversarial(program, topo, space, budget, seed, k))
    out.push_back(s.to_json());
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_teforge, m) {
  m.doc() = "Traffic-engineering heuristic analysis and search core";

  m.def("k_shortest_paths", &py_k_shortest_paths, py::arg("topology_json"), py::arg("src"),
        py::arg("dst"), py::arg("k"),
        "Loop-free paths as node-id sequences, shortest first");
  m.def("solve_optimal_total", &py_solve_optimal_total, py::arg("topology_json"),
        py::arg("demands_json"), py::arg("k") = 8,
        "Max total met demand over the k-shortest-path candidates");
  m.def("interpret", &py_interpret, py::arg("program_json"), py::arg("topology_json"),
        py::arg("demands_json"), py::arg("k") = 8, "Run a heuristic program on an instance");
  m.def("base_heuristic", &py_base_heuristic, py::arg("threshold"),
        "Demand-pinning base program as canonical JSON");
  m.def("validate_program", &py_validate_program, py::arg("program_json"),
        "Range/shape violations; empty list means ok");
  m.def("explain", &py_explain, py::arg("program_json"), py::arg("topology_json"),
        py::arg("demands_json"), py::arg("k") = 8,
        "Decision differences vs the optimal router, as JSON");
  m.def("find_adversarial", &py_find_adversarial, py::arg("program_json"),
        py::arg("topology_json"), py::arg("space_json"), py::arg("budget"), py::arg("seed"),
        py::arg("k") = 8, "Adversarial demand matrices sorted by gap, as JSON");
}
