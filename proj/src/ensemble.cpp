#include "teforge/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "teforge/solver.hpp"

namespace teforge {

void EnsembleSpec::validate_programs() const {
  auto check = [](const HeuristicProgram& p, const std::string& what) {
    std::vector<std::string> violations = validate(p);
    if (!violations.empty())
      throw ProgramError("ensemble " + what + " program invalid: " + violations.front());
  };
  check(fallback, "fallback");
  for (const Entry& e : entries) check(e.program, "region " + e.region.id);
}

json EnsembleSpec::to_json() const {
  json entries_json = json::array();
  for (const Entry& e : entries)
    entries_json.push_back(
        {{"region", e.region.to_json()}, {"program", program_to_json(e.program)}});
  return {{"fallback", program_to_json(fallback)}, {"entries", entries_json}};
}

EnsembleSpec EnsembleSpec::from_json(const json& j) {
  EnsembleSpec spec;
  spec.fallback = program_from_json(j.at("fallback"));
  for (const auto& e : j.at("entries"))
    spec.entries.push_back(
        {Region::from_json(e.at("region")), program_from_json(e.at("program"))});
  spec.validate_programs();
  return spec;
}

std::string classify(const EnsembleSpec& spec, const DemandMatrix& demands) {
  for (const EnsembleSpec::Entry& e : spec.entries)
    if (e.region.contains(demands)) return e.region.id;
  return {};
}

RouteResult route(const EnsembleSpec& spec, const Topology& topology,
                  const DemandMatrix& demands, const PathSet& paths) {
  std::string region_id = classify(spec, demands);
  const HeuristicProgram* program = &spec.fallback;
  for (const EnsembleSpec::Entry& e : spec.entries)
    if (e.region.id == region_id) program = &e.program;
  return {interpret(*program, topology, demands, paths), region_id};
}

RouteResult route_parallel(const EnsembleSpec& spec, const Topology& topology,
                           const DemandMatrix& demands, const PathSet& paths) {
  RouteResult best;
  bool first = true;
  for (const EnsembleSpec::Entry& e : spec.entries) {
    RoutingOutcome out = interpret(e.program, topology, demands, paths);
    if (first || out.total_met > best.outcome.total_met + kEpsNum) {
      best = {std::move(out), e.region.id};
      first = false;
    }
  }
  RoutingOutcome fallback_out = interpret(spec.fallback, topology, demands, paths);
  if (first || fallback_out.total_met > best.outcome.total_met + kEpsNum)
    best = {std::move(fallback_out), std::string{}};
  return best;
}

namespace {

HeldoutReport evaluate_impl(
    const std::function<std::pair<double, std::string>(const DemandMatrix&)>& target_met,
    const std::vector<DemandMatrix>& held_out, const Topology& topology,
    const PathSet& paths, const HeuristicProgram& base) {
  if (held_out.empty()) throw ConfigError("held-out set is empty");
  HeldoutReport report;
  report.instances = static_cast<int>(held_out.size());

  using Clock = std::chrono::steady_clock;
  std::vector<double> target_times, base_times;

  for (const DemandMatrix& demands : held_out) {
    double optimal = solve_optimal(topology, demands, paths).total_met();

    auto t0 = Clock::now();
    auto [met, region] = target_met(demands);
    auto t1 = Clock::now();
    RoutingOutcome base_out = interpret(base, topology, demands, paths);
    auto t2 = Clock::now();

    report.gaps.push_back(std::max(0.0, optimal - met));
    report.base_gaps.push_back(std::max(0.0, optimal - base_out.total_met));
    report.dispatched_region.push_back(region);
    target_times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    base_times.push_back(std::chrono::duration<double, std::micro>(t2 - t1).count());
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  double sum = 0.0;
  for (double g : report.gaps) {
    report.max_gap = std::max(report.max_gap, g);
    sum += g;
  }
  report.mean_gap = sum / report.instances;
  double var = 0.0;
  for (double g : report.gaps) var += (g - report.mean_gap) * (g - report.mean_gap);
  report.stderr_gap =
      report.instances > 1 ? std::sqrt(var / (report.instances - 1) / report.instances) : 0.0;

  double base_sum = 0.0;
  for (double g : report.base_gaps) {
    report.base_max_gap = std::max(report.base_max_gap, g);
    base_sum += g;
  }
  report.base_mean_gap = base_sum / report.instances;

  if (report.base_max_gap > kEpsNum) {
    report.normalized_max_pct = 100.0 * report.max_gap / report.base_max_gap;
    report.normalized_mean_pct = 100.0 * report.mean_gap / report.base_max_gap;
  } else {
    report.normalized_max_pct = report.max_gap > kEpsNum ? HUGE_VAL : 0.0;
    report.normalized_mean_pct = report.normalized_max_pct;
  }

  double base_median = median(base_times);
  report.runtime_ratio = base_median > 0.0 ? median(target_times) / base_median : 1.0;
  return report;
}

}  // namespace

HeldoutReport evaluate_heldout(const EnsembleSpec& spec,
                               const std::vector<DemandMatrix>& held_out,
                               const Topology& topology, const PathSet& paths,
                               const HeuristicProgram& base) {
  spec.validate_programs();
  return evaluate_impl(
      [&](const DemandMatrix& demands) {
        RouteResult r = route(spec, topology, demands, paths);
        return std::make_pair(r.outcome.total_met, r.region_id);
      },
      held_out, topology, paths, base);
}

HeldoutReport evaluate_heldout(const HeuristicProgram& program,
                               const std::vector<DemandMatrix>& held_out,
                               const Topology& topology, const PathSet& paths,
                               const HeuristicProgram& base) {
  return evaluate_impl(
      [&](const DemandMatrix& demands) {
        return std::make_pair(interpret(program, topology, demands, paths).total_met,
                              std::string{});
      },
      held_out, topology, paths, base);
}

json HeldoutReport::to_json(const std::string& config_hash) const {
  // runtime_ratio is measured wall clock and not serialized here; identical
  // runs must produce byte-identical report.json. It appears in report.md.
  return {{"config_hash", config_hash},
          {"instances", instances},
          {"per_instance_gaps", gaps},
          {"base_per_instance_gaps", base_gaps},
          {"dispatched_region", dispatched_region},
          {"max_gap", max_gap},
          {"mean_gap", mean_gap},
          {"stderr_gap", stderr_gap},
          {"base_max_gap", base_max_gap},
          {"base_mean_gap", base_mean_gap},
          {"normalized_max_pct", normalized_max_pct},
          {"normalized_mean_pct", normalized_mean_pct}};
}

std::string HeldoutReport::to_markdown(const std::string& target_name) const {
  char buf[256];
  std::string out;
  out += "| Method | Max suboptimality (% of base) | Mean suboptimality (% of base) | "
         "Runtime (x the base) |\n";
  out += "|---|---|---|---|\n";
  double norm_stderr =
      base_max_gap > kEpsNum ? 100.0 * stderr_gap / base_max_gap : 0.0;
  std::snprintf(buf, sizeof(buf), "| %s | %.2f%% | %.3f +/- %.3f%% | %.2fx |\n",
                target_name.c_str(), normalized_max_pct, normalized_mean_pct, norm_stderr,
                runtime_ratio);
  out += buf;
  double base_mean_pct = base_max_gap > kEpsNum ? 100.0 * base_mean_gap / base_max_gap : 0.0;
  std::snprintf(buf, sizeof(buf), "| base | 100.00%% | %.3f%% | 1.00x |\n", base_mean_pct);
  out += buf;
  return out;
}

}  // namespace teforge
