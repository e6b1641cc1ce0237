#include "teforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "teforge/paths.hpp"

namespace teforge {

namespace fs = std::filesystem;

PipelineContext load_context(const RunConfig& config) {
  config.validate();
  PipelineContext ctx;
  ctx.config = config;
  ctx.hash = config.config_hash();
  ctx.topology = load_topology(config.topology_path);
  ctx.config.space.validate(&ctx.topology);
  ctx.paths = build_path_set(ctx.topology, config.space.pair_keys(), config.path_k);
  ctx.base = base_heuristic(config.base_threshold);
  return ctx;
}

std::vector<DemandMatrix> make_heldout(const PipelineContext& ctx) {
  const auto& cfg = ctx.config.heldout;
  int uniform_count = cfg.size - cfg.size / 2;
  std::vector<DemandMatrix> out =
      sample_normal(ctx.config.space, uniform_count, cfg.seed);

  std::vector<AdversarialSample> adversarial =
      find_adversarial(ctx.base, ctx.topology, ctx.config.space, cfg.adversarial_budget,
                       cfg.seed, ctx.config.path_k);
  for (int i = 0; i < cfg.size / 2 && i < static_cast<int>(adversarial.size()); ++i)
    out.push_back(adversarial[i].demands);
  // Pad with more uniforms when the search found fewer distinct points.
  if (static_cast<int>(out.size()) < cfg.size) {
    std::vector<DemandMatrix> pad =
        sample_normal(ctx.config.space, cfg.size - static_cast<int>(out.size()), cfg.seed + 1);
    out.insert(out.end(), pad.begin(), pad.end());
  }
  return out;
}

const Region& AnalysisArtifacts::region_by_id(const std::string& id) const {
  for (const Region& r : regions)
    if (r.id == id) return r;
  std::string known;
  for (const Region& r : regions) known += (known.empty() ? "" : ", ") + r.id;
  throw ConfigError("unknown region id '" + id + "' (known: " + known + ")");
}

namespace {

void check_hash(const json& artifact, const std::string& expected, const std::string& what) {
  const std::string found = artifact.value("config_hash", std::string{});
  if (found != expected)
    throw ConfigError("artifact " + what + " was produced with config hash " + found +
                      " but the current config hashes to " + expected);
}

Explanation explain_region_worst(const PipelineContext& ctx,
                                 const std::vector<AdversarialSample>& samples,
                                 const Region& region) {
  if (region.member_indices.empty()) return {};
  const DemandMatrix& demands = samples[region.member_indices.front()].demands;
  RoutingOutcome heuristic = interpret(ctx.base, ctx.topology, demands, ctx.paths);
  FlowAssignment optimal = solve_optimal(ctx.topology, demands, ctx.paths);
  return explain(heuristic, optimal, ctx.topology, demands, ctx.paths);
}

}  // namespace

AnalysisArtifacts cmd_analyze(const PipelineContext& ctx) {
  AnalysisArtifacts artifacts;
  artifacts.samples =
      find_adversarial(ctx.base, ctx.topology, ctx.config.space, ctx.config.analyzer.budget,
                       ctx.config.analyzer.seed, ctx.config.path_k);

  // Regions describe where the heuristic underperforms: partition the
  // positive-gap samples and keep indices into the full sample list.
  std::vector<AdversarialSample> failing;
  std::vector<int> index_map;
  for (size_t i = 0; i < artifacts.samples.size(); ++i) {
    if (artifacts.samples[i].gap > kEpsLp) {
      failing.push_back(artifacts.samples[i]);
      index_map.push_back(static_cast<int>(i));
    }
  }
  if (!failing.empty()) {
    artifacts.regions = partition_regions(failing, ctx.config.analyzer.max_regions);
    for (Region& region : artifacts.regions)
      for (int& idx : region.member_indices) idx = index_map[idx];
  }

  const std::string dir = ctx.config.out_dir + "/analysis";
  ensure_dir(dir);
  write_json_file(ctx.config.out_dir + "/config.json",
                  {{"config_hash", ctx.hash}, {"config", ctx.config.to_json()}});

  json samples_json = json::array();
  for (const AdversarialSample& s : artifacts.samples) samples_json.push_back(s.to_json());
  write_json_file(dir + "/samples.json",
                  {{"config_hash", ctx.hash}, {"samples", samples_json}});

  json regions_json = json::array();
  for (const Region& r : artifacts.regions) regions_json.push_back(r.to_json());
  write_json_file(dir + "/regions.json",
                  {{"config_hash", ctx.hash}, {"regions", regions_json}});

  json explanations_json = json::array();
  for (const Region& r : artifacts.regions) {
    Explanation e = explain_region_worst(ctx, artifacts.samples, r);
    explanations_json.push_back({{"region_id", r.id},
                                 {"text", render_explanation_text(e)},
                                 {"explanation", e.to_json()}});
  }
  write_json_file(dir + "/explanations.json",
                  {{"config_hash", ctx.hash}, {"explanations", explanations_json}});
  return artifacts;
}

AnalysisArtifacts load_analysis(const PipelineContext& ctx) {
  const std::string dir = ctx.config.out_dir + "/analysis";
  if (!file_exists(dir + "/samples.json") || !file_exists(dir + "/regions.json"))
    throw IoError("analysis artifacts missing under " + dir + "; run analyze first");

  AnalysisArtifacts artifacts;
  json samples = load_json_file(dir + "/samples.json");
  check_hash(samples, ctx.hash, "samples.json");
  for (const auto& s : samples.at("samples"))
    artifacts.samples.push_back(AdversarialSample::from_json(s));

  json regions = load_json_file(dir + "/regions.json");
  check_hash(regions, ctx.hash, "regions.json");
  for (const auto& r : regions.at("regions")) artifacts.regions.push_back(Region::from_json(r));
  return artifacts;
}

namespace {

std::string latest_checkpoint(const std::string& dir) {
  if (!fs::exists(dir)) return {};
  std::string best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("iter_", 0) == 0 && name > best) best = name;
  }
  return best.empty() ? std::string{} : dir + "/" + best;
}

}  // namespace

SearchState cmd_search(const PipelineContext& ctx, const std::string& region_id, bool resume) {
  AnalysisArtifacts artifacts = load_analysis(ctx);
  const Region& region = artifacts.region_by_id(region_id);

  const std::string run_dir = ctx.config.out_dir + "/search_" + region.id;
  ensure_dir(run_dir);
  write_json_file(run_dir + "/config.json",
                  {{"config_hash", ctx.hash}, {"config", ctx.config.to_json()}});

  std::unique_ptr<LlmBackend> backend = make_backend(ctx.config.backend);
  TranscriptWriter transcripts(run_dir + "/transcripts");
  backend->attach_transcripts(&transcripts);

  // Region members are indices into the gap-sorted sample list.
  std::vector<AdversarialSample> members;
  for (int idx : region.member_indices) members.push_back(artifacts.samples[idx]);

  std::vector<DemandMatrix> normal_pool =
      sample_normal(ctx.config.space, ctx.config.analyzer.normal_samples,
                    ctx.config.analyzer.seed + 1);

  auto [batch_adv, batch_normal] =
      balanced_batch(region, artifacts.samples, normal_pool, ctx.config.suggester.batch_per_class);
  Explanation explanation = explain_region_worst(ctx, artifacts.samples, region);
  std::vector<Suggestion> suggestions =
      suggest(*backend, region, batch_adv, batch_normal, explanation, ctx.base,
              ctx.config.suggester.n_suggestions, ctx.config.suggester.batch_per_class);

  json suggestions_json = json::array();
  for (const Suggestion& s : suggestions) suggestions_json.push_back(s.to_json());
  write_json_file(run_dir + "/suggestions.json",
                  {{"config_hash", ctx.hash}, {"suggestions", suggestions_json}});

  // Training batch: the region's adversarial samples plus an equal count of
  // normal samples.
  std::vector<DemandMatrix> train;
  for (const AdversarialSample& s : members) train.push_back(s.demands);
  std::vector<DemandMatrix> train_normals =
      sample_normal(ctx.config.space, static_cast<int>(train.size()),
                    ctx.config.analyzer.seed + 2);
  train.insert(train.end(), train_normals.begin(), train_normals.end());

  std::vector<DemandMatrix> held_out = make_heldout(ctx);

  std::optional<SearchState> resume_state;
  if (resume) {
    std::string path = latest_checkpoint(run_dir + "/checkpoints");
    if (path.empty()) throw IoError("resume requested but no checkpoint under " + run_dir);
    resume_state = restore(path);
  }

  return run_search(ctx.config.writer, ctx.base, train, held_out, suggestions, *backend,
                    ctx.topology, ctx.paths, run_dir, ctx.hash, std::move(resume_state));
}

HeldoutReport cmd_ensemble(const PipelineContext& ctx) {
  AnalysisArtifacts artifacts = load_analysis(ctx);

  EnsembleSpec spec;
  spec.fallback = ctx.base;
  for (const Region& region : artifacts.regions) {
    const std::string run_dir = ctx.config.out_dir + "/search_" + region.id;
    const std::string best_path = run_dir + "/best_program.json";
    if (!file_exists(best_path))
      throw IoError("no search result for region " + region.id + " (expected " + best_path +
                    ")");
    if (file_exists(run_dir + "/config.json"))
      check_hash(load_json_file(run_dir + "/config.json"), ctx.hash,
                 "search_" + region.id + "/config.json");
    spec.entries.push_back({region, program_from_json(load_json_file(best_path))});
  }
  spec.validate_programs();

  std::vector<DemandMatrix> held_out = make_heldout(ctx);
  HeldoutReport report = evaluate_heldout(spec, held_out, ctx.topology, ctx.paths, ctx.base);

  write_json_file(ctx.config.out_dir + "/ensemble.json", spec.to_json());

  json report_json = report.to_json(ctx.hash);
  json per_region = json::array();
  for (const Region& region : artifacts.regions) {
    double max_gap = 0.0, sum = 0.0;
    int count = 0;
    for (int i = 0; i < report.instances; ++i) {
      if (report.dispatched_region[i] != region.id) continue;
      max_gap = std::max(max_gap, report.gaps[i]);
      sum += report.gaps[i];
      ++count;
    }
    per_region.push_back({{"region_id", region.id},
                          {"instances", count},
                          {"max_gap", max_gap},
                          {"mean_gap", count ? sum / count : 0.0}});
  }
  report_json["per_region"] = per_region;
  write_json_file(ctx.config.out_dir + "/report.json", report_json);

  std::string md = "# Held-out evaluation\n\n";
  md += report.to_markdown("ensemble");
  md += "\nInstances: " + std::to_string(report.instances) + "\n";
  write_file(ctx.config.out_dir + "/report.md", md);
  return report;
}

json cmd_oneshot(const PipelineContext& ctx) {
  AnalysisArtifacts artifacts = load_analysis(ctx);
  const Region& region = artifacts.regions.front();

  std::unique_ptr<LlmBackend> backend = make_backend(ctx.config.backend);
  TranscriptWriter transcripts(ctx.config.out_dir + "/oneshot_transcripts");
  backend->attach_transcripts(&transcripts);

  // Held-out adversarial instances and the base worst gap for normalization.
  std::vector<AdversarialSample> heldout_adv =
      find_adversarial(ctx.base, ctx.topology, ctx.config.space,
                       ctx.config.heldout.adversarial_budget, ctx.config.heldout.seed,
                       ctx.config.path_k);
  int take = std::min<int>(ctx.config.heldout.size, static_cast<int>(heldout_adv.size()));
  std::vector<DemandMatrix> eval_set;
  for (int i = 0; i < take; ++i) eval_set.push_back(heldout_adv[i].demands);
  if (eval_set.empty()) throw ConfigError("oneshot: no adversarial held-out samples found");

  std::vector<double> opt_totals;
  double base_worst = 0.0;
  for (const DemandMatrix& m : eval_set) {
    double opt = solve_optimal(ctx.topology, m, ctx.paths).total_met();
    opt_totals.push_back(opt);
    RoutingOutcome base_out = interpret(ctx.base, ctx.topology, m, ctx.paths);
    base_worst = std::max(base_worst, std::max(0.0, opt - base_out.total_met));
  }

  auto worst_gap_of = [&](const HeuristicProgram& p) {
    double worst = 0.0;
    for (size_t i = 0; i < eval_set.size(); ++i) {
      RoutingOutcome out = interpret(p, ctx.topology, eval_set[i], ctx.paths);
      worst = std::max(worst, std::max(0.0, opt_totals[i] - out.total_met));
    }
    return worst;
  };

  // Worst samples of the base on the eval set, for the prompt sections.
  std::vector<AdversarialSample> base_worst_samples;
  for (int i = 0; i < take && i < ctx.config.writer.worst_samples; ++i)
    base_worst_samples.push_back(heldout_adv[i]);
  Explanation explanation = explain_region_worst(ctx, artifacts.samples, region);

  std::vector<DemandMatrix> normal_pool =
      sample_normal(ctx.config.space, ctx.config.analyzer.normal_samples,
                    ctx.config.analyzer.seed + 1);

  const int kCandidates = 10;
  json variants = json::object();
  for (const std::string variant :
       {"vanilla", "samples", "samples_explanations", "suggestions"}) {
    MutationPromptOptions options;
    options.include_samples = variant != "vanilla";
    options.include_suggestions = false;
    if (variant == "samples_explanations")
      options.explanations_text = render_explanation_text(explanation);

    std::vector<std::string> suggestion_texts;
    if (variant == "suggestions") {
      options.include_suggestions = true;
      auto [batch_adv, batch_normal] = balanced_batch(
          region, artifacts.samples, normal_pool, ctx.config.suggester.batch_per_class);
      for (const Suggestion& s :
           suggest(*backend, region, batch_adv, batch_normal, explanation, ctx.base,
                   ctx.config.suggester.n_suggestions, ctx.config.suggester.batch_per_class))
        suggestion_texts.push_back(s.idea);
    }

    std::vector<MutationParent> parents{{ctx.base, base_worst_samples}};

    std::vector<double> normalized;
    for (int i = 0; i < kCandidates; ++i) {
      // Suggestions feed the candidates one at a time, rotating through the
      // list across the ten prompts.
      std::vector<std::string> per_candidate;
      if (!suggestion_texts.empty())
        per_candidate.push_back(suggestion_texts[i % suggestion_texts.size()]);
      PromptBundle prompt = build_mutation_prompt(parents, per_candidate,
                                                  ctx.config.writer.worst_samples, options);
      // The ten-candidate protocol needs every call answered: backend
      // failures abort, unusable candidates fall back to the base.
      std::string text = backend->generate(prompt);
      double pct = 100.0;
      try {
        HeuristicProgram program = parse_candidate_text(text);
        if (validate(program).empty() && base_worst > kEpsNum)
          pct = 100.0 * worst_gap_of(program) / base_worst;
      } catch (const ProgramError&) {
      }
      normalized.push_back(pct);
    }
    variants[variant] = {{"normalized_gaps", normalized}};
  }

  json out = {{"config_hash", ctx.hash}, {"variants", variants}};
  write_json_file(ctx.config.out_dir + "/oneshot.json", out);
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  double pos = q * (v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  double frac = pos - lo;
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

void cmd_plotdata(const std::string& dir) {
  bool wrote_any = false;
  const std::string plots = dir + "/plots";

  if (file_exists(dir + "/curves.csv")) {
    std::string text = read_file(dir + "/curves.csv");
    std::string out = "step,train_gap,heldout_gap\n";
    size_t pos = 0;
    while (pos < text.size()) {
      size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty() || line[0] == '#' || line.rfind("iteration", 0) == 0) continue;
      out += line + "\n";
    }
    ensure_dir(plots);
    write_file(plots + "/plot_curves.csv", out);
    wrote_any = true;
  }

  if (file_exists(dir + "/oneshot.json")) {
    json oneshot = load_json_file(dir + "/oneshot.json");
    std::string out = "variant,min,q1,median,q3,max\n";
    for (const auto& [variant, payload] : oneshot.at("variants").items()) {
      std::vector<double> gaps = payload.at("normalized_gaps").get<std::vector<double>>();
      if (gaps.empty()) continue;
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", variant.c_str(),
                    quantile(gaps, 0.0), quantile(gaps, 0.25), quantile(gaps, 0.5),
                    quantile(gaps, 0.75), quantile(gaps, 1.0));
      out += line;
    }
    ensure_dir(plots);
    write_file(plots + "/oneshot_box.csv", out);
    wrote_any = true;
  }

  if (!wrote_any)
    throw IoError("no curves.csv or oneshot.json found under " + dir +
                  "; nothing to plot");
}

}  // namespace teforge
