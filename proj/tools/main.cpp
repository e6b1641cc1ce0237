#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "teforge/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
  std::string config_path;
  std::string backend_override;
  std::string out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

teforge::RunConfig effective_config(const CommonFlags& flags) {
  teforge::RunConfig config = teforge::RunConfig::load(flags.config_path);
  if (!flags.backend_override.empty()) config.backend.type = flags.backend_override;
  if (!flags.out_override.empty()) config.out_dir = flags.out_override;
  if (flags.seed_set) config.writer.seed = flags.seed;
  return config;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "Run configuration JSON file");
  if (needs_config) opt->required();
  cmd->add_option("--backend", flags.backend_override, "Backend override: mock or remote")
      ->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option("--out", flags.out_override, "Output directory override");
  cmd->add_option("--seed", flags.seed, "Search seed override")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teforge: adversarial analysis and evolutionary search for "
               "traffic-engineering heuristics"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string region_id;
  bool resume = false;
  std::string plot_dir;

  CLI::App* analyze = app.add_subcommand("analyze",
                                         "Find adversarial samples, partition regions and "
                                         "write explanations");
  add_common(analyze, flags);

  CLI::App* search = app.add_subcommand("search",
                                        "Run the suggester and the island search for one "
                                        "region");
  add_common(search, flags);
  search->add_option("--region", region_id, "Region id from regions.json")->required();
  search->add_flag("--resume", resume, "Resume from the latest checkpoint");

  CLI::App* oneshot = app.add_subcommand("oneshot",
                                         "Compare prompt variants over ten candidates each");
  add_common(oneshot, flags);

  CLI::App* ensemble = app.add_subcommand("ensemble",
                                          "Assemble per-region specialists and evaluate on "
                                          "a held-out set");
  add_common(ensemble, flags);

  CLI::App* plotdata = app.add_subcommand("plotdata", "Emit plot-ready CSVs from a run "
                                                      "directory");
  plotdata->add_option("--dir", plot_dir, "Run directory (search output or out_dir)")
      ->required();

  CLI::App* validate = app.add_subcommand("validate-config", "Validate a configuration file");
  add_common(validate, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) {
      teforge::RunConfig config = effective_config(flags);
      config.validate();
      std::printf("config ok (hash %s)\n", config.config_hash().c_str());
      return kExitOk;
    }
    if (app.got_subcommand(plotdata)) {
      teforge::cmd_plotdata(plot_dir);
      std::printf("plot data written under %s/plots\n", plot_dir.c_str());
      return kExitOk;
    }

    teforge::PipelineContext ctx = teforge::load_context(effective_config(flags));
    if (app.got_subcommand(analyze)) {
      teforge::AnalysisArtifacts artifacts = teforge::cmd_analyze(ctx);
      std::printf("analyze: %zu samples, %zu regions -> %s/analysis\n",
                  artifacts.samples.size(), artifacts.regions.size(),
                  ctx.config.out_dir.c_str());
    } else if (app.got_subcommand(search)) {
      teforge::SearchState state = teforge::cmd_search(ctx, region_id, resume);
      std::printf("search %s: best train gap %.6f after %d iterations (%s)\n",
                  region_id.c_str(), state.best.worst_gap, state.iteration,
                  state.stop_reason.c_str());
    } else if (app.got_subcommand(oneshot)) {
      teforge::cmd_oneshot(ctx);
      std::printf("oneshot results -> %s/oneshot.json\n", ctx.config.out_dir.c_str());
    } else if (app.got_subcommand(ensemble)) {
      teforge::HeldoutReport report = teforge::cmd_ensemble(ctx);
      std::printf("ensemble: normalized max %.2f%% of base over %d held-out instances\n",
                  report.normalized_max_pct, report.instances);
    }
    return kExitOk;
  } catch (const teforge::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const teforge::BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return kExitBackend;
  } catch (const teforge::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
