// Command-line front end: gen-data, train, eval, simulate, exact.
#include <iostream>

#include "CLI11.hpp"
#include "gcnsched/commands.hpp"
#include "gcnsched/exact.hpp"
#include "gcnsched/graph_io.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
  bool force = false;
};

void add_common(CLI::App* cmd, GlobalOptions& g, bool with_out = true) {
  cmd->add_option("--config", g.config, "JSON config file")->envname("GCNSCHED_CONFIG");
  cmd->add_option("--seed", g.seed, "Master seed (overrides the config)")->envname("GCNSCHED_SEED");
  if (with_out) cmd->add_option("--out", g.out, "Output directory")->envname("GCNSCHED_OUT");
  cmd->add_option("--workers", g.workers, "Worker threads")->envname("GCNSCHED_WORKERS")->check(CLI::PositiveNumber);
  if (with_out) cmd->add_flag("--force", g.force, "Overwrite outputs in a non-empty directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduling on conflict graphs with graph-convolutional heuristics"};
  app.set_version_flag("--version", gcnsched::kToolVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  std::string trainer = "dpg", init_model, graph_file;
  long node_limit = gcnsched::ExactBudget{}.node_limit;
  double time_limit = gcnsched::ExactBudget{}.time_limit;

  auto* gen = app.add_subcommand("gen-data", "Generate random conflict graphs");
  add_common(gen, g);
  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train, g);
  train->add_option("--trainer", trainer, "dpg, crts or dqn")->check(CLI::IsMember({"dpg", "crts", "dqn"}));
  train->add_option("--init-model", init_model, "Start from this model file");
  auto* eval = app.add_subcommand("eval", "Score solvers on a dataset");
  add_common(eval, g);
  auto* sim = app.add_subcommand("simulate", "Run the slotted queueing simulation");
  add_common(sim, g);
  auto* exact = app.add_subcommand("exact", "Solve one graph exactly and print JSON");
  exact->add_option("graph", graph_file, "Graph file (.json or .csv)")->required();
  exact->add_option("--node-limit", node_limit, "Branch-and-bound node budget");
  exact->add_option("--time-limit", time_limit, "Time budget in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  gcnsched::CommandContext ctx;
  ctx.config = g.config;
  ctx.seed = g.seed;
  ctx.out = g.out;
  ctx.workers = g.workers;
  ctx.force = g.force;
  for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    if (*gen) {
      gcnsched::cmd_gen_data(ctx);
    } else if (*train) {
      gcnsched::cmd_train(ctx, trainer, init_model);
    } else if (*eval) {
      gcnsched::cmd_eval(ctx);
    } else if (*sim) {
      gcnsched::cmd_simulate(ctx);
    } else if (*exact) {
      const nlohmann::json budget{{"node_limit", node_limit}, {"time_limit", time_limit}};
      if (!gcnsched::cmd_exact(graph_file, budget, std::cout))
        std::cerr << "warning: budget exhausted; the set is the best found, not a proven optimum\n";
    }
  } catch (const gcnsched::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const gcnsched::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
