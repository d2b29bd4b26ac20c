#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "doctest.h"
#include "gcnsched/commands.hpp"
#include "gcnsched/exact.hpp"
#include "gcnsched/gcn_io.hpp"
#include "gcnsched/graph_io.hpp"

using namespace gcnsched;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gcnsched_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& cfg) {
  const fs::path p = dir / name;
  std::ofstream(p) << cfg.dump();
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

int count_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

CommandContext context(const fs::path& config, const fs::path& out, std::uint64_t seed = 1) {
  CommandContext c;
  c.config = config;
  c.out = out;
  c.seed = seed;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GCNSCHED_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path make_dataset(const fs::path& dir, int count) {
  const auto cfg = write_config(dir, "gen.json", {{"families", {"er"}}, {"sizes", {12}}, {"degrees", {3}},
                                                  {"count_per_cell", count}});
  cmd_gen_data(context(cfg, dir / "data", 5));
  return dir / "data";
}

}  // namespace

TEST_CASE("gen-data with zero count writes only the manifest") {
  const auto dir = scratch("gen0");
  const auto cfg = write_config(dir, "c.json", {{"count_per_cell", 0}});
  cmd_gen_data(context(cfg, dir / "out"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "graphs"));
  const json m = json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(m["seed"] == 1);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("gen-data is deterministic per seed and fills every cell") {
  const auto dir = scratch("gendet");
  const auto cfg = write_config(dir, "c.json", {{"families", {"er", "ba"}}, {"sizes", {20, 30}},
                                                {"degrees", {2, 4}}, {"count_per_cell", 3}});
  cmd_gen_data(context(cfg, dir / "a", 9));
  cmd_gen_data(context(cfg, dir / "b", 9));
  cmd_gen_data(context(cfg, dir / "c", 10));
  int files = 0, same_as_other_seed = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "graphs")) {
    ++files;
    const auto name = e.path().filename();
    CHECK(slurp(e.path()) == slurp(dir / "b" / "graphs" / name));
    same_as_other_seed += slurp(e.path()) == slurp(dir / "c" / "graphs" / name);
    CHECK(load_graph(e.path()).graph.vertex_count() >= 20);
  }
  CHECK(files == 2 * 2 * 2 * 3);
  CHECK(same_as_other_seed == 0);
  CHECK(count_lines(dir / "a" / "index.csv") == files + 1);
}

TEST_CASE("gen-data refuses a non-empty directory unless forced") {
  const auto dir = scratch("genforce");
  const auto cfg = write_config(dir, "c.json", {{"count_per_cell", 0}});
  cmd_gen_data(context(cfg, dir / "out"));
  std::ofstream(dir / "out" / "keep.txt") << "x";
  CHECK_THROWS_AS(cmd_gen_data(context(cfg, dir / "out")), UsageError);
  auto ctx = context(cfg, dir / "out");
  ctx.force = true;
  cmd_gen_data(ctx);
  CHECK(fs::exists(dir / "out" / "keep.txt"));
}

TEST_CASE("config and seed resolution") {
  const auto dir = scratch("cfg");
  CHECK(load_config("").empty());
  std::ofstream(dir / "bad.json") << "{\n\"a\": 1,\n}";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), UsageError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), UsageError);
  CommandContext c;
  CHECK(resolve_seed(c, json{{"seed", 4}}) == 4);
  CHECK(resolve_seed(c, json::object()) == 0);
  c.seed = 7;
  CHECK(resolve_seed(c, json{{"seed", 4}}) == 7);
  CHECK(config_hash(json{{"a", 1}}) == config_hash(json{{"a", 1}}));
  CHECK(config_hash(json{{"a", 1}}) != config_hash(json{{"a", 2}}));
}

TEST_CASE("train with zero epochs saves the initial model") {
  const auto dir = scratch("train0");
  const auto data = make_dataset(dir, 6);
  const auto cfg = write_config(dir, "t.json", {{"data", data.string()}, {"epochs", 0}});
  cmd_train(context(cfg, dir / "m"), "dpg", "");
  const GcnModeld m = load_model(dir / "m" / "model.json");
  const std::vector<int> dims{1, 1};
  const GcnModeld ident = identity_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant);
  CHECK(model_to_json(m) == model_to_json(ident));
  CHECK(count_lines(dir / "m" / "train_log.csv") == 1);
}

TEST_CASE("train log has one row per epoch") {
  const auto dir = scratch("train3");
  const auto data = make_dataset(dir, 6);
  const auto cfg = write_config(dir, "t.json", {{"data", data.string()}, {"epochs", 3}, {"batch_size", 4}});
  cmd_train(context(cfg, dir / "m"), "dpg", "");
  CHECK(count_lines(dir / "m" / "train_log.csv") == 4);
  CHECK_THROWS_AS(cmd_train(context(cfg, dir / "m2"), "sgd", ""), UsageError);
  const auto bad = write_config(dir, "b.json", {{"data", data.string()}, {"model", {{"dims", {3, 1}}}}});
  CHECK_THROWS_AS(cmd_train(context(bad, dir / "m3"), "dpg", ""), UsageError);
}

TEST_CASE("training resumed from a saved model repeats the first epoch") {
  const auto dir = scratch("resume");
  const auto data = make_dataset(dir, 8);
  const json base{{"data", data.string()}, {"batch_size", 4}, {"model", {{"noise", 0.05}}}};
  json zero = base;
  zero["epochs"] = 0;
  cmd_train(context(write_config(dir, "z.json", zero), dir / "init"), "dpg", "");
  json one = base;
  one["epochs"] = 1;
  const auto cfg = write_config(dir, "o.json", one);
  cmd_train(context(cfg, dir / "fresh"), "dpg", "");
  cmd_train(context(cfg, dir / "resumed"), "dpg", dir / "init" / "model.json");
  CHECK(slurp(dir / "fresh" / "train_log.csv") == slurp(dir / "resumed" / "train_log.csv"));
  CHECK_THROWS_AS(cmd_train(context(cfg, dir / "x"), "dpg", dir / "nope.json"), UsageError);
}

TEST_CASE("eval with only the centralized greedy") {
  const auto dir = scratch("evalcgs");
  const auto data = make_dataset(dir, 3);
  const auto cfg = write_config(dir, "e.json", {{"data", data.string()}, {"solvers", {"cgs"}}});
  cmd_eval(context(cfg, dir / "e"));
  std::istringstream in(slurp(dir / "e" / "ar.csv"));
  std::string row;
  std::getline(in, row);
  int rows = 0;
  while (std::getline(in, row)) {
    const auto a = row.find(",cgs,");
    REQUIRE(a != std::string::npos);
    std::istringstream s(row);
    std::string f;
    for (int i = 0; i < 10; ++i) std::getline(s, f, ',');
    CHECK(std::stod(f) <= 1.0);
    ++rows;
  }
  CHECK(rows == 3);
  const json m = json::parse(slurp(dir / "e" / "manifest.json"));
  CHECK(m["csv_schema"] == kCsvSchemaVersion);
}

TEST_CASE("eval rows for lgs and cgs agree") {
  const auto dir = scratch("eval");
  const auto data = make_dataset(dir, 5);
  const auto cfg = write_config(dir, "e.json", {{"data", data.string()}, {"solvers", {"cgs", "lgs"}}});
  cmd_eval(context(cfg, dir / "e"));
  std::istringstream in(slurp(dir / "e" / "ar.csv"));
  std::string header, a, b;
  std::getline(in, header);
  CHECK(header == "instance,file,V,E,avg_degree,solver,utility,optimum,optimal,ar,rounds,messages");
  int pairs = 0;
  while (std::getline(in, a) && std::getline(in, b)) {
    auto field = [](const std::string& row, int k) {
      std::istringstream s(row);
      std::string f;
      for (int i = 0; i <= k; ++i) std::getline(s, f, ',');
      return f;
    };
    CHECK(field(a, 5) == "cgs");
    CHECK(field(b, 5) == "lgs");
    CHECK(field(a, 6) == field(b, 6));
    CHECK(field(a, 9) == field(b, 9));
    ++pairs;
  }
  CHECK(pairs == 5);
  const auto missing = write_config(dir, "m.json", {{"data", data.string()}, {"solvers", {"gcn-lgs"}}});
  CHECK_THROWS_AS(cmd_eval(context(missing, dir / "e2")), UsageError);
}

TEST_CASE("simulate writes one row per scheduler per instance and replays bytes") {
  const auto dir = scratch("sim");
  const json base{{"networks", 2},     {"instances", 2},     {"slots", 1},
                  {"schedulers", {"cgs", "lgs", "exact"}}, {"modes", {"joint", "sequential"}},
                  {"channels", 2}};
  const auto cfg = write_config(dir, "s.json", base);
  cmd_simulate(context(cfg, dir / "a"));
  cmd_simulate(context(cfg, dir / "b"));
  CHECK(count_lines(dir / "a" / "sim.csv") == 1 + 2 * 2 * 2 * 3);
  CHECK(slurp(dir / "a" / "sim.csv") == slurp(dir / "b" / "sim.csv"));
  CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));
  const std::string csv = slurp(dir / "a" / "sim.csv");
  CHECK(csv.find(",joint,2,") != std::string::npos);
  CHECK(csv.find(",sequential,2,") != std::string::npos);
  auto workers = context(cfg, dir / "c");
  workers.workers = 3;
  cmd_simulate(workers);
  CHECK(slurp(dir / "a" / "sim.csv") == slurp(dir / "c" / "sim.csv"));
}

TEST_CASE("exact prints the optimum of path-5") {
  const auto dir = scratch("exact");
  std::ofstream(dir / "p.json") << R"({"v":5,"edges":[[0,1],[1,2],[2,3],[3,4]],"weights":[0.1,0.2,0.3,0.4,0.5]})";
  std::ostringstream out;
  CHECK(cmd_exact(dir / "p.json", json::object(), out));
  const json j = json::parse(out.str());
  CHECK(j["value"].get<double>() == doctest::Approx(0.9));
  CHECK(j["set"] == json::array({0, 2, 4}));
  CHECK(j["optimal"] == true);
}

TEST_CASE("exact on an empty graph and on random graphs") {
  const auto dir = scratch("exact2");
  std::ofstream(dir / "e.json") << R"({"v":0,"edges":[]})";
  std::ostringstream out;
  CHECK(cmd_exact(dir / "e.json", json::object(), out));
  const json j = json::parse(out.str());
  CHECK(j["value"] == 0.0);
  CHECK(j["set"].empty());
  for (int s = 0; s < 5; ++s) {
    const ConflictGraph g = gen_er(18, 0.25, 40 + s);
    const VertexWeights u = uniform_weights(18, 50 + s);
    save_graph(dir / "r.json", g, u);
    std::ostringstream o;
    CHECK(cmd_exact(dir / "r.json", json::object(), o));
    CHECK(json::parse(o.str())["value"].get<double>() == doctest::Approx(mwis_brute_force(g, u).utility));
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  std::ofstream(dir / "p.json") << R"({"v":2,"edges":[[0,1]],"weights":[1,2]})";
  std::ofstream(dir / "broken.json") << R"({"v":2,"edges":[[0,5]]})";
  CHECK(run_cli("exact " + (dir / "p.json").string()) == 0);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("nonsense") == 1);
  CHECK(run_cli("exact " + (dir / "missing.json").string()) == 1);
  CHECK(run_cli("exact " + (dir / "broken.json").string()) == 2);
  CHECK(run_cli("exact --node-limit 1 " + (dir / "p.json").string()) == 0);
  CHECK(run_cli("gen-data --out " + (dir / "g").string() + " --config " + (dir / "nope.json").string()) == 1);
}
