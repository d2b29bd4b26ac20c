#include "gcnsched/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "gcnsched/csv.hpp"
#include "gcnsched/exact.hpp"
#include "gcnsched/gcn_io.hpp"
#include "gcnsched/graph_io.hpp"
#include "gcnsched/parallel.hpp"
#include "gcnsched/sim.hpp"
#include "gcnsched/solvers.hpp"
#include "gcnsched/training.hpp"

namespace gcnsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::seed_seq seq{seed, a, b, c};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

template <typename T>
T opt(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

const json& section(const json& cfg, const char* key) {
  static const json empty = json::object();
  if (!cfg.contains(key)) return empty;
  if (!cfg.at(key).is_object()) throw UsageError(std::string("config field \"") + key + "\" must be an object");
  return cfg.at(key);
}

fs::path require_path(const json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg.at(key).is_string())
    throw UsageError(std::string("config needs a string field \"") + key + "\"");
  return cfg.at(key).get<std::string>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Instance {
  std::string file;
  ConflictGraph graph;
  VertexWeights weights;
};

/// Graph files of a dataset directory (its graphs/ subdirectory when
/// present), in file-name order.
std::vector<Instance> load_dataset(const fs::path& dir) {
  fs::path root = fs::is_directory(dir / "graphs") ? dir / "graphs" : dir;
  if (!fs::is_directory(root)) throw UsageError("dataset directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".json" || ext == ".csv") && e.path().filename() != "manifest.json")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Instance> out;
  for (const auto& f : files) {
    GraphFile gf = load_graph(f);
    out.push_back({f.filename().string(), std::move(gf.graph), std::move(gf.weights)});
  }
  return out;
}

ExactBudget exact_budget(const json& j, ExactBudget b = {}) {
  b.node_limit = opt<long>(j, "node_limit", b.node_limit);
  b.time_limit = opt<double>(j, "time_limit", b.time_limit);
  if (b.node_limit <= 0 || !(b.time_limit > 0)) throw UsageError("exact budget must be positive");
  return b;
}

std::shared_ptr<const GcnModeld> maybe_model(const json& models, const char* key) {
  if (!models.contains(key)) return nullptr;
  const fs::path p = models.at(key).get<std::string>();
  if (!fs::exists(p)) throw UsageError(std::string("model file for \"") + key + "\" not found: " + p.string());
  return std::make_shared<const GcnModeld>(load_model(p));
}

SolverModels load_models(const json& cfg) {
  const json& m = section(cfg, "models");
  return {maybe_model(m, "gcn"), maybe_model(m, "mlp"), maybe_model(m, "qnet"), maybe_model(m, "crts")};
}

SolverOptions solver_options(const json& cfg) {
  SolverOptions o;
  o.branching = opt<int>(cfg, "branching", o.branching);
  o.fortify = opt<bool>(cfg, "fortify", o.fortify);
  const json& c = section(cfg, "crts");
  o.crts.backtrack_prob = opt<double>(c, "backtrack_prob", o.crts.backtrack_prob);
  o.crts.timeout = opt<double>(c, "timeout", o.crts.timeout);
  o.crts.threads = opt<int>(c, "threads", o.crts.threads);
  o.crts.max_descents = opt<long>(c, "max_descents", o.crts.max_descents);
  o.exact = exact_budget(section(cfg, "exact"));
  return o;
}

std::vector<std::string> string_list(const json& cfg, const char* key, std::vector<std::string> fallback) {
  return opt<std::vector<std::string>>(cfg, key, std::move(fallback));
}

}  // namespace

json load_config(const fs::path& path) {
  if (path.empty()) return json::object();
  if (!fs::exists(path)) throw UsageError("config file " + path.string() + " not found");
  const std::string text = read_text_file(path);
  try {
    json cfg = json::parse(text);
    if (!cfg.is_object()) throw UsageError("config " + path.string() + " must hold a JSON object");
    return cfg;
  } catch (const json::parse_error& e) {
    throw UsageError("malformed config " + path.string() + " (line " +
                     std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) + ")");
  }
}

std::uint64_t resolve_seed(const CommandContext& ctx, const json& cfg) {
  if (ctx.seed) return *ctx.seed;
  return opt<std::uint64_t>(cfg, "seed", 0);
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (dir.empty()) throw UsageError("--out is required");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw UsageError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

std::string config_hash(const json& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_manifest(const CommandContext& ctx, const std::string& command, const json& cfg, std::uint64_t seed,
                    const std::string& started, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["command_line"] = ctx.command_line;
  m["config"] = cfg;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = seed;
  m["version"] = kToolVersion;
  m["csv_schema"] = kCsvSchemaVersion;
  m["started"] = started;
  m["finished"] = utc_timestamp();
  m["outputs"] = outputs;
  write_text(ctx.out / "manifest.json", m.dump(2) + "\n");
}

void cmd_gen_data(const CommandContext& ctx) {
  const std::string started = utc_timestamp();
  const json cfg = load_config(ctx.config);
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  const auto families = string_list(cfg, "families", {"er"});
  const auto sizes = opt<std::vector<int>>(cfg, "sizes", {30, 60});
  const auto degrees = opt<std::vector<double>>(cfg, "degrees", {5.0, 10.0});
  const int count = opt<int>(cfg, "count_per_cell", 25);
  if (count < 0) throw UsageError("count_per_cell must be >= 0");
  for (const auto& f : families)
    if (f != "er" && f != "ba") throw UsageError("unknown graph family \"" + f + "\"");
  for (int v : sizes)
    if (v < 2) throw UsageError("graph sizes must be >= 2");
  for (double d : degrees)
    if (!(d > 0)) throw UsageError("average degrees must be positive");

  struct Job {
    std::string family;
    int v;
    double d;
    int index;
    std::string file;
  };
  std::vector<Job> jobs;
  for (const auto& fam : families)
    for (int v : sizes)
      for (double d : degrees)
        for (int i = 0; i < count; ++i) {
          std::ostringstream name;
          name << fam << "_v" << v << "_d" << fmt(d) << "_" << std::setw(4) << std::setfill('0') << i << ".json";
          jobs.push_back({fam, v, d, i, name.str()});
        }
  // Validate every cell before touching the output directory.
  for (const auto& j : jobs) {
    if (j.family == "er" && j.d > j.v - 1) throw UsageError("degree exceeds V-1 for an ER cell");
    if (j.family == "ba" && (std::lround(j.d) < 1 || std::lround(j.d) >= j.v))
      throw UsageError("BA cells need 1 <= round(degree) < V");
  }

  prepare_output_dir(ctx.out, ctx.force);
  if (!jobs.empty()) fs::create_directories(ctx.out / "graphs");
  parallel_for(jobs.size(), ctx.workers, [&](std::size_t k) {
    const Job& j = jobs[k];
    const std::uint64_t gs = derive_seed(seed, k, 1);
    // Preferential attachment with m = d, as in the experiments.
    const ConflictGraph g = j.family == "er" ? gen_er(j.v, j.d / (j.v - 1), gs)
                                             : gen_ba(j.v, static_cast<int>(std::lround(j.d)), gs);
    save_graph(ctx.out / "graphs" / j.file, g, uniform_weights(j.v, derive_seed(seed, k, 2)));
  });

  std::ostringstream index;
  index << "file,family,V,degree,index\n";
  std::vector<std::string> outputs;
  for (const auto& j : jobs) {
    index << j.file << ',' << j.family << ',' << j.v << ',' << fmt(j.d) << ',' << j.index << '\n';
    outputs.push_back("graphs/" + j.file);
  }
  write_text(ctx.out / "index.csv", index.str());
  outputs.push_back("index.csv");
  write_manifest(ctx, "gen-data", cfg, seed, started, outputs);
}

namespace {

GcnModeld build_model(const json& m, const std::string& trainer, std::uint64_t seed) {
  std::vector<int> dims;
  std::string features, output, init;
  if (trainer == "dpg") {
    dims = {1, 1};
    features = "constant";
    output = "scalar-embedding";
    init = "identity";
  } else if (trainer == "crts") {
    dims = {1, 32, 32, 32, 16};
    features = "utility";
    output = "crts-logits";
    init = "xavier";
  } else {
    dims = {1, 32, 32, 32, 32, 1};
    features = "utility";
    output = "q-values";
    init = "xavier";
  }
  dims = opt<std::vector<int>>(m, "dims", dims);
  features = opt<std::string>(m, "features", features);
  output = opt<std::string>(m, "output", output);
  init = opt<std::string>(m, "init", init);
  const std::string agg = opt<std::string>(m, "aggregation", "laplacian");
  if (agg != "laplacian" && agg != "none") throw UsageError("aggregation must be laplacian or none");
  const Aggregation aggregation = agg == "none" ? Aggregation::kNone : Aggregation::kLaplacian;
  FeatureMode fm;
  OutputKind ok;
  try {
    fm = feature_mode_from_string(features);
    ok = output_kind_from_string(output);
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  }
  if (dims.empty() || dims.front() != feature_dim(fm))
    throw UsageError("model dims must start with the feature width (" + std::to_string(feature_dim(fm)) + ")");
  GcnModeld model;
  try {
    if (init == "identity") {
      model = identity_gcn<double>(dims, ok, fm, opt<int>(m, "pass_feature", fm == FeatureMode::kDegree ? 1 : 0),
                                   opt<double>(m, "noise", 0.0), seed, aggregation);
    } else if (init == "xavier") {
      model = make_gcn<double>(dims, ok, fm, seed, aggregation);
    } else {
      throw UsageError("model init must be identity or xavier");
    }
  } catch (const ShapeError& e) {
    throw UsageError(std::string("model: ") + e.what());
  }
  model.leaky_slope = opt<double>(m, "leaky_slope", model.leaky_slope);
  const std::string pair = opt<std::string>(m, "pair_activation", "sigmoid");
  if (pair != "sigmoid" && pair != "softmax") throw UsageError("pair_activation must be sigmoid or softmax");
  model.pair_activation = pair == "softmax" ? PairActivation::kSoftmax : PairActivation::kSigmoid;
  return model;
}

TrainConfig train_config(const json& cfg, std::uint64_t seed, int workers) {
  TrainConfig t;
  t.seed = seed;
  t.workers = workers;
  t.learning_rate = opt<double>(cfg, "learning_rate", t.learning_rate);
  t.batch_size = opt<int>(cfg, "batch_size", t.batch_size);
  t.epochs = opt<int>(cfg, "epochs", t.epochs);
  t.validation_fraction = opt<double>(cfg, "validation_fraction", t.validation_fraction);
  t.momentum = opt<double>(cfg, "momentum", t.momentum);
  t.reset_each_epoch = opt<bool>(cfg, "reset_each_epoch", t.reset_each_epoch);
  t.crs_branching = opt<int>(cfg, "crs_branching", t.crs_branching);
  t.validation_draws = opt<int>(cfg, "validation_draws", t.validation_draws);
  t.epsilon_decay = opt<double>(cfg, "epsilon_decay", t.epsilon_decay);
  t.epsilon_min = opt<double>(cfg, "epsilon_min", t.epsilon_min);
  t.buffer_capacity = opt<int>(cfg, "buffer_capacity", t.buffer_capacity);
  t.episodes_per_epoch = opt<int>(cfg, "episodes_per_epoch", t.episodes_per_epoch);
  const std::string optimizer = opt<std::string>(cfg, "optimizer", "sgd");
  if (optimizer != "sgd" && optimizer != "adam") throw UsageError("optimizer must be sgd or adam");
  t.optimizer = optimizer == "adam" ? Optimizer::kAdam : Optimizer::kSgd;
  const std::string ds = opt<std::string>(cfg, "downstream", "lgs");
  if (ds != "lgs" && ds != "crs-step") throw UsageError("downstream must be lgs or crs-step");
  t.downstream = ds == "lgs" ? Downstream::kLgs : Downstream::kCrsStep;
  t.validate();
  return t;
}

}  // namespace

void cmd_train(const CommandContext& ctx, const std::string& trainer, const fs::path& init_model) {
  const std::string started = utc_timestamp();
  if (trainer != "dpg" && trainer != "crts" && trainer != "dqn")
    throw UsageError("trainer must be dpg, crts or dqn");
  const json cfg = load_config(ctx.config);
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  const TrainConfig tc = train_config(cfg, seed, ctx.workers);
  GcnModeld init;
  if (!init_model.empty()) {
    if (!fs::exists(init_model)) throw UsageError("init model " + init_model.string() + " not found");
    init = load_model(init_model);
  } else {
    init = build_model(section(cfg, "model"), trainer, derive_seed(seed, 7));
  }
  const auto data = load_dataset(require_path(cfg, "data"));
  std::vector<ConflictGraph> graphs;
  for (const auto& inst : data) graphs.push_back(inst.graph);
  prepare_output_dir(ctx.out, ctx.force);

  TrainResult r;
  if (trainer == "dpg") {
    r = dpg_train(graphs, init, tc);
  } else if (trainer == "crts") {
    r = crts_train(graphs, init, tc);
  } else {
    r = dqn_train(graphs, init, tc);
  }
  save_model(r.model, ctx.out / "model.json");
  std::ofstream log(ctx.out / "train_log.csv", std::ios::binary);
  write_train_log(log, r.log);
  log.close();
  std::cerr << trainer << ": validation " << (trainer == "crts" ? "loss " : "gamma ") << fmt(r.initial_val_gamma)
            << " -> " << fmt(r.best_val_gamma) << " (" << r.skipped << " samples skipped)\n";
  write_manifest(ctx, "train " + trainer, cfg, seed, started, {"model.json", "train_log.csv"});
}

void cmd_eval(const CommandContext& ctx) {
  const std::string started = utc_timestamp();
  const json cfg = load_config(ctx.config);
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  const auto solvers = string_list(cfg, "solvers", {"cgs", "lgs"});
  const SolverModels models = load_models(cfg);
  const SolverOptions options = solver_options(cfg);
  std::vector<SolverFn> fns;
  for (const auto& s : solvers) fns.push_back(make_solver(s, models, options));
  const bool score = opt<bool>(cfg, "score_exact", true);
  const auto data = load_dataset(require_path(cfg, "data"));
  prepare_output_dir(ctx.out, ctx.force);

  std::vector<SolveResult> optimum(data.size());
  std::vector<std::vector<SolveResult>> results(data.size(), std::vector<SolveResult>(solvers.size()));
  parallel_for(data.size(), ctx.workers, [&](std::size_t i) {
    const auto& inst = data[i];
    if (score) optimum[i] = mwis_exact(inst.graph, inst.weights, options.exact);
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      results[i][s] = fns[s](inst.graph, inst.weights, derive_seed(seed, i, s));
      if (!inst.graph.is_independent(results[i][s].solution))
        throw std::logic_error("solver " + solvers[s] + " returned a non-independent set");
    }
  });

  std::ostringstream rows;
  rows << "instance,file,V,E,avg_degree,solver,utility,optimum,optimal,ar,rounds,messages\n";
  struct Agg {
    long n = 0, scored = 0;
    double ar = 0, utility = 0, rounds = 0, messages = 0;
  };
  std::vector<Agg> agg(solvers.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& inst = data[i];
    const bool opt_ok = score && optimum[i].optimal;
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      const auto& r = results[i][s];
      rows << i << ',' << inst.file << ',' << inst.graph.vertex_count() << ',' << inst.graph.edge_count() << ','
           << fmt(inst.graph.average_degree()) << ',' << solvers[s] << ',' << fmt(r.utility) << ','
           << (score ? fmt(optimum[i].utility) : "") << ',' << (opt_ok ? 1 : 0) << ',';
      Agg& a = agg[s];
      if (opt_ok) {
        const double ar = approximation_ratio(r, optimum[i]);
        rows << fmt(ar);
        a.ar += ar;
        ++a.scored;
      }
      rows << ',' << r.rounds << ',' << r.messages << '\n';
      ++a.n;
      a.utility += r.utility;
      a.rounds += r.rounds;
      a.messages += static_cast<double>(r.messages);
    }
  }
  write_text(ctx.out / "ar.csv", rows.str());

  std::ostringstream summary;
  summary << "solver,instances,scored,mean_ar,mean_utility,mean_rounds,mean_messages\n";
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    const Agg& a = agg[s];
    const double n = std::max<long>(a.n, 1);
    summary << solvers[s] << ',' << a.n << ',' << a.scored << ',' << (a.scored ? fmt(a.ar / a.scored) : "") << ','
            << fmt(a.utility / n) << ',' << fmt(a.rounds / n) << ',' << fmt(a.messages / n) << '\n';
  }
  write_text(ctx.out / "summary.csv", summary.str());
  write_manifest(ctx, "eval", cfg, seed, started, {"ar.csv", "summary.csv"});
}

void cmd_simulate(const CommandContext& ctx) {
  const std::string started = utc_timestamp();
  const json cfg = load_config(ctx.config);
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  const int networks = opt<int>(cfg, "networks", 10);
  const int instances = opt<int>(cfg, "instances", 1);
  if (networks < 0 || instances < 1) throw UsageError("networks must be >= 0 and instances >= 1");
  const json& np = section(cfg, "network");
  NetworkParams netp;
  netp.users = opt<int>(np, "users", netp.users);
  netp.area = opt<double>(np, "area", netp.area);
  netp.link_radius = opt<double>(np, "link_radius", netp.link_radius);
  netp.interf_radius = opt<double>(np, "interf_radius", netp.interf_radius);

  SimConfig base;
  base.slots = opt<int>(cfg, "slots", base.slots);
  base.channels = opt<int>(cfg, "channels", base.channels);
  base.retain_prob = opt<double>(cfg, "retain_prob", base.retain_prob);
  base.shadow_oracle = opt<bool>(cfg, "shadow_oracle", base.shadow_oracle);
  base.oracle_budget = exact_budget(section(cfg, "oracle_budget"), base.oracle_budget);
  const json& rp = section(cfg, "rates");
  base.rates.mean = opt<double>(rp, "mean", base.rates.mean);
  base.rates.stddev = opt<double>(rp, "stddev", base.rates.stddev);
  base.rates.lo = opt<double>(rp, "lo", base.rates.lo);
  base.rates.hi = opt<double>(rp, "hi", base.rates.hi);
  const std::string util = opt<std::string>(cfg, "utility", "min");
  if (util != "min" && util != "product") throw UsageError("utility must be min or product");
  base.utility = util == "min" ? UtilityKind::kMinQR : UtilityKind::kQTimesR;
  if (base.slots < 1 || base.channels < 1) throw UsageError("slots and channels must be >= 1");

  std::vector<ChannelMode> modes;
  for (const auto& m : string_list(cfg, "modes", {"joint"})) {
    if (m == "joint") {
      modes.push_back(ChannelMode::kJoint);
    } else if (m == "sequential") {
      modes.push_back(ChannelMode::kSequential);
    } else {
      throw UsageError("mode must be joint or sequential");
    }
  }
  std::vector<LoadSpec> loads;
  const bool literal = opt<bool>(cfg, "literal_load", false);
  const json load_list = cfg.contains("loads") ? cfg.at("loads") : json::array({"oversaturated"});
  if (!load_list.is_array()) throw UsageError("loads must be an array");
  for (const auto& l : load_list) {
    if (l.is_string() && l.get<std::string>() == "oversaturated") {
      loads.push_back(LoadSpec{});
    } else if (l.is_number() && l.get<double>() > 0) {
      loads.push_back(LoadSpec{false, l.get<double>(), literal});
    } else {
      throw UsageError("loads entries must be \"oversaturated\" or positive numbers");
    }
  }
  const auto names = string_list(cfg, "schedulers", {"exact", "lgs"});
  const std::string reference = opt<std::string>(cfg, "reference", "exact");
  const SolverModels models = load_models(cfg);
  SolverOptions options = solver_options(cfg);
  std::vector<SolverFn> fns;
  for (const auto& n : names) fns.push_back(make_solver(n, models, options));
  const auto ref_it = std::find(names.begin(), names.end(), reference);
  const std::ptrdiff_t ref = ref_it == names.end() ? -1 : ref_it - names.begin();

  const json& sat_cfg = section(cfg, "saturation");
  const bool want_sat = !sat_cfg.empty();
  SolverFn sat_solver;
  if (want_sat) sat_solver = make_solver(opt<std::string>(sat_cfg, "scheduler", "exact"), models, options);
  const int sat_networks = opt<int>(sat_cfg, "networks", networks);

  prepare_output_dir(ctx.out, ctx.force);

  struct Task {
    int network, instance;
  };
  std::vector<Task> tasks;
  for (int n = 0; n < networks; ++n)
    for (int i = 0; i < instances; ++i) tasks.push_back({n, i});
  std::vector<std::vector<SimRow>> out(tasks.size());
  parallel_for(tasks.size(), ctx.workers, [&](std::size_t k) {
    const auto [n, inst] = tasks[k];
    const std::uint64_t net_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    const WirelessNetwork net = gen_network(netp, net_seed);
    if (net.conflict.vertex_count() == 0) return;
    const MultiChannelGraph mc = channel_graph(net, base, derive_seed(net_seed, 1));
    const double rho = per_link_service(mc.graph, derive_seed(net_seed, 2)) * base.channels;
    for (std::size_t li = 0; li < loads.size(); ++li) {
      SimConfig c = base;
      c.load = loads[li];
      const double lambda = arrival_rate(c.load, c.rates, rho);
      const Realization real = make_realization(net.conflict.vertex_count(), c.slots, c.channels, lambda, c.rates,
                                                derive_seed(net_seed, 3, static_cast<std::uint64_t>(inst), li));
      for (ChannelMode mode : modes) {
        c.mode = mode;
        for (std::size_t s = 0; s < names.size(); ++s) {
          SimRow row;
          row.network_seed = net_seed;
          row.instance = inst;
          row.scheduler = names[s];
          row.mode = to_string(mode);
          row.channels = c.channels;
          row.load = c.load.oversaturated ? 0.0 : c.load.load;
          row.metrics = simulate(net, mc, fns[s], c, real, derive_seed(net_seed, 4, static_cast<std::uint64_t>(inst), s));
          out[k].push_back(std::move(row));
        }
      }
    }
  });

  std::vector<SimRow> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  {
    std::ofstream f(ctx.out / "sim.csv", std::ios::binary);
    write_sim_csv(f, rows);
  }

  // Per-scheduler averages, normalized per (network, instance, mode, load)
  // against the reference scheduler when it was run.
  struct Agg {
    long n = 0, violations = 0, conflicts = 0;
    double thpt = 0, norm_thpt = 0, norm_backlog = 0, ar = 0, rounds = 0;
    long norm_n = 0, backlog_n = 0;
  };
  std::map<std::tuple<std::string, double, std::size_t, std::string>, Agg> agg;
  const std::size_t group = names.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SimRow& r = rows[i];
    const std::size_t s = i % group;
    Agg& a = agg[{r.mode, r.load, s, r.scheduler}];
    ++a.n;
    a.thpt += r.metrics.throughput;
    a.ar += r.metrics.mean_ar;
    a.rounds += r.metrics.rounds_mean;
    a.violations += r.metrics.oracle_violations;
    a.conflicts += r.metrics.multi_channel_conflicts;
    if (ref >= 0) {
      const SimRow& rr = rows[i - s + static_cast<std::size_t>(ref)];
      if (rr.metrics.throughput > 0) {
        a.norm_thpt += r.metrics.throughput / rr.metrics.throughput;
        ++a.norm_n;
      }
      if (rr.metrics.median_backlog > 0) {
        a.norm_backlog += r.metrics.median_backlog / rr.metrics.median_backlog;
        ++a.backlog_n;
      }
    }
  }
  std::ostringstream summary;
  summary << "scheduler,mode,K,load,runs,mean_throughput,mean_normalized_throughput,mean_normalized_backlog,mean_ar,"
             "mean_rounds,oracle_violations,multi_channel_conflicts\n";
  for (const auto& [key, a] : agg) {
    const auto& [mode, load, s, sched] = key;
    std::ostringstream line;
    line << sched << ',' << mode << ',' << base.channels << ',' << fmt(load) << ',' << a.n << ','
         << fmt(a.thpt / a.n) << ',' << (a.norm_n ? fmt(a.norm_thpt / a.norm_n) : "") << ','
         << (a.backlog_n ? fmt(a.norm_backlog / a.backlog_n) : "") << ',' << fmt(a.ar / a.n) << ','
         << fmt(a.rounds / a.n) << ',' << a.violations << ',' << a.conflicts << '\n';
    summary << line.str();
  }
  write_text(ctx.out / "summary.csv", summary.str());
  std::vector<std::string> outputs{"sim.csv", "summary.csv"};

  if (want_sat) {
    std::vector<SaturationResult> sat(static_cast<std::size_t>(sat_networks));
    std::vector<std::uint64_t> seeds(sat.size());
    std::vector<char> valid(sat.size(), 0);
    SimConfig c = base;
    c.slots = opt<int>(sat_cfg, "slots", base.slots);
    c.load = LoadSpec{false, 1.0, literal};
    parallel_for(sat.size(), ctx.workers, [&](std::size_t n) {
      seeds[n] = derive_seed(seed, n);
      const WirelessNetwork net = gen_network(netp, seeds[n]);
      if (net.conflict.vertex_count() == 0) return;
      const MultiChannelGraph mc = channel_graph(net, c, derive_seed(seeds[n], 1));
      const double rho = per_link_service(mc.graph, derive_seed(seeds[n], 2)) * c.channels;
      sat[n] = estimate_saturation_load(net, mc, sat_solver, c, rho, derive_seed(seeds[n], 5));
      valid[n] = 1;
    });
    std::ostringstream s;
    s << "network_seed,K,lambda,load,mean_queue,iterations\n";
    for (std::size_t n = 0; n < sat.size(); ++n)
      if (valid[n])
        s << seeds[n] << ',' << c.channels << ',' << fmt(sat[n].lambda) << ',' << fmt(sat[n].load) << ','
          << fmt(sat[n].mean_queue) << ',' << sat[n].iterations << '\n';
    write_text(ctx.out / "saturation.csv", s.str());
    outputs.push_back("saturation.csv");
  }
  write_manifest(ctx, "simulate", cfg, seed, started, outputs);
}

bool cmd_exact(const fs::path& graph, const json& budget, std::ostream& out) {
  if (!fs::exists(graph)) throw UsageError("graph file " + graph.string() + " not found");
  const GraphFile gf = load_graph(graph);
  const SolveResult r = mwis_exact(gf.graph, gf.weights, exact_budget(budget));
  json j;
  j["value"] = r.utility;
  j["set"] = r.solution;
  j["optimal"] = r.optimal;
  out << j.dump() << '\n';
  return r.optimal;
}

}  // namespace gcnsched
