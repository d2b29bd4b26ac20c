#include "gcnsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "gcnsched/csv.hpp"

namespace gcnsched {

WirelessNetwork network_from_positions(std::vector<Point> users, double link_radius, double interf_radius,
                                       std::uint64_t direction_seed) {
  WirelessNetwork net;
  net.users = std::move(users);
  std::mt19937_64 rng(direction_seed);
  std::bernoulli_distribution flip(0.5);
  auto dist = [&](int a, int b) { return std::hypot(net.users[a].x - net.users[b].x, net.users[a].y - net.users[b].y); };
  const int n = static_cast<int>(net.users.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dist(i, j) < link_radius) {
        if (flip(rng)) {
          net.links.emplace_back(j, i);
        } else {
          net.links.emplace_back(i, j);
        }
      }
  const int l = static_cast<int>(net.links.size());
  std::vector<Edge> edges;
  for (int a = 0; a < l; ++a)
    for (int b = a + 1; b < l; ++b) {
      const auto [a1, a2] = net.links[a];
      const auto [b1, b2] = net.links[b];
      const double d = std::min({dist(a1, b1), dist(a1, b2), dist(a2, b1), dist(a2, b2)});
      if (d < interf_radius) edges.emplace_back(a, b);
    }
  net.conflict = ConflictGraph::from_edges(l, edges);
  return net;
}

WirelessNetwork gen_network(const NetworkParams& p, std::uint64_t seed) {
  if (p.users < 0 || !(p.area > 0) || !(p.link_radius > 0) || p.interf_radius < 0)
    throw UsageError("gen_network: invalid parameters");
  std::mt19937_64 rng(seed);
  const double side = std::sqrt(p.area);
  std::uniform_real_distribution<double> coord(0.0, side);
  std::vector<Point> users(p.users);
  for (auto& u : users) u = {coord(rng), coord(rng)};
  return network_from_positions(std::move(users), p.link_radius, p.interf_radius, rng());
}

std::vector<double> draw_rates(int link_count, std::uint64_t seed, const RateParams& p) {
  std::vector<double> r(link_count, p.mean);
  if (p.stddev > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(p.mean, p.stddev);
    for (auto& x : r) x = dist(rng);
  }
  for (auto& x : r) x = std::clamp(x, p.lo, p.hi);
  return r;
}

double poisson_quantile(double lambda, double uniform) {
  if (lambda < 0) throw UsageError("negative arrival rate");
  if (lambda == 0.0) return 0.0;
  long k = 0;
  double pmf, cdf;
  if (lambda <= 500.0) {
    pmf = std::exp(-lambda);
  } else {
    // Mass below mean - 12 sd is negligible; start there in log space.
    k = std::max(0L, static_cast<long>(lambda - 12.0 * std::sqrt(lambda)));
    pmf = std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
  }
  cdf = pmf;
  const long cap = static_cast<long>(lambda + 40.0 * std::sqrt(lambda) + 100.0);
  while (uniform > cdf && k < cap) {
    ++k;
    pmf *= lambda / static_cast<double>(k);
    cdf += pmf;
  }
  return static_cast<double>(k);
}

std::vector<double> draw_arrivals(double lambda, int link_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> a(link_count);
  for (auto& x : a) x = poisson_quantile(lambda, unif(rng));
  return a;
}

double link_utility(double q, double r, UtilityKind kind) { return kind == UtilityKind::kMinQR ? std::min(q, r) : q * r; }

namespace {

double serve(SimState& s, int link, double rate) {
  const double served = std::min(s.queues[link], rate);
  s.queues[link] -= served;
  s.delivered += served;
  return served;
}

void add_arrivals(SimState& s, const std::vector<double>& arrivals) {
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    s.queues[i] += arrivals[i];
    s.arrived += arrivals[i];
  }
}

void require_independent(const ConflictGraph& g, const VertexSet& schedule) {
  if (!g.is_independent(schedule)) throw std::logic_error("scheduler returned a non-independent set");
}

}  // namespace

SlotOutcome step(SimState& state, const ConflictGraph& conflict, const VertexSet& schedule,
                 const std::vector<double>& rates, const std::vector<double>& arrivals, UtilityKind kind) {
  require_independent(conflict, schedule);
  SlotOutcome out;
  for (Vertex v : schedule) {
    out.utility += link_utility(state.queues[v], rates[v], kind);
    out.delivered += serve(state, v, rates[v]);
  }
  add_arrivals(state, arrivals);
  ++state.slot;
  return out;
}

Realization make_realization(int link_count, int slots, int channels, double lambda, const RateParams& rp,
                             std::uint64_t seed) {
  Realization r;
  std::seed_seq sa{seed, std::uint64_t{1}}, sr{seed, std::uint64_t{2}};
  std::mt19937_64 ra(sa), rr(sr);
  for (int t = 0; t <= slots; ++t) r.arrivals.push_back(draw_arrivals(lambda, link_count, ra()));
  for (int t = 0; t < slots; ++t) r.rates.push_back(draw_rates(link_count * channels, rr(), rp));
  return r;
}

MultiChannelGraph channel_graph(const WirelessNetwork& net, const SimConfig& cfg, std::uint64_t seed) {
  return multi_channel_graph(net.conflict, cfg.channels, cfg.channels == 1 ? 1.0 : cfg.retain_prob, seed, true);
}

double per_link_service(const ConflictGraph& g, std::uint64_t seed) {
  // Fraction of links a greedy schedule serves under uniform utilities.
  if (g.vertex_count() == 0) return 1.0;
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  constexpr int kDraws = 20;
  for (int i = 0; i < kDraws; ++i)
    sum += static_cast<double>(cgs(g, uniform_weights(g.vertex_count(), rng())).solution.size());
  return sum / kDraws / g.vertex_count();
}

double arrival_rate(const LoadSpec& load, const RateParams& rp, double rho_serve) {
  if (load.lambda > 0) return load.lambda;
  if (load.oversaturated) return 2.0 * rp.mean;
  if (!(load.load > 0)) throw UsageError("traffic load must be positive");
  if (load.literal_load) return rp.mean / load.load;
  return load.load * rp.mean * rho_serve;
}

SimMetrics simulate(const WirelessNetwork& net, const MultiChannelGraph& mc, const SolverFn& scheduler,
                    const SimConfig& cfg, const Realization& real, std::uint64_t solver_seed) {
  const int links = net.conflict.vertex_count();
  const int k_count = cfg.channels;
  if (mc.map.base_count != links || mc.map.channel_count != k_count)
    throw ShapeError("multi-channel graph does not match network/config");
  if (static_cast<int>(real.rates.size()) < cfg.slots || static_cast<int>(real.arrivals.size()) <= cfg.slots)
    throw ShapeError("realization shorter than the configured slot count");

  // Per-channel graphs (same-channel edges only) for sequential mode.
  std::vector<ConflictGraph> per_channel;
  if (cfg.mode == ChannelMode::kSequential)
    for (int k = 0; k < k_count; ++k) {
      std::vector<char> keep(mc.graph.vertex_count(), 0);
      for (int v = 0; v < links; ++v) keep[mc.map.expand(v, k)] = 1;
      per_channel.push_back(induced_subgraph(mc.graph, keep).graph);
    }

  SimState state;
  state.queues.assign(links, 0.0);
  add_arrivals(state, real.arrivals[0]);
  SimMetrics m;
  m.initial_queues = state.queues;
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(cfg.slots) * links);
  double ar_sum = 0.0;
  long rounds_sum = 0;

  auto shadow = [&](const ConflictGraph& g, const VertexWeights& w, double achieved, double& oracle_total) {
    const SolveResult opt = mwis_exact(g, w, cfg.oracle_budget);
    oracle_total += opt.utility;
    if (!opt.optimal) ++m.oracle_unproven;
    if (opt.optimal && achieved > opt.utility + 1e-9 * std::max(1.0, opt.utility)) ++m.oracle_violations;
  };

  for (int t = 0; t < cfg.slots; ++t) {
    for (double q : state.queues) pooled.push_back(q);
    const std::vector<double>& rates = real.rates[t];
    const std::uint64_t seed = solver_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t);
    double slot_util = 0.0, oracle_util = 0.0;

    if (cfg.mode == ChannelMode::kJoint || k_count == 1) {
      const int n = mc.graph.vertex_count();
      VertexWeights w(n);
      for (int x = 0; x < n; ++x) w[x] = link_utility(state.queues[mc.map.base(x)], rates[x], cfg.utility);
      const SolveResult res = scheduler(mc.graph, w, seed);
      require_independent(mc.graph, res.solution);
      std::vector<char> used(links, 0);
      for (Vertex x : res.solution) {
        const int link = mc.map.base(x);
        if (used[link]) ++m.multi_channel_conflicts;
        used[link] = 1;
      }
      slot_util = total_utility(w, res.solution);
      if (cfg.shadow_oracle) shadow(mc.graph, w, slot_util, oracle_util);
      for (Vertex x : res.solution) serve(state, mc.map.base(x), rates[x]);
      rounds_sum += res.rounds;
    } else {
      std::vector<char> free(links, 1);
      for (int k = 0; k < k_count; ++k) {
        const InducedSubgraph sub = induced_subgraph(per_channel[k], free);
        VertexWeights w(static_cast<Eigen::Index>(sub.to_parent.size()));
        for (std::size_t i = 0; i < sub.to_parent.size(); ++i) {
          const int link = sub.to_parent[i];
          w[static_cast<Eigen::Index>(i)] =
              link_utility(state.queues[link], rates[mc.map.expand(link, k)], cfg.utility);
        }
        const SolveResult res = scheduler(sub.graph, w, seed + 7919ULL * static_cast<std::uint64_t>(k));
        require_independent(sub.graph, res.solution);
        const double util = total_utility(w, res.solution);
        slot_util += util;
        if (cfg.shadow_oracle) shadow(sub.graph, w, util, oracle_util);
        for (Vertex i : res.solution) {
          const int link = sub.to_parent[i];
          if (!free[link]) ++m.multi_channel_conflicts;
          free[link] = 0;
          serve(state, link, rates[mc.map.expand(link, k)]);
        }
        rounds_sum += res.rounds;
      }
    }
    add_arrivals(state, real.arrivals[t + 1]);
    ++state.slot;
    m.slot_utility.push_back(slot_util);
    if (cfg.shadow_oracle) {
      m.slot_oracle.push_back(oracle_util);
      ar_sum += oracle_util > 0 ? slot_util / oracle_util : 1.0;
    }
  }
  m.delivered = state.delivered;
  m.arrived = state.arrived;
  m.throughput = cfg.slots > 0 ? state.delivered / cfg.slots : 0.0;
  if (!pooled.empty()) {
    m.mean_queue = std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
    auto mid = pooled.begin() + static_cast<long>(pooled.size() / 2);
    std::nth_element(pooled.begin(), mid, pooled.end());
    m.median_backlog = *mid;
    if (pooled.size() % 2 == 0) {
      const double lower = *std::max_element(pooled.begin(), mid);
      m.median_backlog = 0.5 * (m.median_backlog + lower);
    }
  }
  m.mean_ar = cfg.shadow_oracle && cfg.slots > 0 ? ar_sum / cfg.slots : 1.0;
  m.rounds_mean = cfg.slots > 0 ? static_cast<double>(rounds_sum) / cfg.slots : 0.0;
  m.final_queues = state.queues;
  return m;
}

SaturationResult estimate_saturation_load(const WirelessNetwork& net, const MultiChannelGraph& mc,
                                          const SolverFn& scheduler, const SimConfig& cfg, double rho_serve,
                                          std::uint64_t seed, double tol, int max_iter) {
  const double target = cfg.rates.mean;
  const int links = net.conflict.vertex_count();
  if (links == 0) throw UsageError("saturation load undefined for a network without links");
  SimConfig c = cfg;
  c.shadow_oracle = false;
  SaturationResult out;
  auto mean_queue = [&](double lambda) {
    ++out.iterations;
    const Realization real = make_realization(links, c.slots, c.channels, lambda, c.rates, seed);
    return simulate(net, mc, scheduler, c, real, seed).mean_queue;
  };
  double lo = 0.0, hi = target * std::max(rho_serve, 0.05);
  double q_hi = mean_queue(hi);
  for (int widen = 0; q_hi < target; ++widen) {
    if (widen == 8) throw std::runtime_error("saturation bisection could not bracket the target queue");
    lo = hi;
    hi *= 2.0;
    q_hi = mean_queue(hi);
  }
  double mid = hi, q_mid = q_hi;
  for (int i = 0; i < max_iter && std::abs(q_mid - target) >= tol * target; ++i) {
    mid = 0.5 * (lo + hi);
    q_mid = mean_queue(mid);
    (q_mid < target ? lo : hi) = mid;
  }
  out.lambda = mid;
  out.mean_queue = q_mid;
  out.load = cfg.load.literal_load ? target / mid : mid / (target * rho_serve);
  return out;
}

const char* to_string(ChannelMode m) { return m == ChannelMode::kJoint ? "joint" : "sequential"; }

void write_sim_csv(std::ostream& out, const std::vector<SimRow>& rows) {
  out << "network_seed,instance,scheduler,mode,K,load,throughput,median_backlog,mean_ar,rounds_mean\n";
  for (const auto& r : rows)
    out << r.network_seed << ',' << r.instance << ',' << r.scheduler << ',' << r.mode << ',' << r.channels << ','
        << fmt(r.load) << ',' << fmt(r.metrics.throughput) << ',' << fmt(r.metrics.median_backlog) << ','
        << fmt(r.metrics.mean_ar) << ',' << fmt(r.metrics.rounds_mean) << '\n';
}

}  // namespace gcnsched
