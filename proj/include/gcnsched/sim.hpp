#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcnsched/exact.hpp"
#include "gcnsched/graph.hpp"
#include "gcnsched/solvers.hpp"

namespace gcnsched {

struct Point {
  double x = 0.0, y = 0.0;
};

struct WirelessNetwork {
  std::vector<Point> users;
  /// (source, destination) user pairs, one 1-hop flow per link.
  std::vector<std::pair<int, int>> links;
  ConflictGraph conflict;
};

struct NetworkParams {
  int users = 100;
  double area = 250.0;
  double link_radius = 1.0;
  double interf_radius = 4.0;
};

/// Users uniform in a square of the given area; a link joins users closer
/// than link_radius; two links conflict when any of their end users are
/// closer than interf_radius (links sharing a user always conflict).
WirelessNetwork gen_network(const NetworkParams& p, std::uint64_t seed);
WirelessNetwork network_from_positions(std::vector<Point> users, double link_radius, double interf_radius,
                                       std::uint64_t direction_seed);

struct RateParams {
  double mean = 50.0;
  double stddev = 25.0;
  double lo = 0.0, hi = 100.0;
};

/// Clipped normal rates, one per link.
std::vector<double> draw_rates(int link_count, std::uint64_t seed, const RateParams& p = {});

/// Poisson(lambda) counts per link, by inversion of one uniform per link so
/// that counts are non-decreasing in lambda for a fixed seed.
std::vector<double> draw_arrivals(double lambda, int link_count, std::uint64_t seed);
double poisson_quantile(double lambda, double uniform);

enum class UtilityKind { kMinQR, kQTimesR };
enum class ChannelMode { kJoint, kSequential };

struct SimState {
  std::vector<double> queues;
  int slot = 0;
  double delivered = 0.0;
  double arrived = 0.0;
};

struct SlotOutcome {
  double utility = 0.0;    // scheduled utility sum
  double delivered = 0.0;  // packets served
};

/// Serves min(q, r) on every scheduled link, then adds arrivals. `schedule`
/// holds base link ids; throws std::logic_error when it is not independent
/// in `conflict` or repeats a link.
SlotOutcome step(SimState& state, const ConflictGraph& conflict, const VertexSet& schedule,
                 const std::vector<double>& rates, const std::vector<double>& arrivals, UtilityKind kind);

double link_utility(double q, double r, UtilityKind kind);

/// Traffic intensity per link. `oversaturated` uses lambda = 2 E(r); otherwise
/// lambda = load * E(r) * rho_serve, or E(r) / load with `literal_load`.
struct LoadSpec {
  bool oversaturated = true;
  double load = 0.5;
  bool literal_load = false;
  /// Used when > 0 instead of any load mapping.
  double lambda = 0.0;
};

struct SimConfig {
  int slots = 200;
  int channels = 1;
  ChannelMode mode = ChannelMode::kJoint;
  UtilityKind utility = UtilityKind::kMinQR;
  LoadSpec load;
  RateParams rates;
  double retain_prob = 0.8;
  /// Solve the exact problem on every slot's state alongside the scheduler.
  bool shadow_oracle = false;
  ExactBudget oracle_budget{50'000'000, 30.0};
};

/// Arrivals and rates of one instance, generated once and replayed for
/// every compared scheduler.
struct Realization {
  std::vector<std::vector<double>> arrivals;  // [slot][link], arrivals[0] seeds the queues
  std::vector<std::vector<double>> rates;     // [slot][channel * L + link]
};

Realization make_realization(int link_count, int slots, int channels, double lambda, const RateParams& rp,
                             std::uint64_t seed);

struct SimMetrics {
  std::vector<double> slot_utility;
  std::vector<double> slot_oracle;  // empty without shadow oracle
  double throughput = 0.0;          // delivered packets per slot
  double delivered = 0.0;
  double arrived = 0.0;
  /// Per-link queues pooled over all slots, sampled at the start of each
  /// slot after that slot's arrivals.
  double median_backlog = 0.0;
  double mean_queue = 0.0;
  double mean_ar = 1.0;         // shadow oracle mean per-slot ratio (1 when absent)
  double rounds_mean = 0.0;
  long multi_channel_conflicts = 0;  // links scheduled on two channels in one slot
  long oracle_violations = 0;        // slots where the scheduler beat a proven optimum
  long oracle_unproven = 0;          // shadow solves that ran out of budget
  std::vector<double> final_queues;
  std::vector<double> initial_queues;
};

/// Multi-channel graph fixed once per network (retain_prob per channel).
MultiChannelGraph channel_graph(const WirelessNetwork& net, const SimConfig& cfg, std::uint64_t seed);

double per_link_service(const ConflictGraph& g, std::uint64_t seed);
double arrival_rate(const LoadSpec& load, const RateParams& rp, double rho_serve);

SimMetrics simulate(const WirelessNetwork& net, const MultiChannelGraph& mc, const SolverFn& scheduler,
                    const SimConfig& cfg, const Realization& real, std::uint64_t solver_seed);

struct SaturationResult {
  double lambda = 0.0;
  double load = 0.0;
  double mean_queue = 0.0;
  int iterations = 0;
};

/// Bisection on lambda until the mean queue under `scheduler` equals E(r)
/// within tol * E(r). Widens the upper bracket up to 8 times, then throws.
SaturationResult estimate_saturation_load(const WirelessNetwork& net, const MultiChannelGraph& mc,
                                          const SolverFn& scheduler, const SimConfig& cfg, double rho_serve,
                                          std::uint64_t seed, double tol = 0.02, int max_iter = 40);

struct SimRow {
  std::uint64_t network_seed = 0;
  int instance = 0;
  std::string scheduler;
  std::string mode;
  int channels = 1;
  double load = 0.0;
  SimMetrics metrics;
};

void write_sim_csv(std::ostream& out, const std::vector<SimRow>& rows);

const char* to_string(ChannelMode m);

}  // namespace gcnsched
