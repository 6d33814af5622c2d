#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "pmcmc/balancer.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/instrumentation.hpp"
#include "pmcmc/messages.hpp"
#include "pmcmc/model.hpp"
#include "pmcmc/transport.hpp"

namespace pmcmc {

struct ExecutorOptions {
  std::size_t workers = 1;
  ResamplingScheme resampling = ResamplingScheme::kMultinomial;
  /// Upper bound on any single protocol wait (reports, acks, transfers).
  std::chrono::milliseconds timeout{std::chrono::minutes(5)};
  /// Artificial in-flight latency for particle transfers.
  std::chrono::microseconds transfer_delay{0};
  /// Fault injection for verification runs: key the resampling stream on
  /// the worker count instead of the lineage hierarchy. Breaks worker-count
  /// invariance on purpose.
  bool decouple_resample_seed = false;
};

/// Result of one parallel particle-filter run.
struct FilterRun {
  LikelihoodEstimate estimate;
  /// One entry per resampling step (observations 1..n-1).
  std::vector<ResamplingEvent> events;
  std::vector<ResampleCounts> counts;
  std::vector<StageTiming> timings;
  double wall_seconds = 0.0;
};

/// Particles resident on one worker, keyed by lineage id.
using ParticleSet = std::map<LineageId, std::unique_ptr<Model>>;

struct RoutingStep {
  WorkerRank rank = 0;
  std::uint64_t run_id = 0;
  SeedContext seeds;
  std::uint64_t observation_index = 0;
  std::size_t w_max = 0;
  Transport::Clock::time_point deadline;
};

/// Worker side of one routing round:
///  (a) drop resident particles with no copies anywhere;
///  (b) post one transfer per distinct (lineage, remote destination);
///  (c) replicate local survivors while polling for inbound transfers;
///  (d) wait for the remaining transfers and instantiate received copies;
///  (e) release particles that were only sent away;
///  (f) reseed every particle from (chain, sample, observation, new lineage).
/// On return `particles` holds exactly the entries routed to this worker.
/// Records replicate, transfer-wait and route (exclusive of the former two)
/// timings. Throws ProtocolError on inconsistent slices or timeouts.
void apply_routing(ParticleSet& particles, std::span<const RoutingEntry> slice,
                   const RoutingStep& step, Transport& transport, const ModelFactory& factory,
                   std::vector<StageTiming>& timings);

/// Master plus a pool of worker threads that talk only through an
/// InProcessTransport. Endpoints 0..W-1 are workers, W is the master.
/// One filter run at a time; the pool persists across runs.
class Executor {
 public:
  Executor(ModelFactory factory, ExecutorOptions options);
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  /// Runs the filter for `params` over `observations` with `particles`
  /// particles. Initial seeds are derive_seed(chain, sample, 0, lineage, 0);
  /// the resampling stream after observation j is
  /// derive_seed(chain, sample, j, 0, stream::kResample); after routing
  /// each particle is reseeded with derive_seed(chain, sample, j, new_id, 0).
  ///
  /// A zero-weight ensemble yields a -inf estimate. Worker failures and
  /// timeouts throw ProtocolError; after a timeout the executor refuses
  /// further runs.
  [[nodiscard]] FilterRun run_particle_filter(const Parameters& params,
                                              const ObservationSeries& observations,
                                              std::size_t particles, SeedContext seeds);

  [[nodiscard]] const ExecutorOptions& options() const noexcept { return options_; }

 private:
  [[nodiscard]] int master() const noexcept { return static_cast<int>(options_.workers); }
  std::vector<WorkerReport> gather(std::uint64_t run_id, MessageTag expected, const char* step);
  void finish(std::uint64_t run_id, std::vector<StageTiming>& timings);
  void broadcast(const MasterCommand& command);

  ModelFactory factory_;
  ExecutorOptions options_;
  std::unique_ptr<InProcessTransport> transport_;
  std::vector<std::jthread> threads_;
  std::mutex run_mutex_;
  std::uint64_t next_run_id_ = 1;
  bool broken_ = false;
};

}  // namespace pmcmc
