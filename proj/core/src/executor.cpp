#include "pmcmc/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "pmcmc/errors.hpp"
#include "pmcmc/random.hpp"

namespace pmcmc {

namespace {

constexpr std::initializer_list<MessageTag> kCommandTags = {
    MessageTag::kBroadcast, MessageTag::kAdvance, MessageTag::kRoute, MessageTag::kExit,
    MessageTag::kShutdown};

std::string lineage_text(LineageId id) { return "lineage " + std::to_string(id); }

// Per-thread worker state machine. Talks to the master on endpoint `master`.
class WorkerLoop {
 public:
  WorkerLoop(WorkerRank rank, int master, Transport& transport, const ModelFactory& factory,
             std::chrono::milliseconds timeout)
      : rank_(rank), master_(master), transport_(transport), factory_(factory), timeout_(timeout) {}

  void serve() {
    for (;;) {
      std::optional<Envelope> env;
      while (!env) {
        env = transport_.receive(static_cast<int>(rank_), kCommandTags,
                                 Transport::Clock::now() + std::chrono::hours(1));
      }
      if (waiting_) {
        timings_.push_back(wait_.lap(wait_stage_, me(), seeds_.sample_index, observation_));
        waiting_ = false;
      }
      MasterCommand command;
      try {
        command = decode_command(env->tag, env->payload);
      } catch (const std::exception& e) {
        fail("decode", e.what());
        continue;
      }
      if (std::holds_alternative<ShutdownCommand>(command)) return;
      std::visit([this](auto& c) { handle(c); }, command);
    }
  }

 private:
  [[nodiscard]] std::int32_t me() const { return static_cast<std::int32_t>(rank_); }

  void start_wait(Stage stage) {
    wait_stage_ = stage;
    wait_.restart();
    waiting_ = true;
  }

  void fail(const std::string& step, const std::string& message) {
    failed_ = true;
    transport_.send(me(), master_, MessageTag::kError,
                    encode(ErrorReport{run_id_, me(), step, message}));
  }

  void reply(MessageTag tag, std::vector<std::pair<LineageId, double>> weights = {}) {
    WorkerReport report{run_id_, me(), std::move(weights), std::move(timings_)};
    timings_.clear();
    transport_.send(me(), master_, tag, encode(report));
  }

  void handle(BroadcastCommand& c) {
    run_id_ = c.run_id;
    seeds_ = c.seeds;
    observation_ = 0;
    failed_ = false;
    particles_.clear();
    timings_.clear();
    try {
      Stopwatch sw;
      for (LineageId id : c.lineages) {
        auto model = factory_();
        model->init(c.parameters,
                    derive_seed({seeds_.chain_index, seeds_.sample_index, 0, id, stream::kParticle}));
        particles_[id] = std::move(model);
      }
      timings_.push_back(sw.lap(Stage::kInit, me(), seeds_.sample_index, 0));
    } catch (const std::exception& e) {
      fail("init", e.what());
      return;
    }
    reply(MessageTag::kInitDone);
    start_wait(Stage::kInitSync);
  }

  void handle(AdvanceCommand& c) {
    if (c.run_id != run_id_ || failed_) return;
    observation_ = c.observation_index;
    std::vector<std::pair<LineageId, double>> weights;
    weights.reserve(particles_.size());
    double run_s = 0.0;
    double observe_s = 0.0;
    const std::int64_t start = monotonic_ns();
    const char* step = "advance";
    try {
      for (auto& [id, model] : particles_) {
        step = "advance";
        Stopwatch sw;
        model->advance(c.target_time);
        run_s += sw.seconds();
        step = "observe";
        sw.restart();
        weights.emplace_back(id, model->log_observe(c.data));
        observe_s += sw.seconds();
      }
    } catch (const std::exception& e) {
      fail(step, e.what());
      return;
    }
    timings_.push_back({Stage::kRun, me(), seeds_.sample_index, observation_, run_s, start});
    timings_.push_back({Stage::kObserve, me(), seeds_.sample_index, observation_, observe_s,
                        start + static_cast<std::int64_t>(run_s * 1e9)});
    reply(MessageTag::kReport, std::move(weights));
    start_wait(Stage::kLikelihoodGather);
  }

  void handle(RouteCommand& c) {
    if (c.run_id != run_id_ || failed_) return;
    RoutingStep step{rank_, run_id_, seeds_, c.observation_index,
                     static_cast<std::size_t>(c.w_max), Transport::Clock::now() + timeout_ / 2};
    try {
      apply_routing(particles_, c.entries, step, transport_, factory_, timings_);
    } catch (const ProtocolError& e) {
      fail(e.step(), e.what());
      return;
    } catch (const std::exception& e) {
      fail("route", e.what());
      return;
    }
    start_wait(Stage::kLikelihoodGather);
  }

  void handle(ExitCommand& c) {
    if (c.run_id != run_id_) return;
    Stopwatch sw;
    particles_.clear();
    // Transfers still addressed to this run are stale now.
    while (transport_.try_receive(me(), {MessageTag::kTransfer})) {
    }
    timings_.push_back(sw.lap(Stage::kExit, me(), seeds_.sample_index, observation_));
    failed_ = false;
    reply(MessageTag::kExitAck);
  }

  void handle(ShutdownCommand&) {}

  WorkerRank rank_;
  int master_;
  Transport& transport_;
  const ModelFactory& factory_;
  std::chrono::milliseconds timeout_;

  ParticleSet particles_;
  std::uint64_t run_id_ = 0;
  SeedContext seeds_;
  std::uint64_t observation_ = 0;
  bool failed_ = false;
  std::vector<StageTiming> timings_;
  Stopwatch wait_;
  Stage wait_stage_ = Stage::kInitSync;
  bool waiting_ = false;
};

}  // namespace

void apply_routing(ParticleSet& particles, std::span<const RoutingEntry> slice,
                   const RoutingStep& step, Transport& transport, const ModelFactory& factory,
                   std::vector<StageTiming>& timings) {
  const WorkerRank me = step.rank;
  const auto rank = static_cast<std::int32_t>(me);
  const std::uint64_t sample = step.seeds.sample_index;
  const std::uint64_t obs = step.observation_index;
  Stopwatch total;
  double nested = 0.0;

  std::map<LineageId, std::vector<LineageId>> local;
  std::map<std::pair<LineageId, WorkerRank>, LineageId> sends;
  std::map<LineageId, std::vector<LineageId>> inbound;
  std::size_t expected = 0;
  for (const RoutingEntry& e : slice) {
    if (e.destination == me) ++expected;
    if (e.source == me) {
      if (!particles.contains(e.lineage_id)) {
        throw ProtocolError(rank, "route", "slice names " + lineage_text(e.lineage_id) +
                                               " which is not resident");
      }
      if (e.destination == me) {
        local[e.lineage_id].push_back(e.new_lineage_id);
      } else {
        sends.try_emplace({e.lineage_id, e.destination}, e.new_lineage_id);
      }
    } else if (e.destination == me) {
      inbound[e.lineage_id].push_back(e.new_lineage_id);
    } else {
      throw ProtocolError(rank, "route", "slice entry for " + lineage_text(e.lineage_id) +
                                             " does not involve this worker");
    }
  }
  if (expected > step.w_max) {
    throw ProtocolError(rank, "route", "slice assigns " + std::to_string(expected) +
                                           " particles, above W_max " +
                                           std::to_string(step.w_max));
  }

  // (a) prune particles that were not resampled
  std::erase_if(particles, [&](const auto& kv) {
    const LineageId id = kv.first;
    if (local.contains(id)) return false;
    auto it = sends.lower_bound({id, 0});
    return it == sends.end() || it->first.first != id;
  });

  // (b) post transfers
  for (const auto& [key, new_id] : sends) {
    ParticleTransfer t{step.run_id, key.first, new_id, me, key.second,
                       particles.at(key.first)->save()};
    transport.send(rank, static_cast<int>(key.second), MessageTag::kTransfer, encode(t));
  }

  std::map<LineageId, Bytes> arrived;
  auto accept = [&](Envelope env) {
    ParticleTransfer t = decode_transfer(env.payload);
    if (t.run_id != step.run_id) return;
    if (t.destination != me || !inbound.contains(t.lineage_id) ||
        arrived.contains(t.lineage_id)) {
      throw ProtocolError(rank, "route/receive",
                          "unexpected transfer of " + lineage_text(t.lineage_id));
    }
    arrived.emplace(t.lineage_id, std::move(t.state));
  };
  auto poll = [&] {
    while (auto env = transport.try_receive(rank, {MessageTag::kTransfer})) accept(std::move(*env));
  };

  // (c) local replication, polling for inbound transfers in between copies
  ParticleSet next;
  bool replicated = false;
  Stopwatch rep;
  for (auto& [id, ids] : local) {
    auto& original = particles.at(id);
    if (ids.size() > 1) {
      replicated = true;
      const Bytes state = original->save();
      for (std::size_t k = 1; k < ids.size(); ++k) {
        auto copy = factory();
        copy->load(state);
        next[ids[k]] = std::move(copy);
        poll();
      }
    }
    next[ids.front()] = std::move(original);
  }
  if (replicated) {
    timings.push_back(rep.lap(Stage::kReplicate, rank, sample, obs));
    nested += timings.back().duration;
  }
  poll();

  // (d) wait for outstanding transfers, then instantiate received copies
  if (arrived.size() < inbound.size()) {
    Stopwatch wait;
    while (arrived.size() < inbound.size()) {
      auto env = transport.receive(rank, {MessageTag::kTransfer}, step.deadline);
      if (!env) {
        throw ProtocolError(rank, "route/receive",
                            "timed out waiting for " +
                                std::to_string(inbound.size() - arrived.size()) +
                                " particle transfer(s)");
      }
      accept(std::move(*env));
    }
    timings.push_back(wait.lap(Stage::kTransferWait, rank, sample, obs));
    nested += timings.back().duration;
  }
  if (!inbound.empty()) {
    Stopwatch load;
    for (auto& [id, ids] : inbound) {
      const Bytes& state = arrived.at(id);
      for (LineageId new_id : ids) {
        auto model = factory();
        model->load(state);
        next[new_id] = std::move(model);
      }
    }
    timings.push_back(load.lap(Stage::kReplicate, rank, sample, obs));
    nested += timings.back().duration;
  }

  // (e) release what was only sent away
  particles.clear();

  // (f) reseed every particle from its new lineage
  for (auto& [id, model] : next) {
    model->reseed(derive_seed({step.seeds.chain_index, sample, obs, id, stream::kParticle}));
  }
  if (next.size() != expected) {
    throw ProtocolError(rank, "route", "holds " + std::to_string(next.size()) +
                                           " particles after routing, expected " +
                                           std::to_string(expected));
  }
  particles = std::move(next);

  StageTiming own = total.lap(Stage::kRoute, rank, sample, obs);
  own.duration = std::max(0.0, own.duration - nested);
  timings.push_back(own);
}

Executor::Executor(ModelFactory factory, ExecutorOptions options)
    : factory_(std::move(factory)), options_(options) {
  if (!factory_) throw PreconditionError("executor: model factory is empty");
  if (options_.workers == 0) throw PreconditionError("executor: need at least one worker");
  if (options_.timeout.count() <= 0) throw PreconditionError("executor: timeout must be positive");
  transport_ = std::make_unique<InProcessTransport>(options_.workers + 1, options_.transfer_delay);
  threads_.reserve(options_.workers);
  for (std::size_t w = 0; w < options_.workers; ++w) {
    threads_.emplace_back([this, w] {
      WorkerLoop loop(static_cast<WorkerRank>(w), master(), *transport_, factory_,
                      options_.timeout);
      loop.serve();
    });
  }
}

Executor::~Executor() {
  for (std::size_t w = 0; w < options_.workers; ++w) {
    transport_->send(master(), static_cast<int>(w), MessageTag::kShutdown,
                     encode(MasterCommand{ShutdownCommand{}}));
  }
  threads_.clear();
}

void Executor::broadcast(const MasterCommand& command) {
  const Bytes payload = encode(command);
  for (std::size_t w = 0; w < options_.workers; ++w) {
    transport_->send(master(), static_cast<int>(w), tag_of(command), payload);
  }
}

std::vector<WorkerReport> Executor::gather(std::uint64_t run_id, MessageTag expected,
                                           const char* step) {
  const std::size_t W = options_.workers;
  std::vector<WorkerReport> reports(W);
  std::vector<bool> seen(W, false);
  std::optional<ErrorReport> failure;
  std::size_t remaining = W;
  const auto deadline = Transport::Clock::now() + options_.timeout;
  auto mark = [&](std::int32_t rank) {
    if (rank < 0 || static_cast<std::size_t>(rank) >= W) {
      throw ProtocolError(rank, step, "message from unknown rank");
    }
    if (seen[static_cast<std::size_t>(rank)]) {
      throw ProtocolError(rank, step, "duplicate response");
    }
    seen[static_cast<std::size_t>(rank)] = true;
    --remaining;
  };
  while (remaining > 0) {
    auto env = transport_->receive(master(), {expected, MessageTag::kError}, deadline);
    if (!env) {
      broken_ = true;
      const auto missing = static_cast<std::int32_t>(
          std::find(seen.begin(), seen.end(), false) - seen.begin());
      throw ProtocolError(missing, step, "timed out waiting for worker");
    }
    if (env->tag == MessageTag::kError) {
      ErrorReport e = decode_error(env->payload);
      if (e.run_id != run_id) continue;
      mark(e.rank);
      if (!failure) failure = std::move(e);
      continue;
    }
    WorkerReport r = decode_report(env->payload);
    if (r.run_id != run_id) continue;
    mark(r.rank);
    reports[static_cast<std::size_t>(r.rank)] = std::move(r);
  }
  if (failure) {
    std::vector<StageTiming> ignored;
    finish(run_id, ignored);
    throw ProtocolError(failure->rank, failure->step, failure->message);
  }
  return reports;
}

void Executor::finish(std::uint64_t run_id, std::vector<StageTiming>& timings) {
  broadcast(ExitCommand{run_id});
  std::size_t remaining = options_.workers;
  const auto deadline = Transport::Clock::now() + options_.timeout;
  while (remaining > 0) {
    auto env = transport_->receive(master(), {MessageTag::kExitAck, MessageTag::kError}, deadline);
    if (!env) {
      broken_ = true;
      throw ProtocolError(kMasterRank, "exit", "timed out waiting for exit acknowledgements");
    }
    if (env->tag == MessageTag::kError) {
      // A late failure from this run; the worker still acknowledges the exit.
      continue;
    }
    WorkerReport r = decode_report(env->payload);
    if (r.run_id != run_id) continue;
    timings.insert(timings.end(), r.timings.begin(), r.timings.end());
    --remaining;
  }
}

FilterRun Executor::run_particle_filter(const Parameters& params,
                                        const ObservationSeries& observations,
                                        std::size_t particles, SeedContext seeds) {
  std::scoped_lock lock(run_mutex_);
  if (broken_) throw Error("executor: unusable after an earlier protocol timeout");
  if (particles == 0) throw PreconditionError("particle filter: ensemble size must be >= 1");

  const std::uint64_t run_id = next_run_id_++;
  const std::size_t W = options_.workers;
  const std::uint64_t sample = seeds.sample_index;
  Stopwatch wall;
  FilterRun out;

  std::vector<ParticleLocation> locations = block_locations(particles, W);
  {
    std::vector<std::vector<LineageId>> owned(W);
    for (const auto& loc : locations) owned[loc.worker].push_back(loc.lineage_id);
    for (std::size_t w = 0; w < W; ++w) {
      transport_->send(master(), static_cast<int>(w), MessageTag::kBroadcast,
                       encode(MasterCommand{BroadcastCommand{run_id, params, seeds, owned[w]}}));
    }
  }
  for (auto& r : gather(run_id, MessageTag::kInitDone, "init")) {
    out.timings.insert(out.timings.end(), r.timings.begin(), r.timings.end());
  }

  WeightMatrix rows;
  std::optional<std::size_t> degenerate;
  const std::size_t n = observations.size();
  for (std::size_t j = 1; j <= n; ++j) {
    const auto record = observations.record(j - 1);
    broadcast(AdvanceCommand{run_id, j, observations.time(j - 1),
                             std::vector<double>(record.begin(), record.end())});
    Stopwatch sw;
    auto reports = gather(run_id, MessageTag::kReport, "observe");
    out.timings.push_back(sw.lap(Stage::kLikelihoodGather, kMasterRank, sample, j));

    std::vector<double> row(particles, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> filled(particles, false);
    for (auto& r : reports) {
      out.timings.insert(out.timings.end(), r.timings.begin(), r.timings.end());
      for (const auto& [id, lw] : r.log_weights) {
        if (id >= particles || filled[id]) {
          finish(run_id, out.timings);
          throw ProtocolError(r.rank, "observe", "bad or duplicate " + lineage_text(id));
        }
        filled[id] = true;
        row[id] = lw;
      }
    }
    if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
      finish(run_id, out.timings);
      throw ProtocolError(kMasterRank, "observe", "missing particle weights");
    }
    const bool invalid = std::any_of(row.begin(), row.end(), [](double lw) {
      return std::isnan(lw) || lw == std::numeric_limits<double>::infinity();
    });
    const bool all_zero = std::all_of(row.begin(), row.end(), [](double lw) {
      return lw == -std::numeric_limits<double>::infinity();
    });
    if (invalid || all_zero) {
      // Degenerate ensemble: the estimate is -inf; nothing left to resample.
      row.assign(particles, -std::numeric_limits<double>::infinity());
      rows.push_back(std::move(row));
      degenerate = j - 1;
      break;
    }
    rows.push_back(std::move(row));
    if (j == n) break;

    sw.restart();
    const auto probs = normalize_log_weights(rows.back());
    const std::uint64_t resample_seed =
        options_.decouple_resample_seed
            ? derive_seed({seeds.chain_index, sample, j, W, stream::kResample})
            : derive_seed({seeds.chain_index, sample, j, 0, stream::kResample});
    ResampleCounts counts = resample(options_.resampling, probs, particles, resample_seed);
    out.timings.push_back(sw.lap(Stage::kResample, kMasterRank, sample, j));

    sw.restart();
    Routing routing = compute_routing(counts, locations, W);
    for (std::size_t w = 0; w < W; ++w) {
      RouteCommand cmd{run_id, j, routing.w_max,
                       routing_slice(routing, static_cast<WorkerRank>(w))};
      transport_->send(master(), static_cast<int>(w), MessageTag::kRoute,
                       encode(MasterCommand{std::move(cmd)}));
    }
    out.timings.push_back(sw.lap(Stage::kRoute, kMasterRank, sample, j));

    const Traffic traffic = traffic_metrics(routing);
    out.events.push_back(
        {sample, j, redraw_rate(counts), traffic.move_fraction, traffic.copy_fraction});
    out.counts.push_back(std::move(counts));
    locations = locations_after(routing);
  }

  finish(run_id, out.timings);
  out.estimate = estimate_marginal_log(rows);
  if (degenerate && !out.estimate.degenerate_row) out.estimate.degenerate_row = degenerate;
  out.wall_seconds = wall.seconds();
  return out;
}

}  // namespace pmcmc
