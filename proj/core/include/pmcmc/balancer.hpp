#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pmcmc {

using LineageId = std::uint64_t;
using WorkerRank = std::uint32_t;

struct ParticleLocation {
  LineageId lineage_id = 0;
  WorkerRank worker = 0;
};

/// One post-resampling particle: copy of `lineage_id` (currently held by
/// `source`) that must end up on `destination` under `new_lineage_id`.
struct RoutingEntry {
  LineageId lineage_id = 0;
  WorkerRank source = 0;
  WorkerRank destination = 0;
  LineageId new_lineage_id = 0;

  friend bool operator==(const RoutingEntry&, const RoutingEntry&) = default;
};

struct Routing {
  /// Sorted by new_lineage_id, which runs 0..p-1.
  std::vector<RoutingEntry> entries;
  std::size_t w_max = 0;
  std::size_t workers = 0;

  friend bool operator==(const Routing&, const Routing&) = default;
};

/// Greedy two-stage routing with W_max = ceil(p / W).
///
/// Stage 1 walks workers by ascending rank and their resident particles by
/// ascending lineage id, keeping min(count, spare capacity) copies in place.
/// Stage 2 walks the leftover copies by ascending lineage id and hands them
/// to the worker with spare capacity nearest to the source rank (|rank
/// difference|, ties to the lower rank), splitting across workers when the
/// nearest fills up. New lineage ids follow (lineage, destination, copy)
/// order.
///
/// `counts[i]` is the replica count of lineage i; `locations` must list
/// every lineage exactly once. Throws PreconditionError otherwise.
[[nodiscard]] Routing compute_routing(std::span<const std::uint64_t> counts,
                                      std::span<const ParticleLocation> locations,
                                      std::size_t workers);

struct Traffic {
  /// Distinct (lineage, destination) pairs that leave their source, over p.
  double move_fraction = 0.0;
  /// Copies beyond the first instance at each destination, over p.
  double copy_fraction = 0.0;
};

[[nodiscard]] Traffic traffic_metrics(const Routing& routing);

/// Entries a worker has to act on: everything it sends or receives.
[[nodiscard]] std::vector<RoutingEntry> routing_slice(const Routing& routing, WorkerRank worker);

/// Particle count per destination.
[[nodiscard]] std::vector<std::size_t> destination_loads(const Routing& routing);

/// Where each new lineage lives after the routing is applied.
[[nodiscard]] std::vector<ParticleLocation> locations_after(const Routing& routing);

/// First violated routing invariant, if any: entry count, unique and dense
/// new ids, per-destination load <= W_max, per-lineage entry count equal to
/// its resample count, sources matching `locations`, and local priority
/// (a lineage with count >= 1 is only evicted entirely when its worker is
/// full).
[[nodiscard]] std::optional<std::string> check_routing(const Routing& routing,
                                                       std::span<const std::uint64_t> counts,
                                                       std::span<const ParticleLocation> locations);

/// Contiguous block distribution used at initialisation: the first p mod W
/// workers hold one extra particle.
[[nodiscard]] std::vector<ParticleLocation> block_locations(std::size_t particles,
                                                            std::size_t workers);

}  // namespace pmcmc
