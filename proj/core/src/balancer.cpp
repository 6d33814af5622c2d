#include "pmcmc/balancer.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>
#include <utility>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {

std::vector<WorkerRank> owners(std::span<const ParticleLocation> locations, std::size_t p,
                               std::size_t workers) {
  if (locations.size() != p) {
    throw PreconditionError("routing: " + std::to_string(locations.size()) + " locations for " +
                            std::to_string(p) + " particles");
  }
  constexpr WorkerRank kUnset = ~WorkerRank{0};
  std::vector<WorkerRank> owner(p, kUnset);
  for (const auto& loc : locations) {
    if (loc.lineage_id >= p) throw PreconditionError("routing: lineage id out of range");
    if (loc.worker >= workers) throw PreconditionError("routing: worker rank out of range");
    if (owner[loc.lineage_id] != kUnset) throw PreconditionError("routing: duplicate lineage id");
    owner[loc.lineage_id] = loc.worker;
  }
  return owner;
}

}  // namespace

Routing compute_routing(std::span<const std::uint64_t> counts,
                        std::span<const ParticleLocation> locations, std::size_t workers) {
  const std::size_t p = counts.size();
  if (p == 0) throw PreconditionError("routing: no particles");
  if (workers == 0) throw PreconditionError("routing: need at least one worker");
  if (std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) != p) {
    throw PreconditionError("routing: resample counts must sum to the ensemble size");
  }
  const auto owner = owners(locations, p, workers);
  const std::size_t w_max = (p + workers - 1) / workers;

  std::vector<std::vector<LineageId>> residents(workers);
  for (LineageId i = 0; i < p; ++i) residents[owner[i]].push_back(i);

  std::vector<std::size_t> load(workers, 0);
  std::vector<std::uint64_t> remaining(counts.begin(), counts.end());
  // (lineage, destination) -> copies
  std::vector<std::tuple<LineageId, WorkerRank, std::uint64_t>> placements;

  for (WorkerRank w = 0; w < workers; ++w) {
    for (LineageId i : residents[w]) {
      const std::uint64_t keep = std::min<std::uint64_t>(remaining[i], w_max - load[w]);
      if (keep == 0) continue;
      placements.emplace_back(i, w, keep);
      load[w] += keep;
      remaining[i] -= keep;
    }
  }

  for (LineageId i = 0; i < p; ++i) {
    const auto source = static_cast<std::int64_t>(owner[i]);
    while (remaining[i] > 0) {
      std::optional<WorkerRank> target;
      for (std::int64_t d = 0; !target; ++d) {
        for (std::int64_t candidate : {source - d, source + d}) {
          if (candidate >= 0 && candidate < static_cast<std::int64_t>(workers) &&
              load[static_cast<std::size_t>(candidate)] < w_max) {
            target = static_cast<WorkerRank>(candidate);
            break;
          }
        }
      }
      const std::uint64_t take = std::min<std::uint64_t>(remaining[i], w_max - load[*target]);
      placements.emplace_back(i, *target, take);
      load[*target] += take;
      remaining[i] -= take;
    }
  }

  std::sort(placements.begin(), placements.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });

  Routing routing;
  routing.w_max = w_max;
  routing.workers = workers;
  routing.entries.reserve(p);
  LineageId next_id = 0;
  for (std::size_t k = 0; k < placements.size(); ++k) {
    const auto [lineage, destination, copies] = placements[k];
    for (std::uint64_t c = 0; c < copies; ++c) {
      routing.entries.push_back({lineage, owner[lineage], destination, next_id++});
    }
  }
  return routing;
}

Traffic traffic_metrics(const Routing& routing) {
  const std::size_t p = routing.entries.size();
  if (p == 0) return {};
  std::set<std::pair<LineageId, WorkerRank>> pairs;
  std::size_t moves = 0;
  for (const auto& e : routing.entries) {
    if (pairs.emplace(e.lineage_id, e.destination).second && e.destination != e.source) ++moves;
  }
  const double denom = static_cast<double>(p);
  return {static_cast<double>(moves) / denom, static_cast<double>(p - pairs.size()) / denom};
}

std::vector<RoutingEntry> routing_slice(const Routing& routing, WorkerRank worker) {
  std::vector<RoutingEntry> slice;
  for (const auto& e : routing.entries) {
    if (e.source == worker || e.destination == worker) slice.push_back(e);
  }
  return slice;
}

std::vector<std::size_t> destination_loads(const Routing& routing) {
  std::vector<std::size_t> load(routing.workers, 0);
  for (const auto& e : routing.entries) {
    if (e.destination < load.size()) ++load[e.destination];
  }
  return load;
}

std::vector<ParticleLocation> locations_after(const Routing& routing) {
  std::vector<ParticleLocation> out;
  out.reserve(routing.entries.size());
  for (const auto& e : routing.entries) out.push_back({e.new_lineage_id, e.destination});
  return out;
}

std::optional<std::string> check_routing(const Routing& routing,
                                         std::span<const std::uint64_t> counts,
                                         std::span<const ParticleLocation> locations) {
  const std::size_t p = counts.size();
  if (routing.entries.size() != p) {
    return "entry count " + std::to_string(routing.entries.size()) + " != p " + std::to_string(p);
  }
  if (routing.workers == 0) return "zero workers";
  const std::size_t expected_w_max = (p + routing.workers - 1) / routing.workers;
  if (routing.w_max != expected_w_max) return "W_max is not ceil(p / W)";

  std::vector<WorkerRank> owner(p);
  for (const auto& loc : locations) {
    if (loc.lineage_id >= p) return "location lineage out of range";
    owner[loc.lineage_id] = loc.worker;
  }

  std::vector<char> seen(p, 0);
  std::vector<std::uint64_t> per_lineage(p, 0);
  std::vector<char> kept_local(p, 0);
  for (const auto& e : routing.entries) {
    if (e.new_lineage_id >= p || seen[e.new_lineage_id]) return "new lineage ids not unique/dense";
    seen[e.new_lineage_id] = 1;
    if (e.lineage_id >= p) return "lineage id out of range";
    if (e.destination >= routing.workers) return "destination out of range";
    if (e.source != owner[e.lineage_id]) {
      return "lineage " + std::to_string(e.lineage_id) + " routed from a worker that does not hold it";
    }
    ++per_lineage[e.lineage_id];
    if (e.destination == e.source) kept_local[e.lineage_id] = 1;
  }
  const auto load = destination_loads(routing);
  for (std::size_t w = 0; w < load.size(); ++w) {
    if (load[w] > routing.w_max) {
      return "worker " + std::to_string(w) + " load " + std::to_string(load[w]) + " > W_max";
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (per_lineage[i] != counts[i]) {
      return "lineage " + std::to_string(i) + " has " + std::to_string(per_lineage[i]) +
             " entries, resample count " + std::to_string(counts[i]);
    }
    if (counts[i] > 0 && !kept_local[i] && load[owner[i]] < routing.w_max) {
      return "lineage " + std::to_string(i) + " evicted from worker " + std::to_string(owner[i]) +
             " that still had spare capacity";
    }
  }
  return std::nullopt;
}

std::vector<ParticleLocation> block_locations(std::size_t particles, std::size_t workers) {
  if (workers == 0) throw PreconditionError("need at least one worker");
  std::vector<ParticleLocation> out;
  out.reserve(particles);
  const std::size_t base = particles / workers;
  const std::size_t extra = particles % workers;
  LineageId next = 0;
  for (WorkerRank w = 0; w < workers; ++w) {
    const std::size_t n = base + (w < extra ? 1 : 0);
    for (std::size_t k = 0; k < n; ++k) out.push_back({next++, w});
  }
  return out;
}

}  // namespace pmcmc
