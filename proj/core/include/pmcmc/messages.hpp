#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pmcmc/balancer.hpp"
#include "pmcmc/bytes.hpp"
#include "pmcmc/instrumentation.hpp"
#include "pmcmc/observations.hpp"
#include "pmcmc/parameters.hpp"

namespace pmcmc {

/// Version written at the start of every payload; decoders reject others.
inline constexpr std::uint16_t kMessageSchemaVersion = 1;

enum class MessageTag : std::uint16_t {
  kBroadcast = 1,  ///< master -> worker: parameters, seeds, initial lineages
  kAdvance = 2,    ///< master -> worker: next observation time and record
  kRoute = 3,      ///< master -> worker: routing slice
  kExit = 4,       ///< master -> worker: filter run finished
  kShutdown = 5,   ///< master -> worker: leave the service loop
  kInitDone = 6,   ///< worker -> master: particles initialised
  kReport = 7,     ///< worker -> master: observation log-likelihoods
  kExitAck = 8,    ///< worker -> master: particles released
  kTransfer = 9,   ///< worker -> worker: serialised particle state
  kError = 10,     ///< worker -> master: failure with protocol step
};

struct SeedContext {
  std::uint64_t chain_index = 0;
  std::uint64_t sample_index = 0;

  friend bool operator==(const SeedContext&, const SeedContext&) = default;
};

struct BroadcastCommand {
  std::uint64_t run_id = 0;
  Parameters parameters;
  SeedContext seeds;
  std::vector<LineageId> lineages;

  friend bool operator==(const BroadcastCommand&, const BroadcastCommand&) = default;
};

struct AdvanceCommand {
  std::uint64_t run_id = 0;
  std::uint64_t observation_index = 0;  ///< 1-based
  ModelTime target_time = 0;
  std::vector<double> data;

  friend bool operator==(const AdvanceCommand&, const AdvanceCommand&) = default;
};

struct RouteCommand {
  std::uint64_t run_id = 0;
  std::uint64_t observation_index = 0;
  std::uint64_t w_max = 0;
  std::vector<RoutingEntry> entries;

  friend bool operator==(const RouteCommand&, const RouteCommand&) = default;
};

struct ExitCommand {
  std::uint64_t run_id = 0;
  friend bool operator==(const ExitCommand&, const ExitCommand&) = default;
};

struct ShutdownCommand {
  friend bool operator==(const ShutdownCommand&, const ShutdownCommand&) = default;
};

using MasterCommand =
    std::variant<BroadcastCommand, AdvanceCommand, RouteCommand, ExitCommand, ShutdownCommand>;

/// Payload of kInitDone, kReport and kExitAck.
struct WorkerReport {
  std::uint64_t run_id = 0;
  std::int32_t rank = 0;
  std::vector<std::pair<LineageId, double>> log_weights;
  std::vector<StageTiming> timings;
};

struct ParticleTransfer {
  std::uint64_t run_id = 0;
  LineageId lineage_id = 0;
  LineageId new_lineage_id = 0;
  WorkerRank source = 0;
  WorkerRank destination = 0;
  Bytes state;

  friend bool operator==(const ParticleTransfer&, const ParticleTransfer&) = default;
};

struct ErrorReport {
  std::uint64_t run_id = 0;
  std::int32_t rank = 0;
  std::string step;
  std::string message;
};

[[nodiscard]] MessageTag tag_of(const MasterCommand& command) noexcept;
[[nodiscard]] Bytes encode(const MasterCommand& command);
[[nodiscard]] MasterCommand decode_command(MessageTag tag, std::span<const std::byte> payload);

[[nodiscard]] Bytes encode(const WorkerReport& report);
[[nodiscard]] WorkerReport decode_report(std::span<const std::byte> payload);

[[nodiscard]] Bytes encode(const ParticleTransfer& transfer);
[[nodiscard]] ParticleTransfer decode_transfer(std::span<const std::byte> payload);

[[nodiscard]] Bytes encode(const ErrorReport& error);
[[nodiscard]] ErrorReport decode_error(std::span<const std::byte> payload);

}  // namespace pmcmc
