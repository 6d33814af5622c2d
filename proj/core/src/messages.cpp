#include "pmcmc/messages.hpp"

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {

ByteWriter start() {
  ByteWriter w;
  w.u16(kMessageSchemaVersion);
  return w;
}

ByteReader open(std::span<const std::byte> payload) {
  ByteReader r(payload);
  if (const auto v = r.u16(); v != kMessageSchemaVersion) {
    throw DeserializationError("message schema version " + std::to_string(v) + ", expected " +
                               std::to_string(kMessageSchemaVersion));
  }
  return r;
}

void write_timing(ByteWriter& w, const StageTiming& t) {
  w.u8(static_cast<std::uint8_t>(t.stage));
  w.i64(t.worker);
  w.u64(t.sample_index);
  w.u64(t.observation_index);
  w.f64(t.duration);
  w.i64(t.start_ns);
}

StageTiming read_timing(ByteReader& r) {
  StageTiming t;
  const auto stage = r.u8();
  if (stage >= kStageCount) throw DeserializationError("unknown stage id");
  t.stage = static_cast<Stage>(stage);
  t.worker = static_cast<std::int32_t>(r.i64());
  t.sample_index = r.u64();
  t.observation_index = r.u64();
  t.duration = r.f64();
  t.start_ns = r.i64();
  return t;
}

struct CommandWriter {
  ByteWriter& w;

  void operator()(const BroadcastCommand& c) const {
    w.u64(c.run_id);
    w.u64(c.parameters.size());
    for (const auto& [name, value] : c.parameters.entries()) {
      w.str(name);
      w.f64(value);
    }
    w.u64(c.seeds.chain_index);
    w.u64(c.seeds.sample_index);
    w.u64(c.lineages.size());
    for (auto id : c.lineages) w.u64(id);
  }
  void operator()(const AdvanceCommand& c) const {
    w.u64(c.run_id);
    w.u64(c.observation_index);
    w.i64(c.target_time);
    w.u64(c.data.size());
    for (double v : c.data) w.f64(v);
  }
  void operator()(const RouteCommand& c) const {
    w.u64(c.run_id);
    w.u64(c.observation_index);
    w.u64(c.w_max);
    w.u64(c.entries.size());
    for (const auto& e : c.entries) {
      w.u64(e.lineage_id);
      w.u32(e.source);
      w.u32(e.destination);
      w.u64(e.new_lineage_id);
    }
  }
  void operator()(const ExitCommand& c) const { w.u64(c.run_id); }
  void operator()(const ShutdownCommand&) const {}
};

}  // namespace

MessageTag tag_of(const MasterCommand& command) noexcept {
  constexpr MessageTag kTags[] = {MessageTag::kBroadcast, MessageTag::kAdvance, MessageTag::kRoute,
                                  MessageTag::kExit, MessageTag::kShutdown};
  return kTags[command.index()];
}

Bytes encode(const MasterCommand& command) {
  ByteWriter w = start();
  std::visit(CommandWriter{w}, command);
  return std::move(w).take();
}

MasterCommand decode_command(MessageTag tag, std::span<const std::byte> payload) {
  ByteReader r = open(payload);
  MasterCommand out;
  switch (tag) {
    case MessageTag::kBroadcast: {
      BroadcastCommand c;
      c.run_id = r.u64();
      const std::size_t n = r.count(16);
      for (std::size_t k = 0; k < n; ++k) {
        std::string name = r.str();
        const double value = r.f64();
        try {
          c.parameters.set(name, value);
        } catch (const PreconditionError& e) {
          throw DeserializationError(e.what());
        }
      }
      c.seeds.chain_index = r.u64();
      c.seeds.sample_index = r.u64();
      c.lineages.resize(r.count(8));
      for (auto& id : c.lineages) id = r.u64();
      out = std::move(c);
      break;
    }
    case MessageTag::kAdvance: {
      AdvanceCommand c;
      c.run_id = r.u64();
      c.observation_index = r.u64();
      c.target_time = r.i64();
      c.data.resize(r.count(8));
      for (double& v : c.data) v = r.f64();
      out = std::move(c);
      break;
    }
    case MessageTag::kRoute: {
      RouteCommand c;
      c.run_id = r.u64();
      c.observation_index = r.u64();
      c.w_max = r.u64();
      c.entries.resize(r.count(24));
      for (auto& e : c.entries) {
        e.lineage_id = r.u64();
        e.source = r.u32();
        e.destination = r.u32();
        e.new_lineage_id = r.u64();
      }
      out = std::move(c);
      break;
    }
    case MessageTag::kExit:
      out = ExitCommand{r.u64()};
      break;
    case MessageTag::kShutdown:
      out = ShutdownCommand{};
      break;
    default:
      throw DeserializationError("tag " + std::to_string(static_cast<int>(tag)) +
                                 " is not a master command");
  }
  r.expect_end();
  return out;
}

Bytes encode(const WorkerReport& report) {
  ByteWriter w = start();
  w.u64(report.run_id);
  w.i64(report.rank);
  w.u64(report.log_weights.size());
  for (const auto& [id, lw] : report.log_weights) {
    w.u64(id);
    w.f64(lw);
  }
  w.u64(report.timings.size());
  for (const auto& t : report.timings) write_timing(w, t);
  return std::move(w).take();
}

WorkerReport decode_report(std::span<const std::byte> payload) {
  ByteReader r = open(payload);
  WorkerReport report;
  report.run_id = r.u64();
  report.rank = static_cast<std::int32_t>(r.i64());
  report.log_weights.resize(r.count(16));
  for (auto& [id, lw] : report.log_weights) {
    id = r.u64();
    lw = r.f64();
  }
  report.timings.resize(r.count(41));
  for (auto& t : report.timings) t = read_timing(r);
  r.expect_end();
  return report;
}

Bytes encode(const ParticleTransfer& transfer) {
  ByteWriter w = start();
  w.u64(transfer.run_id);
  w.u64(transfer.lineage_id);
  w.u64(transfer.new_lineage_id);
  w.u32(transfer.source);
  w.u32(transfer.destination);
  w.bytes(transfer.state);
  return std::move(w).take();
}

ParticleTransfer decode_transfer(std::span<const std::byte> payload) {
  ByteReader r = open(payload);
  ParticleTransfer t;
  t.run_id = r.u64();
  t.lineage_id = r.u64();
  t.new_lineage_id = r.u64();
  t.source = r.u32();
  t.destination = r.u32();
  t.state = r.bytes();
  r.expect_end();
  return t;
}

Bytes encode(const ErrorReport& error) {
  ByteWriter w = start();
  w.u64(error.run_id);
  w.i64(error.rank);
  w.str(error.step);
  w.str(error.message);
  return std::move(w).take();
}

ErrorReport decode_error(std::span<const std::byte> payload) {
  ByteReader r = open(payload);
  ErrorReport e;
  e.run_id = r.u64();
  e.rank = static_cast<std::int32_t>(r.i64());
  e.step = r.str();
  e.message = r.str();
  r.expect_end();
  return e;
}

}  // namespace pmcmc
