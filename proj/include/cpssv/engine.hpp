#pragma once

// Race-semantics execution of a network: every instance samples its own sojourn and the
// earliest departure acts (ties to the lowest instance index).

#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "cpssv/interpreter.hpp"
#include "cpssv/random.hpp"
#include "cpssv/weaver.hpp"

namespace cpssv {

enum class TerminalReason { None, Horizon, EventCap, AllAbsorbed, Deadlock, Fault, Decided };

std::string_view to_string(TerminalReason r);

/// Observable network state: what properties and built-ins can see.
class NetworkSnapshot : public WorldView {
 public:
  double time = 0.0;
  std::vector<std::uint32_t> state;  // per instance
  std::vector<Scalar> globals;
  std::vector<std::int64_t> name_counts;        // per entry of Network::state_names
  std::vector<std::int64_t> class_predicate_counts;  // per class: instances in predicate states

  std::int64_t name_count(std::uint32_t id) const override { return id < name_counts.size() ? name_counts[id] : 0; }
  std::int64_t class_predicate_count(std::uint32_t c) const override {
    return c < class_predicate_counts.size() ? class_predicate_counts[c] : 0;
  }
  std::uint32_t instance_state(std::uint32_t i) const override { return i < state.size() ? state[i] : kNone; }

  /// Moves instance `inst` of `net` to composed state `to`, maintaining the counts.
  void move(const Network& net, std::uint32_t inst, std::uint32_t to);
  void apply(const Delta& d);  // global writes only
};

struct TraceEntry {
  double time = 0.0;
  std::uint32_t instance = 0;
  std::uint32_t from = 0;  // composed state index
  std::uint32_t to = 0;
  /// Interaction states traversed by an excursion (entry .. exit); empty otherwise.
  std::vector<std::uint32_t> via;
  Delta writes;
};

struct Trace {
  const Network* network = nullptr;  // layout for replay; must outlive the trace
  NetworkSnapshot initial;
  std::vector<TraceEntry> entries;
  TerminalReason terminal = TerminalReason::None;
  std::string detail;
  double end_time = 0.0;
};

/// Per-run mutable state. Confined to one thread.
class RunState {
 public:
  const Network& network() const { return *net_; }
  const NetworkSnapshot& snapshot() const { return snap_; }
  double clock() const { return snap_.time; }
  double horizon() const { return horizon_; }
  std::uint64_t events() const { return events_; }
  TerminalReason terminal() const { return terminal_; }
  const std::string& detail() const { return detail_; }
  bool done() const { return terminal_ != TerminalReason::None; }

  double departure(std::uint32_t inst) const { return departure_[inst]; }
  bool absorbed(std::uint32_t inst) const;
  /// Time of the next scheduled event, if any.
  std::optional<double> next_time() const;
  const RandomStream& stream(std::uint32_t inst) const { return rng_[inst]; }
  Scalar local(std::uint32_t inst, std::uint32_t slot) const { return locals_[local_offset_[inst] + slot]; }

  /// Ends the run externally (e.g. the monitor fixed its verdict).
  void stop(TerminalReason reason);

  bool operator==(const RunState& other) const;

 private:
  friend RunState init_run(const Network&, std::uint64_t, double, std::uint64_t);
  friend std::optional<TraceEntry> step(RunState&);

  struct Pending {
    double time;
    std::uint32_t inst;
    bool operator>(const Pending& o) const { return time > o.time || (time == o.time && inst > o.inst); }
  };

  bool decide(std::uint32_t inst, std::uint32_t state, std::int64_t pos, std::uint32_t& target, std::uint32_t& action);
  bool guard_holds(std::uint32_t cls, std::uint32_t guard, const EvalContext& ctx);
  EvalContext context(std::uint32_t inst, std::int64_t pos) const;
  void fail(TerminalReason reason, std::string detail);

  const Network* net_ = nullptr;
  NetworkSnapshot snap_;
  std::vector<double> departure_;
  std::vector<Scalar> locals_;
  std::vector<std::uint32_t> local_offset_;
  std::vector<RandomStream> rng_;
  std::vector<Pending> heap_;  // min-heap via std::push_heap with greater
  std::uint64_t events_ = 0;
  double horizon_ = 0.0;
  std::uint64_t max_events_ = 0;
  TerminalReason terminal_ = TerminalReason::None;
  std::string detail_;
  // guard memo: per class, per conjunct
  std::vector<std::vector<std::uint64_t>> memo_stamp_;
  std::vector<std::vector<char>> memo_value_;
  std::uint64_t stamp_ = 0;
  std::vector<std::uint32_t> enabled_;
  Delta scratch_;
};

/// Places every instance (categorical initial states are drawn from the instance's own
/// substream), runs on_init hooks and samples first departures. Instance i uses
/// RandomStream::derive(seed, i). Horizon and event cap default to the network's.
RunState init_run(const Network& network, std::uint64_t seed, double horizon = -1.0, std::uint64_t max_events = 0);

/// Performs the next event. Returns nullopt once the run is terminal.
std::optional<TraceEntry> step(RunState& rs);

Trace run(const Network& network, std::uint64_t seed, double horizon = -1.0, std::uint64_t max_events = 0);

std::string instance_name(const Network& net, std::uint32_t inst);
std::string state_name(const Network& net, std::uint32_t inst, std::uint32_t state);

/// Newline-delimited JSON: one record per entry {t, inst, agent, from, to, [via], writes},
/// then a terminal record.
void write_trace_ndjson(std::ostream& os, const Trace& trace);

}  // namespace cpssv
