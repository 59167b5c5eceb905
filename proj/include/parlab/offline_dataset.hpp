#pragma once

// Source-domain offline datasets: container, tiers and the PARLAB01 file
// format. Values are held as float32 in memory, so a save/load round trip
// reproduces the dataset exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "parlab/binary_io.hpp"
#include "parlab/envsuite.hpp"
#include "parlab/replay_buffer.hpp"

namespace parlab {

enum class Tier : std::uint32_t { Medium = 0, MediumReplay = 1, MediumExpert = 2 };

inline constexpr std::string_view kTierNames[] = {"medium", "medium-replay", "medium-expert"};

inline std::string_view tier_name(Tier t) { return kTierNames[static_cast<std::uint32_t>(t)]; }

inline Tier parse_tier(std::string_view s) {
  for (std::uint32_t i = 0; i < 3; ++i)
    if (kTierNames[i] == s) return static_cast<Tier>(i);
  throw ConfigError("unknown dataset tier '" + std::string(s) + "'");
}

inline constexpr std::string_view kDatasetMagic = "PARLAB01";
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint32_t version = kDatasetVersion;
  TaskId task = TaskId::PendulumTorque;
  Tier tier = Tier::Medium;
  std::uint32_t state_dim = 0;
  std::uint32_t action_dim = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  double mean_return = 0.0;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct OfflineDataset {
  DatasetHeader header;
  std::vector<float> states;       // count x state_dim, row-major
  std::vector<float> actions;      // count x action_dim
  std::vector<float> rewards;      // count
  std::vector<float> next_states;  // count x state_dim
  std::vector<std::uint8_t> dones;

  OfflineDataset() = default;
  OfflineDataset(TaskId task, Tier tier, const EnvSpec& spec, std::uint64_t seed) {
    header.task = task;
    header.tier = tier;
    header.state_dim = static_cast<std::uint32_t>(spec.state_dim());
    header.action_dim = static_cast<std::uint32_t>(spec.action_dim());
    header.seed = seed;
  }

  std::size_t size() const { return rewards.size(); }

  /// Stores the environment reward as is; nothing here is ever penalized.
  void add(const Transition& t) {
    if (t.state.size() != header.state_dim || t.action.size() != header.action_dim ||
        t.next_state.size() != header.state_dim)
      throw DimensionMismatchError("transition does not match the dataset dimensions");
    for (double x : t.state) states.push_back(static_cast<float>(x));
    for (double x : t.action) actions.push_back(static_cast<float>(x));
    rewards.push_back(static_cast<float>(t.reward));
    for (double x : t.next_state) next_states.push_back(static_cast<float>(x));
    dones.push_back(t.done ? 1 : 0);
    header.count = rewards.size();
  }

  Transition transition(std::size_t i) const {
    const std::size_t sd = header.state_dim, ad = header.action_dim;
    Transition t;
    t.state.assign(states.begin() + static_cast<std::ptrdiff_t>(i * sd),
                   states.begin() + static_cast<std::ptrdiff_t>((i + 1) * sd));
    t.action.assign(actions.begin() + static_cast<std::ptrdiff_t>(i * ad),
                    actions.begin() + static_cast<std::ptrdiff_t>((i + 1) * ad));
    t.reward = rewards[i];
    t.next_state.assign(next_states.begin() + static_cast<std::ptrdiff_t>(i * sd),
                        next_states.begin() + static_cast<std::ptrdiff_t>((i + 1) * sd));
    t.done = dones[i] != 0;
    t.domain = Domain::Source;
    return t;
  }

  void append(const OfflineDataset& other) {
    for (std::size_t i = 0; i < other.size(); ++i) add(other.transition(i));
  }

  friend bool operator==(const OfflineDataset&, const OfflineDataset&) = default;
};

/// Checks a dataset against the environment it is about to be used with.
inline void validate(const OfflineDataset& ds, const EnvSpec& spec) {
  if (ds.header.state_dim != static_cast<std::uint32_t>(spec.state_dim()) ||
      ds.header.action_dim != static_cast<std::uint32_t>(spec.action_dim()))
    throw DimensionMismatchError("dataset dims (" + std::to_string(ds.header.state_dim) + ", " +
                                 std::to_string(ds.header.action_dim) + ") do not match task '" +
                                 std::string(task_name(spec.task)) + "' (" + std::to_string(spec.state_dim()) +
                                 ", " + std::to_string(spec.action_dim()) + ")");
  if (ds.header.task != spec.task)
    throw DataError("dataset was generated for task '" + std::string(task_name(ds.header.task)) + "', not '" +
                    std::string(task_name(spec.task)) + "'");
}

inline void save(const OfflineDataset& ds, const std::filesystem::path& path) {
  const DatasetHeader& h = ds.header;
  const std::size_t n = ds.size();
  if (h.count != n || ds.states.size() != n * h.state_dim || ds.next_states.size() != n * h.state_dim ||
      ds.actions.size() != n * h.action_dim || ds.dones.size() != n)
    throw DimensionMismatchError("dataset columns disagree with the header count");
  io::Writer w(kDatasetMagic, kDatasetVersion);
  w.put_string(task_name(h.task));
  w.put_u32(static_cast<std::uint32_t>(h.tier));
  w.put_u32(h.state_dim);
  w.put_u32(h.action_dim);
  w.put_u64(h.count);
  w.put_u64(h.seed);
  w.put_f64(h.mean_return);
  for (float x : ds.states) w.put_f32(x);
  for (float x : ds.actions) w.put_f32(x);
  for (float x : ds.rewards) w.put_f32(x);
  for (float x : ds.next_states) w.put_f32(x);
  for (std::uint8_t d : ds.dones) w.put_u8(d);
  w.save(path);
}

inline OfflineDataset load(const std::filesystem::path& path) {
  io::Reader r = io::Reader::open(path, kDatasetMagic, kDatasetVersion);
  OfflineDataset ds;
  DatasetHeader& h = ds.header;
  try {
    h.task = parse_task(r.get_string());
  } catch (const ConfigError& e) {
    throw DataError(std::string("dataset header: ") + e.what());
  }
  const std::uint32_t tier = r.get_u32();
  if (tier > 2) throw DataError("dataset header: unknown tier code " + std::to_string(tier));
  h.tier = static_cast<Tier>(tier);
  h.state_dim = r.get_u32();
  h.action_dim = r.get_u32();
  h.count = r.get_u64();
  h.seed = r.get_u64();
  h.mean_return = r.get_f64();
  const std::uint64_t n = h.count;
  const std::uint64_t expect = n * (4ull * (2ull * h.state_dim + h.action_dim + 1ull) + 1ull);
  if (r.remaining() != expect) throw DimensionMismatchError("payload size does not match the header dims");
  auto read_f32 = [&](std::vector<float>& v, std::uint64_t k) {
    v.resize(k);
    for (auto& x : v) x = r.get_f32();
  };
  read_f32(ds.states, n * h.state_dim);
  read_f32(ds.actions, n * h.action_dim);
  read_f32(ds.rewards, n);
  read_f32(ds.next_states, n * h.state_dim);
  ds.dones.resize(n);
  for (auto& d : ds.dones) d = r.get_u8();
  return ds;
}

inline OfflineDataset load(const std::filesystem::path& path, const EnvSpec& spec) {
  OfflineDataset ds = load(path);
  validate(ds, spec);
  return ds;
}

/// Replay buffer holding the whole dataset, for sampling during offline runs.
inline ReplayBuffer to_buffer(const OfflineDataset& ds, const EnvSpec& spec) {
  validate(ds, spec);
  ReplayBuffer buf(spec, std::max<std::size_t>(ds.size(), 1));
  for (std::size_t i = 0; i < ds.size(); ++i) buf.add(ds.transition(i));
  return buf;
}

}  // namespace parlab
