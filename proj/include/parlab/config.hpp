#pragma once

// Run configuration: defaults, per-task penalty coefficients, validation and
// the INI form written next to every run.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "parlab/encoders.hpp"
#include "parlab/envsuite.hpp"
#include "parlab/errors.hpp"

namespace parlab {

enum class Method { Par, ParB, Darc, DarcWeight, SacTar };

inline constexpr std::string_view kMethodNames[] = {"par", "par-b", "darc", "darc-weight", "sac-tar"};

inline std::string_view method_name(Method m) { return kMethodNames[static_cast<int>(m)]; }

inline Method parse_method(std::string_view s) {
  for (int i = 0; i < 5; ++i)
    if (kMethodNames[i] == s) return static_cast<Method>(i);
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline bool is_par(Method m) { return m == Method::Par || m == Method::ParB; }
inline bool is_darc(Method m) { return m == Method::Darc || m == Method::DarcWeight; }

struct TrainConfig {
  std::string method = "par";
  std::string task = "pendulum-torque";
  std::uint64_t seed = 0;
  long total_steps = 200'000;  // T_max: source steps online, gradient steps offline
  int interval = 10;           // F
  int batch_size = 128;        // per domain
  std::optional<double> beta;
  std::optional<double> nu;
  std::optional<std::string> encoder_variant;
  double alpha = 0.2;
  double gamma = 0.99;
  double tau = 5e-3;
  double lr = 3e-4;
  int latent_dim = 64;
  int hidden = 64;
  long eval_period = 1000;
  int eval_episodes = 10;
  long seed_steps = 1000;  // uniform-random source actions before learning
  std::optional<long> update_after;  // first learning step; defaults to seed_steps
  double darc_warmup = 0.1;          // fraction of total_steps without the DARC correction
  double classifier_noise = 1.0;
  long buffer_capacity = 1'000'000;
  std::string dataset;
  std::string out_dir = "runs/run";

  Method method_id() const { return parse_method(method); }
  TaskId task_id() const { return parse_task(task); }
  long learning_starts() const { return update_after.value_or(seed_steps); }

  EncoderVariant variant() const {
    const Method m = method_id();
    if (encoder_variant) {
      const EncoderVariant v = parse_variant(*encoder_variant);
      if (m == Method::ParB && v != EncoderVariant::ParB)
        throw ConfigError("method par-b contradicts encoder_variant = " + *encoder_variant);
      return v;
    }
    return m == Method::ParB ? EncoderVariant::ParB : EncoderVariant::Par;
  }

  /// Penalty coefficient actually used: explicit value, else the per-task
  /// default of the method (1.0 for every offline run).
  double resolved_beta(bool offline = false) const {
    if (beta) return *beta;
    if (offline) return 1.0;
    const Method m = method_id();
    if (m == Method::SacTar) return 0.0;
    const bool darc = is_darc(m);
    switch (task_id()) {
      case TaskId::PendulumTorque: return darc ? 2.0 : 1.0;
      case TaskId::PendulumMass: return darc ? 1.0 : 0.5;
      case TaskId::PointmassBroken: return darc ? 1.0 : 0.5;
    }
    return 1.0;
  }

  double resolved_nu() const { return nu.value_or(5.0); }
};

inline void validate_common(const TrainConfig& c) {
  (void)c.method_id();
  (void)c.task_id();
  (void)c.variant();
  if (c.total_steps < 1) throw ConfigError("total_steps must be at least 1");
  if (c.interval < 1) throw ConfigError("interval (F) must be at least 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (c.beta && *c.beta < 0) throw ConfigError("beta must be non-negative");
  if (c.latent_dim < 1 || c.hidden < 1) throw ConfigError("network widths must be positive");
  if (c.eval_period < 1 || c.eval_episodes < 1) throw ConfigError("eval_period and eval_episodes must be positive");
  if (c.seed_steps < 0 || c.learning_starts() < 0) throw ConfigError("seed_steps and update_after must be >= 0");
  if (c.darc_warmup < 0 || c.darc_warmup > 1) throw ConfigError("darc_warmup must lie in [0, 1]");
  if (c.buffer_capacity < 1) throw ConfigError("buffer_capacity must be positive");
  if (!(c.gamma >= 0 && c.gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(c.tau >= 0 && c.tau <= 1)) throw ConfigError("tau must lie in [0, 1]");
  if (!(c.lr > 0)) throw ConfigError("lr must be positive");
}

inline void validate_online(const TrainConfig& c) {
  validate_common(c);
  if (c.nu) throw ConfigError("nu applies to offline training only");
  if (!c.dataset.empty()) throw ConfigError("dataset applies to offline training only");
}

inline void validate_offline(const TrainConfig& c) {
  validate_common(c);
  if (!is_par(c.method_id())) throw ConfigError("offline training supports methods par and par-b only");
  if (c.nu && !(*c.nu > 0)) throw ConfigError("nu must be positive");
  if (c.dataset.empty()) throw ConfigError("offline training needs a dataset path");
}

namespace detail {
// Shortest form that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
}  // namespace detail

/// Every key with the value the run used, defaults and per-task choices filled in.
inline std::string resolved_ini(const TrainConfig& c, bool offline) {
  using detail::fmt_double;
  std::ostringstream os;
  os << "method = " << c.method << '\n'
     << "task = " << c.task << '\n'
     << "seed = " << c.seed << '\n'
     << "total_steps = " << c.total_steps << '\n'
     << "interval = " << c.interval << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "beta = " << fmt_double(c.resolved_beta(offline)) << '\n';
  if (offline) os << "nu = " << fmt_double(c.resolved_nu()) << '\n';
  os << "encoder_variant = " << variant_name(c.variant()) << '\n'
     << "alpha = " << fmt_double(c.alpha) << '\n'
     << "gamma = " << fmt_double(c.gamma) << '\n'
     << "tau = " << fmt_double(c.tau) << '\n'
     << "lr = " << fmt_double(c.lr) << '\n'
     << "latent_dim = " << c.latent_dim << '\n'
     << "hidden = " << c.hidden << '\n'
     << "eval_period = " << c.eval_period << '\n'
     << "eval_episodes = " << c.eval_episodes << '\n'
     << "seed_steps = " << c.seed_steps << '\n'
     << "update_after = " << c.learning_starts() << '\n'
     << "darc_warmup = " << fmt_double(c.darc_warmup) << '\n'
     << "classifier_noise = " << fmt_double(c.classifier_noise) << '\n'
     << "buffer_capacity = " << c.buffer_capacity << '\n';
  if (offline) os << "dataset = " << c.dataset << '\n';
  os << "out_dir = " << c.out_dir << '\n';
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
}

}  // namespace parlab
