#pragma once

// Command-line and INI binding of TrainConfig. Keys in a --config file are the
// option names without dashes; command-line flags override file values.

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parlab/config.hpp"

namespace parlab {

template <class T, class F>
CLI::Option* add_setter(CLI::App& app, const std::string& name, F&& set, const std::string& help) {
  return app.add_option_function<T>(name, std::forward<F>(set), help);
}

inline void add_train_options(CLI::App& app, TrainConfig& c) {
  app.set_config("--config", "", "INI file of key = value lines");
  app.allow_config_extras(false);
  app.add_option("--method", c.method, "par | par-b | darc | darc-weight | sac-tar");
  app.add_option("--task", c.task, "pendulum-torque | pendulum-mass | pointmass-broken");
  app.add_option("--seed", c.seed);
  app.add_option("--total_steps", c.total_steps, "T_max");
  app.add_option("--interval", c.interval, "target interaction interval F");
  app.add_option("--batch_size", c.batch_size, "batch size per domain");
  add_setter<double>(app, "--beta", [&c](const double& v) { c.beta = v; }, "reward penalty coefficient");
  add_setter<double>(app, "--nu", [&c](const double& v) { c.nu = v; }, "offline normalization coefficient");
  add_setter<std::string>(app, "--encoder_variant", [&c](const std::string& v) { c.encoder_variant = v; },
                          "par | par-b");
  app.add_option("--alpha", c.alpha);
  app.add_option("--gamma", c.gamma);
  app.add_option("--tau", c.tau);
  app.add_option("--lr", c.lr);
  app.add_option("--latent_dim", c.latent_dim);
  app.add_option("--hidden", c.hidden);
  app.add_option("--eval_period", c.eval_period);
  app.add_option("--eval_episodes", c.eval_episodes);
  app.add_option("--seed_steps", c.seed_steps);
  add_setter<long>(app, "--update_after", [&c](const long& v) { c.update_after = v; }, "first learning step");
  app.add_option("--darc_warmup", c.darc_warmup);
  app.add_option("--classifier_noise", c.classifier_noise);
  app.add_option("--buffer_capacity", c.buffer_capacity);
  app.add_option("--dataset", c.dataset);
  app.add_option("--out_dir", c.out_dir);
}

/// Parses a full argument list (without the program name) into a config;
/// CLI11 failures surface as ConfigError.
inline TrainConfig parse_train_config(std::vector<std::string> args) {
  TrainConfig c;
  CLI::App app("par-lab");
  add_train_options(app, c);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace parlab
