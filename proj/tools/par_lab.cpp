// par-lab: command-line front end for training, data generation, theory
// verification, sweeps and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parlab/cli.hpp"
#include "parlab/parlab.hpp"

namespace fs = std::filesystem;
using namespace parlab;

namespace {

enum Exit : int { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

std::vector<std::string> rest(int argc, char** argv) {
  std::vector<std::string> v;
  for (int i = argc - 1; i >= 2; --i) v.emplace_back(argv[i]);
  return v;
}

void parse(CLI::App& app, int argc, char** argv) {
  std::vector<std::string> args = rest(argc, argv);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    std::exit(kOk);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
}

void print_run(const RunResult& r) {
  std::printf("source_steps %ld  target_steps %ld  gradient_steps %ld\n", r.source_steps, r.target_steps,
              r.gradient_steps);
  if (!r.metrics.empty())
    std::printf("final eval return %.3f +- %.3f\n", r.metrics.back().eval_mean, r.metrics.back().eval_std);
  if (!r.config.out_dir.empty()) std::printf("outputs in %s\n", r.config.out_dir.c_str());
}

int train_online(int argc, char** argv) {
  TrainConfig c;
  CLI::App app("train-online: online training in the target domain with source-domain help");
  add_train_options(app, c);
  parse(app, argc, argv);
  print_run(run_online(c));
  return kOk;
}

int train_offline(int argc, char** argv) {
  TrainConfig c;
  CLI::App app("train-offline: offline source dataset plus limited target interaction");
  add_train_options(app, c);
  parse(app, argc, argv);
  validate_offline(c);
  const OfflineDataset ds = load(c.dataset, make_pair(c.task_id()).source);
  print_run(run_offline(c, ds));
  return kOk;
}

int gen_data(int argc, char** argv) {
  std::string task = "pendulum-torque", tier = "medium", out = "data";
  std::size_t size = 100'000;
  std::uint64_t seed = 0;
  GenConfig g;
  CLI::App app("gen-data: generate a source-domain offline dataset");
  app.add_option("--task", task);
  app.add_option("--tier", tier, "medium | medium-replay | medium-expert");
  app.add_option("--size", size, "transitions (medium-replay keeps the whole buffer)");
  app.add_option("--seed", seed);
  app.add_option("--out", out, "output directory");
  app.add_option("--train_steps", g.train_steps, "SAC steps in the source domain");
  app.add_option("--snapshot_period", g.snapshot_period);
  app.add_option("--hidden", g.hidden);
  parse(app, argc, argv);
  const TaskId id = parse_task(task);
  const Tier t = parse_tier(tier);
  GenReport rep;
  const OfflineDataset ds = generate_offline(id, t, size, seed, g, &rep);
  const fs::path path = fs::path(out) / (task + "_" + tier + "_seed" + std::to_string(seed) + ".bin");
  save(ds, path);
  std::printf("wrote %zu transitions to %s\n", ds.size(), path.string().c_str());
  std::printf("random %.2f  expert %.2f (step %ld)  medium %.2f (step %ld, score %.3f)  dataset mean return %.2f\n",
              rep.random_return, rep.expert_return, rep.expert_step, rep.medium_return, rep.medium_step,
              rep.medium_score, ds.header.mean_return);
  return kOk;
}

int verify(int argc, char** argv) {
  std::string suite = "theory", out = "verify";
  int instances = 100;
  std::uint64_t seed = 0;
  CLI::App app("verify: exact checks of the identities and bounds on random tabular instances");
  app.add_option("--suite", suite)->check(CLI::IsMember({"theory"}));
  app.add_option("--instances", instances);
  app.add_option("--seed", seed);
  app.add_option("--out", out, "directory for gaps.csv");
  parse(app, argc, argv);
  const auto rows = theory::run_theory_suite(instances, seed);
  const auto summary = theory::summarize(rows);
  std::printf("%-22s %9s %9s %14s  %-12s %s\n", "check", "instances", "failures", "worst", "criterion", "result");
  bool all = true;
  for (const auto& s : summary) {
    all = all && s.failures == 0;
    std::printf("%-22s %9d %9d %14.3e  %-12s %s\n", s.check.c_str(), s.instances, s.failures, s.worst,
                s.criterion.c_str(), s.failures == 0 ? "PASS" : "FAIL");
  }
  std::ostringstream csv;
  csv << "check,instance,lhs,rhs,gap,pass\n";
  for (const auto& r : rows)
    csv << r.check << ',' << r.instance << ',' << detail::g17(r.lhs) << ',' << detail::g17(r.rhs) << ','
        << detail::g17(r.gap) << ',' << (r.pass ? 1 : 0) << '\n';
  write_text(fs::path(out) / "gaps.csv", csv.str());
  std::printf("gaps written to %s\n", (fs::path(out) / "gaps.csv").string().c_str());
  return all ? kOk : kNumeric;
}

int sweep(int argc, char** argv) {
  TrainConfig c;
  std::string axis = "beta", out = "sweep";
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  CLI::App app("sweep: grid over one of beta, F, nu");
  add_train_options(app, c);
  app.add_option("--axis", axis, "beta | F | nu");
  app.add_option("--values", values, "axis values (defaults per axis)");
  app.add_option("--seeds", seeds);
  app.add_option("--out", out, "sweep output directory");
  parse(app, argc, argv);
  const SweepAxis a = parse_axis(axis);
  if (values.empty()) values = default_axis_values(a);
  std::optional<OfflineDataset> ds;
  if (a == SweepAxis::Nu || !c.dataset.empty()) {
    if (c.dataset.empty()) throw ConfigError("the nu axis needs --dataset");
    ds = load(c.dataset, make_pair(c.task_id()).source);
  }
  const SweepResult r = run_sweep(c, a, values, seeds, out, ds ? &*ds : nullptr);
  int failures = 0;
  for (const auto& g : r.aggregate) {
    std::printf("%s=%-6s runs %d failures %d final %.3f +- %.3f\n", std::string(axis_name(a)).c_str(),
                value_label(g.value).c_str(), g.runs, g.failures, g.final_mean, g.final_std);
    failures += g.failures;
  }
  for (const auto& cell : r.cells)
    if (!cell.ok) std::fprintf(stderr, "failed: %s: %s\n", cell.dir.string().c_str(), cell.error.c_str());
  return failures ? kOther : kOk;
}

int eval(int argc, char** argv) {
  std::string checkpoint, task;
  int episodes = 10;
  std::uint64_t seed = 0;
  CLI::App app("eval: deterministic target-domain evaluation of a checkpoint");
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--task", task, "defaults to the checkpoint's task");
  app.add_option("--episodes", episodes);
  app.add_option("--seed", seed);
  parse(app, argc, argv);
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (task.empty()) task = ck.task;
  if (task != ck.task) throw ConfigError("checkpoint was trained on '" + ck.task + "'");
  const SacAgent agent = agent_from_checkpoint(ck);
  const EvalResult r = evaluate_policy(agent, make_pair(task).target, episodes, seed);
  std::printf("%s target return %.4f +- %.4f over %d episodes\n", task.c_str(), r.mean, r.std, episodes);
  return kOk;
}

void usage() {
  std::cout << "usage: par-lab <verb> [options]\n"
               "verbs: train-online, train-offline, gen-data, verify, sweep, eval\n"
               "run 'par-lab <verb> --help' for the options of a verb\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage();
    return kConfig;
  }
  const std::string verb = argv[1];
  try {
    if (verb == "train-online") return train_online(argc, argv);
    if (verb == "train-offline") return train_offline(argc, argv);
    if (verb == "gen-data") return gen_data(argc, argv);
    if (verb == "verify") return verify(argc, argv);
    if (verb == "sweep") return sweep(argc, argv);
    if (verb == "eval") return eval(argc, argv);
    if (verb == "--help" || verb == "-h" || verb == "help") {
      usage();
      return kOk;
    }
    std::cerr << "unknown verb '" << verb << "'\n";
    usage();
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
