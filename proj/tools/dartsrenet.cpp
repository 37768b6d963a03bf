// dartsrenet: search, train, eval, export-dot, selftest.

#include <CLI11.hpp>

#include <iostream>

#include "drn/cli/commands.hpp"

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out = "runs/latest";
  std::string data;
  std::string variant;
  std::string cell;
  std::string seed;
  std::string epochs;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "key = value config file");
  cmd->add_option("-s,--set", o.overrides, "override, key=value (repeatable)");
  cmd->add_option("-o,--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--data", o.data, "dataset root (overrides DARTSRENET_DATA)");
  cmd->add_option("--variant", o.variant, "vanilla | sigmoid_weighting | dws");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--epochs", o.epochs, "maximum epochs");
}

drn::RunConfig resolve(const CommonOptions& o) {
  drn::RunConfig c = o.config_file.empty() ? drn::RunConfig() : drn::RunConfig::load(o.config_file);
  for (const auto& kv : o.overrides) c.set_assignment(kv);
  if (!o.data.empty()) c.set("data_root", o.data);
  if (!o.variant.empty()) c.set("variant", o.variant);
  if (!o.cell.empty()) c.set("cell", o.cell);
  if (!o.seed.empty()) c.set("seed", o.seed);
  if (!o.epochs.empty()) c.set("epochs", o.epochs);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable RNN cell search inside ReNet layers"};
  app.require_subcommand(1);

  CommonOptions search_opts, train_opts;
  auto* search = app.add_subcommand("search", "search a cell with mixed operations and write genotype.txt");
  add_common(search, search_opts);

  auto* train = app.add_subcommand("train", "train a network from scratch and report test accuracy");
  add_common(train, train_opts);
  train->add_option("--cell", train_opts.cell, "preset (vanilla | sigmoid_weighting | dws), genotype file, gru, lstm");

  std::string run_dir;
  std::vector<std::string> eval_overrides;
  auto* eval = app.add_subcommand("eval", "evaluate the checkpoint of a train run on the test split");
  eval->add_option("run", run_dir, "directory written by train")->required();
  eval->add_option("-s,--set", eval_overrides, "override, key=value (e.g. data_root=...)");

  std::string dot_source, dot_out;
  auto* dot = app.add_subcommand("export-dot", "write a genotype as a Graphviz digraph");
  dot->add_option("genotype", dot_source, "genotype file or preset name")->required();
  dot->add_option("-o,--out", dot_out, "output file (default: stdout)");

  auto* selftest = app.add_subcommand("selftest", "run gradient and oracle self-checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*search) return drn::cmd_search(resolve(search_opts), search_opts.out, std::cout);
    if (*train) return drn::cmd_train(resolve(train_opts), train_opts.out, std::cout);
    if (*eval) {
      if (eval_overrides.empty()) return drn::cmd_eval(run_dir, nullptr, std::cout);
      drn::RunConfig c = drn::RunConfig::load(std::filesystem::path(run_dir) / "config.txt");
      for (const auto& kv : eval_overrides) c.set_assignment(kv);
      return drn::cmd_eval(run_dir, &c, std::cout);
    }
    if (*dot) return drn::cmd_export_dot(dot_source, dot_out, std::cout);
    if (*selftest) return drn::cmd_selftest(std::cout);
  } catch (const drn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
