#include "drn/cli/commands.hpp"

#include <omp.h>

#include <fstream>
#include <sstream>

namespace drn {

namespace {

void prepare_out(const RunConfig& config, const std::filesystem::path& out) {
  config.validate();
  std::filesystem::create_directories(out);
  config.save(out / "config.txt");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << text;
}

Logger stream_logger(std::ostream& log) {
  return [&log](const std::string& line) { log << line << std::endl; };
}

}  // namespace

void apply_threads(const RunConfig& config) {
  const std::size_t t = config.get_size("threads");
  if (t > 0) omp_set_num_threads(static_cast<int>(t));
}

TrainTest load_datasets(const RunConfig& config) {
  TrainTest d;
  if (config.get("dataset") == "raw") {
    if (config.get("train_file").empty() || config.get("test_file").empty()) {
      throw ConfigError("train_file/test_file: both are required when dataset = raw");
    }
    d.train = load_raw(config.get("train_file"), SplitTag::Train);
    d.test = load_raw(config.get("test_file"), SplitTag::Test);
  } else {
    const auto root = config.data_root();
    if (root.empty()) throw ConfigError("data_root: not set and DARTSRENET_DATA is empty");
    Cifar10 c = load_cifar10(root);
    d.train = std::move(c.train);
    d.test = std::move(c.test);
  }
  const std::size_t subset = config.get_size("subset");
  if (subset && subset < d.train.size()) d.train = d.train.subset(iota_indices(subset));
  return d;
}

CellSource<float> resolve_cells(const RunConfig& config, NetworkConfig& network) {
  const std::string& cell = config.get("cell");
  CellSource<float> source;
  source.feed = config.feed_mode();
  source.init_gain = config.get_real("init_gain");
  if (cell == "gru" || cell == "lstm") {
    network.set_cell(parse_cell_kind(cell));
  } else if (cell == "mixed") {
    throw ConfigError("cell: 'mixed' is only valid for the search command");
  } else {
    source.genotype = presets::exists(cell) ? presets::by_name(cell) : load_genotype(cell);
    network.set_cell(CellKind::Genotype);
  }
  return source;
}

int cmd_search(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  prepare_out(config, out);
  apply_threads(config);
  const NetworkConfig network = config.network_config();
  const SearchConfig search = config.search_config();
  TrainTest data = load_datasets(config);
  const std::size_t runs = config.get_size("search_runs");
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < runs; ++k) seeds.push_back(search.seed + k);

  std::vector<Genotype> genotypes;
  for (std::size_t k = 0; k < runs; ++k) {
    SearchConfig c = search;
    c.seed = seeds[k];
    SearchResult r = run_search(network, c, data.train, stream_logger(log));
    const std::string suffix = runs > 1 ? "_seed" + std::to_string(seeds[k]) : "";
    save_genotype(out / ("genotype" + suffix + ".txt"), r.genotype);
    write_search_report(out / ("search_report" + suffix + ".csv"), r.epochs);
    std::vector<NamedTensor<float>> alpha;
    for (auto& p : r.best_alpha.parameters()) alpha.push_back(p);
    save_checkpoint(out / ("alpha" + suffix + ".ckpt"), alpha);
    write_text(out / ("genotype" + suffix + ".dot"), genotype_to_dot(r.genotype));
    genotypes.push_back(r.genotype);
    log << "genotype (seed " << seeds[k] << "):\n" << format_genotype(r.genotype);
  }
  if (runs > 1) {
    std::ostringstream os;
    const auto agreement = genotype_agreement(genotypes);
    for (std::size_t v = 0; v < agreement.size(); ++v) os << "v" << v + 1 << " " << agreement[v] << '\n';
    write_text(out / "agreement.txt", os.str());
    save_genotype(out / "genotype.txt", genotypes.front());
  }
  return 0;
}

int cmd_train(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  prepare_out(config, out);
  apply_threads(config);
  NetworkConfig network = config.network_config();
  const CellSource<float> cells = resolve_cells(config, network);
  TrainTest data = load_datasets(config);
  RetrainResult r = retrain(network, cells, config.retrain_config(), data.train, data.test, stream_logger(log));
  write_retrain_report(out / "retrain_report.csv", r.epochs);
  write_metrics(out / "metrics.txt", r);
  write_text(out / "parameters.txt", r.parameters.format());
  r.stats.save(out / "norm_stats.txt");
  save_network(out / "model.ckpt", *r.model);
  if (cells.genotype) save_genotype(out / "genotype.txt", *cells.genotype);
  log << "test accuracy " << r.test_accuracy << " (" << r.parameters.total << " parameters)" << std::endl;
  return 0;
}

int cmd_eval(const std::filesystem::path& run_dir, const RunConfig* overrides, std::ostream& log) {
  RunConfig config = overrides ? *overrides : RunConfig::load(run_dir / "config.txt");
  config.validate();
  apply_threads(config);
  NetworkConfig network = config.network_config();
  CellSource<float> cells;
  if (std::filesystem::exists(run_dir / "genotype.txt") && config.get("cell") != "gru" && config.get("cell") != "lstm") {
    // The run directory keeps its own genotype so a moved genotype file does not matter.
    cells.feed = config.feed_mode();
    cells.init_gain = config.get_real("init_gain");
    cells.genotype = load_genotype(run_dir / "genotype.txt");
    network.set_cell(CellKind::Genotype);
  } else {
    cells = resolve_cells(config, network);
  }
  Network<float> net(network, cells, config.get_seed("seed"));
  load_network(run_dir / "model.ckpt", net);
  const NormStats stats = NormStats::load(run_dir / "norm_stats.txt");
  TrainTest data = load_datasets(config);
  std::vector<std::size_t> idx = iota_indices(data.test.size());
  const std::size_t limit = config.get_size("test_limit");
  if (limit && limit < idx.size()) idx.resize(limit);
  const EvalResult r = evaluate(net, data.test, idx, stats, config.get_size("batch_size"));
  std::ostringstream os;
  os << "test_accuracy " << r.accuracy << "\ntest_loss " << r.loss << "\ncount " << r.count << '\n';
  write_text(run_dir / "eval.txt", os.str());
  log << os.str();
  return 0;
}

int cmd_export_dot(const std::string& source, const std::filesystem::path& out, std::ostream& log) {
  const Genotype g = presets::exists(source) ? presets::by_name(source) : load_genotype(source);
  const std::string name = std::filesystem::path(source).stem().string();
  std::string id;
  for (char c : name) id += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  const std::string dot = genotype_to_dot(g, id.empty() ? "cell" : id);
  if (out.empty()) {
    log << dot;
  } else {
    write_text(out, dot);
  }
  return 0;
}

}  // namespace drn
