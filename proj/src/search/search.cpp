#include "drn/search/search.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace drn {

namespace {

// Turns requires_grad off for a tensor set for the scope lifetime.
class Freeze {
 public:
  explicit Freeze(const std::vector<Tensor<float>>& tensors) : tensors_(tensors) {
    for (auto& t : tensors_) t.set_requires_grad(false);
  }
  ~Freeze() {
    for (auto& t : tensors_) t.set_requires_grad(true);
  }
  Freeze(const Freeze&) = delete;
  Freeze& operator=(const Freeze&) = delete;

 private:
  std::vector<Tensor<float>> tensors_;
};

NetworkConfig mixed_config(NetworkConfig network) {
  network.set_cell(CellKind::Mixed);
  return network;
}

std::unique_ptr<Network<float>> build_search_model(const NetworkConfig& network, const SearchConfig& config) {
  CellSource<float> source;
  source.feed = config.feed;
  source.init_gain = config.init_gain;
  return std::make_unique<Network<float>>(mixed_config(network), source, config.seed);
}

double loss_and_backward(const Network<float>& model, const Batch<float>& batch) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor<float> loss = cross_entropy(model.forward(batch.images), std::span<const int>(batch.labels));
  backward(loss);
  return static_cast<double>(loss.item());
}

void emit(const Logger& log, const std::string& line) {
  if (log) log(line);
}

std::vector<std::vector<float>> copy_values(const std::vector<Tensor<float>>& params) {
  std::vector<std::vector<float>> out;
  for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore_values(const std::vector<Tensor<float>>& params, const std::vector<std::vector<float>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<float> p = params[i];
    std::copy(values[i].begin(), values[i].end(), p.mutable_data().begin());
  }
}

}  // namespace

SearchState::SearchState(const NetworkConfig& network, const SearchConfig& search_config)
    : config(search_config),
      model(build_search_model(network, search_config)),
      weight_optimizer(model->weight_parameters(), search_config.weight_optimizer),
      alpha_optimizer(model->alpha_parameters(), search_config.alpha_optimizer),
      best_val_loss(std::numeric_limits<double>::infinity()),
      best_alpha(model->alpha()->snapshot()) {}

SearchStepLosses search_step(SearchState& state, const Batch<float>& train, const Batch<float>& val) {
  if (train.labels.empty() || val.labels.empty()) throw std::invalid_argument("search_step needs non-empty batches");
  SearchStepLosses out;
  {
    Freeze frozen(state.weight_optimizer.parameters());
    out.val_loss = loss_and_backward(*state.model, val);
    state.alpha_optimizer.step();
    state.alpha_optimizer.zero_grad();
    ++state.alpha_steps;
    if (state.record_steps) state.step_log.push_back(StepKind::Alpha);
  }
  {
    Freeze frozen(state.alpha_optimizer.parameters());
    out.train_loss = loss_and_backward(*state.model, train);
    clip_grad_norm(state.weight_optimizer.parameters(), state.config.clip_norm);
    state.weight_optimizer.step();
    state.weight_optimizer.zero_grad();
    ++state.weight_steps;
    if (state.record_steps) state.step_log.push_back(StepKind::Weight);
  }
  return out;
}

bool optimizers_partition(const SearchState& state) {
  std::unordered_set<const void*> weights, alphas;
  for (const auto& t : state.weight_optimizer.parameters()) weights.insert(t.node_ptr().get());
  for (const auto& t : state.alpha_optimizer.parameters()) {
    if (weights.count(t.node_ptr().get())) return false;
    alphas.insert(t.node_ptr().get());
  }
  for (const auto& p : state.model->named_parameters()) {
    const void* n = p.tensor.node_ptr().get();
    if (!weights.count(n) && !alphas.count(n)) return false;
  }
  return true;
}

SearchResult run_search(const NetworkConfig& network, const SearchConfig& config, const Dataset& train,
                        const Logger& log) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  const SearchSplit split = make_search_split(train.size(), config.train_fraction, config.seed);
  const NormStats stats = NormStats::compute(train);
  SearchState state(network, config);
  SearchResult result{derive_genotype(state.best_alpha), state.best_alpha, {}, false};

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    state.epoch = epoch;
    auto train_batches = shuffled_batches(split.train_cs, config.batch_size, config.seed, epoch);
    // The validation stream gets its own shuffle and is recycled if shorter.
    auto val_batches = shuffled_batches(split.val_cs, config.batch_size, splitmix64(config.seed), epoch);
    std::size_t steps = train_batches.size();
    if (config.max_batches_per_epoch) steps = std::min(steps, config.max_batches_per_epoch);
    double train_loss = 0.0;
    for (std::size_t b = 0; b < steps; ++b) {
      Batch<float> tb = make_batch<float>(train, train_batches[b], stats, &config.augment, config.seed, epoch);
      Batch<float> vb = make_batch<float>(train, val_batches[b % val_batches.size()], stats);
      train_loss += search_step(state, tb, vb).train_loss;
    }
    train_loss /= static_cast<double>(steps);
    const double val_loss = evaluate(*state.model, train, split.val_cs, stats, config.batch_size).loss;
    const double entropy = alpha_entropy(*state.model->alpha());
    result.epochs.push_back({epoch, train_loss, val_loss, entropy});
    std::ostringstream line;
    line << "search epoch " << epoch << " train_loss " << train_loss << " val_loss " << val_loss << " alpha_entropy "
         << entropy;
    emit(log, line.str());

    if (val_loss < state.best_val_loss) {
      state.best_val_loss = val_loss;
      state.patience_counter = 0;
      state.best_alpha.assign(*state.model->alpha());
    } else {
      // Stop once `patience` epochs in a row brought no improvement; with
      // patience 0 the first such epoch ends the search.
      if (state.patience_counter < config.patience) ++state.patience_counter;
      if (state.patience_counter == config.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.best_alpha = state.best_alpha.snapshot();
  result.genotype = derive_genotype(result.best_alpha);
  return result;
}

RetrainResult retrain(const NetworkConfig& network, const CellSource<float>& cells, const RetrainConfig& config,
                      const Dataset& train, const Dataset& test, const Logger& log) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  for (const auto& r : network.renet) {
    if (r.cell == CellKind::Mixed) throw std::invalid_argument("retraining needs a discrete cell, not a mixed one");
  }
  const RetrainSplit split = make_retrain_split(train.size(), config.validation_count, config.seed);
  RetrainResult result;
  result.stats = NormStats::compute(train, split.train);
  result.model = std::make_unique<Network<float>>(network, cells, config.seed);
  result.parameters = count_parameters(*result.model);
  const auto params = result.model->weight_parameters();
  Optimizer<float> optimizer(params, config.optimizer);
  auto best = copy_values(params);
  result.best_val_acc = -1.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    double train_loss = 0.0;
    auto batches = shuffled_batches(split.train, config.batch_size, config.seed, epoch);
    for (const auto& idx : batches) {
      Batch<float> b = make_batch<float>(train, idx, result.stats, &config.augment, config.seed, epoch);
      train_loss += loss_and_backward(*result.model, b);
      clip_grad_norm(params, config.clip_norm);
      optimizer.step();
      optimizer.zero_grad();
    }
    train_loss /= static_cast<double>(batches.size());
    const double val_acc = evaluate(*result.model, train, split.validation, result.stats, config.batch_size).accuracy;
    result.epochs.push_back({epoch, train_loss, val_acc});
    std::ostringstream line;
    line << "train epoch " << epoch << " train_loss " << train_loss << " val_acc " << val_acc;
    emit(log, line.str());
    if (val_acc > result.best_val_acc) {
      result.best_val_acc = val_acc;
      result.best_epoch = epoch;
      best = copy_values(params);
      stale = 0;
    } else {
      if (stale < config.patience) ++stale;
      if (stale == config.patience) break;
    }
  }
  restore_values(params, best);
  std::vector<std::size_t> test_idx = iota_indices(test.size());
  if (config.test_limit && config.test_limit < test_idx.size()) test_idx.resize(config.test_limit);
  result.test_accuracy = evaluate(*result.model, test, test_idx, result.stats, config.batch_size).accuracy;
  emit(log, "test accuracy " + std::to_string(result.test_accuracy));
  return result;
}

std::vector<double> genotype_agreement(const std::vector<Genotype>& genotypes) {
  if (genotypes.empty()) return {};
  const std::size_t n = genotypes.front().num_vertices();
  std::vector<double> out(n, 0.0);
  for (std::size_t v = 1; v <= n; ++v) {
    std::map<std::pair<std::size_t, int>, std::size_t> votes;
    for (const auto& g : genotypes) {
      if (g.num_vertices() != n) throw std::invalid_argument("genotypes differ in vertex count");
      ++votes[{g.vertex(v).predecessor, static_cast<int>(g.vertex(v).activation)}];
    }
    std::size_t top = 0;
    for (const auto& [key, count] : votes) top = std::max(top, count);
    out[v - 1] = static_cast<double>(top) / static_cast<double>(genotypes.size());
  }
  return out;
}

MultiSeedResult multi_seed_search(const NetworkConfig& network, const SearchConfig& config, const Dataset& train,
                                  const std::vector<std::uint64_t>& seeds, const Logger& log) {
  if (seeds.empty()) throw std::invalid_argument("multi_seed_search needs at least one seed");
  MultiSeedResult out;
  for (std::uint64_t seed : seeds) {
    SearchConfig c = config;
    c.seed = seed;
    emit(log, "search run with seed " + std::to_string(seed));
    out.genotypes.push_back(run_search(network, c, train, log).genotype);
  }
  out.agreement = genotype_agreement(out.genotypes);
  return out;
}

namespace {
std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.precision(9);
  return os;
}
}  // namespace

void write_search_report(const std::filesystem::path& path, const std::vector<SearchEpoch>& epochs) {
  auto os = open_report(path);
  os << "epoch,train_loss,val_loss,alpha_entropy\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.alpha_entropy << '\n';
}

void write_retrain_report(const std::filesystem::path& path, const std::vector<RetrainEpoch>& epochs) {
  auto os = open_report(path);
  os << "epoch,train_loss,val_acc\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_acc << '\n';
}

void write_metrics(const std::filesystem::path& path, const RetrainResult& result) {
  auto os = open_report(path);
  os << "test_accuracy " << result.test_accuracy << '\n';
  os << "best_val_acc " << result.best_val_acc << '\n';
  os << "best_epoch " << result.best_epoch << '\n';
  os << "epochs_run " << result.epochs.size() << '\n';
  os << "parameters " << result.parameters.total << '\n';
  os << "rnn_parameters " << result.parameters.rnn << '\n';
}

}  // namespace drn
