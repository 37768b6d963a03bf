#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drn/model/network.hpp"
#include "drn/numerics/optim.hpp"

namespace drn {

using Logger = std::function<void(const std::string&)>;

struct SearchConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  /// Caps the paired batches per epoch; 0 means a full pass over train_cs.
  std::size_t max_batches_per_epoch = 0;
  double train_fraction = 0.5;
  double clip_norm = 0.25;
  OptimizerConfig weight_optimizer{OptimizerKind::Adam, 1e-3};
  OptimizerConfig alpha_optimizer{OptimizerKind::Adam, 3e-4};
  AugmentConfig augment;
  std::uint64_t seed = 1;
  /// Mixed-cell feeding and init, as in CellSource.
  FeedMode feed = FeedMode::CurrentStep;
  double init_gain = 1.0;
};

enum class StepKind { Alpha, Weight };

struct SearchStepLosses {
  double val_loss = 0.0;
  double train_loss = 0.0;
};

/// Mixed-cell model plus the two optimizers. The weight optimizer owns every
/// network weight, the alpha optimizer every architecture tensor.
struct SearchState {
  SearchState(const NetworkConfig& network, const SearchConfig& config);

  SearchConfig config;
  std::unique_ptr<Network<float>> model;
  Optimizer<float> weight_optimizer;
  Optimizer<float> alpha_optimizer;
  std::size_t epoch = 0;
  double best_val_loss;
  std::size_t patience_counter = 0;
  AlphaTable<float> best_alpha;

  std::size_t alpha_steps = 0;
  std::size_t weight_steps = 0;
  bool record_steps = false;
  std::vector<StepKind> step_log;
};

/// Alpha step on the validation batch with weights frozen, then a weight
/// step on the training batch with alphas frozen.
SearchStepLosses search_step(SearchState& state, const Batch<float>& train, const Batch<float>& val);

/// True when the two optimizers share no tensor and together cover every
/// trainable tensor of the model.
bool optimizers_partition(const SearchState& state);

struct SearchEpoch {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double alpha_entropy;
};

struct SearchResult {
  Genotype genotype;
  AlphaTable<float> best_alpha;
  std::vector<SearchEpoch> epochs;
  bool stopped_early = false;
};

/// Splits `train` into train_cs / val_cs and alternates optimizers until
/// val_cs loss has not improved for more than `patience` epochs.
SearchResult run_search(const NetworkConfig& network, const SearchConfig& config, const Dataset& train,
                        const Logger& log = {});

struct RetrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::size_t validation_count = 5000;
  /// 0 evaluates on the whole test set.
  std::size_t test_limit = 0;
  double clip_norm = 0.25;
  OptimizerConfig optimizer{OptimizerKind::Adam, 1e-3};
  AugmentConfig augment;
  std::uint64_t seed = 1;
};

struct RetrainEpoch {
  std::size_t epoch;
  double train_loss;
  double val_acc;
};

struct RetrainResult {
  std::unique_ptr<Network<float>> model;
  NormStats stats;
  std::vector<RetrainEpoch> epochs;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double test_accuracy = 0.0;
  ParameterReport parameters;
};

/// Fresh weights, training on Train minus a carved validation set, early
/// stopping on validation accuracy, best weights restored, test accuracy.
RetrainResult retrain(const NetworkConfig& network, const CellSource<float>& cells, const RetrainConfig& config,
                      const Dataset& train, const Dataset& test, const Logger& log = {});

struct MultiSeedResult {
  std::vector<Genotype> genotypes;
  /// Per vertex, the share of runs that chose the modal (predecessor, activation).
  std::vector<double> agreement;
};

MultiSeedResult multi_seed_search(const NetworkConfig& network, const SearchConfig& config, const Dataset& train,
                                  const std::vector<std::uint64_t>& seeds, const Logger& log = {});
/// Agreement summary alone.
std::vector<double> genotype_agreement(const std::vector<Genotype>& genotypes);

void write_search_report(const std::filesystem::path& path, const std::vector<SearchEpoch>& epochs);
void write_retrain_report(const std::filesystem::path& path, const std::vector<RetrainEpoch>& epochs);
void write_metrics(const std::filesystem::path& path, const RetrainResult& result);

}  // namespace drn
