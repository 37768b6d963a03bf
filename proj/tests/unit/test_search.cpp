#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "drn/search/search.hpp"
#include "fixtures.hpp"

using namespace drn;

namespace {

SearchConfig quick_search(std::uint64_t seed = 1) {
  SearchConfig c;
  c.batch_size = 4;
  c.max_epochs = 2;
  c.max_batches_per_epoch = 2;
  c.seed = seed;
  return c;
}

struct Batches {
  Batch<float> train, val;
};

Batches two_batches(std::uint64_t seed) {
  auto d = fixture::random_dataset(8, seed);
  auto stats = NormStats::compute(d);
  std::vector<std::size_t> a{0, 1, 2, 3}, b{4, 5, 6, 7};
  return {make_batch<float>(d, a, stats), make_batch<float>(d, b, stats)};
}

std::vector<std::vector<float>> values_of(const std::vector<Tensor<float>>& ts) {
  std::vector<std::vector<float>> out;
  for (const auto& t : ts) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST(SearchState, OptimizersPartitionTheModel) {
  SearchState s(fixture::tiny_network(), quick_search());
  EXPECT_TRUE(optimizers_partition(s));
  EXPECT_EQ(s.alpha_optimizer.parameters().size(), 3u);
  for (const auto& a : s.alpha_optimizer.parameters()) EXPECT_FALSE(s.weight_optimizer.manages(a));
}

TEST(SearchStep, EachOptimizerTouchesOnlyItsOwnTensors) {
  SearchState s(fixture::tiny_network(), quick_search());
  const auto b = two_batches(2);
  const auto w0 = values_of(s.weight_optimizer.parameters());
  const auto a0 = values_of(s.alpha_optimizer.parameters());
  search_step(s, b.train, b.val);
  EXPECT_NE(values_of(s.alpha_optimizer.parameters()), a0);
  EXPECT_NE(values_of(s.weight_optimizer.parameters()), w0);
  // Moment buffers of each optimizer match its own parameter sizes only.
  for (std::size_t i = 0; i < s.alpha_optimizer.parameters().size(); ++i) {
    EXPECT_EQ(s.alpha_optimizer.first_moment(i).size(), s.alpha_optimizer.parameters()[i].numel());
  }
  for (const auto& t : s.weight_optimizer.parameters()) EXPECT_FALSE(t.has_grad());
  for (const auto& t : s.alpha_optimizer.parameters()) EXPECT_FALSE(t.has_grad());
}

TEST(SearchStep, ZeroAlphaLearningRateFreezesAlpha) {
  auto cfg = quick_search();
  cfg.alpha_optimizer.learning_rate = 0.0;
  SearchState s(fixture::tiny_network(), cfg);
  const auto a0 = values_of(s.alpha_optimizer.parameters());
  for (int i = 0; i < 10; ++i) {
    const auto b = two_batches(10 + i);
    search_step(s, b.train, b.val);
  }
  EXPECT_EQ(values_of(s.alpha_optimizer.parameters()), a0);
}

TEST(SearchStep, AlphaStepLeavesWeightsAndWeightStepLeavesAlpha) {
  // Snapshot around each half by running with one optimizer's rate at zero.
  auto cfg = quick_search();
  cfg.weight_optimizer.learning_rate = 0.0;
  SearchState s(fixture::tiny_network(), cfg);
  const auto w0 = values_of(s.weight_optimizer.parameters());
  const auto b = two_batches(3);
  search_step(s, b.train, b.val);
  EXPECT_EQ(values_of(s.weight_optimizer.parameters()), w0);
}

TEST(SearchStep, AlternatesOneToOne) {
  SearchState s(fixture::tiny_network(), quick_search());
  s.record_steps = true;
  const auto b = two_batches(4);
  for (int i = 0; i < 5; ++i) search_step(s, b.train, b.val);
  ASSERT_EQ(s.step_log.size(), 10u);
  for (std::size_t i = 0; i < s.step_log.size(); ++i)
    EXPECT_EQ(s.step_log[i], i % 2 == 0 ? StepKind::Alpha : StepKind::Weight);
  EXPECT_EQ(s.alpha_steps, s.weight_steps);
}

TEST(RunSearch, DeterministicUnderSeed) {
  const auto data = fixture::random_dataset(24, 5);
  auto r1 = run_search(fixture::tiny_network(), quick_search(3), data);
  auto r2 = run_search(fixture::tiny_network(), quick_search(3), data);
  EXPECT_EQ(r1.genotype, r2.genotype);
  ASSERT_EQ(r1.epochs.size(), r2.epochs.size());
  for (std::size_t e = 0; e < r1.epochs.size(); ++e) EXPECT_EQ(r1.epochs[e].val_loss, r2.epochs[e].val_loss);
  for (std::size_t i = 1; i <= 3; ++i)
    for (std::size_t k = 0; k < r1.best_alpha.vertex(i).numel(); ++k)
      EXPECT_EQ(r1.best_alpha.vertex(i).data()[k], r2.best_alpha.vertex(i).data()[k]);
  EXPECT_EQ(derive_genotype(r1.best_alpha), r1.genotype);
}

TEST(RunSearch, ZeroPatienceStopsAtFirstNonImprovingEpoch) {
  auto cfg = quick_search();
  cfg.patience = 0;
  cfg.max_epochs = 40;
  const auto data = fixture::random_dataset(24, 6);
  auto r = run_search(fixture::tiny_network(), cfg, data);
  ASSERT_TRUE(r.stopped_early);
  // The first epoch that fails to beat the best so far is the last one run.
  double best = r.epochs.front().val_loss;
  std::size_t first_stale = 0;
  for (std::size_t e = 1; e < r.epochs.size() && first_stale == 0; ++e) {
    if (r.epochs[e].val_loss < best) {
      best = r.epochs[e].val_loss;
    } else {
      first_stale = e;
    }
  }
  EXPECT_EQ(first_stale + 1, r.epochs.size());
}

TEST(RunSearch, NeverExceedsMaxEpochsAndLogsFiniteEntropy) {
  auto cfg = quick_search();
  cfg.max_epochs = 2;
  cfg.patience = 10;
  std::vector<std::string> lines;
  auto r = run_search(fixture::tiny_network(), cfg, fixture::random_dataset(16, 7),
                      [&](const std::string& l) { lines.push_back(l); });
  EXPECT_EQ(r.epochs.size(), 2u);
  EXPECT_EQ(lines.size(), 2u);
  for (const auto& e : r.epochs) {
    EXPECT_TRUE(std::isfinite(e.alpha_entropy));
    // Near-uniform start: close to the uniform entropy mean of ln 4, ln 8, ln 12.
    EXPECT_NEAR(e.alpha_entropy, (std::log(4.0) + std::log(8.0) + std::log(12.0)) / 3, 0.05);
  }
}

TEST(AlphaEntropy, SaturatedTableIsNearZero) {
  AlphaTable<float> a(3);
  a.set(0, 1, Activation::Tanh, 100.f);
  a.set(1, 2, Activation::ReLU, 100.f);
  a.set(2, 3, Activation::Identity, 100.f);
  EXPECT_LT(alpha_entropy(a), 1e-6);
}

TEST(Agreement, SummaryBounds) {
  const auto g1 = fixture::tiny_genotype();
  EXPECT_EQ(genotype_agreement({g1}), (std::vector<double>{1, 1, 1}));
  const Genotype g2({{0, Activation::ReLU}, {0, Activation::Tanh}, {1, Activation::Identity}});
  const Genotype g3({{0, Activation::Tanh}, {0, Activation::Tanh}, {2, Activation::Sigmoid}});
  auto a = genotype_agreement({g1, g2, g3});
  EXPECT_NEAR(a[0], 2.0 / 3, 1e-12);
  EXPECT_NEAR(a[1], 2.0 / 3, 1e-12);
  EXPECT_NEAR(a[2], 2.0 / 3, 1e-12);
}

TEST(MultiSeed, IdenticalSeedsAgreeAndDistinctSeedsStayInRange) {
  const auto data = fixture::random_dataset(16, 8);
  auto cfg = quick_search();
  cfg.max_epochs = 1;
  auto same = multi_seed_search(fixture::tiny_network(), cfg, data, {4, 4, 4});
  for (double v : same.agreement) EXPECT_EQ(v, 1.0);
  auto distinct = multi_seed_search(fixture::tiny_network(), cfg, data, {1, 2, 3});
  ASSERT_EQ(distinct.agreement.size(), 3u);
  for (double v : distinct.agreement) {
    EXPECT_GE(v, 1.0 / 3);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Retrain, ProducesMetricsAndRestoresBestEpoch) {
  RetrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  cfg.validation_count = 10;
  cfg.optimizer.learning_rate = 3e-3;
  CellSource<float> cells;
  cells.genotype = fixture::tiny_genotype();
  const auto train = fixture::banded_dataset(60, 9), test = fixture::banded_dataset(20, 10, SplitTag::Test);
  auto r = retrain(fixture::tiny_network(), cells, cfg, train, test);
  ASSERT_FALSE(r.epochs.empty());
  EXPECT_LE(r.epochs.size(), 3u);
  EXPECT_GE(r.test_accuracy, 0.0);
  EXPECT_LE(r.test_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.best_val_acc, r.epochs[r.best_epoch].val_acc);
  // Restored weights reproduce the best validation accuracy.
  const auto split = make_retrain_split(train.size(), cfg.validation_count, cfg.seed);
  EXPECT_DOUBLE_EQ(evaluate(*r.model, train, split.validation, r.stats, 8).accuracy, r.best_val_acc);
  EXPECT_EQ(r.parameters.total, count_parameters(*r.model).total);

  const auto dir = fixture::temp_dir("retrain_reports");
  write_retrain_report(dir / "retrain_report.csv", r.epochs);
  write_metrics(dir / "metrics.txt", r);
  EXPECT_EQ(read_file(dir / "retrain_report.csv").rfind("epoch,train_loss,val_acc\n", 0), 0u);
  const auto metrics = read_file(dir / "metrics.txt");
  EXPECT_NE(metrics.find("test_accuracy"), std::string::npos);
  EXPECT_NE(metrics.find("parameters"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Retrain, MixedCellsRejectedAndSeedsGiveDifferentWeights) {
  RetrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = 8;
  cfg.validation_count = 4;
  auto mixed = fixture::tiny_network();
  mixed.set_cell(CellKind::Mixed);
  const auto train = fixture::random_dataset(12, 11), test = fixture::random_dataset(4, 12);
  EXPECT_THROW(retrain(mixed, {}, cfg, train, test), std::invalid_argument);
  CellSource<float> cells;
  cells.genotype = fixture::tiny_genotype();
  auto a = retrain(fixture::tiny_network(), cells, cfg, train, test);
  cfg.seed = 2;
  auto b = retrain(fixture::tiny_network(), cells, cfg, train, test);
  EXPECT_NE(values_of(a.model->weight_parameters()), values_of(b.model->weight_parameters()));
}

TEST(Reports, SearchCsvHeader) {
  const auto dir = fixture::temp_dir("search_report");
  write_search_report(dir / "r.csv", {{0, 2.3, 2.2, 1.5}});
  const auto text = read_file(dir / "r.csv");
  EXPECT_EQ(text.rfind("epoch,train_loss,val_loss,alpha_entropy\n0,", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(RunSearch, FeedModeReachesTheMixedCells) {
  const auto data = fixture::random_dataset(24, 7);
  auto current = quick_search(4), previous = quick_search(4);
  current.max_epochs = previous.max_epochs = 1;
  previous.feed = FeedMode::PreviousStep;
  const auto a = run_search(fixture::tiny_network(), current, data);
  const auto b = run_search(fixture::tiny_network(), previous, data);
  EXPECT_NE(a.epochs.front().val_loss, b.epochs.front().val_loss);
}
