#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drn/numerics/checkpoint.hpp"
#include "drn/util/byte_io.hpp"

namespace drn {

enum class SplitTag { Train, Validation, Test };

inline constexpr std::size_t kNumClasses = 10;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kImageBytes = kImageChannels * kImageSide * kImageSide;
/// One CIFAR-10 binary record: label byte followed by the planar image.
inline constexpr std::size_t kCifarRecordBytes = 1 + kImageBytes;
inline constexpr std::size_t kCifarRecordsPerBatch = 10000;

/// 3×32×32 byte images stored planar (channel, row, column), one label each.
struct Dataset {
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
  SplitTag tag = SplitTag::Train;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> image(std::size_t i) const { return {images.data() + i * kImageBytes, kImageBytes}; }
  std::span<std::uint8_t> image(std::size_t i) { return {images.data() + i * kImageBytes, kImageBytes}; }
  void push_back(std::span<const std::uint8_t> image, std::uint8_t label);
  /// Copy of the listed items.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws FormatError on label ≥ 10 or a size mismatch.
  void validate() const;
};

/// Reads one CIFAR-10 binary batch file. Throws io::TruncatedError (naming
/// the byte offset) on a partial record and FormatError on a bad label.
Dataset read_cifar_batch(const std::filesystem::path& path, SplitTag tag = SplitTag::Train);
void write_cifar_batch(const std::filesystem::path& path, const Dataset& data);

struct Cifar10 {
  Dataset train;
  Dataset test;
};

/// Directory with data_batch_1.bin .. data_batch_5.bin and test_batch.bin
/// (the directory itself or its cifar-10-batches-bin child).
Cifar10 load_cifar10(const std::filesystem::path& dir);
/// Resolves the directory that load_cifar10 would read, or empty if the
/// files are not there.
std::filesystem::path find_cifar10(const std::filesystem::path& root);

/// DRIM raw format: "DRIM", u32 count, u8 channels (3), u8 height (32),
/// u8 width (32), then per item a label byte and the planar image bytes.
inline constexpr char kRawMagic[4] = {'D', 'R', 'I', 'M'};
Dataset load_raw(const std::filesystem::path& path, SplitTag tag = SplitTag::Train);
void save_raw(const std::filesystem::path& path, const Dataset& data);

/// Per-channel statistics of pixel/255 over a training split.
struct NormStats {
  std::array<double, kImageChannels> mean{};
  std::array<double, kImageChannels> std{1.0, 1.0, 1.0};

  static NormStats compute(const Dataset& data);
  static NormStats compute(const Dataset& data, std::span<const std::size_t> indices);

  /// Text form: `mean r g b` then `std r g b`.
  std::string format() const;
  static NormStats parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static NormStats load(const std::filesystem::path& path);
};

/// (x/255 - mean)/std per channel, planar layout preserved.
void normalize_image(std::span<const std::uint8_t> image, const NormStats& stats, std::span<float> out);

struct SearchSplit {
  std::vector<std::size_t> train_cs;
  std::vector<std::size_t> val_cs;
};

struct RetrainSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Random disjoint partition of [0, n); train_cs gets round(n·fraction) items.
SearchSplit make_search_split(std::size_t n, double train_fraction, std::uint64_t seed);
/// Carves `validation_count` random items out of [0, n) for early stopping;
/// the rest train.
RetrainSplit make_retrain_split(std::size_t n, std::size_t validation_count, std::uint64_t seed);

}  // namespace drn
