#include "drn/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "drn/data/augment.hpp"

namespace drn {

void Dataset::push_back(std::span<const std::uint8_t> image, std::uint8_t label) {
  if (image.size() != kImageBytes) throw FormatError("image must have " + std::to_string(kImageBytes) + " bytes");
  images.insert(images.end(), image.begin(), image.end());
  labels.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.tag = tag;
  out.images.reserve(indices.size() * kImageBytes);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("subset index " + std::to_string(i));
    out.push_back(image(i), labels[i]);
  }
  return out;
}

void Dataset::validate() const {
  if (images.size() != labels.size() * kImageBytes) throw FormatError("image buffer does not match label count");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kNumClasses) {
      throw FormatError("item " + std::to_string(i) + " has label " + std::to_string(labels[i]));
    }
  }
}

namespace {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

Dataset read_cifar_batch(const std::filesystem::path& path, SplitTag tag) {
  const std::vector<char> bytes = read_file(path);
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw io::TruncatedError(path.string() + ": truncated at byte offset " + std::to_string(bytes.size()) +
                             " (record " + std::to_string(records) + " starts at offset " +
                             std::to_string(records * kCifarRecordBytes) + " and needs " +
                             std::to_string(kCifarRecordBytes) + " bytes)");
  }
  Dataset out;
  out.tag = tag;
  out.images.resize(records * kImageBytes);
  out.labels.resize(records);
  for (std::size_t r = 0; r < records; ++r) {
    const char* rec = bytes.data() + r * kCifarRecordBytes;
    const auto label = static_cast<std::uint8_t>(rec[0]);
    if (label >= kNumClasses) {
      throw FormatError(path.string() + ": record " + std::to_string(r) + " at byte offset " +
                        std::to_string(r * kCifarRecordBytes) + " has label " + std::to_string(label));
    }
    out.labels[r] = label;
    std::memcpy(out.images.data() + r * kImageBytes, rec + 1, kImageBytes);
  }
  return out;
}

void write_cifar_batch(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < data.size(); ++i) {
    io::put_u8(os, data.labels[i]);
    os.write(reinterpret_cast<const char*>(data.image(i).data()), kImageBytes);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path find_cifar10(const std::filesystem::path& root) {
  if (root.empty()) return {};
  for (const auto& dir : {root, root / "cifar-10-batches-bin"}) {
    bool complete = std::filesystem::exists(dir / "test_batch.bin");
    for (int b = 1; b <= 5 && complete; ++b) {
      complete = std::filesystem::exists(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    }
    if (complete) return dir;
  }
  return {};
}

Cifar10 load_cifar10(const std::filesystem::path& dir) {
  const auto base = find_cifar10(dir);
  if (base.empty()) {
    throw std::runtime_error("no CIFAR-10 binary batches (data_batch_1..5.bin, test_batch.bin) under " + dir.string());
  }
  Cifar10 out;
  out.train.tag = SplitTag::Train;
  for (int b = 1; b <= 5; ++b) {
    Dataset part = read_cifar_batch(base / ("data_batch_" + std::to_string(b) + ".bin"), SplitTag::Train);
    out.train.images.insert(out.train.images.end(), part.images.begin(), part.images.end());
    out.train.labels.insert(out.train.labels.end(), part.labels.begin(), part.labels.end());
  }
  out.test = read_cifar_batch(base / "test_batch.bin", SplitTag::Test);
  return out;
}

Dataset load_raw(const std::filesystem::path& path, SplitTag tag) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  io::Reader in(is, path.string());
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kRawMagic, 4) != 0) throw FormatError(path.string() + ": bad magic, expected DRIM");
  const std::uint32_t count = in.u32();
  const unsigned c = in.u8(), h = in.u8(), w = in.u8();
  if (c != kImageChannels || h != kImageSide || w != kImageSide) {
    throw FormatError(path.string() + ": unsupported geometry " + std::to_string(c) + "x" + std::to_string(h) + "x" +
                      std::to_string(w));
  }
  Dataset out;
  out.tag = tag;
  out.images.resize(std::size_t{count} * kImageBytes);
  out.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    out.labels[i] = in.u8();
    if (out.labels[i] >= kNumClasses) {
      throw FormatError(path.string() + ": item " + std::to_string(i) + " has label " + std::to_string(out.labels[i]));
    }
    in.bytes(out.images.data() + std::size_t{i} * kImageBytes, kImageBytes);
  }
  if (!in.at_end()) {
    throw FormatError(path.string() + ": count mismatch, header says " + std::to_string(count) +
                      " items but more bytes follow at offset " + std::to_string(in.offset()));
  }
  return out;
}

void save_raw(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(kRawMagic, 4);
  io::put_u32(os, static_cast<std::uint32_t>(data.size()));
  io::put_u8(os, kImageChannels);
  io::put_u8(os, kImageSide);
  io::put_u8(os, kImageSide);
  for (std::size_t i = 0; i < data.size(); ++i) {
    io::put_u8(os, data.labels[i]);
    os.write(reinterpret_cast<const char*>(data.image(i).data()), kImageBytes);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

NormStats NormStats::compute(const Dataset& data) {
  const auto all = [&] {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }();
  return compute(data, all);
}

NormStats NormStats::compute(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("normalization statistics need at least one image");
  constexpr std::size_t plane = kImageSide * kImageSide;
  // Integer sums are exact, so the result does not depend on summation order.
  std::array<std::uint64_t, kImageChannels> s{}, sq{};
  for (std::size_t i : indices) {
    const auto img = data.image(i);
    for (std::size_t c = 0; c < kImageChannels; ++c)
      for (std::size_t p = 0; p < plane; ++p) {
        const std::uint64_t v = img[c * plane + p];
        s[c] += v;
        sq[c] += v * v;
      }
  }
  NormStats out;
  const double n = static_cast<double>(indices.size() * plane);
  for (std::size_t c = 0; c < kImageChannels; ++c) {
    const double m = static_cast<double>(s[c]) / n;
    const double var = static_cast<double>(sq[c]) / n - m * m;
    out.mean[c] = m / 255.0;
    out.std[c] = std::sqrt(std::max(var, 0.0)) / 255.0;
    if (!(out.std[c] > 0.0)) throw std::invalid_argument("channel " + std::to_string(c) + " has zero variance");
  }
  return out;
}

std::string NormStats::format() const {
  std::ostringstream os;
  os.precision(17);
  os << "mean " << mean[0] << ' ' << mean[1] << ' ' << mean[2] << '\n';
  os << "std " << std[0] << ' ' << std[1] << ' ' << std[2] << '\n';
  return os.str();
}

NormStats NormStats::parse(const std::string& text) {
  std::istringstream is(text);
  NormStats out;
  std::string key;
  bool seen_mean = false, seen_std = false;
  while (is >> key) {
    auto& dst = key == "mean" ? out.mean : key == "std" ? out.std : throw FormatError("unknown stats key " + key);
    for (double& v : dst) {
      if (!(is >> v)) throw FormatError("stats line '" + key + "' needs three values");
    }
    (key == "mean" ? seen_mean : seen_std) = true;
  }
  if (!seen_mean || !seen_std) throw FormatError("stats need both mean and std lines");
  for (double v : out.std) {
    if (!(v > 0.0)) throw FormatError("stats std must be positive");
  }
  return out;
}

void NormStats::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << format();
}

NormStats NormStats::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void normalize_image(std::span<const std::uint8_t> image, const NormStats& stats, std::span<float> out) {
  constexpr std::size_t plane = kImageSide * kImageSide;
  if (image.size() != kImageBytes || out.size() != kImageBytes) throw DimensionError("normalize_image: size mismatch");
  for (std::size_t c = 0; c < kImageChannels; ++c) {
    const double m = stats.mean[c], inv = 1.0 / stats.std[c];
    for (std::size_t p = 0; p < plane; ++p) {
      out[c * plane + p] = static_cast<float>((image[c * plane + p] / 255.0 - m) * inv);
    }
  }
}

namespace {

// Fisher-Yates with a fixed bounded-draw rule so the permutation only depends
// on the seed, not on the standard library.
void permute(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

SearchSplit make_search_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("search split needs at least 2 items");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0,1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  permute(idx, rng);
  auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  cut = std::clamp<std::size_t>(cut, 1, n - 1);
  SearchSplit s;
  s.train_cs.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  s.val_cs.assign(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  std::sort(s.train_cs.begin(), s.train_cs.end());
  std::sort(s.val_cs.begin(), s.val_cs.end());
  return s;
}

RetrainSplit make_retrain_split(std::size_t n, std::size_t validation_count, std::uint64_t seed) {
  if (n < 2 || validation_count == 0 || validation_count >= n) {
    throw std::invalid_argument("retrain split: cannot carve " + std::to_string(validation_count) +
                                " validation items from " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed ^ 0x7a11dULL));
  permute(idx, rng);
  RetrainSplit s;
  s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(validation_count));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(validation_count), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

}  // namespace drn
