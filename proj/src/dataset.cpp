#include "symkernel/dataset.hpp"

#include <fstream>

#include "symkernel/detrng.hpp"
#include "symkernel/error.hpp"

namespace symkernel {

Dataset make_synthetic_two_class(int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::constraint, "sample count must be >= 1");
  Dataset ds;
  ds.height = 8;
  ds.width = 8;
  ds.channels = 1;
  ds.num_classes = 2;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  DetRng rng(seed);
  for (int i = 0; i < count; ++i) {
    const int label = i % 2;
    std::vector<double> img(64);
    for (int r = 0; r < 8; ++r) {
      const bool bright = (label == 0) ? r < 4 : r >= 4;
      for (int c = 0; c < 8; ++c) {
        const double base = bright ? 0.8 : 0.2;
        img[r * 8 + c] = base + rng.uniform(-0.1, 0.1);
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

Dataset load_cifar10(const std::vector<std::string>& files, int limit) {
  constexpr int kRecord = 3073;
  constexpr int kPixels = 3072;
  Dataset ds;
  ds.height = 32;
  ds.width = 32;
  ds.channels = 3;
  ds.num_classes = 10;
  for (const std::string& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::parse, "cannot open dataset file: " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff bytes = in.tellg();
    if (bytes % kRecord != 0)
      throw Error(ErrorCode::parse, "truncated CIFAR-10 batch (size not a multiple of 3073): " + path);
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> record(kRecord);
    const long long records = bytes / kRecord;
    for (long long r = 0; r < records; ++r) {
      if (limit >= 0 && static_cast<int>(ds.images.size()) >= limit) return ds;
      in.read(reinterpret_cast<char*>(record.data()), kRecord);
      if (!in) throw Error(ErrorCode::parse, "read failure in dataset file: " + path);
      const int label = record[0];
      if (label > 9) throw Error(ErrorCode::parse, "label byte out of range in: " + path);
      std::vector<double> img(kPixels);
      for (int p = 0; p < kPixels; ++p) img[p] = record[1 + p] / 255.0;
      ds.images.push_back(std::move(img));
      ds.labels.push_back(label);
    }
  }
  return ds;
}

}  // namespace symkernel
