#pragma once

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <unistd.h>
#include <string>
#include <vector>

#include "hbnet/rng.hpp"
#include "hbnet/tensor.hpp"

namespace test_support {

inline hbnet::Tensor random_tensor(hbnet::Shape shape, hbnet::u64 key, double lo = -1.0,
                                   double hi = 1.0, bool requires_grad = false) {
    return hbnet::Tensor::uniform(std::move(shape), lo, hi, key, requires_grad);
}

inline bool bits_equal(const hbnet::Tensor& a, const hbnet::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    auto ad = a.data();
    auto bd = b.data();
    for (size_t i = 0; i < ad.size(); ++i) {
        if (std::memcmp(&ad[i], &bd[i], sizeof(double)) != 0) return false;
    }
    return true;
}

inline double max_abs_diff(const hbnet::Tensor& a, const hbnet::Tensor& b) {
    double m = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (size_t i = 0; i < ad.size(); ++i) m = std::max(m, std::abs(ad[i] - bd[i]));
    return m;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hbnet_test_" + tag + "_" + std::to_string(counter++) + "_" +
                 std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

}  // namespace test_support
