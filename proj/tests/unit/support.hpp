#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fcl_test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fcl_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Probability vector with p[y] = py and the rest split 1:2:3:... over the other classes.
inline std::vector<double> grid_vector(double py, std::size_t K, std::size_t y) {
  std::vector<double> p(K, 0.0);
  const double weight_sum = static_cast<double>((K - 1) * K) / 2.0;
  std::size_t w = 1;
  for (std::size_t k = 0; k < K; ++k) {
    if (k == y) {
      p[k] = py;
    } else {
      p[k] = (1.0 - py) * static_cast<double>(w++) / weight_sum;
    }
  }
  return p;
}

} // namespace fcl_test
