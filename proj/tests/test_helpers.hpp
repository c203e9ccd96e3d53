#pragma once

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "popdiv/error.hpp"
#include "popdiv/random.hpp"

#define CHECK_THROWS_CODE(expr, error_code)                                  \
  do {                                                                       \
    bool caught_ = false;                                                    \
    try {                                                                    \
      (void)(expr);                                                          \
    } catch (const popdiv::Error& e_) {                                      \
      caught_ = true;                                                        \
      CHECK_MESSAGE(e_.code() == (error_code), "got " << e_.what());         \
    }                                                                        \
    CHECK_MESSAGE(caught_, "expected popdiv::Error from " #expr);            \
  } while (0)

namespace testing {

inline std::filesystem::path data_dir() {
  if (const char* d = std::getenv("POPDIV_DATA_DIR")) return d;
  return std::filesystem::path(__FILE__).parent_path().parent_path() / "data";
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static popdiv::Rng rng(static_cast<std::uint64_t>(std::random_device{}()));
    path_ = std::filesystem::temp_directory_path() / ("popdiv-" + tag + "-" + std::to_string(rng.next() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
