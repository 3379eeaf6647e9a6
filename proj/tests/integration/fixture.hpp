#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace icms::it {

namespace fs = std::filesystem;

// Fresh per-test scratch directory, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() /
              ("icms_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Exit status of the CLI run with `args`; stdout/stderr are discarded.
inline int run_cli(const std::string& args) {
  const std::string cmd = std::string(ICMS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small enough to keep every CLI test well under a second or two.
inline const char* kSmallConfig = R"({
  "seed": 3,
  "n_dags": 2,
  "nodes": {"min": 8, "max": 9},
  "dgp": {"n_source": 400, "n_target": 200},
  "zoo": {"ridge_penalties": [0.01, 1.0], "poly_degrees": [1, 2], "poly_penalties": [1.0],
          "knn_k": [5], "corruption_coefficients": [0.5, 1.0]},
  "sweeps": {"lambdas": [0, 1], "fractions": [0, 0.5], "kept": [0.5, 1]}
})";

}  // namespace icms::it
