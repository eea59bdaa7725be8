#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irkit/grid.hpp"
#include "irkit/hird.hpp"

namespace irkit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,    // I/O and anything unclassified
  kExitConfig = 2,     // bad configuration or usage
  kExitInput = 3,      // netlist parse, graph or solve failure
  kExitDimension = 4,  // grid shape mismatch
};

struct GlobalOptions {
  double pitch = 1.0;
  std::optional<double> vdd;  // overrides the generator's supply when set
  int threads = 0;
  std::string out = ".";
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
  bool cached = false;
};

struct RunManifest {
  std::vector<std::string> inputs;
  GridSpec grid;
  bool include_current = false;
  int size = 0;
  std::string out_dir;
  std::vector<StageTiming> stages;
  std::vector<std::string> files;
};

void write_run_manifest(const RunManifest& m, const std::string& path);

struct FeaturizeOptions {
  bool include_current = false;
  int size = 0;  // 0 keeps the native grid
  HirdMapMode mode = HirdMapMode::Cumulative;
};

// Each command reports errors on `err` and returns an ExitCode.
int cmd_gen(const GlobalOptions& opt, const std::string& config_path, const std::string& out_path,
            std::ostream& out, std::ostream& err);
int cmd_solve(const GlobalOptions& opt, const std::string& netlist_path, std::ostream& out,
              std::ostream& err);
int cmd_featurize(const GlobalOptions& opt, const std::string& netlist_path, const FeaturizeOptions& fo,
                  std::ostream& out, std::ostream& err);
int cmd_eval(const std::string& pred_path, const std::string& gold_path, double runtime_s,
             std::ostream& out, std::ostream& err);
int cmd_pipeline(const GlobalOptions& opt, const std::string& config_path, const FeaturizeOptions& fo,
                 const std::optional<std::string>& pred_path, std::ostream& out, std::ostream& err);

// Full command line, argv[0] included.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Directory holding stage cache entries: IRKIT_CACHE_DIR, else <out>/.irkit_cache.
std::string cache_dir(const std::string& out_dir);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace irkit::cli
