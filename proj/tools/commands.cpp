#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "irkit/errors.hpp"
#include "irkit/featurize.hpp"
#include "irkit/metrics.hpp"
#include "irkit/netlist.hpp"
#include "irkit/pdngen.hpp"
#include "irkit/solver.hpp"

namespace irkit::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kCacheVersion = "irkit-cache-1";
constexpr const char* kGoldenStem = "golden";
constexpr const char* kFeatureDir = "features";
constexpr const char* kNetlistName = "design.sp";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string absolute(const std::string& p) { return fs::weakly_canonical(fs::absolute(p)).string(); }

// Cache entry: one "<content hash> <path>" line per produced file, stored
// under a name derived from the stage key.
class StageCache {
 public:
  StageCache(const std::string& dir, const std::string& stage, std::uint64_t key)
      : path_((fs::path(dir) / (stage + "-" + hex64(key) + ".entry")).string()) {}

  std::optional<std::vector<std::string>> lookup() const {
    std::ifstream in(path_);
    if (!in) return std::nullopt;
    std::vector<std::string> files;
    std::string hash;
    std::string file;
    while (in >> hash && std::getline(in >> std::ws, file)) {
      std::error_code ec;
      if (!fs::is_regular_file(file, ec)) return std::nullopt;
      if (hex64(fnv1a(read_bytes(file))) != hash) return std::nullopt;
      files.push_back(file);
    }
    if (files.empty()) return std::nullopt;
    return files;
  }

  void store(const std::vector<std::string>& files) const {
    std::ostringstream o;
    for (const auto& f : files) o << hex64(fnv1a(read_bytes(f))) << ' ' << f << '\n';
    // Write then rename so a concurrent reader never sees a partial entry.
    const auto tmp = path_ + ".tmp" + hex64((std::uint64_t{std::random_device{}()} << 32) | std::random_device{}());
    write_text(tmp, o.str());
    fs::rename(tmp, path_);
  }

 private:
  std::string path_;
};

std::uint64_t stage_key(std::string_view input, const std::string& params) {
  return fnv1a(params, fnv1a(input, fnv1a(kCacheVersion)));
}

std::string mode_name(HirdMapMode m) { return m == HirdMapMode::Cumulative ? "cumulative" : "incremental"; }

struct SolveOutput {
  GridSpec spec;
  ScalarGrid golden;
  std::vector<std::string> files;
  bool cached = false;
  nlohmann::ordered_json summary;
};

SolveOutput solve_stage(const GlobalOptions& opt, const std::string& netlist_path) {
  const auto bytes = read_bytes(netlist_path);
  const auto g = parse_netlist(std::string_view(bytes));
  SolveOutput s;
  s.spec = GridSpec::for_graph(g, opt.pitch);
  const auto base = (fs::path(opt.out) / kGoldenStem).string();
  std::ostringstream params;
  params.precision(17);
  params << "solve pitch=" << opt.pitch << " out=" << absolute(opt.out);
  const StageCache cache(cache_dir(opt.out), "solve", stage_key(bytes, params.str()));
  if (auto files = cache.lookup()) {
    s.cached = true;
    s.files = *files;
    s.golden = read_sgrd_file(base + ".sgrd");
    s.summary["cached"] = true;
    return s;
  }
  const auto v = solve_exact(g);
  s.golden = golden_ir_map(v, g, s.spec);
  fs::create_directories(opt.out);
  write_sgrd_file(s.golden, base + ".sgrd");
  write_csv_file(s.golden, base + ".csv");
  write_pgm_file(s.golden, base + ".pgm");
  s.files = {base + ".sgrd", base + ".csv", base + ".pgm"};
  cache.store(s.files);
  // Score against the stored map so cold and warm runs agree bit for bit.
  s.golden = read_sgrd_file(base + ".sgrd");
  double worst = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i) worst = std::max(worst, v.drop(static_cast<NodeIndex>(i)));
  s.summary["nodes"] = g.node_count();
  s.summary["unknowns"] = build_system(g).dimension();
  s.summary["worst_drop_v"] = worst;
  s.summary["relative_residual"] = v.relative_residual;
  s.summary["width"] = s.spec.width;
  s.summary["height"] = s.spec.height;
  return s;
}

struct FeaturizeOutput {
  std::vector<std::string> files;
  bool cached = false;
  std::vector<Diagnostic> diagnostics;
};

FeaturizeOutput featurize_stage(const GlobalOptions& opt, const std::string& netlist_path,
                                const FeaturizeOptions& fo) {
  if (fo.size < 0) throw ConfigError("--size must be non-negative");
  const auto bytes = read_bytes(netlist_path);
  const auto dir = (fs::path(opt.out) / kFeatureDir).string();
  std::ostringstream params;
  params.precision(17);
  params << "featurize pitch=" << opt.pitch << " current=" << fo.include_current << " size=" << fo.size
         << " mode=" << mode_name(fo.mode) << " out=" << absolute(dir);
  const StageCache cache(cache_dir(opt.out), "featurize", stage_key(bytes, params.str()));
  FeaturizeOutput f;
  if (auto files = cache.lookup()) {
    f.cached = true;
    f.files = *files;
    return f;
  }
  const auto g = parse_netlist(std::string_view(bytes));
  const auto spec = GridSpec::for_graph(g, opt.pitch);
  const auto hird = run_hird(g, spec, fo.mode);
  const auto stack = assemble_features(g, spec, hird.maps, fo.include_current);
  // Drop channel files left from a run with a different channel set.
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".sgrd" || e.path().filename() == kManifestName) fs::remove(e.path());
    }
  }
  f.files = export_stack(stack, dir, fo.size);
  cache.store(f.files);
  f.diagnostics = hird.maps.diagnostics;
  return f;
}

EvalReport eval_files(const std::string& pred_path, const std::string& gold_path, double runtime_s) {
  return evaluate(read_grid_file(pred_path), read_grid_file(gold_path), runtime_s);
}

nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["inputs"] = m.inputs;
  j["grid"] = {{"pixel_pitch_um", m.grid.pixel_pitch},
               {"width", m.grid.width},
               {"height", m.grid.height},
               {"dbu_per_micron", m.grid.dbu_per_micron}};
  j["include_current"] = m.include_current;
  j["size"] = m.size;
  j["out_dir"] = m.out_dir;
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : m.stages) stages.push_back({{"name", s.name}, {"seconds", s.seconds}, {"cached", s.cached}});
  j["stages"] = stages;
  j["files"] = m.files;
  return j;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "irkit: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "irkit: parse error: " << e.what() << '\n';
    return kExitInput;
  } catch (const GraphError& e) {
    err << "irkit: netlist error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SolveError& e) {
    err << "irkit: solve error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "irkit: dimension mismatch: " << e.what() << '\n';
    return kExitDimension;
  } catch (const std::exception& e) {
    err << "irkit: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

void report_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& err) {
  for (const auto& d : diags) err << "irkit: warning: " << to_string(d.kind) << ": " << d.message << '\n';
}

std::string gen_manifest_path(const std::string& netlist_path) { return netlist_path + ".json"; }

void gen_stage(const GlobalOptions& opt, const std::string& config_path, const std::string& out_path) {
  auto cfg = read_gen_config(config_path);
  if (opt.vdd) cfg.vdd = *opt.vdd;
  const auto g = generate(cfg);
  write_text(out_path, serialize_netlist(g));
  double total = 0.0;
  for (const auto& s : g.sinks()) total += s.current;
  nlohmann::ordered_json j;
  j["config"] = absolute(config_path);
  j["netlist"] = absolute(out_path);
  j["seed"] = cfg.seed;
  j["nodes"] = g.node_count();
  j["resistors"] = g.edges().size();
  j["sinks"] = g.sinks().size();
  j["pads"] = g.pads().size();
  j["layers"] = g.layers();
  j["total_current_a"] = total;
  j["settings"] = to_config_text(cfg);
  write_text(gen_manifest_path(out_path), j.dump(2) + "\n");
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cache_dir(const std::string& out_dir) {
  if (const char* env = std::getenv("IRKIT_CACHE_DIR"); env && *env) return env;
  return (fs::path(out_dir) / ".irkit_cache").string();
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
  write_text(path, manifest_json(m).dump(2) + "\n");
}

int cmd_gen(const GlobalOptions& opt, const std::string& config_path, const std::string& out_path,
            std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    gen_stage(opt, config_path, out_path);
    out << out_path << '\n';
    return kExitOk;
  });
}

int cmd_solve(const GlobalOptions& opt, const std::string& netlist_path, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto s = solve_stage(opt, netlist_path);
    out << s.summary.dump() << '\n';
    return kExitOk;
  });
}

int cmd_featurize(const GlobalOptions& opt, const std::string& netlist_path, const FeaturizeOptions& fo,
                  std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto f = featurize_stage(opt, netlist_path, fo);
    report_diagnostics(f.diagnostics, err);
    nlohmann::ordered_json j;
    j["cached"] = f.cached;
    j["files"] = f.files;
    out << j.dump() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const std::string& pred_path, const std::string& gold_path, double runtime_s,
             std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool pdir = fs::is_directory(pred_path);
    const bool gdir = fs::is_directory(gold_path);
    if (pdir != gdir) throw ConfigError("prediction and golden must both be files or both directories");
    if (!pdir) {
      out << to_json_line(eval_files(pred_path, gold_path, runtime_s)) << '\n';
      return kExitOk;
    }
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(pred_path)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".sgrd" || ext == ".csv") &&
          fs::is_regular_file(fs::path(gold_path) / e.path().filename())) {
        names.push_back(e.path().filename().string());
      }
    }
    if (names.empty()) throw Error("no matching prediction/golden file pairs");
    std::sort(names.begin(), names.end());
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (const auto& n : names) {
      rows.emplace_back(n, eval_files((fs::path(pred_path) / n).string(), (fs::path(gold_path) / n).string(),
                                      runtime_s));
    }
    write_report_csv(out, rows);
    return kExitOk;
  });
}

int cmd_pipeline(const GlobalOptions& opt, const std::string& config_path, const FeaturizeOptions& fo,
                 const std::optional<std::string>& pred_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunManifest m;
    m.inputs.push_back(absolute(config_path));
    if (pred_path) m.inputs.push_back(absolute(*pred_path));
    m.include_current = fo.include_current;
    m.size = fo.size;
    m.out_dir = absolute(opt.out);
    fs::create_directories(opt.out);

    const auto netlist = (fs::path(opt.out) / kNetlistName).string();
    auto t0 = Clock::now();
    gen_stage(opt, config_path, netlist);
    m.stages.push_back({"gen", seconds_since(t0), false});
    m.files.push_back(netlist);
    m.files.push_back(gen_manifest_path(netlist));

    t0 = Clock::now();
    const auto solved = solve_stage(opt, netlist);
    m.stages.push_back({"solve", seconds_since(t0), solved.cached});
    m.grid = solved.spec;
    m.files.insert(m.files.end(), solved.files.begin(), solved.files.end());

    t0 = Clock::now();
    const auto feats = featurize_stage(opt, netlist, fo);
    const double featurize_s = seconds_since(t0);
    m.stages.push_back({"featurize", featurize_s, feats.cached});
    m.files.insert(m.files.end(), feats.files.begin(), feats.files.end());
    report_diagnostics(feats.diagnostics, err);

    t0 = Clock::now();
    EvalReport report;
    if (pred_path) {
      report = evaluate(read_grid_file(*pred_path), solved.golden, 0.0);
    } else {
      const auto pred = read_sgrd_file((fs::path(opt.out) / kFeatureDir / "hird_m1.sgrd").string());
      const auto gold = pred.same_shape(solved.golden)
                            ? solved.golden
                            : resize_bilinear(solved.golden, pred.width(), pred.height());
      report = evaluate(pred, gold, featurize_s);
    }
    const auto eval_path = (fs::path(opt.out) / "eval.json").string();
    write_text(eval_path, to_json_line(report) + "\n");
    m.stages.push_back({"eval", seconds_since(t0), false});
    m.files.push_back(eval_path);

    const auto manifest_path = (fs::path(opt.out) / "run_manifest.json").string();
    m.files.push_back(manifest_path);
    write_run_manifest(m, manifest_path);
    out << to_json_line(report) << '\n';
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PDN static IR-drop toolkit", "irkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opt;
  double vdd = kDefaultVdd;
  app.add_option("--pitch", opt.pitch, "Pixel pitch in microns")->check(CLI::PositiveNumber);
  auto* vdd_opt = app.add_option("--vdd", vdd, "Supply voltage for generated netlists")->check(CLI::PositiveNumber);
  app.add_option("--threads", opt.threads, "Worker threads (0 = library default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", opt.out, "Output directory");

  FeaturizeOptions fo;
  std::string mode = "cumulative";
  auto add_feature_flags = [&](CLI::App* sub) {
    sub->add_flag("--include-current", fo.include_current, "Add the current-map channel");
    sub->add_option("--size", fo.size, "Resample channels to size x size (0 = native)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--hird-mode", mode, "HIRD map mode")->check(CLI::IsMember({"cumulative", "incremental"}));
  };

  std::string config;
  std::string netlist_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic PDN netlist");
  gen->add_option("config", config, "Generator config")->required();
  gen->add_option("-o,--netlist", netlist_out, "Netlist path (default <out>/<config stem>.sp)");

  std::string netlist;
  auto* solve = app.add_subcommand("solve", "Solve a netlist and write the golden IR-drop map");
  solve->add_option("netlist", netlist, "SPICE netlist")->required();

  auto* feat = app.add_subcommand("featurize", "Write the feature stack for a netlist");
  feat->add_option("netlist", netlist, "SPICE netlist")->required();
  add_feature_flags(feat);

  std::string pred;
  std::string gold;
  double runtime = 0.0;
  auto* eval = app.add_subcommand("eval", "Score a predicted map against a golden map");
  eval->add_option("pred", pred, "Predicted map or directory")->required();
  eval->add_option("gold", gold, "Golden map or directory")->required();
  eval->add_option("--runtime", runtime, "Prediction runtime to report, seconds");

  std::optional<std::string> pipeline_pred;
  auto* pipe = app.add_subcommand("pipeline", "gen, solve, featurize and eval in one run");
  pipe->add_option("config", config, "Generator config")->required();
  pipe->add_option("--pred", pipeline_pred, "Predicted map to score instead of the layer-1 HIRD map");
  add_feature_flags(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (vdd_opt->count() > 0) opt.vdd = vdd;
  fo.mode = mode == "incremental" ? HirdMapMode::Incremental : HirdMapMode::Cumulative;
  if (opt.threads > 0) Eigen::setNbThreads(opt.threads);

  if (*gen) {
    if (netlist_out.empty()) netlist_out = (fs::path(opt.out) / fs::path(config).stem()).string() + ".sp";
    return cmd_gen(opt, config, netlist_out, out, err);
  }
  if (*solve) return cmd_solve(opt, netlist, out, err);
  if (*feat) return cmd_featurize(opt, netlist, fo, out, err);
  if (*eval) return cmd_eval(pred, gold, runtime, out, err);
  return cmd_pipeline(opt, config, fo, pipeline_pred, out, err);
}

}  // namespace irkit::cli
