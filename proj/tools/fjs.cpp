#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "fjs/baselines.hpp"
#include "fjs/em.hpp"
#include "fjs/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fjs;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kInstanceExt = ".fjs";

struct Common {
  int workers = default_workers();
  bool json_out = false;
};

std::vector<fs::path> instance_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == kInstanceExt) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no " + std::string(kInstanceExt) + " instance files in " + dir.string());
  return files;
}

std::vector<Instance> load_dir(const fs::path& dir) {
  std::vector<Instance> out;
  for (const auto& f : instance_files(dir)) out.push_back(read_instance(f));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_manifest(const fs::path& path, const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<fs::path>& artifacts, double seconds) {
  json doc;
  doc["command"] = command;
  doc["config"] = config;
  doc["seed"] = seed;
  doc["artifacts"] = json::array();
  for (const auto& a : artifacts) doc["artifacts"].push_back(a.string());
  doc["version"] = kVersion;
  doc["wall_time_seconds"] = seconds;
  write_text(path, doc.dump(2) + "\n");
}

json tfn_json(const Tfn& t) { return json::array({t.a1, t.a2, t.a3}); }

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NamedParams<float> load_model(const fs::path& path, const PolicyConfig& cfg) {
  NamedParams<float> params = policy_params(nn::read_checkpoint(path), cfg);
  check_params(params, cfg);
  return params;
}

// generate

struct GenerateArgs {
  int n = 6, m = 6, count = 1;
  std::uint64_t seed = 0;
  fs::path out;
};

int run_generate(const GenerateArgs& a, const Common& c) {
  if (a.n < 1 || a.m < 1 || a.count < 1) throw ConfigError("--n, --m and --count must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(a.out);
  std::vector<fs::path> files;
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "inst_%04d%s", i, kInstanceExt);
    const fs::path path = a.out / name;
    const Instance inst = generate(a.n, a.m, derive_seed(a.seed, {static_cast<std::uint64_t>(i)}));
    write_instance(inst, path);
    if (!(read_instance(path) == inst)) throw ValidationError("round trip failed for " + path.string());
    files.push_back(path);
  }
  write_manifest(a.out / "manifest.json", "generate", {{"n", a.n}, {"m", a.m}, {"count", a.count}, {"out", a.out.string()}},
                 a.seed, files, since(t0));
  if (c.json_out) {
    json doc = {{"files", json::array()}};
    for (const auto& f : files) doc["files"].push_back(f.string());
    std::cout << doc.dump() << "\n";
  } else {
    for (const auto& f : files) std::cout << f.string() << "\n";
  }
  return 0;
}

// train

struct TrainArgs {
  fs::path data, val, out, resume;
  TrainConfig cfg;
};

int run_train(TrainArgs a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  a.cfg.workers = c.workers;
  a.cfg.checkpoint_dir = a.out;
  a.cfg.validate();
  const auto dataset = load_dir(a.data);
  const auto val = load_dir(a.val);

  std::optional<TrainState> state;
  if (!a.resume.empty()) state = unpack_train_state(nn::read_checkpoint(a.resume), a.cfg.policy, a.cfg.lr);

  const auto result = train(dataset, val, a.cfg, state, [&](const EpochReport& r) {
    if (c.json_out) {
      std::cout << json{{"epoch", r.epoch}, {"train_pseudo_makespan", r.train_pseudo_makespan}, {"train_nll", r.train_nll},
                        {"val_greedy_makespan", r.val_greedy_makespan}, {"seconds", r.seconds}}
                       .dump()
                << "\n";
    } else {
      std::cout << r.epoch << "\t" << format_real(r.train_pseudo_makespan) << "\t" << format_real(r.train_nll) << "\t"
                << format_real(r.val_greedy_makespan) << "\t" << format_real(r.seconds) << "\n";
    }
    std::cout.flush();
  });

  const fs::path best = a.out / "best.ckpt";
  check_params(load_model(best, a.cfg.policy), a.cfg.policy);
  std::vector<fs::path> artifacts{a.out / "report.csv", best};
  for (int e = 1; e <= a.cfg.epochs; ++e) artifacts.push_back(a.out / ("epoch_" + std::to_string(e) + ".ckpt"));
  for (const auto& p : artifacts)
    if (!fs::exists(p)) throw ValidationError("missing output " + p.string());

  json config = {{"data", a.data.string()}, {"val", a.val.string()}, {"out", a.out.string()},
                 {"resume", a.resume.string()}, {"epochs", a.cfg.epochs}, {"k", a.cfg.k_train},
                 {"batch", a.cfg.batch_size}, {"lr", a.cfg.lr}, {"workers", c.workers},
                 {"initial_val_greedy_makespan", result.initial_val}};
  write_manifest(a.out / "manifest.json", "train", config, a.cfg.seed, artifacts, since(t0));
  return 0;
}

// solve

struct SolveArgs {
  fs::path model, instance, gantt;
  int k = 512;
  std::uint64_t seed = 0;
};

int run_solve(const SolveArgs& a, const Common& c) {
  if (a.k < 0) throw ConfigError("--k must be >= 0");
  const PolicyConfig cfg;
  const RankConfig rank;
  const auto params = load_model(a.model, cfg);
  const Instance inst = read_instance(a.instance);
  const PolicyRunner runner(params, cfg, rank);
  const EvalResult r = evaluate_one(runner, inst, a.k, a.seed);

  const Schedule sched = decode(inst, r.best_sequence, rank);
  if (!(sched.makespan == r.best)) throw ValidationError("decoded makespan differs from rollout");
  const auto violations = feasibility_violations(inst, sched, rank);
  if (!violations.empty()) throw ValidationError("infeasible schedule: " + violations.front());

  std::vector<fs::path> artifacts;
  if (!a.gantt.empty()) {
    if (a.gantt.has_parent_path()) fs::create_directories(a.gantt.parent_path());
    write_text(a.gantt, export_gantt(sched, inst).dump(2) + "\n");
    artifacts.push_back(a.gantt);
    fs::path manifest = a.gantt;
    manifest.replace_extension(".manifest.json");
    write_manifest(manifest, "solve",
                   {{"model", a.model.string()}, {"instance", a.instance.string()}, {"k", a.k}, {"gantt", a.gantt.string()}},
                   a.seed, artifacts, r.seconds);
  }

  if (c.json_out) {
    std::cout << json{{"makespan", tfn_json(r.best)},      {"defuzz", defuzz(r.best)},
                      {"z_value", z_value(r.best, rank)},  {"greedy", tfn_json(r.greedy)},
                      {"seconds", r.seconds},              {"sequence", r.best_sequence}}
                     .dump()
              << "\n";
  } else {
    std::cout << "makespan\tdefuzz\tz_value\tseconds\n"
              << format_tfn(r.best) << "\t" << format_real(defuzz(r.best)) << "\t" << format_real(z_value(r.best, rank))
              << "\t" << format_real(r.seconds) << "\n";
  }
  return 0;
}

// bench

struct BenchArgs {
  fs::path instances, model, out = "bench.csv";
  std::string solvers = "emarm,ga,pso";
  BenchConfig cfg;
};

int run_bench(BenchArgs a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  a.cfg.solvers.clear();
  std::stringstream ss(a.solvers);
  for (std::string s; std::getline(ss, s, ',');)
    if (!s.empty()) a.cfg.solvers.push_back(s);
  a.cfg.workers = c.workers;
  if (!a.model.empty()) a.cfg.model = load_model(a.model, a.cfg.policy);
  a.cfg.validate();

  std::vector<BenchInstance> set;
  for (const auto& f : instance_files(a.instances)) set.push_back({f.stem().string(), read_instance(f)});
  const auto rows = bench(set, a.cfg);

  std::string csv = std::string(kBenchHeader) + "\n";
  for (const auto& r : rows) csv += csv_row(r) + "\n";
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  write_text(a.out, csv);
  const TimingTable table = timing_table(rows);
  fs::path timing = a.out;
  timing.replace_extension(".timing.tsv");
  write_text(timing, format_timing_tsv(table));
  fs::path manifest = a.out;
  manifest.replace_extension(".manifest.json");
  write_manifest(manifest, "bench",
                 {{"instances", a.instances.string()}, {"model", a.model.string()}, {"solvers", a.solvers},
                  {"repeats", a.cfg.repeats}, {"k", a.cfg.k}, {"workers", c.workers}, {"out", a.out.string()}},
                 a.cfg.seed, {a.out, timing}, since(t0));

  if (c.json_out) {
    json doc = {{"solvers", table.solvers}, {"sizes", table.sizes}, {"seconds", table.seconds}};
    std::cout << doc.dump() << "\n";
  } else {
    std::cout << format_timing_tsv(table);
  }
  return 0;
}

template <typename T>
CLI::Option* env_opt(CLI::App* app, const std::string& flag, T& value, const std::string& env, const std::string& help) {
  return app->add_option(flag, value, help)->envname(env)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy job shop scheduling toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--workers", common.workers, "Concurrent rollouts/runs")->envname("FJS_WORKERS")->capture_default_str();
  app.add_flag("--json", common.json_out, "Machine-readable stdout")->envname("FJS_JSON");
  app.set_version_flag("--version", kVersion);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write seeded random instances");
  env_opt(g, "--n", gen.n, "FJS_N", "Jobs");
  env_opt(g, "--m", gen.m, "FJS_M", "Machines");
  env_opt(g, "--count", gen.count, "FJS_COUNT", "Number of instances");
  env_opt(g, "--seed", gen.seed, "FJS_SEED", "Seed");
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "EM self-labeling training");
  t->add_option("--data", tr.data, "Training instance directory")->required();
  t->add_option("--val", tr.val, "Validation instance directory")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  env_opt(t, "--epochs", tr.cfg.epochs, "FJS_EPOCHS", "Epochs");
  env_opt(t, "--k", tr.cfg.k_train, "FJS_K", "Sampled rollouts per instance");
  env_opt(t, "--batch", tr.cfg.batch_size, "FJS_BATCH", "Batch size");
  env_opt(t, "--lr", tr.cfg.lr, "FJS_LR", "Adam learning rate");
  env_opt(t, "--seed", tr.cfg.seed, "FJS_SEED", "Seed");
  env_opt(t, "--val-interval", tr.cfg.validation_interval, "FJS_VAL_INTERVAL", "Validate every N epochs");
  t->add_option("--resume", tr.resume, "Epoch checkpoint to resume from")->check(CLI::ExistingFile);

  SolveArgs so;
  auto* s = app.add_subcommand("solve", "Solve one instance with a trained policy");
  s->add_option("--model", so.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  s->add_option("--instance", so.instance, "Instance file")->required()->check(CLI::ExistingFile);
  env_opt(s, "--k", so.k, "FJS_K", "Sampled rollouts on top of greedy");
  env_opt(s, "--seed", so.seed, "FJS_SEED", "Seed");
  s->add_option("--gantt", so.gantt, "Gantt JSON output");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Benchmark solvers");
  b->add_option("--instances", be.instances, "Instance directory")->required();
  env_opt(b, "--solvers", be.solvers, "FJS_SOLVERS", "Comma-separated solvers");
  env_opt(b, "--repeats", be.cfg.repeats, "FJS_REPEATS", "Runs per instance and solver");
  b->add_option("--model", be.model, "Checkpoint for emarm")->envname("FJS_MODEL")->check(CLI::ExistingFile);
  env_opt(b, "--out", be.out, "FJS_OUT", "CSV output");
  env_opt(b, "--k", be.cfg.k, "FJS_K", "emarm sampled rollouts on top of greedy");
  env_opt(b, "--seed", be.cfg.seed, "FJS_SEED", "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return run_generate(gen, common);
    if (t->parsed()) return run_train(tr, common);
    if (s->parsed()) return run_solve(so, common);
    if (b->parsed()) return run_bench(be, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
