// Command line front end for the influence-path analysis library.
//
// The tool drives the whole pipeline from one configuration: corpus and task
// generation, training, path enumeration, attribution analysis, gate-average
// compression, self verification, and report rendering. Everything reaches
// the library through the C interface in ipaths.h.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ipaths.h"

namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void bail(const std::string& what, ipaths_status s) {
  const char* detail = ipaths_last_error();
  if (!detail || !*detail) detail = ipaths_status_string(s);
  throw CliError(what + ": " + detail);
}

void check(ipaths_status s, const std::string& what) {
  if (s != IPATHS_OK) bail(what, s);
}

void note(const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }

struct ConfigDelete {
  void operator()(ipaths_config* p) const { ipaths_config_free(p); }
};
struct LexiconDelete {
  void operator()(ipaths_lexicon* p) const { ipaths_lexicon_free(p); }
};
struct ModelDelete {
  void operator()(ipaths_model* p) const { ipaths_model_free(p); }
};
struct DatasetDelete {
  void operator()(ipaths_dataset* p) const { ipaths_dataset_free(p); }
};
using ConfigPtr = std::unique_ptr<ipaths_config, ConfigDelete>;
using LexiconPtr = std::unique_ptr<ipaths_lexicon, LexiconDelete>;
using ModelPtr = std::unique_ptr<ipaths_model, ModelDelete>;
using DatasetPtr = std::unique_ptr<ipaths_dataset, DatasetDelete>;

std::string cfg_get(const ipaths_config* cfg, const std::string& key) {
  char buf[1024];
  check(ipaths_config_get(cfg, key.c_str(), buf, sizeof(buf)), "config get " + key);
  return buf;
}

long long cfg_int(const ipaths_config* cfg, const std::string& key) {
  return std::stoll(cfg_get(cfg, key));
}

uint64_t cfg_u64(const ipaths_config* cfg, const std::string& key) {
  return std::stoull(cfg_get(cfg, key));
}

bool cfg_bool(const ipaths_config* cfg, const std::string& key) {
  return cfg_get(cfg, key) == "true";
}

// Everything the subcommands share: the resolved configuration, its hash,
// and the output directory.
struct Run {
  ConfigPtr cfg;
  std::string hash;
  std::string out_dir;

  std::string path(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }
};

Run resolve_run(const std::string& config_file,
                const std::vector<std::string>& overrides, const std::string& out_flag,
                int threads_flag) {
  Run run;
  ipaths_config* raw = nullptr;
  if (config_file.empty()) {
    check(ipaths_config_default(&raw), "default config");
  } else {
    check(ipaths_config_load(config_file.c_str(), &raw), "load config " + config_file);
  }
  run.cfg.reset(raw);

  // The environment supplies the default output directory; explicit config
  // or flag values win over it.
  if (const char* env = std::getenv("IPATHS_OUT_DIR"))
    if (*env && cfg_get(run.cfg.get(), "run.out_dir") == "out")
      check(ipaths_config_set(run.cfg.get(), "run.out_dir", env), "apply IPATHS_OUT_DIR");

  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CliError("--set expects section.key=value, got '" + kv + "'");
    check(ipaths_config_set(run.cfg.get(), kv.substr(0, eq).c_str(),
                            kv.substr(eq + 1).c_str()),
          "set " + kv.substr(0, eq));
  }
  if (!out_flag.empty())
    check(ipaths_config_set(run.cfg.get(), "run.out_dir", out_flag.c_str()), "set out dir");
  if (threads_flag > 0)
    check(ipaths_config_set(run.cfg.get(), "run.threads",
                            std::to_string(threads_flag).c_str()),
          "set threads");

  char hash[64];
  check(ipaths_config_hash(run.cfg.get(), hash, sizeof(hash)), "config hash");
  run.hash = hash;
  run.out_dir = cfg_get(run.cfg.get(), "run.out_dir");
  return run;
}

LexiconPtr build_lexicon(const Run& run) {
  ipaths_lexicon_params p;
  ipaths_lexicon_params_init(&p);
  const ipaths_config* cfg = run.cfg.get();
  p.determiners = static_cast<int32_t>(cfg_int(cfg, "lexicon.determiners"));
  p.noun_pairs = static_cast<int32_t>(cfg_int(cfg, "lexicon.noun_pairs"));
  p.verb_pairs = static_cast<int32_t>(cfg_int(cfg, "lexicon.verb_pairs"));
  p.prepositions = static_cast<int32_t>(cfg_int(cfg, "lexicon.prepositions"));
  p.adverbs = static_cast<int32_t>(cfg_int(cfg, "lexicon.adverbs"));
  p.fillers = static_cast<int32_t>(cfg_int(cfg, "lexicon.fillers"));
  p.seed = cfg_u64(cfg, "lexicon.seed");
  ipaths_lexicon* lex = nullptr;
  check(ipaths_lexicon_build(&p, &lex), "build lexicon");
  return LexiconPtr(lex);
}

ModelPtr load_model(const Run& run, const std::string& model_flag) {
  const std::string path = model_flag.empty() ? run.path("model.json") : model_flag;
  ipaths_model* m = nullptr;
  check(ipaths_model_load(path.c_str(), &m), "load model " + path);
  return ModelPtr(m);
}

// Fixed per-cell seed offsets keep generated datasets stable no matter which
// subset of tasks is requested.
struct TaskCell {
  const char* task;
  const char* condition;
  uint64_t offset;
};

const std::vector<TaskCell>& all_cells() {
  static const std::vector<TaskCell> cells = {
      {"Simple", "S", 0},      {"Simple", "P", 1},      {"nounPP", "SS", 2},
      {"nounPP", "SP", 3},     {"nounPP", "PS", 4},     {"nounPP", "PP", 5},
      {"nounPPAdv", "SS", 6},  {"nounPPAdv", "SP", 7},  {"nounPPAdv", "PS", 8},
      {"nounPPAdv", "PP", 9},
  };
  return cells;
}

// Dataset files the generator writes, in sorted-name order so that defaults
// are stable across runs.
std::vector<std::string> find_datasets(const Run& run, bool include_simple) {
  std::vector<std::string> files;
  if (!fs::is_directory(run.out_dir)) return files;
  for (const auto& entry : fs::directory_iterator(run.out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("tasks_", 0) != 0 || entry.path().extension() != ".json") continue;
    if (!include_simple && name.rfind("tasks_Simple_", 0) == 0) continue;
    files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void log_to_stderr(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }
void log_to_stdout(const char* line, void*) { std::fprintf(stdout, "%s\n", line); }

int cmd_gen_corpus(const Run& run) {
  LexiconPtr lex = build_lexicon(run);
  fs::create_directories(run.out_dir);
  const std::string lex_path = run.path("lexicon.json");
  check(ipaths_lexicon_save(lex.get(), run.hash.c_str(), lex_path.c_str()),
        "save lexicon");
  const std::string corpus_path = run.path("corpus.txt");
  check(ipaths_corpus_generate(lex.get(), cfg_int(run.cfg.get(), "corpus.sentences"),
                               cfg_u64(run.cfg.get(), "corpus.seed"),
                               corpus_path.c_str()),
        "generate corpus");
  note("wrote " + lex_path);
  note("wrote " + corpus_path);
  return 0;
}

int cmd_gen_tasks(const Run& run, const std::vector<std::string>& tasks, int count) {
  LexiconPtr lex = build_lexicon(run);
  fs::create_directories(run.out_dir);
  const int n = count > 0 ? count : static_cast<int>(cfg_int(run.cfg.get(), "tasks.count"));
  const uint64_t base = cfg_u64(run.cfg.get(), "tasks.seed");
  bool any = false;
  for (const TaskCell& cell : all_cells()) {
    if (!tasks.empty()) {
      bool wanted = false;
      for (const std::string& t : tasks) wanted = wanted || t == cell.task;
      if (!wanted) continue;
    }
    const std::string path =
        run.path(std::string("tasks_") + cell.task + "_" + cell.condition + ".json");
    check(ipaths_tasks_generate(lex.get(), cell.task, cell.condition, n,
                                base + cell.offset, path.c_str()),
          std::string("generate ") + cell.task + " " + cell.condition);
    note("wrote " + path);
    any = true;
  }
  if (!any) throw CliError("no such task; expected Simple, nounPP, or nounPPAdv");
  return 0;
}

int cmd_train(const Run& run, const std::string& corpus_flag) {
  LexiconPtr lex = build_lexicon(run);
  const std::string corpus = corpus_flag.empty() ? run.path("corpus.txt") : corpus_flag;
  ipaths_train_params p;
  ipaths_train_params_init(&p);
  const ipaths_config* cfg = run.cfg.get();
  p.embedding_dim = static_cast<int32_t>(cfg_int(cfg, "train.embedding_dim"));
  p.hidden_size = static_cast<int32_t>(cfg_int(cfg, "train.hidden_size"));
  p.epochs = static_cast<int32_t>(cfg_int(cfg, "train.epochs"));
  p.batch_size = static_cast<int32_t>(cfg_int(cfg, "train.batch_size"));
  p.learning_rate = std::stod(cfg_get(cfg, "train.learning_rate"));
  p.seed = cfg_u64(cfg, "train.seed");
  p.dev_count = static_cast<int32_t>(cfg_int(cfg, "train.dev_count"));
  p.simple_gate = std::stod(cfg_get(cfg, "train.simple_gate"));
  p.nounpp_gate = std::stod(cfg_get(cfg, "train.nounpp_gate"));

  ipaths_model* m = nullptr;
  check(ipaths_train(lex.get(), corpus.c_str(), &p, log_to_stderr, nullptr, &m),
        "train on " + corpus);
  ModelPtr model(m);
  fs::create_directories(run.out_dir);
  const std::string ckpt = run.path("model.json");
  check(ipaths_model_save(model.get(), run.hash.c_str(), ckpt.c_str()), "save model");
  note("wrote " + ckpt);
  return 0;
}

int cmd_eval_na(const Run& run, const std::string& model_flag,
                const std::vector<std::string>& data) {
  ModelPtr model = load_model(run, model_flag);
  for (const std::string& file : data) {
    ipaths_dataset* raw = nullptr;
    check(ipaths_dataset_load(file.c_str(), &raw), "load dataset " + file);
    DatasetPtr dataset(raw);
    double acc = 0.0;
    check(ipaths_na_accuracy(model.get(), dataset.get(), &acc), "score " + file);
    if (data.size() == 1)
      std::printf("%g\n", acc);
    else
      std::printf("%s %g\n", file.c_str(), acc);
  }
  return 0;
}

int cmd_paths_count(const std::string& task, const std::string& focus) {
  int64_t n = 0;
  check(ipaths_path_count(task.c_str(), focus.c_str(), &n), "count paths");
  std::printf("%lld\n", static_cast<long long>(n));
  return 0;
}

int cmd_paths_enumerate(const Run& run, const std::string& task,
                        const std::string& focus, const std::string& out_file) {
  fs::create_directories(run.out_dir);
  const std::string path = out_file.empty()
                               ? run.path("paths_" + task + "_" + focus + ".jsonl")
                               : out_file;
  check(ipaths_paths_dump(task.c_str(), focus.c_str(), run.hash.c_str(), path.c_str()),
        "enumerate paths");
  note("wrote " + path);
  return 0;
}

int cmd_analyze(const Run& run, const std::string& model_flag,
                std::vector<std::string> data, const std::string& focus, bool dump) {
  if (data.empty()) data = find_datasets(run, true);
  if (data.empty()) throw CliError("no datasets; run gen-tasks or pass --data");
  ModelPtr model = load_model(run, model_flag);
  LexiconPtr lex = build_lexicon(run);

  ipaths_analyze_params p;
  ipaths_analyze_params_init(&p);
  const ipaths_config* cfg = run.cfg.get();
  p.focus = focus.c_str();
  p.k_steps = static_cast<int32_t>(cfg_int(cfg, "analyze.k_steps"));
  p.max_sentences = static_cast<int32_t>(cfg_int(cfg, "analyze.max_sentences"));
  p.mc_samples = cfg_int(cfg, "analyze.mc_samples");
  p.metrics_seed = cfg_u64(cfg, "analyze.metrics_seed");
  p.threads = static_cast<int32_t>(cfg_int(cfg, "run.threads"));
  p.dump_attributions = (dump || cfg_bool(cfg, "analyze.dump_attributions")) ? 1 : 0;
  p.config_hash = run.hash.c_str();

  std::vector<const char*> files;
  for (const std::string& f : data) files.push_back(f.c_str());
  const std::string out = run.path("analysis");
  check(ipaths_analyze(model.get(), lex.get(), files.data(),
                       static_cast<int32_t>(files.size()), &p, out.c_str()),
        "analyze");
  note("wrote " + out + "/summary.csv");
  note("wrote " + out + "/report.md");
  return 0;
}

int cmd_compress(const Run& run, const std::string& model_flag,
                 std::vector<std::string> data, bool strict_span, bool pool) {
  if (data.empty()) data = find_datasets(run, false);
  if (data.empty()) throw CliError("no datasets; run gen-tasks or pass --data");
  ModelPtr model = load_model(run, model_flag);
  LexiconPtr lex = build_lexicon(run);

  ipaths_compress_params p;
  ipaths_compress_params_init(&p);
  const ipaths_config* cfg = run.cfg.get();
  p.strict_span = (strict_span || cfg_bool(cfg, "compress.strict_span")) ? 1 : 0;
  p.pool_per_task = (pool || cfg_bool(cfg, "compress.pool_per_task")) ? 1 : 0;
  p.threads = static_cast<int32_t>(cfg_int(cfg, "run.threads"));
  p.config_hash = run.hash.c_str();

  std::vector<const char*> files;
  for (const std::string& f : data) files.push_back(f.c_str());
  const std::string out = run.path("compression");
  check(ipaths_compress(model.get(), lex.get(), files.data(),
                        static_cast<int32_t>(files.size()), &p, out.c_str()),
        "compress");
  note("wrote " + out + "/compression.csv");
  return 0;
}

int cmd_verify(const Run& run, const std::string& model_flag, int k, int sentences,
               uint64_t seed) {
  LexiconPtr lex = build_lexicon(run);
  ModelPtr model;
  if (!model_flag.empty() || fs::exists(run.path("model.json"))) {
    model = load_model(run, model_flag);
  } else {
    // No checkpoint around: the properties hold for any parameters, so a
    // freshly initialized model does fine.
    const ipaths_config* cfg = run.cfg.get();
    ipaths_model* m = nullptr;
    check(ipaths_model_init(lex.get(),
                            static_cast<int32_t>(cfg_int(cfg, "train.embedding_dim")),
                            static_cast<int32_t>(cfg_int(cfg, "train.hidden_size")),
                            cfg_u64(cfg, "train.seed"), &m),
          "init model");
    model.reset(m);
    note("verifying a freshly initialized model");
  }
  int32_t failures = 0;
  check(ipaths_verify(model.get(), lex.get(), k, sentences, seed, log_to_stdout,
                      nullptr, &failures),
        "verify");
  if (failures > 0) {
    std::fprintf(stderr, "ipaths: %d verification check(s) failed\n", failures);
    return 1;
  }
  return 0;
}

int cmd_report(const Run& run, const std::string& dir) {
  std::vector<std::string> dirs;
  if (!dir.empty()) {
    dirs.push_back(dir);
  } else {
    for (const char* sub : {"analysis", "compression"})
      if (fs::is_directory(run.path(sub))) dirs.push_back(run.path(sub));
    if (dirs.empty()) throw CliError("nothing to render; pass a directory");
  }
  for (const std::string& d : dirs) {
    check(ipaths_report(d.c_str()), "render " + d);
    note("rendered " + d);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-path analysis for a 2-layer LSTM agreement model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ipaths_version());

  std::string config_file;
  std::vector<std::string> overrides;
  std::string out_flag;
  int threads_flag = 0;
  app.add_option("--config", config_file, "Configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override one config entry (section.key=value)");
  app.add_option("--out", out_flag, "Output directory");
  app.add_option("--threads", threads_flag, "Worker threads (1 = canonical output)");

  auto* gen_corpus = app.add_subcommand("gen-corpus", "Generate the training corpus");

  std::vector<std::string> task_names;
  int task_count = 0;
  auto* gen_tasks = app.add_subcommand("gen-tasks", "Generate task datasets");
  gen_tasks->add_option("--task", task_names, "Restrict to one task (repeatable)");
  gen_tasks->add_option("--count", task_count, "Sentences per condition");

  std::string corpus_flag;
  auto* train = app.add_subcommand("train", "Train the model on the corpus");
  train->add_option("--corpus", corpus_flag, "Corpus file");

  std::string model_flag;
  std::vector<std::string> data_files;
  auto* eval_na = app.add_subcommand("eval-na", "Report number-agreement accuracy");
  eval_na->add_option("--model", model_flag, "Model checkpoint");
  eval_na->add_option("--data", data_files, "Task dataset file (repeatable)")
      ->required();

  std::string task_flag, focus_flag = "subject", out_file_flag;
  auto* paths = app.add_subcommand("paths", "Work with the unrolled path graph");
  paths->require_subcommand(1);
  auto* paths_count = paths->add_subcommand("count", "Print the number of paths");
  auto* paths_enum = paths->add_subcommand("enumerate", "Dump all paths as JSON lines");
  for (auto* sub : {paths_count, paths_enum}) {
    sub->add_option("--task", task_flag, "Simple, nounPP, or nounPPAdv")->required();
    sub->add_option("--focus", focus_flag, "subject or intervening");
  }
  paths_enum->add_option("--out-file", out_file_flag, "Output file");

  std::string analyze_focus = "both";
  bool dump_flag = false;
  auto* analyze = app.add_subcommand("analyze", "Attribute the QoI over paths");
  analyze->add_option("--model", model_flag, "Model checkpoint");
  analyze->add_option("--data", data_files, "Task dataset file (repeatable)");
  analyze->add_option("--focus", analyze_focus, "subject, intervening, or both");
  analyze->add_flag("--dump", dump_flag, "Write per-sentence attributions as JSON lines");

  bool strict_span = false, pool_per_task = false;
  auto* compress = app.add_subcommand("compress", "Score gate-averaging schemes");
  compress->add_option("--model", model_flag, "Model checkpoint");
  compress->add_option("--data", data_files, "Task dataset file (repeatable)");
  compress->add_flag("--strict-span", strict_span, "Replace only strictly between nouns");
  compress->add_flag("--pool-per-task", pool_per_task, "Pool averages across conditions");

  int verify_k = 0, verify_sentences = 0;
  uint64_t verify_seed = 17;
  auto* verify = app.add_subcommand("verify", "Run the property self-checks");
  verify->add_option("--model", model_flag, "Model checkpoint");
  verify->add_option("--k", verify_k, "Riemann steps for the checks");
  verify->add_option("--sentences", verify_sentences, "Sentences per task");
  verify->add_option("--seed", verify_seed, "Sentence sampling seed");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Re-render reports from CSV artifacts");
  report->add_option("dir", report_dir, "Artifact directory");

  for (auto* sub : app.get_subcommands({}))
    sub->fallthrough();
  paths_count->fallthrough();
  paths_enum->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const Run run = resolve_run(config_file, overrides, out_flag, threads_flag);
    if (*gen_corpus) return cmd_gen_corpus(run);
    if (*gen_tasks) return cmd_gen_tasks(run, task_names, task_count);
    if (*train) return cmd_train(run, corpus_flag);
    if (*eval_na) return cmd_eval_na(run, model_flag, data_files);
    if (*paths_count) return cmd_paths_count(task_flag, focus_flag);
    if (*paths_enum) return cmd_paths_enumerate(run, task_flag, focus_flag, out_file_flag);
    if (*analyze) return cmd_analyze(run, model_flag, data_files, analyze_focus, dump_flag);
    if (*compress) return cmd_compress(run, model_flag, data_files, strict_span, pool_per_task);
    if (*verify) return cmd_verify(run, model_flag, verify_k, verify_sentences, verify_seed);
    if (*report) return cmd_report(run, report_dir);
  } catch (const CliError& e) {
    std::fprintf(stderr, "ipaths: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ipaths: %s\n", e.what());
    return 1;
  }
  return 0;
}
