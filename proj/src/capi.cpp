#include "ipaths.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ipaths/analyze.hpp"
#include "ipaths/compression.hpp"
#include "ipaths/config.hpp"
#include "ipaths/corpus.hpp"
#include "ipaths/graph.hpp"
#include "ipaths/lexicon.hpp"
#include "ipaths/model.hpp"
#include "ipaths/report.hpp"
#include "ipaths/train.hpp"
#include "ipaths/types.hpp"
#include "ipaths/verify.hpp"

struct ipaths_lexicon {
  ipaths::Lexicon impl;
};
struct ipaths_model {
  ipaths::LstmModel impl;
};
struct ipaths_dataset {
  std::vector<ipaths::TaskInstance> impl;
};
struct ipaths_config {
  ipaths::RunConfig impl;
};

namespace {

thread_local std::string g_last_error;

ipaths_status fail(ipaths_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

bool message_says_io(const std::string& m) {
  return m.rfind("cannot read", 0) == 0 || m.rfind("cannot write", 0) == 0;
}

template <typename Fn>
ipaths_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return IPATHS_OK;
  } catch (const std::invalid_argument& e) {
    return fail(IPATHS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const ipaths::TrainingError& e) {
    return fail(IPATHS_ERR_TRAINING, e.what());
  } catch (const ipaths::PathCapExceeded& e) {
    return fail(IPATHS_ERR_LIMIT, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(IPATHS_ERR_PARSE, e.what());
  } catch (const std::runtime_error& e) {
    return fail(message_says_io(e.what()) ? IPATHS_ERR_IO : IPATHS_ERR_PARSE, e.what());
  } catch (const std::exception& e) {
    return fail(IPATHS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IPATHS_ERR_INTERNAL, "unknown failure");
  }
}

ipaths_status require(bool ok, const char* what) {
  return ok ? IPATHS_OK : fail(IPATHS_ERR_INVALID_ARGUMENT, what);
}

ipaths::TaskKind parse_task(const char* task) {
  const auto t = task ? ipaths::task_from_string(task) : std::nullopt;
  if (!t) throw std::invalid_argument("unknown task name");
  return *t;
}

ipaths::Focus parse_focus(const char* focus) {
  const auto f = focus ? ipaths::focus_from_string(focus) : std::nullopt;
  if (!f) throw std::invalid_argument("unknown focus name");
  return *f;
}

int focus_pos(ipaths::TaskKind task, ipaths::Focus focus) {
  if (focus == ipaths::Focus::Subject) return ipaths::template_t_sub(task);
  const int t_int = ipaths::template_t_int(task);
  if (t_int < 0) throw std::invalid_argument("task has no intervening noun");
  return t_int;
}

ipaths::LogSink wrap_log(ipaths_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

// Datasets are stored one (task, condition) cell per file; the cell identity
// comes from the records themselves.
struct LoadedCell {
  ipaths::TaskKind task;
  ipaths::Condition condition;
  std::vector<ipaths::TaskInstance> data;
};

LoadedCell load_cell(const char* path) {
  if (!path) throw std::invalid_argument("dataset path is null");
  LoadedCell cell;
  cell.data = ipaths::load_task_dataset(path);
  if (cell.data.empty())
    throw std::invalid_argument(std::string("dataset is empty: ") + path);
  cell.task = cell.data.front().task;
  cell.condition = cell.data.front().condition;
  for (const auto& inst : cell.data)
    if (inst.task != cell.task || inst.condition != cell.condition)
      throw std::invalid_argument(std::string("dataset mixes cells: ") + path);
  return cell;
}

ipaths_status copy_out(const std::string& value, char* buf, int32_t buflen) {
  if (!buf || buflen <= static_cast<int32_t>(value.size()))
    return fail(IPATHS_ERR_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return IPATHS_OK;
}

// Checkpoints carry the vocabulary, so the begin-of-sentence id can be
// recovered without the lexicon handle.
ipaths::TokenId model_bos(const ipaths::LstmModel& m) {
  for (size_t i = 0; i < m.vocab.size(); ++i)
    if (m.vocab[i] == "<bos>") return static_cast<ipaths::TokenId>(i);
  throw std::invalid_argument("model vocabulary has no <bos> token");
}

}  // namespace

extern "C" {

const char* ipaths_version(void) { return ipaths::kToolVersion; }

const char* ipaths_status_string(ipaths_status s) {
  switch (s) {
    case IPATHS_OK: return "ok";
    case IPATHS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IPATHS_ERR_IO: return "i/o error";
    case IPATHS_ERR_PARSE: return "parse error";
    case IPATHS_ERR_TRAINING: return "training failed";
    case IPATHS_ERR_LIMIT: return "limit exceeded";
    case IPATHS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ipaths_last_error(void) { return g_last_error.c_str(); }

/* ---- config ---- */

ipaths_status ipaths_config_default(ipaths_config** out) {
  if (auto s = require(out != nullptr, "null out pointer")) return s;
  return guard([&] { *out = new ipaths_config{}; });
}

ipaths_status ipaths_config_load(const char* path, ipaths_config** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guard([&] { *out = new ipaths_config{ipaths::load_config(path)}; });
}

ipaths_status ipaths_config_set(ipaths_config* c, const char* key, const char* value) {
  if (auto s = require(c && key && value, "null argument")) return s;
  return guard([&] { ipaths::apply_config_kv(c->impl, key, value); });
}

ipaths_status ipaths_config_get(const ipaths_config* c, const char* key, char* buf,
                                int32_t buflen) {
  if (auto s = require(c && key, "null argument")) return s;
  std::string value;
  if (auto s = guard([&] { value = ipaths::get_config_kv(c->impl, key); })) return s;
  return copy_out(value, buf, buflen);
}

ipaths_status ipaths_config_hash(const ipaths_config* c, char* buf, int32_t buflen) {
  if (auto s = require(c != nullptr, "null config")) return s;
  std::string value;
  if (auto s = guard([&] { value = ipaths::config_hash(c->impl); })) return s;
  return copy_out(value, buf, buflen);
}

ipaths_status ipaths_config_save(const ipaths_config* c, const char* path) {
  if (auto s = require(c && path, "null argument")) return s;
  return guard([&] {
    ipaths::write_text_file(path, ipaths::serialize_config(c->impl));
  });
}

void ipaths_config_free(ipaths_config* c) { delete c; }

/* ---- lexicon ---- */

void ipaths_lexicon_params_init(ipaths_lexicon_params* p) {
  if (!p) return;
  const ipaths::LexiconConfig d;
  p->determiners = d.determiners;
  p->noun_pairs = d.noun_pairs;
  p->verb_pairs = d.verb_pairs;
  p->prepositions = d.prepositions;
  p->adverbs = d.adverbs;
  p->fillers = d.fillers;
  p->seed = 11;
}

ipaths_status ipaths_lexicon_build(const ipaths_lexicon_params* p, ipaths_lexicon** out) {
  if (auto s = require(p && out, "null argument")) return s;
  return guard([&] {
    ipaths::LexiconConfig cfg;
    cfg.determiners = p->determiners;
    cfg.noun_pairs = p->noun_pairs;
    cfg.verb_pairs = p->verb_pairs;
    cfg.prepositions = p->prepositions;
    cfg.adverbs = p->adverbs;
    cfg.fillers = p->fillers;
    *out = new ipaths_lexicon{ipaths::build_lexicon(cfg, p->seed)};
  });
}

ipaths_status ipaths_lexicon_save(const ipaths_lexicon* lex, const char* config_hash,
                                  const char* path) {
  if (auto s = require(lex && path, "null argument")) return s;
  return guard([&] {
    ipaths::FileMeta meta;
    if (config_hash) meta.config_hash = config_hash;
    ipaths::save_lexicon(lex->impl, path, meta);
  });
}

ipaths_status ipaths_lexicon_load(const char* path, ipaths_lexicon** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guard([&] { *out = new ipaths_lexicon{ipaths::load_lexicon(path)}; });
}

int32_t ipaths_lexicon_size(const ipaths_lexicon* lex) {
  return lex ? lex->impl.size() : -1;
}

void ipaths_lexicon_free(ipaths_lexicon* lex) { delete lex; }

/* ---- data generation ---- */

ipaths_status ipaths_corpus_generate(const ipaths_lexicon* lex, int64_t sentences,
                                     uint64_t seed, const char* path) {
  if (auto s = require(lex && path, "null argument")) return s;
  return guard([&] {
    const auto corpus = ipaths::generate_training_corpus(lex->impl, sentences, seed);
    ipaths::write_corpus(path, lex->impl, corpus);
  });
}

ipaths_status ipaths_tasks_generate(const ipaths_lexicon* lex, const char* task,
                                    const char* condition, int32_t count,
                                    uint64_t seed, const char* path) {
  if (auto s = require(lex && path, "null argument")) return s;
  return guard([&] {
    const auto kind = parse_task(task);
    const auto cond = condition ? ipaths::condition_from_string(condition) : std::nullopt;
    if (!cond) throw std::invalid_argument("unknown condition name");
    const auto data = ipaths::generate_task_dataset(lex->impl, kind, *cond, count, seed);
    ipaths::save_task_dataset(path, data);
  });
}

ipaths_status ipaths_dataset_load(const char* path, ipaths_dataset** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guard([&] {
    auto cell = load_cell(path);
    *out = new ipaths_dataset{std::move(cell.data)};
  });
}

int32_t ipaths_dataset_size(const ipaths_dataset* d) {
  return d ? static_cast<int32_t>(d->impl.size()) : -1;
}

void ipaths_dataset_free(ipaths_dataset* d) { delete d; }

/* ---- model ---- */

void ipaths_train_params_init(ipaths_train_params* p) {
  if (!p) return;
  const ipaths::TrainParams d;
  p->embedding_dim = d.embedding_dim;
  p->hidden_size = d.hidden_size;
  p->epochs = d.epochs;
  p->batch_size = d.batch_size;
  p->learning_rate = d.learning_rate;
  p->seed = d.seed;
  p->dev_count = d.dev_count;
  p->simple_gate = d.simple_gate;
  p->nounpp_gate = d.nounpp_gate;
}

ipaths_status ipaths_train(const ipaths_lexicon* lex, const char* corpus_path,
                           const ipaths_train_params* p, ipaths_log_fn log,
                           void* user, ipaths_model** out) {
  if (auto s = require(lex && corpus_path && p && out, "null argument")) return s;
  return guard([&] {
    const auto corpus = ipaths::read_corpus(corpus_path, lex->impl);
    ipaths::TrainParams tp;
    tp.embedding_dim = p->embedding_dim;
    tp.hidden_size = p->hidden_size;
    tp.epochs = p->epochs;
    tp.batch_size = p->batch_size;
    tp.learning_rate = p->learning_rate;
    tp.seed = p->seed;
    tp.dev_count = p->dev_count;
    tp.simple_gate = p->simple_gate;
    tp.nounpp_gate = p->nounpp_gate;
    *out = new ipaths_model{ipaths::train(lex->impl, corpus, tp, wrap_log(log, user))};
  });
}

ipaths_status ipaths_model_save(const ipaths_model* m, const char* config_hash,
                                const char* path) {
  if (auto s = require(m && path, "null argument")) return s;
  return guard([&] {
    ipaths::FileMeta meta;
    if (config_hash) meta.config_hash = config_hash;
    ipaths::save_checkpoint(m->impl, path, meta);
  });
}

ipaths_status ipaths_model_load(const char* path, ipaths_model** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guard([&] { *out = new ipaths_model{ipaths::load_checkpoint(path)}; });
}

ipaths_status ipaths_model_init(const ipaths_lexicon* lex, int32_t embedding_dim,
                                int32_t hidden_size, uint64_t seed,
                                ipaths_model** out) {
  if (auto s = require(lex && out, "null argument")) return s;
  if (auto s = require(embedding_dim > 0 && hidden_size > 0, "non-positive model size"))
    return s;
  return guard([&] {
    *out = new ipaths_model{ipaths::init_model(lex->impl.size(), embedding_dim,
                                               hidden_size, seed, lex->impl.vocab())};
  });
}

void ipaths_model_free(ipaths_model* m) { delete m; }

ipaths_status ipaths_na_accuracy(const ipaths_model* m, const ipaths_dataset* d,
                                 double* out) {
  if (auto s = require(m && d && out, "null argument")) return s;
  return guard([&] {
    *out = ipaths::na_accuracy(m->impl, model_bos(m->impl), d->impl);
  });
}

/* ---- path graph ---- */

ipaths_status ipaths_path_count(const char* task, const char* focus, int64_t* out) {
  if (auto s = require(out != nullptr, "null out pointer")) return s;
  return guard([&] {
    const auto kind = parse_task(task);
    const auto f = parse_focus(focus);
    const auto g = ipaths::build_graph_for_positions(focus_pos(kind, f),
                                                     ipaths::template_t_verb(kind));
    *out = static_cast<int64_t>(ipaths::count_paths(g));
  });
}

ipaths_status ipaths_paths_dump(const char* task, const char* focus,
                                const char* config_hash, const char* out_path) {
  if (auto s = require(out_path != nullptr, "null output path")) return s;
  return guard([&] {
    const auto kind = parse_task(task);
    const auto f = parse_focus(focus);
    const auto g = ipaths::build_graph_for_positions(focus_pos(kind, f),
                                                     ipaths::template_t_verb(kind));
    const auto paths = ipaths::enumerate_paths(g);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error(std::string("cannot write ") + out_path);
    ipaths::FileMeta meta;
    if (config_hash) meta.config_hash = config_hash;
    ipaths::dump_paths_jsonl(g, paths, out, meta);
  });
}

/* ---- analysis ---- */

void ipaths_analyze_params_init(ipaths_analyze_params* p) {
  if (!p) return;
  p->focus = "both";
  p->k_steps = 50;
  p->max_sentences = 0;
  p->mc_samples = 100000;
  p->metrics_seed = 13;
  p->threads = 1;
  p->dump_attributions = 0;
  p->config_hash = nullptr;
}

ipaths_status ipaths_analyze(const ipaths_model* m, const ipaths_lexicon* lex,
                             const char* const* dataset_paths, int32_t num_datasets,
                             const ipaths_analyze_params* p, const char* out_dir) {
  if (auto s = require(m && lex && dataset_paths && p && out_dir, "null argument"))
    return s;
  if (auto s = require(num_datasets > 0, "no datasets given")) return s;
  return guard([&] {
    std::vector<LoadedCell> cells;
    cells.reserve(static_cast<size_t>(num_datasets));
    for (int32_t i = 0; i < num_datasets; ++i)
      cells.push_back(load_cell(dataset_paths[i]));

    const std::string focus = p->focus ? p->focus : "both";
    std::vector<ipaths::AnalyzeInput> inputs;
    auto add = [&](const LoadedCell& cell, ipaths::Focus f) {
      ipaths::AnalyzeInput input;
      input.task = cell.task;
      input.condition = cell.condition;
      input.focus = f;
      input.data = cell.data;
      inputs.push_back(std::move(input));
    };
    if (focus == "subject" || focus == "both")
      for (const auto& cell : cells) add(cell, ipaths::Focus::Subject);
    if (focus == "intervening" || focus == "both")
      for (const auto& cell : cells)
        if (ipaths::template_t_int(cell.task) >= 0 || focus == "intervening")
          add(cell, ipaths::Focus::Intervening);
    if (inputs.empty()) throw std::invalid_argument("focus selects no cells");

    ipaths::AnalyzeOptions opts;
    opts.k_steps = p->k_steps;
    opts.max_sentences = p->max_sentences;
    opts.mc_samples = p->mc_samples;
    opts.metrics_seed = p->metrics_seed;
    opts.threads = p->threads;

    ipaths::FileMeta meta;
    if (p->config_hash) meta.config_hash = p->config_hash;
    ipaths::analyze_to_dir(m->impl, lex->impl, inputs, opts, meta, out_dir,
                           p->dump_attributions != 0);
  });
}

/* ---- compression ---- */

void ipaths_compress_params_init(ipaths_compress_params* p) {
  if (!p) return;
  p->strict_span = 0;
  p->pool_per_task = 0;
  p->threads = 1;
  p->config_hash = nullptr;
}

ipaths_status ipaths_compress(const ipaths_model* m, const ipaths_lexicon* lex,
                              const char* const* dataset_paths, int32_t num_datasets,
                              const ipaths_compress_params* p, const char* out_dir) {
  if (auto s = require(m && lex && dataset_paths && p && out_dir, "null argument"))
    return s;
  if (auto s = require(num_datasets > 0, "no datasets given")) return s;
  return guard([&] {
    std::vector<ipaths::TaskDatasets> grouped;
    for (int32_t i = 0; i < num_datasets; ++i) {
      LoadedCell cell = load_cell(dataset_paths[i]);
      auto it = std::find_if(grouped.begin(), grouped.end(), [&](const auto& g) {
        return g.task == cell.task;
      });
      if (it == grouped.end()) {
        grouped.emplace_back();
        it = std::prev(grouped.end());
        it->task = cell.task;
      }
      for (const auto& [cond, data] : it->by_condition)
        if (cond == cell.condition)
          throw std::invalid_argument("duplicate (task, condition) dataset");
      it->by_condition.emplace_back(cell.condition, std::move(cell.data));
    }

    ipaths::CompressionOptions opts;
    opts.strict_span = p->strict_span != 0;
    opts.pool_per_task = p->pool_per_task != 0;
    opts.threads = p->threads;

    const auto rows =
        ipaths::run_schemes(m->impl, lex->impl.bos, grouped, opts);

    std::filesystem::create_directories(out_dir);
    ipaths::FileMeta meta;
    if (p->config_hash) meta.config_hash = p->config_hash;
    const std::string dir(out_dir);
    ipaths::write_compression_csv(dir + "/compression.csv", meta, rows);
    ipaths::write_text_file(dir + "/compression.md",
                            ipaths::render_compression_markdown(meta, rows));
  });
}

/* ---- self checks / reporting ---- */

ipaths_status ipaths_verify(const ipaths_model* m, const ipaths_lexicon* lex,
                            int32_t k_steps, int32_t sentences_per_task,
                            uint64_t seed, ipaths_log_fn log, void* user,
                            int32_t* failures) {
  if (auto s = require(m && lex && failures, "null argument")) return s;
  return guard([&] {
    ipaths::VerifyOptions opts;
    if (k_steps > 0) opts.k_steps = k_steps;
    if (sentences_per_task > 0) opts.sentences_per_task = sentences_per_task;
    opts.seed = seed;
    *failures = ipaths::run_verification(m->impl, lex->impl, opts, wrap_log(log, user));
  });
}

ipaths_status ipaths_report(const char* dir) {
  if (auto s = require(dir != nullptr, "null directory")) return s;
  return guard([&] { ipaths::rebuild_reports(dir); });
}

}  // extern "C"
