#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ipaths.h"

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() : dir("capi_workspace") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

int count_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

void collect_line(const char* line, void* user) {
  static_cast<std::vector<std::string>*>(user)->push_back(line);
}

struct LexiconHandle {
  ipaths_lexicon* ptr = nullptr;
  LexiconHandle() {
    ipaths_lexicon_params p;
    ipaths_lexicon_params_init(&p);
    REQUIRE(ipaths_lexicon_build(&p, &ptr) == IPATHS_OK);
  }
  ~LexiconHandle() { ipaths_lexicon_free(ptr); }
};

// A deliberately unambitious model: one epoch over a small corpus with the
// accuracy gates disabled, just to have a real checkpoint to exercise.
struct ModelHandle {
  ipaths_model* ptr = nullptr;
  explicit ModelHandle(const Workspace& ws, const LexiconHandle& lex) {
    const std::string corpus = ws.file("corpus.txt");
    REQUIRE(ipaths_corpus_generate(lex.ptr, 120, 3, corpus.c_str()) == IPATHS_OK);
    ipaths_train_params p;
    ipaths_train_params_init(&p);
    p.embedding_dim = 8;
    p.hidden_size = 12;
    p.epochs = 1;
    p.batch_size = 16;
    p.dev_count = 8;
    p.simple_gate = 0.0;
    p.nounpp_gate = 0.0;
    REQUIRE(ipaths_train(lex.ptr, corpus.c_str(), &p, nullptr, nullptr, &ptr) ==
            IPATHS_OK);
  }
  ~ModelHandle() { ipaths_model_free(ptr); }
};

}  // namespace

TEST_CASE("version and status strings are stable") {
  CHECK(std::string(ipaths_version()) == "0.1.0");
  CHECK(std::string(ipaths_status_string(IPATHS_OK)) == "ok");
  CHECK(std::string(ipaths_status_string(IPATHS_ERR_TRAINING)) == "training failed");
  CHECK(ipaths_status_string(static_cast<ipaths_status>(99)) != nullptr);
}

TEST_CASE("null arguments are rejected up front") {
  CHECK(ipaths_lexicon_build(nullptr, nullptr) == IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(ipaths_config_load(nullptr, nullptr) == IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(ipaths_report(nullptr) == IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ipaths_last_error()) != "");
  CHECK(ipaths_lexicon_size(nullptr) == -1);
  CHECK(ipaths_dataset_size(nullptr) == -1);
}

TEST_CASE("config objects expose keys, hashes, and files") {
  Workspace ws;
  ipaths_config* cfg = nullptr;
  REQUIRE(ipaths_config_default(&cfg) == IPATHS_OK);

  char buf[256];
  REQUIRE(ipaths_config_get(cfg, "train.epochs", buf, sizeof(buf)) == IPATHS_OK);
  CHECK(std::string(buf) == "20");

  char hash_before[64], hash_after[64];
  REQUIRE(ipaths_config_hash(cfg, hash_before, sizeof(hash_before)) == IPATHS_OK);
  CHECK(std::strlen(hash_before) == 16);

  REQUIRE(ipaths_config_set(cfg, "train.epochs", "3") == IPATHS_OK);
  REQUIRE(ipaths_config_get(cfg, "train.epochs", buf, sizeof(buf)) == IPATHS_OK);
  CHECK(std::string(buf) == "3");
  REQUIRE(ipaths_config_hash(cfg, hash_after, sizeof(hash_after)) == IPATHS_OK);
  CHECK(std::string(hash_before) != hash_after);

  CHECK(ipaths_config_set(cfg, "train.mystery", "1") == IPATHS_ERR_PARSE);
  CHECK(std::string(ipaths_last_error()).find("train.mystery") != std::string::npos);
  CHECK(ipaths_config_get(cfg, "train.epochs", buf, 1) == IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(ipaths_config_hash(cfg, buf, 16) == IPATHS_ERR_INVALID_ARGUMENT);

  const std::string path = ws.file("run.ini");
  REQUIRE(ipaths_config_save(cfg, path.c_str()) == IPATHS_OK);
  ipaths_config* back = nullptr;
  REQUIRE(ipaths_config_load(path.c_str(), &back) == IPATHS_OK);
  REQUIRE(ipaths_config_get(back, "train.epochs", buf, sizeof(buf)) == IPATHS_OK);
  CHECK(std::string(buf) == "3");
  char hash_back[64];
  REQUIRE(ipaths_config_hash(back, hash_back, sizeof(hash_back)) == IPATHS_OK);
  CHECK(std::string(hash_back) == hash_after);

  ipaths_config_free(back);
  ipaths_config_free(cfg);
}

TEST_CASE("lexicon handles build, persist, and validate") {
  Workspace ws;
  LexiconHandle lex;
  CHECK(ipaths_lexicon_size(lex.ptr) == 113);

  const std::string path = ws.file("lexicon.json");
  REQUIRE(ipaths_lexicon_save(lex.ptr, "feed", path.c_str()) == IPATHS_OK);
  ipaths_lexicon* back = nullptr;
  REQUIRE(ipaths_lexicon_load(path.c_str(), &back) == IPATHS_OK);
  CHECK(ipaths_lexicon_size(back) == 113);
  ipaths_lexicon_free(back);

  ipaths_lexicon_params bad;
  ipaths_lexicon_params_init(&bad);
  bad.noun_pairs = 0;
  ipaths_lexicon* none = nullptr;
  CHECK(ipaths_lexicon_build(&bad, &none) == IPATHS_ERR_INVALID_ARGUMENT);

  CHECK(ipaths_lexicon_load(ws.file("missing.json").c_str(), &back) == IPATHS_ERR_IO);
}

TEST_CASE("datasets generate, load, and report their size") {
  Workspace ws;
  LexiconHandle lex;
  const std::string path = ws.file("tasks.json");
  REQUIRE(ipaths_tasks_generate(lex.ptr, "nounPP", "PS", 9, 5, path.c_str()) ==
          IPATHS_OK);
  ipaths_dataset* data = nullptr;
  REQUIRE(ipaths_dataset_load(path.c_str(), &data) == IPATHS_OK);
  CHECK(ipaths_dataset_size(data) == 9);
  ipaths_dataset_free(data);

  CHECK(ipaths_tasks_generate(lex.ptr, "nounPP", "S", 4, 5, path.c_str()) ==
        IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(ipaths_tasks_generate(lex.ptr, "sonnet", "S", 4, 5, path.c_str()) ==
        IPATHS_ERR_INVALID_ARGUMENT);
  CHECK(ipaths_dataset_load(ws.file("absent.json").c_str(), &data) == IPATHS_ERR_IO);
}

TEST_CASE("training produces a model that persists and scores") {
  Workspace ws;
  LexiconHandle lex;
  ModelHandle model(ws, lex);

  const std::string ckpt = ws.file("model.json");
  REQUIRE(ipaths_model_save(model.ptr, nullptr, ckpt.c_str()) == IPATHS_OK);
  ipaths_model* back = nullptr;
  REQUIRE(ipaths_model_load(ckpt.c_str(), &back) == IPATHS_OK);

  const std::string tasks = ws.file("tasks.json");
  REQUIRE(ipaths_tasks_generate(lex.ptr, "Simple", "S", 20, 9, tasks.c_str()) ==
          IPATHS_OK);
  ipaths_dataset* data = nullptr;
  REQUIRE(ipaths_dataset_load(tasks.c_str(), &data) == IPATHS_OK);

  double acc_trained = -1.0, acc_loaded = -1.0;
  REQUIRE(ipaths_na_accuracy(model.ptr, data, &acc_trained) == IPATHS_OK);
  REQUIRE(ipaths_na_accuracy(back, data, &acc_loaded) == IPATHS_OK);
  CHECK(acc_trained == acc_loaded);
  CHECK(acc_trained >= 0.0);
  CHECK(acc_trained <= 1.0);

  ipaths_dataset_free(data);
  ipaths_model_free(back);

  // An unreachable gate fails loudly with a training status.
  ipaths_train_params p;
  ipaths_train_params_init(&p);
  p.embedding_dim = 8;
  p.hidden_size = 12;
  p.epochs = 1;
  p.dev_count = 8;
  p.simple_gate = 1.01;
  ipaths_model* doomed = nullptr;
  CHECK(ipaths_train(lex.ptr, ws.file("corpus.txt").c_str(), &p, nullptr, nullptr,
                     &doomed) == IPATHS_ERR_TRAINING);
}

TEST_CASE("path counts and dumps match the fixed templates") {
  Workspace ws;
  int64_t n = 0;
  REQUIRE(ipaths_path_count("Simple", "subject", &n) == IPATHS_OK);
  CHECK(n == 16);
  REQUIRE(ipaths_path_count("nounPP", "subject", &n) == IPATHS_OK);
  CHECK(n == 6946);
  REQUIRE(ipaths_path_count("nounPPAdv", "subject", &n) == IPATHS_OK);
  CHECK(n == 41561);
  REQUIRE(ipaths_path_count("nounPP", "intervening", &n) == IPATHS_OK);
  CHECK(n == 16);
  CHECK(ipaths_path_count("Simple", "intervening", &n) == IPATHS_ERR_INVALID_ARGUMENT);

  const std::string dump = ws.file("paths.jsonl");
  REQUIRE(ipaths_paths_dump("Simple", "subject", "deadbeef", dump.c_str()) == IPATHS_OK);
  CHECK(count_lines(dump) == 17);  // meta line + one line per path
  std::ifstream in(dump);
  std::string first;
  std::getline(in, first);
  CHECK(first.find("deadbeef") != std::string::npos);
}

TEST_CASE("analysis and compression emit their report trees") {
  Workspace ws;
  LexiconHandle lex;
  ModelHandle model(ws, lex);

  const std::string simple = ws.file("simple_S.json");
  const std::string nounpp = ws.file("nounpp_SP.json");
  REQUIRE(ipaths_tasks_generate(lex.ptr, "Simple", "S", 3, 21, simple.c_str()) ==
          IPATHS_OK);
  REQUIRE(ipaths_tasks_generate(lex.ptr, "nounPP", "SP", 3, 22, nounpp.c_str()) ==
          IPATHS_OK);
  const char* files[] = {simple.c_str(), nounpp.c_str()};

  ipaths_analyze_params ap;
  ipaths_analyze_params_init(&ap);
  ap.k_steps = 4;
  ap.config_hash = "cafe";
  const std::string out_dir = ws.file("analysis");
  REQUIRE(ipaths_analyze(model.ptr, lex.ptr, files, 2, &ap, out_dir.c_str()) ==
          IPATHS_OK);
  // Two subject cells plus the intervening cell of the PP task.
  CHECK(count_lines(out_dir + "/summary.csv") == 5);
  CHECK(fs::exists(out_dir + "/report.md"));
  CHECK(fs::exists(out_dir + "/paths_nounPP_SP_intervening.svg"));

  // Rebuilding the markdown from the CSVs is idempotent.
  std::ifstream before(out_dir + "/report.md");
  std::string report((std::istreambuf_iterator<char>(before)),
                     std::istreambuf_iterator<char>());
  REQUIRE(ipaths_report(out_dir.c_str()) == IPATHS_OK);
  std::ifstream after(out_dir + "/report.md");
  std::string rebuilt((std::istreambuf_iterator<char>(after)),
                      std::istreambuf_iterator<char>());
  CHECK(report == rebuilt);

  // Compression over all four conditions of one task.
  std::vector<std::string> cond_files;
  const char* conds[] = {"SS", "SP", "PS", "PP"};
  std::vector<const char*> ptrs;
  for (int i = 0; i < 4; ++i) {
    cond_files.push_back(ws.file(std::string("comp_") + conds[i] + ".json"));
    REQUIRE(ipaths_tasks_generate(lex.ptr, "nounPP", conds[i], 4, 30 + i,
                                  cond_files.back().c_str()) == IPATHS_OK);
  }
  for (const auto& f : cond_files) ptrs.push_back(f.c_str());

  ipaths_compress_params cp;
  ipaths_compress_params_init(&cp);
  cp.config_hash = "cafe";
  const std::string comp_dir = ws.file("compression");
  REQUIRE(ipaths_compress(model.ptr, lex.ptr, ptrs.data(), 4, &cp,
                          comp_dir.c_str()) == IPATHS_OK);
  CHECK(count_lines(comp_dir + "/compression.csv") == 7);  // meta+header+4+mean
  CHECK(fs::exists(comp_dir + "/compression.md"));

  CHECK(ipaths_compress(model.ptr, lex.ptr, ptrs.data(), 0, &cp,
                        comp_dir.c_str()) == IPATHS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("the self-check suite runs through the c surface") {
  Workspace ws;
  LexiconHandle lex;
  ModelHandle model(ws, lex);

  std::vector<std::string> lines;
  int32_t failures = -1;
  REQUIRE(ipaths_verify(model.ptr, lex.ptr, 10, 1, 17, collect_line, &lines,
                        &failures) == IPATHS_OK);
  CHECK(failures == 0);
  CHECK(lines.size() >= 10);
  for (const auto& line : lines) CHECK(line.rfind("ok   ", 0) == 0);
}

TEST_CASE("the self checks hold for an untrained model too") {
  LexiconHandle lex;
  ipaths_model* fresh = nullptr;
  REQUIRE(ipaths_model_init(lex.ptr, 8, 12, 51, &fresh) == IPATHS_OK);
  int32_t failures = -1;
  REQUIRE(ipaths_verify(fresh, lex.ptr, 10, 1, 23, nullptr, nullptr, &failures) ==
          IPATHS_OK);
  CHECK(failures == 0);

  ipaths_model* bad = nullptr;
  CHECK(ipaths_model_init(lex.ptr, 0, 12, 51, &bad) == IPATHS_ERR_INVALID_ARGUMENT);
  ipaths_model_free(fresh);
}
