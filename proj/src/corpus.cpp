#include "ipaths/corpus.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ipaths {

int template_length(TaskKind task) {
  switch (task) {
    case TaskKind::Simple: return 3;
    case TaskKind::NounPP: return 6;
    case TaskKind::NounPPAdv: return 7;
  }
  return 0;
}

int template_t_sub(TaskKind) { return 1; }

int template_t_int(TaskKind task) { return task == TaskKind::Simple ? -1 : 4; }

int template_t_verb(TaskKind task) {
  switch (task) {
    case TaskKind::Simple: return 2;
    case TaskKind::NounPP: return 5;
    case TaskKind::NounPPAdv: return 6;
  }
  return 0;
}

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

size_t pick_index(std::mt19937_64& rng, size_t n) {
  std::uniform_int_distribution<size_t> d(0, n - 1);
  return d(rng);
}

TokenId noun_form(const Lexicon& lex, size_t pair, Number n) {
  const auto& p = lex.noun_pairs[pair];
  return n == Number::Singular ? p.first : p.second;
}

TokenId verb_form(const Lexicon& lex, size_t pair, Number n) {
  const auto& p = lex.verb_pairs[pair];
  return n == Number::Singular ? p.first : p.second;
}

// Core template expansion shared by corpus and task generation. The
// intervening noun pair is always distinct from the subject's.
std::vector<TokenId> expand_template(const Lexicon& lex, std::mt19937_64& rng,
                                     TaskKind task, Number subj, Number inter) {
  std::vector<TokenId> toks;
  const size_t subj_pair = pick_index(rng, lex.noun_pairs.size());
  toks.push_back(pick(rng, lex.determiners));
  toks.push_back(noun_form(lex, subj_pair, subj));
  if (task != TaskKind::Simple) {
    toks.push_back(pick(rng, lex.prepositions));
    toks.push_back(pick(rng, lex.determiners));
    size_t int_pair = pick_index(rng, lex.noun_pairs.size() - 1);
    if (int_pair >= subj_pair) ++int_pair;
    toks.push_back(noun_form(lex, int_pair, inter));
  }
  if (task == TaskKind::NounPPAdv) toks.push_back(pick(rng, lex.adverbs));
  toks.push_back(verb_form(lex, pick_index(rng, lex.verb_pairs.size()), subj));
  return toks;
}

}  // namespace

std::vector<std::vector<TokenId>> generate_training_corpus(const Lexicon& lex,
                                                           std::int64_t num_sentences,
                                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution number(0.5);

  std::vector<std::vector<TokenId>> corpus;
  corpus.reserve(static_cast<size_t>(num_sentences));
  for (std::int64_t i = 0; i < num_sentences; ++i) {
    const double r = unit(rng);
    const TaskKind task = r < 0.35 ? TaskKind::Simple
                          : r < 0.70 ? TaskKind::NounPP
                                     : TaskKind::NounPPAdv;
    const Number subj = number(rng) ? Number::Plural : Number::Singular;
    const Number inter = number(rng) ? Number::Plural : Number::Singular;
    std::vector<TokenId> toks = expand_template(lex, rng, task, subj, inter);
    // Occasional filler tail so these tokens are not frozen at their random
    // embeddings; fillers never appear in evaluation data.
    if (!lex.fillers.empty() && unit(rng) < 0.25) {
      const int extra = 1 + (unit(rng) < 0.4 ? 1 : 0);
      for (int e = 0; e < extra; ++e) toks.push_back(pick(rng, lex.fillers));
    }
    corpus.push_back(std::move(toks));
  }
  return corpus;
}

void write_corpus(const std::string& path, const Lexicon& lex,
                  const std::vector<std::vector<TokenId>>& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& sent : corpus) {
    for (size_t i = 0; i < sent.size(); ++i) {
      if (i) out << ' ';
      out << lex.token(sent[i]);
    }
    out << '\n';
  }
}

std::vector<std::vector<TokenId>> read_corpus(const std::string& path, const Lexicon& lex) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<TokenId>> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<TokenId> sent;
    std::string tok;
    while (ls >> tok) {
      const TokenId id = lex.id(tok);
      if (lex.token(id) != tok)
        throw std::runtime_error("token not in lexicon: " + tok);
      sent.push_back(id);
    }
    corpus.push_back(std::move(sent));
  }
  return corpus;
}

std::vector<TaskInstance> generate_task_dataset(const Lexicon& lex, TaskKind task,
                                                Condition condition, int count,
                                                std::uint64_t seed) {
  if (!condition_matches_task(task, condition))
    throw std::invalid_argument("condition does not fit task");
  std::mt19937_64 rng(seed);

  std::vector<TaskInstance> out;
  out.reserve(static_cast<size_t>(count));
  const Number subj = subject_number(condition);
  const Number inter = intervening_number(condition).value_or(Number::Singular);
  for (int i = 0; i < count; ++i) {
    TaskInstance inst;
    inst.task = task;
    inst.condition = condition;
    inst.tokens = expand_template(lex, rng, task, subj, inter);
    inst.t_sub = template_t_sub(task);
    if (task != TaskKind::Simple) inst.t_int = template_t_int(task);
    inst.t_verb = template_t_verb(task);
    inst.verb_correct = inst.tokens[static_cast<size_t>(inst.t_verb)];
    inst.verb_wrong = lex.number_swap(inst.verb_correct);
    out.push_back(std::move(inst));
  }
  return out;
}

void save_task_dataset(const std::string& path, const std::vector<TaskInstance>& data) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& inst : data) {
    nlohmann::json j;
    j["tokens"] = inst.tokens;
    j["t_sub"] = inst.t_sub;
    if (inst.t_int) j["t_int"] = *inst.t_int; else j["t_int"] = nullptr;
    j["t_verb"] = inst.t_verb;
    j["condition"] = to_string(inst.condition);
    j["verb_correct"] = inst.verb_correct;
    j["verb_wrong"] = inst.verb_wrong;
    j["task"] = to_string(inst.task);
    arr.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << arr.dump(1) << "\n";
}

std::vector<TaskInstance> load_task_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json arr = nlohmann::json::parse(in);
  if (!arr.is_array()) throw std::runtime_error("task dataset must be a JSON array");

  std::vector<TaskInstance> out;
  out.reserve(arr.size());
  for (const auto& j : arr) {
    TaskInstance inst;
    inst.tokens = j.at("tokens").get<std::vector<TokenId>>();
    inst.t_sub = j.at("t_sub").get<int>();
    if (!j.at("t_int").is_null()) inst.t_int = j.at("t_int").get<int>();
    inst.t_verb = j.at("t_verb").get<int>();
    auto cond = condition_from_string(j.at("condition").get<std::string>());
    auto task = task_from_string(j.at("task").get<std::string>());
    if (!cond || !task) throw std::runtime_error("bad condition/task in " + path);
    inst.condition = *cond;
    inst.task = *task;
    inst.verb_correct = j.at("verb_correct").get<TokenId>();
    inst.verb_wrong = j.at("verb_wrong").get<TokenId>();
    if (inst.t_int && !(inst.t_sub < *inst.t_int && *inst.t_int < inst.t_verb))
      throw std::runtime_error("instance indices out of order in " + path);
    if (!(inst.t_sub < inst.t_verb) ||
        inst.t_verb >= static_cast<int>(inst.tokens.size()))
      throw std::runtime_error("instance indices out of order in " + path);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace ipaths
