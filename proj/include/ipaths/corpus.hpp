#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipaths/lexicon.hpp"
#include "ipaths/types.hpp"

namespace ipaths {

// Training sentences from a probabilistic grammar mixing the three task
// templates with optional filler prefixes/suffixes and conjoined clauses.
// Subject and verb numbers always agree; an intervening noun's number is
// drawn independently and uniformly.
std::vector<std::vector<TokenId>> generate_training_corpus(const Lexicon& lex,
                                                           std::int64_t num_sentences,
                                                           std::uint64_t seed);

// One sentence per line, space-separated surface tokens, no BOS/EOS markers.
void write_corpus(const std::string& path, const Lexicon& lex,
                  const std::vector<std::vector<TokenId>>& corpus);
std::vector<std::vector<TokenId>> read_corpus(const std::string& path, const Lexicon& lex);

// Fixed templates: Simple [Det N V], NounPP [Det N Prep Det N V],
// NounPPAdv [Det N Prep Det N Adv V]. Noun/verb lemmas are sampled without
// replacement within a sentence. Throws std::invalid_argument when the
// condition arity does not match the task.
std::vector<TaskInstance> generate_task_dataset(const Lexicon& lex, TaskKind task,
                                                Condition condition, int count,
                                                std::uint64_t seed);

// JSON array of instance records.
void save_task_dataset(const std::string& path, const std::vector<TaskInstance>& data);
std::vector<TaskInstance> load_task_dataset(const std::string& path);

int template_length(TaskKind task);
int template_t_sub(TaskKind task);
int template_t_int(TaskKind task);   // -1 for Simple
int template_t_verb(TaskKind task);

}  // namespace ipaths
