#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ipaths {

using TokenId = std::int32_t;

inline constexpr const char* kToolVersion = "0.1.0";

// Grammatical number of a noun or verb form.
enum class Number : std::uint8_t { Singular, Plural };

inline Number opposite(Number n) {
  return n == Number::Singular ? Number::Plural : Number::Singular;
}

// Agreement task shapes. Simple is [Det N V]; NounPP inserts a prepositional
// phrase between subject and verb; NounPPAdv additionally inserts an adverb
// before the verb.
enum class TaskKind : std::uint8_t { Simple, NounPP, NounPPAdv };

// Number condition: one letter per noun, subject first.
enum class Condition : std::uint8_t { S, P, SS, SP, PS, PP };

const char* to_string(TaskKind k);
const char* to_string(Condition c);
std::optional<TaskKind> task_from_string(std::string_view s);
std::optional<Condition> condition_from_string(std::string_view s);

// Simple takes one-letter conditions, the PP tasks two-letter ones.
bool condition_matches_task(TaskKind k, Condition c);
std::vector<Condition> conditions_for(TaskKind k);

Number subject_number(Condition c);
std::optional<Number> intervening_number(Condition c);

// Which noun's number the analysis varies.
enum class Focus : std::uint8_t { Subject, Intervening };

const char* to_string(Focus f);
std::optional<Focus> focus_from_string(std::string_view s);

// One evaluation sentence. Token positions are 0-based indices into `tokens`
// (no begin-of-sentence marker; the model prepends one when consuming).
struct TaskInstance {
  std::vector<TokenId> tokens;
  int t_sub = 0;
  std::optional<int> t_int;
  int t_verb = 0;
  Condition condition = Condition::S;
  TokenId verb_correct = 0;
  TokenId verb_wrong = 0;
  TaskKind task = TaskKind::Simple;
};

// Provenance stamped into generated report artifacts.
struct FileMeta {
  std::string tool_version = kToolVersion;
  std::string config_hash = "none";
};

}  // namespace ipaths
