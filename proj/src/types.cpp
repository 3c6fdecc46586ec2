#include "ipaths/types.hpp"

#include <cctype>

namespace ipaths {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Simple: return "Simple";
    case TaskKind::NounPP: return "nounPP";
    case TaskKind::NounPPAdv: return "nounPPAdv";
  }
  return "?";
}

const char* to_string(Condition c) {
  switch (c) {
    case Condition::S: return "S";
    case Condition::P: return "P";
    case Condition::SS: return "SS";
    case Condition::SP: return "SP";
    case Condition::PS: return "PS";
    case Condition::PP: return "PP";
  }
  return "?";
}

const char* to_string(Focus f) {
  return f == Focus::Subject ? "subject" : "intervening";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<TaskKind> task_from_string(std::string_view s) {
  const std::string l = lower(s);
  if (l == "simple") return TaskKind::Simple;
  if (l == "nounpp") return TaskKind::NounPP;
  if (l == "nounppadv") return TaskKind::NounPPAdv;
  return std::nullopt;
}

std::optional<Condition> condition_from_string(std::string_view s) {
  if (s == "S") return Condition::S;
  if (s == "P") return Condition::P;
  if (s == "SS") return Condition::SS;
  if (s == "SP") return Condition::SP;
  if (s == "PS") return Condition::PS;
  if (s == "PP") return Condition::PP;
  return std::nullopt;
}

std::optional<Focus> focus_from_string(std::string_view s) {
  const std::string l = lower(s);
  if (l == "subject") return Focus::Subject;
  if (l == "intervening") return Focus::Intervening;
  return std::nullopt;
}

bool condition_matches_task(TaskKind k, Condition c) {
  const bool two = c != Condition::S && c != Condition::P;
  return (k == TaskKind::Simple) ? !two : two;
}

std::vector<Condition> conditions_for(TaskKind k) {
  if (k == TaskKind::Simple) return {Condition::S, Condition::P};
  return {Condition::SS, Condition::SP, Condition::PS, Condition::PP};
}

Number subject_number(Condition c) {
  switch (c) {
    case Condition::S:
    case Condition::SS:
    case Condition::SP:
      return Number::Singular;
    default:
      return Number::Plural;
  }
}

std::optional<Number> intervening_number(Condition c) {
  switch (c) {
    case Condition::SS:
    case Condition::PS:
      return Number::Singular;
    case Condition::SP:
    case Condition::PP:
      return Number::Plural;
    default:
      return std::nullopt;
  }
}

}  // namespace ipaths
