#include "ipaths/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ipaths {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty())
    throw std::runtime_error("config key " + key + " needs an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const long long v = parse_int(key, value);
  if (v < 0) throw std::runtime_error("config key " + key + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty())
    throw std::runtime_error("config key " + key + " needs a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::runtime_error("config key " + key + " needs true/false, got '" + value + "'");
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[lexicon]\n"
      << "determiners = " << c.lexicon.determiners << "\n"
      << "noun_pairs = " << c.lexicon.noun_pairs << "\n"
      << "verb_pairs = " << c.lexicon.verb_pairs << "\n"
      << "prepositions = " << c.lexicon.prepositions << "\n"
      << "adverbs = " << c.lexicon.adverbs << "\n"
      << "fillers = " << c.lexicon.fillers << "\n"
      << "seed = " << c.lexicon_seed << "\n"
      << "\n[corpus]\n"
      << "sentences = " << c.corpus_sentences << "\n"
      << "seed = " << c.corpus_seed << "\n"
      << "\n[tasks]\n"
      << "count = " << c.task_count << "\n"
      << "seed = " << c.task_seed << "\n"
      << "\n[train]\n"
      << "embedding_dim = " << c.train.embedding_dim << "\n"
      << "hidden_size = " << c.train.hidden_size << "\n"
      << "epochs = " << c.train.epochs << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "learning_rate = " << fmt_double(c.train.learning_rate) << "\n"
      << "seed = " << c.train.seed << "\n"
      << "dev_count = " << c.train.dev_count << "\n"
      << "simple_gate = " << fmt_double(c.train.simple_gate) << "\n"
      << "nounpp_gate = " << fmt_double(c.train.nounpp_gate) << "\n"
      << "gate_check_interval = " << c.train.gate_check_interval << "\n"
      << "\n[analyze]\n"
      << "k_steps = " << c.k_steps << "\n"
      << "mc_samples = " << c.mc_samples << "\n"
      << "metrics_seed = " << c.metrics_seed << "\n"
      << "dump_attributions = " << (c.dump_attributions ? "true" : "false") << "\n"
      << "max_sentences = " << c.analyze_sentences << "\n"
      << "\n[compress]\n"
      << "strict_span = " << (c.strict_span ? "true" : "false") << "\n"
      << "pool_per_task = " << (c.pool_per_task ? "true" : "false") << "\n"
      << "\n[run]\n"
      << "out_dir = " << c.out_dir << "\n"
      << "threads = " << c.threads << "\n";
  return out.str();
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setter_table() {
  static const std::map<std::string, Setter> setters = {
      {"lexicon.determiners", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.determiners = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.noun_pairs", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.noun_pairs = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.verb_pairs", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.verb_pairs = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.prepositions", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.prepositions = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.adverbs", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.adverbs = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.fillers", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon.fillers = static_cast<int>(parse_int(k, v)); }},
      {"lexicon.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.lexicon_seed = parse_u64(k, v); }},
      {"corpus.sentences", [](RunConfig& c, const std::string& k, const std::string& v) { c.corpus_sentences = parse_int(k, v); }},
      {"corpus.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.corpus_seed = parse_u64(k, v); }},
      {"tasks.count", [](RunConfig& c, const std::string& k, const std::string& v) { c.task_count = static_cast<int>(parse_int(k, v)); }},
      {"tasks.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.task_seed = parse_u64(k, v); }},
      {"train.embedding_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.embedding_dim = static_cast<int>(parse_int(k, v)); }},
      {"train.hidden_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.hidden_size = static_cast<int>(parse_int(k, v)); }},
      {"train.epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = static_cast<int>(parse_int(k, v)); }},
      {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = static_cast<int>(parse_int(k, v)); }},
      {"train.learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.learning_rate = parse_double(k, v); }},
      {"train.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = parse_u64(k, v); }},
      {"train.dev_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.dev_count = static_cast<int>(parse_int(k, v)); }},
      {"train.simple_gate", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.simple_gate = parse_double(k, v); }},
      {"train.nounpp_gate", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.nounpp_gate = parse_double(k, v); }},
      {"train.gate_check_interval", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.gate_check_interval = static_cast<int>(parse_int(k, v)); }},
      {"analyze.k_steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.k_steps = static_cast<int>(parse_int(k, v)); }},
      {"analyze.mc_samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.mc_samples = parse_int(k, v); }},
      {"analyze.metrics_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.metrics_seed = parse_u64(k, v); }},
      {"analyze.dump_attributions", [](RunConfig& c, const std::string& k, const std::string& v) { c.dump_attributions = parse_bool(k, v); }},
      {"analyze.max_sentences", [](RunConfig& c, const std::string& k, const std::string& v) { c.analyze_sentences = static_cast<int>(parse_int(k, v)); }},
      {"compress.strict_span", [](RunConfig& c, const std::string& k, const std::string& v) { c.strict_span = parse_bool(k, v); }},
      {"compress.pool_per_task", [](RunConfig& c, const std::string& k, const std::string& v) { c.pool_per_task = parse_bool(k, v); }},
      {"run.out_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"run.threads", [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = static_cast<int>(parse_int(k, v)); }},
  };
  return setters;
}

}  // namespace

void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value) {
  const auto it = setter_table().find(key);
  if (it == setter_table().end())
    throw std::runtime_error("unknown config key '" + key + "'");
  it->second(c, key, value);
}

std::string get_config_kv(const RunConfig& c, const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos)
    throw std::runtime_error("unknown config key '" + key + "'");
  const std::string want_section = key.substr(0, dot);
  const std::string want_key = key.substr(dot + 1);

  std::istringstream in(serialize_config(c));
  std::string line, section;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (section == want_section && trim(t.substr(0, eq)) == want_key)
      return trim(t.substr(eq + 1));
  }
  throw std::runtime_error("unknown config key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = section + "." + trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    apply_config_kv(c, key, value);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  const std::uint64_t h = fnv1a64(serialize_config(c));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ipaths
