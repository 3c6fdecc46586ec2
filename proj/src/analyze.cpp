#include "ipaths/analyze.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "ipaths/corpus.hpp"
#include "ipaths/parallel.hpp"

namespace ipaths {

namespace {

int focus_position(TaskKind task, Focus focus) {
  if (focus == Focus::Subject) return template_t_sub(task);
  const int t_int = template_t_int(task);
  if (t_int < 0)
    throw std::invalid_argument("task has no intervening noun to focus on");
  return t_int;
}

int find_path_index(const std::vector<Path>& paths, const Path& p) {
  for (size_t i = 0; i < paths.size(); ++i)
    if (paths[i].nodes == p.nodes) return static_cast<int>(i);
  throw std::logic_error("path missing from the canonical enumeration");
}

// Argmax with smallest-index tie break.
int argmax(const std::vector<double>& v, int skip = -1) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    if (i == skip) continue;
    if (best < 0 || v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

ConditionAnalysis analyze_condition(const LstmModel& m, const Lexicon& lex,
                                    TaskKind task, Condition cond,
                                    const std::vector<TaskInstance>& data,
                                    const AnalyzeOptions& opts,
                                    const std::string& dump_jsonl) {
  if (data.empty()) throw std::invalid_argument("no sentences to analyze");
  if (!condition_matches_task(task, cond))
    throw std::invalid_argument("condition arity does not match the task");
  for (const TaskInstance& inst : data)
    if (inst.task != task || inst.condition != cond)
      throw std::invalid_argument("dataset row does not match the requested cell");

  const int S = opts.max_sentences > 0
                    ? std::min<int>(opts.max_sentences, static_cast<int>(data.size()))
                    : static_cast<int>(data.size());

  const int focus_pos = focus_position(task, opts.focus);
  const UnrolledGraph g = build_graph_for_positions(focus_pos, template_t_verb(task));
  const std::vector<Path> paths = enumerate_paths(g);
  const Path primary = primary_path(g);
  const int primary_idx = find_path_index(paths, primary);

  AttributionTable table;
  table.rows.resize(static_cast<size_t>(S));
  AttributionTable neuron_table;
  neuron_table.rows.resize(static_cast<size_t>(S));
  std::vector<PerSentenceRow> sentences(static_cast<size_t>(S));
  std::vector<double> totals(static_cast<size_t>(S));

  const bool dumping = !dump_jsonl.empty();
  std::ofstream dump;
  if (dumping) {
    dump.open(dump_jsonl, std::ios::binary);
    if (!dump) throw std::runtime_error("cannot write " + dump_jsonl);
  }

  auto run_sentence = [&](std::size_t i) {
    const TaskInstance& inst = data[i];
    const InfluenceContext ctx =
        make_influence_context(m, lex, inst, opts.focus, opts.k_steps);
    PathInfluenceOptions pio;
    pio.with_rows = dumping;
    const PathInfluenceResult res = path_influence(m, ctx, g, paths, pio);
    table.rows[i] = res.attributions;

    const TotalInfluence total = total_influence(m, ctx);
    totals[i] = total.attribution;
    sentences[i] = {static_cast<int>(i), cond, total.attribution, total.q_end,
                    total.q_neutral};

    const NeuronInfluenceResult nres = neuron_influence(m, ctx, g, primary);
    neuron_table.rows[i] = nres.attributions;

    if (dumping) {
      for (size_t p = 0; p < res.attributions.size(); ++p) {
        nlohmann::json rec;
        rec["sentence_id"] = static_cast<int>(i);
        rec["path_id"] = static_cast<int>(p);
        rec["attribution"] = res.attributions[p];
        rec["influence_norm"] = res.rows.row(static_cast<Eigen::Index>(p)).norm();
        dump << rec.dump() << "\n";
      }
    }
  };

  // The dump stream forces in-order processing; otherwise sentences are
  // independent slots.
  if (dumping) {
    for (int i = 0; i < S; ++i) run_sentence(static_cast<size_t>(i));
  } else {
    parallel_for(static_cast<size_t>(S), opts.threads, run_sentence);
  }

  ConditionAnalysis out;
  MetricReport& r = out.report;
  r.task = task;
  r.condition = cond;
  r.focus = opts.focus;
  r.num_paths = static_cast<std::uint64_t>(paths.size());
  r.sentences = S;
  r.metrics_seed = opts.metrics_seed;
  r.mc_samples = opts.mc_samples;
  r.p_plus = p_plus(totals);

  const ShareResult sr = share(table, primary_idx);
  r.primary_share = sr.share;
  r.primary_share_positive = sr.positive;
  r.share_skipped = sr.skipped;
  r.primary_t = t_value(table, primary_idx, opts.mc_samples, opts.metrics_seed);

  const std::vector<double> nt = neuron_t_values(neuron_table, {});
  r.top_neuron_1 = argmax(nt);
  r.top_t_1 = nt[static_cast<size_t>(r.top_neuron_1)];
  const std::vector<double> nt2 = neuron_t_values(neuron_table, {r.top_neuron_1});
  r.top_neuron_2 = argmax(nt2, r.top_neuron_1);
  r.top_t_2 = nt2[static_cast<size_t>(r.top_neuron_2)];

  out.sentences = std::move(sentences);
  out.mean_attribution.assign(paths.size(), 0.0);
  for (const auto& row : table.rows)
    for (size_t p = 0; p < row.size(); ++p) out.mean_attribution[p] += row[p];
  for (double& v : out.mean_attribution) v /= static_cast<double>(S);
  out.path_lengths.reserve(paths.size());
  for (const Path& p : paths)
    out.path_lengths.push_back(static_cast<int>(p.nodes.size()));
  return out;
}

std::vector<MetricReport> analyze_to_dir(const LstmModel& m, const Lexicon& lex,
                                         const std::vector<AnalyzeInput>& datasets,
                                         const AnalyzeOptions& opts,
                                         const FileMeta& meta,
                                         const std::string& out_dir,
                                         bool dump_attributions) {
  if (datasets.empty()) throw std::invalid_argument("nothing to analyze");
  std::filesystem::create_directories(out_dir);

  std::vector<MetricReport> reports;
  std::vector<std::string> charts;
  for (const AnalyzeInput& input : datasets) {
    AnalyzeOptions cell_opts = opts;
    cell_opts.focus = input.focus;

    const std::string stem = std::string(to_string(input.task)) + "_" +
                             to_string(input.condition) + "_" + to_string(input.focus);
    const std::string dump_path =
        dump_attributions ? out_dir + "/attributions_" + stem + ".jsonl" : "";

    ConditionAnalysis cell = analyze_condition(m, lex, input.task, input.condition,
                                               input.data, cell_opts, dump_path);
    reports.push_back(cell.report);

    write_sentence_csv(out_dir + "/sentences_" + stem + ".csv", meta, cell.sentences);

    // Top paths by absolute mean attribution, largest first.
    std::vector<int> order(cell.mean_attribution.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(cell.mean_attribution[static_cast<size_t>(a)]) >
             std::abs(cell.mean_attribution[static_cast<size_t>(b)]);
    });
    std::vector<PathBar> bars;
    for (size_t i = 0; i < order.size() && i < 20; ++i) {
      const int p = order[i];
      bars.push_back({"path " + std::to_string(p) + " (len " +
                          std::to_string(cell.path_lengths[static_cast<size_t>(p)]) + ")",
                      cell.mean_attribution[static_cast<size_t>(p)]});
    }
    const std::string chart = "paths_" + stem + ".svg";
    write_text_file(out_dir + "/" + chart,
                    render_bar_svg(stem + ": top paths by |mean attribution|", bars));
    charts.push_back(chart);
  }

  write_summary_csv(out_dir + "/summary.csv", meta, reports);
  // Chart links in name order, matching what a rebuild from the directory
  // produces, so regenerating the report is byte-stable.
  std::sort(charts.begin(), charts.end());
  write_text_file(out_dir + "/report.md",
                  render_markdown_report(meta, reports, charts));
  return reports;
}

}  // namespace ipaths
