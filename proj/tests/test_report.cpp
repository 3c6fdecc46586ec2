#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ipaths/report.hpp"

using namespace ipaths;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MetricReport sample_report() {
  MetricReport r;
  r.task = TaskKind::NounPP;
  r.condition = Condition::PS;
  r.focus = Focus::Subject;
  r.p_plus = 0.96;
  r.num_paths = 6946;
  r.primary_share = 0.4375;
  r.primary_share_positive = true;
  r.primary_t = 0.9921875;
  r.top_neuron_1 = 17;
  r.top_t_1 = 0.98;
  r.top_neuron_2 = 3;
  r.top_t_2 = 0.93;
  r.sentences = 300;
  return r;
}

}  // namespace

TEST_CASE("csv escaping follows rfc 4180") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("") == "");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("csv files start with a version comment and quote as needed") {
  const std::string path = "test_report_tmp.csv";
  FileMeta meta;
  meta.config_hash = "a1b2c3";
  write_csv(path, meta, {"name", "note"}, {{"x", "a,b"}, {"y", "plain"}});
  const std::string got = slurp(path);
  fs::remove(path);
  CHECK(got ==
        "# tool_version=0.1.0 config_hash=a1b2c3\n"
        "name,note\n"
        "x,\"a,b\"\n"
        "y,plain\n");

  CHECK_THROWS_AS(write_csv(path, meta, {"one"}, {{"too", "wide"}}), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("summary csv lays out the table columns") {
  const std::string path = "test_report_summary.csv";
  write_summary_csv(path, FileMeta{}, {sample_report()});
  const std::string got = slurp(path);
  fs::remove(path);
  CHECK(got ==
        "# tool_version=0.1.0 config_hash=none\n"
        "Task,C,Focus,P_plus,NumPaths,PrimaryShare,PrimaryT,TopNeuron1,T1,TopNeuron2,T2\n"
        "nounPP,PS,subject,0.96,6946,0.4375,0.9921875,17,0.98,3,0.93\n");

  // A negative-pool share carries its sign tag in the same column.
  auto r = sample_report();
  r.primary_share_positive = false;
  write_summary_csv(path, FileMeta{}, {r});
  const std::string neg = slurp(path);
  fs::remove(path);
  CHECK(neg.find("-0.4375") != std::string::npos);
}

TEST_CASE("per-sentence csv carries the qoi bookkeeping") {
  const std::string path = "test_report_sentences.csv";
  PerSentenceRow row;
  row.sentence_id = 4;
  row.condition = Condition::SP;
  row.total_attribution = -0.125;
  row.q_end = 1.5;
  row.q_neutral = 0.25;
  write_sentence_csv(path, FileMeta{}, {row});
  const std::string got = slurp(path);
  fs::remove(path);
  CHECK(got ==
        "# tool_version=0.1.0 config_hash=none\n"
        "sentence_id,condition,total_attribution,q_end,q_neutral\n"
        "4,SP,-0.125,1.5,0.25\n");
}

TEST_CASE("compression csv emits scheme columns in fixed order") {
  const std::string path = "test_report_compression.csv";
  CompressionRow row;
  row.task = TaskKind::NounPPAdv;
  row.condition = Condition::PP;
  row.accuracy = {0.1, 0.2, 0.3, 0.4, 0.5, 0.625, 1.0};
  CompressionRow mean = row;
  mean.is_mean = true;
  write_compression_csv(path, FileMeta{}, {row, mean});
  const std::string got = slurp(path);
  fs::remove(path);
  CHECK(got ==
        "# tool_version=0.1.0 config_hash=none\n"
        "Task,C,Cbar_si,Cbar_s,Cbar_i,C_si,C_s,C_i,C\n"
        "nounPPAdv,PP,0.1,0.2,0.3,0.4,0.5,0.625,1.0\n"
        "nounPPAdv,mean,0.1,0.2,0.3,0.4,0.5,0.625,1.0\n");
}

TEST_CASE("bar chart svg is deterministic and escapes markup") {
  std::vector<PathBar> bars = {{"p<0> & co", 0.75}, {"down", -0.25}};
  const std::string svg = render_bar_svg("title & <tag>", bars);
  CHECK(svg == render_bar_svg("title & <tag>", bars));
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("title &amp; &lt;tag&gt;") != std::string::npos);
  CHECK(svg.find("p&lt;0&gt; &amp; co") != std::string::npos);
  CHECK(svg.find("#4878a8") != std::string::npos);  // positive bar
  CHECK(svg.find("#b04a4a") != std::string::npos);  // negative bar
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 4);

  const std::string empty = render_bar_svg("none", {});
  CHECK(empty.find("<svg") == 0);
}

TEST_CASE("markdown report lists every summary row and chart") {
  const auto md = render_markdown_report(FileMeta{}, {sample_report()}, {"a.svg"});
  CHECK(md.find("| nounPP | PS | subject | 0.96 | 6946 | 0.4375 |") != std::string::npos);
  CHECK(md.find("![a.svg](a.svg)") != std::string::npos);
  CHECK(md.find("config hash `none`") != std::string::npos);
}

TEST_CASE("report rebuilding from csv artifacts round-trips") {
  const std::string dir = "test_report_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  FileMeta meta;
  meta.config_hash = "cafe0123";

  std::vector<MetricReport> reports = {sample_report()};
  write_summary_csv(dir + "/summary.csv", meta, reports);
  CompressionRow crow;
  crow.task = TaskKind::NounPP;
  crow.condition = Condition::SP;
  crow.accuracy = {0.5, 0.5, 0.9, 0.7, 0.7, 0.5, 0.9};
  write_compression_csv(dir + "/compression.csv", meta, {crow});
  write_text_file(dir + "/paths_x.svg", render_bar_svg("x", {{"p", 1.0}}));

  rebuild_reports(dir);
  const std::string report = slurp(dir + "/report.md");
  CHECK(report == render_markdown_report(meta, reports, {"paths_x.svg"}));
  const std::string comp = slurp(dir + "/compression.md");
  CHECK(comp == render_compression_markdown(meta, {crow}));

  // Rebuilding twice is byte-stable.
  rebuild_reports(dir);
  CHECK(slurp(dir + "/report.md") == report);
  fs::remove_all(dir);

  fs::create_directories(dir);
  CHECK_THROWS_AS(rebuild_reports(dir), std::runtime_error);
  fs::remove_all(dir);
}
