#include "ipaths/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ipaths {

namespace {

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

// Fixed two-decimal coordinates keep the SVG byte-stable.
std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string signed_share(const MetricReport& r) {
  const double value = r.primary_share_positive ? r.primary_share : -r.primary_share;
  return fmt_double(value);
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += "\"";
  return out;
}

void write_csv(const std::string& path, const FileMeta& meta,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# tool_version=" << meta.tool_version << " config_hash=" << meta.config_hash
      << "\n";
  auto line = [&](const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ",";
      out << csv_escape(fields[i]);
    }
    out << "\n";
  };
  line(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("csv row width mismatch in " + path);
    line(row);
  }
}

void write_summary_csv(const std::string& path, const FileMeta& meta,
                       const std::vector<MetricReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(reports.size());
  for (const MetricReport& r : reports) {
    rows.push_back({to_string(r.task), to_string(r.condition), to_string(r.focus),
                    fmt_double(r.p_plus), std::to_string(r.num_paths), signed_share(r),
                    fmt_double(r.primary_t), std::to_string(r.top_neuron_1),
                    fmt_double(r.top_t_1), std::to_string(r.top_neuron_2),
                    fmt_double(r.top_t_2)});
  }
  write_csv(path, meta,
            {"Task", "C", "Focus", "P_plus", "NumPaths", "PrimaryShare", "PrimaryT",
             "TopNeuron1", "T1", "TopNeuron2", "T2"},
            rows);
}

void write_sentence_csv(const std::string& path, const FileMeta& meta,
                        const std::vector<PerSentenceRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const PerSentenceRow& r : rows) {
    cells.push_back({std::to_string(r.sentence_id), to_string(r.condition),
                     fmt_double(r.total_attribution), fmt_double(r.q_end),
                     fmt_double(r.q_neutral)});
  }
  write_csv(path, meta,
            {"sentence_id", "condition", "total_attribution", "q_end", "q_neutral"},
            cells);
}

void write_compression_csv(const std::string& path, const FileMeta& meta,
                           const std::vector<CompressionRow>& rows) {
  std::vector<std::string> header = {"Task", "C"};
  for (SchemeKind k : all_schemes()) header.push_back(scheme_name(k));
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const CompressionRow& r : rows) {
    std::vector<std::string> row = {to_string(r.task),
                                    r.is_mean ? "mean" : to_string(r.condition)};
    for (double a : r.accuracy) row.push_back(fmt_double(a));
    cells.push_back(std::move(row));
  }
  write_csv(path, meta, header, cells);
}

std::string render_bar_svg(const std::string& title,
                           const std::vector<PathBar>& bars) {
  const double label_w = 260.0, value_w = 90.0, plot_w = 420.0;
  const double bar_h = 18.0, gap = 6.0, top = 40.0;
  const double width = label_w + plot_w + value_w + 20.0;
  const double height = top + static_cast<double>(bars.size()) * (bar_h + gap) + 16.0;

  double lo = 0.0, hi = 0.0;
  for (const PathBar& b : bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  if (hi == lo) hi = lo + 1.0;
  const double scale = plot_w / (hi - lo);
  const double zero_x = label_w + (0.0 - lo) * scale;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_coord(width)
      << "\" height=\"" << fmt_coord(height) << "\" font-family=\"monospace\" font-size=\"12\">\n";
  out << "  <text x=\"10\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "  <line x1=\"" << fmt_coord(zero_x) << "\" y1=\"" << fmt_coord(top - 8.0)
      << "\" x2=\"" << fmt_coord(zero_x) << "\" y2=\"" << fmt_coord(height - 10.0)
      << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
  double y = top;
  for (const PathBar& b : bars) {
    const double x0 = label_w + (std::min(b.value, 0.0) - lo) * scale;
    const double w = std::abs(b.value) * scale;
    const char* fill = b.value < 0.0 ? "#b04a4a" : "#4878a8";
    out << "  <text x=\"" << fmt_coord(label_w - 6.0) << "\" y=\"" << fmt_coord(y + bar_h - 5.0)
        << "\" text-anchor=\"end\">" << xml_escape(b.label) << "</text>\n";
    out << "  <rect x=\"" << fmt_coord(x0) << "\" y=\"" << fmt_coord(y) << "\" width=\""
        << fmt_coord(w) << "\" height=\"" << fmt_coord(bar_h) << "\" fill=\"" << fill
        << "\"/>\n";
    out << "  <text x=\"" << fmt_coord(label_w + plot_w + 6.0) << "\" y=\""
        << fmt_coord(y + bar_h - 5.0) << "\">" << fmt_double(b.value) << "</text>\n";
    y += bar_h + gap;
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_markdown_report(const FileMeta& meta,
                                   const std::vector<MetricReport>& reports,
                                   const std::vector<std::string>& charts) {
  std::ostringstream out;
  out << "# Influence path analysis\n\n";
  out << "Tool version " << meta.tool_version << ", config hash `" << meta.config_hash
      << "`.\n\n";
  out << "Share and t-value refer to the primary gate-level path; P+ is the fraction "
         "of sentences with positive total attribution; the neuron columns give the "
         "two strongest neuron-level refinements of the primary path.\n\n";
  out << "| Task | Condition | Focus | P+ | Paths | Primary share | Primary t | "
         "Neuron 1 | t1 | Neuron 2 | t2 |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const MetricReport& r : reports) {
    out << "| " << to_string(r.task) << " | " << to_string(r.condition) << " | "
        << to_string(r.focus) << " | " << fmt_double(r.p_plus) << " | " << r.num_paths
        << " | " << signed_share(r) << " | " << fmt_double(r.primary_t) << " | "
        << r.top_neuron_1 << " | " << fmt_double(r.top_t_1) << " | " << r.top_neuron_2
        << " | " << fmt_double(r.top_t_2) << " |\n";
  }
  out << "\n";
  for (const std::string& chart : charts)
    out << "![" << chart << "](" << chart << ")\n\n";
  return out.str();
}

std::string render_compression_markdown(const FileMeta& meta,
                                        const std::vector<CompressionRow>& rows) {
  std::ostringstream out;
  out << "# Compression accuracy\n\n";
  out << "Tool version " << meta.tool_version << ", config hash `" << meta.config_hash
      << "`.\n\n";
  out << "Number-agreement accuracy when every gate in the intervention span is "
         "frozen to its dataset mean except the preserved set. C runs the model "
         "untouched.\n\n";
  out << "| Task | Condition";
  for (SchemeKind k : all_schemes()) out << " | " << scheme_name(k);
  out << " |\n|---|---";
  for (size_t i = 0; i < 7; ++i) out << "|---";
  out << "|\n";
  for (const CompressionRow& r : rows) {
    out << "| " << to_string(r.task) << " | " << (r.is_mean ? "mean" : to_string(r.condition));
    for (double a : r.accuracy) out << " | " << fmt_double(a);
    out << " |\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

struct CsvFile {
  FileMeta meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  CsvFile out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto grab = [&](const std::string& key) -> std::string {
        const auto at = line.find(key + "=");
        if (at == std::string::npos) return "";
        const auto start = at + key.size() + 1;
        const auto end = line.find(' ', start);
        return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      };
      const std::string tv = grab("tool_version"), ch = grab("config_hash");
      if (!tv.empty()) out.meta.tool_version = tv;
      if (!ch.empty()) out.meta.config_hash = ch;
      continue;
    }
    auto fields = split_csv_line(line);
    if (!saw_header) {
      out.header = std::move(fields);
      saw_header = true;
    } else {
      out.rows.push_back(std::move(fields));
    }
  }
  if (!saw_header) throw std::runtime_error("empty csv " + path);
  return out;
}

template <typename T>
T parse_enum_field(const std::optional<T>& v, const std::string& what) {
  if (!v) throw std::runtime_error("unparseable " + what + " in csv");
  return *v;
}

}  // namespace

void rebuild_reports(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  bool rendered = false;

  std::vector<std::string> charts;
  for (const auto& entry : fs::directory_iterator(base))
    if (entry.path().extension() == ".svg")
      charts.push_back(entry.path().filename().string());
  std::sort(charts.begin(), charts.end());

  if (fs::exists(base / "summary.csv")) {
    const CsvFile csv = read_csv((base / "summary.csv").string());
    std::vector<MetricReport> reports;
    for (const auto& row : csv.rows) {
      if (row.size() != 11)
        throw std::runtime_error("summary.csv row has wrong width");
      MetricReport r;
      r.task = parse_enum_field(task_from_string(row[0]), "task");
      r.condition = parse_enum_field(condition_from_string(row[1]), "condition");
      r.focus = parse_enum_field(focus_from_string(row[2]), "focus");
      r.p_plus = std::stod(row[3]);
      r.num_paths = std::stoull(row[4]);
      const double s = std::stod(row[5]);
      r.primary_share = std::abs(s);
      r.primary_share_positive = s >= 0.0;
      r.primary_t = std::stod(row[6]);
      r.top_neuron_1 = std::stoi(row[7]);
      r.top_t_1 = std::stod(row[8]);
      r.top_neuron_2 = std::stoi(row[9]);
      r.top_t_2 = std::stod(row[10]);
      reports.push_back(r);
    }
    write_text_file((base / "report.md").string(),
                    render_markdown_report(csv.meta, reports, charts));
    rendered = true;
  }

  if (fs::exists(base / "compression.csv")) {
    const CsvFile csv = read_csv((base / "compression.csv").string());
    std::vector<CompressionRow> rows;
    for (const auto& row : csv.rows) {
      if (row.size() != 9)
        throw std::runtime_error("compression.csv row has wrong width");
      CompressionRow r;
      r.task = parse_enum_field(task_from_string(row[0]), "task");
      if (row[1] == "mean") {
        r.is_mean = true;
      } else {
        r.condition = parse_enum_field(condition_from_string(row[1]), "condition");
      }
      for (size_t s = 0; s < 7; ++s) r.accuracy[s] = std::stod(row[2 + s]);
      rows.push_back(r);
    }
    write_text_file((base / "compression.md").string(),
                    render_compression_markdown(csv.meta, rows));
    rendered = true;
  }

  if (!rendered)
    throw std::runtime_error("no summary.csv or compression.csv under " + dir);
}

}  // namespace ipaths
