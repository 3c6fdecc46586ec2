#pragma once

#include <string>
#include <vector>

#include "ipaths/compression.hpp"
#include "ipaths/metrics.hpp"
#include "ipaths/types.hpp"

namespace ipaths {

// RFC-4180 quoting; fields with commas, quotes, or newlines get wrapped.
std::string csv_escape(const std::string& field);

// First line is a `#` comment with tool version + config hash, then the
// header row, then data. Readers that reject comment lines can skip line 1.
void write_csv(const std::string& path, const FileMeta& meta,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct PerSentenceRow {
  int sentence_id = 0;
  Condition condition = Condition::S;
  double total_attribution = 0.0;
  double q_end = 0.0;
  double q_neutral = 0.0;
};

void write_summary_csv(const std::string& path, const FileMeta& meta,
                       const std::vector<MetricReport>& reports);
void write_sentence_csv(const std::string& path, const FileMeta& meta,
                        const std::vector<PerSentenceRow>& rows);
void write_compression_csv(const std::string& path, const FileMeta& meta,
                           const std::vector<CompressionRow>& rows);

struct PathBar {
  std::string label;
  double value = 0.0;
};

// Horizontal bar chart, one bar per entry, signed values share a zero axis.
std::string render_bar_svg(const std::string& title,
                           const std::vector<PathBar>& bars);

// Markdown report with the per-condition summary table plus links to the
// generated SVGs; paths in `charts` are relative to the report file.
std::string render_markdown_report(const FileMeta& meta,
                                   const std::vector<MetricReport>& reports,
                                   const std::vector<std::string>& charts);

std::string render_compression_markdown(const FileMeta& meta,
                                        const std::vector<CompressionRow>& rows);

void write_text_file(const std::string& path, const std::string& content);

// Re-renders report.md (and compression.md when compression.csv exists) from
// the CSV artifacts already in dir; charts are the directory's SVG files in
// name order. Throws when no renderable CSV is found.
void rebuild_reports(const std::string& dir);

}  // namespace ipaths
