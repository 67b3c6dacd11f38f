#pragma once

#include <string>
#include <vector>

#include "steprl/search.hpp"
#include "steprl/trainer.hpp"

namespace steprl {

// Line-delimited JSON records with fixed key order and 17-digit floats, so
// files are byte-stable across runs and thread counts.

std::string train_metrics_line(const IterationMetrics& m);
std::string eval_metrics_line(const EvalMetrics& m);

struct SearchRecord {
  QuestionId question_id = 0;
  std::string method;
  int n = 0;
  int m = 0;
  Answer chosen_answer = 0;
  int correct = 0;
  std::vector<double> solution_scores;  // s(C) per solution
  std::size_t rollout_count = 0;
};

std::string search_record_line(const SearchRecord& r);
std::string search_summary_line(const std::string& method, int n,
                                std::size_t questions, double accuracy);

// --- export: tidy CSV tables from metrics / search result files ---
// kinds: "accuracy" (series,iteration,value), "length" (series,iteration,
// value), "search-accuracy" (method,n,accuracy). Throws
// Error("export-malformed") carrying the 1-based line number in detail.
std::string export_csv(const std::string& records_text,
                       const std::string& kind);

// Header row for each kind, as documented in --help.
std::string export_header(const std::string& kind);

}  // namespace steprl
