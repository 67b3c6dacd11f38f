#include "steprl/records.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "steprl/error.hpp"
#include "steprl/io.hpp"

namespace steprl {

std::string train_metrics_line(const IterationMetrics& m) {
  std::ostringstream os;
  os << "{\"kind\":\"train\",\"iteration\":" << m.iteration
     << ",\"train_accuracy\":" << fmt_g17(m.train_accuracy)
     << ",\"mean_rollout_length\":" << fmt_g17(m.mean_rollout_length)
     << ",\"airl_loss\":" << fmt_g17(m.airl_loss)
     << ",\"j_grpo\":" << fmt_g17(m.j_grpo)
     << ",\"j_airl\":" << fmt_g17(m.j_airl)
     << ",\"mean_kl\":" << fmt_g17(m.mean_kl)
     << ",\"buffer_size\":" << m.buffer_size << '}';
  return os.str();
}

std::string eval_metrics_line(const EvalMetrics& m) {
  std::ostringstream os;
  os << "{\"kind\":\"eval\",\"iteration\":" << m.iteration
     << ",\"val_accuracy\":" << fmt_g17(m.accuracy)
     << ",\"val_mean_length\":" << fmt_g17(m.mean_length) << '}';
  return os.str();
}

std::string search_record_line(const SearchRecord& r) {
  std::ostringstream os;
  os << "{\"kind\":\"search\",\"question_id\":" << r.question_id
     << ",\"method\":\"" << r.method << "\",\"n\":" << r.n
     << ",\"m\":" << r.m << ",\"chosen_answer\":" << r.chosen_answer
     << ",\"correct\":" << r.correct << ",\"solution_scores\":[";
  for (std::size_t i = 0; i < r.solution_scores.size(); ++i) {
    if (i) os << ',';
    os << fmt_g17(r.solution_scores[i]);
  }
  os << "],\"rollout_count\":" << r.rollout_count << '}';
  return os.str();
}

std::string search_summary_line(const std::string& method, int n,
                                std::size_t questions, double accuracy) {
  std::ostringstream os;
  os << "{\"kind\":\"search-summary\",\"method\":\"" << method
     << "\",\"n\":" << n << ",\"questions\":" << questions
     << ",\"accuracy\":" << fmt_g17(accuracy) << '}';
  return os.str();
}

std::string export_header(const std::string& kind) {
  if (kind == "accuracy" || kind == "length") return "series,iteration,value";
  if (kind == "search-accuracy") return "method,n,accuracy";
  throw Error("export-kind", "unknown export kind '" + kind + "'");
}

std::string export_csv(const std::string& records_text,
                       const std::string& kind) {
  std::ostringstream out;
  out << export_header(kind) << '\n';

  std::istringstream is(records_text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception&) {
      throw Error("export-malformed", "line " + std::to_string(lineno));
    }
    try {
      const std::string rk = j.value("kind", "");
      if (kind == "accuracy") {
        if (rk == "train")
          out << "train_accuracy," << j.at("iteration").get<long long>() << ','
              << fmt_g17(j.at("train_accuracy").get<double>()) << '\n';
        else if (rk == "eval")
          out << "val_accuracy," << j.at("iteration").get<long long>() << ','
              << fmt_g17(j.at("val_accuracy").get<double>()) << '\n';
      } else if (kind == "length") {
        if (rk == "train")
          out << "train_mean_length," << j.at("iteration").get<long long>()
              << ',' << fmt_g17(j.at("mean_rollout_length").get<double>())
              << '\n';
        else if (rk == "eval")
          out << "val_mean_length," << j.at("iteration").get<long long>()
              << ',' << fmt_g17(j.at("val_mean_length").get<double>()) << '\n';
      } else if (kind == "search-accuracy") {
        if (rk == "search-summary")
          out << j.at("method").get<std::string>() << ','
              << j.at("n").get<int>() << ','
              << fmt_g17(j.at("accuracy").get<double>()) << '\n';
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error("export-malformed", "line " + std::to_string(lineno));
    }
  }
  return out.str();
}

}  // namespace steprl
