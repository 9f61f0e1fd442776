#include "corridor/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "corridor/core/error.hpp"

namespace corridor::cli {

namespace {

const std::map<std::string, std::vector<std::string>>& headers() {
  static const std::map<std::string, std::vector<std::string>> h{
      {"metrics.csv", {"time_s", "scenario", "seed", "policy", "avg_delay_s_per_km", "reward", "total_queue"}},
      {"quartiles.csv",
       {"time_s", "scenario", "policy", "seeds", "delay_q1", "delay_median", "delay_q3", "delay_mean",
        "reward_mean", "queue_mean"}},
      {"train_log.csv",
       {"episode", "update", "episode_reward", "mean_reward", "policy_loss", "value_loss", "entropy", "approx_kl",
        "clip_fraction"}},
      {"select_log.csv", {"episode", "update", "mean_delay_s_per_km", "best"}},
      {"surface.csv", {"point", "offsets", "reward"}},
      {"sweep.csv",
       {"period", "interval_min", "baseline_delay_s_per_km", "policy_delay_s_per_km", "percent_difference"}},
      {"reference.csv",
       {"period", "interval_min", "baseline", "deeprl", "published_percent", "recomputed_percent"}},
  };
  return h;
}

std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& csv_header(const std::string& file) {
  const auto it = headers().find(file);
  if (it == headers().end()) throw ConfigError("csv", "no schema for '" + file + "'");
  return it->second;
}

std::vector<std::string> csv_files() {
  std::vector<std::string> out;
  for (const auto& [k, v] : headers()) out.push_back(k);
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::string& file, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), columns_(csv_header(file).size()) {
  if (!out_) throw ConfigError(path, "cannot write file");
  if (!append) {
    for (const auto& c : csv_header(file)) *this << c;
    end_row();
  }
}

CsvWriter& CsvWriter::operator<<(const std::string& field) {
  if (field_ > 0) out_ << ',';
  out_ << escape(field);
  ++field_;
  return *this;
}

void CsvWriter::end_row() {
  if (field_ != columns_) throw RuntimeAbort("csv row has " + std::to_string(field_) + " fields, expected " +
                                             std::to_string(columns_));
  out_ << '\n';
  field_ = 0;
}

}  // namespace corridor::cli
