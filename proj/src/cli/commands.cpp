#include "corridor/cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "corridor/cli/csv.hpp"
#include "corridor/core/error.hpp"
#include "corridor/core/parallel.hpp"
#include "corridor/scenarios/tables.hpp"

namespace corridor::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw ConfigError("--seed", "malformed seed '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("--seed", "seed out of range '" + s + "'");
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("--out", "cannot create '" + dir + "': " + ec.message());
  const fs::path probe = p / ".write_test";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("--out", "directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return p;
}

net::ScenarioDocument load_document(const RunManifest& m) {
  if (m.scenario_path.empty()) throw ConfigError("--scenario", "no scenario document given");
  return net::load_scenario_file(m.scenario_path);
}

const json* override_at(const RunManifest& m, const std::string& key) {
  const auto it = m.overrides.find(key);
  return it == m.overrides.end() ? nullptr : &*it;
}

template <class T>
T override_or(const RunManifest& m, const std::string& key, T fallback) {
  const json* j = override_at(m, key);
  if (!j) return fallback;
  try {
    return j->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("--set " + key, "wrong value type");
  }
}

sim::QueueSampling sampling_from(const RunManifest& m) {
  const std::string s = override_or<std::string>(m, "sampling", "mean");
  if (s == "mean") return sim::QueueSampling::mean;
  if (s == "endpoint") return sim::QueueSampling::endpoint;
  throw ConfigError("--set sampling", "expected mean or endpoint, got '" + s + "'");
}

std::string scenario_name(const scen::ScenarioSpec& spec) {
  std::string s = spec.label;
  for (const auto& p : spec.perturbations) s += "+" + p.name;
  return s;
}

void write_manifest(const fs::path& dir, const RunManifest& m) { learn::save_json((dir / "manifest.json").string(), m.to_json()); }

json run_summary(const EvalOutcome& e) {
  json per_seed = json::array();
  for (const auto& r : e.runs) {
    per_seed.push_back({{"seed", r.seed},
                        {"mean_delay_s_per_km", r.mean_delay},
                        {"mean_reward", r.mean_reward},
                        {"total_reward", r.total_reward},
                        {"injected", r.injected},
                        {"exited", r.exited}});
  }
  return {{"scenario", scenario_name(e.spec)},
          {"policy", e.policy},
          {"interval_s", e.spec.interval},
          {"warm_up_s", e.spec.warm_up},
          {"intervals", e.runs.empty() ? 0 : e.runs.front().intervals.size()},
          {"seeds", e.runs.size()},
          {"mean_delay_s_per_km", e.mean_delay},
          {"mean_reward", e.mean_reward},
          {"per_seed", per_seed}};
}

void write_eval_outputs(const fs::path& dir, const EvalOutcome& e) {
  const std::string scenario = scenario_name(e.spec);
  {
    CsvWriter w((dir / "metrics.csv").string(), "metrics.csv");
    for (const auto& r : e.runs) {
      for (const auto& m : r.intervals) {
        w << static_cast<long long>(m.start) << scenario << static_cast<unsigned long long>(r.seed) << e.policy
          << m.avg_delay << m.reward << m.total_queue;
        w.end_row();
      }
    }
  }
  {
    CsvWriter w((dir / "quartiles.csv").string(), "quartiles.csv");
    const std::size_t n = e.runs.empty() ? 0 : e.runs.front().intervals.size();
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> delay, reward, queue;
      for (const auto& r : e.runs) {
        delay.push_back(r.intervals[k].avg_delay);
        reward.push_back(r.intervals[k].reward);
        queue.push_back(r.intervals[k].total_queue);
      }
      double dsum = 0.0;
      int dn = 0;
      for (double d : delay) {
        if (!std::isnan(d)) {
          dsum += d;
          ++dn;
        }
      }
      double rsum = 0.0, qsum = 0.0;
      for (std::size_t i = 0; i < reward.size(); ++i) {
        rsum += reward[i];
        qsum += queue[i];
      }
      const double count = static_cast<double>(e.runs.size());
      w << static_cast<long long>(e.runs.front().intervals[k].start) << scenario << e.policy
        << static_cast<int>(e.runs.size()) << quantile(delay, 0.25) << quantile(delay, 0.5) << quantile(delay, 0.75)
        << (dn > 0 ? dsum / dn : std::numeric_limits<double>::quiet_NaN()) << rsum / count << qsum / count;
      w.end_row();
    }
  }
  std::ofstream((dir / "summary.json").string()) << run_summary(e).dump(2) << '\n';
}

EvalOutcome evaluate(const net::ScenarioDocument& doc, const scen::ScenarioSpec& spec, const PolicySource& src,
                     const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  if (seeds.empty()) throw ConfigError("--seed", "no seeds");
  EvalOutcome e;
  e.spec = spec;
  e.policy = src.name();
  e.runs.resize(seeds.size());
  parallel_for(seeds.size(), worker_count(workers), [&](std::size_t i) {
    auto policy = src.make();
    e.runs[i] = scen::run_scenario(doc, spec, *policy, seeds[i]);
  });
  double d = 0.0, r = 0.0;
  int nd = 0;
  for (const auto& run : e.runs) {
    if (!std::isnan(run.mean_delay)) {
      d += run.mean_delay;
      ++nd;
    }
    r += run.mean_reward;
  }
  e.mean_delay = nd > 0 ? d / nd : std::numeric_limits<double>::quiet_NaN();
  e.mean_reward = r / static_cast<double>(e.runs.size());
  return e;
}

// Keeps the header and rows up to `episode`, so a resumed log continues cleanly.
void trim_log(const fs::path& path, std::int64_t episode) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> keep;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      keep.push_back(line);
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoll(line.substr(0, comma)) <= episode) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

json parse_override_value(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  return v;
}

}  // namespace

void RunManifest::validate() const {
  if (command.empty()) throw ConfigError("manifest", "no command");
  if (seeds.empty()) throw ConfigError("--seed", "seed list is empty");
  if (out_dir.empty()) throw ConfigError("--out", "no output directory");
  if (episodes < 0) throw ConfigError("--episodes", "must be >= 0");
  if (workers < 1) throw ConfigError("--workers", "must be >= 1");
  if (interval_min && *interval_min <= 0) throw ConfigError("--interval", "must be > 0");
  if (step < 1) throw ConfigError("--step", "must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("--checkpoint-every", "must be >= 1");
  if (sweep_intervals.empty()) throw ConfigError("--intervals", "no intervals");
}

json RunManifest::to_json() const {
  return {{"command", command},
          {"scenario", scenario_path},
          {"periods", periods},
          {"seeds", seeds},
          {"policy", policy},
          {"out", out_dir},
          {"interval_min", interval_min ? json(*interval_min) : json(nullptr)},
          {"episodes", episodes},
          {"workers", workers},
          {"perturbations", perturbations},
          {"resume", resume},
          {"step", step},
          {"max_points", max_points},
          {"checkpoint_dir", checkpoint_dir},
          {"train_missing", train_missing},
          {"intervals", sweep_intervals},
          {"schedule", schedule},
          {"overrides", overrides}};
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) throw ConfigError("--seed", "empty entry in '" + text + "'");
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64(part));
      continue;
    }
    const std::uint64_t lo = parse_u64(part.substr(0, dash));
    const std::uint64_t hi = parse_u64(part.substr(dash + 1));
    if (hi < lo) throw ConfigError("--seed", "descending range '" + part + "'");
    if (hi - lo >= 1000000) throw ConfigError("--seed", "range too large '" + part + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("--seed", "seed list is empty");
  return out;
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PolicySource::PolicySource(const net::ScenarioDocument& doc, const std::string& period, const std::string& spec) {
  if (spec == "baseline") {
    name_ = "baseline";
    const auto& p = doc.profile(period);
    if (p.baseline_schedule.empty()) throw ConfigError("--policy", "profile '" + period + "' has no baseline schedule");
    schedule_ = doc.schedule(p.baseline_schedule);
    return;
  }
  if (spec.rfind("replay:", 0) == 0) {
    name_ = spec;
    schedule_ = doc.schedule(spec.substr(7));
    return;
  }
  std::string path;
  if (spec.rfind("checkpoint:", 0) == 0) {
    path = spec.substr(11);
  } else if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    path = spec;
  } else {
    throw ConfigError("--policy", "unknown policy source '" + spec + "'");
  }
  const json ck = learn::load_json(path);
  learn::PolicyNetwork net = learn::policy_from_checkpoint(ck);
  const learn::Architecture want = scen::default_architecture(doc);
  const learn::Architecture& got = net.architecture();
  if (got.input != want.input || got.heads != want.heads || got.head_size != want.head_size) {
    throw ConfigError("--policy", "architecture mismatch: checkpoint " + learn::to_json(got).dump() +
                                      " does not fit scenario " + learn::to_json(want).dump());
  }
  name_ = "deeprl";
  network_ = std::move(net);
}

std::unique_ptr<scen::OffsetPolicy> PolicySource::make() const {
  if (network_) return std::make_unique<scen::NetworkPolicy>(*network_, name_);
  return std::make_unique<scen::SchedulePolicy>(name_, *schedule_);
}

learn::TrainerConfig trainer_config(const RunManifest& m) {
  learn::TrainerConfig tc;
  tc.seed = m.seeds.at(0);
  tc.workers = worker_count(m.workers);
  json ppo = learn::to_json(tc.ppo);
  for (const auto& [k, v] : m.overrides.items()) {
    if (k.rfind("ppo.", 0) != 0) continue;
    const std::string key = k.substr(4);
    if (!ppo.contains(key)) throw ConfigError("--set " + k, "unknown PPO setting");
    ppo[key] = v;
  }
  tc.ppo = learn::ppo_config_from_json(ppo);
  return tc;
}

scen::TrainingEnvConfig training_env_config(const net::ScenarioDocument& doc, const RunManifest& m) {
  scen::TrainingEnvConfig cfg;
  cfg.periods.clear();
  if (m.periods.empty()) {
    for (const auto& p : doc.demand) cfg.periods.push_back(p.label);
  } else {
    for (const auto& p : m.periods) cfg.periods.push_back(doc.profile(p).label);
  }
  if (m.interval_min) cfg.interval = *m.interval_min * kMinute;
  cfg.runs = override_or<int>(m, "runs", cfg.runs);
  cfg.run_length = override_or<Seconds>(m, "run_length_min", cfg.run_length / kMinute) * kMinute;
  cfg.warm_up = override_or<Seconds>(m, "warm_up_min", cfg.warm_up / kMinute) * kMinute;
  cfg.sampling = sampling_from(m);
  cfg.segment_runs = override_or<bool>(m, "segment_runs", cfg.segment_runs);
  const auto pool = override_or<std::int64_t>(m, "demand_pool", 0);
  if (pool < 0) throw ConfigError("--set demand_pool", "must be >= 0");
  cfg.demand_pool = static_cast<std::uint64_t>(pool);
  return cfg;
}

learn::Architecture architecture(const net::ScenarioDocument& doc, const RunManifest& m) {
  learn::Architecture a = scen::default_architecture(doc);
  a.shared_trunk = override_or<bool>(m, "shared_trunk", a.shared_trunk);
  if (const json* h = override_at(m, "hidden")) {
    std::vector<int> sizes;
    std::stringstream ss(h->is_string() ? h->get<std::string>() : h->dump());
    std::string part;
    while (std::getline(ss, part, 'x')) {
      try {
        sizes.push_back(std::stoi(part));
      } catch (const std::exception&) {
        throw ConfigError("--set hidden", "expected sizes like 64x64x64");
      }
    }
    if (sizes.empty() || std::any_of(sizes.begin(), sizes.end(), [](int s) { return s < 1; })) {
      throw ConfigError("--set hidden", "expected sizes like 64x64x64");
    }
    a.hidden = sizes;
  }
  return a;
}

scen::ScenarioSpec eval_spec(const net::ScenarioDocument& doc, const RunManifest& m) {
  if (doc.demand.empty()) throw ConfigError("demand", "no profiles");
  const std::string label = m.periods.empty() ? doc.demand.front().label : m.periods.front();
  scen::ScenarioSpec spec = scen::default_spec(doc, label);
  if (m.interval_min) spec.interval = *m.interval_min * kMinute;
  spec.warm_up = override_or<Seconds>(m, "warm_up_min", spec.warm_up / kMinute) * kMinute;
  spec.sampling = sampling_from(m);
  for (const auto& name : m.perturbations) spec.perturbations.push_back(doc.perturbation(name));
  spec.validate(doc);
  return spec;
}

TrainOutcome cmd_train(const RunManifest& m) {
  m.validate();
  const net::ScenarioDocument doc = load_document(m);
  const fs::path dir = prepare_out_dir(m.out_dir);
  const scen::TrainingEnvConfig env_cfg = training_env_config(doc, m);
  learn::TrainerConfig tc = trainer_config(m);
  if (!override_at(m, "ppo.horizon")) tc.ppo.horizon = scen::TrainingEnv(doc, env_cfg).steps_per_episode();
  tc.ppo.validate();
  learn::Trainer trainer(architecture(doc, m), tc,
                         [&doc, env_cfg] { return std::make_unique<scen::TrainingEnv>(doc, env_cfg); });

  TrainOutcome out;
  out.log_path = (dir / "train_log.csv").string();
  out.checkpoint_path = (dir / "checkpoint.json").string();
  bool append = false;
  if (!m.resume.empty()) {
    trainer.restore(learn::load_json(m.resume));
    if (fs::exists(out.log_path)) {
      trim_log(out.log_path, trainer.episode());
      append = true;
    }
  }
  write_manifest(dir, m);

  std::vector<std::uint64_t> select_seeds;
  if (const json* s = override_at(m, "select_seeds")) {
    try {
      select_seeds = parse_seeds(s->is_string() ? s->get<std::string>() : s->dump());
    } catch (const ConfigError& e) {
      throw ConfigError("--set select_seeds", e.what());
    }
  }
  const int select_every = override_or<int>(m, "select_every", m.checkpoint_every);
  if (select_every < 1) throw ConfigError("--set select_every", "must be >= 1");
  const scen::ScenarioSpec select_spec = select_seeds.empty() ? scen::ScenarioSpec{} : eval_spec(doc, m);
  std::optional<CsvWriter> select_log;
  if (!select_seeds.empty()) {
    out.best_checkpoint_path = (dir / "best_checkpoint.json").string();
    out.best_delay = std::numeric_limits<double>::infinity();
    const fs::path log_path = dir / "select_log.csv";
    const bool keep = !m.resume.empty() && fs::exists(out.best_checkpoint_path) && fs::exists(log_path);
    if (keep) out.best_delay = learn::load_json(out.best_checkpoint_path)["meta"].value("select_delay", out.best_delay);
    select_log.emplace(log_path.string(), "select_log.csv", keep);
  }

  const json meta = {{"scenario", doc.name},
                     {"periods", env_cfg.periods},
                     {"interval_s", env_cfg.interval},
                     {"runs", env_cfg.runs},
                     {"run_length_s", env_cfg.run_length},
                     {"warm_up_s", env_cfg.warm_up}};
  CsvWriter log(out.log_path, "train_log.csv", append);
  try {
    trainer.train(
        m.episodes,
        [&](const learn::TrainLogRow& r) {
          log << static_cast<long long>(r.episode) << static_cast<long long>(r.update) << r.episode_reward
              << r.mean_reward << r.policy_loss << r.value_loss << r.entropy << r.approx_kl << r.clip_fraction;
          log.end_row();
          out.rows.push_back(r);
        },
        [&](const learn::Trainer& t) {
          if (t.updates() % m.checkpoint_every == 0) learn::save_json(out.checkpoint_path, t.checkpoint(meta));
          if (select_seeds.empty() || t.updates() % select_every != 0) return;
          std::vector<double> delays(select_seeds.size());
          parallel_for(select_seeds.size(), tc.workers, [&](std::size_t i) {
            scen::NetworkPolicy policy(t.policy());
            delays[i] = scen::run_scenario(doc, select_spec, policy, select_seeds[i]).mean_delay;
          });
          const double d = std::accumulate(delays.begin(), delays.end(), 0.0) / static_cast<double>(delays.size());
          const bool best = d < out.best_delay;
          *select_log << static_cast<long long>(t.episode()) << static_cast<long long>(t.updates()) << d
                      << (best ? 1 : 0);
          select_log->end_row();
          if (!best) return;
          out.best_delay = d;
          json ck = t.checkpoint(meta);
          ck["meta"]["select_delay"] = d;
          ck["meta"]["select_seeds"] = select_seeds;
          learn::save_json(out.best_checkpoint_path, ck);
        });
  } catch (const RuntimeAbort& e) {
    json state = trainer.checkpoint(meta);
    state["meta"]["error"] = e.what();
    learn::save_json((dir / "abort_state.json").string(), state);
    throw;
  }
  learn::save_json(out.checkpoint_path, trainer.checkpoint(meta));
  out.episodes = trainer.episode();
  return out;
}

EvalOutcome cmd_eval(const RunManifest& m) {
  m.validate();
  const net::ScenarioDocument doc = load_document(m);
  const scen::ScenarioSpec spec = eval_spec(doc, m);
  const PolicySource src(doc, spec.label, m.policy);
  const fs::path dir = prepare_out_dir(m.out_dir);
  write_manifest(dir, m);
  EvalOutcome e = evaluate(doc, spec, src, m.seeds, m.workers);
  write_eval_outputs(dir, e);
  return e;
}

EvalOutcome cmd_replay(const RunManifest& m) {
  if (m.schedule.empty()) throw ConfigError("--schedule", "no schedule named");
  m.validate();
  const net::ScenarioDocument doc = load_document(m);
  RunManifest r = m;
  r.policy = "replay:" + m.schedule;
  if (r.periods.empty()) {
    const auto us = m.schedule.rfind('_');
    std::string guess = us == std::string::npos ? m.schedule : m.schedule.substr(us + 1);
    for (auto& c : guess) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const bool known = std::any_of(doc.demand.begin(), doc.demand.end(),
                                   [&](const net::DemandProfile& p) { return p.label == guess; });
    if (!known) throw ConfigError("--period", "cannot infer the period of schedule '" + m.schedule + "'");
    r.periods = {guess};
  }
  const scen::ScenarioSpec spec = eval_spec(doc, r);
  const PolicySource src(doc, spec.label, r.policy);
  const fs::path dir = prepare_out_dir(r.out_dir);
  write_manifest(dir, r);
  EvalOutcome e = evaluate(doc, spec, src, r.seeds, r.workers);
  write_eval_outputs(dir, e);
  return e;
}

BruteForceOutcome cmd_brute_force(const RunManifest& m) {
  m.validate();
  const net::ScenarioDocument doc = load_document(m);
  const scen::ScenarioSpec spec = eval_spec(doc, m);
  const fs::path dir = prepare_out_dir(m.out_dir);
  write_manifest(dir, m);
  BruteForceOutcome out;
  out.result = scen::brute_force(doc, spec, m.step, m.seeds, m.max_points, m.workers);
  const auto& r = out.result;
  if (r.offsets.front().size() == 2) {
    const auto& best = r.offsets[r.best];
    out.relative_offset = ((best[1] - best[0]) % r.cycle + r.cycle) % r.cycle;
  }
  {
    CsvWriter w((dir / "surface.csv").string(), "surface.csv");
    for (std::size_t i = 0; i < r.offsets.size(); ++i) {
      std::string o;
      for (int v : r.offsets[i]) o += (o.empty() ? "" : " ") + std::to_string(v);
      w << static_cast<long long>(i) << o << r.rewards[i];
      w.end_row();
    }
  }
  json best = {{"step", r.step},
               {"cycle", r.cycle},
               {"points", r.offsets.size()},
               {"offsets", r.offsets[r.best]},
               {"reward", r.rewards[r.best]},
               {"relative_offset", out.relative_offset ? json(*out.relative_offset) : json(nullptr)}};
  std::ofstream((dir / "best.json").string()) << best.dump(2) << '\n';
  return out;
}

std::vector<SweepLine> cmd_sweep(const RunManifest& m) {
  m.validate();
  const net::ScenarioDocument doc = load_document(m);
  RunManifest base_m = m;
  base_m.interval_min.reset();
  const scen::ScenarioSpec base = eval_spec(doc, base_m);
  std::vector<Seconds> intervals;
  for (int iv : m.sweep_intervals) intervals.push_back(iv * kMinute);
  const std::vector<scen::ScenarioSpec> specs = scen::interval_sweep(base, intervals);
  for (const auto& s : specs) s.validate(doc);
  const fs::path dir = prepare_out_dir(m.out_dir);
  write_manifest(dir, m);

  const PolicySource baseline(doc, base.label, "baseline");
  std::vector<SweepLine> lines;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const int iv = m.sweep_intervals[k];
    std::string policy = m.policy;
    if (!m.checkpoint_dir.empty()) {
      const fs::path ck = fs::path(m.checkpoint_dir) / ("interval_" + std::to_string(iv) + ".json");
      if (!fs::exists(ck)) {
        if (!m.train_missing) {
          throw ConfigError("--checkpoints", "missing checkpoint for the " + std::to_string(iv) + "-min interval: " +
                                                 ck.string());
        }
        RunManifest t = m;
        t.command = "train";
        t.periods.clear();
        t.interval_min = iv;
        t.out_dir = (dir / ("train_" + std::to_string(iv))).string();
        t.resume.clear();
        const TrainOutcome trained = cmd_train(t);
        fs::create_directories(ck.parent_path());
        fs::copy_file(trained.checkpoint_path, ck, fs::copy_options::overwrite_existing);
      }
      policy = "checkpoint:" + ck.string();
    }
    const PolicySource src(doc, base.label, policy);
    const EvalOutcome b = evaluate(doc, specs[k], baseline, m.seeds, m.workers);
    const EvalOutcome p = evaluate(doc, specs[k], src, m.seeds, m.workers);
    lines.push_back({base.label, iv, b.mean_delay, p.mean_delay, scen::percent_difference(b.mean_delay, p.mean_delay)});
    std::cerr << "sweep " << iv << " min: baseline " << b.mean_delay << " policy " << p.mean_delay << '\n';
  }
  {
    CsvWriter w((dir / "sweep.csv").string(), "sweep.csv");
    for (const auto& l : lines) {
      w << l.period << l.interval_min << l.baseline << l.policy << l.percent;
      w.end_row();
    }
  }
  {
    CsvWriter w((dir / "reference.csv").string(), "reference.csv");
    for (const auto& row : scen::table3_rows()) {
      w << std::string(row.period) << row.interval_min << row.baseline << row.deeprl << row.percent
        << scen::percent_difference(row.baseline, row.deeprl);
      w.end_row();
    }
  }
  return lines;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Offset coordination workbench: simulate, train and evaluate corridor signal offsets."};
  app.require_subcommand(1);

  RunManifest m;
  std::optional<std::string> seeds;
  std::vector<std::string> sets;
  std::optional<int> interval;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", m.scenario_path, "Scenario JSON document")->required();
    sub->add_option("--seed", seeds, "Seed list or range, e.g. 1-70 or 1,3,5");
    sub->add_option("--interval", interval, "Action interval in minutes");
    sub->add_option("--workers", m.workers, "Parallel workers (capped by CORRIDOR_RL_THREADS)");
    sub->add_option("--out", m.out_dir, "Output directory");
    sub->add_option("--period", m.periods, "Demand profile label(s)");
    sub->add_option("--set", sets, "Override, key=value (ppo.*, shared_trunk, hidden, runs, run_length_min, demand_pool, select_seeds, "
                                   "warm_up_min, sampling)");
  };

  auto* train = app.add_subcommand("train", "Train a PPO offset policy");
  common(train);
  train->add_option("--episodes", m.episodes, "Total episodes");
  train->add_option("--resume", m.resume, "Checkpoint to continue from");
  train->add_option("--checkpoint-every", m.checkpoint_every, "Updates between checkpoints");

  auto* eval = app.add_subcommand("eval", "Evaluate a policy over seeds");
  common(eval);
  eval->add_option("--policy", m.policy, "baseline | replay:NAME | checkpoint:PATH");
  eval->add_option("--perturbation", m.perturbations, "Named perturbation(s) from the scenario");

  auto* brute = app.add_subcommand("brute-force", "Grid-search constant offsets");
  common(brute);
  brute->add_option("--step", m.step, "Grid step in seconds");
  brute->add_option("--max-points", m.max_points, "Search-space cap");

  auto* sweep = app.add_subcommand("sweep", "Compare baseline and policy across action intervals");
  common(sweep);
  sweep->add_option("--policy", m.policy, "Policy used for every interval when no checkpoint dir is given");
  sweep->add_option("--checkpoints", m.checkpoint_dir, "Directory of interval_<min>.json checkpoints");
  sweep->add_flag("--train", m.train_missing, "Train missing interval checkpoints");
  sweep->add_option("--episodes", m.episodes, "Episodes per trained checkpoint");
  sweep->add_option("--intervals", m.sweep_intervals, "Intervals in minutes");

  auto* replay = app.add_subcommand("replay", "Replay a bundled offset schedule");
  common(replay);
  replay->add_option("--schedule", m.schedule, "Schedule name in the scenario document")->required();
  replay->add_option("--perturbation", m.perturbations, "Named perturbation(s) from the scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) m.command = sub->get_name();
    m.interval_min = interval;
    if (!seeds) seeds = m.command == "train" ? "1" : m.command == "brute-force" ? "1-3" : "1-70";
    m.seeds = parse_seeds(*seeds);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got '" + s + "'");
      m.overrides[s.substr(0, eq)] = parse_override_value(s.substr(eq + 1));
    }
    if (m.command == "train") {
      const TrainOutcome t = cmd_train(m);
      std::cout << "trained " << t.episodes << " episodes; checkpoint " << t.checkpoint_path << '\n';
    } else if (m.command == "eval" || m.command == "replay") {
      const EvalOutcome e = m.command == "eval" ? cmd_eval(m) : cmd_replay(m);
      std::cout << scenario_name(e.spec) << " " << e.policy << ": mean delay " << e.mean_delay << " s/km over "
                << e.runs.size() << " seeds\n";
    } else if (m.command == "brute-force") {
      const BruteForceOutcome b = cmd_brute_force(m);
      const auto& best = b.result.offsets[b.result.best];
      std::cout << "best offsets";
      for (int v : best) std::cout << ' ' << v;
      std::cout << " reward " << b.result.rewards[b.result.best];
      if (b.relative_offset) std::cout << " relative " << *b.relative_offset;
      std::cout << '\n';
    } else if (m.command == "sweep") {
      for (const auto& l : cmd_sweep(m)) {
        std::cout << l.period << ' ' << l.interval_min << " min: " << l.baseline << " vs " << l.policy << " ("
                  << l.percent << "%)\n";
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const RuntimeAbort& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace corridor::cli
