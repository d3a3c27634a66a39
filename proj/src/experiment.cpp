#include "erl/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "erl/stats.hpp"
#include "erl/teacher.hpp"
#include "erl/vlm_teacher.hpp"

namespace erl {

namespace {

constexpr std::pair<Preset, std::string_view> kPresets[] = {
    {Preset::Erlvlm, "erlvlm"},
    {Preset::VanillaRbrl, "vanilla-rbrl"},
    {Preset::NoMae, "no-mae"},
    {Preset::NoStratified, "no-stratified"},
    {Preset::LabelSmooth, "label-smooth"},
    {Preset::BtPreference, "bt-preference"},
};

constexpr std::pair<TeacherKind, std::string_view> kTeachers[] = {
    {TeacherKind::Synthetic, "synthetic"},
    {TeacherKind::Vlm, "vlm"},
    {TeacherKind::PreferenceSynthetic, "preference-synthetic"},
};

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

}  // namespace

std::string_view preset_name(Preset p) {
  for (const auto& [k, v] : kPresets)
    if (k == p) return v;
  return "?";
}

std::optional<Preset> parse_preset(std::string_view name) {
  for (const auto& [k, v] : kPresets)
    if (v == name) return k;
  return std::nullopt;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.second);
  return out;
}

std::string_view teacher_name(TeacherKind t) {
  for (const auto& [k, v] : kTeachers)
    if (k == t) return v;
  return "?";
}

std::optional<TeacherKind> parse_teacher(std::string_view name) {
  for (const auto& [k, v] : kTeachers)
    if (v == name) return k;
  return std::nullopt;
}

LossConfig preset_loss(Preset p) {
  LossConfig c;
  switch (p) {
    case Preset::Erlvlm:
    case Preset::BtPreference:
      break;
    case Preset::VanillaRbrl:
      c.kind = LossKind::CE;
      c.sampling = Sampling::Uniform;
      c.class_weighting = false;
      break;
    case Preset::NoMae:
      c.kind = LossKind::CE;
      break;
    case Preset::NoStratified:
      c.sampling = Sampling::Uniform;
      c.class_weighting = false;
      break;
    case Preset::LabelSmooth:
      c.kind = LossKind::CELabelSmooth;
      c.smoothing_rate = 0.1;
      break;
  }
  return c;
}

LoopConfig default_loop_config() {
  LoopConfig c;
  c.total_episodes = 300;
  c.K = 500;
  c.N = 50;
  c.budget = 600;
  c.warmup_queries = 100;
  return c;
}

GridNavTask resolve_task(const std::string& name_or_path) {
  const auto names = builtin_task_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return builtin_task(name_or_path);
  if (std::filesystem::is_regular_file(name_or_path)) return load_task(name_or_path);
  throw std::invalid_argument("unknown task '" + name_or_path +
                              "'; builtin tasks: " + join(names));
}

double final_success_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, last;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  if (last.empty()) throw std::invalid_argument("metrics CSV has no data rows");
  std::istringstream row(last);
  std::string field;
  for (int i = 0; i < 3; ++i) std::getline(row, field, ',');
  return std::stod(field);
}

std::string summary_csv(Preset preset, const std::vector<double>& final_success) {
  return fmt::format("preset,seeds,mean_final_success,std_final_success\n{},{},{:.6f},{:.6f}\n",
                     preset_name(preset), final_success.size(), mean(final_success),
                     stddev(final_success));
}

namespace {

SeedRun run_seed(const ExperimentConfig& config, const GridNavTask& task, std::uint64_t seed,
                 const std::filesystem::path& dir) {
  LoopConfig loop = config.loop;
  loop.seed = seed;
  loop.reference.n_classes = config.n_classes;
  loop.reference.thresholds = default_thresholds(config.n_classes);
  loop.reference.noise_rate = config.noise;
  loop.reference.seed = seed;

  TrainConfig train = config.train;
  train.loss = preset_loss(config.preset);
  train.seed = seed;

  const bool preferences =
      config.preset == Preset::BtPreference || config.teacher == TeacherKind::PreferenceSynthetic;
  loop.mode = preferences ? FeedbackMode::Preferences : FeedbackMode::Ratings;

  if (!dir.empty()) std::filesystem::create_directories(dir);
  RunState state(task, loop);
  std::unique_ptr<RatingTeacher> rater;
  std::unique_ptr<SyntheticPreferenceTeacher> comparer;
  if (preferences) {
    comparer = std::make_unique<SyntheticPreferenceTeacher>(loop.preference_margin, config.noise,
                                                            seed ^ 0x5a5a);
  } else if (config.teacher == TeacherKind::Vlm) {
    VlmConfig vc;
    vc.n_classes = config.n_classes;
    vc.class_names = default_class_names(config.n_classes);
    vc.budget = loop.budget;
    if (!dir.empty()) vc.cache_path = (dir / "vlm_cache.jsonl").string();
    vc = vlm_config_from_env(vc);
    rater = std::make_unique<VlmRatingTeacher>(std::make_shared<VlmTeacher>(vc));
  } else {
    TeacherConfig tc = loop.reference;
    tc.seed = seed ^ 0xa5a5;
    rater = std::make_unique<SyntheticRatingTeacher>(tc);
  }

  SeedRun run;
  run.seed = seed;
  run.log = run_training(state, rater.get(), comparer.get(), loop, train);
  run.csv = to_csv(run.log);
  if (!dir.empty()) {
    run.csv_path = (dir / "metrics.csv").string();
    std::ofstream f(run.csv_path, std::ios::binary);
    f << run.csv;
    if (!f) throw std::runtime_error("cannot write " + run.csv_path);
  }
  return run;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (config.n_classes < 2) throw std::invalid_argument("n-classes must be >= 2");
  if (!(config.noise >= 0.0 && config.noise < 1.0))
    throw std::invalid_argument("noise must lie in [0, 1)");
  if (config.teacher == TeacherKind::Vlm && config.preset == Preset::BtPreference)
    throw std::invalid_argument("the bt-preference preset needs a preference teacher");
  if (config.teacher == TeacherKind::Vlm) vlm_config_from_env({});
  const GridNavTask task = resolve_task(config.task);

  const std::filesystem::path root =
      config.out.empty() ? std::filesystem::path{}
                         : std::filesystem::path(config.out) / std::string(preset_name(config.preset));
  std::vector<std::future<SeedRun>> futures;
  for (std::uint64_t seed : config.seeds) {
    const auto dir = root.empty() ? root : root / fmt::format("seed_{}", seed);
    futures.push_back(std::async(std::launch::async, run_seed, std::cref(config),
                                 std::cref(task), seed, dir));
  }
  ExperimentResult result;
  for (auto& f : futures) result.runs.push_back(f.get());

  std::vector<double> finals;
  for (const SeedRun& r : result.runs) finals.push_back(final_success_from_csv(r.csv));
  result.mean_final_success = mean(finals);
  result.std_final_success = stddev(finals);
  if (!root.empty()) {
    result.summary_path = (root / "summary.csv").string();
    std::ofstream f(result.summary_path, std::ios::binary);
    f << summary_csv(config.preset, finals);
    if (!f) throw std::runtime_error("cannot write " + result.summary_path);
  }
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rating-based reward learning experiments on grid navigation tasks"};
  ExperimentConfig config;
  std::string teacher = "synthetic";
  std::string preset = "erlvlm";
  std::vector<std::uint64_t> seeds{0};
  std::string task;

  app.add_option("--task", task, "builtin task (" + join(builtin_task_names()) + ") or task file");
  app.add_option("--teacher", teacher, "synthetic | vlm | preference-synthetic")
      ->check(CLI::IsMember({"synthetic", "vlm", "preference-synthetic"}));
  app.add_option("--preset", preset, join(preset_names()))->check(CLI::IsMember(preset_names()));
  app.add_option("--n-classes", config.n_classes, "number of rating classes")
      ->check(CLI::Range(2, 10));
  app.add_option("--noise", config.noise, "synthetic teacher corruption rate")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--budget", config.loop.budget, "total teacher queries");
  app.add_option("--K", config.loop.K, "environment steps between feedback sessions");
  app.add_option("--N", config.loop.N, "queries per feedback session");
  app.add_option("--seeds", seeds, "comma separated seeds")->delimiter(',');
  app.add_option("--out", config.out, "output directory")->default_val("runs");
  app.add_option("--segment-len", config.loop.segment_len, "steps per rated segment");
  app.add_option("--episodes", config.loop.total_episodes, "training episodes per seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (task.empty()) {
    err << "error: --task is required; builtin tasks: " << join(builtin_task_names()) << "\n"
        << app.help();
    return 2;
  }
  config.task = task;
  config.teacher = *parse_teacher(teacher);
  config.preset = *parse_preset(preset);
  config.seeds = seeds;

  try {
    const ExperimentResult r = run_experiment(config);
    for (const SeedRun& s : r.runs)
      out << fmt::format("seed {}: final success {:.2f} ({} queries, {} dropped) -> {}\n", s.seed,
                         s.log.final_success(), s.log.budget_used, s.log.dropped_queries,
                         s.csv_path);
    out << fmt::format("{}: {:.3f} +- {:.3f} over {} seeds -> {}\n", preset_name(config.preset),
                       r.mean_final_success, r.std_final_success, r.runs.size(), r.summary_path);
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace erl
