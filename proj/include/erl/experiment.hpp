#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erl/agent.hpp"
#include "erl/rating_core.hpp"

namespace erl {

enum class TeacherKind { Synthetic, Vlm, PreferenceSynthetic };
enum class Preset { Erlvlm, VanillaRbrl, NoMae, NoStratified, LabelSmooth, BtPreference };

std::string_view preset_name(Preset p);
std::optional<Preset> parse_preset(std::string_view name);
std::vector<std::string> preset_names();
std::string_view teacher_name(TeacherKind t);
std::optional<TeacherKind> parse_teacher(std::string_view name);

/// The loss, sampling and weighting each preset stands for. bt-preference
/// keeps the erlvlm values; its loss is never used.
LossConfig preset_loss(Preset p);

/// Scaled-down loop defaults used by the command line.
LoopConfig default_loop_config();

struct ExperimentConfig {
  std::string task;  // builtin name or path to a task file
  TeacherKind teacher = TeacherKind::Synthetic;
  Preset preset = Preset::Erlvlm;
  int n_classes = 3;
  double noise = 0.2;
  std::vector<std::uint64_t> seeds{0};
  std::string out;  // empty: nothing is written
  LoopConfig loop = default_loop_config();
  TrainConfig train;
};

struct SeedRun {
  std::uint64_t seed = 0;
  RunLog log;
  std::string csv;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;
  double mean_final_success = 0.0;
  double std_final_success = 0.0;
  std::string summary_path;
};

GridNavTask resolve_task(const std::string& name_or_path);

/// Runs every seed concurrently and writes <out>/<preset>/seed_<s>/metrics.csv
/// and <out>/<preset>/summary.csv.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Final success rates as they appear in the per-seed CSVs.
double final_success_from_csv(const std::string& csv);
std::string summary_csv(Preset preset, const std::vector<double>& final_success);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace erl
