#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "erl/experiment.hpp"
#include "erl/stats.hpp"
#include "mock_vlm_server.hpp"

using namespace erl;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "erlvlm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string f;
  while (std::getline(s, f, ',')) out.push_back(f);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

const std::vector<std::string> kQuick{"--episodes", "10", "--budget", "40", "--N", "20", "--K", "150"};

std::vector<std::string> quick(std::vector<std::string> args) {
  args.insert(args.end(), kQuick.begin(), kQuick.end());
  return args;
}

}  // namespace

TEST_CASE("presets map to their loss configurations") {
  auto e = preset_loss(Preset::Erlvlm);
  CHECK(e.kind == LossKind::MAE);
  CHECK(e.sampling == Sampling::Stratified);
  CHECK(e.class_weighting);
  auto v = preset_loss(Preset::VanillaRbrl);
  CHECK(v.kind == LossKind::CE);
  CHECK(v.sampling == Sampling::Uniform);
  CHECK_FALSE(v.class_weighting);
  auto m = preset_loss(Preset::NoMae);
  CHECK(m.kind == LossKind::CE);
  CHECK(m.sampling == Sampling::Stratified);
  CHECK(m.class_weighting);
  auto s = preset_loss(Preset::NoStratified);
  CHECK(s.kind == LossKind::MAE);
  CHECK(s.sampling == Sampling::Uniform);
  CHECK_FALSE(s.class_weighting);
  auto l = preset_loss(Preset::LabelSmooth);
  CHECK(l.kind == LossKind::CELabelSmooth);
  CHECK(l.smoothing_rate == 0.1);
  CHECK(l.sampling == Sampling::Stratified);
  CHECK(l.class_weighting);
  for (const auto& name : preset_names()) CHECK(preset_name(*parse_preset(name)) == name);
  CHECK_FALSE(parse_preset("bogus"));
  CHECK(parse_teacher("preference-synthetic") == TeacherKind::PreferenceSynthetic);
}

TEST_CASE("missing --task is a usage error listing the builtins") {
  auto r = cli({"--preset", "erlvlm"});
  CHECK(r.code != 0);
  for (const auto& name : builtin_task_names()) CHECK(r.err.find(name) != std::string::npos);
}

TEST_CASE("unknown presets, flags and tasks are rejected") {
  CHECK(cli({"--task", "gridnav8", "--preset", "nonsense"}).code != 0);
  CHECK(cli({"--task", "gridnav8", "--frobnicate", "1"}).code != 0);
  CHECK(cli({"--task", "gridnav8", "--teacher", "oracle"}).code != 0);
  auto r = cli({"--task", "no-such-task", "--out", ""});
  CHECK(r.code == 2);
  CHECK(r.err.find("gridnav8") != std::string::npos);
  CHECK(cli({"--task", "gridnav8", "--noise", "1.5"}).code != 0);
  CHECK(cli({"--task", "gridnav8", "--budget", "10", "--N", "50", "--out", ""}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("vlm teacher without endpoint is a configuration error") {
  ::unsetenv("VLM_ENDPOINT");
  auto r = cli({"--task", "gridnav8", "--teacher", "vlm", "--out", ""});
  CHECK(r.code == 2);
  CHECK(r.err.find("configuration error") != std::string::npos);
  CHECK(r.err.find("VLM_ENDPOINT") != std::string::npos);
}

TEST_CASE("three seeds write three metric files and a consistent summary") {
  const auto dir = fresh_dir("erl_cli_three_seeds");
  auto r = cli(quick({"--task", "gridnav8", "--preset", "erlvlm", "--seeds", "0,1,2", "--out",
                      dir.string()}));
  REQUIRE(r.code == 0);
  const auto root = dir / "erlvlm";
  std::vector<double> finals;
  std::string header;
  for (int s = 0; s < 3; ++s) {
    const auto csv = root / ("seed_" + std::to_string(s)) / "metrics.csv";
    REQUIRE(fs::exists(csv));
    const std::string text = slurp(csv);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (s == 0) header = line;
    CHECK(line == header);
    const std::size_t fields = split(line).size();
    std::string last;
    while (std::getline(in, line)) {
      CHECK(split(line).size() == fields);
      last = line;
    }
    finals.push_back(std::stod(split(last)[2]));
    CHECK(final_success_from_csv(text) == finals.back());
  }
  CHECK(header.rfind("step,episode,success_rate,reward_loss,n_class_0,n_class_1,n_class_2,", 0) == 0);

  const std::string summary = slurp(root / "summary.csv");
  std::istringstream in(summary);
  std::string head, row;
  std::getline(in, head);
  std::getline(in, row);
  CHECK(head == "preset,seeds,mean_final_success,std_final_success");
  const auto f = split(row);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "erlvlm");
  CHECK(f[1] == "3");
  // Recompute from the per-seed files with an independent mean / sample std.
  const double m = (finals[0] + finals[1] + finals[2]) / 3.0;
  double ss = 0.0;
  for (double v : finals) ss += (v - m) * (v - m);
  CHECK(std::stod(f[2]) == doctest::Approx(m).epsilon(1e-6));
  CHECK(std::stod(f[3]) == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-6));
  CHECK(summary == summary_csv(Preset::Erlvlm, finals));
  fs::remove_all(dir);
}

TEST_CASE("n-classes changes the count columns") {
  const auto dir = fresh_dir("erl_cli_n4");
  auto r = cli(quick({"--task", "open8", "--n-classes", "4", "--out", dir.string()}));
  REQUIRE(r.code == 0);
  const std::string text = slurp(dir / "erlvlm" / "seed_0" / "metrics.csv");
  CHECK(text.find("n_class_3,teacher_acc") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("preference runs and task files work from the command line") {
  const auto dir = fresh_dir("erl_cli_bt");
  const auto task = dir / "task.txt";
  fs::create_directories(dir);
  std::ofstream(task) << "width 5\nheight 5\nstart 0 0\ngoal 4 4\nwall 2 2\nmax_steps 30\n";
  auto r = cli(quick({"--task", task.string(), "--preset", "bt-preference", "--out", dir.string()}));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "bt-preference" / "summary.csv"));
  fs::remove_all(dir);
}

TEST_CASE("vlm teacher runs end to end against the mock endpoint") {
  erl::testing::MockVlmServer server(erl::testing::MockVlmServer::two_stage("[Average]"));
  ::setenv("VLM_ENDPOINT", server.endpoint().c_str(), 1);
  const auto dir = fresh_dir("erl_cli_vlm");
  auto r = cli({"--task", "adjacent", "--teacher", "vlm", "--episodes", "4", "--budget", "6",
                "--N", "3", "--K", "20", "--out", dir.string()});
  ::unsetenv("VLM_ENDPOINT");
  REQUIRE(r.code == 0);
  const std::string text = slurp(dir / "erlvlm" / "seed_0" / "metrics.csv");
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) last = line;
  const auto f = split(last);
  CHECK(std::stoul(f[f.size() - 2]) <= 6);
  CHECK(fs::exists(dir / "erlvlm" / "seed_0" / "vlm_cache.jsonl"));
  CHECK(server.calls() > 0);
  fs::remove_all(dir);
}
