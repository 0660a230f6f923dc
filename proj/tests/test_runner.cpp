#include "bec/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace bec;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("bec_runner_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.grid.N = 64;
  c.time.T_end = 0.02;
  c.time.sample_interval = 2e-3;
  c.output_dir = out.string();
  return c;
}

RunConfig concentration_config(const fs::path& out) {
  RunConfig c = small_config(out);
  ConcentrationProfile q;
  q.base = ConstantProfile{1.0};
  q.theta = 1.45;
  c.initial = q;
  return c;
}

}  // namespace

TEST(RunSingle, ConstantDataIsQuiet) {
  TempDir tmp;
  auto c = small_config(tmp.path());
  c.initial = ConstantProfile{2.0};
  const auto a = run_single(c);
  EXPECT_TRUE(a.events.empty());
  for (const auto& r : a.trajectory.records) {
    EXPECT_NEAR(r.sup_norm, 2.0, 1e-13);
    EXPECT_NEAR(r.mass, a.initial_mass, 1e-13 * a.initial_mass);
  }
  EXPECT_TRUE(fs::exists(a.directory / "config"));
  EXPECT_TRUE(fs::exists(a.directory / "events.json"));
  EXPECT_EQ(a.directory.filename().string(), a.run_id);
  EXPECT_FALSE(a.snapshots.empty());
  EXPECT_EQ(a.snapshots.front().filename().string(), "000000.txt");
  EXPECT_EQ(slurp(a.directory / "config"), echo_config(c));
  const auto csv = slurp(a.trajectory_csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), trajectory_header());
  const auto ev = nlohmann::json::parse(slurp(a.directory / "events.json"));
  EXPECT_TRUE(ev["completed"].get<bool>());
  EXPECT_TRUE(ev["events"].empty());
}

TEST(RunSingle, TrajectoryIsReproducible) {
  TempDir one, two;
  auto c = small_config(one.path());
  c.initial = BumpProfile{0.5, 0.25, 1.0, 1.0};
  const auto a = run_single(c);
  c.output_dir = two.path().string();
  const auto b = run_single(c);
  EXPECT_EQ(a.run_id, b.run_id);
  EXPECT_EQ(slurp(a.trajectory_csv), slurp(b.trajectory_csv));
  ASSERT_FALSE(a.oracle_reports.empty());
  EXPECT_EQ(slurp(a.oracle_reports.front()), slurp(b.oracle_reports.front()));
}

TEST(RunSingle, InadmissibleConfigThrows) {
  TempDir tmp;
  auto c = small_config(tmp.path());
  c.parameters.alpha = 5.0;
  EXPECT_THROW(run_single(c), AdmissibilityError);
  EXPECT_TRUE(fs::is_empty(tmp.path()));
}

TEST(KSweep, InitialMomentIncreasesWithK) {
  TempDir tmp;
  auto c = concentration_config(tmp.path());
  c.grid.N = 256;
  c.time.T_end = 1e-4;
  c.time.sample_interval = 5e-5;
  const std::vector<std::int64_t> ks{1, 2, 4, 8, 16};
  const auto r = run_k_sweep(c, ks);
  ASSERT_EQ(r.members.size(), ks.size());
  double prev = -1.0;
  for (const auto& m : r.members) {
    ASSERT_TRUE(m.ok()) << m.error;
    EXPECT_GT(m.artifacts->initial_moment, prev);
    prev = m.artifacts->initial_moment;
  }
  const auto table = slurp(r.table);
  EXPECT_EQ(table.substr(0, table.find('\n')), "k,run_id,status,initial_moment,initial_mass,blowup_time,trigger");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
  EXPECT_TRUE(fs::exists(r.directory / "config"));
}

TEST(KSweep, NeedsConcentrationProfile) {
  TempDir tmp;
  const auto c = small_config(tmp.path());
  EXPECT_THROW(run_k_sweep(c, {2}), std::invalid_argument);
}

TEST(EpsStudy, RelativeMassChangeAgrees) {
  TempDir tmp;
  auto c = small_config(tmp.path());
  c.initial = BumpProfile{0.5, 0.25, 1.0, 1.0};
  const auto r = run_eps_study(c, {1e-2, 1e-3});
  ASSERT_EQ(r.members.size(), 2u);
  double changes[2];
  for (int i = 0; i < 2; ++i) {
    ASSERT_TRUE(r.members[i].ok()) << r.members[i].error;
    const auto& t = r.members[i].artifacts->trajectory;
    changes[i] = (t.records.back().mass - t.records.front().mass) / t.records.front().mass;
  }
  EXPECT_NEAR(changes[0], changes[1], 1e-8);
  EXPECT_TRUE(fs::exists(r.table));
}

TEST(EpsStudy, FailingMemberIsIsolated) {
  TempDir tmp;
  auto c = small_config(tmp.path());
  c.initial = BumpProfile{0.5, 0.25, 1.0, 1.0};
  const auto r = run_eps_study(c, {1e-3, 10.0, 1e-2});
  ASSERT_EQ(r.members.size(), 3u);
  EXPECT_TRUE(r.members[0].ok());
  EXPECT_FALSE(r.members[1].ok());
  EXPECT_FALSE(r.members[1].error.empty());
  EXPECT_TRUE(r.members[2].ok());

  // Siblings match stand-alone runs.
  TempDir solo;
  auto alone = with_epsilon(c, 1e-2);
  alone.output_dir = solo.path().string();
  const auto s = run_single(alone);
  EXPECT_EQ(slurp(s.trajectory_csv), slurp(r.members[2].artifacts->trajectory_csv));

  const auto table = slurp(r.table);
  EXPECT_NE(table.find("failed:"), std::string::npos);
}

TEST(Bisect, DegenerateBracketRejected) {
  TempDir tmp;
  auto c = concentration_config(tmp.path());
  c.time.T_end = 1e-4;
  c.time.sample_interval = 5e-5;
  c.thresholds.supnorm_threshold = 1e6;
  try {
    bisect_blowup_threshold(c, 1, 4);
    FAIL() << "expected BracketError";
  } catch (const BracketError& e) {
    EXPECT_NE(std::string(e.what()).find("bracket invalid"), std::string::npos);
  }
}

TEST(Bisect, FindsThresholdK) {
  TempDir tmp;
  auto c = concentration_config(tmp.path());
  c.time.T_end = 1e-4;
  c.time.sample_interval = 5e-5;
  c.thresholds.supnorm_threshold = 20.0;  // 1 + k^1.45 crosses it between k = 7 and 8
  const auto r = bisect_blowup_threshold(c, 1, 16);
  ASSERT_GT(r.k_star, 1);
  bool below = false, at = false;
  for (const auto& p : r.probes) {
    if (p.k == r.k_star - 1) {
      below = true;
      EXPECT_FALSE(p.event);
    }
    if (p.k == r.k_star) {
      at = true;
      EXPECT_TRUE(p.event);
    }
  }
  EXPECT_TRUE(below);
  EXPECT_TRUE(at);
  EXPECT_EQ(r.k_star, 8);

  const auto direct = simulate(with_k(c, r.k_star));
  EXPECT_NEAR(r.M_estimate, direct.initial_moment, 1e-14 * direct.initial_moment);
  EXPECT_GT(r.B, 0.0);
  EXPECT_GE(r.D, 0.0);
  const auto table = slurp(r.table);
  EXPECT_NE(table.find("# k_star 8"), std::string::npos);
  EXPECT_NE(table.find("# M_estimate"), std::string::npos);
}
