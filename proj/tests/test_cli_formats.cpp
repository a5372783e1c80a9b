#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vofml/cli.hpp"

using namespace vofml;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("vofml_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line;
}

}  // namespace

TEST(Parse, IntegerLists) {
  EXPECT_EQ(cli::parse_int_list("10,14,20,27"), (std::vector<int>{10, 14, 20, 27}));
  EXPECT_EQ(cli::parse_int_list("7"), (std::vector<int>{7}));
  EXPECT_THROW(cli::parse_int_list(""), cli::UsageError);
  EXPECT_THROW(cli::parse_int_list("10,,14"), cli::UsageError);
  EXPECT_THROW(cli::parse_int_list("10,x"), cli::UsageError);
  EXPECT_THROW(cli::parse_int_list("10,"), cli::UsageError);
  EXPECT_THROW(cli::parse_int_list("1.5"), cli::UsageError);
  EXPECT_THROW(cli::parse_mesh_list("10,2"), cli::UsageError);
}

TEST(Parse, CountsSchemesTargets) {
  EXPECT_EQ(cli::parse_counts("3000,6000,9000,6000"), (std::array<int, 4>{3000, 6000, 9000, 6000}));
  EXPECT_THROW(cli::parse_counts("1,2,3"), cli::UsageError);
  EXPECT_THROW(cli::parse_counts("1,2,3,-4"), cli::UsageError);
  EXPECT_EQ(cli::parse_scheme("uw"), SchemeKind::Upwind);
  EXPECT_EQ(cli::parse_scheme("ld"), SchemeKind::LimitedDownwind);
  EXPECT_EQ(cli::parse_scheme("vofml"), SchemeKind::Vofml);
  EXPECT_THROW(cli::parse_scheme("UW"), cli::UsageError);
  EXPECT_EQ(cli::parse_target("wrapped"), LossTarget::Wrapped);
  EXPECT_THROW(cli::parse_target("x"), cli::UsageError);
}

TEST(Commands, GenerateTrainEvaluate) {
  const auto dir = scratch_dir("pipeline");
  cli::GenDatasetOptions g;
  g.counts = {3, 3, 3, 1};
  g.seed = 11;
  g.out = (dir / "d.csv").string();
  std::ostringstream log;
  EXPECT_EQ(cli::gen_dataset(g, log), 0);
  EXPECT_EQ(first_line(g.out), dataset_header());
  const Dataset data = read_dataset(g.out);
  EXPECT_EQ(data.size(), 60u);
  EXPECT_NE(log.str().find("wrote 60 samples"), std::string::npos);

  cli::TrainOptions t;
  t.dataset = g.out;
  t.out = (dir / "w.txt").string();
  t.adam_epochs = 20;
  t.qn_steps = 5;
  t.seed = 3;
  t.report_every = 0;
  std::ostringstream tlog;
  EXPECT_EQ(cli::train_network(t, tlog), 0);
  const NetworkWeights w = read_weights(t.out);
  EXPECT_EQ(w.parameter_count(), 9151);

  // Scoring the same split reproduces the training report exactly.
  cli::EvalOptions e{t.out, g.out, t.seed};
  const auto m = cli::evaluate_network(e);
  const Split parts = split(data, 0.8, 0.1, t.seed);
  const auto direct = compare_schemes(w, parts.test);
  EXPECT_EQ(m.vofml.mse, direct.vofml.mse);
  EXPECT_EQ(m.limited_downwind.mae, direct.limited_downwind.mae);
  std::ostringstream elog;
  cli::eval_net(e, elog);
  for (const char* name : {"UW", "LD", "VOFML"}) EXPECT_NE(elog.str().find(name), std::string::npos);
  EXPECT_NE(tlog.str().find(elog.str()), std::string::npos);

  // Without a split seed the whole file is scored.
  e.split_seed.reset();
  EXPECT_EQ(cli::evaluate_network(e).upwind.mse, compare_schemes(w, data).upwind.mse);
  fs::remove_all(dir);
}

TEST(Commands, RunTestWritesReportsAndConvergenceReadsThem) {
  const auto dir = scratch_dir("runs");
  cli::RunTestOptions o;
  o.test = 2;
  o.scheme = SchemeKind::Upwind;
  o.nh = {6, 8, 10};
  o.out = dir.string();
  std::ostringstream log;
  const auto reports = cli::run_test(o, log);
  ASSERT_EQ(reports.size(), 3u);
  for (int n : o.nh) {
    const auto p = dir / history_filename(2, "uw", n);
    ASSERT_TRUE(fs::exists(p));
    EXPECT_EQ(first_line(p), "step,time,rmix,mass,max,min");
  }
  const auto summary = dir / summary_filename(2, "uw");
  EXPECT_EQ(first_line(summary), kSummaryHeader);
  const auto rows = read_summary_csv(summary);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].error, reports[2].error);

  std::ostringstream conv;
  EXPECT_EQ(cli::convergence_report(dir.string(), conv), 0);
  EXPECT_NE(conv.str().find("test 2 uw"), std::string::npos);
  EXPECT_NE(conv.str().find("rate"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Commands, Errors) {
  cli::RunTestOptions o;
  o.scheme = SchemeKind::Vofml;
  o.nh = {6};
  o.out = scratch_dir("errors").string();
  std::ostringstream log;
  EXPECT_THROW(cli::run_test(o, log), cli::UsageError);
  o.scheme = SchemeKind::Upwind;
  o.test = 4;
  EXPECT_THROW(cli::run_test(o, log), cli::UsageError);
  EXPECT_THROW(cli::convergence_report(o.out, log), cli::UsageError);
  cli::GenDatasetOptions g;
  g.beta_max = 1.5;
  EXPECT_THROW(cli::gen_dataset(g, log), cli::UsageError);
  fs::remove_all(o.out);
}
