#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fht/io.hpp>
#include <fht/models.hpp>

using namespace fht;

namespace {

TrajectoryRecord three_samples(bool with_c) {
  TrajectoryRecord r;
  r.labels = {"sx"};
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.time = 0.01 * i;
    s.expectations = {0.24 - 0.01 * i};
    s.dispersions = {0.1924};
    s.q = 1.0;
    s.p = 1.0 + i;
    s.gamma = 0.1924;
    if (with_c) s.concurrence = 0.5;
    r.samples.push_back(s);
  }
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) {
    const std::string s = format_number(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
}

TEST(WriteTrajectory, ThreeSamplesGiveFourRows) {
  const auto l = lines(trajectory_text(three_samples(false), {}));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "t,sx,Delta_sx,q,p,Gamma");
  EXPECT_EQ(l[1], "0,0.24,0.1924,1,1,0.1924");
}

TEST(WriteTrajectory, ConfigLineAndDelimiter) {
  const auto l = lines(trajectory_text(three_samples(true), {'\t', R"({"a":1})"}));
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l[0], R"(# config: {"a":1})");
  EXPECT_EQ(l[1], "t\tsx\tDelta_sx\tq\tp\tGamma\tC");
}

TEST(WriteConcurrence, TwoColumns) {
  const auto l = lines(concurrence_text(three_samples(true), {}));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "t,C");
  EXPECT_EQ(l[2], "0.01,0.5");
  EXPECT_THROW(concurrence_text(three_samples(false), {}), DimensionError);
}

TEST(WriteFile, FailureNamesThePath) {
  const std::string path = "/nonexistent-dir/x/out.csv";
  try {
    write_file(path, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
}

TEST(WriteFile, WritesContent) {
  const auto path = std::filesystem::temp_directory_path() / "fht_io_test.txt";
  write_file(path.string(), "abc\n");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "abc");
  std::filesystem::remove(path);
}

TEST(SummaryJson, Fields) {
  SpinMeasurementParams p;
  p.omega_q = 0.0;
  const auto m = spin_measurement_model(p);
  const auto plus = from_complex<2>(ComplexVector<2>(1.0, 1.0) / kSqrt2);
  const auto e = run_ensemble(m, HybridState<2>{plus, {1.0, 1.0}, 0.0}, 3, 1.5, 1e-3, 4);
  const auto j = summary_json(e.stats, e.records, e.errors, {{"k", 1}});
  EXPECT_EQ(j["config"]["k"], 1);
  EXPECT_EQ(j["master_seed"], 4);
  EXPECT_EQ(j["n_paths"], 3);
  EXPECT_EQ(j["branch_counts"]["+0.5"], 3);
  EXPECT_EQ(j["unconverged"], 0);
  EXPECT_EQ(j["paths"].size(), 3u);
  EXPECT_EQ(j["paths"][1]["stream"], 1);
  EXPECT_TRUE(j["errors"].empty());
  EXPECT_EQ(branch_label(std::nullopt), "unconverged");
  EXPECT_EQ(branch_label(-0.5), "-0.5");
}
