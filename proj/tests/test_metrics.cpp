#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "roifcn/metrics.hpp"
#include "roifcn/tensor.hpp"

using roifcn::aggregate_report;
using roifcn::confusion_counts;
using roifcn::ConfusionCounts;
using roifcn::prf_dice;
using roifcn::PrfDice;
using roifcn::Report;
using roifcn::SliceMetrics;
using roifcn::Tensor;
using roifcn::write_curve_csv;
using roifcn::write_report_csv;

namespace {

Tensor<std::uint8_t> grid(const std::vector<std::string>& rows) {
  Tensor<std::uint8_t> m({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
  for (int i = 0; i < m.extent(0); ++i)
    for (int j = 0; j < m.extent(1); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == '1';
  return m;
}

SliceMetrics slice_with(std::string id, long long tp, long long fp, long long fn) {
  SliceMetrics s;
  s.slice_id = std::move(id);
  s.counts = ConfusionCounts{tp, fp, fn, 0};
  s.scores = prf_dice(s.counts);
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ConfusionCounts, CountsEachQuadrant) {
  const auto pred = grid({"110", "010"});
  const auto gt = grid({"100", "011"});
  const ConfusionCounts c = confusion_counts(pred, gt);
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.tn, 2);
}

TEST(ConfusionCounts, PerfectPrediction) {
  const auto m = grid({"101", "010"});
  const ConfusionCounts c = confusion_counts(m, m);
  EXPECT_EQ(c.tp, 3);
  EXPECT_EQ(c.fp, 0);
  EXPECT_EQ(c.fn, 0);
  EXPECT_EQ(c.tn, 3);
}

TEST(ConfusionCounts, AllNegative) {
  const ConfusionCounts c = confusion_counts(Tensor<std::uint8_t>({2, 3}),
                                             Tensor<std::uint8_t>({2, 3}));
  EXPECT_EQ(c.tp + c.fp + c.fn, 0);
  EXPECT_EQ(c.tn, 6);
}

TEST(ConfusionCounts, ShapeMismatchRejected) {
  EXPECT_THROW(confusion_counts(Tensor<std::uint8_t>({2, 3}), Tensor<std::uint8_t>({3, 2})),
               std::invalid_argument);
}

TEST(PrfDice, TwoTpOneFpOneFn) {
  const PrfDice r = prf_dice(ConfusionCounts{2, 1, 1, 10});
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.dice, 4.0 / 6.0, 1e-9);
}

TEST(PrfDice, PerfectScoresOne) {
  const PrfDice r = prf_dice(ConfusionCounts{5, 0, 0, 5});
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.dice, 1.0);
}

TEST(PrfDice, EmptyPredictionOnPositiveGtScoresZero) {
  const PrfDice r = prf_dice(ConfusionCounts{0, 0, 7, 100});
  EXPECT_DOUBLE_EQ(r.precision, 0.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.dice, 0.0);
}

TEST(PrfDice, AllEmptyAgreementScoresDiceOne) {
  const PrfDice r = prf_dice(ConfusionCounts{0, 0, 0, 100});
  EXPECT_DOUBLE_EQ(r.precision, 0.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.dice, 1.0);
}

TEST(PrfDice, DiceIsHarmonicMeanOfPrecisionAndRecall) {
  const ConfusionCounts c{7, 3, 5, 0};
  const PrfDice r = prf_dice(c);
  const double harmonic = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  EXPECT_NEAR(r.dice, harmonic, 1e-9);
}

TEST(AggregateReport, SingleSliceIsItsOwnMean) {
  const auto s = slice_with("a", 2, 1, 1);
  const Report rep = aggregate_report({s});
  EXPECT_NEAR(rep.mean_dice, 4.0 / 6.0, 1e-9);
  ASSERT_EQ(rep.curve.size(), 1u);
  EXPECT_EQ(rep.curve[0].slice_id, "a");
}

TEST(AggregateReport, UnweightedMeanOverAllSlices) {
  const std::vector<SliceMetrics> slices{slice_with("a", 1, 0, 0),   // dice 1
                                         slice_with("b", 1, 1, 1),   // dice 0.5
                                         slice_with("c", 0, 0, 3)};  // dice 0
  const Report rep = aggregate_report(slices);
  EXPECT_NEAR(rep.mean_dice, 0.5, 1e-9);
}

TEST(AggregateReport, EmptyGtSlicesEnterMeanButNotCurve) {
  const std::vector<SliceMetrics> slices{slice_with("pos", 1, 1, 1),
                                         slice_with("neg", 0, 0, 0)};  // empty gt, dice 1
  const Report rep = aggregate_report(slices);
  EXPECT_NEAR(rep.mean_dice, 0.75, 1e-9);
  ASSERT_EQ(rep.curve.size(), 1u);
  EXPECT_EQ(rep.curve[0].slice_id, "pos");
}

TEST(AggregateReport, CurveSortedAscendingByDice) {
  const std::vector<SliceMetrics> slices{slice_with("high", 9, 1, 1), slice_with("low", 1, 4, 4),
                                         slice_with("mid", 1, 1, 1)};
  const Report rep = aggregate_report(slices);
  ASSERT_EQ(rep.curve.size(), 3u);
  EXPECT_EQ(rep.curve[0].slice_id, "low");
  EXPECT_EQ(rep.curve[1].slice_id, "mid");
  EXPECT_EQ(rep.curve[2].slice_id, "high");
  for (std::size_t i = 1; i < rep.curve.size(); ++i)
    EXPECT_LE(rep.curve[i - 1].scores.dice, rep.curve[i].scores.dice);
}

TEST(AggregateReport, MeanInvariantToSliceOrder) {
  std::vector<SliceMetrics> slices{slice_with("a", 3, 2, 1), slice_with("b", 1, 0, 4),
                                   slice_with("c", 5, 5, 5)};
  const Report fwd = aggregate_report(slices);
  std::reverse(slices.begin(), slices.end());
  const Report rev = aggregate_report(slices);
  EXPECT_DOUBLE_EQ(fwd.mean_dice, rev.mean_dice);
  EXPECT_DOUBLE_EQ(fwd.mean_precision, rev.mean_precision);
  EXPECT_DOUBLE_EQ(fwd.mean_recall, rev.mean_recall);
}

TEST(AggregateReport, EmptyInputRejected) {
  EXPECT_THROW(aggregate_report({}), std::invalid_argument);
}

TEST(ReportCsv, ExactRowAndSummaryFormat) {
  const auto dir = std::filesystem::temp_directory_path() / "roifcn_test_report_csv";
  std::filesystem::create_directories(dir);
  const std::vector<SliceMetrics> slices{slice_with("img_0000", 2, 1, 1)};
  write_report_csv(dir / "report.csv", slices, aggregate_report(slices));
  const std::string text = read_file(dir / "report.csv");
  EXPECT_NE(text.find("slice_id,precision,recall,dice\n"), std::string::npos);
  EXPECT_NE(text.find("img_0000,0.666667,0.666667,0.666667\n"), std::string::npos);
  EXPECT_NE(text.find("#mean,0.666667,0.666667,0.666667\n"), std::string::npos);
}

TEST(CurveCsv, RanksFromZeroInAscendingDiceOrder) {
  const auto dir = std::filesystem::temp_directory_path() / "roifcn_test_curve_csv";
  std::filesystem::create_directories(dir);
  const std::vector<SliceMetrics> slices{slice_with("good", 9, 1, 1), slice_with("bad", 1, 4, 4)};
  write_curve_csv(dir / "curve.csv", aggregate_report(slices));
  const std::string text = read_file(dir / "curve.csv");
  EXPECT_NE(text.find("rank,slice_id,dice\n"), std::string::npos);
  EXPECT_NE(text.find("0,bad,0.200000\n"), std::string::npos);
  EXPECT_NE(text.find("1,good,0.900000\n"), std::string::npos);
}
