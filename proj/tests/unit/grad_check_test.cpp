#include <gtest/gtest.h>

#include "diststn/grad_check.hpp"
#include "diststn/gradcheck_suite.hpp"
#include "diststn/errors.hpp"
#include "diststn/ops.hpp"

namespace diststn {
namespace {

// y = 3x on the forward pass, but the backward claims dy/dx = 2.
Tensor wrong_triple(Tape& tape, const Tensor& x) {
  Tensor out = x.clone();
  for (double& v : out.data()) v *= 3.0;
  if (tape.wants({&x})) {
    tape.record("wrong_triple", {x}, out, [x, out]() {
      std::vector<double> g(out.grad().begin(), out.grad().end());
      for (double& v : g) v *= 2.0;
      x.accumulate_grad(g);
    });
  }
  return out;
}

TEST(GradCheck, PassesCorrectGradient) {
  ScalarFunction fn = [](Tape& t, const std::vector<Tensor>& in) { return reduce_mean(t, mul(t, in[0], in[1])); };
  const auto report = grad_check(fn, {Tensor::vector({0.3, -0.7}), Tensor::vector({1.1, 0.4})}, {});
  EXPECT_TRUE(report.passed()) << report.summary();
  EXPECT_EQ(report.checked, 4u);
  EXPECT_LT(report.max_rel_error, 1e-8);
}

TEST(GradCheck, CatchesWrongGradient) {
  ScalarFunction fn = [](Tape& t, const std::vector<Tensor>& in) { return reduce_mean(t, wrong_triple(t, in[0])); };
  const auto report = grad_check(fn, {Tensor::vector({0.3, -0.7, 2.0})}, {});
  EXPECT_FALSE(report.passed());
  EXPECT_EQ(report.failures.size(), 3u);
  EXPECT_NEAR(report.failures[0].analytic, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(report.failures[0].numeric, 1.0, 1e-8);
}

TEST(GradCheck, ExcludesKinkCoordinates) {
  // relu at exactly 0: one-sided slopes 0 and 1 disagree by more than the
  // analytic/numeric gap, so the coordinate is a kink, not a failure.
  ScalarFunction fn = [](Tape& t, const std::vector<Tensor>& in) { return reduce_mean(t, relu(t, in[0])); };
  const auto report = grad_check(fn, {Tensor::vector({0.0, 0.5})}, {});
  EXPECT_TRUE(report.passed()) << report.summary();
  ASSERT_EQ(report.excluded.size(), 1u);
  EXPECT_EQ(report.excluded[0].index, 0u);
}

TEST(GradCheck, SubsamplesCoordinates) {
  ScalarFunction fn = [](Tape& t, const std::vector<Tensor>& in) { return reduce_mean(t, mul(t, in[0], in[0])); };
  GradCheckOptions o;
  o.max_coords_per_input = 5;
  const auto report = grad_check(fn, {Tensor({40}, 0.5)}, o);
  EXPECT_EQ(report.checked, 5u);
  EXPECT_TRUE(report.passed());
}

class Suite : public ::testing::TestWithParam<GradScope> {};

TEST_P(Suite, EveryCheckPasses) {
  const auto results = run_gradcheck_suite(GetParam());
  ASSERT_FALSE(results.empty());
  for (const auto& r : results) {
    EXPECT_TRUE(r.report.passed()) << r.name << ": " << r.report.summary();
    EXPECT_GT(r.report.checked, 0u) << r.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Scopes, Suite, ::testing::Values(GradScope::kOps, GradScope::kStn, GradScope::kModel),
                         [](const auto& info) { return to_string(info.param); });

TEST(Suite, ScopeNames) {
  EXPECT_EQ(parse_grad_scope("stn"), GradScope::kStn);
  EXPECT_EQ(to_string(GradScope::kModel), "model");
  EXPECT_THROW(parse_grad_scope("everything"), InvalidArgument);
}

}  // namespace
}  // namespace diststn
