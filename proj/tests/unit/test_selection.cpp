#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "penlik/error.hpp"
#include "penlik/selection.hpp"

using namespace penlik;

namespace {

AssumptionConstants bounded_constants(double epsilon, double lm)
{
    AssumptionConstants c;
    c.regime = Regime::Bounded;
    c.epsilon = epsilon;
    c.lipschitz = lm;
    c.diameter = 1.0;
    return c;
}

AssumptionConstants unbounded_constants(double tail, double lm)
{
    AssumptionConstants c;
    c.regime = Regime::Unbounded;
    c.tail_scale = tail;
    c.lipschitz = lm;
    c.diameter = 1.0;
    return c;
}

} // namespace

TEST(Penalty, BoundedReferenceValue)
{
    const auto c = bounded_constants(std::exp(-2.0), 1.0);
    EXPECT_DOUBLE_EQ(c.scale(), 5.0);
    const PenaltySpec spec{Regime::Bounded, 1.0, 1.0, 100};
    EXPECT_NEAR(penalty_bounded(c, 3, spec), 81.928263547763237, 1e-10);
    EXPECT_NEAR(penalty_bounded(c, 6, spec), 2.0 * penalty_bounded(c, 3, spec), 1e-10);
}

TEST(Penalty, UnboundedReferenceValue)
{
    const auto c = unbounded_constants(1.0, 1.0);
    const PenaltySpec spec{Regime::Unbounded, 1.0, 1.0, 3};
    EXPECT_NEAR(penalty_unbounded(c, 1, spec), 5.9491338092075514, 1e-12);
    EXPECT_NEAR(penalty_unbounded(c, 2, spec) / penalty_unbounded(c, 1, spec), 2.0, 1e-14);
}

TEST(Penalty, UnboundedNondecreasingInTailScale)
{
    const PenaltySpec spec{Regime::Unbounded, 0.5, 1.0, 1000};
    double previous = 0.0;
    for (double b = 1.0; b <= 20.0; b += 0.5) {
        const double value = penalty_unbounded(unbounded_constants(b, 1.0), 4, spec);
        EXPECT_GE(value, previous);
        previous = value;
    }
}

TEST(Penalty, RegimeMismatchThrows)
{
    const PenaltySpec spec{Regime::Bounded, 1.0, 1.0, 100};
    EXPECT_THROW(static_cast<void>(penalty_bounded(unbounded_constants(1.0, 1.0), 1, spec)), RegimeMismatch);
    EXPECT_THROW(static_cast<void>(penalty_unbounded(bounded_constants(0.1, 1.0), 1, spec)), RegimeMismatch);
}

TEST(Penalty, HomogeneousInConstantAndKappa)
{
    const auto c = bounded_constants(0.05, 3.0);
    const PenaltySpec base{Regime::Bounded, 0.5, 0.2, 500};
    PenaltySpec scaled = base;
    scaled.c_constant = 0.2 * 7.0;
    EXPECT_NEAR(penalty(c, 5, scaled), 7.0 * penalty(c, 5, base), 1e-12 * penalty(c, 5, scaled));
    PenaltySpec doubled = base;
    doubled.kappa = 1.0;
    EXPECT_NEAR(penalty(c, 5, doubled), 0.5 * penalty(c, 5, base), 1e-12 * penalty(c, 5, base));
}

TEST(Penalty, SpecValidation)
{
    EXPECT_THROW((PenaltySpec{Regime::Bounded, 0.0, 1.0, 10}.validate()), InvalidArgument);
    EXPECT_THROW((PenaltySpec{Regime::Bounded, 1.5, 1.0, 10}.validate()), InvalidArgument);
    EXPECT_THROW((PenaltySpec{Regime::Bounded, 0.5, 0.0, 10}.validate()), InvalidArgument);
    EXPECT_THROW((PenaltySpec{Regime::Bounded, 0.5, 1.0, 1}.validate()), InvalidArgument);
}

TEST(Sigma, ReferenceValueAndResidual)
{
    const double sigma = sigma_fixed_point(5.0, 100, 3, 1e-12);
    EXPECT_NEAR(sigma, 8.1952541500629721, 1e-8);
    EXPECT_LE(std::abs(sigma_residual(sigma, 5.0, 100, 3)), 1e-8);
}

TEST(Sigma, MatchesGridScan)
{
    const double a = 5.0;
    const std::size_t n = 100;
    const std::size_t d = 3;
    const double v = a * std::sqrt(2.0 * n);
    // Sign change of the residual on a fine grid, then halving to 1e-9.
    double lo = 1e-6;
    double hi = 10.0 * v;
    const int points = 200000;
    double prev = lo;
    for (int i = 1; i <= points; ++i) {
        const double s = lo + (hi - lo) * i / points;
        if (sigma_residual(s, a, n, d) > 0.0) {
            hi = s;
            lo = prev;
            break;
        }
        prev = s;
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (sigma_residual(mid, a, n, d) > 0.0 ? hi : lo) = mid;
    }
    EXPECT_NEAR(sigma_fixed_point(a, n, d), 0.5 * (lo + hi), 1e-8);
}

TEST(Sigma, ResidualStrictlyIncreasing)
{
    // sigma - rhs(sigma) with rhs non-increasing.
    for (double s = 0.01; s < 500.0; s *= 1.1) EXPECT_LT(sigma_residual(s, 4.0, 1000, 5), sigma_residual(s * 1.1, 4.0, 1000, 5));
}

TEST(Sigma, DominatingSolutionBracket)
{
    for (double a : {1.0, 2.0, 10.0, 100.0})
        for (std::size_t n : {2u, 50u, 10000u})
            for (std::size_t d : {1u, 4u, 30u}) {
                const double s = sigma_dominating(a, n, d);
                const double root = std::sqrt(a * (d + 1.0));
                EXPECT_GE(s, root * (1.0 - 1e-9));
                EXPECT_LE(s, 2.0 * root * std::log(std::max(n * a, std::exp(1.0))) * (1.0 + 1e-9));
                EXPECT_LE(sigma_fixed_point(a, n, d), s * (1.0 + 1e-9));
            }
}

TEST(Complexity, ReferenceValues)
{
    std::vector<ModelSummary> nested;
    for (std::size_t d = 1; d <= 10; ++d) nested.push_back({"h" + std::to_string(d), d, bounded_constants(std::exp(-2.0), 1.0)});
    const ComplexitySum sum = complexity_sum(nested);
    EXPECT_NEAR(sum.value, 0.9366128521007504, 1e-14);
    nested.push_back({"h50", 50, bounded_constants(std::exp(-2.0), 1.0)});
    EXPECT_LT(std::abs(complexity_sum(nested).value - sum.value), 1e-20);
    EXPECT_FALSE(complexity_sum(nested).tail_warning);
}

TEST(Complexity, SingleModelWithScaleE)
{
    AssumptionConstants c = unbounded_constants(1.0, std::exp(1.0) - 1.0);
    const std::vector<ModelSummary> one{{"m", 1, c}};
    EXPECT_NEAR(complexity_sum(one).value, std::exp(-1.0), 1e-15);
}

TEST(Selection, PicksSmallestCriterion)
{
    std::vector<SelectionRow> rows(2);
    rows[0] = {"a", 1, {}, -0.5, 0.1, 0.0};
    rows[1] = {"b", 2, {}, -0.4, 0.3, 0.0};
    const SelectionReport report = select_by_criterion(rows);
    EXPECT_EQ(report.selected, 0u);
    EXPECT_NEAR(report.rows[0].criterion, 0.6, 1e-15);
    EXPECT_NEAR(report.rows[1].criterion, 0.7, 1e-15);
}

TEST(Selection, TieGoesToSmallerDimension)
{
    std::vector<SelectionRow> rows(2);
    rows[0] = {"z", 3, {}, -0.5, 0.1, 0.0};
    rows[1] = {"a", 2, {}, -0.5, 0.1, 0.0};
    const SelectionReport report = select_by_criterion(rows);
    EXPECT_EQ(report.selected_row().dim, 2u);
    EXPECT_TRUE(report.tie_break_applied);
}

TEST(Selection, ShiftInvarianceAndEmptyList)
{
    std::vector<SelectionRow> rows{{"a", 1, {}, -1.0, 0.2, 0}, {"b", 2, {}, -1.3, 0.4, 0}, {"c", 3, {}, -1.1, 0.05, 0}};
    const std::size_t chosen = select_by_criterion(rows).selected;
    for (auto& r : rows) r.mean_log_likelihood += 17.0;
    EXPECT_EQ(select_by_criterion(rows).selected, chosen);
    EXPECT_THROW(static_cast<void>(select_by_criterion({})), EmptyModelList);
    const std::vector<SelectionRow> single{{"only", 4, {}, -2.0, 0.1, 0}};
    const SelectionReport report = select_by_criterion(single);
    EXPECT_EQ(report.selected, 0u);
    EXPECT_NEAR(report.rows[0].criterion, 2.1, 1e-15);
}

namespace {

ReplicationOutcome toy_outcome(double fitted_small, double fitted_big)
{
    ReplicationOutcome rep;
    rep.n = 1000;
    rep.models.push_back({{"small", 1, bounded_constants(0.1, 1.0)}, -0.50, fitted_small, fitted_small});
    rep.models.push_back({{"big", 4, bounded_constants(0.1, 1.0)}, -0.49, fitted_big, 0.001});
    return rep;
}

} // namespace

TEST(OracleInequality, SingleWellSpecifiedModel)
{
    ReplicationOutcome rep;
    rep.n = 500;
    rep.models.push_back({{"m", 2, bounded_constants(0.1, 1.0)}, -0.3, 0.01, 0.01});
    const InequalityCheck check = evaluate_oracle_inequality(rep, {Regime::Bounded, 0.5, 1e-6, 500}, 3.0);
    EXPECT_FALSE(check.violated);
    EXPECT_NEAR(check.lhs, 0.005, 1e-15);
    EXPECT_NEAR(check.rhs, 1.5 * 0.01 + 2.0 * check.penalties[0] + 2.0 * check.residuals[0], 1e-15);
}

TEST(Calibration, CoverageMonotoneAndSmallestConstant)
{
    std::vector<ReplicationOutcome> reps;
    for (int i = 0; i < 40; ++i) reps.push_back(toy_outcome(0.02 + 0.001 * i, 0.01));
    const Vector grid{1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    const CalibrationResult result = calibrate_constant(reps, Regime::Bounded, 0.5, grid, std::log(20.0));
    for (std::size_t i = 1; i < result.curve.size(); ++i) EXPECT_GE(result.curve[i].coverage, result.curve[i - 1].coverage);
    const auto first = std::find_if(result.curve.begin(), result.curve.end(), [](const auto& p) { return p.coverage >= 0.95; });
    ASSERT_NE(first, result.curve.end());
    EXPECT_EQ(result.c_constant, first->c_constant);

    const Vector singleton{result.c_constant};
    EXPECT_EQ(calibrate_constant(reps, Regime::Bounded, 0.5, singleton, std::log(20.0)).c_constant, result.c_constant);
    const Vector zeros{0.0};
    EXPECT_THROW(static_cast<void>(calibrate_constant(reps, Regime::Bounded, 0.5, zeros, std::log(20.0))), CalibrationFailed);
}

TEST(FailureBudget, Formula)
{
    EXPECT_NEAR(failure_budget(Regime::Bounded, 100, 0.5, 2.0), 18.0 * std::log(100.0) * 0.5 * std::exp(-2.0), 1e-15);
    EXPECT_NEAR(failure_budget(Regime::Unbounded, 100, 0.5, 2.0), 18.0 * std::log(100.0) * 0.5 * std::exp(-2.0) + 0.02, 1e-15);
}
