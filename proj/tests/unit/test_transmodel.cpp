#include "microsa/error.hpp"
#include "microsa/mnl.hpp"
#include "microsa/synthesis.hpp"
#include "microsa/transmodel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace microsa;

namespace {

// Natural cubic spline columns written out from the textbook definition.
std::vector<double> reference_spline(double x, const std::vector<double>& knots, double scale) {
    auto pos3 = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    const std::size_t K = knots.size();
    const double u = x / scale;
    const double kK = knots[K - 1] / scale;
    auto d = [&](std::size_t k) {
        const double kk = knots[k] / scale;
        return (pos3(u - kk) - pos3(u - kK)) / (kK - kk);
    };
    std::vector<double> cols{u};
    for (std::size_t k = 0; k + 2 < K; ++k) {
        cols.push_back(d(k) - d(K - 2));
    }
    return cols;
}

std::vector<double> reference_row(const CovariateInput& x, Complexity tier) {
    std::vector<double> r{1.0};
    for (double v : reference_spline(x.age, {25, 35, 45, 55, 65}, 10.0)) {
        r.push_back(v);
    }
    if (tier == Complexity::low) {
        return r;
    }
    r.push_back(*x.birth_event ? 1.0 : 0.0);
    r.push_back(*x.citizenship == Citizenship::foreign ? 1.0 : 0.0);
    r.push_back(*x.immigrant ? 1.0 : 0.0);
    for (double v : reference_spline(*x.immigrant ? *x.years_since_immigration : 0.0, {2, 5, 10}, 1.0)) {
        r.push_back(v);
    }
    r.push_back(*x.education == Education::medium ? 1.0 : 0.0);
    r.push_back(*x.education == Education::high ? 1.0 : 0.0);
    r.push_back(*x.care_status == CareStatus::receiving_care ? 1.0 : 0.0);
    if (tier == Complexity::medium) {
        return r;
    }
    r.push_back(*x.partnership == Partnership::partnered_cohabiting ? 1.0 : 0.0);
    r.push_back(*x.partnership == Partnership::married_cohabiting ? 1.0 : 0.0);
    r.push_back(*x.n_children);
    if (*x.n_children > 0) {
        for (double v : reference_spline(*x.age_youngest_child, {2, 5, 10}, 1.0)) {
            r.push_back(v);
        }
    } else {
        r.push_back(0.0);
        r.push_back(0.0);
    }
    return r;
}

Probabilities reference_probs(const std::vector<double>& beta, const std::vector<double>& row) {
    const std::size_t p = row.size();
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        e1 += beta[j] * row[j];
        e2 += beta[p + j] * row[j];
    }
    const double den = 1.0 + std::exp(e1) + std::exp(e2);
    return {1.0 / den, std::exp(e1) / den, std::exp(e2) / den};
}

CovariateInput random_covariates(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> age(15, 74), ysi(0, 30), kids(0, 3), kid_age(0, 17), three(0, 2), two(0, 1);
    CovariateInput x;
    x.sex = two(rng) ? Sex::male : Sex::female;
    x.previous = static_cast<Employment>(three(rng));
    x.age = age(rng);
    x.birth_event = two(rng) == 1;
    x.citizenship = two(rng) ? Citizenship::foreign : Citizenship::national;
    x.immigrant = two(rng) == 1;
    x.years_since_immigration = *x.immigrant ? std::min(ysi(rng), x.age) : 0;
    x.education = static_cast<Education>(three(rng));
    x.care_status = two(rng) ? CareStatus::receiving_care : CareStatus::none;
    x.partnership = static_cast<Partnership>(three(rng));
    x.n_children = kids(rng);
    if (*x.n_children > 0) {
        x.age_youngest_child = kid_age(rng);
    }
    return x;
}

FittedModel random_mnl(Complexity tier, std::mt19937_64& rng, double sd = 0.5) {
    std::normal_distribution<double> z(0.0, sd);
    FittedModel m;
    m.spec = {ModelType::mnl, tier, Period::period_A};
    const std::size_t q = 2 * design_size(tier);
    m.mnl.resize(n_blocks);
    for (auto& b : m.mnl) {
        b.beta.resize(q);
        for (auto& v : b.beta) {
            v = z(rng);
        }
        b.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
    }
    return m;
}

// Intercept plus standard-normal columns; outcomes drawn from the true logit.
mnl::Data simulate_mnl(const Eigen::VectorXd& theta, std::size_t p, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    mnl::Data d;
    d.x.resize(n, static_cast<Eigen::Index>(p));
    d.y.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d.x(i, 0) = 1.0;
        for (std::size_t j = 1; j < p; ++j) {
            d.x(i, static_cast<Eigen::Index>(j)) = z(rng);
        }
        const double e1 = d.x.row(i).dot(theta.head(static_cast<Eigen::Index>(p)));
        const double e2 = d.x.row(i).dot(theta.tail(static_cast<Eigen::Index>(p)));
        const double den = 1.0 + std::exp(e1) + std::exp(e2);
        const double r = u(rng);
        d.y[static_cast<std::size_t>(i)] = r < 1.0 / den ? 0 : r < (1.0 + std::exp(e1)) / den ? 1 : 2;
    }
    return d;
}

Survey synthetic_survey(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> outcome(0, 2);
    Survey s;
    for (int i = 0; i < n; ++i) {
        SurveyRecord r;
        r.person_id = i;
        r.covariates = random_covariates(rng);
        r.outcome = static_cast<Employment>(outcome(rng));
        s.push_back(r);
    }
    return s;
}

} // namespace

TEST(Mnl, InterceptOnlyClosedForm) {
    mnl::Data d;
    d.x = Eigen::MatrixXd::Ones(1000, 1);
    for (int i = 0; i < 1000; ++i) {
        d.y.push_back(i < 600 ? 0 : i < 900 ? 1 : 2);
    }
    const auto fit = mnl::fit(d, FitOptions{}, "intercept");
    EXPECT_NEAR(fit.theta(0), std::log(0.3 / 0.6), 1e-8);
    EXPECT_NEAR(fit.theta(1), std::log(0.1 / 0.6), 1e-8);
}

TEST(Mnl, ScoreMatchesFiniteDifferences) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 0.4);
    Eigen::VectorXd truth(8);
    for (int j = 0; j < 8; ++j) {
        truth(j) = z(rng);
    }
    const mnl::Data d = simulate_mnl(truth, 4, 500, rng);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd theta(8);
        for (int j = 0; j < 8; ++j) {
            theta(j) = z(rng);
        }
        const Eigen::VectorXd g = mnl::score(d, theta);
        for (int j = 0; j < 8; ++j) {
            const double h = 1e-5;
            Eigen::VectorXd a = theta, b = theta;
            a(j) += h;
            b(j) -= h;
            const double fd = (mnl::log_likelihood(d, a) - mnl::log_likelihood(d, b)) / (2 * h);
            EXPECT_LT(std::abs(g(j) - fd) / std::max(1.0, std::abs(g(j))), 1e-6);
        }
    }
}

TEST(Mnl, MaximumLikelihoodBeatsGeneratingCoefficients) {
    std::mt19937_64 rng(5);
    Eigen::VectorXd truth(6);
    truth << -1.0, 0.5, -0.3, -0.5, 0.2, 0.4;
    for (int rep = 0; rep < 10; ++rep) {
        const mnl::Data d = simulate_mnl(truth, 3, 2000, rng);
        const auto fit = mnl::fit(d, FitOptions{}, "sim");
        EXPECT_GE(fit.log_likelihood, mnl::log_likelihood(d, truth) - 1e-6);
        EXPECT_LT(mnl::score(d, fit.theta).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Mnl, CoverageOnSmallRecoveryStudy) {
    std::mt19937_64 rng(8);
    Eigen::VectorXd truth(6);
    truth << -1.0, 0.5, -0.3, -0.5, 0.2, 0.4;
    int covered = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        const auto fit = mnl::fit(simulate_mnl(truth, 3, 5000, rng), FitOptions{}, "sim");
        bool ok = true;
        for (int j = 0; j < 6; ++j) {
            ok = ok && std::abs(fit.theta(j) - truth(j)) <= 3.0 * std::sqrt(fit.covariance(j, j));
        }
        covered += ok ? 1 : 0;
    }
    EXPECT_GE(covered, reps - 2);
}

TEST(Mnl, RankDeficiencyNamesBlock) {
    mnl::Data d;
    d.x = Eigen::MatrixXd::Ones(100, 2);
    for (int i = 0; i < 100; ++i) {
        d.y.push_back(i % 3);
    }
    try {
        mnl::fit(d, FitOptions{}, "female/employed");
        FAIL() << "expected EstimationError";
    } catch (const EstimationError& e) {
        EXPECT_NE(std::string(e.what()).find("female/employed"), std::string::npos);
    }
}

TEST(Mnl, SeparationIsEstimationError) {
    mnl::Data d;
    d.x.resize(200, 2);
    d.columns = {"intercept", "flag"};
    for (int i = 0; i < 200; ++i) {
        d.x(i, 0) = 1.0;
        d.x(i, 1) = i < 50 ? 1.0 : 0.0;
        d.y.push_back(i < 50 ? 0 : i % 3);
    }
    EXPECT_THROW(mnl::fit(d, FitOptions{}, "b"), EstimationError);
}

TEST(Mnl, IterationCapIsConvergenceError) {
    std::mt19937_64 rng(1);
    Eigen::VectorXd truth(4);
    truth << -0.5, 0.3, -0.2, 0.1;
    FitOptions opts;
    opts.max_iterations = 1;
    EXPECT_THROW(mnl::fit(simulate_mnl(truth, 2, 1000, rng), opts, "b"), ConvergenceError);
}

TEST(PredictProbs, ZeroCoefficientsAreUniform) {
    std::mt19937_64 rng(1);
    FittedModel m = random_mnl(Complexity::high, rng);
    for (auto& b : m.mnl) {
        std::fill(b.beta.begin(), b.beta.end(), 0.0);
    }
    const Probabilities p = predict_probs(m, point_estimate(m), random_covariates(rng));
    for (double v : p) {
        EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
}

TEST(PredictProbs, MatchesIndependentEvaluator) {
    std::mt19937_64 rng(2);
    for (Complexity tier : {Complexity::low, Complexity::medium, Complexity::high}) {
        const FittedModel m = random_mnl(tier, rng);
        const CoefficientDraw draw = point_estimate(m);
        for (int i = 0; i < 2000; ++i) {
            const CovariateInput x = random_covariates(rng);
            const Probabilities p = predict_probs(m, draw, x);
            const auto& beta = m.mnl[static_cast<std::size_t>(block_index(x.sex, x.previous))].beta;
            const Probabilities q = reference_probs(beta, reference_row(x, tier));
            double sum = 0.0;
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(p[c], q[c], 1e-12);
                EXPECT_GE(p[c], 0.0);
                sum += p[c];
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(PredictProbs, IneligibleAgeAndMissingCovariates) {
    std::mt19937_64 rng(3);
    const FittedModel m = random_mnl(Complexity::medium, rng);
    CovariateInput x = random_covariates(rng);
    x.age = 14;
    EXPECT_THROW(predict_probs(m, point_estimate(m), x), SpecificationError);
    x.age = 40;
    x.education.reset();
    EXPECT_THROW(predict_probs(m, point_estimate(m), x), SpecificationError);
}

TEST(PredictProbs, TierNesting) {
    std::mt19937_64 rng(4);
    const FittedModel low = random_mnl(Complexity::low, rng);
    FittedModel high = random_mnl(Complexity::high, rng);
    const std::size_t pl = design_size(Complexity::low), ph = design_size(Complexity::high);
    for (std::size_t b = 0; b < low.mnl.size(); ++b) {
        std::fill(high.mnl[b].beta.begin(), high.mnl[b].beta.end(), 0.0);
        for (std::size_t j = 0; j < pl; ++j) {
            high.mnl[b].beta[j] = low.mnl[b].beta[j];
            high.mnl[b].beta[ph + j] = low.mnl[b].beta[pl + j];
        }
    }
    for (int i = 0; i < 500; ++i) {
        const CovariateInput x = random_covariates(rng);
        const Probabilities a = predict_probs(low, point_estimate(low), x);
        const Probabilities b = predict_probs(high, point_estimate(high), x);
        for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(a[c], b[c]);
        }
    }
}

TEST(SampleCoefficients, ZeroCovarianceReturnsBeta) {
    std::mt19937_64 rng(5);
    const FittedModel m = random_mnl(Complexity::low, rng);
    const auto draws = sample_coefficients(m, 10, 99);
    ASSERT_EQ(draws.size(), 11u);
    for (const auto& d : draws) {
        for (std::size_t b = 0; b < m.mnl.size(); ++b) {
            EXPECT_EQ(d.beta[b], m.mnl[b].beta);
        }
    }
}

TEST(SampleCoefficients, ScalarNormalMoments) {
    FittedModel m;
    m.spec = {ModelType::mnl, Complexity::low, Period::period_A};
    m.mnl.resize(n_blocks);
    for (auto& b : m.mnl) {
        b.beta.assign(10, 0.0);
        b.covariance = Eigen::MatrixXd::Zero(10, 10);
    }
    m.mnl[0].beta[0] = 2.0;
    m.mnl[0].covariance(0, 0) = 0.25;
    const auto draws = sample_coefficients(m, 10000, 2024);
    double mean = 0.0, sq = 0.0;
    for (int d = 1; d <= 10000; ++d) {
        mean += draws[static_cast<std::size_t>(d)].beta[0][0];
        EXPECT_EQ(draws[static_cast<std::size_t>(d)].beta[0][1], 0.0);
    }
    mean /= 10000.0;
    for (int d = 1; d <= 10000; ++d) {
        const double v = draws[static_cast<std::size_t>(d)].beta[0][0] - mean;
        sq += v * v;
    }
    const double var = sq / 9999.0;
    EXPECT_NEAR(mean, 2.0, 2.0 * 0.5 / 100.0);
    EXPECT_NEAR(var, 0.25, 0.05 * 0.25);
    EXPECT_EQ(draws[0].beta[0][0], 2.0);
}

TEST(SampleCoefficients, DeterministicAndIndependentOfCount) {
    std::mt19937_64 rng(6);
    FittedModel m = random_mnl(Complexity::low, rng);
    for (auto& b : m.mnl) {
        b.covariance = 0.01 * Eigen::MatrixXd::Identity(10, 10);
    }
    const auto a = sample_coefficients(m, 5, 1);
    const auto b = sample_coefficients(m, 5, 1);
    const auto c = sample_coefficients(m, 3, 1);
    for (std::size_t d = 0; d < a.size(); ++d) {
        EXPECT_EQ(a[d].beta, b[d].beta);
    }
    for (std::size_t d = 0; d < c.size(); ++d) {
        EXPECT_EQ(a[d].beta, c[d].beta);
        EXPECT_EQ(coefficient_draw(m, static_cast<int>(d), 1).beta, a[d].beta);
    }
    EXPECT_NE(a[1].beta, sample_coefficients(m, 5, 2)[1].beta);
}

TEST(SampleCoefficients, NonPsdCovarianceIsNumericalError) {
    std::mt19937_64 rng(7);
    FittedModel m = random_mnl(Complexity::low, rng);
    m.mnl[2].covariance(3, 3) = -1.0;
    EXPECT_THROW(sample_coefficients(m, 1, 1), NumericalError);
}

TEST(SampleCoefficients, DrawZeroNeverPerturbs) {
    std::mt19937_64 rng(8);
    FittedModel m = random_mnl(Complexity::medium, rng);
    for (auto& b : m.mnl) {
        b.covariance = 0.2 * Eigen::MatrixXd::Identity(26, 26);
    }
    const CoefficientDraw d0 = sample_coefficients(m, 2, 5)[0];
    for (int i = 0; i < 200; ++i) {
        const CovariateInput x = random_covariates(rng);
        EXPECT_EQ(predict_probs(m, d0, x), predict_probs(m, point_estimate(m), x));
    }
}

TEST(RateTable, SmoothedCellShares) {
    Survey s;
    CovariateInput x;
    x.sex = Sex::female;
    x.previous = Employment::employed;
    x.age = 32;
    const int counts[3] = {6, 3, 1};
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < counts[k]; ++i) {
            s.push_back(SurveyRecord{i, 0, 2015, x, static_cast<Employment>(k)});
        }
    }
    const FittedModel m = fit_rate_table(s, {ModelType::rate_table, Complexity::low, Period::period_A});
    const Probabilities p = predict_probs(m, point_estimate(m), x);
    EXPECT_DOUBLE_EQ(p[0], 7.0 / 13.0);
    EXPECT_DOUBLE_EQ(p[1], 4.0 / 13.0);
    EXPECT_DOUBLE_EQ(p[2], 2.0 / 13.0);
    CovariateInput unseen = x;
    unseen.age = 60;
    for (double v : predict_probs(m, point_estimate(m), unseen)) {
        EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
    }
}

TEST(RateTable, MatchesGroupByCount) {
    std::mt19937_64 rng(9);
    const Survey s = synthetic_survey(20000, rng);
    for (Complexity tier : {Complexity::low, Complexity::medium, Complexity::high}) {
        const FittedModel m = fit_rate_table(s, {ModelType::rate_table, tier, Period::period_B});
        using Key = std::tuple<int, int, int, int, int, int, bool>;
        auto key = [&](const CovariateInput& x) {
            const int age_bin = (x.age - 15) / 5;
            return Key{static_cast<int>(x.sex), static_cast<int>(x.previous), age_bin,
                       tier == Complexity::low ? 0 : static_cast<int>(*x.education),
                       tier == Complexity::low ? 0 : static_cast<int>(*x.citizenship), 0,
                       tier == Complexity::high && *x.partnership != Partnership::single};
        };
        std::map<Key, std::array<int, 3>> groups;
        for (const auto& r : s) {
            groups[key(r.covariates)][static_cast<std::size_t>(r.outcome)] += 1;
        }
        for (int i = 0; i < 300; ++i) {
            const CovariateInput x = s[static_cast<std::size_t>(i)].covariates;
            const auto& g = groups[key(x)];
            const double total = g[0] + g[1] + g[2] + 3.0;
            const Probabilities p = predict_probs(m, point_estimate(m), x);
            for (int c = 0; c < 3; ++c) {
                EXPECT_DOUBLE_EQ(p[c], (g[c] + 1.0) / total);
            }
        }
    }
}

TEST(RateTable, EmptySurveyIsEstimationError) {
    EXPECT_THROW(fit_rate_table({}, {ModelType::rate_table, Complexity::low, Period::period_A}), EstimationError);
    EXPECT_THROW(fit_mnl({}, {ModelType::mnl, Complexity::low, Period::period_A}), EstimationError);
}

TEST(FitMnl, TooFewObservationsNamesBlock) {
    std::mt19937_64 rng(10);
    Survey s = synthetic_survey(60, rng);
    try {
        fit_mnl(s, {ModelType::mnl, Complexity::low, Period::period_A});
        FAIL() << "expected EstimationError";
    } catch (const EstimationError& e) {
        EXPECT_NE(std::string(e.what()).find("mnl_low_period_A"), std::string::npos);
    }
}

TEST(FitMnl, RecoversGroundTruthOnSimulatedSurvey) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 0.3);
    FittedModel truth = random_mnl(Complexity::low, rng, 0.3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Survey s;
    for (int i = 0; i < 60000; ++i) {
        SurveyRecord r;
        r.covariates = random_covariates(rng);
        const Probabilities p = predict_probs(truth, point_estimate(truth), r.covariates);
        const double v = u(rng);
        r.outcome = v < p[0] ? Employment::employed : v < p[0] + p[1] ? Employment::unemployed : Employment::inactive;
        s.push_back(r);
    }
    const FittedModel fit = fit_mnl(s, truth.spec);
    int outside = 0, total = 0;
    for (std::size_t b = 0; b < fit.mnl.size(); ++b) {
        const auto& blk = fit.mnl[b];
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.covariance);
        EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
        EXPECT_LT((blk.covariance - blk.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        for (std::size_t j = 0; j < blk.beta.size(); ++j) {
            const double se = std::sqrt(blk.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
            outside += std::abs(blk.beta[j] - truth.mnl[b].beta[j]) > 3.0 * se ? 1 : 0;
            ++total;
        }
    }
    EXPECT_LE(outside, 2) << "of " << total;
}

TEST(Survey, CensusAndSubsetProperties) {
    SynthConfig c;
    c.districts = {{1, "a", 3000, 0.1, {0.3, 0.5, 0.2}, {0.0, 0.0}}};
    const Population prev = synthesize_base(c, 1);
    Population cur = prev;
    cur.set_year(prev.year() + 1);
    const Survey full = build_survey(prev, cur, 1.0, 3);
    std::size_t eligible = 0;
    for (const Individual& p : cur.individuals()) {
        eligible += p.employment != Employment::not_eligible ? 1 : 0;
    }
    EXPECT_EQ(full.size(), eligible);

    const Survey part = build_survey(prev, cur, 0.3, 3);
    std::set<PersonId> seen;
    for (const auto& r : part) {
        EXPECT_TRUE(seen.insert(r.person_id).second);
        EXPECT_NE(cur.find_person(r.person_id), nullptr);
    }
    const Survey again = build_survey(prev, cur, 0.3, 3);
    ASSERT_EQ(again.size(), part.size());
    for (std::size_t i = 0; i < part.size(); ++i) {
        EXPECT_EQ(again[i].person_id, part[i].person_id);
    }
    EXPECT_THROW(build_survey(prev, cur, 0.0, 1), ConfigError);
    EXPECT_THROW(build_survey(prev, cur, 1.5, 1), ConfigError);
}

TEST(Survey, SampleSizeIsRoundedFraction) {
    Population pop(2015, {District{1, "d", 0}});
    for (int h = 0; h < 100000; ++h) {
        Individual p;
        p.age = 30;
        p.employment = Employment::employed;
        pop.add_person(p, pop.add_household(1));
    }
    const Survey s = build_survey(pop, pop, 0.007, 5);
    std::set<HouseholdId> households;
    for (const auto& r : s) {
        households.insert(r.household_id);
    }
    EXPECT_EQ(households.size(), 700u);
}

TEST(ModelIo, RoundTripIsExact) {
    std::mt19937_64 rng(12);
    FittedModel m = random_mnl(Complexity::medium, rng);
    for (auto& b : m.mnl) {
        b.covariance = 0.1 * Eigen::MatrixXd::Identity(26, 26);
    }
    std::ostringstream out;
    write_model(out, m);
    std::istringstream in(out.str());
    const FittedModel back = read_model(in);
    std::ostringstream again;
    write_model(again, back);
    EXPECT_EQ(out.str(), again.str());
    EXPECT_EQ(back.spec, m.spec);
    EXPECT_EQ(back.mnl[3].beta, m.mnl[3].beta);
}
