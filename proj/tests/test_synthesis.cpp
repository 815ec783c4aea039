#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cosparse/errors.hpp"
#include "cosparse/synthesis.hpp"

#include <cmath>
#include <random>

using cosparse::Matrix;
using cosparse::SynthesisControls;

namespace {

Matrix random_nonneg(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * unif(rng);
    return m;
}

Matrix rank1_nonneg(Eigen::Index d, Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    Eigen::VectorXd u(d), v(n);
    for (Eigen::Index i = 0; i < d; ++i) u(i) = unif(rng);
    for (Eigen::Index j = 0; j < n; ++j) v(j) = unif(rng);
    return 3.0 * u * v.transpose();
}

// brute-force elementwise reference for the objective
double objective_ref(const Matrix& x, const Matrix& d, const Matrix& z, double lambda) {
    Matrix r = x - d * z;
    double fid = 0.0, l1 = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j) fid += r(i, j) * r(i, j);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) l1 += std::abs(z(i, j));
    return fid + lambda * l1;
}

}  // namespace

TEST_CASE("synthesis_objective matches a brute-force reference") {
    std::mt19937_64 rng(11);
    Matrix x = random_nonneg(9, 6, rng, 2.0);
    Matrix d = random_nonneg(9, 4, rng, 1.0);
    Matrix z = random_nonneg(4, 6, rng, 1.5);
    double got = cosparse::synthesis_objective(x, d, z, 0.37);
    double want = objective_ref(x, d, z, 0.37);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
}

TEST_CASE("nonneg_sparse_code output is nonnegative and descends monotonically") {
    std::mt19937_64 rng(5);
    for (int inst = 0; inst < 6; ++inst) {
        Matrix d = random_nonneg(10, 4, rng, 1.0);
        d.array() -= 0.5;  // mixed-sign dictionary
        Matrix x = random_nonneg(10, 7, rng, 2.0);
        std::vector<double> trace;
        Matrix z = cosparse::nonneg_sparse_code(d, x, 0.2, 300, 1e-12, &trace);
        CHECK((z.array() >= 0.0).all());
        REQUIRE(trace.size() >= 2);
        for (std::size_t k = 1; k < trace.size(); ++k)
            CHECK(trace[k] <= trace[k - 1] * (1.0 + 1e-10) + 1e-12);
    }
}

TEST_CASE("nonneg_sparse_code on a zero aggregate stays exactly zero") {
    std::mt19937_64 rng(6);
    Matrix d = random_nonneg(8, 3, rng, 1.0);
    Matrix x = Matrix::Zero(8, 4);
    Matrix z = cosparse::nonneg_sparse_code(d, x, 0.1, 100, 1e-12);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_synthesis on zero data returns zero codes and zero objective") {
    SynthesisControls c;
    auto r = cosparse::train_synthesis(Matrix::Zero(8, 4), c);
    CHECK(r.codes.cwiseAbs().maxCoeff() == 0.0);
    for (double f : r.objective) CHECK(f == 0.0);
}

TEST_CASE("train_synthesis with identity init and lambda 0 reaches zero fidelity") {
    std::mt19937_64 rng(7);
    Matrix x = random_nonneg(10, 5, rng, 1.0);
    x.array() += 0.2;
    SynthesisControls c;
    c.atoms = 10;
    c.lambda = 0.0;
    c.basis_init = Matrix::Identity(10, 10);
    c.max_outer = 60;
    auto r = cosparse::train_synthesis(x, c);
    CHECK((x - r.dict.basis * r.codes).norm() / x.norm() <= 1e-6);
}

TEST_CASE("train_synthesis trace is monotone and ends below its start on rank-1 data") {
    std::mt19937_64 rng(3);
    for (int inst = 0; inst < 4; ++inst) {
        Matrix x = rank1_nonneg(10, 5, rng);
        SynthesisControls c;
        c.seed = 100 + inst;
        auto r = cosparse::train_synthesis(x, c);
        REQUIRE(r.objective.size() >= 2);
        CHECK(r.objective.back() <= r.objective.front());
        for (std::size_t k = 1; k < r.objective.size(); ++k)
            CHECK(r.objective[k] <= r.objective[k - 1] * (1.0 + 1e-10));
    }
}

TEST_CASE("train_synthesis keeps unit-norm atoms and nonnegative codes") {
    std::mt19937_64 rng(9);
    Matrix x = random_nonneg(12, 8, rng, 2.0);
    SynthesisControls c;
    auto r = cosparse::train_synthesis(x, c);
    for (Eigen::Index j = 0; j < r.dict.basis.cols(); ++j)
        CHECK(std::abs(r.dict.basis.col(j).norm() - 1.0) <= 1e-12);
    CHECK((r.codes.array() >= 0.0).all());
}

TEST_CASE("train_synthesis is deterministic per seed") {
    std::mt19937_64 rng(13);
    Matrix x = random_nonneg(9, 6, rng, 1.5);
    SynthesisControls c;
    c.seed = 42;
    auto a = cosparse::train_synthesis(x, c);
    auto b = cosparse::train_synthesis(x, c);
    CHECK((a.dict.basis - b.dict.basis).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.codes - b.codes).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_synthesis_set packages per-appliance runs with the synthesis tag") {
    std::mt19937_64 rng(17);
    std::vector<Matrix> xs = {random_nonneg(10, 6, rng, 2.0), random_nonneg(10, 6, rng, 1.0)};
    SynthesisControls c;
    auto art = cosparse::train_synthesis_set(xs, c, {"a", "b"});
    CHECK(art.model == "synthesis");
    REQUIRE(art.dicts.size() == 2);
    CHECK(art.dicts[0].appliance_id == "a");
    CHECK(art.dicts[0].op.rows() == 10);  // slots x atoms under the synthesis tag
    CHECK(art.dicts[0].op.cols() == 3);
    CHECK(art.slots_per_day == 10);

    // each appliance must reproduce an independent run under its derived seed
    SynthesisControls c1 = c;
    c1.seed = cosparse::appliance_seed(c.seed, 1);
    auto solo = cosparse::train_synthesis(xs[1], c1, "b");
    CHECK((art.dicts[1].op - solo.dict.basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disaggregate_synthesis recovers a matched atom") {
    std::mt19937_64 rng(21);
    Matrix x = random_nonneg(12, 1, rng, 3.0);
    x.array() += 0.5;
    cosparse::SynthesisDict d;
    d.appliance_id = "only";
    d.basis = x / x.norm();
    auto r = cosparse::disaggregate_synthesis(x, {d}, 1e-8, 5000, 1e-14);
    REQUIRE(r.estimates.size() == 1);
    CHECK((r.estimates[0] - x).norm() / x.norm() <= 1e-4);
}

TEST_CASE("disaggregate_synthesis on a zero aggregate returns exact zeros") {
    cosparse::SynthesisDict a, b;
    a.basis = Matrix::Random(8, 3);
    b.basis = Matrix::Random(8, 3);
    Matrix zero = Matrix::Zero(8, 5);
    auto r = cosparse::disaggregate_synthesis(zero, {a, b}, 0.1);
    for (const Matrix& e : r.estimates) CHECK(e.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disaggregate_synthesis splits orthogonal atoms by their coefficients") {
    Matrix b1 = Matrix::Zero(6, 1), b2 = Matrix::Zero(6, 1);
    b1(0, 0) = 1.0;
    b2(3, 0) = 1.0;
    cosparse::SynthesisDict d1{"a", b1}, d2{"b", b2};
    Matrix agg = 2.0 * b1 + 3.0 * b2;
    Matrix codes;
    auto r = cosparse::disaggregate_synthesis(agg, {d1, d2}, 1e-6, 5000, 1e-14, true, &codes);
    REQUIRE(codes.rows() == 2);
    CHECK(std::abs(codes(0, 0) - 2.0) <= 1e-3);
    CHECK(std::abs(codes(1, 0) - 3.0) <= 1e-3);
}

TEST_CASE("noiseless mixtures of learned atoms reconstruct the aggregate") {
    std::mt19937_64 rng(25);
    std::vector<Matrix> xs = {random_nonneg(10, 8, rng, 2.0), random_nonneg(10, 8, rng, 1.5)};
    SynthesisControls c;
    auto art = cosparse::train_synthesis_set(xs, c);

    std::vector<cosparse::SynthesisDict> dicts;
    for (const auto& a : art.dicts) dicts.push_back({a.appliance_id, a.op});

    Matrix z = random_nonneg(6, 4, rng, 1.0);  // stacked true codes across both dictionaries
    Matrix agg = dicts[0].basis * z.topRows(3) + dicts[1].basis * z.bottomRows(3);
    auto r = cosparse::disaggregate_synthesis(agg, dicts, 1e-5, 20000, 1e-14, false);
    CHECK(r.sum_residual <= 1e-2);
}

TEST_CASE("disaggregate_synthesis clipping reports per-appliance fractions") {
    std::mt19937_64 rng(29);
    cosparse::SynthesisDict d;
    d.basis = Matrix::Random(8, 3);
    for (Eigen::Index j = 0; j < 3; ++j) d.basis.col(j).normalize();
    Matrix agg = random_nonneg(8, 4, rng, 2.0);
    auto r = cosparse::disaggregate_synthesis(agg, {d}, 0.1);
    CHECK(r.clipped);
    REQUIRE(r.clipped_fraction.size() == 1);
    for (const Matrix& e : r.estimates) CHECK((e.array() >= 0.0).all());
}

TEST_CASE("synthesis input validation") {
    SynthesisControls bad;
    bad.atoms = 0;
    CHECK_THROWS_AS(cosparse::train_synthesis(Matrix::Ones(4, 2), bad),
                    cosparse::InvalidArgument);
    SynthesisControls c;
    CHECK_THROWS_AS(cosparse::train_synthesis(Matrix(), c), cosparse::EmptyData);
    Matrix nan = Matrix::Ones(3, 2);
    nan(1, 1) = std::nan("");
    CHECK_THROWS_AS(cosparse::train_synthesis(nan, c), cosparse::InvalidArgument);
    SynthesisControls shaped;
    shaped.basis_init = Matrix::Ones(5, 2);  // atoms mismatch: controls say 3
    CHECK_THROWS_AS(cosparse::train_synthesis(Matrix::Ones(5, 3), shaped),
                    cosparse::InvalidArgument);
    CHECK_THROWS_AS(cosparse::disaggregate_synthesis(Matrix::Ones(4, 2), {}, 0.1),
                    cosparse::InvalidArgument);
    cosparse::SynthesisDict wrong;
    wrong.basis = Matrix::Ones(3, 2);
    CHECK_THROWS_AS(cosparse::disaggregate_synthesis(Matrix::Ones(4, 2), {wrong}, 0.1),
                    cosparse::InvalidArgument);
}
