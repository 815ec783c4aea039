#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cosparse/errors.hpp"
#include "cosparse/train.hpp"

#include <cmath>
#include <random>
#include <vector>

using cosparse::AnalysisDict;
using cosparse::Hyperparams;
using cosparse::Matrix;
using cosparse::TrainArtifacts;
using cosparse::TrainerMode;
using cosparse::TrainState;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m(i, j) = scale * normal(rng);
    return m;
}

// Hand-rolled matrix product so the objective oracle shares nothing with Eigen.
std::vector<std::vector<double>> mul_ref(const Matrix& a, const Matrix& b) {
    std::vector<std::vector<double>> out(a.rows(), std::vector<double>(b.cols(), 0.0));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index k = 0; k < a.cols(); ++k)
                out[i][j] += a(i, k) * b(k, j);
    return out;
}

// Brute-force augmented Lagrangian: plain scalar sums over every term.
double aug_ref(const TrainState& s, const Hyperparams& h, TrainerMode mode) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < s.data.rows(); ++i)
        for (Eigen::Index j = 0; j < s.data.cols(); ++j) {
            double r = s.data(i, j) - s.estimate(i, j);
            v += r * r;
        }
    for (Eigen::Index i = 0; i < s.proxy.rows(); ++i)
        for (Eigen::Index j = 0; j < s.proxy.cols(); ++j)
            v += h.lambda * std::abs(s.proxy(i, j));
    auto dxh = mul_ref(s.dict, s.estimate);
    for (Eigen::Index i = 0; i < s.proxy.rows(); ++i)
        for (Eigen::Index j = 0; j < s.proxy.cols(); ++j) {
            double r = s.proxy(i, j) - dxh[i][j] - s.bregman(i, j);
            v += h.mu * r * r;
        }
    if (mode != TrainerMode::simple) {
        for (const Matrix& peer : s.peer_dicts) {
            if (h.incoherence_variant == cosparse::IncoherenceVariant::gram_dxd) {
                auto gram = mul_ref(s.dict.transpose(), peer);
                for (std::size_t i = 0; i < gram.size(); ++i)
                    for (std::size_t j = 0; j < gram[i].size(); ++j) {
                        double g = gram[i][j] - (i == j ? 1.0 : 0.0);
                        v += h.eta * g * g;
                    }
            } else {
                auto gram = mul_ref(s.dict, peer.transpose());
                for (std::size_t i = 0; i < gram.size(); ++i)
                    for (std::size_t j = 0; j < gram[i].size(); ++j) {
                        double g = gram[i][j] - (i == j ? 1.0 : 0.0);
                        v += h.eta * g * g;
                    }
            }
        }
    }
    if (mode == TrainerMode::disaggregating) {
        for (const Matrix& peer : s.peer_dicts) {
            auto px = mul_ref(peer, s.estimate);
            for (auto& row : px)
                for (double e : row) v += h.gamma * e * e;
        }
    }
    return v;
}

TrainState random_state(Eigen::Index d, Eigen::Index n, Eigen::Index p, std::size_t peers,
                        std::mt19937_64& rng) {
    TrainState s;
    s.data = random_matrix(d, n, rng, 5.0);
    s.dict = random_matrix(p, d, rng);
    s.estimate = random_matrix(d, n, rng, 5.0);
    s.proxy = random_matrix(p, n, rng);
    s.bregman = random_matrix(p, n, rng);
    for (std::size_t k = 0; k < peers; ++k)
        s.peer_dicts.push_back(random_matrix(p, d, rng));
    return s;
}

// Straight-line reference of the three closed-form updates, independent of
// the library's loop. Returns the state after `iters` passes.
struct RefState {
    Matrix d, xh, z, b;
};

RefState reference_simple(const Matrix& x, const Hyperparams& h, int iters) {
    RefState r;
    r.d = cosparse::seeded_gaussian(h.atoms, x.rows(), h.seed);
    r.xh = x;
    r.b = Matrix::Ones(h.atoms, x.cols());
    r.z = r.d * r.xh;
    const double theta = h.lambda / (2.0 * h.mu);
    for (int it = 0; it < iters; ++it) {
        Matrix g = r.xh * r.xh.transpose();
        g.diagonal().array() += h.ls_eps * std::max(1.0, g.trace());
        r.d = (r.z - r.b) * r.xh.transpose() * g.inverse();

        Matrix m = h.mu * (r.d.transpose() * r.d);
        m.diagonal().array() += 1.0;
        m.diagonal().array() += h.ls_eps * std::max(1.0, m.trace());
        r.xh = m.inverse() * (x + h.mu * r.d.transpose() * (r.z - r.b));

        Matrix v = r.d * r.xh + r.b;
        r.z = v.unaryExpr([theta](double t) {
            double s = std::abs(t) - theta;
            return s > 0.0 ? (t > 0.0 ? s : -s) : 0.0;
        });
        r.b += r.d * r.xh - r.z;
    }
    return r;
}

bool matrices_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

}  // namespace

TEST_CASE("augmented_objective matches the brute-force oracle") {
    std::mt19937_64 rng(21);
    Hyperparams h;
    for (int rep = 0; rep < 8; ++rep) {
        TrainState s = random_state(6 + rep % 4, 4, 3, 2, rng);
        for (TrainerMode mode :
             {TrainerMode::simple, TrainerMode::distinctive, TrainerMode::disaggregating}) {
            double got = cosparse::augmented_objective(s, h, mode);
            double want = aug_ref(s, h, mode);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
        h.incoherence_variant = cosparse::IncoherenceVariant::cross_gram_pxp;
        double got = cosparse::augmented_objective(s, h, TrainerMode::distinctive);
        CHECK(got == doctest::Approx(aug_ref(s, h, TrainerMode::distinctive)).epsilon(1e-12));
        h.incoherence_variant = cosparse::IncoherenceVariant::gram_dxd;
    }
}

TEST_CASE("augmented_objective all-zero state pins the incoherence constant") {
    const Eigen::Index d = 7, n = 4, p = 3;
    Hyperparams h;
    TrainState s;
    s.data = Matrix::Zero(d, n);
    s.dict = Matrix::Zero(p, d);
    s.estimate = Matrix::Zero(d, n);
    s.proxy = Matrix::Zero(p, n);
    s.bregman = Matrix::Zero(p, n);
    s.peer_dicts = {Matrix::Zero(p, d), Matrix::Zero(p, d)};  // N = 3 appliances
    CHECK(cosparse::augmented_objective(s, h, TrainerMode::simple) == 0.0);
    double want = h.eta * double(s.peer_dicts.size()) * double(d);
    CHECK(cosparse::augmented_objective(s, h, TrainerMode::distinctive) == doctest::Approx(want));
    CHECK(cosparse::augmented_objective(s, h, TrainerMode::disaggregating) == doctest::Approx(want));
}

TEST_CASE("augmented_objective with lambda=mu=0 is exactly the fidelity") {
    std::mt19937_64 rng(22);
    TrainState s = random_state(5, 4, 3, 0, rng);
    Hyperparams h;
    h.lambda = 0.0;
    h.mu = 0.0;
    CHECK(cosparse::augmented_objective(s, h, TrainerMode::simple) ==
          (s.data - s.estimate).squaredNorm());
}

TEST_CASE("proxy step satisfies the elementwise subgradient optimality") {
    std::mt19937_64 rng(23);
    Hyperparams h;
    TrainState s = random_state(6, 5, 3, 0, rng);
    cosparse::proxy_step(s, h);
    Matrix v = s.dict * s.estimate + s.bregman;
    // minimizer of lambda |z| + mu (z - v)^2: either 2 mu (z - v) = -lambda sign(z)
    // or z = 0 with |2 mu v| <= lambda
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            double z = s.proxy(i, j);
            if (z != 0.0) {
                double grad = 2.0 * h.mu * (z - v(i, j)) + h.lambda * (z > 0 ? 1.0 : -1.0);
                CHECK(std::abs(grad) <= 1e-12);
            } else {
                CHECK(std::abs(2.0 * h.mu * v(i, j)) <= h.lambda + 1e-12);
            }
        }
}

TEST_CASE("each sub-step never increases the augmented objective") {
    std::mt19937_64 rng(24);
    Hyperparams h;
    const double slack = 1e-10;
    for (int inst = 0; inst < 10; ++inst) {
        const Eigen::Index d = 5 + inst % 8;   // <= 12
        const Eigen::Index n = 3 + inst % 6;   // <= 8
        const std::size_t napp = 2 + inst % 2;
        for (TrainerMode mode :
             {TrainerMode::simple, TrainerMode::distinctive, TrainerMode::disaggregating}) {
            std::vector<TrainState> states;
            for (std::size_t i = 0; i < napp; ++i) {
                Matrix x = random_matrix(d, n, rng, 10.0);
                states.push_back(cosparse::make_train_state(x, h, 100 + inst * 10 + i));
            }
            for (int sweep = 0; sweep < 3; ++sweep) {
                for (std::size_t i = 0; i < napp; ++i) {
                    TrainState& s = states[i];
                    s.peer_dicts.clear();
                    if (mode != TrainerMode::simple)
                        for (std::size_t j = 0; j < napp; ++j)
                            if (j != i) s.peer_dicts.push_back(states[j].dict);
                    double before = cosparse::augmented_objective(s, h, mode);
                    cosparse::dictionary_step(s, h, mode);
                    double after_dict = cosparse::augmented_objective(s, h, mode);
                    CHECK(after_dict <= before * (1.0 + slack) + 1e-12);
                    cosparse::estimate_step(s, h, mode);
                    double after_est = cosparse::augmented_objective(s, h, mode);
                    CHECK(after_est <= after_dict * (1.0 + slack) + 1e-12);
                    cosparse::proxy_step(s, h);
                    double after_proxy = cosparse::augmented_objective(s, h, mode);
                    CHECK(after_proxy <= after_est * (1.0 + slack) + 1e-12);
                    cosparse::bregman_step(s, h);
                }
            }
        }
    }
}

TEST_CASE("sub-steps are block minimizers: random probes never do better") {
    std::mt19937_64 rng(25);
    Hyperparams h;
    for (TrainerMode mode :
         {TrainerMode::simple, TrainerMode::distinctive, TrainerMode::disaggregating}) {
        TrainState s = random_state(8, 5, 3, 2, rng);
        if (mode == TrainerMode::simple) s.peer_dicts.clear();

        cosparse::dictionary_step(s, h, mode);
        double fstar = cosparse::augmented_objective(s, h, mode);
        for (int probe = 0; probe < 5; ++probe) {
            TrainState t = s;
            t.dict += random_matrix(3, 8, rng, 0.01 * std::max(1.0, s.dict.norm()));
            CHECK(cosparse::augmented_objective(t, h, mode) >= fstar - 1e-9 * std::max(1.0, fstar));
        }

        cosparse::estimate_step(s, h, mode);
        fstar = cosparse::augmented_objective(s, h, mode);
        for (int probe = 0; probe < 5; ++probe) {
            TrainState t = s;
            t.estimate += random_matrix(8, 5, rng, 0.01 * std::max(1.0, s.estimate.norm()));
            CHECK(cosparse::augmented_objective(t, h, mode) >= fstar - 1e-9 * std::max(1.0, fstar));
        }

        cosparse::proxy_step(s, h);
        fstar = cosparse::augmented_objective(s, h, mode);
        for (int probe = 0; probe < 5; ++probe) {
            TrainState t = s;
            t.proxy += random_matrix(3, 5, rng, 0.01 * std::max(1.0, s.proxy.norm()));
            CHECK(cosparse::augmented_objective(t, h, mode) >= fstar - 1e-9 * std::max(1.0, fstar));
        }
    }
}

TEST_CASE("train_simple on an all-zero matrix keeps the objective at zero") {
    Hyperparams h;
    Matrix x = Matrix::Zero(10, 5);
    auto result = cosparse::train_simple(x, h, "idle");
    REQUIRE(!result.trace.objective.empty());
    for (double f : result.trace.objective) CHECK(f == 0.0);
    CHECK(result.dict.appliance_id == "idle");
}

TEST_CASE("train_simple matches a straight-line reference on rank-1 data") {
    // Smooth positive rank-1 day matrix at a watt-like scale.
    const Eigen::Index d = 12, n = 6;
    Matrix x(d, n);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            x(i, j) = (100.0 + 50.0 * std::sin(0.5 * double(i))) * (1.0 + 0.1 * double(j));

    Hyperparams h;
    auto result = cosparse::train_simple(x, h, "rank1");

    RefState ref = reference_simple(x, h, result.trace.iterations);
    double ref_obj = (x - ref.xh).squaredNorm() + h.lambda * (ref.d * ref.xh).cwiseAbs().sum();
    CHECK(result.trace.objective.back() == doctest::Approx(ref_obj).epsilon(1e-6));

    // Frozen thresholds, confirmed by the reference state as the oracle.
    double ref_fid = (x - ref.xh).norm() / x.norm();
    double ref_res = (ref.z - ref.d * ref.xh).norm() / ref.z.norm();
    CHECK(ref_fid <= 0.2);
    CHECK(ref_res <= 1e-3);
    CHECK(result.trace.final_fidelity <= 0.2);
    CHECK(result.trace.constraint_residual.back() <= 1e-3);
    CHECK(result.trace.constraint_residual.back() < 1e-2);  // trace convergence contract
}

TEST_CASE("train_simple with lambda=0 recovers the data") {
    std::mt19937_64 rng(26);
    Matrix x = random_matrix(9, 5, rng, 50.0).cwiseAbs();
    Hyperparams h;
    h.lambda = 0.0;
    auto result = cosparse::train_simple(x, h);
    CHECK(result.trace.final_fidelity <= 1e-5);
}

TEST_CASE("train_simple records one objective per iteration plus the start") {
    std::mt19937_64 rng(27);
    Matrix x = random_matrix(8, 4, rng, 10.0);
    Hyperparams h;
    h.max_outer = 17;
    h.tol = 0.0;  // never stop early
    auto result = cosparse::train_simple(x, h);
    CHECK(result.trace.iterations == 17);
    CHECK(result.trace.objective.size() == 18);
    CHECK(result.trace.constraint_residual.size() == 18);
}

TEST_CASE("training raises divergence when the objective overflows") {
    std::mt19937_64 rng(28);
    Matrix x = random_matrix(6, 4, rng, 10.0);
    Hyperparams h;
    h.lambda = 1e308;
    CHECK_THROWS_AS(cosparse::train_simple(x, h), cosparse::DivergenceError);
}

TEST_CASE("trainer input validation") {
    Hyperparams h;
    Matrix x = Matrix::Ones(4, 3);
    Hyperparams bad = h;
    bad.mu = 0.0;
    CHECK_THROWS_AS(cosparse::train_simple(x, bad), cosparse::InvalidArgument);
    bad = h;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(cosparse::train_simple(x, bad), cosparse::InvalidArgument);
    CHECK_THROWS_AS(cosparse::train_simple(Matrix(), h), cosparse::EmptyData);
    CHECK_THROWS_AS(cosparse::train_distinctive({x}, h), cosparse::InvalidArgument);
    CHECK_THROWS_AS(cosparse::train_disaggregating({x}, h), cosparse::InvalidArgument);
    Matrix other = Matrix::Ones(5, 3);
    CHECK_THROWS_AS(cosparse::train_distinctive({x, other}, h), cosparse::InvalidArgument);
}

TEST_CASE("disaggregating with gamma=0 reproduces distinctive bitwise") {
    std::mt19937_64 rng(29);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::vector<Matrix> xs;
        for (int i = 0; i < 3; ++i) xs.push_back(random_matrix(10, 6, rng, 20.0).cwiseAbs());
        Hyperparams h;
        h.seed = seed;
        h.max_outer = 30;
        Hyperparams hg = h;
        hg.gamma = 0.0;
        TrainArtifacts a = cosparse::train_disaggregating(xs, hg);
        TrainArtifacts b = cosparse::train_distinctive(xs, h);
        REQUIRE(a.dicts.size() == b.dicts.size());
        for (std::size_t i = 0; i < a.dicts.size(); ++i) {
            CHECK(matrices_equal(a.dicts[i].op, b.dicts[i].op));
            CHECK(a.traces[i].iterations == b.traces[i].iterations);
            CHECK(a.traces[i].objective == b.traces[i].objective);
        }
    }
}

TEST_CASE("distinctive with eta=0 reproduces per-appliance simple runs bitwise") {
    std::mt19937_64 rng(30);
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        std::vector<Matrix> xs;
        for (int i = 0; i < 3; ++i) xs.push_back(random_matrix(9, 5, rng, 20.0).cwiseAbs());
        Hyperparams h;
        h.seed = seed;
        h.max_outer = 30;
        Hyperparams he = h;
        he.eta = 0.0;
        TrainArtifacts a = cosparse::train_distinctive(xs, he);
        TrainArtifacts b = cosparse::train_simple_set(xs, he);
        REQUIRE(a.dicts.size() == b.dicts.size());
        for (std::size_t i = 0; i < a.dicts.size(); ++i) {
            CHECK(matrices_equal(a.dicts[i].op, b.dicts[i].op));
            CHECK(a.traces[i].iterations == b.traces[i].iterations);
            CHECK(a.traces[i].objective == b.traces[i].objective);
        }
    }
}

TEST_CASE("distinctive training lowers the incoherence penalty from its start") {
    std::mt19937_64 rng(31);
    std::vector<Matrix> xs;
    for (int i = 0; i < 2; ++i) xs.push_back(random_matrix(12, 6, rng, 30.0).cwiseAbs());
    Hyperparams h;
    h.seed = 7;

    auto incoherence = [&](const Matrix& a, const Matrix& b) {
        Matrix g = a.transpose() * b;
        g.diagonal().array() -= 1.0;
        return g.squaredNorm();
    };
    Matrix d0a = cosparse::seeded_gaussian(h.atoms, 12, cosparse::appliance_seed(h.seed, 0));
    Matrix d0b = cosparse::seeded_gaussian(h.atoms, 12, cosparse::appliance_seed(h.seed, 1));
    double initial = incoherence(d0a, d0b) + incoherence(d0b, d0a);

    TrainArtifacts art = cosparse::train_distinctive(xs, h);
    double final_pen =
        incoherence(art.dicts[0].op, art.dicts[1].op) + incoherence(art.dicts[1].op, art.dicts[0].op);
    CHECK(final_pen <= initial);
}

TEST_CASE("disaggregating training lowers the cross energy on disjoint supports") {
    std::mt19937_64 rng(32);
    const Eigen::Index d = 12, n = 6;
    Matrix x0 = Matrix::Zero(d, n), x1 = Matrix::Zero(d, n);
    x0.topRows(6) = random_matrix(6, n, rng, 30.0).cwiseAbs();
    x1.bottomRows(6) = random_matrix(6, n, rng, 30.0).cwiseAbs();
    Hyperparams h;
    h.seed = 3;

    TrainArtifacts art = cosparse::train_disaggregating({x0, x1}, h);
    REQUIRE(art.estimates.size() == 2);
    Matrix d0init = cosparse::seeded_gaussian(h.atoms, d, cosparse::appliance_seed(h.seed, 0));
    Matrix d1init = cosparse::seeded_gaussian(h.atoms, d, cosparse::appliance_seed(h.seed, 1));
    // cross energy ||D_j X^_i||^2 at init (X^_i = X_i) vs at convergence
    CHECK((art.dicts[1].op * art.estimates[0]).squaredNorm() <= (d1init * x0).squaredNorm());
    CHECK((art.dicts[0].op * art.estimates[1]).squaredNorm() <= (d0init * x1).squaredNorm());
}

TEST_CASE("bregman variants genuinely differ") {
    std::mt19937_64 rng(33);
    Matrix x = random_matrix(8, 5, rng, 20.0).cwiseAbs();
    Hyperparams h;
    Hyperparams hl = h;
    hl.bregman_variant = cosparse::BregmanVariant::reflected;
    auto a = cosparse::train_simple(x, h);
    auto b = cosparse::train_simple(x, hl);
    CHECK(!matrices_equal(a.dict.op, b.dict.op));
}
