#include "cosparse/train.hpp"

#include "cosparse/errors.hpp"

#include <cmath>
#include <sstream>

namespace cosparse {

namespace {

constexpr double kObjFloor = 1e-9;  // denominator guard for relative changes

double rel_change(double prev, double cur) {
    return std::abs(cur - prev) / std::max(std::abs(prev), kObjFloor);
}

void check_training_matrix(const Matrix& x, const char* who) {
    if (x.size() == 0)
        throw EmptyData(std::string(who) + ": empty training matrix");
    if (!x.allFinite())
        throw InvalidArgument(std::string(who) + ": non-finite training data");
}

std::string label_or_index(const std::vector<std::string>& labels, std::size_t i) {
    if (!labels.empty()) return labels[i];
    return "appliance_" + std::to_string(i);
}

double fidelity_ratio(const Matrix& x, const Matrix& estimate) {
    double scale = x.norm();
    return scale == 0.0 ? 0.0 : (x - estimate).norm() / scale;
}

}  // namespace

void validate(const Hyperparams& h) {
    auto bad = [](const char* field) {
        throw InvalidArgument(std::string("hyperparameter out of range: ") + field);
    };
    if (!std::isfinite(h.lambda) || h.lambda < 0.0) bad("lambda");
    if (!std::isfinite(h.mu) || h.mu <= 0.0) bad("mu");
    if (!std::isfinite(h.eta) || h.eta < 0.0) bad("eta");
    if (!std::isfinite(h.gamma) || h.gamma < 0.0) bad("gamma");
    if (h.atoms < 1) bad("atoms");
    if (h.max_outer < 1) bad("max_outer");
    if (!std::isfinite(h.tol) || h.tol < 0.0) bad("tol");
    if (!std::isfinite(h.ls_eps) || h.ls_eps < 0.0) bad("ls_eps");
}

std::uint64_t appliance_seed(std::uint64_t base, std::size_t index) {
    return base + static_cast<std::uint64_t>(index);
}

TrainState make_train_state(const Matrix& x, const Hyperparams& h, std::uint64_t seed) {
    TrainState s;
    s.data = x;
    s.estimate = x;
    s.dict = seeded_gaussian(h.atoms, x.rows(), seed);
    s.bregman = h.b_init == BregmanInit::ones ? Matrix::Ones(h.atoms, x.cols())
                                              : Matrix::Zero(h.atoms, x.cols());
    s.proxy = s.dict * s.estimate;
    return s;
}

double unaugmented_objective(const TrainState& s, const Hyperparams& h) {
    return (s.data - s.estimate).squaredNorm() +
           h.lambda * (s.dict * s.estimate).cwiseAbs().sum();
}

double constraint_residual(const TrainState& s) {
    return (s.proxy - s.dict * s.estimate).norm() / std::max(1.0, s.proxy.norm());
}

double augmented_objective(const TrainState& s, const Hyperparams& h, TrainerMode mode) {
    double v = (s.data - s.estimate).squaredNorm() + h.lambda * s.proxy.cwiseAbs().sum() +
               h.mu * (s.proxy - s.dict * s.estimate - s.bregman).squaredNorm();
    if (mode != TrainerMode::simple) {
        for (const Matrix& peer : s.peer_dicts) {
            if (h.incoherence_variant == IncoherenceVariant::gram_dxd) {
                Matrix gram = s.dict.transpose() * peer;  // slots x slots
                gram.diagonal().array() -= 1.0;
                v += h.eta * gram.squaredNorm();
            } else {
                Matrix gram = s.dict * peer.transpose();  // atoms x atoms
                gram.diagonal().array() -= 1.0;
                v += h.eta * gram.squaredNorm();
            }
        }
    }
    if (mode == TrainerMode::disaggregating)
        for (const Matrix& peer : s.peer_dicts)
            v += h.gamma * (peer * s.estimate).squaredNorm();
    return v;
}

void dictionary_step(TrainState& s, const Hyperparams& h, TrainerMode mode) {
    const Matrix r = s.proxy - s.bregman;  // Z - B
    const bool coupled = mode != TrainerMode::simple && h.eta != 0.0 && !s.peer_dicts.empty();
    if (!coupled) {
        // min_D ||r - D X^||_F^2 through the transposed ridge system
        double eps = scaled_eps(h.ls_eps, s.estimate.squaredNorm());
        s.dict = ridge_solve(s.estimate.transpose(), r.transpose(), eps).transpose();
        return;
    }
    if (h.incoherence_variant == IncoherenceVariant::gram_dxd) {
        // Stationarity of mu ||r - D X^||^2 + eta sum_j ||D^T D_j - I||^2:
        // (eta sum_j D_j D_j^T) D + D (mu X^ X^T) = mu r X^T + eta sum_j D_j
        Matrix a = Matrix::Zero(s.dict.rows(), s.dict.rows());
        Matrix dsum = Matrix::Zero(s.dict.rows(), s.dict.cols());
        for (const Matrix& peer : s.peer_dicts) {
            a += peer * peer.transpose();
            dsum += peer;
        }
        a *= h.eta;
        Matrix c = h.mu * (s.estimate * s.estimate.transpose());
        a.diagonal().array() += scaled_eps(h.ls_eps, a.trace());
        c.diagonal().array() += scaled_eps(h.ls_eps, c.trace());
        Matrix e = h.mu * (r * s.estimate.transpose()) + h.eta * dsum;
        s.dict = sylvester_solve(a, c, e);
    } else {
        // cross_gram_pxp penalizes ||D D_j^T - I||^2, which only right-multiplies:
        // D (mu X^ X^T + eta sum_j D_j^T D_j) = mu r X^T + eta sum_j D_j
        Matrix g = h.mu * (s.estimate * s.estimate.transpose());
        Matrix dsum = Matrix::Zero(s.dict.rows(), s.dict.cols());
        for (const Matrix& peer : s.peer_dicts) {
            g += h.eta * (peer.transpose() * peer);
            dsum += peer;
        }
        g.diagonal().array() += scaled_eps(h.ls_eps, g.trace());
        Matrix rhs = h.mu * (r * s.estimate.transpose()) + h.eta * dsum;
        Eigen::LLT<Matrix> llt(g);
        if (llt.info() != Eigen::Success)
            throw NumericalFailure("dictionary_step: Cholesky failed on the damped Gram matrix");
        s.dict = llt.solve(rhs.transpose()).transpose();
    }
}

void estimate_step(TrainState& s, const Hyperparams& h, TrainerMode mode) {
    const Eigen::Index d = s.data.rows();
    const Eigen::Index n = s.data.cols();
    const Eigen::Index p = s.dict.rows();
    const double smu = std::sqrt(h.mu);
    const bool cross =
        mode == TrainerMode::disaggregating && h.gamma != 0.0 && !s.peer_dicts.empty();

    Eigen::Index extra = 0;
    if (cross)
        for (const Matrix& peer : s.peer_dicts) extra += peer.rows();

    Matrix a(d + extra + p, d);
    Matrix y(d + extra + p, n);
    a.topRows(d) = Matrix::Identity(d, d);
    y.topRows(d) = s.data;
    Eigen::Index row = d;
    if (cross) {
        const double sg = std::sqrt(h.gamma);
        for (const Matrix& peer : s.peer_dicts) {
            a.middleRows(row, peer.rows()) = sg * peer;
            y.middleRows(row, peer.rows()).setZero();
            row += peer.rows();
        }
    }
    a.bottomRows(p) = smu * s.dict;
    y.bottomRows(p) = smu * (s.proxy - s.bregman);
    s.estimate = ridge_solve(a, y, scaled_eps(h.ls_eps, a.squaredNorm()));
}

void proxy_step(TrainState& s, const Hyperparams& h) {
    s.proxy = soft_threshold(s.dict * s.estimate + s.bregman, h.lambda / (2.0 * h.mu));
}

void bregman_step(TrainState& s, const Hyperparams& h) {
    if (h.bregman_variant == BregmanVariant::standard)
        s.bregman += s.dict * s.estimate - s.proxy;
    else
        s.bregman = s.proxy - s.dict * s.estimate - s.bregman;
}

TrainResult train_simple(const Matrix& x, const Hyperparams& h, const std::string& appliance_id) {
    validate(h);
    check_training_matrix(x, "train_simple");

    TrainState s = make_train_state(x, h, h.seed);
    TrainTrace trace;
    double f = unaugmented_objective(s, h);
    if (!std::isfinite(f))
        throw DivergenceError("train_simple: objective not finite at initialization");
    trace.objective.push_back(f);
    trace.constraint_residual.push_back(constraint_residual(s));

    for (int it = 1; it <= h.max_outer; ++it) {
        dictionary_step(s, h, TrainerMode::simple);
        estimate_step(s, h, TrainerMode::simple);
        proxy_step(s, h);
        bregman_step(s, h);
        double prev = f;
        f = unaugmented_objective(s, h);
        if (!std::isfinite(f)) {
            std::ostringstream msg;
            msg << "train_simple: objective diverged at iteration " << it;
            if (!appliance_id.empty()) msg << " (appliance " << appliance_id << ")";
            throw DivergenceError(msg.str());
        }
        trace.objective.push_back(f);
        trace.constraint_residual.push_back(constraint_residual(s));
        trace.iterations = it;
        if (rel_change(prev, f) < h.tol) break;
    }
    trace.final_fidelity = fidelity_ratio(x, s.estimate);
    return {AnalysisDict{appliance_id, s.dict}, trace, s.estimate};
}

namespace {

TrainArtifacts train_coupled(const std::vector<Matrix>& xs, const Hyperparams& h,
                             const std::vector<std::string>& labels, TrainerMode mode) {
    const char* who = mode == TrainerMode::distinctive ? "train_distinctive" : "train_disaggregating";
    validate(h);
    if (xs.size() < 2)
        throw InvalidArgument(std::string(who) + ": needs at least two appliances");
    if (!labels.empty() && labels.size() != xs.size())
        throw InvalidArgument(std::string(who) + ": label count does not match appliance count");
    for (const Matrix& x : xs) {
        check_training_matrix(x, who);
        if (x.rows() != xs.front().rows())
            throw InvalidArgument(std::string(who) + ": appliances disagree on slots per day");
    }

    const std::size_t n = xs.size();
    std::vector<TrainState> states;
    states.reserve(n);
    std::vector<TrainTrace> traces(n);
    std::vector<double> prev_obj(n);
    std::vector<bool> frozen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        states.push_back(make_train_state(xs[i], h, appliance_seed(h.seed, i)));
        prev_obj[i] = unaugmented_objective(states[i], h);
        if (!std::isfinite(prev_obj[i]))
            throw DivergenceError(std::string(who) + ": objective not finite at initialization (appliance " +
                                  label_or_index(labels, i) + ")");
        traces[i].objective.push_back(prev_obj[i]);
        traces[i].constraint_residual.push_back(constraint_residual(states[i]));
    }

    for (int it = 1; it <= h.max_outer; ++it) {
        bool all_frozen = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (frozen[i]) continue;
            all_frozen = false;
            states[i].peer_dicts.clear();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) states[i].peer_dicts.push_back(states[j].dict);
            dictionary_step(states[i], h, mode);
            estimate_step(states[i], h, mode);
            proxy_step(states[i], h);
            bregman_step(states[i], h);
            double f = unaugmented_objective(states[i], h);
            if (!std::isfinite(f)) {
                std::ostringstream msg;
                msg << who << ": objective diverged at iteration " << it << " (appliance "
                    << label_or_index(labels, i) << ")";
                throw DivergenceError(msg.str());
            }
            traces[i].objective.push_back(f);
            traces[i].constraint_residual.push_back(constraint_residual(states[i]));
            traces[i].iterations = it;
            if (rel_change(prev_obj[i], f) < h.tol) frozen[i] = true;
            prev_obj[i] = f;
        }
        if (all_frozen) break;
    }

    TrainArtifacts out;
    out.model = mode == TrainerMode::distinctive ? "distinctive" : "disaggregating";
    out.hyper = h;
    out.slots_per_day = static_cast<int>(xs.front().rows());
    for (std::size_t i = 0; i < n; ++i) {
        traces[i].final_fidelity = fidelity_ratio(xs[i], states[i].estimate);
        out.dicts.push_back(AnalysisDict{label_or_index(labels, i), states[i].dict});
        out.traces.push_back(std::move(traces[i]));
        out.estimates.push_back(std::move(states[i].estimate));
    }
    return out;
}

}  // namespace

TrainArtifacts train_simple_set(const std::vector<Matrix>& xs, const Hyperparams& h,
                                const std::vector<std::string>& labels) {
    validate(h);
    if (xs.empty())
        throw InvalidArgument("train_simple_set: needs at least one appliance");
    if (!labels.empty() && labels.size() != xs.size())
        throw InvalidArgument("train_simple_set: label count does not match appliance count");
    TrainArtifacts out;
    out.model = "simple";
    out.hyper = h;
    out.slots_per_day = static_cast<int>(xs.front().rows());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Hyperparams hi = h;
        hi.seed = appliance_seed(h.seed, i);
        TrainResult r = train_simple(xs[i], hi, label_or_index(labels, i));
        out.dicts.push_back(std::move(r.dict));
        out.traces.push_back(std::move(r.trace));
        out.estimates.push_back(std::move(r.estimate));
    }
    return out;
}

TrainArtifacts train_distinctive(const std::vector<Matrix>& xs, const Hyperparams& h,
                                 const std::vector<std::string>& labels) {
    return train_coupled(xs, h, labels, TrainerMode::distinctive);
}

TrainArtifacts train_disaggregating(const std::vector<Matrix>& xs, const Hyperparams& h,
                                    const std::vector<std::string>& labels) {
    return train_coupled(xs, h, labels, TrainerMode::disaggregating);
}

}  // namespace cosparse
