#include "cosparse/disagg.hpp"

#include "cosparse/errors.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace cosparse {

namespace {

constexpr double kObjFloor = 1e-9;

double rel_change(double prev, double cur) {
    return std::abs(cur - prev) / std::max(std::abs(prev), kObjFloor);
}

void check_shapes(const Matrix& x_agg, const std::vector<AnalysisDict>& dicts, const char* who) {
    if (x_agg.size() == 0) throw EmptyData(std::string(who) + ": empty aggregate matrix");
    if (!x_agg.allFinite()) throw InvalidArgument(std::string(who) + ": non-finite aggregate data");
    if (dicts.empty()) throw InvalidArgument(std::string(who) + ": no dictionaries");
    for (const AnalysisDict& d : dicts) {
        if (d.op.cols() != x_agg.rows())
            throw InvalidArgument(std::string(who) + ": dictionary width " +
                                  std::to_string(d.op.cols()) + " does not match " +
                                  std::to_string(x_agg.rows()) + " slots per day");
        if (!d.op.allFinite())
            throw InvalidArgument(std::string(who) + ": non-finite dictionary");
    }
}

}  // namespace

double disagg_objective(const Matrix& x_agg, const std::vector<Matrix>& estimates,
                        const std::vector<AnalysisDict>& dicts, double lambda) {
    if (estimates.size() != dicts.size())
        throw InvalidArgument("disagg_objective: estimate count does not match dictionary count");
    Matrix sum = Matrix::Zero(x_agg.rows(), x_agg.cols());
    double l1 = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (estimates[i].rows() != x_agg.rows() || estimates[i].cols() != x_agg.cols())
            throw InvalidArgument("disagg_objective: estimate shape does not match the aggregate");
        if (dicts[i].op.cols() != x_agg.rows())
            throw InvalidArgument("disagg_objective: dictionary width does not match the aggregate");
        sum += estimates[i];
        l1 += (dicts[i].op * estimates[i]).cwiseAbs().sum();
    }
    return (x_agg - sum).squaredNorm() + lambda * l1;
}

ClipResult clip_nonnegative(const std::vector<Matrix>& estimates) {
    ClipResult out;
    for (const Matrix& e : estimates) {
        double total = e.cwiseAbs().sum();
        double negative = (-e).cwiseMax(0.0).sum();
        out.estimates.push_back(e.cwiseMax(0.0));
        out.fraction.push_back(total == 0.0 ? 0.0 : negative / total);
    }
    return out;
}

DisaggResult disaggregate(const Matrix& x_agg, const std::vector<AnalysisDict>& dicts,
                          const Hyperparams& h, const DisaggOptions& opts) {
    validate(h);
    check_shapes(x_agg, dicts, "disaggregate");

    const std::size_t n = dicts.size();
    const Eigen::Index days = x_agg.cols();
    const double theta = h.lambda / (2.0 * h.mu);

    std::vector<Matrix> est(n, x_agg / double(n));
    std::vector<Matrix> proxy(n), breg(n);
    // The dictionaries never move, so factor each damped normal matrix once.
    std::vector<Eigen::LLT<Matrix>> solvers(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& d = dicts[i].op;
        breg[i] = opts.bregman_init == BregmanInit::ones
                      ? Matrix::Ones(d.rows(), days)
                      : Matrix::Zero(d.rows(), days);
        proxy[i] = d * est[i];
        Matrix g = h.mu * (d.transpose() * d);
        g.diagonal().array() += 1.0;
        g.diagonal().array() += scaled_eps(h.ls_eps, double(x_agg.rows()) + h.mu * d.squaredNorm());
        solvers[i].compute(g);
        if (solvers[i].info() != Eigen::Success)
            throw NumericalFailure("disaggregate: Cholesky failed on the damped normal matrix");
    }

    Matrix others = Matrix::Zero(x_agg.rows(), days);  // sum over j != i, reused
    DisaggResult result;
    double f = disagg_objective(x_agg, est, dicts, h.lambda);
    if (!std::isfinite(f))
        throw DivergenceError("disaggregate: objective not finite at initialization");
    result.objective_trace.push_back(f);

    for (int it = 1; it <= h.max_outer; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            others.setZero();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) others += est[j];
            const Matrix resid = x_agg - others;
            const Matrix& d = dicts[i].op;

            double inner_prev = 0.0;
            const int passes = opts.inner_converged ? opts.inner_max : 1;
            for (int pass = 0; pass < passes; ++pass) {
                est[i] = solvers[i].solve(resid + h.mu * (d.transpose() * (proxy[i] - breg[i])));
                proxy[i] = soft_threshold(d * est[i] + breg[i], theta);
                if (h.bregman_variant == BregmanVariant::standard)
                    breg[i] += d * est[i] - proxy[i];
                else
                    breg[i] = proxy[i] - d * est[i] - breg[i];
                if (opts.inner_converged) {
                    double g = (resid - est[i]).squaredNorm() +
                               h.lambda * (d * est[i]).cwiseAbs().sum();
                    if (pass > 0 && rel_change(inner_prev, g) < opts.inner_tol) break;
                    inner_prev = g;
                }
            }
        }
        double prev = f;
        f = disagg_objective(x_agg, est, dicts, h.lambda);
        if (!std::isfinite(f)) {
            std::ostringstream msg;
            msg << "disaggregate: objective diverged at iteration " << it;
            throw DivergenceError(msg.str());
        }
        result.objective_trace.push_back(f);
        result.iterations = it;
        if (rel_change(prev, f) < h.tol) break;
    }

    Matrix sum = Matrix::Zero(x_agg.rows(), days);
    for (const Matrix& e : est) sum += e;
    double scale = x_agg.norm();
    result.sum_residual = scale == 0.0 ? 0.0 : (x_agg - sum).norm() / scale;

    if (opts.clip) {
        ClipResult clipped = clip_nonnegative(est);
        result.estimates = std::move(clipped.estimates);
        result.clipped_fraction = std::move(clipped.fraction);
        result.clipped = true;
    } else {
        result.estimates = std::move(est);
    }
    return result;
}

}  // namespace cosparse
