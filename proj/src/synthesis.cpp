#include "cosparse/synthesis.hpp"

#include "cosparse/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace cosparse {

namespace {

constexpr double kObjFloor = 1e-9;

double rel_change(double prev, double cur) {
    return std::abs(cur - prev) / std::max(std::abs(prev), kObjFloor);
}

void check_matrix(const Matrix& x, const char* who) {
    if (x.size() == 0)
        throw EmptyData(std::string(who) + ": empty data matrix");
    if (!x.allFinite())
        throw InvalidArgument(std::string(who) + ": data contains non-finite entries");
}

double spectral_norm_sq(const Matrix& d) {
    if (d.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(d);
    double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return s * s;
}

std::string label_or_index(const std::vector<std::string>& labels, std::size_t i) {
    if (i < labels.size()) return labels[i];
    std::ostringstream os;
    os << i;
    return os.str();
}

}  // namespace

void validate(const SynthesisControls& c) {
    if (c.atoms < 1) throw InvalidArgument("SynthesisControls: atoms must be >= 1");
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda))
        throw InvalidArgument("SynthesisControls: lambda must be finite and >= 0");
    if (c.max_outer < 1) throw InvalidArgument("SynthesisControls: max_outer must be >= 1");
    if (!(c.tol > 0.0)) throw InvalidArgument("SynthesisControls: tol must be > 0");
    if (c.code_max < 1) throw InvalidArgument("SynthesisControls: code_max must be >= 1");
    if (!(c.code_tol > 0.0)) throw InvalidArgument("SynthesisControls: code_tol must be > 0");
    if (!(c.ls_eps >= 0.0)) throw InvalidArgument("SynthesisControls: ls_eps must be >= 0");
}

double synthesis_objective(const Matrix& x, const Matrix& d, const Matrix& z, double lambda) {
    if (d.rows() != x.rows() || d.cols() != z.rows() || z.cols() != x.cols())
        throw InvalidArgument("synthesis_objective: inconsistent shapes");
    return (x - d * z).squaredNorm() + lambda * z.cwiseAbs().sum();
}

Matrix nonneg_sparse_code(const Matrix& d, const Matrix& x, double lambda,
                          int max_iter, double tol, std::vector<double>* trace,
                          const Matrix* z0) {
    if (d.rows() != x.rows())
        throw InvalidArgument("nonneg_sparse_code: dictionary and data row counts differ");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("nonneg_sparse_code: lambda must be finite and >= 0");
    if (max_iter < 1) throw InvalidArgument("nonneg_sparse_code: max_iter must be >= 1");

    Matrix z = Matrix::Zero(d.cols(), x.cols());
    if (z0) {
        if (z0->rows() != d.cols() || z0->cols() != x.cols())
            throw InvalidArgument("nonneg_sparse_code: z0 must be atoms x days");
        z = z0->cwiseMax(0.0);
    }
    const double lsq = spectral_norm_sq(d);
    if (lsq == 0.0) return z;  // zero dictionary reconstructs nothing; 0 minimizes the l1 term
    const double step = 0.99 / lsq;

    double f = synthesis_objective(x, d, z, lambda);
    if (trace) trace->push_back(f);
    for (int it = 0; it < max_iter; ++it) {
        // gradient of (1/2)||x - d z||^2, prox of step * (lambda/2) * ||.||_1 + indicator(z >= 0)
        Matrix grad = d.transpose() * (d * z - x);
        z = (z - step * grad).array() - step * lambda / 2.0;
        z = z.cwiseMax(0.0);
        double prev = f;
        f = synthesis_objective(x, d, z, lambda);
        if (!std::isfinite(f) || f > prev * (1.0 + 1e-12) + 1e-12) {
            std::ostringstream msg;
            msg << "nonneg_sparse_code: objective increased at iteration " << it + 1
                << "; the step size must stay below 1/sigma_max(D)^2 = " << 1.0 / lsq;
            throw NumericalFailure(msg.str());
        }
        if (trace) trace->push_back(f);
        if (rel_change(prev, f) < tol) break;
    }
    return z;
}

SynthesisResult train_synthesis(const Matrix& x, const SynthesisControls& c,
                                const std::string& appliance_id) {
    validate(c);
    check_matrix(x, "train_synthesis");

    SynthesisResult r;
    r.dict.appliance_id = appliance_id;
    if (c.basis_init.size()) {
        if (c.basis_init.rows() != x.rows() || c.basis_init.cols() != c.atoms)
            throw InvalidArgument("train_synthesis: basis_init must be slots x atoms");
        r.dict.basis = c.basis_init;
    } else {
        // seeded_gaussian normalizes rows; transpose to get unit columns
        r.dict.basis = seeded_gaussian(c.atoms, x.rows(), c.seed).transpose();
    }
    r.codes = Matrix::Zero(c.atoms, x.cols());

    double f = synthesis_objective(x, r.dict.basis, r.codes, c.lambda);
    r.objective.push_back(f);
    for (int it = 1; it <= c.max_outer; ++it) {
        // min_D ||X - D Z||_F^2 as the transposed ridge system, then put the
        // column scales back into the codes so D keeps unit-norm atoms. The
        // code step runs after, so every recorded value sits at a (near-)
        // minimizer over the codes and the trace stays monotone.
        Matrix d = ridge_solve(r.codes.transpose(), x.transpose(),
                               scaled_eps(c.ls_eps, r.codes.squaredNorm()))
                       .transpose();
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            double nrm = d.col(j).norm();
            if (nrm > 0.0) {
                d.col(j) /= nrm;
                r.codes.row(j) *= nrm;
            } else {
                d.col(j) = r.dict.basis.col(j);  // unused atom: keep the previous direction
            }
        }
        r.dict.basis = d;

        r.codes = nonneg_sparse_code(r.dict.basis, x, c.lambda, c.code_max, c.code_tol,
                                     nullptr, &r.codes);

        double prev = f;
        f = synthesis_objective(x, r.dict.basis, r.codes, c.lambda);
        if (!std::isfinite(f)) {
            std::ostringstream msg;
            msg << "train_synthesis: objective diverged at iteration " << it;
            if (!appliance_id.empty()) msg << " (appliance " << appliance_id << ")";
            throw DivergenceError(msg.str());
        }
        r.objective.push_back(f);
        r.iterations = it;
        if (rel_change(prev, f) < c.tol) break;
    }
    return r;
}

TrainArtifacts train_synthesis_set(const std::vector<Matrix>& xs, const SynthesisControls& c,
                                   const std::vector<std::string>& labels) {
    validate(c);
    if (xs.empty()) throw InvalidArgument("train_synthesis_set: needs at least one appliance");
    if (!labels.empty() && labels.size() != xs.size())
        throw InvalidArgument("train_synthesis_set: label count does not match appliance count");
    for (const Matrix& x : xs) {
        check_matrix(x, "train_synthesis_set");
        if (x.rows() != xs.front().rows())
            throw InvalidArgument("train_synthesis_set: appliances disagree on slots per day");
    }

    TrainArtifacts out;
    out.model = "synthesis";
    out.hyper.lambda = c.lambda;
    out.hyper.atoms = c.atoms;
    out.hyper.max_outer = c.max_outer;
    out.hyper.tol = c.tol;
    out.hyper.ls_eps = c.ls_eps;
    out.hyper.seed = c.seed;
    out.slots_per_day = static_cast<int>(xs.front().rows());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        SynthesisControls ci = c;
        ci.seed = appliance_seed(c.seed, i);
        SynthesisResult r = train_synthesis(xs[i], ci, label_or_index(labels, i));
        AnalysisDict slot;
        slot.appliance_id = r.dict.appliance_id;
        slot.op = r.dict.basis;  // slots x atoms under the synthesis discriminator
        out.dicts.push_back(std::move(slot));
        TrainTrace t;
        t.objective = r.objective;
        t.iterations = r.iterations;
        t.final_fidelity = xs[i].norm() == 0.0
                               ? 0.0
                               : (xs[i] - r.dict.basis * r.codes).norm() / xs[i].norm();
        out.traces.push_back(std::move(t));
        out.estimates.push_back(r.dict.basis * r.codes);
    }
    return out;
}

DisaggResult disaggregate_synthesis(const Matrix& x_agg, const std::vector<SynthesisDict>& dicts,
                                    double lambda, int max_iter, double tol, bool clip,
                                    Matrix* codes_out) {
    check_matrix(x_agg, "disaggregate_synthesis");
    if (dicts.empty())
        throw InvalidArgument("disaggregate_synthesis: needs at least one dictionary");
    Eigen::Index atoms = 0;
    for (const SynthesisDict& d : dicts) {
        if (d.basis.rows() != x_agg.rows())
            throw InvalidArgument("disaggregate_synthesis: dictionary rows must match the aggregate");
        atoms += d.basis.cols();
    }

    Matrix concat(x_agg.rows(), atoms);
    Eigen::Index col = 0;
    for (const SynthesisDict& d : dicts) {
        concat.middleCols(col, d.basis.cols()) = d.basis;
        col += d.basis.cols();
    }

    DisaggResult out;
    Matrix z = nonneg_sparse_code(concat, x_agg, lambda, max_iter, tol, &out.objective_trace);
    out.iterations = static_cast<int>(out.objective_trace.size()) - 1;
    if (codes_out) *codes_out = z;

    col = 0;
    Matrix total = Matrix::Zero(x_agg.rows(), x_agg.cols());
    for (const SynthesisDict& d : dicts) {
        Matrix est = d.basis * z.middleRows(col, d.basis.cols());
        total += est;
        out.estimates.push_back(std::move(est));
        col += d.basis.cols();
    }
    double scale = x_agg.norm();
    out.sum_residual = scale == 0.0 ? 0.0 : (x_agg - total).norm() / scale;
    if (clip) {
        ClipResult c = clip_nonnegative(out.estimates);
        out.estimates = std::move(c.estimates);
        out.clipped_fraction = std::move(c.fraction);
        out.clipped = true;
    }
    return out;
}

}  // namespace cosparse
