#include "fognet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fognet/errors.hpp"

namespace fognet {

namespace {

double eval_scalar(const std::function<Tensor()>& f) {
    const double v = f().value();
    if (!std::isfinite(v)) {
        throw EvaluationError("grad_check: function evaluated to non-finite value " + std::to_string(v));
    }
    return v;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

} // namespace

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double h, double tol) {
    if (!(h > 0.0)) throw ParameterError("grad_check: step h must be positive");

    GradCheckReport report;
    report.h = h;
    report.tol = tol;

    // One analytic sweep over a fresh tape.
    for (const auto& [name, p] : params) {
        if (!p.requires_grad()) {
            throw ParameterError("grad_check: parameter '" + name + "' does not require grad");
        }
        Tensor(p).zero_grad();
    }
    Tensor loss = f();
    if (!std::isfinite(loss.value())) {
        throw EvaluationError("grad_check: function evaluated to non-finite value");
    }
    loss.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, p] : params) {
        analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.size(), 0.0));
    }

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi].second;
        GradCheckEntry entry;
        entry.name = params[pi].first;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.raw()[i];
            p.raw()[i] = saved + h;
            const double up = eval_scalar(f);
            p.raw()[i] = saved - h;
            const double down = eval_scalar(f);
            p.raw()[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            entry.max_rel_err = std::max(entry.max_rel_err, rel_err(analytic[pi][i], numeric));
        }
        entry.pass = entry.max_rel_err < tol;
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.pass = report.pass && entry.pass;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace fognet
