#include "symgnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace symgnn::ad {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

namespace {

double evaluate(const LossClosure& loss) {
  Tape tape;
  return loss(tape).item();
}

}  // namespace

GradCheckReport finite_diff_check(const LossClosure& loss, ParameterSet& params, double eps,
                                  double tolerance) {
  params.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  constexpr double kFloor = 1e-6;
  GradCheckReport report;
  report.tolerance = tolerance;
  for (auto& p : params) {
    const Matrix analytic = p.grad;
    Matrix numeric(p.value.rows(), p.value.cols());
    for (Index j = 0; j < p.value.cols(); ++j) {
      for (Index i = 0; i < p.value.rows(); ++i) {
        const double orig = p.value(i, j);
        p.value(i, j) = orig + eps;
        const double up = evaluate(loss);
        p.value(i, j) = orig - eps;
        const double down = evaluate(loss);
        p.value(i, j) = orig;
        numeric(i, j) = (up - down) / (2.0 * eps);
      }
    }
    GradCheckEntry e;
    e.name = p.name;
    e.elements = static_cast<std::size_t>(p.value.size());
    if (p.value.size() > 0) {
      const double scale =
          std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), kFloor});
      e.max_abs_error = (analytic - numeric).cwiseAbs().maxCoeff();
      e.max_rel_error = e.max_abs_error / scale;
    }
    e.passed = std::isfinite(e.max_rel_error) && e.max_rel_error < tolerance;
    report.entries.push_back(std::move(e));
  }
  params.zero_grad();
  return report;
}

}  // namespace symgnn::ad
