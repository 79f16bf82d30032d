#include "lorga/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "lorga/linalg.hpp"

namespace lorga::analysis {

double criterion(const CriterionInput& in) {
  const Index d_out = in.grad.rows();
  const Index d_in = in.grad.cols();
  if (in.a.cols() != d_in || in.b.rows() != d_out || in.a.rows() != in.b.cols())
    throw std::invalid_argument("criterion: shape mismatch");
  const double e2 = in.eta * in.eta;
  Matrix expr = e2 * in.grad * (in.a.transpose() * in.a) +
                e2 * (in.b * in.b.transpose()) * in.grad - in.zeta * in.grad;
  return expr.norm();
}

double tail_residual(const Vector& singular_values, Index rank, double zeta) {
  double tail = 0.0;
  for (Index i = 2 * rank; i < singular_values.size(); ++i)
    tail += singular_values[i] * singular_values[i];
  return zeta * std::sqrt(tail);
}

OptimalityReport verify_svd_optimality(const Matrix& grad, Index rank, double zeta,
                               double eta, int trials, std::uint64_t seed) {
  if (2 * rank > std::min(grad.rows(), grad.cols()))
    throw std::invalid_argument("verify_svd_optimality: 2r exceeds min(d_out, d_in)");

  linalg::SvdFactors f = linalg::svd(grad);
  const double scale = std::sqrt(zeta) / eta;

  CriterionInput at_solution;
  at_solution.grad = grad;
  at_solution.eta = eta;
  at_solution.zeta = zeta;
  at_solution.a = scale * f.v.leftCols(rank).transpose();
  at_solution.b = scale * f.u.middleCols(rank, rank);

  OptimalityReport report;
  report.objective_at_solution = criterion(at_solution);
  report.predicted_optimum = tail_residual(f.s, rank, zeta);

  double best = std::numeric_limits<double>::infinity();
  auto rng = linalg::make_rng(seed);
  for (int t = 0; t < trials; ++t) {
    CriterionInput candidate = at_solution;
    candidate.a =
        scale * linalg::random_orthonormal_columns(grad.cols(), rank, rng()).transpose();
    candidate.b = scale * linalg::random_orthonormal_columns(grad.rows(), rank, rng());
    best = std::min(best, criterion(candidate));
  }
  report.best_random_candidate = best;

  const double tol = 1e-9 * std::max(1.0, zeta * grad.norm());
  report.pass =
      std::abs(report.objective_at_solution - report.predicted_optimum) <= tol &&
      report.best_random_candidate >= report.objective_at_solution - tol;
  return report;
}

double coverage(const std::vector<double>& singular_values, Index k) {
  if (k < 0 || k > static_cast<Index>(singular_values.size()))
    throw std::invalid_argument("coverage: k out of range");
  std::vector<double> s = singular_values;
  for (double v : s)
    if (v < 0.0) throw std::invalid_argument("coverage: negative singular value");
  std::sort(s.begin(), s.end(), std::greater<double>());
  double total = 0.0, top = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    total += s[i] * s[i];
    if (static_cast<Index>(i) < k) top += s[i] * s[i];
  }
  if (total == 0.0) return 0.0;
  return top / total;
}

CoverageCurve coverage_curve(const Vector& singular_values) {
  CoverageCurve curve;
  curve.singular_values.assign(singular_values.data(),
                               singular_values.data() + singular_values.size());
  std::sort(curve.singular_values.begin(), curve.singular_values.end(),
            std::greater<double>());
  double total = 0.0;
  for (double v : curve.singular_values) total += v * v;
  double run = 0.0;
  for (double v : curve.singular_values) {
    run += v * v;
    curve.cumulative.push_back(total == 0.0 ? 0.0 : run / total);
  }
  return curve;
}

std::vector<StabilityCell> stability_probe(const StabilityProbeConfig& cfg,
                                           ZetaRule rule) {
  std::vector<StabilityCell> cells;
  auto rng = linalg::make_rng(cfg.seed);
  for (const auto& [d_in, d_out, rank] : cfg.grid) {
    StabilityCell cell;
    cell.d_in = d_in;
    cell.d_out = d_out;
    cell.rank = rank;
    if (2 * rank > std::min(d_in, d_out)) {
      cell.skipped = true;
      cells.push_back(cell);
      continue;
    }
    const double r = static_cast<double>(rank);
    const double eta = cfg.alpha / std::sqrt(r);
    cell.zeta = rule == ZetaRule::LoraGa
                    ? (cfg.alpha * cfg.alpha) / (cfg.gamma * cfg.gamma) *
                          std::sqrt(static_cast<double>(d_out) / (r * r))
                    : cfg.constant_zeta;
    const double a2 = cfg.alpha * cfg.alpha;
    cell.predicted_forward = cell.zeta * cell.zeta * r * r / (a2 * double(d_out));
    cell.predicted_backward = cell.zeta * cell.zeta * r * r / (a2 * double(d_in));

    // Redraw the orthonormal factors every few inputs so the estimate
    // averages over factors as well as inputs.
    const int inputs_per_draw = 16;
    const int draws = std::max(1, cfg.samples / inputs_per_draw);
    const double factor_scale = std::sqrt(cell.zeta) / eta;
    const Vector v = Vector::Ones(d_out);  // unit upstream gradient
    double sum_y2 = 0.0, sum_g2 = 0.0;
    std::int64_t count_y = 0, count_g = 0;
    for (int d = 0; d < draws; ++d) {
      Matrix a =
          factor_scale * linalg::random_orthonormal_columns(d_in, rank, rng()).transpose();
      Matrix b = factor_scale * linalg::random_orthonormal_columns(d_out, rank, rng());
      for (int i = 0; i < inputs_per_draw; ++i) {
        Matrix x = linalg::random_gaussian(d_in, 1, 1.0, rng);
        Vector y = eta * (b * (a * x)).col(0);
        sum_y2 += y.squaredNorm();
        count_y += y.size();
      }
      Vector g = eta * (a.transpose() * (b.transpose() * v));
      sum_g2 += g.squaredNorm();
      count_g += g.size();
    }
    cell.measured_forward = sum_y2 / static_cast<double>(count_y);
    cell.measured_backward = sum_g2 / static_cast<double>(count_g);
    cells.push_back(cell);
  }
  return cells;
}

std::vector<AlignmentResult> first_step_alignment(const nn::Network& base,
                                                  const nn::Network& adapted,
                                                  const Matrix& inputs,
                                                  const Matrix& targets,
                                                  double lambda, double gamma) {
  if (lambda <= 0.0) throw std::invalid_argument("first_step_alignment: lambda must be > 0");
  Matrix base_out = base.predict(inputs);
  Matrix adapted_out = adapted.predict(inputs);
  if ((base_out - adapted_out).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument(
        "first_step_alignment: networks disagree at the initial point");

  nn::GradientSnapshot base_grads = nn::backward(base, base.forward(inputs, targets));

  nn::Network stepped = adapted;
  nn::GradientSnapshot adapter_grads =
      nn::backward(stepped, stepped.forward(inputs, targets));
  for (Index l = 0; l < stepped.layer_count(); ++l) {
    auto& layer = stepped.layers()[static_cast<std::size_t>(l)];
    if (!layer.adapter) continue;
    const auto& [da, db] = *adapter_grads.dab[static_cast<std::size_t>(l)];
    layer.adapter->a -= lambda * da;
    layer.adapter->b -= lambda * db;
  }

  std::vector<AlignmentResult> results;
  for (Index l = 0; l < stepped.layer_count(); ++l) {
    const auto& after = stepped.layers()[static_cast<std::size_t>(l)];
    const auto& before = adapted.layers()[static_cast<std::size_t>(l)];
    if (!after.adapter) continue;
    const double eta = after.adapter->eta;
    Matrix realized = eta * (after.adapter->b * after.adapter->a -
                             before.adapter->b * before.adapter->a);

    const Matrix& grad = base_grads.dw[static_cast<std::size_t>(l)];
    const double r = static_cast<double>(after.adapter->rank);
    const double alpha = after.adapter->alpha;
    const double zeta = alpha * alpha / (gamma * gamma) *
                        std::sqrt(static_cast<double>(grad.rows()) / (r * r));
    Matrix target = -zeta * lambda * grad;

    AlignmentResult res;
    res.layer = l;
    res.residual = (realized - target).norm();
    res.predicted_residual =
        lambda * tail_residual(linalg::svd(grad).s, after.adapter->rank, zeta);
    const double denom = realized.norm() * target.norm();
    res.cos_similarity =
        denom == 0.0 ? 0.0 : (realized.array() * target.array()).sum() / denom;
    results.push_back(res);
  }
  return results;
}

}  // namespace lorga::analysis
