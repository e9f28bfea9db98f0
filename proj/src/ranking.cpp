#include "fedforest/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace fedforest {

namespace {

Eigen::MatrixXd to_eigen(const GramMatrix& g) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(g.n), static_cast<Eigen::Index>(g.n));
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g.at(i, j);
    }
  }
  return m;
}

void check_psd(const GramMatrix& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < -1e-8 * std::max(hi, 0.0)) {
    std::ostringstream msg;
    msg << "p_greedy_rank: kernel matrix is not positive semidefinite"
        << " (min eigenvalue " << lo << ", max eigenvalue " << hi << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

std::vector<EstimatorId> p_greedy_rank(const GramMatrix& g, std::size_t k,
                                       std::vector<GreedyTraceRow>* trace) {
  const std::size_t n = g.n;
  if (g.ids.size() != n) throw std::invalid_argument("p_greedy_rank: ids/size mismatch");
  std::vector<EstimatorId> order;
  if (k == 0 || n == 0) return order;
  check_psd(g);

  const double max_diag = g.max_diagonal();
  const double tolerance = 1e-10 * max_diag;

  std::vector<double> power(n);  // residual posterior variance per candidate
  for (std::size_t i = 0; i < n; ++i) power[i] = g.at(i, i);
  std::vector<std::vector<double>> basis;  // one Newton-basis column per pick
  std::vector<char> taken(n, 0);
  const std::size_t want = std::min(k, n);

  while (order.size() < want) {
    // Argmax of residual power; ids break ties inside a 1e-12-wide window.
    double pmax = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) pmax = std::max(pmax, power[i]);
    }
    const double tie = 1e-12 * std::max(1.0, pmax);
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i] || power[i] < pmax - tie) continue;
      if (best == n || g.ids[i] < g.ids[best]) best = i;
    }

    if (pmax <= 0.0 || pmax < tolerance) break;

    if (trace) trace->push_back({g.ids[best], power[best], true});
    order.push_back(g.ids[best]);
    taken[best] = 1;

    const double denom = std::sqrt(power[best]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = g.at(i, best);
      for (const std::vector<double>& prev : basis) v -= prev[i] * prev[best];
      col[i] = v / denom;
      power[i] -= col[i] * col[i];
      if (power[i] < 0.0) power[i] = 0.0;  // clamp the numerical floor
    }
    power[best] = 0.0;
    basis.push_back(std::move(col));
  }

  // Below-tolerance leftovers keep a stable, id-ordered placement.
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  std::sort(rest.begin(), rest.end(),
            [&](std::size_t a, std::size_t b) { return g.ids[a] < g.ids[b]; });
  for (std::size_t i : rest) {
    if (order.size() >= want) break;
    if (trace) trace->push_back({g.ids[i], power[i], false});
    order.push_back(g.ids[i]);
  }
  return order;
}

double posterior_variance_exact(const GramMatrix& g, const std::vector<std::size_t>& selected,
                                std::size_t candidate) {
  if (candidate >= g.n) throw std::invalid_argument("posterior_variance_exact: candidate out of range");
  if (selected.empty()) return g.at(candidate, candidate);

  const Eigen::Index s = static_cast<Eigen::Index>(selected.size());
  Eigen::MatrixXd kss(s, s);
  Eigen::VectorXd ks(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const std::size_t si = selected[static_cast<std::size_t>(i)];
    if (si >= g.n) throw std::invalid_argument("posterior_variance_exact: selected index out of range");
    ks(i) = g.at(si, candidate);
    for (Eigen::Index j = 0; j < s; ++j) {
      kss(i, j) = g.at(si, selected[static_cast<std::size_t>(j)]);
    }
    kss(i, i) += 1e-10;  // jitter
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(kss);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("posterior_variance_exact: selected block is singular beyond jitter");
  }
  const Eigen::VectorXd sol = ldlt.solve(ks);
  const double v = g.at(candidate, candidate) - ks.dot(sol);
  if (!std::isfinite(v)) {
    throw std::runtime_error("posterior_variance_exact: selected block is singular beyond jitter");
  }
  return v;
}

void write_greedy_trace_csv(const std::vector<GreedyTraceRow>& trace, std::ostream& out) {
  out << "origin,counter,power,selected_by_power\n";
  out.precision(17);
  for (const GreedyTraceRow& row : trace) {
    out << row.id.origin << "," << row.id.counter << "," << row.power << ","
        << (row.selected_by_power ? 1 : 0) << "\n";
  }
}

}  // namespace fedforest
