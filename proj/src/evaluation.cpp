#include "dshmm/evaluation.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "dshmm/kernels.hpp"

namespace dshmm {

AssignmentResult hungarian_min_cost(const DMat& cost) {
  require(cost.rows > 0 && cost.cols > 0, "hungarian: empty matrix");
  for (double c : cost.v) require(std::isfinite(c), "hungarian: non-finite cost entry");

  const std::size_t n = std::max(cost.rows, cost.cols);
  auto a = [&](std::size_t i, std::size_t j) -> double {
    return (i < cost.rows && j < cost.cols) ? cost(i, j) : 0.0;
  };

  // shortest-augmenting-path formulation with dual potentials u, v;
  // p[j] = row currently matched to column j (1-based, 0 = none)
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = static_cast<int>(i);
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), INF);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = INF;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<int>(j0);
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult res;
  res.assign.assign(cost.rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t i = static_cast<std::size_t>(p[j]) - 1;
    if (i < cost.rows && j - 1 < cost.cols) {
      res.assign[i] = static_cast<int>(j - 1);
      res.cost += cost(i, j - 1);
    }
  }
  return res;
}

double hamming_distance(const std::vector<int>& estimated, const std::vector<int>& truth) {
  require(estimated.size() == truth.size(), "hamming: length mismatch");
  const std::size_t T = truth.size();
  if (T == 0) return 0.0;

  std::unordered_map<int, int> eidx, tidx;
  for (int lab : estimated)
    if (!eidx.count(lab)) eidx.emplace(lab, static_cast<int>(eidx.size()));
  for (int lab : truth)
    if (!tidx.count(lab)) tidx.emplace(lab, static_cast<int>(tidx.size()));

  DMat overlap(eidx.size(), tidx.size());
  for (std::size_t t = 0; t < T; ++t) overlap(eidx[estimated[t]], tidx[truth[t]]) -= 1.0;
  AssignmentResult match = hungarian_min_cost(overlap);  // negated counts

  long long mismatch = 0;
  for (std::size_t t = 0; t < T; ++t) {
    int mapped = match.assign[eidx[estimated[t]]];
    if (mapped < 0 || mapped != tidx[truth[t]]) ++mismatch;
  }
  return static_cast<double>(mismatch) / static_cast<double>(T);
}

ForwardResult forward_loglik(const DMat& pi, const std::vector<double>& initial,
                             const EmissionModel& emis,
                             const std::vector<const EmissionParams*>& theta, const Dataset& data,
                             std::size_t begin, std::size_t end) {
  const std::size_t K = initial.size();
  require(K > 0 && pi.rows == K && pi.cols == K, "forward: dimension mismatch");
  require(theta.size() == K, "forward: theta count mismatch");
  require(begin < end && end <= data.size(), "forward: bad range");
  for (std::size_t j = 0; j < K; ++j)
    require(std::abs(pi.row_sum(j) - 1.0) <= 1e-8, "forward: pi row not stochastic");

  ForwardResult out;
  std::vector<double> alpha(K), next(K), ll(K), el(K);
  for (std::size_t t = begin; t < end; ++t) {
    const Obs* ctx = data.context(t);
    for (std::size_t k = 0; k < K; ++k) ll[k] = emis.data_loglik(*theta[k], data.y[t], ctx);
    double c = kernels::max(ll.data(), K);
    if (!std::isfinite(c)) {
      out.underflow = true;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    kernels::exp_shift(ll.data(), c, el.data(), K);
    if (t == begin) {
      kernels::mul(initial.data(), el.data(), alpha.data(), K);
    } else {
      for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < K; ++j) acc += alpha[j] * pi(j, k);
        next[k] = acc * el[k];
      }
      alpha.swap(next);
    }
    double norm = kernels::sum(alpha.data(), K);
    if (!(norm > 0.0)) {
      out.underflow = true;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    kernels::scale(alpha.data(), 1.0 / norm, K);
    out.loglik += std::log(norm) + c;
  }
  return out;
}

std::vector<double> predictive_nll(const std::vector<HmmSnapshot>& snapshots,
                                   const EmissionModel& emis, const Dataset& test) {
  require(!snapshots.empty(), "predictive_nll: no snapshots");
  require(test.size() > 0, "predictive_nll: empty test data");
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const HmmSnapshot& snap : snapshots) {
    std::vector<const EmissionParams*> theta;
    for (const auto& p : snap.theta) theta.push_back(p.get());
    double nll = 0.0;
    std::size_t start = 0;
    for (std::size_t t = 1; t <= test.size(); ++t) {
      if (t == test.size() || !test.has_prev(t)) {
        nll -= forward_loglik(snap.pi, snap.initial, emis, theta, test, start, t).loglik;
        start = t;
      }
    }
    out.push_back(nll);
  }
  return out;
}

}  // namespace dshmm
