#include "nmcprof/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nmcprof {

FeatureMatrix assemble(std::span<const AppFeatures> reports,
                       std::span<const std::string> selection) {
  FeatureMatrix m;
  m.feature_names.assign(selection.begin(), selection.end());
  m.values.reserve(reports.size() * selection.size());
  for (const AppFeatures& app : reports) {
    m.app_names.push_back(app.app_name);
    for (const std::string& feature : selection) {
      auto it = app.features.find(feature);
      if (it == app.features.end())
        throw std::invalid_argument("app '" + app.app_name +
                                    "' is missing feature '" + feature + "'");
      if (!std::isfinite(it->second))
        throw std::invalid_argument("app '" + app.app_name + "' feature '" +
                                    feature + "' is not finite");
      m.values.push_back(it->second);
    }
  }
  return m;
}

Standardized standardize(const FeatureMatrix& matrix) {
  const std::size_t n = matrix.rows(), p = matrix.cols();
  if (n < 2)
    throw std::invalid_argument("standardize: need at least 2 rows, got " +
                                std::to_string(n));

  std::vector<double> means(p, 0.0), stds(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += matrix.at(r, c);
    means[c] = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = matrix.at(r, c) - means[c];
      ss += d * d;
    }
    stds[c] = std::sqrt(ss / static_cast<double>(n - 1));
  }

  Standardized out;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < p; ++c) {
    if (stds[c] > 0.0) {
      kept.push_back(c);
    } else {
      out.dropped.push_back(matrix.feature_names[c]);
    }
  }

  out.matrix.app_names = matrix.app_names;
  for (std::size_t c : kept) {
    out.matrix.feature_names.push_back(matrix.feature_names[c]);
    out.means.push_back(means[c]);
    out.stds.push_back(stds[c]);
  }
  out.matrix.values.resize(n * kept.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < kept.size(); ++j)
      out.matrix.at(r, j) = (matrix.at(r, kept[j]) - means[kept[j]]) / stds[kept[j]];
  return out;
}

SymmetricEigen jacobi_eigen(const std::vector<double>& sym, std::size_t p) {
  if (sym.size() != p * p)
    throw std::invalid_argument("jacobi_eigen: matrix size mismatch");

  std::vector<double> a = sym;              // working copy, stays symmetric
  std::vector<double> v(p * p, 0.0);        // accumulated rotations, columns = vectors
  for (std::size_t i = 0; i < p; ++i) v[i * p + i] = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) s += a[i * p + j] * a[i * p + j];
    return s;
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_norm() > 1e-28; ++sweep) {
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        const double apq = a[i * p + j];
        if (apq == 0.0) continue;
        const double app = a[i * p + i], aqq = a[j * p + j];
        const double theta = (aqq - app) / (2.0 * apq);
        // smaller-angle root of t^2 + 2*theta*t - 1 = 0
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < p; ++k) {
          const double aki = a[k * p + i], akj = a[k * p + j];
          a[k * p + i] = c * aki - s * akj;
          a[k * p + j] = s * aki + c * akj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a[i * p + k], ajk = a[j * p + k];
          a[i * p + k] = c * aik - s * ajk;
          a[j * p + k] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vki = v[k * p + i], vkj = v[k * p + j];
          v[k * p + i] = c * vki - s * vkj;
          v[k * p + j] = s * vki + c * vkj;
        }
      }
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x * p + x] > a[y * p + y];
  });

  SymmetricEigen out;
  out.eigenvalues.reserve(p);
  out.eigenvectors.reserve(p);
  for (std::size_t idx : order) {
    out.eigenvalues.push_back(a[idx * p + idx]);
    std::vector<double> vec(p);
    for (std::size_t k = 0; k < p; ++k) vec[k] = v[k * p + idx];
    out.eigenvectors.push_back(std::move(vec));
  }
  return out;
}

PcaResult pca(const FeatureMatrix& matrix, std::size_t k) {
  const std::size_t n = matrix.rows(), p = matrix.cols();
  if (n < 2) throw std::invalid_argument("pca: need at least 2 rows");
  if (k == 0 || k > p)
    throw std::invalid_argument("pca: k must be in 1..#features (" +
                                std::to_string(p) + "), got " + std::to_string(k));

  // sample covariance of the (centered) input
  std::vector<double> mean(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < n; ++r) mean[c] += matrix.at(r, c);
    mean[c] /= static_cast<double>(n);
  }
  std::vector<double> cov(p * p, 0.0);
  bool any_nonzero = false;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        s += (matrix.at(r, i) - mean[i]) * (matrix.at(r, j) - mean[j]);
      s /= static_cast<double>(n - 1);
      cov[i * p + j] = cov[j * p + i] = s;
      if (s != 0.0) any_nonzero = true;
    }
  }
  if (!any_nonzero)
    throw std::invalid_argument("pca: degenerate input, covariance is all zero");

  SymmetricEigen eig = jacobi_eigen(cov, p);

  double total = 0.0;
  for (double& lambda : eig.eigenvalues) {
    if (lambda < 0.0) lambda = 0.0;  // clip eigenvalue roundoff
    total += lambda;
  }

  PcaResult out;
  out.feature_names = matrix.feature_names;
  for (std::size_t comp = 0; comp < k; ++comp) {
    std::vector<double>& vec = eig.eigenvectors[comp];
    // sign convention: the largest-magnitude loading is positive
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::fabs(vec[i]) > std::fabs(vec[arg])) arg = i;
    if (vec[arg] < 0.0)
      for (double& x : vec) x = -x;
    out.loadings.push_back(vec);
    out.explained_variance_ratio.push_back(
        total > 0.0 ? eig.eigenvalues[comp] / total : 0.0);
  }

  out.scores.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t comp = 0; comp < k; ++comp) {
      double s = 0.0;
      for (std::size_t c = 0; c < p; ++c)
        s += matrix.at(r, c) * out.loadings[comp][c];
      out.scores[r][comp] = s;
    }
  return out;
}

PcaResult pca_pipeline(const FeatureMatrix& raw, std::size_t k) {
  Standardized z = standardize(raw);
  if (z.matrix.cols() == 0)
    throw std::invalid_argument("pca: every feature column is constant");
  PcaResult result = pca(z.matrix, std::min(k, z.matrix.cols()));
  result.means = z.means;
  result.stds = z.stds;
  result.dropped_features = z.dropped;
  return result;
}

std::string_view quadrant_label(double pc1, double pc2) {
  if (pc1 == 0.0 || pc2 == 0.0) return "on-axis";
  if (pc1 > 0.0) return pc2 > 0.0 ? "I" : "IV";
  return pc2 > 0.0 ? "II" : "III";
}

std::vector<std::string> quadrant_report(const PcaResult& result) {
  if (result.loadings.size() < 2)
    throw std::invalid_argument("quadrant_report: need at least 2 components");
  std::vector<std::string> out;
  out.reserve(result.scores.size());
  for (const std::vector<double>& score : result.scores)
    out.emplace_back(quadrant_label(score[0], score[1]));
  return out;
}

}  // namespace nmcprof
