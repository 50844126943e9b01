#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Per-application feature vectors, z-scoring, PCA via cyclic Jacobi rotations
// and the quadrant labeling used for NMC-suitability triage.

namespace nmcprof {

struct AppFeatures {
  std::string app_name;
  std::map<std::string, double> features;
};

struct FeatureMatrix {
  std::vector<std::string> app_names;     // rows
  std::vector<std::string> feature_names; // columns
  std::vector<double> values;             // row-major

  std::size_t rows() const { return app_names.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
};

// Row per app, column per selected feature, order preserved. Throws when an
// app lacks a selected feature, naming both.
FeatureMatrix assemble(std::span<const AppFeatures> reports,
                       std::span<const std::string> selection);

struct Standardized {
  FeatureMatrix matrix;        // zero mean, unit variance columns
  std::vector<double> means;   // of the kept columns
  std::vector<double> stds;    // sample (n-1) standard deviations
  std::vector<std::string> dropped;  // zero-variance columns, removed
};

// Z-scores each column with the sample (n-1) estimator. Needs >= 2 rows.
Standardized standardize(const FeatureMatrix& matrix);

struct SymmetricEigen {
  std::vector<double> eigenvalues;               // descending
  std::vector<std::vector<double>> eigenvectors; // matching rows, unit norm
};

// Cyclic Jacobi rotations on a symmetric matrix (row-major, p x p).
// Deterministic; intended for the small dimensions used here.
SymmetricEigen jacobi_eigen(const std::vector<double>& sym, std::size_t p);

struct PcaResult {
  std::vector<std::string> feature_names;
  std::vector<double> means;  // standardization parameters, when they apply
  std::vector<double> stds;
  std::vector<std::string> dropped_features;
  std::vector<std::vector<double>> loadings;  // k rows of p, orthonormal
  std::vector<double> explained_variance_ratio;
  std::vector<std::vector<double>> scores;    // n rows of k
};

// Eigen-decomposition of the sample covariance of `matrix` (expected to be
// standardized already). Components sorted by descending eigenvalue; each
// component's largest-magnitude loading is made positive; scores are the
// projections matrix * loadings^T.
PcaResult pca(const FeatureMatrix& matrix, std::size_t k);

// standardize + pca; records means/stds/dropped columns in the result
PcaResult pca_pipeline(const FeatureMatrix& raw, std::size_t k);

// "I".."IV" by the signs of the first two scores, "on-axis" when either is 0.
std::string_view quadrant_label(double pc1, double pc2);

std::vector<std::string> quadrant_report(const PcaResult& result);  // needs k >= 2

}  // namespace nmcprof
