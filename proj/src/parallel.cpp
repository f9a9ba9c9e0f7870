#include "patchselect/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "patchselect/errors.hpp"

namespace patchselect::parallel {
namespace {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double rbf_from_norms(double gamma, double ni, double nt, double d) noexcept {
  return std::exp(-gamma * std::max(0.0, ni + nt - 2.0 * d));
}

}  // namespace

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

std::vector<double> squared_norms(const FeatureMatrix& x) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  std::vector<double> out(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = dot(x.row(static_cast<std::size_t>(i)), x.row(static_cast<std::size_t>(i)));
  return out;
}

std::vector<double> squared_norms_serial(const FeatureMatrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = dot(x.row(i), x.row(i));
  return out;
}

void rbf_kernel_row(const FeatureMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
                    std::span<double> out) {
  const auto xi = x.row(i);
  const double ni = sq_norms[i];
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    out[ut] = rbf_from_norms(gamma, ni, sq_norms[ut], dot(xi, x.row(ut)));
  }
}

void rbf_kernel_row_serial(const FeatureMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
                           std::span<double> out) {
  const auto xi = x.row(i);
  for (std::size_t t = 0; t < x.rows(); ++t) out[t] = rbf_from_norms(gamma, sq_norms[i], sq_norms[t], dot(xi, x.row(t)));
}

FeatureMatrix featurize(FeatureKind kind, std::span<const Patch> patches) {
  FeatureMatrix out(kind, patches.size());
  const auto n = static_cast<std::ptrdiff_t>(patches.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    extract_features_into(kind, patches[static_cast<std::size_t>(i)], out.row(static_cast<std::size_t>(i)));
  }
  return out;
}

FeatureMatrix featurize_serial(FeatureKind kind, std::span<const Patch> patches) {
  FeatureMatrix out(kind, patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) extract_features_into(kind, patches[i], out.row(i));
  return out;
}

std::vector<double> predict_rows(const Model& model, const FeatureMatrix& x) {
  if (x.kind() != model.feature_kind) throw KindMismatch("feature kind does not match the model");
  std::vector<double> out(x.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = predict_row(model, x.row(static_cast<std::size_t>(i)));
  }
  return out;
}

std::vector<double> predict_rows_serial(const Model& model, const FeatureMatrix& x) {
  if (x.kind() != model.feature_kind) throw KindMismatch("feature kind does not match the model");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(model, x.row(i));
  return out;
}

}  // namespace patchselect::parallel
