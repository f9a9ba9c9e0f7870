#pragma once

// Data-parallel kernels used by the pipeline. Each kernel has an OpenMP
// implementation and a `_serial` reference that the tests compare against.
// Both write every output element from exactly one iteration, so the results
// are bit-identical regardless of the thread count.

#include <span>
#include <vector>

#include "patchselect/classifiers.hpp"
#include "patchselect/features.hpp"
#include "patchselect/gpr_core.hpp"

namespace patchselect::parallel {

/// Number of worker threads used by the OpenMP kernels (0 keeps the default).
void set_num_threads(int n);
int num_threads();

std::vector<double> squared_norms(const FeatureMatrix& x);
std::vector<double> squared_norms_serial(const FeatureMatrix& x);

/// out[t] = exp(-gamma * ||x_i - x_t||^2) for every row t, computed from the
/// precomputed squared norms.
void rbf_kernel_row(const FeatureMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
                    std::span<double> out);
void rbf_kernel_row_serial(const FeatureMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
                           std::span<double> out);

FeatureMatrix featurize(FeatureKind kind, std::span<const Patch> patches);
FeatureMatrix featurize_serial(FeatureKind kind, std::span<const Patch> patches);

std::vector<double> predict_rows(const Model& model, const FeatureMatrix& x);
std::vector<double> predict_rows_serial(const Model& model, const FeatureMatrix& x);

}  // namespace patchselect::parallel
