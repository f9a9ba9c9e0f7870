// Serial reference vs OpenMP for each parallel kernel. The thread count is
// the benchmark argument; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include "patchselect/keypoints.hpp"
#include "patchselect/parallel.hpp"
#include "patchselect/rng.hpp"
#include "support.hpp"

using namespace patchselect;

namespace {

const std::vector<Patch>& patches() {
  static const std::vector<Patch> p = [] {
    const BScan scan = depth_normalize(testsupport::random_bscan(342, 400, 11));
    std::vector<Patch> out;
    for (int x = kPatchHalf; x < 400 - kPatchHalf; x += 4)
      for (int t = kPatchHalf; t <= 342 - kPatchHalf; t += 16) out.push_back(extract_patch(scan, {x, t, 0.0}));
    return out;
  }();
  return p;
}

const FeatureMatrix& hog_rows() {
  static const FeatureMatrix m = parallel::featurize_serial(FeatureKind::Hog, patches());
  return m;
}

TrainingSet labelled(const FeatureMatrix& x, std::size_t n) {
  TrainingSet ts;
  ts.features = FeatureMatrix(x.kind());
  Rng rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    ts.features.append(x.row(i));
    ts.labels.push_back(rng.uniform() < 0.3 ? 1 : -1);
    ts.provenance.push_back(static_cast<AlarmId>(i));
  }
  return ts;
}

const Model& forest() {
  static const Model m = train_rf(labelled(hog_rows(), 800), 5);
  return m;
}

const Model& svm() {
  static const Model m = train_svm(labelled(hog_rows(), 600), {});
  return m;
}

void BM_featurize_hog_serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(parallel::featurize_serial(FeatureKind::Hog, patches()));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(patches().size()));
}
void BM_featurize_hog_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(parallel::featurize(FeatureKind::Hog, patches()));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(patches().size()));
}

void BM_featurize_ehd_serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(parallel::featurize_serial(FeatureKind::Ehd, patches()));
}
void BM_featurize_ehd_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(parallel::featurize(FeatureKind::Ehd, patches()));
}

void BM_squared_norms_serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(parallel::squared_norms_serial(hog_rows()));
}
void BM_squared_norms_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(parallel::squared_norms(hog_rows()));
}

void BM_rbf_row_serial(benchmark::State& s) {
  const auto norms = parallel::squared_norms_serial(hog_rows());
  std::vector<double> out(hog_rows().rows());
  for (auto _ : s) {
    parallel::rbf_kernel_row_serial(hog_rows(), norms, 7, 0.1, out);
    benchmark::ClobberMemory();
  }
}
void BM_rbf_row_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  const auto norms = parallel::squared_norms_serial(hog_rows());
  std::vector<double> out(hog_rows().rows());
  for (auto _ : s) {
    parallel::rbf_kernel_row(hog_rows(), norms, 7, 0.1, out);
    benchmark::ClobberMemory();
  }
}

void BM_predict_rf_serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(parallel::predict_rows_serial(forest(), hog_rows()));
}
void BM_predict_rf_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(parallel::predict_rows(forest(), hog_rows()));
}

void BM_predict_svm_serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(parallel::predict_rows_serial(svm(), hog_rows()));
}
void BM_predict_svm_omp(benchmark::State& s) {
  parallel::set_num_threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(parallel::predict_rows(svm(), hog_rows()));
}

}  // namespace

BENCHMARK(BM_featurize_hog_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_hog_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_ehd_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_ehd_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_squared_norms_serial);
BENCHMARK(BM_squared_norms_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();
BENCHMARK(BM_rbf_row_serial);
BENCHMARK(BM_rbf_row_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();
BENCHMARK(BM_predict_rf_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_rf_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_svm_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_svm_omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
