#include "mixorder/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mixorder {

namespace {

double column_median(std::vector<double> col) {
  const size_t n = col.size();
  std::nth_element(col.begin(), col.begin() + n / 2, col.end());
  double hi = col[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(col.begin(), col.begin() + n / 2 - 1, col.end());
  return 0.5 * (col[n / 2 - 1] + hi);
}

}  // namespace

Dataset preprocess_rat(const RowMat& raw) {
  const int n = static_cast<int>(raw.rows());
  const int c = static_cast<int>(raw.cols());
  if (n < 1 || c != 6)
    throw DataError("expected 6 expression columns, got " + std::to_string(c));

  RowMat logs(n, 6);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 6; ++j) {
      const double v = raw(i, j);
      if (!(v > 0.0))
        throw DataError("nonpositive entry at row " + std::to_string(i + 1) +
                        ", column " + std::to_string(j + 1));
      logs(i, j) = std::log(v);
    }

  for (int j = 0; j < 6; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = logs(i, j);
    const double med = column_median(std::move(col));
    for (int i = 0; i < n; ++i) logs(i, j) -= med;
  }

  Dataset out;
  out.x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    out.x(i, 0) = 0.5 * (logs(i, 0) + logs(i, 1));
    out.x(i, 1) = 0.25 * (logs(i, 2) + logs(i, 3) + logs(i, 4) + logs(i, 5));
  }
  return out;
}

Dataset preprocess_rat_csv(const std::string& in_path) {
  Dataset raw = read_dataset_csv(in_path, 6);
  if (raw.z) throw DataError("expected exactly 6 columns in '" + in_path + "'");
  return preprocess_rat(raw.x);
}

}  // namespace mixorder
