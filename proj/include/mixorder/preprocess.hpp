#pragma once

#include <string>

#include "mixorder/mixture.hpp"

namespace mixorder {

// Gene-expression preprocessing: log-transform every entry, subtract each
// column's median, then average columns 1-2 and 3-6 into a bivariate dataset.
// raw must have 6 positive columns.
Dataset preprocess_rat(const RowMat& raw);

Dataset preprocess_rat_csv(const std::string& in_path);

}  // namespace mixorder
