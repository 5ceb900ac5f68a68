#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hvaq/error.hpp"

namespace hvaq {

/// Dense row-major sample-by-feature matrix with named columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  explicit FeatureMatrix(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  FeatureMatrix(std::vector<std::string> columns, std::vector<double> values)
      : columns_(std::move(columns)), values_(std::move(values)) {
    if (columns_.empty()) throw SchemaError("FeatureMatrix: no columns");
    if (values_.size() % columns_.size() != 0) throw SchemaError("FeatureMatrix: value count not a multiple of columns");
    for (double v : values_) {
      if (!std::isfinite(v)) throw SchemaError("FeatureMatrix: non-finite value");
    }
  }

  void add_row(std::span<const double> row) {
    if (row.size() != columns_.size()) throw SchemaError("FeatureMatrix: row width mismatch");
    for (double v : row) {
      if (!std::isfinite(v)) throw SchemaError("FeatureMatrix: non-finite value");
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }

  std::size_t rows() const { return columns_.empty() ? 0 : values_.size() / columns_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * columns_.size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * columns_.size(), columns_.size());
  }

  /// Rows at the given indices, in order.
  FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
    FeatureMatrix out(columns_);
    out.values_.reserve(idx.size() * cols());
    for (auto i : idx) {
      auto r = row(i);
      out.values_.insert(out.values_.end(), r.begin(), r.end());
    }
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
};

inline void check_schema(const std::vector<std::string>& trained, const FeatureMatrix& x) {
  if (trained != x.columns()) {
    std::string want, got;
    for (const auto& c : trained) want += (want.empty() ? "" : ",") + c;
    for (const auto& c : x.columns()) got += (got.empty() ? "" : ",") + c;
    throw SchemaError("feature schema mismatch: model trained on [" + want + "], got [" + got + "]");
  }
}

}  // namespace hvaq
