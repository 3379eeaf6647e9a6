#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace icms {

enum class ColumnKind { kContinuous, kBinary, kCategorical };

std::string_view column_kind_name(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view name);

inline bool is_discrete(ColumnKind kind) { return kind != ColumnKind::kContinuous; }

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Binary columns hold 0/1, categorical columns hold integral level codes.
  std::vector<double> values;
};

// Column-major table with optional designated treatment and outcome columns.
// Target-domain covariate sets simply leave the outcome unset.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns,
                   std::optional<std::string> treatment = std::nullopt,
                   std::optional<std::string> outcome = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  bool empty() const { return rows_ == 0; }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const Column& column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  const std::optional<std::string>& treatment() const { return treatment_; }
  const std::optional<std::string>& outcome() const { return outcome_; }
  void set_treatment(std::optional<std::string> name);
  void set_outcome(std::optional<std::string> name);

  // Names of every column that is neither treatment nor outcome.
  std::vector<std::string> covariate_names() const;

  void add_column(Column column);

  // Rows in the given order (indices may repeat).
  Dataset subset_rows(std::span<const std::size_t> rows) const;
  // Keeps only the named columns; treatment/outcome tags survive if kept.
  Dataset select_columns(std::span<const std::string> names) const;
  // Covariates only: drops treatment and outcome columns and tags.
  Dataset covariates() const;

  // rows x names.size() matrix of the named columns.
  Eigen::MatrixXd matrix(std::span<const std::string> names) const;

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
  std::optional<std::string> treatment_;
  std::optional<std::string> outcome_;
};

}  // namespace icms
