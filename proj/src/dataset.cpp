#include "icms/dataset.hpp"

#include <algorithm>

#include "icms/error.hpp"

namespace icms {

std::string_view column_kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous:
      return "continuous";
    case ColumnKind::kBinary:
      return "binary";
    case ColumnKind::kCategorical:
      return "categorical";
  }
  return "continuous";
}

ColumnKind parse_column_kind(std::string_view name) {
  if (name == "continuous") return ColumnKind::kContinuous;
  if (name == "binary") return ColumnKind::kBinary;
  if (name == "categorical") return ColumnKind::kCategorical;
  fail(ErrorCode::kInvalidArgument, "unknown column kind '" + std::string(name) + "'");
}

Dataset::Dataset(std::vector<Column> columns, std::optional<std::string> treatment,
                 std::optional<std::string> outcome) {
  for (auto& c : columns) add_column(std::move(c));
  set_treatment(std::move(treatment));
  set_outcome(std::move(outcome));
}

void Dataset::add_column(Column column) {
  if (has_column(column.name)) {
    fail(ErrorCode::kSchemaMismatch, "duplicate column '" + column.name + "'");
  }
  if (!columns_.empty() && column.values.size() != rows_) {
    fail(ErrorCode::kLengthMismatch,
         "column '" + column.name + "' has " + std::to_string(column.values.size()) +
             " rows, expected " + std::to_string(rows_));
  }
  if (columns_.empty()) rows_ = column.values.size();
  columns_.push_back(std::move(column));
}

void Dataset::set_treatment(std::optional<std::string> name) {
  if (name && !has_column(*name)) {
    fail(ErrorCode::kSchemaMismatch, "treatment column '" + *name + "' not present");
  }
  treatment_ = std::move(name);
}

void Dataset::set_outcome(std::optional<std::string> name) {
  if (name && !has_column(*name)) {
    fail(ErrorCode::kSchemaMismatch, "outcome column '" + *name + "' not present");
  }
  outcome_ = std::move(name);
}

std::optional<std::size_t> Dataset::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

bool Dataset::has_column(std::string_view name) const { return index_of(name).has_value(); }

const Column& Dataset::column(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) fail(ErrorCode::kColumnMismatch, "no column named '" + std::string(name) + "'");
  return columns_[*idx];
}

std::vector<std::string> Dataset::covariate_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (treatment_ && c.name == *treatment_) continue;
    if (outcome_ && c.name == *outcome_) continue;
    out.push_back(c.name);
  }
  return out;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  for (const auto& c : columns_) {
    Column copy{c.name, c.kind, {}};
    copy.values.reserve(rows.size());
    for (std::size_t r : rows) copy.values.push_back(c.values.at(r));
    out.add_column(std::move(copy));
  }
  if (columns_.empty()) out.rows_ = 0;
  out.treatment_ = treatment_;
  out.outcome_ = outcome_;
  return out;
}

Dataset Dataset::select_columns(std::span<const std::string> names) const {
  Dataset out;
  for (const auto& n : names) out.add_column(column(n));
  if (treatment_ && out.has_column(*treatment_)) out.treatment_ = treatment_;
  if (outcome_ && out.has_column(*outcome_)) out.outcome_ = outcome_;
  return out;
}

Dataset Dataset::covariates() const {
  auto names = covariate_names();
  Dataset out;
  for (const auto& n : names) out.add_column(column(n));
  return out;
}

Eigen::MatrixXd Dataset::matrix(std::span<const std::string> names) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& v = column(names[j]).values;
    m.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return m;
}

}  // namespace icms
