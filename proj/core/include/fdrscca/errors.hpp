#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fdrscca {

// Base of every error raised by the library. `name()` is a stable identifier
// (e.g. "NotPositiveDefinite") that the CLI prints on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string_view name, const std::string& what)
      : std::runtime_error(what), name_(name) {}

  std::string_view name() const noexcept { return name_; }

 private:
  std::string_view name_;
};

#define FDRSCCA_SIMPLE_ERROR(Type)                            \
  class Type : public Error {                                 \
   public:                                                    \
    explicit Type(const std::string& what) : Error(#Type, what) {} \
  }

FDRSCCA_SIMPLE_ERROR(AsymmetricBlock);
FDRSCCA_SIMPLE_ERROR(AsymmetricInput);
FDRSCCA_SIMPLE_ERROR(DimensionMismatch);
FDRSCCA_SIMPLE_ERROR(SingularCovariance);
FDRSCCA_SIMPLE_ERROR(DimensionTooHigh);
FDRSCCA_SIMPLE_ERROR(InfeasiblePenalty);
FDRSCCA_SIMPLE_ERROR(EmptyGrid);
FDRSCCA_SIMPLE_ERROR(FoldTooSmall);
FDRSCCA_SIMPLE_ERROR(TooFewRows);
FDRSCCA_SIMPLE_ERROR(TooManyActive);
FDRSCCA_SIMPLE_ERROR(EmptyPreliminarySupport);
FDRSCCA_SIMPLE_ERROR(InvalidArgument);

#undef FDRSCCA_SIMPLE_ERROR

// Errors that point at a specific row/column/pivot.
class IndexedError : public Error {
 public:
  IndexedError(std::string_view name, std::size_t index, const std::string& what)
      : Error(name, what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ConstantColumn : public IndexedError {
 public:
  explicit ConstantColumn(std::size_t column)
      : IndexedError("ConstantColumn", column,
                     "column " + std::to_string(column) + " has zero sample variance") {}
};

class NotPositiveDefinite : public IndexedError {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : IndexedError("NotPositiveDefinite", pivot,
                     "Cholesky factorization failed at pivot " + std::to_string(pivot)) {}
};

class NonPositiveVariance : public IndexedError {
 public:
  explicit NonPositiveVariance(std::size_t i)
      : IndexedError("NonPositiveVariance", i,
                     "estimated null variance is not positive at index " + std::to_string(i)) {}
};

class InvalidPValue : public IndexedError {
 public:
  explicit InvalidPValue(std::size_t i)
      : IndexedError("InvalidPValue", i,
                     "p-value at index " + std::to_string(i) + " is outside [0, 1]") {}
};

}  // namespace fdrscca
