#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace ksafc {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Compressed sparse row matrix. Column indices are sorted and unique per row.
///
/// Explicit zeros are kept in the pattern so that matrices assembled on the
/// same mesh share an identical layout.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                 std::vector<std::size_t> col_indices, std::vector<double> values);

    /// Duplicates are summed.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::span<const Triplet> triplets);
    static SparseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Slot of (i, j) in values(), or npos when structurally absent.
    std::size_t find(std::size_t i, std::size_t j) const;
    double at(std::size_t i, std::size_t j) const;

    /// Copy with the same pattern and every value set to zero.
    SparseMatrix zeros_like() const;
    bool same_pattern(const SparseMatrix& other) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);

/// A + s*B on the union pattern.
SparseMatrix add_scaled(const SparseMatrix& a, const SparseMatrix& b, double s);

/// For a structurally symmetric matrix, the slot of (j, i) for every slot (i, j).
std::vector<std::size_t> transpose_slots(const SparseMatrix& a);

SparseMatrix transpose(const SparseMatrix& a);

struct SolveReport {
    bool success = false;
    bool direct = true;
    int iterations = 0;
    double relative_residual = 0.0;
};

enum class SolverKind { Direct, Iterative };

/// Solves A x = b with ||Ax - b||_inf <= tol * ||b||_inf.
///
/// Direct mode factors with a sparse LU and applies iterative refinement when
/// the first residual misses the tolerance. Iterative mode runs Jacobi
/// preconditioned BiCGSTAB and falls back to the direct path on failure.
class LinearSolver {
public:
    explicit LinearSolver(SolverKind kind = SolverKind::Direct, double tol = 1e-12);
    ~LinearSolver();
    LinearSolver(LinearSolver&&) noexcept;
    LinearSolver& operator=(LinearSolver&&) noexcept;

    /// Prepares A. The pattern analysis is cached and reused when the next
    /// matrix has the same pattern.
    void factor(const SparseMatrix& a);
    /// guess seeds the iterative mode; it is ignored by the direct path.
    std::vector<double> solve(std::span<const double> b, SolveReport& report,
                              std::span<const double> guess = {});

    double tolerance() const { return tol_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    SolverKind kind_;
    double tol_;
};

std::pair<std::vector<double>, SolveReport> solve(const SparseMatrix& a, std::span<const double> b,
                                                  double tol = 1e-12,
                                                  SolverKind kind = SolverKind::Direct);

struct DominanceReport {
    bool dominant = false;
    /// min_j (|a_jj| - sum_{i != j} |a_ij|)
    double worst_margin = 0.0;
};

DominanceReport column_diagonal_dominance(const SparseMatrix& a);

double inf_norm(std::span<const double> x);

/// "row col value" per line, 0-based.
void write_coordinate(const SparseMatrix& a, const std::filesystem::path& path);

} // namespace ksafc
