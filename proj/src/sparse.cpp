#include "ksafc/sparse.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

namespace ksafc {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values))
{
    if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
        throw DimensionError("SparseMatrix: inconsistent CSR arrays");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        if (row_offsets_[i] > row_offsets_[i + 1]) {
            throw DimensionError("SparseMatrix: row offsets decrease at row " + std::to_string(i));
        }
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (col_indices_[k] >= cols_) {
                throw DimensionError("SparseMatrix: column index out of range in row " +
                                     std::to_string(i));
            }
            if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1]) {
                throw DimensionError("SparseMatrix: columns not sorted/unique in row " +
                                     std::to_string(i));
            }
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::span<const Triplet> triplets)
{
    std::vector<Triplet> sorted(triplets.begin(), triplets.end());
    for (const auto& t : sorted) {
        if (t.row >= rows || t.col >= cols) {
            throw DimensionError("from_triplets: entry outside " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
        }
    }
    std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row < b.row || (a.row == b.row && a.col < b.col);
    });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> cols_out;
    std::vector<double> vals;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (k > 0 && sorted[k].row == sorted[k - 1].row && sorted[k].col == sorted[k - 1].col) {
            vals.back() += sorted[k].value;
            continue;
        }
        cols_out.push_back(sorted[k].col);
        vals.push_back(sorted[k].value);
        ++offsets[sorted[k].row + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return {rows, cols, std::move(offsets), std::move(cols_out), std::move(vals)};
}

SparseMatrix SparseMatrix::identity(std::size_t n)
{
    std::vector<std::size_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return {n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0)};
}

std::size_t SparseMatrix::find(std::size_t i, std::size_t j) const
{
    if (i >= rows_) {
        return npos;
    }
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) {
        return npos;
    }
    return static_cast<std::size_t>(it - col_indices_.begin());
}

double SparseMatrix::at(std::size_t i, std::size_t j) const
{
    const auto k = find(i, j);
    return k == npos ? 0.0 : values_[k];
}

SparseMatrix SparseMatrix::zeros_like() const
{
    SparseMatrix z = *this;
    std::fill(z.values_.begin(), z.values_.end(), 0.0);
    return z;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const
{
    return rows_ == other.rows_ && cols_ == other.cols_ && row_offsets_ == other.row_offsets_ &&
           col_indices_ == other.col_indices_;
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x)
{
    if (x.size() != a.cols()) {
        throw DimensionError("spmv: matrix has " + std::to_string(a.cols()) +
                             " columns, vector has " + std::to_string(x.size()));
    }
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            sum += vals[k] * x[cols[k]];
        }
        y[i] = sum;
    }
    return y;
}

SparseMatrix add_scaled(const SparseMatrix& a, const SparseMatrix& b, double s)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("add_scaled: shape mismatch");
    }
    if (a.same_pattern(b)) {
        SparseMatrix out = a;
        auto out_vals = out.values();
        const auto b_vals = b.values();
        for (std::size_t k = 0; k < out_vals.size(); ++k) {
            out_vals[k] += s * b_vals[k];
        }
        return out;
    }
    std::vector<std::size_t> offsets{0};
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    const auto ao = a.row_offsets(), bo = b.row_offsets();
    const auto ac = a.col_indices(), bc = b.col_indices();
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::size_t p = ao[i], q = bo[i];
        while (p < ao[i + 1] || q < bo[i + 1]) {
            if (q == bo[i + 1] || (p < ao[i + 1] && ac[p] < bc[q])) {
                cols.push_back(ac[p]);
                vals.push_back(av[p]);
                ++p;
            } else if (p == ao[i + 1] || bc[q] < ac[p]) {
                cols.push_back(bc[q]);
                vals.push_back(s * bv[q]);
                ++q;
            } else {
                cols.push_back(ac[p]);
                vals.push_back(av[p] + s * bv[q]);
                ++p;
                ++q;
            }
        }
        offsets.push_back(cols.size());
    }
    return {a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals)};
}

std::vector<std::size_t> transpose_slots(const SparseMatrix& a)
{
    std::vector<std::size_t> slots(a.nnz());
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            const auto t = a.find(cols[k], i);
            if (t == SparseMatrix::npos) {
                throw DimensionError("transpose_slots: pattern is not structurally symmetric");
            }
            slots[k] = t;
        }
    }
    return slots;
}

SparseMatrix transpose(const SparseMatrix& a)
{
    std::vector<Triplet> trips;
    trips.reserve(a.nnz());
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            trips.push_back({cols[k], i, vals[k]});
        }
    }
    return SparseMatrix::from_triplets(a.cols(), a.rows(), trips);
}

double inf_norm(std::span<const double> x)
{
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

namespace {

using EigenCsr = Eigen::SparseMatrix<double, Eigen::RowMajor, std::ptrdiff_t>;
using EigenCsc = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenCsr to_eigen(const SparseMatrix& a)
{
    std::vector<Eigen::Triplet<double, std::ptrdiff_t>> trips;
    trips.reserve(a.nnz());
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            trips.emplace_back(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(cols[k]),
                               vals[k]);
        }
    }
    EigenCsr m(static_cast<std::ptrdiff_t>(a.rows()), static_cast<std::ptrdiff_t>(a.cols()));
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

} // namespace

struct LinearSolver::Impl {
    SparseMatrix matrix;
    EigenCsc csc;
    Eigen::SparseLU<EigenCsc, Eigen::COLAMDOrdering<int>> lu;
    Eigen::BiCGSTAB<EigenCsr, Eigen::DiagonalPreconditioner<double>> bicg;
    EigenCsr csr;
    std::vector<std::size_t> analyzed_offsets;
    std::vector<std::size_t> analyzed_cols;
    bool lu_ready = false;
    bool pattern_analyzed = false;

    void ensure_lu()
    {
        if (lu_ready) {
            return;
        }
        const auto offsets = matrix.row_offsets();
        const auto cols = matrix.col_indices();
        const bool reuse = pattern_analyzed &&
                           std::equal(offsets.begin(), offsets.end(), analyzed_offsets.begin(),
                                      analyzed_offsets.end()) &&
                           std::equal(cols.begin(), cols.end(), analyzed_cols.begin(),
                                      analyzed_cols.end());
        csc = EigenCsc(csr);
        csc.makeCompressed();
        if (!reuse) {
            lu.analyzePattern(csc);
            analyzed_offsets.assign(offsets.begin(), offsets.end());
            analyzed_cols.assign(cols.begin(), cols.end());
            pattern_analyzed = true;
        }
        lu.factorize(csc);
        lu_ready = true;
    }
};

LinearSolver::LinearSolver(SolverKind kind, double tol)
    : impl_(std::make_unique<Impl>()), kind_(kind), tol_(tol)
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("LinearSolver: tolerance must be positive");
    }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

void LinearSolver::factor(const SparseMatrix& a)
{
    if (a.rows() != a.cols()) {
        throw DimensionError("LinearSolver: matrix is not square");
    }
    impl_->matrix = a;
    impl_->csr = to_eigen(a);
    impl_->lu_ready = false;
    if (kind_ == SolverKind::Direct) {
        impl_->ensure_lu();
    } else {
        impl_->bicg.setTolerance(1e-2 * tol_);
        impl_->bicg.setMaxIterations(1000);
        impl_->bicg.compute(impl_->csr);
    }
}

std::vector<double> LinearSolver::solve(std::span<const double> b, SolveReport& report,
                                        std::span<const double> guess)
{
    const auto& a = impl_->matrix;
    if (b.size() != a.rows()) {
        throw DimensionError("LinearSolver::solve: right-hand side has wrong length");
    }
    report = {};
    const double bnorm = inf_norm(b);
    if (bnorm == 0.0) {
        report.success = true;
        report.direct = kind_ == SolverKind::Direct;
        return std::vector<double>(b.size(), 0.0);
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));

    auto residual = [&](const Eigen::VectorXd& x) {
        std::vector<double> xs(x.data(), x.data() + x.size());
        auto r = spmv(a, xs);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = b[i] - r[i];
        }
        return r;
    };

    Eigen::VectorXd x;
    if (kind_ == SolverKind::Iterative) {
        if (guess.size() == b.size()) {
            const Eigen::Map<const Eigen::VectorXd> x0(guess.data(),
                                                       static_cast<Eigen::Index>(guess.size()));
            x = impl_->bicg.solveWithGuess(rhs, x0);
        } else {
            x = impl_->bicg.solve(rhs);
        }
        report.direct = false;
        report.iterations = static_cast<int>(impl_->bicg.iterations());
        if (impl_->bicg.info() == Eigen::Success && x.allFinite()) {
            const auto r = residual(x);
            report.relative_residual = inf_norm(r) / bnorm;
            if (report.relative_residual <= tol_) {
                report.success = true;
                return {x.data(), x.data() + x.size()};
            }
        }
    }

    impl_->ensure_lu();
    report.direct = true;
    if (impl_->lu.info() != Eigen::Success) {
        report.success = false;
        report.relative_residual = std::numeric_limits<double>::infinity();
        return std::vector<double>(b.size(), 0.0);
    }
    x = impl_->lu.solve(rhs);
    for (int refine = 0; refine <= 3; ++refine) {
        if (!x.allFinite()) {
            break;
        }
        const auto r = residual(x);
        report.relative_residual = inf_norm(r) / bnorm;
        if (report.relative_residual <= tol_) {
            report.success = true;
            break;
        }
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
        x += impl_->lu.solve(rv);
        ++report.iterations;
    }
    if (!x.allFinite()) {
        report.success = false;
        report.relative_residual = std::numeric_limits<double>::infinity();
    }
    return {x.data(), x.data() + x.size()};
}

std::pair<std::vector<double>, SolveReport> solve(const SparseMatrix& a, std::span<const double> b,
                                                  double tol, SolverKind kind)
{
    LinearSolver solver(kind, tol);
    solver.factor(a);
    SolveReport report;
    auto x = solver.solve(b, report);
    return {std::move(x), report};
}

DominanceReport column_diagonal_dominance(const SparseMatrix& a)
{
    if (a.rows() != a.cols()) {
        throw DimensionError("column_diagonal_dominance: matrix is not square");
    }
    std::vector<double> diag(a.cols(), 0.0);
    std::vector<double> off(a.cols(), 0.0);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] == i) {
                diag[i] = std::abs(vals[k]);
            } else {
                off[cols[k]] += std::abs(vals[k]);
            }
        }
    }
    DominanceReport report;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.cols(); ++j) {
        report.worst_margin = std::min(report.worst_margin, diag[j] - off[j]);
    }
    if (a.cols() == 0) {
        report.worst_margin = 0.0;
    }
    report.dominant = a.cols() > 0 && report.worst_margin > 0.0;
    return report;
}

void write_coordinate(const SparseMatrix& a, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.precision(17);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            out << i << ' ' << cols[k] << ' ' << vals[k] << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

} // namespace ksafc
