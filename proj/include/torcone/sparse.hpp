#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"

namespace torcone {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }
inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

class SparseMatrix {
public:
    SparseMatrix() = default;

    // Builds an all-zero matrix with the given per-row column sets.
    static SparseMatrix from_pattern(int rows, int cols, std::vector<std::vector<int>> pattern) {
        SparseMatrix a;
        a.rows_ = rows;
        a.cols_ = cols;
        a.row_ptr_.assign(rows + 1, 0);
        for (int i = 0; i < rows; ++i) {
            auto& p = pattern[i];
            std::sort(p.begin(), p.end());
            p.erase(std::unique(p.begin(), p.end()), p.end());
            a.row_ptr_[i + 1] = a.row_ptr_[i] + static_cast<int>(p.size());
        }
        a.col_.reserve(a.row_ptr_[rows]);
        for (int i = 0; i < rows; ++i) a.col_.insert(a.col_.end(), pattern[i].begin(), pattern[i].end());
        a.val_.assign(a.col_.size(), 0.0);
        return a;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return val_.size(); }
    const std::vector<int>& row_offsets() const { return row_ptr_; }
    const std::vector<int>& column_indices() const { return col_; }
    const std::vector<double>& values() const { return val_; }
    std::vector<double>& values() { return val_; }

    int find(int i, int j) const {
        const auto b = col_.begin() + row_ptr_[i], e = col_.begin() + row_ptr_[i + 1];
        const auto it = std::lower_bound(b, e, j);
        return (it != e && *it == j) ? static_cast<int>(it - col_.begin()) : -1;
    }
    void add(int i, int j, double v) {
        const int k = find(i, j);
        if (k < 0) throw Error("SparseMatrix::add", "entry outside the sparsity pattern");
        val_[k] += v;
    }
    double operator()(int i, int j) const {
        const int k = find(i, j);
        return k < 0 ? 0.0 : val_[k];
    }

    void multiply(const Vector& x, Vector& y) const {
        y.assign(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k] * x[col_[k]];
            y[i] = s;
        }
    }
    Vector operator*(const Vector& x) const {
        Vector y;
        multiply(x, y);
        return y;
    }

    Vector diagonal() const {
        Vector d(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) d[i] = (*this)(i, i);
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : val_) m = std::max(m, std::abs(v));
        return m;
    }

    // alpha*A + beta*B on the union pattern
    static SparseMatrix combine(double alpha, const SparseMatrix& A, double beta, const SparseMatrix& B) {
        std::vector<std::vector<int>> pat(A.rows_);
        for (int i = 0; i < A.rows_; ++i) {
            for (int k = A.row_ptr_[i]; k < A.row_ptr_[i + 1]; ++k) pat[i].push_back(A.col_[k]);
            for (int k = B.row_ptr_[i]; k < B.row_ptr_[i + 1]; ++k) pat[i].push_back(B.col_[k]);
        }
        SparseMatrix C = from_pattern(A.rows_, A.cols_, std::move(pat));
        for (int i = 0; i < A.rows_; ++i) {
            for (int k = A.row_ptr_[i]; k < A.row_ptr_[i + 1]; ++k) C.add(i, A.col_[k], alpha * A.val_[k]);
            for (int k = B.row_ptr_[i]; k < B.row_ptr_[i + 1]; ++k) C.add(i, B.col_[k], beta * B.val_[k]);
        }
        return C;
    }

    // Restriction to the index set keep (new index = position in keep; -1 marks dropped rows).
    SparseMatrix submatrix(const std::vector<int>& keep) const {
        std::vector<int> map(rows_, -1);
        for (std::size_t n = 0; n < keep.size(); ++n) map[keep[n]] = static_cast<int>(n);
        const int n = static_cast<int>(keep.size());
        SparseMatrix s;
        s.rows_ = s.cols_ = n;
        s.row_ptr_.assign(n + 1, 0);
        for (int r = 0; r < n; ++r) {
            const int i = keep[r];
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const int c = map[col_[k]];
                if (c < 0) continue;
                s.col_.push_back(c);
                s.val_.push_back(val_[k]);
            }
            s.row_ptr_[r + 1] = static_cast<int>(s.col_.size());
        }
        return s;
    }

    void write_triplets(std::ostream& os) const {
        os.precision(17);
        os << rows_ << " " << cols_ << " " << nnz() << "\n";
        for (int i = 0; i < rows_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) os << i << " " << col_[k] << " " << val_[k] << "\n";
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_;
    std::vector<double> val_;
};

struct CgStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients; x holds the initial guess on entry.
// Also valid for singular symmetric A when b is orthogonal to the kernel.
inline CgStats conjugate_gradient(const SparseMatrix& A, const Vector& b, Vector& x, double rel_tol,
                                  const std::string& where, int max_iter = -1) {
    const int n = A.rows();
    if (max_iter < 0) max_iter = 10 * std::max(n, 1);
    if (x.size() != static_cast<std::size_t>(n)) x.assign(n, 0.0);
    Vector inv_diag = A.diagonal();
    for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;
    Vector r, Ap;
    A.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double bnorm = norm(b);
    CgStats st;
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        return st;
    }
    Vector zv(n), p(n);
    for (int i = 0; i < n; ++i) zv[i] = inv_diag[i] * r[i];
    p = zv;
    double rz = dot(r, zv);
    std::vector<double> history;
    double rn = norm(r) / bnorm;
    history.push_back(rn);
    int it = 0;
    while (rn > rel_tol) {
        if (it >= max_iter)
            throw SolverError(where, "conjugate gradient stagnated after " + std::to_string(it) +
                                         " iterations (relative residual " + std::to_string(rn) + ")",
                              history);
        A.multiply(p, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0))
            throw SolverError(where, "conjugate gradient breakdown (p'Ap = " + std::to_string(pAp) + ")", history);
        const double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        for (int i = 0; i < n; ++i) zv[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, zv);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = zv[i] + beta * p[i];
        ++it;
        rn = norm(r) / bnorm;
        history.push_back(rn);
    }
    st.iterations = it;
    st.relative_residual = rn;
    return st;
}

}  // namespace torcone
