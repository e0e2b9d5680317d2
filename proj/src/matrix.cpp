#include "pearl/matrix.hpp"

#include <cmath>

#include "pearl/error.hpp"

namespace pearl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        require(row.size() == m.cols_, ErrorKind::invalid_parameter, "ragged initializer rows");
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

void Matrix::fill(double value) {
    for (double& v : data_) v = value;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Row-partitioned i-k-j loop: each output row is produced by one thread with a
// fixed sequential summation order, so results do not depend on thread count.
Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), ErrorKind::invalid_parameter, "matmul shape mismatch");
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.data() + i * k;
        double* crow = c.data() + i * m;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b.data() + kk * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), ErrorKind::invalid_parameter, "matmul_nt shape mismatch");
    Matrix c(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.data() + i * k;
        double* crow = c.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.data() + j * k;
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
            crow[j] = s;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), ErrorKind::invalid_parameter, "matmul_tn shape mismatch");
    Matrix c(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    // Sequential over the reduction dimension; parallel over output rows would
    // need per-thread accumulators, and this path is not the hot one.
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = a.data() + r * k;
        const double* brow = b.data() + r * m;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = arow[i];
            double* crow = c.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

void add_inplace(Matrix& y, const Matrix& x) {
    require(y.same_shape(x), ErrorKind::invalid_parameter, "add_inplace shape mismatch");
    double* yd = y.data();
    const double* xd = x.data();
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] += xd[i];
}

void add_row_inplace(Matrix& y, const Matrix& row) {
    require(row.rows() == 1 && row.cols() == y.cols(), ErrorKind::invalid_parameter,
            "add_row_inplace shape mismatch");
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* yd = y.data() + r * y.cols();
        const double* rd = row.data();
        for (std::size_t c = 0; c < y.cols(); ++c) yd[c] += rd[c];
    }
}

Matrix col_sum(const Matrix& a) {
    Matrix s(1, a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* ad = a.data() + r * a.cols();
        for (std::size_t c = 0; c < a.cols(); ++c) s(0, c) += ad[c];
    }
    return s;
}

}  // namespace pearl
