#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace packetlm {

// Dense row-major matrix. Deliberately minimal: the model code needs
// contiguous rows and a handful of accumulate kernels, nothing more.
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}

    T* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    T& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), T(0)); }

    bool operator==(const Mat&) const = default;
};

// C[0..m) x [0..n) += A[0..m) x [0..k) * B[0..k) x [0..n)
// Row-major friendly loop order (i, k, j): inner loop streams B and C rows.
template <typename T>
void matmul_acc(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = A + static_cast<size_t>(i) * k;
        T* crow = C + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = B + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[0..k) x [0..n) += A^T * B where A is m x k, B is m x n.
template <typename T>
void matmul_tA_acc(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = A + static_cast<size_t>(i) * k;
        const T* brow = B + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            T* crow = C + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[0..m) x [0..k) += A * B^T where A is m x n, B is k x n.
template <typename T>
void matmul_tB_acc(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = A + static_cast<size_t>(i) * n;
        T* crow = C + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const T* brow = B + static_cast<size_t>(p) * n;
            T s = T(0);
            for (int j = 0; j < n; ++j) s += arow[j] * brow[j];
            crow[p] += s;
        }
    }
}

} // namespace packetlm
