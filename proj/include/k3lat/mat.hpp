#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cassert>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace k3lat {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Dense matrix over an exact scalar (Int or Rat). Vectors are n x 1 matrices.
template <class T>
class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int r, int c) : rows_(r), cols_(c), a_(static_cast<size_t>(r) * c) {
    assert(r >= 0 && c >= 0);
  }
  Mat(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
    a_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != cols_)
        throw std::invalid_argument("ragged matrix literal");
      for (const auto& x : r) a_.push_back(x);
    }
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }
  static Mat zero(int r, int c) { return Mat(r, c); }
  static Mat col_vec(std::initializer_list<T> xs) {
    Mat m(static_cast<int>(xs.size()), 1);
    int i = 0;
    for (const auto& x : xs) m(i++, 0) = x;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  T& operator()(int i, int j) {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return a_[static_cast<size_t>(i) * cols_ + j];
  }
  const T& operator()(int i, int j) const {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return a_[static_cast<size_t>(i) * cols_ + j];
  }

  bool operator==(const Mat& o) const = default;

  Mat operator+(const Mat& o) const {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    Mat m(rows_, cols_);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] + o.a_[k];
    return m;
  }
  Mat operator-(const Mat& o) const {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    Mat m(rows_, cols_);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] - o.a_[k];
    return m;
  }
  Mat operator-() const {
    Mat m(rows_, cols_);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = -a_[k];
    return m;
  }
  Mat operator*(const Mat& o) const {
    assert(cols_ == o.rows_);
    Mat m(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const T& x = (*this)(i, k);
        if (x == 0) continue;
        for (int j = 0; j < o.cols_; ++j) m(i, j) += x * o(k, j);
      }
    return m;
  }
  Mat operator*(const T& s) const {
    Mat m(rows_, cols_);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] * s;
    return m;
  }

  Mat transposed() const {
    Mat m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }

  Mat col(int j) const {
    Mat m(rows_, 1);
    for (int i = 0; i < rows_; ++i) m(i, 0) = (*this)(i, j);
    return m;
  }
  Mat row(int i) const {
    Mat m(1, cols_);
    for (int j = 0; j < cols_; ++j) m(0, j) = (*this)(i, j);
    return m;
  }
  void set_col(int j, const Mat& v) {
    assert(v.rows_ == rows_ && v.cols_ == 1);
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = v(i, 0);
  }

  // Columns selected by index list.
  Mat cols_at(const std::vector<int>& idx) const {
    Mat m(rows_, static_cast<int>(idx.size()));
    for (int j = 0; j < m.cols_; ++j)
      for (int i = 0; i < rows_; ++i) m(i, j) = (*this)(i, idx[j]);
    return m;
  }

  bool is_zero() const {
    for (const auto& x : a_)
      if (x != 0) return false;
    return true;
  }
  bool is_square() const { return rows_ == cols_; }
  bool is_identity() const {
    if (!is_square()) return false;
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if ((*this)(i, j) != (i == j ? 1 : 0)) return false;
    return true;
  }
  bool is_symmetric() const {
    if (!is_square()) return false;
    for (int i = 0; i < rows_; ++i)
      for (int j = i + 1; j < cols_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  void swap_rows(int i, int j) {
    if (i == j) return;
    for (int k = 0; k < cols_; ++k) std::swap((*this)(i, k), (*this)(j, k));
  }
  void swap_cols(int i, int j) {
    if (i == j) return;
    for (int k = 0; k < rows_; ++k) std::swap((*this)(k, i), (*this)(k, j));
  }
  // row i += c * row j
  void add_row_multiple(int i, int j, const T& c) {
    for (int k = 0; k < cols_; ++k) (*this)(i, k) += c * (*this)(j, k);
  }
  // col i += c * col j
  void add_col_multiple(int i, int j, const T& c) {
    for (int k = 0; k < rows_; ++k) (*this)(k, i) += c * (*this)(k, j);
  }
  void scale_row(int i, const T& c) {
    for (int k = 0; k < cols_; ++k) (*this)(i, k) *= c;
  }
  void scale_col(int j, const T& c) {
    for (int k = 0; k < rows_; ++k) (*this)(k, j) *= c;
  }

  std::string str() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < rows_; ++i) {
      os << (i ? " [" : "[");
      for (int j = 0; j < cols_; ++j) os << (j ? "," : "") << (*this)(i, j);
      os << "]";
      if (i + 1 < rows_) os << "\n";
    }
    os << "]";
    return os.str();
  }

 private:
  int rows_, cols_;
  std::vector<T> a_;
};

using MatZ = Mat<Int>;
using MatQ = Mat<Rat>;

inline MatQ to_rat(const MatZ& m) {
  MatQ q(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) q(i, j) = Rat(m(i, j));
  return q;
}

inline bool is_integral(const MatQ& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (boost::multiprecision::denominator(m(i, j)) != 1) return false;
  return true;
}

inline MatZ to_int(const MatQ& m) {
  MatZ z(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (boost::multiprecision::denominator(m(i, j)) != 1)
        throw std::invalid_argument("matrix entry not integral");
      z(i, j) = boost::multiprecision::numerator(m(i, j));
    }
  return z;
}

template <class T>
Mat<T> hstack(const Mat<T>& a, const Mat<T>& b) {
  if (a.empty() && a.rows() == 0) return b;
  if (b.empty() && b.rows() == 0) return a;
  assert(a.rows() == b.rows());
  Mat<T> m(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
    for (int j = 0; j < b.cols(); ++j) m(i, a.cols() + j) = b(i, j);
  }
  return m;
}

template <class T>
Mat<T> vstack(const Mat<T>& a, const Mat<T>& b) {
  assert(a.cols() == b.cols());
  Mat<T> m(a.rows() + b.rows(), a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) m(i, j) = a(i, j);
    for (int i = 0; i < b.rows(); ++i) m(a.rows() + i, j) = b(i, j);
  }
  return m;
}

// Block diagonal of two square matrices.
template <class T>
Mat<T> block_diag(const Mat<T>& a, const Mat<T>& b) {
  Mat<T> m(a.rows() + b.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) m(a.rows() + i, a.cols() + j) = b(i, j);
  return m;
}

// u^T G v for column vectors u, v.
inline Int pair_with(const MatZ& gram, const MatZ& u, const MatZ& v) {
  assert(u.cols() == 1 && v.cols() == 1);
  MatZ p = u.transposed() * gram * v;
  return p(0, 0);
}

inline Int content(const MatZ& v) {
  Int g = 0;
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) g = boost::multiprecision::gcd(g, v(i, j));
  return g;
}

inline bool is_primitive_vector(const MatZ& v) { return content(v) == 1; }

inline MatZ unit_vec(int n, int i) {
  MatZ v(n, 1);
  v(i, 0) = 1;
  return v;
}

}  // namespace k3lat
