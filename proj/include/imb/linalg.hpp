#ifndef IMB_LINALG_HPP
#define IMB_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace imb {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(Vec& y, double c, std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

/// Ridge-regularized Gram matrix of observed contexts, kept together with its
/// inverse. The inverse is maintained by the Sherman-Morrison rank-one update
/// (O(d^2) per observation) and refreshed from scratch every
/// `kRefreshInterval` updates to bound accumulated floating-point drift.
class DesignMatrix {
 public:
  static constexpr int kMaxDim = 128;
  static constexpr int kRefreshInterval = 512;

  DesignMatrix(int dim, double reg) : dim_(dim), reg_(reg) {
    if (dim < 1) throw std::invalid_argument("DesignMatrix: dim must be >= 1");
    if (dim > kMaxDim)
      throw std::invalid_argument("DesignMatrix: dim exceeds supported limit");
    if (!(reg > 0.0))
      throw std::invalid_argument(
          "DesignMatrix: ridge penalty must be positive (inverse undefined)");
    gram_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    inv_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) {
      at(gram_, i, i) = reg;
      at(inv_, i, i) = 1.0 / reg;
    }
  }

  int dim() const { return dim_; }
  double reg() const { return reg_; }
  double gram(int i, int j) const { return at(gram_, i, j); }
  double inv(int i, int j) const { return at(inv_, i, j); }

  /// V += y y^T; inverse updated in place via Sherman-Morrison.
  void update(std::span<const double> y) {
    check_dim(y);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) at(gram_, i, j) += y[i] * y[j];

    // (V + yy^T)^-1 = V^-1 - (V^-1 y)(V^-1 y)^T / (1 + y^T V^-1 y)
    Vec u(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j) s += at(inv_, i, j) * y[j];
      u[i] = s;
    }
    double denom = 1.0 + dot(u, y);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) at(inv_, i, j) -= u[i] * u[j] / denom;
    symmetrize(inv_);

    if (++updates_since_refresh_ >= kRefreshInterval) refresh_inverse();
  }

  /// sqrt(y^T V^-1 y); the norm inside the exploration bonus.
  double quad_norm(std::span<const double> y) const {
    check_dim(y);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double row = 0.0;
      for (int j = 0; j < dim_; ++j) row += at(inv_, i, j) * y[j];
      s += y[i] * row;
    }
    return std::sqrt(std::max(s, 0.0));
  }

  /// x = V^-1 rhs via the maintained inverse.
  Vec solve(std::span<const double> rhs) const {
    check_dim(rhs);
    Vec x(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j) s += at(inv_, i, j) * rhs[j];
      x[i] = s;
    }
    return x;
  }

  /// max |gram * inv - I| entry; on-demand consistency diagnostic.
  double identity_residual() const {
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) s += at(gram_, i, k) * at(inv_, k, j);
        worst = std::max(worst, std::fabs(s - (i == j ? 1.0 : 0.0)));
      }
    }
    return worst;
  }

  /// Recompute the inverse by Gauss-Jordan solve of gram * X = I.
  void refresh_inverse() {
    inv_ = invert_dense(gram_, dim_);
    symmetrize(inv_);
    updates_since_refresh_ = 0;
  }

  /// Gauss-Jordan with partial pivoting; row-major n x n input.
  static Vec invert_dense(const Vec& m, int n) {
    Vec a = m;
    Vec inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
      int pivot = col;
      double best = std::fabs(a[static_cast<std::size_t>(col) * n + col]);
      for (int r = col + 1; r < n; ++r) {
        double v = std::fabs(a[static_cast<std::size_t>(r) * n + col]);
        if (v > best) {
          best = v;
          pivot = r;
        }
      }
      if (best == 0.0) throw std::runtime_error("invert_dense: singular matrix");
      if (pivot != col) {
        for (int j = 0; j < n; ++j) {
          std::swap(a[static_cast<std::size_t>(pivot) * n + j],
                    a[static_cast<std::size_t>(col) * n + j]);
          std::swap(inv[static_cast<std::size_t>(pivot) * n + j],
                    inv[static_cast<std::size_t>(col) * n + j]);
        }
      }
      double piv = a[static_cast<std::size_t>(col) * n + col];
      for (int j = 0; j < n; ++j) {
        a[static_cast<std::size_t>(col) * n + j] /= piv;
        inv[static_cast<std::size_t>(col) * n + j] /= piv;
      }
      for (int r = 0; r < n; ++r) {
        if (r == col) continue;
        double f = a[static_cast<std::size_t>(r) * n + col];
        if (f == 0.0) continue;
        for (int j = 0; j < n; ++j) {
          a[static_cast<std::size_t>(r) * n + j] -=
              f * a[static_cast<std::size_t>(col) * n + j];
          inv[static_cast<std::size_t>(r) * n + j] -=
              f * inv[static_cast<std::size_t>(col) * n + j];
        }
      }
    }
    return inv;
  }

 private:
  double& at(Vec& m, int i, int j) {
    return m[static_cast<std::size_t>(i) * dim_ + j];
  }
  double at(const Vec& m, int i, int j) const {
    return m[static_cast<std::size_t>(i) * dim_ + j];
  }

  void check_dim(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != dim_)
      throw std::invalid_argument("DesignMatrix: dimension mismatch");
  }

  void symmetrize(Vec& m) {
    for (int i = 0; i < dim_; ++i) {
      for (int j = i + 1; j < dim_; ++j) {
        double avg = 0.5 * (at(m, i, j) + at(m, j, i));
        at(m, i, j) = avg;
        at(m, j, i) = avg;
      }
    }
  }

  int dim_;
  double reg_;
  Vec gram_;
  Vec inv_;
  int updates_since_refresh_ = 0;
};

}  // namespace imb

#endif  // IMB_LINALG_HPP
