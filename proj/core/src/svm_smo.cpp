#include <algorithm>
#include <cmath>
#include <list>
#include <unordered_map>
#include <vector>

#include "hemocyte/error.hpp"
#include "hemocyte/smo.hpp"

namespace hemocyte {

namespace {

// Caches kernel matrix rows under an LRU policy so pair sweeps do not
// recompute the full Gram matrix, while large problems stay within a fixed
// memory envelope (~64 MB of rows).
class KernelCache {
 public:
  KernelCache(const FeatureMatrix& x, SvmKernel kernel, double gamma)
      : x_(x), kernel_(kernel), gamma_(gamma) {
    const size_t n = static_cast<size_t>(x.rows);
    const size_t budget = (64u << 20) / (8u * std::max<size_t>(n, 1));
    cap_ = std::max<size_t>(4, std::min(n, budget));
  }

  // pin1/pin2 are never evicted while fetching this row.
  const std::vector<double>& row(int i, int pin1, int pin2) {
    auto it = rows_.find(i);
    if (it != rows_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first;
    }
    while (rows_.size() >= cap_) {
      bool evicted = false;
      for (auto r = lru_.rbegin(); r != lru_.rend(); ++r) {
        if (*r == pin1 || *r == pin2) continue;
        rows_.erase(*r);
        lru_.erase(std::next(r).base());
        evicted = true;
        break;
      }
      if (!evicted) break;  // everything pinned; allow temporary overshoot
    }
    std::vector<double> vals(x_.rows);
    const float* a = x_.row(i);
    for (int j = 0; j < x_.rows; ++j)
      vals[j] = svm_kernel_eval(kernel_, gamma_, a, x_.row(j), x_.cols);
    lru_.push_front(i);
    auto [pos, inserted] = rows_.emplace(i, std::make_pair(std::move(vals), lru_.begin()));
    (void)inserted;
    return pos->second.first;
  }

 private:
  const FeatureMatrix& x_;
  SvmKernel kernel_;
  double gamma_;
  size_t cap_;
  std::list<int> lru_;
  std::unordered_map<int, std::pair<std::vector<double>, std::list<int>::iterator>> rows_;
};

class Solver {
 public:
  Solver(const FeatureMatrix& x, const std::vector<int>& y, SvmKernel kernel, double c,
         double gamma, double tol)
      : x_(x), y_(y), c_(c), tol_(tol), n_(x.rows), cache_(x, kernel, gamma) {
    alpha_.assign(n_, 0.0);
    fcache_.assign(n_, 0.0);
  }

  SmoResult run(int max_passes) {
    bool examine_all = true;
    SmoResult res;
    while (res.passes < max_passes) {
      int changed = 0;
      if (examine_all) {
        for (int i = 0; i < n_; ++i) changed += examine(i);
      } else {
        for (int i = 0; i < n_; ++i)
          if (alpha_[i] > 0.0 && alpha_[i] < c_) changed += examine(i);
      }
      ++res.passes;
      if (examine_all) {
        if (changed == 0) {
          res.converged = true;
          break;
        }
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    res.alpha = alpha_;
    res.b = b_;
    return res;
  }

 private:
  double err(int i) const { return fcache_[i] + b_ - y_[i]; }
  bool non_bound(int i) const { return alpha_[i] > 0.0 && alpha_[i] < c_; }

  int examine(int i2) {
    const double e2 = err(i2);
    const double r2 = e2 * y_[i2];
    if (!((r2 < -tol_ && alpha_[i2] < c_) || (r2 > tol_ && alpha_[i2] > 0.0))) return 0;

    // second-choice heuristic: largest |E1 - E2| among non-bound points,
    // smallest index on ties
    int best = -1;
    double best_gap = -1.0;
    for (int i = 0; i < n_; ++i) {
      if (i == i2 || !non_bound(i)) continue;
      const double gap = std::abs(err(i) - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && take_step(best, i2, e2)) return 1;
    for (int i = 0; i < n_; ++i)
      if (non_bound(i) && take_step(i, i2, e2)) return 1;
    for (int i = 0; i < n_; ++i)
      if (!non_bound(i) && take_step(i, i2, e2)) return 1;
    return 0;
  }

  bool take_step(int i1, int i2, double e2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const int y1 = y_[i1], y2 = y_[i2];
    const double s = y1 * y2;
    const double e1 = err(i1);

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (lo >= hi) return false;

    const std::vector<double>& k1 = cache_.row(i1, i1, i2);
    const std::vector<double>& k2 = cache_.row(i2, i1, i2);
    const double k11 = k1[i1], k12 = k1[i2], k22 = k2[i2];
    const double eta = k11 + k22 - 2.0 * k12;

    double a2new;
    if (eta > 0.0) {
      a2new = a2 + y2 * (e1 - e2) / eta;
      a2new = std::clamp(a2new, lo, hi);
    } else {
      // flat or concave direction: compare the dual objective at both ends
      const double v1 = fcache_[i1] - y1 * a1 * k11 - y2 * a2 * k12;
      const double v2 = fcache_[i2] - y1 * a1 * k12 - y2 * a2 * k22;
      const double g = a1 + s * a2;
      auto obj = [&](double a2v) {
        const double a1v = g - s * a2v;
        return 0.5 * k11 * a1v * a1v + 0.5 * k22 * a2v * a2v + s * k12 * a1v * a2v +
               y1 * a1v * v1 + y2 * a2v * v2 - a1v - a2v;
      };
      const double lobj = obj(lo), hobj = obj(hi);
      if (lobj < hobj - 1e-12)
        a2new = lo;
      else if (lobj > hobj + 1e-12)
        a2new = hi;
      else
        return false;
    }

    if (std::abs(a2new - a2) < 1e-8 * (a2new + a2 + 1e-8)) return false;

    double a1new = a1 + s * (a2 - a2new);
    if (a1new < 0.0) {
      a2new += s * a1new;
      a1new = 0.0;
    } else if (a1new > c_) {
      a2new += s * (a1new - c_);
      a1new = c_;
    }

    const double b1 = b_ - e1 - y1 * (a1new - a1) * k11 - y2 * (a2new - a2) * k12;
    const double b2 = b_ - e2 - y1 * (a1new - a1) * k12 - y2 * (a2new - a2) * k22;
    if (a1new > 0.0 && a1new < c_)
      b_ = b1;
    else if (a2new > 0.0 && a2new < c_)
      b_ = b2;
    else
      b_ = 0.5 * (b1 + b2);

    const double d1 = (a1new - a1) * y1;
    const double d2 = (a2new - a2) * y2;
    for (int k = 0; k < n_; ++k) fcache_[k] += d1 * k1[k] + d2 * k2[k];
    alpha_[i1] = a1new;
    alpha_[i2] = a2new;
    return true;
  }

  const FeatureMatrix& x_;
  const std::vector<int>& y_;
  double c_;
  double tol_;
  int n_;
  KernelCache cache_;
  std::vector<double> alpha_;
  std::vector<double> fcache_;
  double b_ = 0.0;
};

}  // namespace

SmoResult smo_train(const FeatureMatrix& x, const std::vector<int>& y, SvmKernel kernel, double c,
                    double gamma, double tol, int max_passes) {
  if (x.rows < 2) throw Error(ErrorCode::InsufficientData, "smo_train: need at least 2 samples");
  if (static_cast<int>(y.size()) != x.rows)
    throw Error(ErrorCode::DimensionMismatch, "smo_train: label count does not match rows");
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidParams, "smo_train: C must be positive");
  if (kernel == SvmKernel::Rbf && !(gamma > 0.0))
    throw Error(ErrorCode::InvalidParams, "smo_train: rbf gamma must be positive");
  if (max_passes < 1) throw Error(ErrorCode::InvalidParams, "smo_train: max_passes must be >= 1");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw Error(ErrorCode::InvalidData, "smo_train: labels must be +1/-1");
  }
  if (!pos || !neg)
    throw Error(ErrorCode::InvalidData, "smo_train: both classes must be present");

  Solver solver(x, y, kernel, c, gamma, tol);
  return solver.run(max_passes);
}

}  // namespace hemocyte
