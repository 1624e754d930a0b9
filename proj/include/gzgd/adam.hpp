#pragma once

#include <cmath>
#include <vector>

#include "gzgd/autodiff.hpp"

namespace gzgd {

// Adam (Kingma & Ba, 2015) with bias-corrected moments:
//   m <- b1*m + (1-b1)*g        mhat = m / (1 - b1^t)
//   v <- b2*v + (1-b2)*g^2      vhat = v / (1 - b2^t)
//   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
// Moment arithmetic runs in double regardless of the parameter dtype.
template <typename T>
class Adam {
  public:
    Adam(std::vector<NodeP<T>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto& p : params) {
            Slot s;
            s.param = std::move(p);
            s.m.assign(s.param->value.numel(), 0.0);
            s.v.assign(s.param->value.numel(), 0.0);
            slots_.push_back(std::move(s));
        }
    }

    long step_count() const { return t_; }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& s : slots_) {
            s.param->ensure_grad();
            T* theta = s.param->value.ptr();
            const T* g = s.param->grad.ptr();
            for (std::size_t i = 0; i < s.m.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
                s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
                const double mhat = s.m[i] / bc1;
                const double vhat = s.v[i] / bc2;
                theta[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    void zero_grad() {
        for (auto& s : slots_) s.param->zero_grad();
    }

  private:
    struct Slot {
        NodeP<T> param;
        std::vector<double> m, v;
    };

    std::vector<Slot> slots_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace gzgd
