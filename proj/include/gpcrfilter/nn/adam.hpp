#pragma once

#include <cmath>
#include <vector>

#include "gpcrfilter/nn/autograd.hpp"

namespace gpcrfilter::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions options) : params_(std::move(params)), opt_(options) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double g = static_cast<double>(p.grad[k]);
        m[k] = opt_.beta1 * m[k] + (1.0 - opt_.beta1) * g;
        v[k] = opt_.beta2 * v[k] + (1.0 - opt_.beta2) * g * g;
        const double update = opt_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt_.epsilon);
        p.value[k] = static_cast<T>(static_cast<double>(p.value[k]) - update);
      }
    }
  }

  long steps() const { return t_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace gpcrfilter::nn
