#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attrinf/common.hpp"
#include "attrinf/nn/graph.hpp"

namespace attrinf::nn {

// Named dense parameter tensors plus matching gradient buffers.
template <typename S>
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Mat<S>> values;

  int add(std::string name, Mat<S> value) {
    names.push_back(std::move(name));
    values.push_back(std::move(value));
    return static_cast<int>(values.size()) - 1;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown parameter '" + name + "'");
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& v : values) n += static_cast<std::size_t>(v.size());
    return n;
  }

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    out.names = names;
    out.values.reserve(values.size());
    for (const auto& v : values) out.values.push_back(v.template cast<T>());
    return out;
  }
};

// Adam with bias correction; moments live here, one slot per parameter.
template <typename S>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet<S>& params, const std::vector<Mat<S>>& grads) {
    if (m_.empty()) {
      for (const auto& v : params.values) {
        m_.push_back(Mat<S>::Zero(v.rows(), v.cols()));
        v_.push_back(Mat<S>::Zero(v.rows(), v.cols()));
      }
    }
    ++t_;
    const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    const S corr1 = static_cast<S>(1.0 - std::pow(beta1_, t_));
    const S corr2 = static_cast<S>(1.0 - std::pow(beta2_, t_));
    const S lr = static_cast<S>(lr_), eps = static_cast<S>(eps_);
    for (std::size_t i = 0; i < params.values.size(); ++i) {
      if (grads[i].size() == 0) continue;
      m_[i] = b1 * m_[i] + (S(1) - b1) * grads[i];
      v_[i] = (b2 * v_[i].array() +
               (S(1) - b2) * grads[i].array().square())
                  .matrix();
      params.values[i].array() -=
          lr * (m_[i].array() / corr1) /
          ((v_[i].array() / corr2).sqrt() + eps);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace attrinf::nn
