#include "gesture/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gesture/error.hpp"
#include "gesture/kernels.hpp"

namespace gesture::ag {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (!x.defined() || x.rank() != rank) {
    fail(ErrorKind::Shape, std::string(op) + " expects a rank-" + std::to_string(rank) +
                               " tensor, got " + (x.defined() ? to_string(x.shape()) : "undefined"));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Shape, std::string(op) + ": shape " + to_string(a.shape()) + " vs " +
                               to_string(b.shape()));
  }
}

// Scratch when a parent does not need its gradient but the kernel writes one.
std::span<double> grad_or_scratch(const Node& self, std::size_t i, std::vector<double>& scratch) {
  if (double* g = self.parent_grad(i)) return {g, self.parents[i]->value.size()};
  scratch.assign(self.parents[i]->value.size(), 0.0);
  return scratch;
}

std::size_t reflect_index(std::size_t m, std::size_t length) {
  const std::size_t r = m % (2 * length);
  return r < length ? r : 2 * length - 1 - r;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, "add", [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = self.parent_grad(p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x.values()[i];
  return make_result(x.shape(), std::move(out), {x}, "scale", [factor](Node& self) {
    double* g = self.parent_grad(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_result({1}, {acc}, {x}, "sum", [](Node& self) {
    double* g = self.parent_grad(0);
    const std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.numel()) {
    fail(ErrorKind::Shape, "cannot reshape " + to_string(x.shape()) + " to " + to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(out), {x}, "reshape", [](Node& self) {
    double* g = self.parent_grad(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 3, "conv1d input");
  require_rank(weight, 3, "conv1d weight");
  require_rank(bias, 1, "conv1d bias");
  if (weight.dim(2) != kernels::kConvTaps) fail(ErrorKind::Shape, "conv1d kernel size must be 3");
  if (weight.dim(1) != x.dim(1)) {
    fail(ErrorKind::Shape, "conv1d channel mismatch: input has " + std::to_string(x.dim(1)) +
                               ", weight expects " + std::to_string(weight.dim(1)));
  }
  if (bias.dim(0) != weight.dim(0)) fail(ErrorKind::Shape, "conv1d bias size mismatch");
  const kernels::Conv1dShape s{x.dim(0), x.dim(1), weight.dim(0), x.dim(2)};
  std::vector<double> out(s.batch * s.out_channels * s.length);
  kernels::parallel::conv1d_forward(s, x.values(), weight.values(), bias.values(), out);
  return make_result({s.batch, s.out_channels, s.length}, std::move(out), {x, weight, bias},
                     "conv1d", [s](Node& self) {
                       if (double* gx = self.parent_grad(0)) {
                         kernels::parallel::conv1d_backward_input(
                             s, self.grad, self.parent_value(1),
                             {gx, self.parents[0]->value.size()});
                       }
                       if (self.parents[1]->requires_grad || self.parents[2]->requires_grad) {
                         std::vector<double> sw, sb;
                         auto gw = grad_or_scratch(self, 1, sw);
                         auto gb = grad_or_scratch(self, 2, sb);
                         kernels::parallel::conv1d_backward_weight(s, self.parent_value(0),
                                                                   self.grad, gw, gb);
                       }
                     });
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, Mode mode) {
  require_rank(x, 3, "batchnorm1d input");
  const kernels::ChannelShape s{x.dim(0), x.dim(1), x.dim(2)};
  if (gamma.numel() != s.channels || beta.numel() != s.channels ||
      state.channels() != s.channels) {
    fail(ErrorKind::Shape, "batchnorm1d parameter size does not match " +
                               std::to_string(s.channels) + " channels");
  }
  std::vector<double> mean(s.channels), var(s.channels), inv_std(s.channels);
  if (mode == Mode::Train) {
    const std::size_t count = s.batch * s.length;
    if (count < 2) fail(ErrorKind::Shape, "batchnorm1d training needs at least 2 values per channel");
    kernels::parallel::channel_moments(s, x.values(), mean, var);
    const double unbias = static_cast<double>(count) / static_cast<double>(count - 1);
    for (std::size_t c = 0; c < s.channels; ++c) {
      inv_std[c] = 1.0 / std::sqrt(var[c] + state.eps);
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c] * unbias;
    }
    state.initialized = true;
  } else {
    if (!state.initialized) {
      fail(ErrorKind::State, "batchnorm1d in eval mode before any training step");
    }
    mean = state.running_mean;
    for (std::size_t c = 0; c < s.channels; ++c) {
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }
  std::vector<double> xhat(x.numel()), out(x.numel());
  kernels::parallel::batchnorm_apply(s, x.values(), mean, inv_std, gamma.values(), beta.values(),
                                     xhat, out);
  const bool training = mode == Mode::Train;
  return make_result(
      x.shape(), std::move(out), {x, gamma, beta}, "batchnorm1d",
      [s, training, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        std::vector<double> sx, sg, sb;
        auto gx = grad_or_scratch(self, 0, sx);
        auto gg = grad_or_scratch(self, 1, sg);
        auto gb = grad_or_scratch(self, 2, sb);
        const auto& gamma_v = self.parent_value(1);
        if (training) {
          kernels::parallel::batchnorm_backward(s, self.grad, xhat, inv_std, gamma_v, gx, gg, gb);
          return;
        }
        for (std::size_t n = 0; n < s.batch; ++n) {
          for (std::size_t c = 0; c < s.channels; ++c) {
            for (std::size_t t = 0; t < s.length; ++t) {
              const std::size_t i = (n * s.channels + c) * s.length + t;
              gx[i] += self.grad[i] * gamma_v[c] * inv_std[c];
              gg[c] += self.grad[i] * xhat[i];
              gb[c] += self.grad[i];
            }
          }
        }
      });
}

Tensor maxpool1d(const Tensor& x) {
  require_rank(x, 3, "maxpool1d");
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t T = x.dim(2);
  if (T % 2 != 0) fail(ErrorKind::Shape, "maxpool1d needs an even temporal length, got " + std::to_string(T));
  const std::size_t half = T / 2;
  std::vector<double> out(rows * half);
  std::vector<std::size_t> argmax(rows * half);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < half; ++i) {
      const std::size_t a = r * T + 2 * i;
      const std::size_t pick = v[a] >= v[a + 1] ? a : a + 1;
      out[r * half + i] = v[pick];
      argmax[r * half + i] = pick;
    }
  }
  return make_result({x.dim(0), x.dim(1), half}, std::move(out), {x}, "maxpool1d",
                     [argmax = std::move(argmax)](Node& self) {
                       double* g = self.parent_grad(0);
                       for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += self.grad[i];
                     });
}

Tensor upsample_nearest(const Tensor& x) {
  require_rank(x, 3, "upsample_nearest");
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t T = x.dim(2);
  std::vector<double> out(rows * 2 * T);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < T; ++t) {
      out[r * 2 * T + 2 * t] = v[r * T + t];
      out[r * 2 * T + 2 * t + 1] = v[r * T + t];
    }
  }
  return make_result({x.dim(0), x.dim(1), 2 * T}, std::move(out), {x}, "upsample_nearest",
                     [rows, T](Node& self) {
                       double* g = self.parent_grad(0);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t t = 0; t < T; ++t) {
                           g[r * T + t] += self.grad[r * 2 * T + 2 * t] + self.grad[r * 2 * T + 2 * t + 1];
                         }
                       }
                     });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.values()[i]);
  return make_result(x.shape(), std::move(out), {x}, "relu", [](Node& self) {
    double* g = self.parent_grad(0);
    const auto& in = self.parent_value(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (in[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.values()[i];
    // Split by sign so exp never overflows.
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_result(x.shape(), out, {x}, "sigmoid", [out](Node& self) {
    double* g = self.parent_grad(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * out[i] * (1.0 - out[i]);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  require_rank(bias, 1, "linear bias");
  const std::size_t N = x.dim(0), in = x.dim(1), outd = weight.dim(0);
  if (weight.dim(1) != in) fail(ErrorKind::Shape, "linear: input width does not match weight");
  if (bias.dim(0) != outd) fail(ErrorKind::Shape, "linear: bias size mismatch");
  std::vector<double> out(N * outd);
  const auto xv = x.values(), wv = weight.values(), bv = bias.values();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < outd; ++o) {
      double acc = bv[o];
      for (std::size_t i = 0; i < in; ++i) acc += wv[o * in + i] * xv[n * in + i];
      out[n * outd + o] = acc;
    }
  }
  return make_result({N, outd}, std::move(out), {x, weight, bias}, "linear",
                     [N, in, outd](Node& self) {
                       const auto& xv = self.parent_value(0);
                       const auto& wv = self.parent_value(1);
                       double* gx = self.parent_grad(0);
                       double* gw = self.parent_grad(1);
                       double* gb = self.parent_grad(2);
                       for (std::size_t n = 0; n < N; ++n) {
                         for (std::size_t o = 0; o < outd; ++o) {
                           const double g = self.grad[n * outd + o];
                           if (gb) gb[o] += g;
                           for (std::size_t i = 0; i < in; ++i) {
                             if (gx) gx[n * in + i] += g * wv[o * in + i];
                             if (gw) gw[o * in + i] += g * xv[n * in + i];
                           }
                         }
                       }
                     });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(0) != b.dim(0)) fail(ErrorKind::Shape, "concat_channels: batch size mismatch");
  if (a.dim(2) != b.dim(2)) {
    fail(ErrorKind::Shape, "concat_channels: temporal length " + std::to_string(a.dim(2)) +
                               " vs " + std::to_string(b.dim(2)));
  }
  const std::size_t N = a.dim(0), ca = a.dim(1), cb = b.dim(1), T = a.dim(2);
  std::vector<double> out(N * (ca + cb) * T);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(a.values().begin() + n * ca * T, ca * T, out.begin() + n * (ca + cb) * T);
    std::copy_n(b.values().begin() + n * cb * T, cb * T, out.begin() + (n * (ca + cb) + ca) * T);
  }
  return make_result({N, ca + cb, T}, std::move(out), {a, b}, "concat_channels",
                     [N, ca, cb, T](Node& self) {
                       double* ga = self.parent_grad(0);
                       double* gb = self.parent_grad(1);
                       for (std::size_t n = 0; n < N; ++n) {
                         const double* g = self.grad.data() + n * (ca + cb) * T;
                         if (ga) {
                           for (std::size_t i = 0; i < ca * T; ++i) ga[n * ca * T + i] += g[i];
                         }
                         if (gb) {
                           for (std::size_t i = 0; i < cb * T; ++i) gb[n * cb * T + i] += g[ca * T + i];
                         }
                       }
                     });
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 3, "slice_channels");
  const std::size_t N = x.dim(0), C = x.dim(1), T = x.dim(2);
  if (begin + count > C) fail(ErrorKind::Shape, "slice_channels: range exceeds channel count");
  std::vector<double> out(N * count * T);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(x.values().begin() + (n * C + begin) * T, count * T, out.begin() + n * count * T);
  }
  return make_result({N, count, T}, std::move(out), {x}, "slice_channels",
                     [N, C, T, begin, count](Node& self) {
                       double* g = self.parent_grad(0);
                       for (std::size_t n = 0; n < N; ++n) {
                         for (std::size_t i = 0; i < count * T; ++i) {
                           g[(n * C + begin) * T + i] += self.grad[n * count * T + i];
                         }
                       }
                     });
}

Tensor flatten(const Tensor& x) {
  if (!x.defined() || x.rank() < 1) fail(ErrorKind::Shape, "flatten needs a batch dimension");
  const std::size_t N = x.dim(0);
  return reshape(x, {N, N == 0 ? 0 : x.numel() / N});
}

Tensor pad_time_reflect(const Tensor& x, std::size_t right) {
  require_rank(x, 3, "pad_time_reflect");
  const std::size_t rows = x.dim(0) * x.dim(1), T = x.dim(2), P = T + right;
  if (T == 0) fail(ErrorKind::Shape, "pad_time_reflect on an empty sequence");
  std::vector<double> out(rows * P);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < P; ++t) out[r * P + t] = x.values()[r * T + reflect_index(t, T)];
  }
  return make_result({x.dim(0), x.dim(1), P}, std::move(out), {x}, "pad_time_reflect",
                     [rows, T, P](Node& self) {
                       double* g = self.parent_grad(0);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t t = 0; t < P; ++t) {
                           g[r * T + reflect_index(t, T)] += self.grad[r * P + t];
                         }
                       }
                     });
}

Tensor crop_time(const Tensor& x, std::size_t begin, std::size_t length) {
  require_rank(x, 3, "crop_time");
  const std::size_t rows = x.dim(0) * x.dim(1), T = x.dim(2);
  if (begin + length > T) fail(ErrorKind::Shape, "crop_time: range exceeds temporal length");
  std::vector<double> out(rows * length);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.values().begin() + r * T + begin, length, out.begin() + r * length);
  }
  return make_result({x.dim(0), x.dim(1), length}, std::move(out), {x}, "crop_time",
                     [rows, T, begin, length](Node& self) {
                       double* g = self.parent_grad(0);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t t = 0; t < length; ++t) {
                           g[r * T + begin + t] += self.grad[r * length + t];
                         }
                       }
                     });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_rank(pred, 3, "l1_loss");
  require_same_shape(pred, target, "l1_loss");
  const double inv_batch = 1.0 / static_cast<double>(pred.dim(0));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) acc += std::abs(pred.values()[i] - target.values()[i]);
  return make_result({1}, {acc * inv_batch}, {pred, target}, "l1_loss", [inv_batch](Node& self) {
    const auto& p = self.parent_value(0);
    const auto& q = self.parent_value(1);
    double* gp = self.parent_grad(0);
    double* gq = self.parent_grad(1);
    const double up = self.grad[0] * inv_batch;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - q[i];
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (gp) gp[i] += up * sign;
      if (gq) gq[i] -= up * sign;
    }
  });
}

Tensor l2_loss(const Tensor& pred, const Tensor& target) {
  require_rank(pred, 3, "l2_loss");
  require_same_shape(pred, target, "l2_loss");
  const std::size_t N = pred.dim(0), C = pred.dim(1), T = pred.dim(2);
  const double inv_batch = 1.0 / static_cast<double>(N);
  std::vector<double> norms(N * T, 0.0);
  const auto p = pred.values(), q = target.values();
  double acc = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      double sq = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = p[(n * C + c) * T + t] - q[(n * C + c) * T + t];
        sq += d * d;
      }
      norms[n * T + t] = std::sqrt(sq);
      acc += norms[n * T + t];
    }
  }
  return make_result({1}, {acc * inv_batch}, {pred, target}, "l2_loss",
                     [N, C, T, inv_batch, norms = std::move(norms)](Node& self) {
                       const auto& p = self.parent_value(0);
                       const auto& q = self.parent_value(1);
                       double* gp = self.parent_grad(0);
                       double* gq = self.parent_grad(1);
                       const double up = self.grad[0] * inv_batch;
                       for (std::size_t n = 0; n < N; ++n) {
                         for (std::size_t t = 0; t < T; ++t) {
                           const double norm = norms[n * T + t];
                           if (norm == 0.0) continue;
                           for (std::size_t c = 0; c < C; ++c) {
                             const std::size_t i = (n * C + c) * T + t;
                             const double g = up * (p[i] - q[i]) / norm;
                             if (gp) gp[i] += g;
                             if (gq) gq[i] -= g;
                           }
                         }
                       }
                     });
}

Tensor bce_loss(const Tensor& prob, std::span<const double> labels) {
  if (prob.numel() != labels.size() || labels.empty()) {
    fail(ErrorKind::Shape, "bce_loss: " + std::to_string(prob.numel()) + " probabilities vs " +
                               std::to_string(labels.size()) + " labels");
  }
  const std::size_t N = labels.size();
  const double inv = 1.0 / static_cast<double>(N);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double p = std::clamp(prob.values()[i], kProbClamp, 1.0 - kProbClamp);
    acc -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  std::vector<double> y(labels.begin(), labels.end());
  return make_result({1}, {acc * inv}, {prob}, "bce_loss", [inv, y = std::move(y)](Node& self) {
    const auto& pv = self.parent_value(0);
    double* g = self.parent_grad(0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double raw = pv[i];
      // Zero gradient where the clamp is active.
      if (raw < kProbClamp || raw > 1.0 - kProbClamp) continue;
      g[i] += self.grad[0] * inv * (-(y[i] / raw) + (1.0 - y[i]) / (1.0 - raw));
    }
  });
}

}  // namespace gesture::ag
