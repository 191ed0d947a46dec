#pragma once

#include "ava/graph.hpp"
#include "ava/rng.hpp"

#include <functional>

namespace ava::testing {

struct LossEval {
  double loss = 0.0;
  uint64_t signature = 0;  // Graph::activation_signature of the forward pass
};

// Central finite-difference gradient check. A probe is compared only when
// the +h / -h / center forwards share the activation signature (same smooth
// piece of the loss); across a ReLU kink the difference quotient is not a
// derivative estimate, so such probes are skipped. Returns
// ||g_fd - g_ad||_2 / max(1e-12, ||g_fd||_2 + ||g_ad||_2) over the probed
// coordinates (up to max_coords per tensor, seeded).
inline double grad_check(const std::function<LossEval(bool)>& loss_with_backward,
                         ParamStore& store, const std::vector<std::string>& names,
                         double h = 1e-3, int max_coords = 24, uint64_t seed = 99,
                         int* probes_used = nullptr) {
  store.zero_grads();
  const LossEval center = loss_with_backward(true);
  std::map<std::string, Tensor> analytic = store.grads;

  double diff2 = 0.0, fd2 = 0.0, ad2 = 0.0;
  int used = 0;
  for (const auto& name : names) {
    Tensor& value = store.at(name);
    RngStream rng = derive_stream(seed, "grad-check", {fnv1a(name)});
    const int64_t n = value.size();
    const int probes = int(std::min<int64_t>(n, max_coords));
    for (int p = 0; p < probes; ++p) {
      const int64_t i = probes == n ? p : int64_t(rng.next_u64() % uint64_t(n));
      const double saved = value.data[size_t(i)];
      value.data[size_t(i)] = saved + h;
      const LossEval lp = loss_with_backward(false);
      value.data[size_t(i)] = saved - h;
      const LossEval lm = loss_with_backward(false);
      value.data[size_t(i)] = saved;
      if (lp.signature != center.signature || lm.signature != center.signature)
        continue;  // crossed an activation kink; difference quotient invalid
      const double fd = (lp.loss - lm.loss) / (2.0 * h);
      const auto it = analytic.find(name);
      const double ad = it == analytic.end() ? 0.0 : it->second.data[size_t(i)];
      diff2 += (fd - ad) * (fd - ad);
      fd2 += fd * fd;
      ad2 += ad * ad;
      ++used;
    }
  }
  if (probes_used) *probes_used = used;
  return std::sqrt(diff2) / std::max(1e-12, std::sqrt(fd2) + std::sqrt(ad2));
}

}  // namespace ava::testing
