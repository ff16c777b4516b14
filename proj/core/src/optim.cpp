#include "sbssl/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sbssl/errors.hpp"

namespace sbssl {

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamSlots& state,
               double lr, double beta1, double beta2, double weight_decay, double epsilon) {
  const std::size_t n = params.size();
  if (grads.size() != n) {
    throw ShapeError("adam_step: " + std::to_string(n) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  }
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n) {
    throw ShapeError("adam_step: moment buffers sized " + std::to_string(state.m.size()) + "/" +
                     std::to_string(state.v.size()) + " for " + std::to_string(n) + " params");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const double shrink = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    params[i] *= shrink;
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

AdamW::AdamW(double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamW::add_parameter(const std::string& name, const Tensor& param, bool decay) {
  if (!param.defined()) throw Error("add_parameter: undefined tensor for " + name);
  if (has(name)) throw Error("add_parameter: duplicate name " + name);
  entries_.push_back(Entry{name, param, decay, AdamSlots{}});
}

void AdamW::step(double lr, double weight_decay) {
  ++steps_;
  for (Entry& e : entries_) {
    // A parameter untouched this pass contributes a zero gradient; the decay
    // shrink and moment decay still apply so the trajectory matches a dense
    // update.
    e.param.grad();
    adam_step(e.param.data(), e.param.grad(), e.slots, lr, beta1_, beta2_,
              e.decay ? weight_decay : 0.0, epsilon_);
  }
}

void AdamW::zero_grad() {
  for (Entry& e : entries_) e.param.zero_grad();
}

std::vector<std::string> AdamW::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.name);
  return out;
}

bool AdamW::has(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&name](const Entry& e) { return e.name == name; });
}

AdamW::Entry& AdamW::find(const std::string& name) {
  for (Entry& e : entries_) {
    if (e.name == name) return e;
  }
  throw Error("optimizer: unknown parameter " + name);
}

const AdamW::Entry& AdamW::find(const std::string& name) const {
  return const_cast<AdamW*>(this)->find(name);
}

Tensor AdamW::parameter(const std::string& name) const { return find(name).param; }

bool AdamW::decays(const std::string& name) const { return find(name).decay; }

AdamSlots& AdamW::slots(const std::string& name) { return find(name).slots; }

void AdamW::set_steps_taken(long steps) {
  steps_ = steps;
  for (Entry& e : entries_) e.slots.step = steps;
}

double cosine_weight_decay(int epoch, int total_epochs, double wd_start, double wd_end) {
  if (total_epochs <= 0) return wd_start;
  const double t = std::clamp(static_cast<double>(epoch) / static_cast<double>(total_epochs), 0.0, 1.0);
  constexpr double kPi = 3.141592653589793238462643383279502884;
  return wd_end + (wd_start - wd_end) * (1.0 + std::cos(kPi * t)) / 2.0;
}

double lr_at_epoch(int epoch, int total_epochs, double base_lr, double warmup_fraction,
                   double lr_floor) {
  if (total_epochs <= 0) return base_lr;
  epoch = std::clamp(epoch, 0, total_epochs - 1);
  const int warmup =
      std::max(1, static_cast<int>(std::ceil(warmup_fraction * static_cast<double>(total_epochs))));
  if (epoch < warmup) {
    return base_lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup);
  }
  // Cosine leg: epoch warmup-1 sits at base_lr, the last epoch at lr_floor.
  const int span = std::max(1, (total_epochs - 1) - (warmup - 1));
  const double q = static_cast<double>(epoch - (warmup - 1)) / static_cast<double>(span);
  constexpr double kPi = 3.141592653589793238462643383279502884;
  return lr_floor + (base_lr - lr_floor) * (1.0 + std::cos(kPi * q)) / 2.0;
}

}  // namespace sbssl
