#pragma once

#include <string>
#include <vector>

#include "sbssl/tensor.hpp"

namespace sbssl {

/// First/second moment running averages plus the completed step count.
struct AdamSlots {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One bias-corrected Adam update with decoupled weight decay. The decay
/// shrink p <- p * (1 - lr*wd) happens before the moment-driven delta.
/// Empty slots are initialized to zeros on first use.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamSlots& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double weight_decay = 0.0,
               double epsilon = 1e-8);

/// Named leaf parameters with per-tensor decay flags and Adam slots.
/// Registration order is stable and defines checkpoint buffer order.
class AdamW {
 public:
  explicit AdamW(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  /// decay=false exempts the tensor from weight decay (biases, norm affines,
  /// class token, position table).
  void add_parameter(const std::string& name, const Tensor& param, bool decay);

  void step(double lr, double weight_decay);
  void zero_grad();

  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> names() const;
  bool has(const std::string& name) const;
  Tensor parameter(const std::string& name) const;
  bool decays(const std::string& name) const;
  AdamSlots& slots(const std::string& name);
  long steps_taken() const { return steps_; }
  void set_steps_taken(long steps);

  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return epsilon_; }

 private:
  struct Entry {
    std::string name;
    Tensor param;
    bool decay;
    AdamSlots slots;
  };
  Entry& find(const std::string& name);
  const Entry& find(const std::string& name) const;

  std::vector<Entry> entries_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
};

/// wd_end + (wd_start - wd_end) * (1 + cos(pi * epoch/total)) / 2.
/// Endpoints: epoch 0 gives wd_start, epoch == total gives wd_end.
double cosine_weight_decay(int epoch, int total_epochs, double wd_start = 0.04,
                           double wd_end = 0.4);

/// Linear warmup over ceil(warmup_fraction * total) epochs up to base_lr,
/// then half-cosine decay reaching lr_floor at the last epoch.
double lr_at_epoch(int epoch, int total_epochs, double base_lr = 5e-4,
                   double warmup_fraction = 0.05, double lr_floor = 1e-6);

}  // namespace sbssl
