#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rtl/rng.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

// One trainable tensor with its gradient accumulator and Adam state. The
// moments live next to the value so any update path sees the same history.
struct Param {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  uint64_t step = 0;
};

// Named parameter collection. Ordered map keeps iteration (and therefore
// norm clipping and serialization) deterministic.
class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<size_t> shape);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const;

  // All names, or those beginning with the given prefix, in sorted order.
  std::vector<std::string> names(const std::string& prefix = "") const;

  void zero_grads(const std::vector<std::string>& names);
  void zero_all_grads();

  std::map<std::string, Param>& entries() { return params_; }
  const std::map<std::string, Param>& entries() const { return params_; }

 private:
  std::map<std::string, Param> params_;
};

enum class Activation { relu, tanh };

// What the final layer emits: `none` activates every layer (a plain stack of
// nonlinear layers), the other two leave the last layer affine and then
// either apply a row softmax or nothing.
enum class OutputTransform { none, softmax, linear };

struct FeedForwardSpec {
  std::string prefix;          // parameter names are prefix + ".W0", ".b0", ...
  std::vector<size_t> widths;  // [input, hidden..., output]
  Activation act = Activation::relu;
  OutputTransform output = OutputTransform::none;
};

// Creates glorot-initialized weights and zero biases for every layer.
void init_feed_forward(ParamStore& store, const FeedForwardSpec& spec, Rng& rng);

// Intermediate activations kept for the backward pass.
struct FeedForwardCache {
  Tensor input;
  std::vector<Tensor> pre;   // pre-activation outputs per layer
  std::vector<Tensor> post;  // what the next layer consumed
};

// Applies the network to a [n, input] batch, returning [n, output]. Pass a
// cache when a backward pass will follow.
Tensor feed_forward(const ParamStore& store, const FeedForwardSpec& spec, const Tensor& x,
                    FeedForwardCache* cache = nullptr);

// Accumulates parameter gradients from dL/d(output) and returns dL/d(input).
Tensor feed_forward_backward(ParamStore& store, const FeedForwardSpec& spec,
                             const FeedForwardCache& cache, const Tensor& dout);

// Row (dim = 1) or column (dim = 0) softmax of a 2-d tensor, computed with
// max subtraction so large logits stay finite.
Tensor softmax_dim(const Tensor& logits, int dim);

// Mean negative log-likelihood of the labeled class. Probabilities are
// clamped to 1e-12 before the log.
double cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// dL/dprobs for the mean cross-entropy above.
Tensor cross_entropy_backward(const Tensor& probs, const std::vector<int>& labels);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 5.0;  // global gradient norm ceiling over the updated set
};

// One optimizer step over the named parameters: clip the joint gradient
// norm, apply bias-corrected Adam per entry, zero the gradients, advance
// each entry's step counter. lr = 0 leaves values and moments untouched
// (gradients are still cleared).
void adam_step(ParamStore& store, const std::vector<std::string>& names, const AdamConfig& cfg);

// Plain gradient step with the same clipping and grad-clearing contract as
// adam_step, but no moment or step-counter state. Step size scales with the
// actual gradient magnitude, so near-zero gradients barely move the values;
// the policy net relies on that to keep reward noise from accumulating.
void sgd_step(ParamStore& store, const std::vector<std::string>& names, double lr,
              double clip = 5.0);

// Compares analytic gradients against central differences for one named
// parameter. `eval(true)` must accumulate gradients into the store and
// return the loss; `eval(false)` must only return the loss. Returns the
// largest relative error |a - n| / max(1e-8, |a| + |n|) over the entries.
double finite_diff_check(ParamStore& store, const std::string& name,
                         const std::function<double(bool)>& eval, double eps = 1e-5);

// Small dense helpers shared by the model code.
Tensor matmul(const Tensor& a, const Tensor& b);                  // [m,k]x[k,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);               // a^T x b
Tensor matmul_nt(const Tensor& a, const Tensor& b);               // a x b^T
void add_row_inplace(Tensor& x, const Tensor& row);               // broadcast add
Tensor concat_cols(const std::vector<const Tensor*>& parts);      // along dim 1

double global_grad_norm(const ParamStore& store, const std::vector<std::string>& names);

}  // namespace rtl
