#include "rtl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rtl {

Param& ParamStore::add(const std::string& name, std::vector<size_t> shape) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Param p;
  p.value = Tensor(shape);
  p.grad = Tensor(shape);
  p.m = Tensor(shape);
  p.v = Tensor(std::move(shape));
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

bool ParamStore::has(const std::string& name) const { return params_.count(name) > 0; }

std::vector<std::string> ParamStore::names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

void ParamStore::zero_grads(const std::vector<std::string>& names) {
  for (const auto& n : names) at(n).grad.fill(0.0);
}

void ParamStore::zero_all_grads() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

void init_feed_forward(ParamStore& store, const FeedForwardSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2) throw std::invalid_argument("feed-forward needs >= 2 widths");
  for (size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    size_t fan_in = spec.widths[i];
    size_t fan_out = spec.widths[i + 1];
    Param& w = store.add(spec.prefix + ".W" + std::to_string(i), {fan_in, fan_out});
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : w.value.data) x = rng.uniform(-limit, limit);
    store.add(spec.prefix + ".b" + std::to_string(i), {fan_out});
  }
}

static double activate(double x, Activation a) {
  return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

static double activate_grad(double pre, double post, Activation a) {
  return a == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - post * post;
}

Tensor feed_forward(const ParamStore& store, const FeedForwardSpec& spec, const Tensor& x,
                    FeedForwardCache* cache) {
  size_t layers = spec.widths.size() - 1;
  if (x.rank() != 2 || x.dim(1) != spec.widths[0])
    throw std::invalid_argument("feed_forward: input shape " + shape_str(x));
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  Tensor h = x;
  for (size_t i = 0; i < layers; ++i) {
    const Tensor& w = store.at(spec.prefix + ".W" + std::to_string(i)).value;
    const Tensor& b = store.at(spec.prefix + ".b" + std::to_string(i)).value;
    Tensor z = matmul(h, w);
    add_row_inplace(z, b);
    if (cache) cache->pre.push_back(z);
    bool last = (i + 1 == layers);
    bool affine_last = last && spec.output != OutputTransform::none;
    if (!affine_last) {
      for (double& v : z.data) v = activate(v, spec.act);
    }
    if (last && spec.output == OutputTransform::softmax) z = softmax_dim(z, 1);
    if (cache) cache->post.push_back(z);
    h = std::move(z);
  }
  return h;
}

Tensor feed_forward_backward(ParamStore& store, const FeedForwardSpec& spec,
                             const FeedForwardCache& cache, const Tensor& dout) {
  size_t layers = spec.widths.size() - 1;
  if (cache.pre.size() != layers) throw std::invalid_argument("feed_forward_backward: stale cache");
  Tensor d = dout;
  for (size_t ii = layers; ii-- > 0;) {
    const Tensor& pre = cache.pre[ii];
    const Tensor& post = cache.post[ii];
    bool last = (ii + 1 == layers);
    if (last && spec.output == OutputTransform::softmax) {
      // Through the row softmax: dz_i = p_i * (d_i - sum_j d_j p_j).
      Tensor dz(pre.shape);
      for (size_t r = 0; r < pre.dim(0); ++r) {
        double dot = 0.0;
        for (size_t c = 0; c < pre.dim(1); ++c) dot += d.at(r, c) * post.at(r, c);
        for (size_t c = 0; c < pre.dim(1); ++c)
          dz.at(r, c) = post.at(r, c) * (d.at(r, c) - dot);
      }
      d = std::move(dz);
    } else if (!(last && spec.output == OutputTransform::linear)) {
      for (size_t k = 0; k < d.size(); ++k) d[k] *= activate_grad(pre[k], post[k], spec.act);
    }
    const Tensor& in = (ii == 0) ? cache.input : cache.post[ii - 1];
    Param& w = store.at(spec.prefix + ".W" + std::to_string(ii));
    Param& b = store.at(spec.prefix + ".b" + std::to_string(ii));
    Tensor dw = matmul_tn(in, d);
    for (size_t k = 0; k < dw.size(); ++k) w.grad[k] += dw[k];
    for (size_t r = 0; r < d.dim(0); ++r)
      for (size_t c = 0; c < d.dim(1); ++c) b.grad[c] += d.at(r, c);
    d = matmul_nt(d, w.value);
  }
  return d;
}

Tensor softmax_dim(const Tensor& logits, int dim) {
  if (logits.rank() != 2) throw std::invalid_argument("softmax_dim expects a matrix");
  Tensor out(logits.shape);
  size_t rows = logits.dim(0), cols = logits.dim(1);
  if (dim == 1) {
    for (size_t r = 0; r < rows; ++r) {
      double mx = logits.at(r, 0);
      for (size_t c = 1; c < cols; ++c) mx = std::max(mx, logits.at(r, c));
      double sum = 0.0;
      for (size_t c = 0; c < cols; ++c) {
        double e = std::exp(logits.at(r, c) - mx);
        out.at(r, c) = e;
        sum += e;
      }
      for (size_t c = 0; c < cols; ++c) out.at(r, c) /= sum;
    }
  } else if (dim == 0) {
    for (size_t c = 0; c < cols; ++c) {
      double mx = logits.at(0, c);
      for (size_t r = 1; r < rows; ++r) mx = std::max(mx, logits.at(r, c));
      double sum = 0.0;
      for (size_t r = 0; r < rows; ++r) {
        double e = std::exp(logits.at(r, c) - mx);
        out.at(r, c) = e;
        sum += e;
      }
      for (size_t r = 0; r < rows; ++r) out.at(r, c) /= sum;
    }
  } else {
    throw std::invalid_argument("softmax_dim: dim must be 0 or 1");
  }
  return out;
}

static double clamp_prob(double p) { return p < 1e-12 ? 1e-12 : p; }

double cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size())
    throw std::invalid_argument("cross_entropy: shape/label mismatch");
  double total = 0.0;
  for (size_t r = 0; r < labels.size(); ++r) {
    int y = labels[r];
    if (y < 0 || static_cast<size_t>(y) >= probs.dim(1))
      throw std::invalid_argument("cross_entropy: label out of range");
    total -= std::log(clamp_prob(probs.at(r, static_cast<size_t>(y))));
  }
  return total / static_cast<double>(labels.size());
}

Tensor cross_entropy_backward(const Tensor& probs, const std::vector<int>& labels) {
  Tensor d(probs.shape);
  double n = static_cast<double>(labels.size());
  for (size_t r = 0; r < labels.size(); ++r) {
    double p = probs.at(r, static_cast<size_t>(labels[r]));
    if (p >= 1e-12) d.at(r, static_cast<size_t>(labels[r])) = -1.0 / (n * p);
    // below the clamp the loss is flat, so the gradient stays zero
  }
  return d;
}

double global_grad_norm(const ParamStore& store, const std::vector<std::string>& names) {
  double sq = 0.0;
  for (const auto& n : names)
    for (double g : store.at(n).grad.data) sq += g * g;
  return std::sqrt(sq);
}

void adam_step(ParamStore& store, const std::vector<std::string>& names, const AdamConfig& cfg) {
  if (cfg.lr == 0.0) {
    store.zero_grads(names);
    return;
  }
  double norm = global_grad_norm(store, names);
  double scale = (cfg.clip > 0.0 && norm > cfg.clip) ? cfg.clip / norm : 1.0;
  for (const auto& name : names) {
    Param& p = store.at(name);
    p.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
    for (size_t k = 0; k < p.value.size(); ++k) {
      double g = p.grad[k] * scale;
      p.m[k] = cfg.beta1 * p.m[k] + (1.0 - cfg.beta1) * g;
      p.v[k] = cfg.beta2 * p.v[k] + (1.0 - cfg.beta2) * g * g;
      double mhat = p.m[k] / bc1;
      double vhat = p.v[k] / bc2;
      p.value[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p.grad.fill(0.0);
  }
}

void sgd_step(ParamStore& store, const std::vector<std::string>& names, double lr, double clip) {
  if (lr == 0.0) {
    store.zero_grads(names);
    return;
  }
  double norm = global_grad_norm(store, names);
  double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  for (const auto& name : names) {
    Param& p = store.at(name);
    for (size_t k = 0; k < p.value.size(); ++k) p.value[k] -= lr * p.grad[k] * scale;
    p.grad.fill(0.0);
  }
}

double finite_diff_check(ParamStore& store, const std::string& name,
                         const std::function<double(bool)>& eval, double eps) {
  store.zero_all_grads();
  eval(true);
  Tensor analytic = store.at(name).grad;
  Param& p = store.at(name);
  double worst = 0.0;
  for (size_t k = 0; k < p.value.size(); ++k) {
    double saved = p.value[k];
    p.value[k] = saved + eps;
    double fp = eval(false);
    p.value[k] = saved - eps;
    double fm = eval(false);
    p.value[k] = saved;
    double numeric = (fp - fm) / (2.0 * eps);
    double a = analytic[k];
    double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  store.zero_all_grads();
  return worst;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw std::invalid_argument("matmul: inner dims disagree");
  Tensor out({m, n});
  for (size_t i = 0; i < m; ++i) {
    for (size_t x = 0; x < k; ++x) {
      double av = a.at(i, x);
      if (av == 0.0) continue;
      const double* brow = &b.data[x * n];
      double* orow = &out.data[i * n];
      for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw std::invalid_argument("matmul_tn: inner dims disagree");
  Tensor out({m, n});
  for (size_t x = 0; x < k; ++x) {
    const double* arow = &a.data[x * m];
    const double* brow = &b.data[x * n];
    for (size_t i = 0; i < m; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* orow = &out.data[i * n];
      for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) throw std::invalid_argument("matmul_nt: inner dims disagree");
  Tensor out({m, n});
  for (size_t i = 0; i < m; ++i) {
    const double* arow = &a.data[i * k];
    for (size_t j = 0; j < n; ++j) {
      const double* brow = &b.data[j * k];
      double s = 0.0;
      for (size_t x = 0; x < k; ++x) s += arow[x] * brow[x];
      out.at(i, j) = s;
    }
  }
  return out;
}

void add_row_inplace(Tensor& x, const Tensor& row) {
  size_t rows = x.dim(0), cols = x.dim(1);
  if (row.size() != cols) throw std::invalid_argument("add_row_inplace: width mismatch");
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) x.at(r, c) += row[c];
}

Tensor concat_cols(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  size_t rows = parts[0]->dim(0);
  size_t cols = 0;
  for (const Tensor* t : parts) {
    if (t->dim(0) != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += t->dim(1);
  }
  Tensor out({rows, cols});
  for (size_t r = 0; r < rows; ++r) {
    size_t off = 0;
    for (const Tensor* t : parts) {
      for (size_t c = 0; c < t->dim(1); ++c) out.at(r, off + c) = t->at(r, c);
      off += t->dim(1);
    }
  }
  return out;
}

}  // namespace rtl
