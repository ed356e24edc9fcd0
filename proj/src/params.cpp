#include "ritznet/params.hpp"

#include <cmath>

#include "ritznet/rng.hpp"

namespace ritznet {

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "sine") return Activation::Sine;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation kind: '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Sine: return "sine";
    case Activation::Identity: return "identity";
  }
  throw InternalError("bad activation enum");
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw ConfigError("network: input dimension must be >= 1");
  if (widths.empty()) throw ConfigError("network: need at least one hidden layer");
  for (int w : widths)
    if (w < 1) throw ConfigError("network: layer width must be >= 1");
}

long param_count(const NetworkSpec& spec) {
  spec.validate();
  long total = 0;
  int prev = spec.input_dim;
  for (int w : spec.widths) {
    total += static_cast<long>(w) * prev + w;
    prev = w;
  }
  total += prev;  // bias-free output row
  return total;
}

ParamStore make_param_store(const NetworkSpec& spec) {
  ParamStore store;
  store.values = Vec::Zero(param_count(spec));
  long off = 0;
  int prev = spec.input_dim;
  for (int w : spec.widths) {
    LayerLayout l;
    l.rows = w;
    l.cols = prev;
    l.w_offset = off;
    off += static_cast<long>(w) * prev;
    l.b_offset = off;
    off += w;
    store.layout.push_back(l);
    prev = w;
  }
  LayerLayout out;
  out.rows = 1;
  out.cols = prev;
  out.w_offset = off;
  out.b_offset = -1;
  store.layout.push_back(out);
  return store;
}

ParamStore glorot_init(const NetworkSpec& spec, uint64_t seed) {
  ParamStore store = make_param_store(spec);
  Rng rng(seed);
  for (size_t layer = 0; layer < store.layout.size(); ++layer) {
    const auto& l = store.layout[layer];
    const double limit = std::sqrt(6.0 / (l.rows + l.cols));
    double* w = store.values.data() + l.w_offset;
    for (long i = 0; i < static_cast<long>(l.rows) * l.cols; ++i)
      w[i] = rng.uniform(-limit, limit);
  }
  return store;
}

}  // namespace ritznet
