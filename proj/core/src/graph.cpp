#include "talkit/graph.hpp"

#include <cmath>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

double f_relu(double x) { return x > 0.0 ? x : 0.0; }
double df_relu(double x) { return x > 0.0 ? 1.0 : 0.0; }
double kink_at_zero(double x) { return std::fabs(x); }

double f_abs(double x) { return std::fabs(x); }
double df_abs(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double f_negmin(double x) { return x < 0.0 ? -x : 0.0; }
double df_negmin(double x) { return x < 0.0 ? -1.0 : 0.0; }

double f_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}
double df_sigmoid(double x) {
  double s = f_sigmoid(x);
  return s * (1.0 - s);
}

double f_log(double x) { return std::log(x); }
double df_log(double x) { return 1.0 / x; }

double f_clamp(double x) {
  if (x < kProbClamp) return kProbClamp;
  if (x > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return x;
}
double df_clamp(double x) { return (x > kProbClamp && x < 1.0 - kProbClamp) ? 1.0 : 0.0; }
double kink_clamp(double x) {
  return std::min(std::fabs(x - kProbClamp), std::fabs(x - (1.0 - kProbClamp)));
}

// value and derivative are both continuous at |x| = 1, so no kink tracking
double f_smooth_l1(double x) {
  double a = std::fabs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}
double df_smooth_l1(double x) {
  if (x > 1.0) return 1.0;
  if (x < -1.0) return -1.0;
  return x;
}

}  // namespace

Graph::Node& Graph::node(Value v) {
  if (v.index < 0 || v.index >= size()) throw ContractError("value handle out of range");
  return nodes_[static_cast<size_t>(v.index)];
}

const Graph::Node& Graph::node(Value v) const {
  if (v.index < 0 || v.index >= size()) throw ContractError("value handle out of range");
  return nodes_[static_cast<size_t>(v.index)];
}

Value Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{size() - 1};
}

Value Graph::leaf(Tensor t) {
  Node n;
  n.requires_grad = t.requires_grad();
  n.is_leaf = true;
  if (n.requires_grad) n.grad = Tensor(t.shape());
  n.value = std::move(t);
  return push(std::move(n));
}

Value Graph::constant(Tensor t) {
  t.set_requires_grad(false);
  return leaf(std::move(t));
}

const Tensor& Graph::grad(Value v) const {
  const Node& n = node(v);
  if (!n.requires_grad) throw ContractError("gradient requested for a node without requires_grad");
  return n.grad;
}

void Graph::zero_grad() {
  for (Node& n : nodes_) {
    if (!n.requires_grad) continue;
    std::fill(n.grad.data(), n.grad.data() + n.grad.size(), 0.0);
  }
}

Value Graph::unary(Value x, double (*f)(double), double (*df)(double), double (*kink)(double)) {
  const Node& p = node(x);
  Node n;
  n.value = Tensor(p.value.shape());
  const double* in = p.value.data();
  double* out = n.value.data();
  int count = p.value.size();
  for (int i = 0; i < count; ++i) {
    out[i] = f(in[i]);
    if (kink) note_kink(kink(in[i]));
  }
  n.requires_grad = p.requires_grad;
  n.parents = {x.index};
  if (n.requires_grad) {
    n.grad = Tensor(p.value.shape());
    n.backward = [df](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& parent = g.nodes_[static_cast<size_t>(me.parents[0])];
      if (!parent.requires_grad) return;
      const double* xv = parent.value.data();
      const double* og = me.grad.data();
      double* pg = parent.grad.data();
      int cnt = me.value.size();
      for (int i = 0; i < cnt; ++i) pg[i] += og[i] * df(xv[i]);
    };
  }
  return push(std::move(n));
}

Value Graph::relu(Value x) { return unary(x, f_relu, df_relu, kink_at_zero); }
Value Graph::max_with_zero(Value x) { return unary(x, f_relu, df_relu, kink_at_zero); }
Value Graph::neg_min_with_zero(Value x) { return unary(x, f_negmin, df_negmin, kink_at_zero); }
Value Graph::abs(Value x) { return unary(x, f_abs, df_abs, kink_at_zero); }
Value Graph::sigmoid(Value x) { return unary(x, f_sigmoid, df_sigmoid, nullptr); }
Value Graph::log(Value x) { return unary(x, f_log, df_log, nullptr); }
Value Graph::clamp_unit(Value x) { return unary(x, f_clamp, df_clamp, kink_clamp); }
Value Graph::smooth_l1(Value x) { return unary(x, f_smooth_l1, df_smooth_l1, nullptr); }

Value Graph::binary(Value a, Value b, int op) {
  const Node& na = node(a);
  const Node& nb = node(b);
  bool a_scalar = na.value.size() == 1;
  bool b_scalar = nb.value.size() == 1;
  if (!(na.value.shape() == nb.value.shape()) && !a_scalar && !b_scalar)
    throw ShapeError("elementwise operands " + to_string(na.value.shape()) + " vs " +
                     to_string(nb.value.shape()) + " (only scalar broadcast is supported)");
  const Shape out_shape = a_scalar && !b_scalar ? nb.value.shape() : na.value.shape();

  Node n;
  n.value = Tensor(out_shape);
  const double* av = na.value.data();
  const double* bv = nb.value.data();
  double* out = n.value.data();
  int count = out_shape.size();
  for (int i = 0; i < count; ++i) {
    double x = av[a_scalar ? 0 : i];
    double y = bv[b_scalar ? 0 : i];
    out[i] = op == 0 ? x + y : op == 1 ? x - y : x * y;
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.parents = {a.index, b.index};
  if (n.requires_grad) {
    n.grad = Tensor(out_shape);
    n.backward = [op, a_scalar, b_scalar](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& pa = g.nodes_[static_cast<size_t>(me.parents[0])];
      Node& pb = g.nodes_[static_cast<size_t>(me.parents[1])];
      const double* og = me.grad.data();
      int cnt = me.value.size();
      if (pa.requires_grad) {
        double* ga = pa.grad.data();
        const double* bv2 = pb.value.data();
        for (int i = 0; i < cnt; ++i) {
          double d = op == 2 ? og[i] * bv2[b_scalar ? 0 : i] : og[i];
          ga[a_scalar ? 0 : i] += d;
        }
      }
      if (pb.requires_grad) {
        double* gb = pb.grad.data();
        const double* av2 = pa.value.data();
        for (int i = 0; i < cnt; ++i) {
          double d;
          if (op == 0)
            d = og[i];
          else if (op == 1)
            d = -og[i];
          else
            d = og[i] * av2[a_scalar ? 0 : i];
          gb[b_scalar ? 0 : i] += d;
        }
      }
    };
  }
  return push(std::move(n));
}

Value Graph::add(Value a, Value b) { return binary(a, b, 0); }
Value Graph::sub(Value a, Value b) { return binary(a, b, 1); }
Value Graph::mul(Value a, Value b) { return binary(a, b, 2); }

Value Graph::affine(Value x, double scale, double shift) {
  const Node& p = node(x);
  Node n;
  n.value = Tensor(p.value.shape());
  const double* in = p.value.data();
  double* out = n.value.data();
  int count = p.value.size();
  for (int i = 0; i < count; ++i) out[i] = scale * in[i] + shift;
  n.requires_grad = p.requires_grad;
  n.parents = {x.index};
  if (n.requires_grad) {
    n.grad = Tensor(p.value.shape());
    n.backward = [scale](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& parent = g.nodes_[static_cast<size_t>(me.parents[0])];
      if (!parent.requires_grad) return;
      const double* og = me.grad.data();
      double* pg = parent.grad.data();
      int cnt = me.value.size();
      for (int i = 0; i < cnt; ++i) pg[i] += scale * og[i];
    };
  }
  return push(std::move(n));
}

Value Graph::slice(Value x, int begin, int end) {
  const Node& p = node(x);
  if (p.value.shape().rank != 1) throw ShapeError("slice expects a rank-1 tensor");
  if (begin < 0 || end > p.value.shape().rows || begin >= end)
    throw ContractError("bad slice range [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") for length " + std::to_string(p.value.shape().rows));
  Node n;
  n.value = Tensor(Shape::vector(end - begin));
  for (int i = begin; i < end; ++i) n.value.at(i - begin) = p.value.at(i);
  n.requires_grad = p.requires_grad;
  n.parents = {x.index};
  if (n.requires_grad) {
    n.grad = Tensor(n.value.shape());
    n.backward = [begin](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& parent = g.nodes_[static_cast<size_t>(me.parents[0])];
      if (!parent.requires_grad) return;
      int cnt = me.value.size();
      for (int i = 0; i < cnt; ++i) parent.grad.at(begin + i) += me.grad.at(i);
    };
  }
  return push(std::move(n));
}

Value Graph::flatten(Value x) {
  const Node& p = node(x);
  if (p.value.shape().rank == 1) return x;
  if (p.value.shape().cols != 1) throw ShapeError("flatten expects a single-column tensor");
  Node n;
  n.value = Tensor(Shape::vector(p.value.shape().rows), p.value.values());
  n.requires_grad = p.requires_grad;
  n.parents = {x.index};
  if (n.requires_grad) {
    n.grad = Tensor(n.value.shape());
    n.backward = [](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& parent = g.nodes_[static_cast<size_t>(me.parents[0])];
      if (!parent.requires_grad) return;
      int cnt = me.value.size();
      for (int i = 0; i < cnt; ++i) parent.grad.at(i) += me.grad.at(i);
    };
  }
  return push(std::move(n));
}

Value Graph::sum(Value x) {
  const Node& p = node(x);
  if (p.value.size() == 0) throw ContractError("reduction over an empty tensor");
  double total = 0.0;
  const double* in = p.value.data();
  int count = p.value.size();
  for (int i = 0; i < count; ++i) total += in[i];
  Node n;
  n.value = Tensor::scalar(total);
  n.requires_grad = p.requires_grad;
  n.parents = {x.index};
  if (n.requires_grad) {
    n.grad = Tensor(Shape::vector(1));
    n.backward = [](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& parent = g.nodes_[static_cast<size_t>(me.parents[0])];
      if (!parent.requires_grad) return;
      double og = me.grad.at(0);
      double* pg = parent.grad.data();
      int cnt = parent.value.size();
      for (int i = 0; i < cnt; ++i) pg[i] += og;
    };
  }
  return push(std::move(n));
}

Value Graph::mean(Value x) {
  const Node& p = node(x);
  if (p.value.size() == 0) throw ContractError("reduction over an empty tensor");
  int count = p.value.size();
  Value s = sum(x);
  return affine(s, 1.0 / count, 0.0);
}

Value Graph::conv1d(Value input, Value kernel, Value bias, int kernel_width) {
  const Node& ni = node(input);
  const Node& nk = node(kernel);
  const Node& nb = node(bias);
  if (kernel_width < 1 || kernel_width % 2 == 0)
    throw ContractError("conv1d kernel width must be odd and positive, got " +
                        std::to_string(kernel_width));
  if (ni.value.shape().rank != 2) throw ShapeError("conv1d input must be rank-2 (T, C_in)");
  const int t_len = ni.value.shape().rows;
  const int c_in = ni.value.shape().cols;
  if (t_len < 1) throw ShapeError("conv1d input must have at least one frame");
  if (nk.value.shape().rank != 2 || nk.value.shape().rows != kernel_width * c_in)
    throw ShapeError("conv1d kernel shape " + to_string(nk.value.shape()) +
                     " does not match K*C_in = " + std::to_string(kernel_width * c_in));
  const int c_out = nk.value.shape().cols;
  if (nb.value.shape().rank != 1 || nb.value.shape().rows != c_out)
    throw ShapeError("conv1d bias shape " + to_string(nb.value.shape()) + " does not match C_out");

  const int pad = (kernel_width - 1) / 2;
  Node n;
  n.value = Tensor(Shape::matrix(t_len, c_out));
  {
    const double* x = ni.value.data();
    const double* w = nk.value.data();
    const double* b = nb.value.data();
    double* y = n.value.data();
    for (int t = 0; t < t_len; ++t) {
      double* yrow = y + static_cast<size_t>(t) * c_out;
      for (int o = 0; o < c_out; ++o) yrow[o] = b[o];
      for (int k = 0; k < kernel_width; ++k) {
        int u = t + k - pad;
        if (u < 0 || u >= t_len) continue;
        const double* xrow = x + static_cast<size_t>(u) * c_in;
        const double* wrows = w + static_cast<size_t>(k) * c_in * c_out;
        for (int c = 0; c < c_in; ++c) {
          double xv = xrow[c];
          const double* wrow = wrows + static_cast<size_t>(c) * c_out;
          for (int o = 0; o < c_out; ++o) yrow[o] += xv * wrow[o];
        }
      }
    }
  }
  n.requires_grad = ni.requires_grad || nk.requires_grad || nb.requires_grad;
  n.parents = {input.index, kernel.index, bias.index};
  if (n.requires_grad) {
    n.grad = Tensor(n.value.shape());
    n.backward = [kernel_width, pad, t_len, c_in, c_out](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      Node& pi = g.nodes_[static_cast<size_t>(me.parents[0])];
      Node& pk = g.nodes_[static_cast<size_t>(me.parents[1])];
      Node& pb = g.nodes_[static_cast<size_t>(me.parents[2])];
      const double* dy = me.grad.data();
      if (pb.requires_grad) {
        double* db = pb.grad.data();
        for (int t = 0; t < t_len; ++t) {
          const double* dyrow = dy + static_cast<size_t>(t) * c_out;
          for (int o = 0; o < c_out; ++o) db[o] += dyrow[o];
        }
      }
      const double* x = pi.value.data();
      const double* w = pk.value.data();
      for (int t = 0; t < t_len; ++t) {
        const double* dyrow = dy + static_cast<size_t>(t) * c_out;
        for (int k = 0; k < kernel_width; ++k) {
          int u = t + k - pad;
          if (u < 0 || u >= t_len) continue;
          if (pk.requires_grad) {
            const double* xrow = x + static_cast<size_t>(u) * c_in;
            double* dwrows = pk.grad.data() + static_cast<size_t>(k) * c_in * c_out;
            for (int c = 0; c < c_in; ++c) {
              double xv = xrow[c];
              double* dwrow = dwrows + static_cast<size_t>(c) * c_out;
              for (int o = 0; o < c_out; ++o) dwrow[o] += xv * dyrow[o];
            }
          }
          if (pi.requires_grad) {
            double* dxrow = pi.grad.data() + static_cast<size_t>(u) * c_in;
            const double* wrows = w + static_cast<size_t>(k) * c_in * c_out;
            for (int c = 0; c < c_in; ++c) {
              const double* wrow = wrows + static_cast<size_t>(c) * c_out;
              double acc = 0.0;
              for (int o = 0; o < c_out; ++o) acc += wrow[o] * dyrow[o];
              dxrow[c] += acc;
            }
          }
        }
      }
    };
  }
  return push(std::move(n));
}

Value Graph::custom(const std::vector<Value>& parents, Tensor value, CustomBackward backward,
                    double kink_distance) {
  Node n;
  n.value = std::move(value);
  n.parents.reserve(parents.size());
  for (Value p : parents) {
    n.parents.push_back(p.index);
    if (node(p).requires_grad) n.requires_grad = true;
  }
  note_kink(kink_distance);
  if (n.requires_grad) {
    n.grad = Tensor(n.value.shape());
    n.backward = [fn = std::move(backward)](Graph& g, int self) {
      Node& me = g.nodes_[static_cast<size_t>(self)];
      std::vector<Tensor*> parent_grads;
      parent_grads.reserve(me.parents.size());
      for (int pi : me.parents) {
        Node& p = g.nodes_[static_cast<size_t>(pi)];
        parent_grads.push_back(p.requires_grad ? &p.grad : nullptr);
      }
      fn(me.grad, parent_grads);
    };
  }
  return push(std::move(n));
}

void Graph::backward(Value loss) {
  Node& l = node(loss);
  if (l.value.size() != 1) throw ContractError("backward requires a scalar loss (size-1 tensor)");
  if (!l.requires_grad)
    throw ContractError("backward on a loss with no requires_grad ancestors");
  // reset intermediates so repeated calls only accumulate on leaves
  for (Node& n : nodes_) {
    if (n.is_leaf || !n.requires_grad) continue;
    std::fill(n.grad.data(), n.grad.data() + n.grad.size(), 0.0);
  }
  l.grad.at(0) += 1.0;
  for (int i = loss.index; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

}  // namespace talkit
