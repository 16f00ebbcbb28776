#include "talkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "talkit/errors.hpp"
#include "talkit/losses.hpp"
#include "talkit/model.hpp"
#include "talkit/rng.hpp"

namespace talkit {

namespace {

// A differentiable scalar function of a flat input vector. eval rebuilds the
// graph from x; when grad is non-null it runs backward and fills d loss / dx.
struct Problem {
  std::vector<double> x0;
  std::function<double(const std::vector<double>& x, std::vector<double>* grad, double* kink)>
      eval;
};

using ProblemMaker = std::function<Problem(Rng&)>;

std::vector<double> rand_vec(Rng& rng, int n, double lo, double hi) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<uint8_t> rand_labels(Rng& rng, int n) {
  std::vector<uint8_t> g(static_cast<size_t>(n));
  for (uint8_t& b : g) b = rng.uniform() < 0.5 ? 0 : 1;
  return g;
}

// Evaluates a graph-building closure over a leaf made from x.
Problem vector_problem(Rng& rng, int n, double lo, double hi,
                       std::function<Value(Graph&, Value)> build) {
  Problem p;
  p.x0 = rand_vec(rng, n, lo, hi);
  p.eval = [build = std::move(build)](const std::vector<double>& x, std::vector<double>* grad,
                                      double* kink) {
    Graph g;
    Tensor t = Tensor::vector(std::vector<double>(x));
    t.set_requires_grad(true);
    Value leaf = g.leaf(std::move(t));
    Value loss = build(g, leaf);
    if (kink) *kink = g.min_kink_distance();
    if (grad) {
      g.backward(loss);
      *grad = g.grad(leaf).values();
    }
    return g.value(loss).at(0);
  };
  return p;
}

ProblemMaker unary_maker(double lo, double hi, Value (Graph::*op)(Value)) {
  return [lo, hi, op](Rng& rng) {
    return vector_problem(rng, 12, lo, hi,
                          [op](Graph& g, Value x) { return g.sum((g.*op)(x)); });
  };
}

Problem multi_leaf_problem(std::vector<std::pair<Shape, std::pair<double, double>>> specs,
                           Rng& rng,
                           std::function<Value(Graph&, const std::vector<Value>&)> build) {
  Problem p;
  std::vector<int> sizes;
  for (const auto& [shape, range] : specs) {
    auto v = rand_vec(rng, shape.size(), range.first, range.second);
    sizes.push_back(shape.size());
    p.x0.insert(p.x0.end(), v.begin(), v.end());
  }
  p.eval = [specs = std::move(specs), build = std::move(build)](
               const std::vector<double>& x, std::vector<double>* grad, double* kink) {
    Graph g;
    std::vector<Value> leaves;
    size_t cursor = 0;
    for (const auto& [shape, range] : specs) {
      std::vector<double> chunk(x.begin() + static_cast<long>(cursor),
                                x.begin() + static_cast<long>(cursor + shape.size()));
      cursor += static_cast<size_t>(shape.size());
      Tensor t(shape, std::move(chunk));
      t.set_requires_grad(true);
      leaves.push_back(g.leaf(std::move(t)));
    }
    Value loss = build(g, leaves);
    if (kink) *kink = g.min_kink_distance();
    if (grad) {
      g.backward(loss);
      grad->clear();
      for (Value leaf : leaves) {
        const Tensor& gt = g.grad(leaf);
        grad->insert(grad->end(), gt.values().begin(), gt.values().end());
      }
    }
    return g.value(loss).at(0);
  };
  return p;
}

struct NamedMaker {
  std::string name;
  ProblemMaker make;
};

std::vector<NamedMaker> build_makers(const GradCheckOptions& options) {
  std::vector<NamedMaker> makers;

  makers.push_back({"sigmoid", unary_maker(-2.0, 2.0, &Graph::sigmoid)});
  makers.push_back({"relu", unary_maker(-2.0, 2.0, &Graph::relu)});
  makers.push_back({"abs", unary_maker(-2.0, 2.0, &Graph::abs)});
  makers.push_back({"max_with_zero", unary_maker(-2.0, 2.0, &Graph::max_with_zero)});
  makers.push_back({"neg_min_with_zero", unary_maker(-2.0, 2.0, &Graph::neg_min_with_zero)});
  makers.push_back({"smooth_l1", unary_maker(-2.0, 2.0, &Graph::smooth_l1)});
  makers.push_back({"log_clamped", {[](Rng& rng) {
                      return vector_problem(rng, 12, 0.05, 0.95, [](Graph& g, Value x) {
                        return g.sum(g.log(g.clamp_unit(x)));
                      });
                    }}});
  makers.push_back({"mean", {[](Rng& rng) {
                      return vector_problem(rng, 12, -2.0, 2.0,
                                            [](Graph& g, Value x) { return g.mean(x); });
                    }}});
  makers.push_back({"slice", {[](Rng& rng) {
                      return vector_problem(rng, 12, -2.0, 2.0, [](Graph& g, Value x) {
                        return g.sum(g.slice(x, 2, 9));
                      });
                    }}});

  for (auto [name, op] : {std::pair<const char*, int>{"add", 0}, {"sub", 1}, {"mul", 2}}) {
    makers.push_back({name, [op](Rng& rng) {
                        return multi_leaf_problem(
                            {{Shape::vector(9), {-2.0, 2.0}}, {Shape::vector(9), {-2.0, 2.0}}},
                            rng, [op](Graph& g, const std::vector<Value>& v) {
                              Value r = op == 0   ? g.add(v[0], v[1])
                                        : op == 1 ? g.sub(v[0], v[1])
                                                  : g.mul(v[0], v[1]);
                              return g.sum(r);
                            });
                      }});
  }
  makers.push_back({"scalar_broadcast", [](Rng& rng) {
                      return multi_leaf_problem(
                          {{Shape::vector(9), {-2.0, 2.0}}, {Shape::vector(1), {-2.0, 2.0}}}, rng,
                          [](Graph& g, const std::vector<Value>& v) {
                            return g.sum(g.add(g.mul(v[0], v[1]), v[1]));
                          });
                    }});

  makers.push_back({"conv1d", [](Rng& rng) {
                      const int t_len = 8, c_in = 3, k = 3, c_out = 2;
                      return multi_leaf_problem(
                          {{Shape::matrix(t_len, c_in), {-2.0, 2.0}},
                           {Shape::matrix(k * c_in, c_out), {-1.0, 1.0}},
                           {Shape::vector(c_out), {-1.0, 1.0}}},
                          rng, [k](Graph& g, const std::vector<Value>& v) {
                            return g.sum(g.conv1d(v[0], v[1], v[2], k));
                          });
                    }});

  const bool flip = options.flip_intra_gradient;
  for (auto [name, fast] : {std::pair<const char*, bool>{"intra_consistency", false},
                            {"intra_consistency_fast", true}}) {
    makers.push_back({name, [fast, flip](Rng& rng) {
                        const int t_len = 32;
                        std::vector<uint8_t> g_labels = rand_labels(rng, t_len);
                        Problem p = vector_problem(
                            rng, t_len, 0.02, 0.98, [fast, g_labels](Graph& g, Value x) {
                              return fast ? intra_consistency_fast(g, x, g_labels)
                                          : intra_consistency(g, x, g_labels);
                            });
                        if (flip) {
                          auto inner = p.eval;
                          p.eval = [inner](const std::vector<double>& x,
                                           std::vector<double>* grad, double* kink) {
                            double loss = inner(x, grad, kink);
                            if (grad)
                              for (double& v : *grad) v = -v;
                            return loss;
                          };
                        }
                        return p;
                      }});
  }

  makers.push_back({"inter_consistency", [](Rng& rng) {
                      const int t_len = 24;
                      return multi_leaf_problem({{Shape::vector(t_len), {0.0, 1.0}},
                                                 {Shape::vector(t_len), {0.0, 1.0}},
                                                 {Shape::vector(t_len), {0.0, 1.0}}},
                                                rng,
                                                [](Graph& g, const std::vector<Value>& v) {
                                                  return inter_consistency(g, v[0], v[1], v[2]);
                                                });
                    }});

  makers.push_back({"phase_cls_loss", [](Rng& rng) {
                      const int t_len = 24;
                      std::vector<uint8_t> g_labels = rand_labels(rng, t_len);
                      return vector_problem(rng, t_len, 0.05, 0.95,
                                            [g_labels](Graph& g, Value x) {
                                              return phase_cls_loss(g, x, g_labels);
                                            });
                    }});

  makers.push_back({"regression_loss", [](Rng& rng) {
                      const int t_len = 20;
                      OffsetTargets targets;
                      targets.start_offset = rand_vec(rng, t_len, -2.0, 2.0);
                      targets.end_offset = rand_vec(rng, t_len, -2.0, 2.0);
                      targets.start_mask = rand_labels(rng, t_len);
                      targets.end_mask = rand_labels(rng, t_len);
                      return multi_leaf_problem(
                          {{Shape::vector(t_len), {-2.0, 2.0}}, {Shape::vector(t_len), {-2.0, 2.0}}},
                          rng, [targets](Graph& g, const std::vector<Value>& v) {
                            return regression_loss(g, v[0], v[1], targets);
                          });
                    }});

  makers.push_back({"total_composite", [](Rng& rng) {
                      NetworkConfig net;  // full default architecture, shorter input
                      const int t_len = 32;
                      Tensor features(Shape::matrix(t_len, net.input_channels));
                      for (int i = 0; i < features.size(); ++i)
                        features.at(i) = rng.uniform(-2.0, 2.0);
                      AnnotationSet annotations;
                      annotations.video_length = t_len;
                      int s = static_cast<int>(rng.int_in(2, 12));
                      int e = s + static_cast<int>(rng.int_in(6, 14));
                      annotations.instances.push_back({s, e, 0});
                      PhaseLabels labels = make_phase_labels(annotations, t_len);
                      OffsetTargets targets = make_offset_targets(annotations, t_len);

                      ModelParams params = init_params(net, rng.next_u64());
                      Problem p;
                      std::vector<Shape> shapes;
                      for (const ModelParams::Entry& entry : params.entries) {
                        shapes.push_back(entry.tensor.shape());
                        p.x0.insert(p.x0.end(), entry.tensor.values().begin(),
                                    entry.tensor.values().end());
                      }
                      p.eval = [net, features, labels, targets, shapes](
                                   const std::vector<double>& x, std::vector<double>* grad,
                                   double* kink) {
                        Graph g;
                        std::vector<Value> leaves;
                        size_t cursor = 0;
                        for (const Shape& shape : shapes) {
                          std::vector<double> chunk(
                              x.begin() + static_cast<long>(cursor),
                              x.begin() + static_cast<long>(cursor + shape.size()));
                          cursor += static_cast<size_t>(shape.size());
                          Tensor t(shape, std::move(chunk));
                          t.set_requires_grad(true);
                          leaves.push_back(g.leaf(std::move(t)));
                        }
                        Value f = g.constant(features);
                        ForwardValues fv = forward(g, net, leaves, f);
                        TotalLoss loss =
                            total_loss(g, fv.p_continue, fv.p_start, fv.p_end, fv.offset_start,
                                       fv.offset_end, labels, targets, LossWeights{});
                        if (kink) *kink = g.min_kink_distance();
                        if (grad) {
                          g.backward(loss.total);
                          grad->clear();
                          for (Value leaf : leaves) {
                            const Tensor& gt = g.grad(leaf);
                            grad->insert(grad->end(), gt.values().begin(), gt.values().end());
                          }
                        }
                        return g.value(loss.total).at(0);
                      };
                      return p;
                    }});
  return makers;
}

GradCheckResult check_one(const std::string& name, const ProblemMaker& make,
                          const GradCheckOptions& options) {
  GradCheckResult result;
  result.op = name;
  result.points = options.points;
  Rng rng(Rng::derive(options.seed, std::hash<std::string>{}(name)));

  for (int point = 0; point < options.points; ++point) {
    Problem problem;
    std::vector<double> analytic;
    double kink = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 500; ++attempt) {
      problem = make(rng);
      problem.eval(problem.x0, &analytic, &kink);
      if (kink >= options.kink_margin) {
        ok = true;
        break;
      }
    }
    if (!ok) throw NumericError("gradient check for " + name + " could not avoid kinks");

    std::vector<int> coords(problem.x0.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = static_cast<int>(i);
    if (static_cast<int>(coords.size()) > options.max_coords) {
      for (size_t i = coords.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.int_in(0, static_cast<int64_t>(i) - 1));
        std::swap(coords[i - 1], coords[j]);
      }
      coords.resize(static_cast<size_t>(options.max_coords));
    }

    std::vector<double> x = problem.x0;
    for (int c : coords) {
      const double saved = x[static_cast<size_t>(c)];
      x[static_cast<size_t>(c)] = saved + options.step;
      double f_plus = problem.eval(x, nullptr, nullptr);
      x[static_cast<size_t>(c)] = saved - options.step;
      double f_minus = problem.eval(x, nullptr, nullptr);
      x[static_cast<size_t>(c)] = saved;
      double numeric = (f_plus - f_minus) / (2.0 * options.step);
      double a = analytic[static_cast<size_t>(c)];
      double diff = std::fabs(a - numeric);
      // relative error with an absolute floor so near-zero gradients are
      // held to |diff| <= abs_floor instead of an impossible ratio
      double denom = std::max({std::fabs(a), std::fabs(numeric),
                               options.abs_floor / options.tolerance});
      result.max_rel_err = std::max(result.max_rel_err, diff / denom);
    }
  }
  result.pass = result.max_rel_err <= options.tolerance;
  return result;
}

}  // namespace

std::vector<std::string> gradcheck_op_names() {
  GradCheckOptions options;
  std::vector<std::string> names;
  for (const NamedMaker& maker : build_makers(options)) names.push_back(maker.name);
  return names;
}

std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& options) {
  std::vector<GradCheckResult> results;
  for (const NamedMaker& maker : build_makers(options)) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), maker.name) == options.only.end())
      continue;
    results.push_back(check_one(maker.name, maker.make, options));
  }
  if (results.empty()) throw ConfigError("no gradient-check ops matched the requested names");
  return results;
}

}  // namespace talkit
