#include "talkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_loss_input(const Graph& g, Value p, const std::vector<uint8_t>& labels,
                      const char* op) {
  const Tensor& t = g.value(p);
  if (t.shape().rank != 1)
    throw ShapeError(std::string(op) + " expects a rank-1 probability vector");
  if (static_cast<size_t>(t.shape().rows) != labels.size())
    throw ShapeError(std::string(op) + ": probability length " + std::to_string(t.shape().rows) +
                     " vs label length " + std::to_string(labels.size()));
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// sum over i<j of (x_j - x_i) for ascending x
double sorted_pair_sum(const std::vector<double>& x) {
  double total = 0.0;
  const int m = static_cast<int>(x.size());
  for (int k = 0; k < m; ++k) total += (2.0 * k - m + 1.0) * x[static_cast<size_t>(k)];
  return total;
}

Value intra_from_coeffs(Graph& g, Value p, double loss_value, std::vector<double> coeffs,
                        double kink) {
  return g.custom(
      {p}, Tensor::scalar(loss_value),
      [coeffs = std::move(coeffs)](const Tensor& out_grad, const std::vector<Tensor*>& parents) {
        if (!parents[0]) return;
        double og = out_grad.at(0);
        double* pg = parents[0]->data();
        for (size_t i = 0; i < coeffs.size(); ++i) pg[i] += og * coeffs[i];
      },
      kink);
}

}  // namespace

PairMasks build_pair_masks(const std::vector<uint8_t>& g) {
  PairMasks m;
  m.len = static_cast<int>(g.size());
  const size_t n2 = g.size() * g.size();
  m.both_positive.assign(n2, 0);
  m.both_negative.assign(n2, 0);
  m.cross.assign(n2, 0);
  for (size_t i = 0; i < g.size(); ++i) {
    for (size_t j = 0; j < g.size(); ++j) {
      size_t k = i * g.size() + j;
      if (g[i] && g[j]) {
        m.both_positive[k] = 1;
        ++m.n_positive;
      } else if (!g[i] && !g[j]) {
        m.both_negative[k] = 1;
        ++m.n_negative;
      } else if (g[i] && !g[j]) {
        m.cross[k] = 1;
        ++m.n_cross;
      }
    }
  }
  return m;
}

Value intra_consistency(Graph& g, Value p, const std::vector<uint8_t>& labels) {
  check_loss_input(g, p, labels, "intra_consistency");
  const Tensor& pt = g.value(p);
  const double* pv = pt.data();
  const int t_len = pt.shape().rows;

  PairMasks masks = build_pair_masks(labels);
  double sum_pos = 0.0, sum_neg = 0.0, sum_cross = 0.0;
  double kink = kInf;
  std::vector<double> coeffs(static_cast<size_t>(t_len), 0.0);
  const double w_pos = masks.n_positive > 0 ? 1.0 / masks.n_positive : 0.0;
  const double w_neg = masks.n_negative > 0 ? 1.0 / masks.n_negative : 0.0;
  const double w_cross = masks.n_cross > 0 ? -1.0 / masks.n_cross : 0.0;
  for (int i = 0; i < t_len; ++i) {
    for (int j = 0; j < t_len; ++j) {
      size_t k = static_cast<size_t>(i) * t_len + j;
      double diff = pv[i] - pv[j];
      double a = std::fabs(diff);
      double w = 0.0;
      if (masks.both_positive[k]) {
        sum_pos += a;
        w = w_pos;
      } else if (masks.both_negative[k]) {
        sum_neg += a;
        w = w_neg;
      } else if (masks.cross[k]) {
        sum_cross += a;
        w = w_cross;
      } else {
        continue;
      }
      if (i != j) kink = std::min(kink, a);
      double s = w * sign_of(diff);
      coeffs[static_cast<size_t>(i)] += s;
      coeffs[static_cast<size_t>(j)] -= s;
    }
  }
  double loss = 0.0;
  if (masks.n_positive > 0) loss += sum_pos / masks.n_positive;
  if (masks.n_negative > 0) loss += sum_neg / masks.n_negative;
  if (masks.n_cross > 0) loss += 1.0 - sum_cross / masks.n_cross;
  return intra_from_coeffs(g, p, loss, std::move(coeffs), kink);
}

Value intra_consistency_fast(Graph& g, Value p, const std::vector<uint8_t>& labels) {
  check_loss_input(g, p, labels, "intra_consistency_fast");
  const Tensor& pt = g.value(p);
  const double* pv = pt.data();
  const int t_len = pt.shape().rows;

  struct Item {
    double value;
    int index;
  };
  std::vector<Item> pos, neg;
  pos.reserve(static_cast<size_t>(t_len));
  for (int i = 0; i < t_len; ++i)
    (labels[static_cast<size_t>(i)] ? pos : neg).push_back({pv[i], i});
  auto by_value = [](const Item& a, const Item& b) { return a.value < b.value; };
  std::sort(pos.begin(), pos.end(), by_value);
  std::sort(neg.begin(), neg.end(), by_value);
  const long m = static_cast<long>(pos.size());
  const long n = static_cast<long>(neg.size());

  std::vector<double> pos_vals(pos.size()), neg_vals(neg.size());
  for (size_t i = 0; i < pos.size(); ++i) pos_vals[i] = pos[i].value;
  for (size_t i = 0; i < neg.size(); ++i) neg_vals[i] = neg[i].value;
  std::vector<double> neg_prefix(neg.size() + 1, 0.0);
  for (size_t i = 0; i < neg.size(); ++i) neg_prefix[i + 1] = neg_prefix[i] + neg_vals[i];

  double kink = kInf;
  for (size_t i = 1; i < pos.size(); ++i)
    kink = std::min(kink, pos_vals[i] - pos_vals[i - 1]);
  for (size_t i = 1; i < neg.size(); ++i)
    kink = std::min(kink, neg_vals[i] - neg_vals[i - 1]);
  {
    size_t i = 0, j = 0;  // min |u - v| over the two sorted arrays
    while (i < pos.size() && j < neg.size()) {
      kink = std::min(kink, std::fabs(pos_vals[i] - neg_vals[j]));
      if (pos_vals[i] < neg_vals[j])
        ++i;
      else
        ++j;
    }
  }

  // strict less/greater counts within a sorted array, by tie group
  auto rank_coeff = [](const std::vector<double>& sorted, std::vector<double>& out) {
    const long count = static_cast<long>(sorted.size());
    long a = 0;
    while (a < count) {
      long b = a;
      while (b < count && sorted[static_cast<size_t>(b)] == sorted[static_cast<size_t>(a)]) ++b;
      for (long k = a; k < b; ++k)
        out[static_cast<size_t>(k)] = static_cast<double>(a - (count - b));  // less - greater
      a = b;
    }
  };

  double loss = 0.0;
  std::vector<double> coeffs(static_cast<size_t>(t_len), 0.0);

  if (m > 0) {
    loss += 2.0 * sorted_pair_sum(pos_vals) / static_cast<double>(m * m);
    std::vector<double> rc(pos.size());
    rank_coeff(pos_vals, rc);
    for (size_t k = 0; k < pos.size(); ++k)
      coeffs[static_cast<size_t>(pos[k].index)] += 2.0 * rc[k] / static_cast<double>(m * m);
  }
  if (n > 0) {
    loss += 2.0 * sorted_pair_sum(neg_vals) / static_cast<double>(n * n);
    std::vector<double> rc(neg.size());
    rank_coeff(neg_vals, rc);
    for (size_t k = 0; k < neg.size(); ++k)
      coeffs[static_cast<size_t>(neg[k].index)] += 2.0 * rc[k] / static_cast<double>(n * n);
  }
  if (m > 0 && n > 0) {
    const double n_cross = static_cast<double>(m * n);
    double cross_sum = 0.0;
    const double neg_total = neg_prefix.back();
    for (size_t k = 0; k < pos.size(); ++k) {
      double u = pos_vals[k];
      // cross-pair sum and strict counts against the sorted negatives
      long le = std::upper_bound(neg_vals.begin(), neg_vals.end(), u) - neg_vals.begin();
      long lt = std::lower_bound(neg_vals.begin(), neg_vals.end(), u) - neg_vals.begin();
      double sum_le = neg_prefix[static_cast<size_t>(le)];
      cross_sum += u * le - sum_le + (neg_total - sum_le) - u * (n - le);
      double d_cross = static_cast<double>(lt) - static_cast<double>(n - le);
      coeffs[static_cast<size_t>(pos[k].index)] -= d_cross / n_cross;
    }
    for (size_t k = 0; k < neg.size(); ++k) {
      double v = neg_vals[k];
      long le = std::upper_bound(pos_vals.begin(), pos_vals.end(), v) - pos_vals.begin();
      long lt = std::lower_bound(pos_vals.begin(), pos_vals.end(), v) - pos_vals.begin();
      double d_cross = static_cast<double>(lt) - static_cast<double>(m - le);
      coeffs[static_cast<size_t>(neg[k].index)] -= d_cross / n_cross;
    }
    loss += 1.0 - cross_sum / n_cross;
  }
  return intra_from_coeffs(g, p, loss, std::move(coeffs), kink);
}

Value inter_consistency(Graph& g, Value p_continue, Value p_start, Value p_end) {
  const Tensor& pc = g.value(p_continue);
  if (pc.shape().rank != 1) throw ShapeError("inter_consistency expects rank-1 phases");
  const int t_len = pc.shape().rows;
  if (t_len < 2)
    throw ContractError("inter_consistency needs at least 2 frames, got " +
                        std::to_string(t_len));
  if (!(g.value(p_start).shape() == pc.shape()) || !(g.value(p_end).shape() == pc.shape()))
    throw ShapeError("inter_consistency phases must share one shape");

  Value next = g.slice(p_continue, 1, t_len);
  Value prev = g.slice(p_continue, 0, t_len - 1);
  Value diff = g.sub(next, prev);
  Value rise = g.max_with_zero(diff);
  Value drop = g.neg_min_with_zero(diff);
  Value start_trim = g.slice(p_start, 0, t_len - 1);
  Value end_trim = g.slice(p_end, 0, t_len - 1);
  Value term = g.add(g.sum(g.abs(g.sub(rise, start_trim))), g.sum(g.abs(g.sub(drop, end_trim))));
  return g.affine(term, 1.0 / (t_len - 1), 0.0);
}

Value phase_cls_loss(Graph& g, Value p, const std::vector<uint8_t>& labels) {
  check_loss_input(g, p, labels, "phase_cls_loss");
  const int t_len = static_cast<int>(labels.size());
  if (t_len == 0) throw ContractError("phase_cls_loss on an empty window");
  int positives = 0;
  std::vector<double> pos_mask(labels.size()), neg_mask(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    pos_mask[i] = labels[i] ? 1.0 : 0.0;
    neg_mask[i] = labels[i] ? 0.0 : 1.0;
    positives += labels[i] ? 1 : 0;
  }
  const int negatives = t_len - positives;

  Value clamped = g.clamp_unit(p);
  Value result{-1};
  bool has_term = false;
  if (positives > 0) {
    Value term = g.affine(g.sum(g.mul(g.constant(Tensor::vector(std::move(pos_mask))),
                                      g.log(clamped))),
                          -1.0 / positives, 0.0);
    result = term;
    has_term = true;
  }
  if (negatives > 0) {
    Value term = g.affine(g.sum(g.mul(g.constant(Tensor::vector(std::move(neg_mask))),
                                      g.log(g.affine(clamped, -1.0, 1.0)))),
                          -1.0 / negatives, 0.0);
    result = has_term ? g.add(result, term) : term;
    has_term = true;
  }
  return result;
}

Value regression_loss(Graph& g, Value offset_start, Value offset_end,
                      const OffsetTargets& targets) {
  auto side = [&g](Value predicted, const std::vector<double>& target,
                   const std::vector<uint8_t>& mask) -> std::pair<bool, Value> {
    const Tensor& t = g.value(predicted);
    if (t.shape().rank != 1 || static_cast<size_t>(t.shape().rows) != target.size())
      throw ShapeError("regression_loss offsets do not match target length");
    int count = 0;
    std::vector<double> mask_values(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) {
      mask_values[i] = mask[i] ? 1.0 : 0.0;
      count += mask[i] ? 1 : 0;
    }
    if (count == 0) return {false, Value{-1}};
    Value diff = g.sub(predicted, g.constant(Tensor::vector(std::vector<double>(target))));
    Value masked = g.mul(g.constant(Tensor::vector(std::move(mask_values))), g.smooth_l1(diff));
    return {true, g.affine(g.sum(masked), 1.0 / count, 0.0)};
  };

  auto [has_start, start_term] = side(offset_start, targets.start_offset, targets.start_mask);
  auto [has_end, end_term] = side(offset_end, targets.end_offset, targets.end_mask);
  if (has_start && has_end) return g.add(start_term, end_term);
  if (has_start) return start_term;
  if (has_end) return end_term;
  return g.constant(Tensor::scalar(0.0));
}

const char* LossReport::first_non_finite() const {
  struct Field {
    const char* name;
    double value;
  };
  const Field fields[] = {
      {"cls_continue", l_continue}, {"cls_start", l_start},
      {"cls_end", l_end},           {"cls", l_cls},
      {"reg", l_reg},               {"intra_continue", l_intra_continue},
      {"intra_start", l_intra_start}, {"intra_end", l_intra_end},
      {"intra", l_intra},           {"inter", l_inter},
      {"total", l_total},
  };
  for (const Field& f : fields)
    if (!std::isfinite(f.value)) return f.name;
  return nullptr;
}

TotalLoss total_loss(Graph& g, Value p_continue, Value p_start, Value p_end, Value offset_start,
                     Value offset_end, const PhaseLabels& labels, const OffsetTargets& targets,
                     const LossWeights& weights, bool fast_intra) {
  TotalLoss out;
  std::vector<Value> terms;

  auto weighted = [&g](Value v, double w) { return g.affine(v, w, 0.0); };
  auto scalar_of = [&g](Value v) { return g.value(v).at(0); };

  if (weights.cls != 0.0) {
    Value lc = weighted(phase_cls_loss(g, p_continue, labels.continuing), weights.cls);
    Value ls = weighted(phase_cls_loss(g, p_start, labels.starting), weights.cls);
    Value le = weighted(phase_cls_loss(g, p_end, labels.ending), weights.cls);
    Value cls = g.add(g.add(lc, ls), le);
    out.report.l_continue = scalar_of(lc);
    out.report.l_start = scalar_of(ls);
    out.report.l_end = scalar_of(le);
    out.report.l_cls = scalar_of(cls);
    terms.push_back(cls);
  }
  if (weights.reg != 0.0) {
    Value reg = weighted(regression_loss(g, offset_start, offset_end, targets), weights.reg);
    out.report.l_reg = scalar_of(reg);
    terms.push_back(reg);
  }
  if (weights.intra != 0.0) {
    auto intra = fast_intra ? intra_consistency_fast : intra_consistency;
    Value ic = weighted(intra(g, p_continue, labels.continuing), weights.intra);
    Value is = weighted(intra(g, p_start, labels.starting), weights.intra);
    Value ie = weighted(intra(g, p_end, labels.ending), weights.intra);
    Value total = g.add(g.add(ic, is), ie);
    out.report.l_intra_continue = scalar_of(ic);
    out.report.l_intra_start = scalar_of(is);
    out.report.l_intra_end = scalar_of(ie);
    out.report.l_intra = scalar_of(total);
    terms.push_back(total);
  }
  if (weights.inter != 0.0) {
    Value inter = weighted(inter_consistency(g, p_continue, p_start, p_end), weights.inter);
    out.report.l_inter = scalar_of(inter);
    terms.push_back(inter);
  }

  if (terms.empty()) {
    out.total = g.constant(Tensor::scalar(0.0));
  } else {
    Value total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = g.add(total, terms[i]);
    out.total = total;
  }
  out.report.l_total = scalar_of(out.total);
  return out;
}

}  // namespace talkit
