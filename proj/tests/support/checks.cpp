#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "hyperrestore/degrade.hpp"
#include "hyperrestore/hypernet.hpp"
#include "hyperrestore/metrics.hpp"
#include "hyperrestore/model.hpp"
#include "hyperrestore/ops.hpp"
#include "hyperrestore/restoration_net.hpp"
#include "oracles/reference_ops.hpp"

namespace checks {

using hyperrestore::Shape;
using hyperrestore::Tensor;

namespace {

constexpr double kRelTol = 1e-3;
constexpr double kStep = 1e-3;

using Rng = std::mt19937_64;

/// Values are drawn in double but rounded through float so the reference and
/// the library see the same point.
std::vector<double> random_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<float>(u(rng));
  return v;
}

/// Keeps |x| >= margin so that finite differences never straddle a kink at zero.
std::vector<double> away_from_zero(Rng& rng, std::size_t n, double margin) {
  auto v = random_values(rng, n, -1.0, 1.0);
  for (auto& x : v) {
    if (std::abs(x) < margin) x = static_cast<float>(x < 0 ? x - margin : x + margin);
  }
  return v;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

Tensor leaf(const Shape& shape, const std::vector<double>& v) { return Tensor::leaf(shape, to_float(v)); }

/// One instance of a single-op check: inputs, the library op, the reference op.
struct OpCase {
  std::vector<Shape> shapes;
  std::vector<std::vector<double>> inputs;
  std::function<Tensor(const std::vector<Tensor>&)> library;
  std::function<std::vector<double>(const std::vector<std::vector<double>>&)> reference;
};

/// Normalized error of one analytic/numeric pair: 1.0 means exactly at tolerance.
double pair_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / (kRelTol * std::max(std::abs(analytic), std::abs(numeric)) + floor);
}

/// Projects the op's output onto a fixed random direction r so that every
/// output element contributes to the scalar being differentiated.
double run_case(const OpCase& c, Rng& rng) {
  std::vector<Tensor> leaves;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) leaves.push_back(leaf(c.shapes[i], c.inputs[i]));

  hyperrestore::GradientTape tape;
  std::vector<double> r;
  {
    hyperrestore::TapeScope scope(tape);
    const Tensor out = c.library(leaves);
    r = random_values(rng, out.numel(), -1.0, 1.0);
    const Tensor proj = hyperrestore::linear(hyperrestore::reshape(out, {out.numel()}),
                                             Tensor::from({1, out.numel()}, to_float(r)), Tensor::zeros({1}));
    tape.backward(proj);
  }
  auto objective = [&](const std::vector<std::vector<double>>& in) {
    const auto out = c.reference(in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += r[i] * out[i];
    return s;
  };

  double worst = 0.0;
  auto point = c.inputs;
  for (std::size_t a = 0; a < point.size(); ++a) {
    const auto analytic = leaves[a].grad();
    std::vector<double> numeric(point[a].size());
    for (std::size_t i = 0; i < point[a].size(); ++i) {
      const double x = point[a][i];
      point[a][i] = x + kStep;
      const double fp = objective(point);
      point[a][i] = x - kStep;
      const double fm = objective(point);
      point[a][i] = x;
      numeric[i] = (fp - fm) / (2.0 * kStep);
    }
    double scale = 0.0;
    for (double g : numeric) scale = std::max(scale, std::abs(g));
    const double floor = 1e-5 * std::max(scale, 1e-3);
    for (std::size_t i = 0; i < numeric.size(); ++i) worst = std::max(worst, pair_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

oracle::Volume volume(std::size_t c, std::size_t h, std::size_t w, const std::vector<double>& v) {
  oracle::Volume out(c, h, w);
  out.v = v;
  return out;
}

std::size_t pick(Rng& rng, std::initializer_list<std::size_t> options) {
  std::uniform_int_distribution<std::size_t> d(0, options.size() - 1);
  return *(options.begin() + d(rng));
}

OpCase make_case(const std::string& op, Rng& rng) {
  namespace hr = hyperrestore;
  OpCase c;
  if (op == "conv2d") {
    const std::size_t cin = pick(rng, {1, 2, 3}), cout = pick(rng, {1, 2, 4}), k = pick(rng, {1, 3, 5});
    const std::size_t stride = pick(rng, {1, 2}), pad = pick(rng, {0, 1, 2});
    const std::size_t h = k + pick(rng, {1, 2, 4}), w = k + pick(rng, {0, 3});
    c.shapes = {{cin, h, w}, {cout, cin, k, k}, {cout}};
    c.inputs = {random_values(rng, cin * h * w, -1, 1), random_values(rng, cout * cin * k * k, -1, 1),
                random_values(rng, cout, -1, 1)};
    c.library = [=](const std::vector<Tensor>& t) { return hr::conv2d(t[0], t[1], t[2], stride, pad); };
    c.reference = [=](const std::vector<std::vector<double>>& in) {
      const oracle::Filter f{cout, cin, k, in[1]};
      return oracle::conv2d(volume(cin, h, w, in[0]), f, &in[2], stride, pad).v;
    };
  } else if (op == "relu") {
    const std::size_t n = pick(rng, {5, 12, 30});
    c.shapes = {{n}};
    c.inputs = {away_from_zero(rng, n, 10 * kStep)};
    c.library = [](const std::vector<Tensor>& t) { return hr::relu(t[0]); };
    c.reference = [](const std::vector<std::vector<double>>& in) {
      auto v = in[0];
      for (auto& x : v) x = std::max(x, 0.0);
      return v;
    };
  } else if (op == "pixelshuffle" || op == "pixel_unshuffle") {
    const std::size_t r = pick(rng, {2, 3}), ch = pick(rng, {1, 2}), h = pick(rng, {1, 2}), w = pick(rng, {1, 3});
    const bool forward = op == "pixelshuffle";
    const Shape shape = forward ? Shape{ch * r * r, h, w} : Shape{ch, h * r, w * r};
    c.shapes = {shape};
    c.inputs = {random_values(rng, hr::shape_numel(shape), -1, 1)};
    c.library = [=](const std::vector<Tensor>& t) {
      return forward ? hr::pixelshuffle(t[0], r) : hr::pixel_unshuffle(t[0], r);
    };
    c.reference = [=](const std::vector<std::vector<double>>& in) {
      if (forward) return oracle::pixelshuffle(volume(ch * r * r, h, w, in[0]), r).v;
      // Inverse mapping written out directly.
      const auto src = volume(ch, h * r, w * r, in[0]);
      oracle::Volume out(ch * r * r, h, w);
      for (std::size_t o = 0; o < ch * r * r; ++o)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const std::size_t base = o / (r * r), dy = (o % (r * r)) / r, dx = o % r;
            out.at(o, y, x) = src.at(base, y * r + dy, x * r + dx);
          }
      return out.v;
    };
  } else if (op == "add") {
    const std::size_t n = pick(rng, {3, 10});
    c.shapes = {{n}, {n}};
    c.inputs = {random_values(rng, n, -1, 1), random_values(rng, n, -1, 1)};
    c.library = [](const std::vector<Tensor>& t) { return hr::add(t[0], t[1]); };
    c.reference = [](const std::vector<std::vector<double>>& in) {
      auto v = in[0];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += in[1][i];
      return v;
    };
  } else if (op == "add_n") {
    const std::size_t n = pick(rng, {3, 10}), terms = pick(rng, {1, 3, 4});
    for (std::size_t t = 0; t < terms; ++t) {
      c.shapes.push_back({n});
      c.inputs.push_back(random_values(rng, n, -1, 1));
    }
    c.library = [](const std::vector<Tensor>& t) { return hr::add_n(t); };
    c.reference = [](const std::vector<std::vector<double>>& in) {
      std::vector<double> v(in[0].size(), 0.0);
      for (const auto& term : in)
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += term[i];
      return v;
    };
  } else if (op == "scale") {
    const std::size_t n = pick(rng, {4, 9});
    const double f = static_cast<float>(std::uniform_real_distribution<double>(-2, 2)(rng));
    c.shapes = {{n}};
    c.inputs = {random_values(rng, n, -1, 1)};
    c.library = [f](const std::vector<Tensor>& t) { return hr::scale(t[0], f); };
    c.reference = [f](const std::vector<std::vector<double>>& in) {
      auto v = in[0];
      for (auto& x : v) x *= f;
      return v;
    };
  } else if (op == "affine_combine") {
    const std::size_t n = pick(rng, {9, 18, 36});
    const double cc = std::uniform_real_distribution<double>(-0.5, 1.5)(rng);
    c.shapes = {{n}, {n}};
    c.inputs = {random_values(rng, n, -1, 1), random_values(rng, n, -1, 1)};
    c.library = [cc](const std::vector<Tensor>& t) { return hr::affine_combine(t[0], t[1], cc); };
    c.reference = [cc](const std::vector<std::vector<double>>& in) {
      std::vector<double> v(in[0].size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = cc * in[0][i] + in[1][i];
      return v;
    };
  } else if (op == "reshape") {
    const std::size_t a = pick(rng, {2, 3}), b = pick(rng, {2, 4});
    c.shapes = {{a, b}};
    c.inputs = {random_values(rng, a * b, -1, 1)};
    c.library = [=](const std::vector<Tensor>& t) { return hr::reshape(t[0], {b, a}); };
    c.reference = [](const std::vector<std::vector<double>>& in) { return in[0]; };
  } else if (op == "linear") {
    const std::size_t m = pick(rng, {1, 3, 5}), n = pick(rng, {2, 7});
    c.shapes = {{n}, {m, n}, {m}};
    c.inputs = {random_values(rng, n, -1, 1), random_values(rng, m * n, -1, 1), random_values(rng, m, -1, 1)};
    c.library = [](const std::vector<Tensor>& t) { return hr::linear(t[0], t[1], t[2]); };
    c.reference = [=](const std::vector<std::vector<double>>& in) {
      std::vector<double> v(m);
      for (std::size_t i = 0; i < m; ++i) {
        v[i] = in[2][i];
        for (std::size_t j = 0; j < n; ++j) v[i] += in[1][i * n + j] * in[0][j];
      }
      return v;
    };
  } else if (op == "l1_loss") {
    const std::size_t n = pick(rng, {4, 16});
    const auto target = random_values(rng, n, -1, 1);
    auto diff = away_from_zero(rng, n, 10 * kStep);
    std::vector<double> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = static_cast<float>(target[i] + diff[i]);
    c.shapes = {{n}, {n}};
    c.inputs = {pred, target};
    c.library = [](const std::vector<Tensor>& t) { return hr::l1_loss(t[0], t[1]); };
    c.reference = [](const std::vector<std::vector<double>>& in) {
      return std::vector<double>{oracle::l1(in[0], in[1])};
    };
  } else if (op == "sum") {
    const std::size_t n = pick(rng, {1, 6, 20});
    c.shapes = {{n}};
    c.inputs = {random_values(rng, n, -1, 1)};
    c.library = [](const std::vector<Tensor>& t) { return hr::sum(t[0]); };
    c.reference = [](const std::vector<std::vector<double>>& in) {
      double s = 0.0;
      for (double x : in[0]) s += x;
      return std::vector<double>{s};
    };
  } else {
    throw std::invalid_argument("unknown op " + op);
  }
  return c;
}

std::string describe(const char* what, const Outcome& o) {
  std::ostringstream os;
  os << what << ": " << o.instances << " instances, worst error " << o.worst << " of tolerance";
  return os.str();
}

}  // namespace

const std::vector<std::string>& differentiable_ops() {
  static const std::vector<std::string> ops = {"conv2d", "relu",           "pixelshuffle", "pixel_unshuffle",
                                               "add",    "add_n",          "scale",        "affine_combine",
                                               "reshape", "linear",        "l1_loss",      "sum"};
  return ops;
}

Outcome gradcheck_op(const std::string& op, std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  Outcome o;
  for (std::size_t i = 0; i < instances; ++i) {
    o.worst = std::max(o.worst, run_case(make_case(op, rng), rng));
    ++o.instances;
  }
  o.pass = o.worst <= 1.0;
  o.detail = describe(op.c_str(), o);
  return o;
}

namespace {

struct PipelineInstance {
  hyperrestore::HyperRestoreModel model;
  oracle::Pipeline reference;
  std::vector<double> input, target;
  std::size_t h = 0, w = 0;
  double c = 0.0;
};

/// Relu inputs and L1 residual signs of the reference forward at one point.
struct Pattern {
  std::vector<bool> signs;
  bool operator==(const Pattern&) const = default;
};

double pipeline_loss(const PipelineInstance& p, Pattern* pattern) {
  const auto& ref = p.reference;
  const auto out = ref.forward(volume(3, p.h, p.w, p.input), p.c);
  if (pattern) {
    pattern->signs.clear();
    // Residual signs suffice to detect L1 kinks; relu kinks are tracked by
    // re-running the forward with the activations exposed below.
    for (std::size_t i = 0; i < out.v.size(); ++i) pattern->signs.push_back(out.v[i] > p.target[i]);
  }
  return oracle::l1(out.v, p.target);
}

/// Signs of every relu input in the reference forward.
std::vector<bool> relu_signs(const PipelineInstance& p) {
  const auto& ref = p.reference;
  const std::size_t pad = ref.k / 2;
  std::vector<bool> signs;
  auto record = [&signs](const oracle::Volume& v) {
    for (double x : v.v) signs.push_back(x > 0.0);
  };
  const oracle::Filter head{ref.channels, 3, ref.k, ref.head_w};
  const auto pre0 = oracle::conv2d(volume(3, p.h, p.w, p.input), head, &ref.head_b, 2, pad);
  record(pre0);
  oracle::Volume feat = oracle::relu(pre0);
  for (std::size_t b = 0; b < ref.resblocks; ++b) {
    oracle::Filter k1{ref.channels, ref.channels, ref.k, {}}, k2{ref.channels, ref.channels, ref.k, {}};
    for (std::size_t i = 0; i < ref.meta_w[2 * b].size(); ++i) {
      k1.v.push_back(p.c * ref.meta_w[2 * b][i] + ref.meta_b[2 * b][i]);
      k2.v.push_back(p.c * ref.meta_w[2 * b + 1][i] + ref.meta_b[2 * b + 1][i]);
    }
    const auto pre = oracle::conv2d(feat, k1, nullptr, 1, pad);
    record(pre);
    feat = oracle::add(feat, oracle::conv2d(oracle::relu(pre), k2, nullptr, 1, pad));
  }
  return signs;
}

/// Points the reference pipeline's parameter vector at slot `index` (canonical order).
std::vector<double>& reference_slot(oracle::Pipeline& ref, std::size_t index) {
  const std::size_t meta = ref.meta_w.size();
  if (index < 2 * meta) return index % 2 == 0 ? ref.meta_w[index / 2] : ref.meta_b[index / 2];
  switch (index - 2 * meta) {
    case 0: return ref.head_w;
    case 1: return ref.head_b;
    case 2: return ref.expand_w;
    case 3: return ref.expand_b;
    case 4: return ref.out_w;
    default: return ref.out_b;
  }
}

PipelineInstance make_pipeline(Rng& rng) {
  hyperrestore::ArchConfig arch;
  arch.channels = pick(rng, {2, 3, 4});
  arch.num_resblocks = pick(rng, {1, 2});
  PipelineInstance p;
  p.model = hyperrestore::HyperRestoreModel::initialize(arch, hyperrestore::TaskKind::noise, {10, 50}, rng());
  // Re-draw every parameter so slopes are as large as offsets and c matters.
  for (auto& ref : p.model.parameters()) {
    const auto v = random_values(rng, ref.values.size(), -0.5, 0.5);
    std::copy(v.begin(), v.end(), ref.values.begin());
  }
  p.reference.channels = arch.channels;
  p.reference.resblocks = arch.num_resblocks;
  p.reference.meta_w.resize(arch.num_generated_kernels());
  p.reference.meta_b.resize(arch.num_generated_kernels());
  const auto views = std::as_const(p.model).parameters();
  for (std::size_t i = 0; i < views.size(); ++i) {
    reference_slot(p.reference, i).assign(views[i].values.begin(), views[i].values.end());
  }
  p.h = pick(rng, {4, 6});
  p.w = pick(rng, {4, 8});
  p.input = random_values(rng, 3 * p.h * p.w, 0, 1);
  p.target = random_values(rng, 3 * p.h * p.w, 0, 1);
  p.c = std::uniform_real_distribution<double>(-0.25, 1.25)(rng);
  return p;
}

}  // namespace

Outcome gradcheck_pipeline(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  Outcome o;
  std::size_t skipped = 0, checked = 0;
  while (o.instances < instances) {
    PipelineInstance p = make_pipeline(rng);

    hyperrestore::GradientTape tape;
    const hyperrestore::BoundModel bound(p.model, true);
    {
      hyperrestore::TapeScope scope(tape);
      const Tensor input = Tensor::from({3, p.h, p.w}, to_float(p.input));
      const Tensor target = Tensor::from({3, p.h, p.w}, to_float(p.target));
      tape.backward(hyperrestore::l1_loss(bound.forward(input, p.c), target));
    }
    const auto analytic = bound.gradients();

    Pattern base;
    pipeline_loss(p, &base);
    const auto base_relu = relu_signs(p);
    double worst = 0.0;
    for (std::size_t slot = 0; slot < analytic.size(); ++slot) {
      auto& values = reference_slot(p.reference, slot);
      std::vector<double> numeric(values.size());
      std::vector<bool> valid(values.size(), true);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = values[i];
        // Fall back to smaller steps when a step crosses a relu or L1 kink.
        for (double h = kStep; h >= 1e-7; h /= 100.0) {
          Pattern plus, minus;
          values[i] = x + h;
          const double fp = pipeline_loss(p, &plus);
          const bool plus_ok = plus == base && relu_signs(p) == base_relu;
          values[i] = x - h;
          const double fm = pipeline_loss(p, &minus);
          const bool minus_ok = minus == base && relu_signs(p) == base_relu;
          values[i] = x;
          numeric[i] = (fp - fm) / (2.0 * h);
          valid[i] = plus_ok && minus_ok;
          if (valid[i]) break;
        }
      }
      double scale = 0.0;
      for (double g : numeric) scale = std::max(scale, std::abs(g));
      const double floor = 1e-5 * std::max(scale, 1e-3);
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        if (!valid[i]) {
          ++skipped;
          continue;
        }
        ++checked;
        worst = std::max(worst, pair_error(analytic[slot][i], numeric[i], floor));
      }
    }
    o.worst = std::max(o.worst, worst);
    ++o.instances;
  }
  // Coordinates sitting exactly on a kink are rare; too many would mean the check is vacuous.
  o.pass = o.worst <= 1.0 && skipped * 100 <= checked;
  std::ostringstream os;
  os << describe("pipeline", o) << ", " << checked << " coordinates checked, " << skipped << " on kinks";
  o.detail = os.str();
  return o;
}

Outcome kernel_affinity(std::uint64_t seed) {
  Rng rng(seed);
  Outcome o;
  const std::vector<double> lambdas = {-0.5, 0.0, 0.25, 0.5, 1.0, 1.5};
  std::uniform_real_distribution<double> cdist(-0.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto hnet = hyperrestore::HyperNetwork::initialize(4, {4, 3, 3}, rng);
    const double c1 = cdist(rng), c2 = cdist(rng);
    const auto k1 = hyperrestore::generate_network_weights(hnet, c1);
    const auto k2 = hyperrestore::generate_network_weights(hnet, c2);
    for (double a : lambdas) {
      const auto k = hyperrestore::generate_network_weights(hnet, a * c1 + (1 - a) * c2);
      for (std::size_t j = 0; j < k.size(); ++j) {
        const auto v = k[j].data(), v1 = k1[j].data(), v2 = k2[j].data();
        for (std::size_t i = 0; i < v.size(); ++i) {
          o.worst = std::max(o.worst, std::abs(v[i] - (a * v1[i] + (1 - a) * v2[i])));
        }
      }
      ++o.instances;
    }
  }
  o.pass = o.worst <= 1e-6;
  std::ostringstream os;
  os << o.instances << " (kernel set, lambda) pairs, max deviation " << o.worst;
  o.detail = os.str();
  return o;
}

Outcome parameter_identity() {
  Outcome o;
  o.pass = true;
  std::ostringstream os;
  for (const auto& arch : {hyperrestore::ArchConfig::desk(), hyperrestore::ArchConfig::full()}) {
    const std::size_t dedicated =
        arch.num_generated_kernels() * arch.channels * arch.channels * arch.kernel_size * arch.kernel_size;
    std::size_t first = 0;
    for (std::size_t k : {2u, 5u, 11u}) {
      std::vector<double> levels;
      for (std::size_t i = 0; i < k; ++i) levels.push_back(5.0 + 85.0 * static_cast<double>(i) / (k - 1));
      const auto model = hyperrestore::HyperRestoreModel::initialize(
          arch, hyperrestore::TaskKind::noise, {levels.front(), levels.back()}, 11);
      const std::size_t count = hyperrestore::count_parameters(model.hypernet);
      if (k == 2) first = model.parameter_counts().total;
      o.pass = o.pass && count == 2 * dedicated && model.parameter_counts().total == first;
      ++o.instances;
    }
    os << "C=" << arch.channels << " R=" << arch.num_resblocks << ": hypernet " << 2 * dedicated
       << " = 2 x " << dedicated << ", total " << first << " for k in {2,5,11}; ";
  }
  o.detail = os.str();
  return o;
}

namespace {

template <typename Make>
Outcome compare_many(const char* what, std::size_t instances, double tol, Make make) {
  Outcome o;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto [library, reference] = make(i);
    double err = 0.0;
    for (std::size_t j = 0; j < library.size(); ++j) {
      if (std::isinf(reference[j]) && library[j] == reference[j]) continue;
      err = std::max(err, std::abs(library[j] - reference[j]));
    }
    o.worst = std::max(o.worst, err);
    ++o.instances;
  }
  o.pass = o.worst <= tol;
  std::ostringstream os;
  os << what << ": " << o.instances << " instances, max abs error " << o.worst << " (tol " << tol << ")";
  o.detail = os.str();
  return o;
}

std::pair<Tensor, oracle::Volume> random_image(Rng& rng, std::size_t c, std::size_t h, std::size_t w) {
  const auto v = random_values(rng, c * h * w, 0, 1);
  return {Tensor::from({c, h, w}, to_float(v)), volume(c, h, w, v)};
}

std::vector<double> as_double(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

Outcome oracle_conv2d(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  return compare_many("conv2d", instances, 1e-6, [&](std::size_t) {
    const std::size_t cin = pick(rng, {1, 3, 4}), cout = pick(rng, {1, 2, 5}), k = pick(rng, {1, 3, 5});
    const std::size_t stride = pick(rng, {1, 2}), pad = pick(rng, {0, 1, 2});
    const std::size_t h = k + pick(rng, {0, 3, 6}), w = k + pick(rng, {1, 4});
    const auto [img, vol] = random_image(rng, cin, h, w);
    const auto kv = random_values(rng, cout * cin * k * k, -0.5, 0.5);
    const auto bv = random_values(rng, cout, -0.5, 0.5);
    const Tensor out = hyperrestore::conv2d(img, Tensor::from({cout, cin, k, k}, to_float(kv)),
                                            Tensor::from({cout}, to_float(bv)), stride, pad);
    return std::pair{as_double(out), oracle::conv2d(vol, {cout, cin, k, kv}, &bv, stride, pad).v};
  });
}

Outcome oracle_l1(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  return compare_many("l1_loss", instances, 1e-7, [&](std::size_t) {
    const std::size_t n = pick(rng, {1, 7, 64, 300});
    const auto a = random_values(rng, n, 0, 1), b = random_values(rng, n, 0, 1);
    const double lib = hyperrestore::l1_loss(Tensor::from({n}, to_float(a)), Tensor::from({n}, to_float(b))).item();
    return std::pair{std::vector<double>{lib}, std::vector<double>{oracle::l1(a, b)}};
  });
}

Outcome oracle_psnr(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  return compare_many("psnr", instances, 1e-6, [&](std::size_t i) {
    const std::size_t h = pick(rng, {4, 9, 16}), w = pick(rng, {5, 16});
    const auto [a, va] = random_image(rng, 3, h, w);
    auto [b, vb] = random_image(rng, 3, h, w);
    if (i % 10 == 0) {  // identical pair: both report +infinity
      b = a;
      vb = va;
    }
    return std::pair{std::vector<double>{hyperrestore::psnr(a, b)}, std::vector<double>{oracle::psnr(va.v, vb.v)}};
  });
}

Outcome oracle_ssim(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  return compare_many("ssim", instances, 1e-4, [&](std::size_t) {
    const std::size_t h = pick(rng, {11, 14, 20}), w = pick(rng, {11, 17});
    const auto [a, va] = random_image(rng, 3, h, w);
    // Correlated test image so SSIM is not trivially near zero.
    const auto noise = random_values(rng, 3 * h * w, -0.2, 0.2);
    std::vector<double> bv(va.v.size());
    for (std::size_t j = 0; j < bv.size(); ++j) bv[j] = static_cast<float>(std::clamp(va.v[j] + noise[j], 0.0, 1.0));
    const Tensor b = Tensor::from({3, h, w}, to_float(bv));
    return std::pair{std::vector<double>{hyperrestore::ssim(a, b)},
                     std::vector<double>{oracle::ssim(va, volume(3, h, w, bv))}};
  });
}

Outcome oracle_bicubic(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  return compare_many("bicubic", instances, 1e-5, [&](std::size_t) {
    const std::size_t h = pick(rng, {4, 7, 12, 16}), w = pick(rng, {5, 8, 13});
    const std::size_t oh = pick(rng, {3, 6, 9, 20, 31}), ow = pick(rng, {2, 8, 16, 25});
    const auto [img, vol] = random_image(rng, pick(rng, {1, 3}), h, w);
    return std::pair{as_double(hyperrestore::resize_bicubic(img, oh, ow)), oracle::resize_bicubic(vol, oh, ow).v};
  });
}

}  // namespace checks
