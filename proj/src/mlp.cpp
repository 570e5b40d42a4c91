#include "jumpgrad/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "jumpgrad/rng.hpp"

namespace jumpgrad::nn {

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(v);
    case Activation::kRelu:
      return v > 0.0 ? v : 0.0;
    case Activation::kIdentity:
      return v;
  }
  return v;
}

// Derivative at the pre-activation; ReLU uses the a.e. derivative with
// value 0 at the kink.
double activate_deriv(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - post * post;
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

std::vector<std::size_t> MlpSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (auto w : hidden_widths) dims.push_back(w);
  dims.push_back(output_dim);
  return dims;
}

std::size_t MlpSpec::param_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += (dims[l] + 1) * dims[l + 1];
  return n;
}

FlatParams init_params(const MlpSpec& spec) {
  const auto dims = spec.layer_dims();
  FlatParams p;
  p.theta.resize(spec.param_count());
  rng::Stream stream(spec.init_seed, 0, rng::Purpose::kInit);
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    const std::size_t count = (dims[l] + 1) * dims[l + 1];
    for (std::size_t i = 0; i < count; ++i) p.theta[pos++] = stream.uniform(-bound, bound);
  }
  return p;
}

void forward(const MlpSpec& spec, const Vec& theta, double t, const Vec& x, Vec& out,
             MlpWorkspace& ws) {
  const auto dims = spec.layer_dims();
  const std::size_t n_layers = dims.size() - 1;
  if (theta.size() != spec.param_count())
    throw std::invalid_argument("mlp: theta length != param count");
  if (x.size() + 1 != spec.input_dim)
    throw std::invalid_argument("mlp: input dimension mismatch");

  ws.act.resize(n_layers + 1);
  ws.pre.resize(n_layers);
  ws.act[0].resize(spec.input_dim);
  ws.act[0][0] = t;
  std::memcpy(ws.act[0].data() + 1, x.data(), x.size() * sizeof(double));

  std::size_t pos = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    const double* w = &theta[pos];
    const double* b = &theta[pos + fan_in * fan_out];
    ws.pre[l].resize(fan_out);
    ws.act[l + 1].resize(fan_out);
    const Vec& in = ws.act[l];
    const bool last = (l + 1 == n_layers);
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double* row = w + o * fan_in;
      double s = b[o];
      for (std::size_t i = 0; i < fan_in; ++i) s += row[i] * in[i];
      ws.pre[l][o] = s;
      ws.act[l + 1][o] = last ? s : activate(spec.activation, s);
    }
    pos += (fan_in + 1) * fan_out;
  }
  out = ws.act[n_layers];
}

Vec forward(const MlpSpec& spec, const Vec& theta, double t, const Vec& x) {
  MlpWorkspace ws;
  Vec out;
  forward(spec, theta, t, x, out, ws);
  return out;
}

void gradients(const MlpSpec& spec, const Vec& theta, double t, const Vec& x, Vec* value,
               Mat* grad_theta_out, Mat* jac_x_out, Vec* jac_t_out, MlpWorkspace& ws) {
  const auto dims = spec.layer_dims();
  const std::size_t n_layers = dims.size() - 1;
  const std::size_t m = spec.output_dim;
  const std::size_t n = spec.param_count();
  const std::size_t d = x.size();

  Vec out;
  forward(spec, theta, t, x, out, ws);
  if (value) *value = out;

  if (grad_theta_out) grad_theta_out->resize(m, n);
  if (jac_x_out) jac_x_out->resize(m, d);
  if (jac_t_out) jac_t_out->assign(m, 0.0);
  if (!grad_theta_out && !jac_x_out && !jac_t_out) return;

  // Layer parameter offsets.
  std::vector<std::size_t> offsets(n_layers);
  {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      offsets[l] = pos;
      pos += (dims[l] + 1) * dims[l + 1];
    }
  }

  ws.bar.resize(n_layers + 1);
  for (std::size_t o = 0; o < m; ++o) {
    // Seed the adjoint of output o at the (linear) output layer's
    // pre-activation.
    ws.bar[n_layers].assign(dims[n_layers], 0.0);
    ws.bar[n_layers][o] = 1.0;

    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
      const double* w = &theta[offsets[l]];
      const Vec& in = ws.act[l];
      const Vec& bar_out = ws.bar[l + 1];

      if (grad_theta_out) {
        double* grow = &grad_theta_out->data[o * n + offsets[l]];
        for (std::size_t q = 0; q < fan_out; ++q) {
          const double g = bar_out[q];
          double* wrow = grow + q * fan_in;
          if (g == 0.0) {
            std::memset(wrow, 0, fan_in * sizeof(double));
          } else {
            for (std::size_t i = 0; i < fan_in; ++i) wrow[i] = g * in[i];
          }
          grow[fan_in * fan_out + q] = g;  // bias
        }
      }

      ws.bar[l].assign(fan_in, 0.0);
      Vec& bar_in = ws.bar[l];
      for (std::size_t q = 0; q < fan_out; ++q) {
        const double g = bar_out[q];
        if (g == 0.0) continue;
        const double* row = w + q * fan_in;
        for (std::size_t i = 0; i < fan_in; ++i) bar_in[i] += g * row[i];
      }
      // Chain through the previous layer's activation (input layer has none;
      // output layer is linear and was seeded directly).
      if (l > 0) {
        for (std::size_t i = 0; i < fan_in; ++i)
          bar_in[i] *= activate_deriv(spec.activation, ws.pre[l - 1][i], ws.act[l][i]);
      }
    }

    if (jac_t_out) (*jac_t_out)[o] = ws.bar[0][0];
    if (jac_x_out)
      for (std::size_t i = 0; i < d; ++i) (*jac_x_out)(o, i) = ws.bar[0][i + 1];
  }
}

Mat grad_theta(const MlpSpec& spec, const Vec& theta, double t, const Vec& x) {
  MlpWorkspace ws;
  Mat g;
  gradients(spec, theta, t, x, nullptr, &g, nullptr, nullptr, ws);
  return g;
}

Mat jac_x(const MlpSpec& spec, const Vec& theta, double t, const Vec& x) {
  MlpWorkspace ws;
  Mat j;
  gradients(spec, theta, t, x, nullptr, nullptr, &j, nullptr, ws);
  return j;
}

namespace {
constexpr char kMagic[8] = {'J', 'G', 'M', 'L', 'P', 'v', '1', '\0'};

void write_u64_le(std::ofstream& f, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64_le(std::ifstream& f) {
  unsigned char buf[8];
  f.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

void save_params(const std::string& path, const Vec& theta) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_params: cannot open " + path);
  f.write(kMagic, 8);
  write_u64_le(f, theta.size());
  for (double v : theta) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64_le(f, bits);
  }
}

Vec load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_params: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_params: bad magic in " + path);
  const std::uint64_t n = read_u64_le(f);
  Vec theta(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_u64_le(f);
    double v;
    std::memcpy(&v, &bits, 8);
    theta[i] = v;
  }
  if (!f) throw std::runtime_error("load_params: truncated file " + path);
  return theta;
}

void export_params_csv(const std::string& path, const Vec& theta) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("export_params_csv: cannot open " + path);
  f << "index,value\n";
  char buf[64];
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, theta[i]);
    f << buf;
  }
}

}  // namespace jumpgrad::nn
