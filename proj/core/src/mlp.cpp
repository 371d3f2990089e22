#include "hjb/mlp.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "hjb/errors.hpp"
#include "hjb/rng.hpp"

namespace hjb {

namespace {

using json = nlohmann::ordered_json;

// Inputs are clipped to twice the normalized box.
constexpr double kClipBound = 2.0;

Eigen::VectorXd clip_normalized(const MlpModel& m, Eigen::VectorXd z) {
  bool clipped = false;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] > kClipBound) {
      z[i] = kClipBound;
      clipped = true;
    } else if (z[i] < -kClipBound) {
      z[i] = -kClipBound;
      clipped = true;
    }
  }
  if (clipped && m.clip_warned &&
      !m.clip_warned->exchange(true, std::memory_order_relaxed))
    std::cerr << "mlp: input outside 2x normalized box, clipped\n";
  return z;
}

}  // namespace

AffineNormalizer AffineNormalizer::from_domain(double t0, double tf,
                                               const Box& x_box) {
  const Eigen::Index n = x_box.dim();
  AffineNormalizer norm;
  norm.shift.resize(n + 1);
  norm.scale.resize(n + 1);
  norm.shift[0] = 0.5 * (t0 + tf);
  norm.scale[0] = tf > t0 ? 2.0 / (tf - t0) : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double half = 0.5 * (x_box.hi[i] - x_box.lo[i]);
    norm.shift[i + 1] = 0.5 * (x_box.hi[i] + x_box.lo[i]);
    norm.scale[i + 1] = half > 0.0 ? 1.0 / half : 1.0;
  }
  return norm;
}

Eigen::VectorXd AffineNormalizer::normalize(double t,
                                            const Eigen::VectorXd& x) const {
  Eigen::VectorXd p(x.size() + 1);
  p[0] = t;
  p.tail(x.size()) = x;
  return (scale.array() * (p - shift).array()).matrix();
}

MlpModel make_mlp(const std::vector<int>& hidden_widths, int state_dim,
                  const AffineNormalizer& norm, std::uint64_t seed) {
  MlpModel m;
  m.norm = norm;
  m.widths.push_back(state_dim + 1);
  for (int w : hidden_widths) {
    if (w < 1) throw ConfigError("mlp: hidden widths must be positive");
    m.widths.push_back(w);
  }
  m.widths.push_back(1);

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
    const int fan_in = m.widths[l];
    const int fan_out = m.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return m;
}

double mlp_forward(const MlpModel& m, double t, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = clip_normalized(m, m.norm.normalize(t, x));
  const std::size_t nl = m.weights.size();
  for (std::size_t l = 0; l < nl; ++l) {
    h = (m.weights[l] * h + m.biases[l]).eval();
    if (l + 1 < nl) h = h.array().tanh().matrix();
  }
  return h[0];
}

InputGradient mlp_input_gradient(const MlpModel& m, double t,
                                 const Eigen::VectorXd& x) {
  const Eigen::VectorXd z_raw = m.norm.normalize(t, x);
  const Eigen::VectorXd z = clip_normalized(m, z_raw);
  const std::size_t nl = m.weights.size();

  std::vector<Eigen::VectorXd> h(nl + 1);
  h[0] = z;
  for (std::size_t l = 0; l < nl; ++l) {
    h[l + 1] = m.weights[l] * h[l] + m.biases[l];
    if (l + 1 < nl) h[l + 1] = h[l + 1].array().tanh().matrix();
  }

  // Reverse sweep: adjoint of the (scalar) output is 1.
  Eigen::VectorXd bar = Eigen::VectorXd::Ones(1);
  for (std::size_t l = nl; l-- > 0;) {
    if (l + 1 < nl)
      bar = (bar.array() * (1.0 - h[l + 1].array().square())).matrix();
    bar = (m.weights[l].transpose() * bar).eval();
  }
  // Chain through normalization; clipped coordinates have zero derivative.
  for (Eigen::Index i = 0; i < bar.size(); ++i) {
    const bool clipped = z_raw[i] > kClipBound || z_raw[i] < -kClipBound;
    bar[i] = clipped ? 0.0 : bar[i] * m.norm.scale[i];
  }

  InputGradient out;
  out.value = h[nl][0];
  out.dv_dt = bar[0];
  out.dv_dx = bar.tail(bar.size() - 1);
  return out;
}

double mlp_loss(const MlpModel& m, const std::vector<Sample>& data, double mu) {
  if (data.empty()) throw EmptyDataset("mlp_loss: no samples");
  const double inv_n = 1.0 / static_cast<double>(data.size());
  double acc = 0.0;
  for (const Sample& s : data) {
    if (mu > 0.0) {
      const InputGradient g = mlp_input_gradient(m, s.t, s.x);
      const double ev = g.value - s.v;
      acc += inv_n * ev * ev +
             mu * inv_n * (g.dv_dx - s.lambda).squaredNorm();
    } else {
      const double ev = mlp_forward(m, s.t, s.x) - s.v;
      acc += inv_n * ev * ev;
    }
  }
  return acc;
}

double mlp_loss_grad(const MlpModel& m, const std::vector<Sample>& data,
                     const std::vector<int>& idx, double mu,
                     Eigen::VectorXd& grad) {
  if (data.empty()) throw EmptyDataset("mlp_loss_grad: no samples");
  const std::size_t nl = m.weights.size();
  const Eigen::Index nb =
      idx.empty() ? static_cast<Eigen::Index>(data.size())
                  : static_cast<Eigen::Index>(idx.size());
  const double inv_n = 1.0 / static_cast<double>(nb);
  const int d_in = m.input_dim();
  const int n = m.state_dim();

  // Batch inputs and targets; columns are samples.
  Eigen::MatrixXd Z(d_in, nb);
  Eigen::VectorXd v_target(nb);
  Eigen::MatrixXd lam_target(n, nb);
  for (Eigen::Index c = 0; c < nb; ++c) {
    const Sample& s = data[idx.empty() ? static_cast<std::size_t>(c)
                                       : static_cast<std::size_t>(idx[c])];
    Z.col(c) = clip_normalized(m, m.norm.normalize(s.t, s.x));
    v_target[c] = s.v;
    lam_target.col(c) = s.lambda;
  }

  // Forward pass, saving activations.
  std::vector<Eigen::MatrixXd> H(nl + 1);
  H[0] = Z;
  for (std::size_t l = 0; l < nl; ++l) {
    H[l + 1] = (m.weights[l] * H[l]).colwise() + m.biases[l];
    if (l + 1 < nl) H[l + 1] = H[l + 1].array().tanh().matrix();
  }
  const Eigen::VectorXd v_pred = H[nl].row(0);

  // Input-gradient reverse pass (per column), kept to form the costate
  // residual. G[l] = dV/dH_l.
  std::vector<Eigen::MatrixXd> G(nl + 1);
  G[nl] = Eigen::MatrixXd::Ones(1, nb);
  for (std::size_t l = nl; l-- > 0;) {
    Eigen::MatrixXd bar = G[l + 1];
    if (l + 1 < nl)
      bar = (bar.array() * (1.0 - H[l + 1].array().square())).matrix();
    G[l] = m.weights[l].transpose() * bar;
  }
  // V_x rows: scale by the state part of the normalizer.
  Eigen::MatrixXd vx_pred(n, nb);
  for (int i = 0; i < n; ++i)
    vx_pred.row(i) = G[0].row(i + 1) * m.norm.scale[i + 1];

  const Eigen::VectorXd e_v = v_pred - v_target;
  const Eigen::MatrixXd r = vx_pred - lam_target;
  const double loss =
      inv_n * e_v.squaredNorm() + mu * inv_n * r.squaredNorm();

  // Forward tangent pass in the direction c_i = (2 mu / N) * r_i lifted to
  // input space (t-slot zero, chained through the normalizer).
  std::vector<Eigen::MatrixXd> Hd(nl + 1);
  Hd[0] = Eigen::MatrixXd::Zero(d_in, nb);
  if (mu > 0.0) {
    for (int i = 0; i < n; ++i)
      Hd[0].row(i + 1) = (2.0 * mu * inv_n) * r.row(i) * m.norm.scale[i + 1];
  }
  std::vector<Eigen::MatrixXd> Ad(nl);  // tangents of pre-activations
  for (std::size_t l = 0; l < nl; ++l) {
    Ad[l] = m.weights[l] * Hd[l];
    if (l + 1 < nl)
      Hd[l + 1] = ((1.0 - H[l + 1].array().square()) * Ad[l].array()).matrix();
    else
      Hd[l + 1] = Ad[l];
  }

  // Combined reverse sweep. barH carries the value-loss adjoint, barHd the
  // tangent adjoint (seeded with 1: the costate loss gradient equals the
  // parameter gradient of sum_i c_i^T VxNN_i, whose tangent output adjoint
  // is one).
  std::vector<Eigen::MatrixXd> wbar(nl);
  std::vector<Eigen::VectorXd> bbar(nl);
  Eigen::MatrixXd barH = (2.0 * inv_n) * e_v.transpose();
  Eigen::MatrixXd barHd =
      mu > 0.0 ? Eigen::MatrixXd::Ones(1, nb) : Eigen::MatrixXd::Zero(1, nb);
  for (std::size_t l = nl; l-- > 0;) {
    Eigen::MatrixXd barA;   // adjoint of A_l = W_l H_l + b_l
    Eigen::MatrixXd barAd;  // adjoint of Ad_l = W_l Hd_l
    if (l + 1 < nl) {
      const auto phi1 = (1.0 - H[l + 1].array().square());  // tanh'
      const auto phi2 = -2.0 * H[l + 1].array() * phi1;     // tanh''
      barAd = (phi1 * barHd.array()).matrix();
      barA = (phi1 * barH.array() + phi2 * Ad[l].array() * barHd.array())
                 .matrix();
    } else {
      barA = barH;
      barAd = barHd;
    }
    wbar[l] = barA * H[l].transpose() + barAd * Hd[l].transpose();
    bbar[l] = barA.rowwise().sum();
    if (l > 0) {
      barH = m.weights[l].transpose() * barA;
      barHd = m.weights[l].transpose() * barAd;
    }
  }

  // Pack gradients in parameter order (W row-major, then b, per layer).
  grad.resize(param_count(m));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    for (Eigen::Index rr = 0; rr < wbar[l].rows(); ++rr)
      for (Eigen::Index cc = 0; cc < wbar[l].cols(); ++cc)
        grad[at++] = wbar[l](rr, cc);
    grad.segment(at, bbar[l].size()) = bbar[l];
    at += bbar[l].size();
  }
  return loss;
}

Eigen::VectorXd param_gradient(const MlpModel& m,
                               const std::vector<Sample>& data, double mu) {
  Eigen::VectorXd grad;
  mlp_loss_grad(m, data, {}, mu, grad);
  return grad;
}

Eigen::Index param_count(const MlpModel& m) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    total += m.weights[l].size() + m.biases[l].size();
  return total;
}

Eigen::VectorXd pack_params(const MlpModel& m) {
  Eigen::VectorXd p(param_count(m));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c)
        p[at++] = m.weights[l](r, c);
    p.segment(at, m.biases[l].size()) = m.biases[l];
    at += m.biases[l].size();
  }
  return p;
}

void unpack_params(MlpModel& m, const Eigen::VectorXd& p) {
  if (p.size() != param_count(m))
    throw ConfigError("unpack_params: size mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c)
        m.weights[l](r, c) = p[at++];
    m.biases[l] = p.segment(at, m.biases[l].size());
    at += m.biases[l].size();
  }
}

std::string mlp_to_json_string(const MlpModel& m) {
  json j;
  j["widths"] = m.widths;
  j["activation"] = "tanh";
  j["normalization"]["shift"] =
      std::vector<double>(m.norm.shift.data(),
                          m.norm.shift.data() + m.norm.shift.size());
  j["normalization"]["scale"] =
      std::vector<double>(m.norm.scale.data(),
                          m.norm.scale.data() + m.norm.scale.size());
  j["layers"] = json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    json layer;
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c)
        row.push_back(m.weights[l](r, c));
      rows.push_back(std::move(row));
    }
    layer["W"] = std::move(rows);
    layer["b"] = std::vector<double>(
        m.biases[l].data(), m.biases[l].data() + m.biases[l].size());
    j["layers"].push_back(std::move(layer));
  }
  return j.dump();
}

MlpModel mlp_from_json_string(const std::string& text) {
  json j = json::parse(text);
  MlpModel m;
  m.widths = j.at("widths").get<std::vector<int>>();
  if (j.at("activation").get<std::string>() != "tanh")
    throw ConfigError("mlp: unsupported activation");
  const auto shift = j.at("normalization").at("shift").get<std::vector<double>>();
  const auto scale = j.at("normalization").at("scale").get<std::vector<double>>();
  m.norm.shift = Eigen::Map<const Eigen::VectorXd>(shift.data(),
                                                   static_cast<Eigen::Index>(shift.size()));
  m.norm.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(),
                                                   static_cast<Eigen::Index>(scale.size()));
  for (const auto& layer : j.at("layers")) {
    const auto& wj = layer.at("W");
    const Eigen::Index rows = static_cast<Eigen::Index>(wj.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(wj.at(0).size());
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        w(r, c) = wj.at(static_cast<std::size_t>(r))
                      .at(static_cast<std::size_t>(c))
                      .get<double>();
    const auto bv = layer.at("b").get<std::vector<double>>();
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(
        bv.data(), static_cast<Eigen::Index>(bv.size())));
  }
  if (m.weights.size() + 1 != m.widths.size())
    throw ConfigError("mlp: layer count does not match widths");
  return m;
}

void save_mlp(const MlpModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_mlp: cannot open " + path);
  out << mlp_to_json_string(m) << "\n";
}

MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_mlp: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return mlp_from_json_string(text);
}

}  // namespace hjb
