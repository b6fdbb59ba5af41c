#include "dppn/substrate.hpp"

#include <cmath>

#include "dppn/error.hpp"
#include "dppn/transfer.hpp"

namespace dppn {

namespace {
constexpr double kBceClampLo = 1e-7;
constexpr double kBceClampHi = 1.0 - 1e-7;

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw EvalError(std::string(what) + ": shape mismatch");
  }
}

// Normalized grid coordinate in [-1, 1] for index i of `side` points.
double grid_coord(int i, int side) {
  if (side <= 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(side - 1);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return transfer_apply(Transfer::Sigmoid, x.array()).matrix();
}

}  // namespace

const char* loss_name(LossKind k) {
  return k == LossKind::Mse ? "mse" : "bce";
}

LossKind loss_from_name(std::string_view name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "bce") return LossKind::Bce;
  throw ValidationError("unknown loss: " + std::string(name));
}

double loss_mse(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred) {
  check_same_shape(target, pred, "loss_mse");
  return (pred - target).array().square().mean();
}

Eigen::MatrixXd loss_mse_grad(const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& pred) {
  check_same_shape(target, pred, "loss_mse_grad");
  return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

double loss_bce(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred) {
  check_same_shape(target, pred, "loss_bce");
  Eigen::ArrayXXd y = pred.array().min(kBceClampHi).max(kBceClampLo);
  Eigen::ArrayXXd x = target.array();
  return (-(x * y.log() + (1.0 - x) * (1.0 - y).log())).mean();
}

Eigen::MatrixXd loss_bce_grad(const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& pred) {
  check_same_shape(target, pred, "loss_bce_grad");
  Eigen::ArrayXXd y = pred.array().min(kBceClampHi).max(kBceClampLo);
  Eigen::ArrayXXd x = target.array();
  Eigen::ArrayXXd g =
      (-(x / y) + (1.0 - x) / (1.0 - y)) / static_cast<double>(pred.size());
  // Zero where the clamp is active so the gradient matches the (flat)
  // clamped loss.
  Eigen::ArrayXXd active =
      (pred.array() > kBceClampLo && pred.array() < kBceClampHi).cast<double>();
  return (g * active).matrix();
}

double loss_value(LossKind kind, const Eigen::MatrixXd& target,
                  const Eigen::MatrixXd& pred) {
  return kind == LossKind::Mse ? loss_mse(target, pred) : loss_bce(target, pred);
}

Eigen::MatrixXd loss_grad(LossKind kind, const Eigen::MatrixXd& target,
                          const Eigen::MatrixXd& pred) {
  return kind == LossKind::Mse ? loss_mse_grad(target, pred)
                               : loss_bce_grad(target, pred);
}

// ---------------------------------------------------------------------------

FCAutoencoder fc_autoencoder(int vis_side, int hid_side) {
  FCAutoencoder net;
  net.vis_side = vis_side;
  net.hid_side = hid_side;
  const int vis = vis_side * vis_side;
  const int hid = hid_side * hid_side;
  net.w_enc = Eigen::MatrixXd::Zero(hid, vis);
  net.b_hidden = Eigen::VectorXd::Zero(hid);
  net.w_dec = Eigen::MatrixXd::Zero(vis, hid);
  net.b_out = Eigen::VectorXd::Zero(vis);
  return net;
}

int fc_param_count(int vis_side, int hid_side) {
  const int vis = vis_side * vis_side;
  const int hid = hid_side * hid_side;
  return 2 * vis * hid + hid + vis;
}

Eigen::VectorXd fc_get_params(const FCAutoencoder& net) {
  const Eigen::Index hid = net.w_enc.rows();
  const Eigen::Index vis = net.w_enc.cols();
  Eigen::VectorXd p(2 * vis * hid + hid + vis);
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < hid; ++h) {
    for (Eigen::Index x = 0; x < vis; ++x) p[k++] = net.w_enc(h, x);
  }
  for (Eigen::Index h = 0; h < hid; ++h) p[k++] = net.b_hidden[h];
  for (Eigen::Index x = 0; x < vis; ++x) {
    for (Eigen::Index h = 0; h < hid; ++h) p[k++] = net.w_dec(x, h);
  }
  for (Eigen::Index x = 0; x < vis; ++x) p[k++] = net.b_out[x];
  return p;
}

void fc_set_params(FCAutoencoder& net, const Eigen::VectorXd& p) {
  const Eigen::Index hid = net.w_enc.rows();
  const Eigen::Index vis = net.w_enc.cols();
  if (p.size() != 2 * vis * hid + hid + vis) {
    throw ValidationError("fc_set_params length mismatch");
  }
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < hid; ++h) {
    for (Eigen::Index x = 0; x < vis; ++x) net.w_enc(h, x) = p[k++];
  }
  for (Eigen::Index h = 0; h < hid; ++h) net.b_hidden[h] = p[k++];
  for (Eigen::Index x = 0; x < vis; ++x) {
    for (Eigen::Index h = 0; h < hid; ++h) net.w_dec(x, h) = p[k++];
  }
  for (Eigen::Index x = 0; x < vis; ++x) net.b_out[x] = p[k++];
}

std::pair<Eigen::MatrixXd, FCTape> fc_forward(const FCAutoencoder& net,
                                              const Eigen::MatrixXd& x_noisy) {
  if (x_noisy.cols() != net.w_enc.cols()) {
    throw EvalError("fc_forward: input width does not match the pixel grid");
  }
  FCTape tape;
  tape.x = x_noisy;
  tape.hidden = sigmoid((x_noisy * net.w_enc.transpose()).rowwise() +
                        net.b_hidden.transpose());
  tape.recon = sigmoid((tape.hidden * net.w_dec.transpose()).rowwise() +
                       net.b_out.transpose());
  return {tape.recon, tape};
}

Eigen::VectorXd fc_param_grad(const FCAutoencoder& net, const FCTape& tape,
                              const Eigen::MatrixXd& d_recon) {
  check_same_shape(d_recon, tape.recon, "fc_param_grad");
  const Eigen::Index hid = net.w_enc.rows();
  const Eigen::Index vis = net.w_enc.cols();

  Eigen::MatrixXd d_recon_pre =
      (d_recon.array() * tape.recon.array() * (1.0 - tape.recon.array()))
          .matrix();
  Eigen::MatrixXd g_w_dec = d_recon_pre.transpose() * tape.hidden;  // vis x hid
  Eigen::VectorXd g_b_out = d_recon_pre.colwise().sum();
  Eigen::MatrixXd d_hidden = d_recon_pre * net.w_dec;  // B x hid
  Eigen::MatrixXd d_hidden_pre =
      (d_hidden.array() * tape.hidden.array() * (1.0 - tape.hidden.array()))
          .matrix();
  Eigen::MatrixXd g_w_enc = d_hidden_pre.transpose() * tape.x;  // hid x vis
  Eigen::VectorXd g_b_hidden = d_hidden_pre.colwise().sum();

  Eigen::VectorXd g(2 * vis * hid + hid + vis);
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < hid; ++h) {
    for (Eigen::Index x = 0; x < vis; ++x) g[k++] = g_w_enc(h, x);
  }
  for (Eigen::Index h = 0; h < hid; ++h) g[k++] = g_b_hidden[h];
  for (Eigen::Index x = 0; x < vis; ++x) {
    for (Eigen::Index h = 0; h < hid; ++h) g[k++] = g_w_dec(x, h);
  }
  for (Eigen::Index x = 0; x < vis; ++x) g[k++] = g_b_out[x];
  return g;
}

// ---------------------------------------------------------------------------

ConvAutoencoder conv_autoencoder(int img_side, int kernel, int stride, int pad,
                                 int channels) {
  ConvAutoencoder net;
  net.img_side = img_side;
  net.kernel = kernel;
  net.stride = stride;
  net.pad = pad;
  net.channels = channels;
  for (int c = 0; c < channels; ++c) {
    net.enc_kernels.push_back(Eigen::MatrixXd::Zero(kernel, kernel));
    net.dec_kernels.push_back(Eigen::MatrixXd::Zero(kernel, kernel));
  }
  net.enc_bias = Eigen::VectorXd::Zero(channels);
  net.dec_bias = Eigen::VectorXd::Zero(channels);
  return net;
}

int conv_param_count(const ConvAutoencoder& net) {
  return 2 * net.channels * net.kernel * net.kernel + 2 * net.channels;
}

Eigen::VectorXd conv_get_params(const ConvAutoencoder& net) {
  Eigen::VectorXd p(conv_param_count(net));
  Eigen::Index k = 0;
  for (const auto& kernels : {net.enc_kernels, net.dec_kernels}) {
    for (const Eigen::MatrixXd& kern : kernels) {
      for (Eigen::Index r = 0; r < kern.rows(); ++r) {
        for (Eigen::Index c = 0; c < kern.cols(); ++c) p[k++] = kern(r, c);
      }
    }
  }
  for (Eigen::Index c = 0; c < net.enc_bias.size(); ++c) p[k++] = net.enc_bias[c];
  for (Eigen::Index c = 0; c < net.dec_bias.size(); ++c) p[k++] = net.dec_bias[c];
  return p;
}

void conv_set_params(ConvAutoencoder& net, const Eigen::VectorXd& p) {
  if (p.size() != conv_param_count(net)) {
    throw ValidationError("conv_set_params length mismatch");
  }
  Eigen::Index k = 0;
  for (auto* kernels : {&net.enc_kernels, &net.dec_kernels}) {
    for (Eigen::MatrixXd& kern : *kernels) {
      for (Eigen::Index r = 0; r < kern.rows(); ++r) {
        for (Eigen::Index c = 0; c < kern.cols(); ++c) kern(r, c) = p[k++];
      }
    }
  }
  for (Eigen::Index c = 0; c < net.enc_bias.size(); ++c) net.enc_bias[c] = p[k++];
  for (Eigen::Index c = 0; c < net.dec_bias.size(); ++c) net.dec_bias[c] = p[k++];
}

namespace {

// (output position index, kernel row, kernel col, input pixel index) tuples
// of the strided correlation; shared by the decoder adjoint and all gradients.
struct ConvMap {
  struct Entry {
    int out_idx;
    int kr;
    int kc;
    int in_idx;
  };
  std::vector<Entry> entries;
};

ConvMap make_conv_map(const ConvAutoencoder& net) {
  ConvMap map;
  const int out_side = net.out_side();
  for (int qr = 0; qr < out_side; ++qr) {
    for (int qc = 0; qc < out_side; ++qc) {
      for (int i = 0; i < net.kernel; ++i) {
        for (int j = 0; j < net.kernel; ++j) {
          const int r = qr * net.stride - net.pad + i;
          const int c = qc * net.stride - net.pad + j;
          if (r < 0 || r >= net.img_side || c < 0 || c >= net.img_side) continue;
          map.entries.push_back(
              {qr * out_side + qc, i, j, r * net.img_side + c});
        }
      }
    }
  }
  return map;
}

}  // namespace

std::pair<Eigen::MatrixXd, ConvTape> conv_forward(const ConvAutoencoder& net,
                                                  const Eigen::MatrixXd& x_noisy) {
  const int img = net.img_side * net.img_side;
  if (x_noisy.cols() != img) {
    throw EvalError("conv_forward: input width does not match the image grid");
  }
  const int out = net.out_side() * net.out_side();
  const Eigen::Index b = x_noisy.rows();
  const ConvMap map = make_conv_map(net);

  ConvTape tape;
  tape.x = x_noisy;
  tape.recon_pre = Eigen::MatrixXd::Zero(b, img);
  for (int c = 0; c < net.channels; ++c) {
    Eigen::MatrixXd h_pre = Eigen::MatrixXd::Zero(b, out);
    const Eigen::MatrixXd& kern = net.enc_kernels[c];
    for (const auto& e : map.entries) {
      h_pre.col(e.out_idx) += kern(e.kr, e.kc) * x_noisy.col(e.in_idx);
    }
    h_pre.array() += net.enc_bias[c];
    Eigen::MatrixXd h = h_pre.array().max(0.0).matrix();
    const Eigen::MatrixXd& dec = net.dec_kernels[c];
    for (const auto& e : map.entries) {
      tape.recon_pre.col(e.in_idx) += dec(e.kr, e.kc) * h.col(e.out_idx);
    }
    tape.h_pre.push_back(std::move(h_pre));
    tape.h.push_back(std::move(h));
  }
  tape.recon_pre.array() += net.dec_bias.sum();
  tape.recon = tape.recon_pre.array().max(0.0).matrix();
  return {tape.recon, tape};
}

Eigen::VectorXd conv_param_grad(const ConvAutoencoder& net, const ConvTape& tape,
                                const Eigen::MatrixXd& d_recon) {
  check_same_shape(d_recon, tape.recon, "conv_param_grad");
  const ConvMap map = make_conv_map(net);
  const int out = net.out_side() * net.out_side();
  const Eigen::Index b = tape.x.rows();
  const int k2 = net.kernel * net.kernel;

  Eigen::MatrixXd d_recon_pre =
      (d_recon.array() * (tape.recon_pre.array() > 0.0).cast<double>()).matrix();

  Eigen::VectorXd g = Eigen::VectorXd::Zero(conv_param_count(net));
  const int enc_off = 0;
  const int dec_off = net.channels * k2;
  const int enc_bias_off = 2 * net.channels * k2;
  const int dec_bias_off = enc_bias_off + net.channels;

  const double d_bias_total = d_recon_pre.sum();
  for (int c = 0; c < net.channels; ++c) {
    const Eigen::MatrixXd& dec = net.dec_kernels[c];
    Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(b, out);
    for (const auto& e : map.entries) {
      g[dec_off + c * k2 + e.kr * net.kernel + e.kc] +=
          tape.h[c].col(e.out_idx).dot(d_recon_pre.col(e.in_idx));
      d_h.col(e.out_idx) += dec(e.kr, e.kc) * d_recon_pre.col(e.in_idx);
    }
    Eigen::MatrixXd d_h_pre =
        (d_h.array() * (tape.h_pre[c].array() > 0.0).cast<double>()).matrix();
    for (const auto& e : map.entries) {
      g[enc_off + c * k2 + e.kr * net.kernel + e.kc] +=
          tape.x.col(e.in_idx).dot(d_h_pre.col(e.out_idx));
    }
    g[enc_bias_off + c] = d_h_pre.sum();
    g[dec_bias_off + c] = d_bias_total;
  }
  return g;
}

// ---------------------------------------------------------------------------

ParamLayout fc_layout(int vis_side, int hid_side) {
  const int vis = vis_side * vis_side;
  const int hid = hid_side * hid_side;
  const int enc_count = vis * hid + hid;
  const int dec_count = vis * hid + vis;
  const int rows = enc_count + dec_count;

  ParamLayout layout;
  layout.dppn_input_dim = 8;
  layout.dppn_output_dim = 2;
  layout.coords.resize(rows, 8);
  layout.slots.reserve(rows);

  auto fill_row = [&](int row, double x_in, double y_in, double x_out,
                      double y_out, double d_in, double d_out, double layer) {
    layout.coords(row, 0) = x_in;
    layout.coords(row, 1) = y_in;
    layout.coords(row, 2) = x_out;
    layout.coords(row, 3) = y_out;
    layout.coords(row, 4) = d_in;
    layout.coords(row, 5) = d_out;
    layout.coords(row, 6) = layer;
    layout.coords(row, 7) = 1.0;
  };
  auto grid_xy = [&](int idx, int side, double& x, double& y, double& d) {
    const int r = idx / side;
    const int c = idx % side;
    x = grid_coord(c, side);
    y = grid_coord(r, side);
    d = std::sqrt(x * x + y * y);
  };

  int row = 0;
  // Encoder weights: hidden units outer, pixels inner; layer -1.
  for (int h = 0; h < hid; ++h) {
    double hx, hy, hd;
    grid_xy(h, hid_side, hx, hy, hd);
    for (int p = 0; p < vis; ++p) {
      double px, py, pd;
      grid_xy(p, vis_side, px, py, pd);
      fill_row(row, px, py, hx, hy, pd, hd, -1.0);
      layout.slots.emplace_back(row, 0);
      ++row;
    }
  }
  // Hidden biases: absent input neuron zeroed.
  for (int h = 0; h < hid; ++h) {
    double hx, hy, hd;
    grid_xy(h, hid_side, hx, hy, hd);
    fill_row(row, 0.0, 0.0, hx, hy, 0.0, hd, -1.0);
    layout.slots.emplace_back(row, 0);
    ++row;
  }
  // Decoder weights: pixels outer, hidden units inner; layer +1.
  for (int p = 0; p < vis; ++p) {
    double px, py, pd;
    grid_xy(p, vis_side, px, py, pd);
    for (int h = 0; h < hid; ++h) {
      double hx, hy, hd;
      grid_xy(h, hid_side, hx, hy, hd);
      fill_row(row, hx, hy, px, py, hd, pd, 1.0);
      layout.slots.emplace_back(row, 1);
      ++row;
    }
  }
  // Output biases.
  for (int p = 0; p < vis; ++p) {
    double px, py, pd;
    grid_xy(p, vis_side, px, py, pd);
    fill_row(row, 0.0, 0.0, px, py, 0.0, pd, 1.0);
    layout.slots.emplace_back(row, 1);
    ++row;
  }

  layout.discarded = rows * 2 - static_cast<int>(layout.slots.size());
  return layout;
}

ParamLayout conv_layout(int kernel, int channels) {
  const int rows = kernel * kernel;
  const int output_dim = 2 * channels + 2;
  if (rows < channels) {
    throw ValidationError("conv_layout: kernel grid too small to carry biases");
  }
  ParamLayout layout;
  layout.dppn_input_dim = 4;
  layout.dppn_output_dim = output_dim;
  layout.coords.resize(rows, 4);
  for (int r = 0; r < kernel; ++r) {
    for (int c = 0; c < kernel; ++c) {
      const double x = grid_coord(c, kernel);
      const double y = grid_coord(r, kernel);
      layout.coords(r * kernel + c, 0) = x;
      layout.coords(r * kernel + c, 1) = y;
      layout.coords(r * kernel + c, 2) = std::sqrt(x * x + y * y);
      layout.coords(r * kernel + c, 3) = 1.0;
    }
  }
  // Kernels from columns 0..2*channels-1 (encoders then decoders), biases
  // from the first `channels` rows of the last two columns.
  for (int col = 0; col < 2 * channels; ++col) {
    for (int r = 0; r < rows; ++r) layout.slots.emplace_back(r, col);
  }
  for (int c = 0; c < channels; ++c) layout.slots.emplace_back(c, 2 * channels);
  for (int c = 0; c < channels; ++c) {
    layout.slots.emplace_back(c, 2 * channels + 1);
  }
  layout.discarded = rows * output_dim - static_cast<int>(layout.slots.size());
  return layout;
}

Eigen::VectorXd gather_params(const ParamLayout& layout,
                              const Eigen::MatrixXd& dppn_output) {
  if (dppn_output.rows() != layout.coords.rows() ||
      dppn_output.cols() != layout.dppn_output_dim) {
    throw EvalError("gather_params: output shape does not match the layout");
  }
  Eigen::VectorXd p(static_cast<Eigen::Index>(layout.slots.size()));
  for (size_t i = 0; i < layout.slots.size(); ++i) {
    p[static_cast<Eigen::Index>(i)] =
        dppn_output(layout.slots[i].first, layout.slots[i].second);
  }
  return p;
}

Eigen::MatrixXd scatter_param_grad(const ParamLayout& layout,
                                   const Eigen::VectorXd& param_grad) {
  if (param_grad.size() != static_cast<Eigen::Index>(layout.slots.size())) {
    throw EvalError("scatter_param_grad: gradient length does not match");
  }
  Eigen::MatrixXd g =
      Eigen::MatrixXd::Zero(layout.coords.rows(), layout.dppn_output_dim);
  for (size_t i = 0; i < layout.slots.size(); ++i) {
    g(layout.slots[i].first, layout.slots[i].second) +=
        param_grad[static_cast<Eigen::Index>(i)];
  }
  return g;
}

}  // namespace dppn
