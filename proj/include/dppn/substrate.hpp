#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace dppn {

enum class LossKind { Mse, Bce };

const char* loss_name(LossKind k);
LossKind loss_from_name(std::string_view name);

// Mean over all elements.  For BCE the prediction is clamped to
// [1e-7, 1 - 1e-7]; where the clamp is active the gradient is zero.
double loss_mse(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred);
Eigen::MatrixXd loss_mse_grad(const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& pred);
double loss_bce(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred);
Eigen::MatrixXd loss_bce_grad(const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& pred);
double loss_value(LossKind kind, const Eigen::MatrixXd& target,
                  const Eigen::MatrixXd& pred);
Eigen::MatrixXd loss_grad(LossKind kind, const Eigen::MatrixXd& target,
                          const Eigen::MatrixXd& pred);

// ---------------------------------------------------------------------------
// Fully connected denoising autoencoder: sigmoid encoder and decoder over a
// vis_side^2 pixel grid and a hid_side^2 hidden grid (paper scale 28 / 10).

struct FCAutoencoder {
  int vis_side = 28;
  int hid_side = 10;
  Eigen::MatrixXd w_enc;    // hid x vis
  Eigen::VectorXd b_hidden; // hid
  Eigen::MatrixXd w_dec;    // vis x hid
  Eigen::VectorXd b_out;    // vis
};

FCAutoencoder fc_autoencoder(int vis_side = 28, int hid_side = 10);
int fc_param_count(int vis_side = 28, int hid_side = 10);

// Canonical parameter order shared with fc_layout: w_enc row-major (hidden
// outer, pixel inner), b_hidden, w_dec row-major (pixel outer, hidden inner),
// b_out.
Eigen::VectorXd fc_get_params(const FCAutoencoder& net);
void fc_set_params(FCAutoencoder& net, const Eigen::VectorXd& p);

struct FCTape {
  Eigen::MatrixXd x;       // B x vis noisy input
  Eigen::MatrixXd hidden;  // B x hid
  Eigen::MatrixXd recon;   // B x vis
};

// Rows are samples.  recon = sigmoid(W_dec sigmoid(W_enc x + b_h) + b_o).
std::pair<Eigen::MatrixXd, FCTape> fc_forward(const FCAutoencoder& net,
                                              const Eigen::MatrixXd& x_noisy);

// Gradient of the scalar loss with output-gradient d_recon, with respect to
// the canonical parameter vector.
Eigen::VectorXd fc_param_grad(const FCAutoencoder& net, const FCTape& tape,
                              const Eigen::MatrixXd& d_recon);

// ---------------------------------------------------------------------------
// Convolutional denoising autoencoder: per-channel strided correlation with
// ReLU, decoded by the exact adjoint of the encoder's correlation operator
// (which restores img_side x img_side), channel sums plus both decoder
// biases, ReLU.

struct ConvAutoencoder {
  int img_side = 28;
  int kernel = 7;
  int stride = 2;
  int pad = 3;
  int channels = 2;
  std::vector<Eigen::MatrixXd> enc_kernels;  // channels of kernel x kernel
  std::vector<Eigen::MatrixXd> dec_kernels;
  Eigen::VectorXd enc_bias;  // channels
  Eigen::VectorXd dec_bias;  // channels
  int out_side() const { return (img_side + 2 * pad - kernel) / stride + 1; }
};

ConvAutoencoder conv_autoencoder(int img_side = 28, int kernel = 7,
                                 int stride = 2, int pad = 3, int channels = 2);
int conv_param_count(const ConvAutoencoder& net);

// Canonical order shared with conv_layout: encoder kernels row-major per
// channel, decoder kernels, encoder biases, decoder biases.
Eigen::VectorXd conv_get_params(const ConvAutoencoder& net);
void conv_set_params(ConvAutoencoder& net, const Eigen::VectorXd& p);

struct ConvTape {
  Eigen::MatrixXd x;                    // B x img^2 noisy input
  std::vector<Eigen::MatrixXd> h_pre;   // per channel, B x out^2
  std::vector<Eigen::MatrixXd> h;       // per channel, B x out^2
  Eigen::MatrixXd recon_pre;            // B x img^2
  Eigen::MatrixXd recon;
};

std::pair<Eigen::MatrixXd, ConvTape> conv_forward(const ConvAutoencoder& net,
                                                  const Eigen::MatrixXd& x_noisy);

Eigen::VectorXd conv_param_grad(const ConvAutoencoder& net, const ConvTape& tape,
                                const Eigen::MatrixXd& d_recon);

// ---------------------------------------------------------------------------
// Coordinate batches mapping substrate parameters to DPPN output positions.

struct ParamLayout {
  Eigen::MatrixXd coords;                  // rows x dppn input_dim
  std::vector<std::pair<int, int>> slots;  // param index -> (row, col)
  int dppn_input_dim = 0;
  int dppn_output_dim = 0;
  int discarded = 0;  // DPPN output entries not mapped to any parameter
};

// 2*vis*hid + hid + vis rows of
// (x_in, y_in, x_out, y_out, D_in, D_out, layer, 1): encoder weights then
// hidden biases read from DPPN output column 0, decoder weights then output
// biases from column 1.  Grids normalized to [-1, 1]; layer is -1 encode,
// +1 decode; a bias row zeroes the absent neuron's coordinates and distance.
ParamLayout fc_layout(int vis_side = 28, int hid_side = 10);

// kernel^2 rows of (x, y, sqrt(x^2+y^2), 1) over the kernel grid normalized
// to [-1, 1].  Output columns 0..2*channels-1 supply the encoder then
// decoder kernels; column 2*channels rows 0..channels-1 the encoder biases,
// column 2*channels+1 the decoder biases; everything else is discarded.
ParamLayout conv_layout(int kernel = 7, int channels = 2);

// Gathers the layout's used slots out of a DPPN output matrix into a
// substrate parameter vector.
Eigen::VectorXd gather_params(const ParamLayout& layout,
                              const Eigen::MatrixXd& dppn_output);

// Scatters a parameter-space gradient back to a dense (rows x output_dim)
// DPPN output gradient, zero on discarded slots.
Eigen::MatrixXd scatter_param_grad(const ParamLayout& layout,
                                   const Eigen::VectorXd& param_grad);

}  // namespace dppn
