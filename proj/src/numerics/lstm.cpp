#include "lexipivot/numerics/lstm.hpp"

#include <string>

#include "lexipivot/error.hpp"
#include "lexipivot/numerics/ops.hpp"

namespace lexipivot {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

}  // namespace

void lstm_forward(const LstmWeightsView& w, const Matrix& input, const Matrix& h_prev,
                  const Matrix& c_prev, LstmCache& cache) {
  const Eigen::Index H = w.hidden_size();
  if (w.input_weight.rows() != 4 * H || w.hidden_weight.rows() != 4 * H || w.bias.size() != 4 * H) {
    throw ShapeError("lstm weights inconsistent: input " +
                     dims(w.input_weight.rows(), w.input_weight.cols()) + ", hidden " +
                     dims(w.hidden_weight.rows(), w.hidden_weight.cols()));
  }
  if (input.rows() != w.input_size() || h_prev.rows() != H || c_prev.rows() != H ||
      h_prev.cols() != input.cols() || c_prev.cols() != input.cols()) {
    throw ShapeError("lstm step: input " + dims(input.rows(), input.cols()) + ", h " +
                     dims(h_prev.rows(), h_prev.cols()) + ", c " +
                     dims(c_prev.rows(), c_prev.cols()) + " against weights " +
                     dims(w.input_weight.rows(), w.input_weight.cols()));
  }
  cache.input = input;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.gates.noalias() = w.input_weight * input;
  cache.gates.noalias() += w.hidden_weight * h_prev;
  cache.gates.colwise() += w.bias;

  auto& z = cache.gates;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index r = 0; r < H; ++r) {
      z(r, j) = sigmoid(z(r, j));
      z(H + r, j) = sigmoid(z(H + r, j));
      z(2 * H + r, j) = std::tanh(z(2 * H + r, j));
      z(3 * H + r, j) = sigmoid(z(3 * H + r, j));
    }
  }
  const auto i = z.topRows(H).array();
  const auto f = z.middleRows(H, H).array();
  const auto g = z.middleRows(2 * H, H).array();
  const auto o = z.bottomRows(H).array();
  cache.c = (f * c_prev.array() + i * g).matrix();
  cache.tanh_c = cache.c.array().tanh().matrix();
  cache.h = (o * cache.tanh_c.array()).matrix();
}

void lstm_backward(const LstmWeightsView& w, const LstmCache& cache, const Matrix& dh,
                   const Matrix& dc, LstmGradsView* grads, Matrix* d_input, Matrix& dh_prev,
                   Matrix& dc_prev) {
  const Eigen::Index H = w.hidden_size();
  const auto& z = cache.gates;
  const auto i = z.topRows(H).array();
  const auto f = z.middleRows(H, H).array();
  const auto g = z.middleRows(2 * H, H).array();
  const auto o = z.bottomRows(H).array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXXd dc_total = dc.array() + dh.array() * o * (1.0 - tc * tc);
  Matrix dz(4 * H, z.cols());
  dz.topRows(H) = (dc_total * g * i * (1.0 - i)).matrix();
  dz.middleRows(H, H) = (dc_total * cache.c_prev.array() * f * (1.0 - f)).matrix();
  dz.middleRows(2 * H, H) = (dc_total * i * (1.0 - g * g)).matrix();
  dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();

  dc_prev = (dc_total * f).matrix();
  dh_prev.noalias() = w.hidden_weight.transpose() * dz;
  if (d_input) d_input->noalias() = w.input_weight.transpose() * dz;
  if (grads) {
    grads->input_weight.noalias() += dz * cache.input.transpose();
    grads->hidden_weight.noalias() += dz * cache.h_prev.transpose();
    grads->bias += dz.rowwise().sum();
  }
}

LstmWeightsView lstm_view(const LstmParams& p) {
  const Tensor& wx = *p.input_weight;
  const Tensor& wh = *p.hidden_weight;
  const Tensor& b = *p.bias;
  return LstmWeightsView{wx.as_matrix(), wh.as_matrix(), b.as_vector()};
}

LstmState lstm_step(const Tensor& input, const LstmState& state, const LstmParams& weights,
                    LstmCache* cache) {
  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  const Matrix x = input.as_vector();
  const Matrix h = state.h.as_vector();
  const Matrix cp = state.c.as_vector();
  lstm_forward(lstm_view(weights), x, h, cp, c);
  return LstmState{Tensor::vector(Vector(c.h.col(0))), Tensor::vector(Vector(c.c.col(0)))};
}

void lstm_step_backward(Tensor& input, LstmState& state, const LstmParams& weights,
                        const LstmCache& cache, const Tensor& grad_h, const Tensor& grad_c) {
  const auto view = lstm_view(weights);
  const Matrix dh = grad_h.as_vector();
  const Matrix dc = grad_c.as_vector();
  Matrix dx, dh_prev, dc_prev;
  const bool any_weight = weights.input_weight->requires_grad() ||
                          weights.hidden_weight->requires_grad() ||
                          weights.bias->requires_grad();
  if (any_weight) {
    // Accumulate into scratch so that frozen weights stay untouched.
    Tensor gx(weights.input_weight->shape()), gh(weights.hidden_weight->shape()),
        gb(weights.bias->shape());
    LstmGradsView gv{gx.as_matrix(), gh.as_matrix(), gb.as_vector()};
    lstm_backward(view, cache, dh, dc, &gv, &dx, dh_prev, dc_prev);
    auto add = [](Tensor& target, const Tensor& delta) {
      if (!target.requires_grad()) return;
      target.grad_vector() += delta.as_vector();
    };
    add(*weights.input_weight, gx);
    add(*weights.hidden_weight, gh);
    add(*weights.bias, gb);
  } else {
    lstm_backward(view, cache, dh, dc, nullptr, &dx, dh_prev, dc_prev);
  }
  if (input.requires_grad()) input.grad_vector() += dx.col(0);
  if (state.h.requires_grad()) state.h.grad_vector() += dh_prev.col(0);
  if (state.c.requires_grad()) state.c.grad_vector() += dc_prev.col(0);
}

}  // namespace lexipivot
