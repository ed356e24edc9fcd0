#include "ritznet/batch_eval.hpp"

namespace ritznet {

MlpBatch::MlpBatch(NetworkSpec spec, int dim, int order)
    : spec_(std::move(spec)), dim_(dim), order_(order), comps_(ncomp(dim, order)) {
  spec_.validate();
  if (order_ < 0 || order_ > 2)
    throw UnsupportedOrderError("MlpBatch: derivative order must be 0, 1 or 2");
  z_.resize(spec_.widths.size());
  a_.resize(spec_.widths.size());
}

namespace {

// g, g', g'' and (for order-2 reverse sweeps) g''' of the activation,
// evaluated on the value plane.
struct ActDerivs {
  Eigen::ArrayXXd g, gp, gpp, gppp;
};

void activation_derivs(Activation kind, const Eigen::ArrayXXd& zv, int order, bool need_gppp,
                       ActDerivs& d) {
  switch (kind) {
    case Activation::Tanh: {
      d.g = zv.tanh();
      d.gp = 1.0 - d.g.square();
      if (order >= 2 || need_gppp) d.gpp = -2.0 * d.g * d.gp;
      if (need_gppp) d.gppp = d.gp * (6.0 * d.g.square() - 2.0);
      break;
    }
    case Activation::Sigmoid: {
      d.g = 1.0 / (1.0 + (-zv).exp());
      d.gp = d.g * (1.0 - d.g);
      if (order >= 2 || need_gppp) d.gpp = d.gp * (1.0 - 2.0 * d.g);
      if (need_gppp) d.gppp = d.gpp * (1.0 - 2.0 * d.g) - 2.0 * d.gp.square();
      break;
    }
    case Activation::Sine: {
      d.g = zv.sin();
      d.gp = zv.cos();
      if (order >= 2 || need_gppp) d.gpp = -d.g;
      if (need_gppp) d.gppp = -d.gp;
      break;
    }
    case Activation::Identity: {
      d.g = zv;
      d.gp = Eigen::ArrayXXd::Ones(zv.rows(), zv.cols());
      if (order >= 2 || need_gppp) d.gpp = Eigen::ArrayXXd::Zero(zv.rows(), zv.cols());
      if (need_gppp) d.gppp = Eigen::ArrayXXd::Zero(zv.rows(), zv.cols());
      break;
    }
  }
}

}  // namespace

void MlpBatch::mix_activation(const Mat& z, Mat& a, int n) const {
  ActDerivs d;
  activation_derivs(spec_.activation, z.leftCols(n).array(), order_, false, d);
  a.resize(z.rows(), z.cols());
  a.leftCols(n) = d.g.matrix();
  for (int ax = 0; ax < dim_ && order_ >= 1; ++ax) {
    const auto zd1 = z.middleCols(comp_d1(ax) * n, n).array();
    a.middleCols(comp_d1(ax) * n, n) = (d.gp * zd1).matrix();
    if (order_ >= 2) {
      const auto zd2 = z.middleCols(comp_d2(ax, dim_) * n, n).array();
      a.middleCols(comp_d2(ax, dim_) * n, n) = (d.gpp * zd1.square() + d.gp * zd2).matrix();
    }
  }
}

void MlpBatch::mix_activation_reverse(const Mat& z, const Mat& a_bar, Mat& z_bar, int n,
                                      int cb) const {
  // cb = number of adjoint component planes present (a prefix of the forward
  // component layout). Value-plane adjoints never feed derivative planes, so
  // planes beyond cb stay zero and are skipped entirely.
  const int order_b = (cb == 1) ? 0 : (cb - 1) / dim_;
  // The adjoint formulas need one more activation derivative than the forward
  // mixing at the same order.
  ActDerivs d;
  activation_derivs(spec_.activation, z.leftCols(n).array(), order_b + 1, order_b >= 2, d);
  z_bar.resize(z.rows(), static_cast<long>(cb) * n);
  z_bar.leftCols(n) = (d.gp * a_bar.leftCols(n).array()).matrix();
  for (int ax = 0; ax < dim_ && order_b >= 1; ++ax) {
    const auto zd1 = z.middleCols(comp_d1(ax) * n, n).array();
    const auto ad1_bar = a_bar.middleCols(comp_d1(ax) * n, n).array();
    z_bar.leftCols(n) += (d.gpp * zd1 * ad1_bar).matrix();
    z_bar.middleCols(comp_d1(ax) * n, n) = (d.gp * ad1_bar).matrix();
    if (order_b >= 2) {
      const auto zd2 = z.middleCols(comp_d2(ax, dim_) * n, n).array();
      const auto ad2_bar = a_bar.middleCols(comp_d2(ax, dim_) * n, n).array();
      z_bar.leftCols(n) += ((d.gppp * zd1.square() + d.gpp * zd2) * ad2_bar).matrix();
      z_bar.middleCols(comp_d1(ax) * n, n) += (2.0 * d.gpp * zd1 * ad2_bar).matrix();
      z_bar.middleCols(comp_d2(ax, dim_) * n, n) = (d.gp * ad2_bar).matrix();
    }
  }
}

const BatchDual& MlpBatch::forward(const ParamStore& params, const std::vector<BatchDual>& inputs) {
  if (static_cast<int>(inputs.size()) != spec_.input_dim)
    throw InternalError("MlpBatch: input channel count mismatch");
  n_ = inputs[0].size();
  const int cn = comps_ * n_;

  in_.resize(spec_.input_dim, cn);
  for (int r = 0; r < spec_.input_dim; ++r) {
    const BatchDual& ch = inputs[static_cast<size_t>(r)];
    if (ch.size() != n_ || ch.comps() < comps_)
      throw InternalError("MlpBatch: inconsistent input channel shape");
    for (int c = 0; c < comps_; ++c)
      in_.block(r, c * n_, 1, n_) = ch.comp.col(c).transpose();
  }

  const Mat* prev = &in_;
  for (size_t l = 0; l < spec_.widths.size(); ++l) {
    Mat& z = z_[l];
    z.noalias() = params.weight(static_cast<int>(l)) * (*prev);
    z.leftCols(n_).colwise() += params.bias(static_cast<int>(l));
    mix_activation(z, a_[l], n_);
    prev = &a_[l];
  }
  out_cat_.noalias() = params.weight(static_cast<int>(spec_.widths.size())) * (*prev);

  out_.dim = dim_;
  out_.order = order_;
  out_.comp.resize(n_, comps_);
  for (int c = 0; c < comps_; ++c)
    out_.comp.col(c) = out_cat_.block(0, c * n_, 1, n_).transpose();
  return out_;
}

void MlpBatch::backward(const BatchDual& out_adj, const ParamStore& params, Vec* grad,
                        std::vector<BatchDual>* input_adj) {
  if (n_ < 0) throw InternalError("MlpBatch: backward before forward");
  const int cb = ncomp(dim_, out_adj.order);
  if (out_adj.order > order_ || out_adj.size() != n_)
    throw InternalError("MlpBatch: adjoint shape mismatch");
  const long cbn = static_cast<long>(cb) * n_;

  Mat bar(1, cbn);
  for (int c = 0; c < cb; ++c) bar.block(0, c * n_, 1, n_) = out_adj.comp.col(c).transpose();

  const int k = static_cast<int>(spec_.widths.size());
  const Mat& last_a = a_[static_cast<size_t>(k - 1)];
  if (grad) {
    Eigen::Map<Mat> dw(grad->data() + params.layout[static_cast<size_t>(k)].w_offset, 1,
                       params.layout[static_cast<size_t>(k)].cols);
    dw.noalias() += bar * last_a.leftCols(cbn).transpose();
  }
  Mat a_bar;
  a_bar.noalias() = params.weight(k).transpose() * bar;

  Mat z_bar;
  for (int l = k - 1; l >= 0; --l) {
    mix_activation_reverse(z_[static_cast<size_t>(l)], a_bar, z_bar, n_, cb);
    const Mat& prev = (l == 0) ? in_ : a_[static_cast<size_t>(l - 1)];
    if (grad) {
      const auto& lay = params.layout[static_cast<size_t>(l)];
      Eigen::Map<Mat> dw(grad->data() + lay.w_offset, lay.rows, lay.cols);
      dw.noalias() += z_bar * prev.leftCols(cbn).transpose();
      Eigen::Map<Vec> db(grad->data() + lay.b_offset, lay.rows);
      db.noalias() += z_bar.leftCols(n_).rowwise().sum();
    }
    if (l > 0 || input_adj) {
      Mat next_bar;
      next_bar.noalias() = params.weight(l).transpose() * z_bar;
      a_bar.swap(next_bar);
    }
  }

  if (input_adj) {
    input_adj->assign(static_cast<size_t>(spec_.input_dim),
                      BatchDual::zeros(n_, dim_, out_adj.order));
    for (int r = 0; r < spec_.input_dim; ++r)
      for (int c = 0; c < cb; ++c)
        (*input_adj)[static_cast<size_t>(r)].comp.col(c) =
            a_bar.block(r, c * n_, 1, n_).transpose();
  }
}

std::vector<BatchDual> spatial_inputs(const std::vector<Point>& points, int dim, int order) {
  const int n = static_cast<int>(points.size());
  std::vector<BatchDual> channels;
  for (int ax = 0; ax < dim; ++ax) {
    BatchDual ch = BatchDual::zeros(n, dim, order);
    for (int i = 0; i < n; ++i) ch.comp(i, comp_val()) = points[static_cast<size_t>(i)][ax];
    if (order >= 1) ch.comp.col(comp_d1(ax)).setOnes();
    channels.push_back(std::move(ch));
  }
  return channels;
}

}  // namespace ritznet
