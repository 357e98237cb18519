#include "volfit/engine.hpp"

#include <cmath>

#include "volfit/errors.hpp"

namespace volfit {

void ParamGrad::match_shape(const MlpParams& params) {
    d_weights.resize(params.weights.size());
    d_biases.resize(params.biases.size());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        d_weights[l].resize(params.weights[l].rows(), params.weights[l].cols());
        d_biases[l].resize(params.biases[l].size());
    }
    set_zero();
}

void ParamGrad::set_zero() {
    for (auto& w : d_weights) w.setZero();
    for (auto& b : d_biases) b.setZero();
    d_log_alpha = 0.0;
    d_rho_raw = 0.0;
    d_eta_raw = 0.0;
    d_gamma_raw = 0.0;
}

JetEngine::JetEngine(const SurfaceModel& model, std::span<const double> k,
                     std::span<const double> tau) {
    if (k.size() != tau.size()) throw InvalidInput("k and tau point lists differ in length");
    if (k.empty()) throw InvalidInput("engine needs at least one point");
    widths_ = model.mlp.widths();
    if (widths_.size() < 2) throw InvalidInput("network has no layers");
    if (widths_.front() != 2 || widths_.back() != 1)
        throw InvalidInput("network must map 2 inputs to 1 output");

    n_ = k.size();
    const auto N = static_cast<Eigen::Index>(n_);
    k_ = Eigen::Map<const Eigen::ArrayXd>(k.data(), N);
    tau_ = Eigen::Map<const Eigen::ArrayXd>(tau.data(), N);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (!std::isfinite(k_[i]) || !std::isfinite(tau_[i]) || tau_[i] <= 0.0)
            throw InvalidInput("points require finite k and tau > 0");
    }

    w_atm_.resize(N);
    wp_atm_.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        w_atm_[i] = model.atm.value(tau_[i]);
        wp_atm_[i] = model.atm.slope(tau_[i]);
    }

    in_.setZero(2, 4 * N);
    in_.row(0).segment(0, N) = k_.matrix().transpose();
    in_.row(1).segment(0, N) = tau_.matrix().transpose();
    in_.row(0).segment(N, N).setOnes();
    in_.row(1).segment(2 * N, N).setOnes();

    const std::size_t layers = widths_.size() - 1;
    pre_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) pre_[l].resize(widths_[l + 1], 4 * N);
    if (layers >= 2) {
        post_.resize(layers - 1);
        sig_.resize(layers - 1);
        bar_.resize(layers - 1);
        for (std::size_t l = 0; l + 1 < layers; ++l) {
            post_[l].resize(widths_[l + 1], 4 * N);
            sig_[l].resize(widths_[l + 1], N);
            bar_[l].resize(widths_[l + 1], 4 * N);
        }
    }
    t_out_.resize(N);
    nn_.resize(4, N);
    prior_.resize(4, N);
    surf_.resize(4, N);
    prior_d_rho_.resize(4, N);
    prior_d_eta_.resize(4, N);
    prior_d_gamma_.resize(4, N);
    surf_bar_.resize(4, N);
    nn_value_bar_.resize(N);
    zero_adjoints();
}

void JetEngine::check_shape(const SurfaceModel& model) const {
    if (model.mlp.widths() != widths_)
        throw InvalidInput("model layer shape changed since engine construction");
}

void JetEngine::forward(const SurfaceModel& model) {
    check_shape(model);
    const auto N = static_cast<Eigen::Index>(n_);
    const std::size_t layers = widths_.size() - 1;

    for (std::size_t l = 0; l < layers; ++l) {
        const Eigen::MatrixXd& src = (l == 0) ? in_ : post_[l - 1];
        pre_[l].noalias() = model.mlp.weights[l] * src;
        pre_[l].leftCols(N).colwise() += model.mlp.biases[l];
        if (l + 1 < layers) {
            auto av = pre_[l].middleCols(0, N).array();
            auto adk = pre_[l].middleCols(N, N).array();
            auto adt = pre_[l].middleCols(2 * N, N).array();
            auto adkk = pre_[l].middleCols(3 * N, N).array();
            sig_[l].array() = (1.0 + (-av).exp()).inverse();
            auto s1 = sig_[l].array();
            post_[l].middleCols(0, N).array() = av.max(0.0) + (-av.abs()).exp().log1p();
            post_[l].middleCols(N, N).array() = s1 * adk;
            post_[l].middleCols(2 * N, N).array() = s1 * adt;
            post_[l].middleCols(3 * N, N).array() = s1 * adkk + s1 * (1.0 - s1) * adk.square();
        }
    }

    const double alpha = model.mlp.alpha();
    auto zrow = pre_[layers - 1].row(0);
    auto zdk = zrow.segment(N, N).array();
    auto zdt = zrow.segment(2 * N, N).array();
    auto zdkk = zrow.segment(3 * N, N).array();
    t_out_ = zrow.segment(0, N).array().tanh();
    RowArray s = 1.0 - t_out_.square();
    nn_.row(0).array() = alpha * (1.0 + t_out_);
    nn_.row(1).array() = alpha * s * zdk;
    nn_.row(2).array() = alpha * s * zdt;
    nn_.row(3).array() = (-2.0 * alpha) * t_out_ * s * zdk.square() + alpha * s * zdkk;

    if (model.prior == PriorKind::BlackScholes) {
        prior_.row(0) = w_atm_.matrix().transpose();
        prior_.row(1).setZero();
        prior_.row(2) = wp_atm_.matrix().transpose();
        prior_.row(3).setZero();
        prior_d_rho_.setZero();
        prior_d_eta_.setZero();
        prior_d_gamma_.setZero();
    } else {
        for (Eigen::Index i = 0; i < N; ++i) {
            SsviJetPartials parts;
            const Jet2 p = ssvi_prior_jet_from_w(k_[i], w_atm_[i], wp_atm_[i], model.ssvi, &parts);
            prior_.col(i) << p.v, p.dk, p.dt, p.dkk;
            prior_d_rho_.col(i) << parts.d_rho_raw.v, parts.d_rho_raw.dk, parts.d_rho_raw.dt,
                parts.d_rho_raw.dkk;
            prior_d_eta_.col(i) << parts.d_eta_raw.v, parts.d_eta_raw.dk, parts.d_eta_raw.dt,
                parts.d_eta_raw.dkk;
            prior_d_gamma_.col(i) << parts.d_gamma_raw.v, parts.d_gamma_raw.dk,
                parts.d_gamma_raw.dt, parts.d_gamma_raw.dkk;
        }
    }

    auto nv = nn_.row(0).array();
    auto ndk = nn_.row(1).array();
    auto ndt = nn_.row(2).array();
    auto ndkk = nn_.row(3).array();
    auto pv = prior_.row(0).array();
    auto pdk = prior_.row(1).array();
    auto pdt = prior_.row(2).array();
    auto pdkk = prior_.row(3).array();
    surf_.row(0).array() = nv * pv;
    surf_.row(1).array() = ndk * pv + nv * pdk;
    surf_.row(2).array() = ndt * pv + nv * pdt;
    surf_.row(3).array() = ndkk * pv + 2.0 * ndk * pdk + nv * pdkk;
}

Jet2 JetEngine::nn(std::size_t i) const {
    const auto c = static_cast<Eigen::Index>(i);
    return {nn_(0, c), nn_(1, c), nn_(2, c), nn_(3, c)};
}

Jet2 JetEngine::prior(std::size_t i) const {
    const auto c = static_cast<Eigen::Index>(i);
    return {prior_(0, c), prior_(1, c), prior_(2, c), prior_(3, c)};
}

Jet2 JetEngine::surface(std::size_t i) const {
    const auto c = static_cast<Eigen::Index>(i);
    return {surf_(0, c), surf_(1, c), surf_(2, c), surf_(3, c)};
}

void JetEngine::zero_adjoints() {
    surf_bar_.setZero();
    nn_value_bar_.setZero();
}

void JetEngine::add_surface_adjoint(std::size_t i, const Jet2& bar) {
    const auto c = static_cast<Eigen::Index>(i);
    surf_bar_(0, c) += bar.v;
    surf_bar_(1, c) += bar.dk;
    surf_bar_(2, c) += bar.dt;
    surf_bar_(3, c) += bar.dkk;
}

void JetEngine::add_nn_value_adjoint(std::size_t i, double bar) {
    nn_value_bar_(static_cast<Eigen::Index>(i)) += bar;
}

void JetEngine::backward(const SurfaceModel& model, ParamGrad& grad) {
    check_shape(model);
    grad.match_shape(model.mlp);
    const auto N = static_cast<Eigen::Index>(n_);
    const std::size_t layers = widths_.size() - 1;

    auto nv = nn_.row(0).array();
    auto ndk = nn_.row(1).array();
    auto ndt = nn_.row(2).array();
    auto ndkk = nn_.row(3).array();
    auto pv = prior_.row(0).array();
    auto pdk = prior_.row(1).array();
    auto pdt = prior_.row(2).array();
    auto pdkk = prior_.row(3).array();
    auto sbv = surf_bar_.row(0).array();
    auto sbdk = surf_bar_.row(1).array();
    auto sbdt = surf_bar_.row(2).array();
    auto sbdkk = surf_bar_.row(3).array();

    Jets nnbar(4, N);
    nnbar.row(0).array() = sbv * pv + sbdk * pdk + sbdt * pdt + sbdkk * pdkk + nn_value_bar_;
    nnbar.row(1).array() = sbdk * pv + 2.0 * sbdkk * pdk;
    nnbar.row(2).array() = sbdt * pv;
    nnbar.row(3).array() = sbdkk * pv;

    if (model.prior == PriorKind::Ssvi) {
        Jets pbar(4, N);
        pbar.row(0).array() = sbv * nv + sbdk * ndk + sbdt * ndt + sbdkk * ndkk;
        pbar.row(1).array() = sbdk * nv + 2.0 * sbdkk * ndk;
        pbar.row(2).array() = sbdt * nv;
        pbar.row(3).array() = sbdkk * nv;
        grad.d_rho_raw = pbar.cwiseProduct(prior_d_rho_).sum();
        grad.d_eta_raw = pbar.cwiseProduct(prior_d_eta_).sum();
        grad.d_gamma_raw = pbar.cwiseProduct(prior_d_gamma_).sum();
    }

    grad.d_log_alpha = nnbar.cwiseProduct(nn_).sum();

    const double alpha = model.mlp.alpha();
    RowArray s = 1.0 - t_out_.square();
    RowArray gp = alpha * s;
    RowArray gpp = (-2.0 * alpha) * t_out_ * s;
    RowArray gppp = (-2.0 * alpha) * s * (1.0 - 3.0 * t_out_.square());
    auto zrow = pre_[layers - 1].row(0);
    auto zdk = zrow.segment(N, N).array();
    auto zdkk = zrow.segment(3 * N, N).array();
    auto nbv = nnbar.row(0).array();
    auto nbdk = nnbar.row(1).array();
    auto nbdt = nnbar.row(2).array();
    auto nbdkk = nnbar.row(3).array();

    Eigen::MatrixXd zbar(1, 4 * N);
    zbar.row(0).segment(0, N).array() =
        nbv * gp + nbdk * gpp * zdk + nbdt * gpp * zrow.segment(2 * N, N).array() +
        nbdkk * (gppp * zdk.square() + gpp * zdkk);
    zbar.row(0).segment(N, N).array() = nbdk * gp + 2.0 * nbdkk * gpp * zdk;
    zbar.row(0).segment(2 * N, N).array() = nbdt * gp;
    zbar.row(0).segment(3 * N, N).array() = nbdkk * gp;

    const Eigen::MatrixXd& x_out = (layers >= 2) ? post_[layers - 2] : in_;
    grad.d_weights[layers - 1].noalias() = zbar * x_out.transpose();
    grad.d_biases[layers - 1](0) = zbar.row(0).segment(0, N).sum();
    if (layers >= 2) bar_[layers - 2].noalias() = model.mlp.weights[layers - 1].transpose() * zbar;

    for (std::size_t l = layers - 1; l-- > 0;) {
        auto s1 = sig_[l].array();
        Eigen::ArrayXXd s2 = s1 * (1.0 - s1);
        Eigen::ArrayXXd s3 = s2 * (1.0 - 2.0 * s1);
        auto adk = pre_[l].middleCols(N, N).array();
        auto adt = pre_[l].middleCols(2 * N, N).array();
        auto adkk = pre_[l].middleCols(3 * N, N).array();
        auto xbv = bar_[l].middleCols(0, N);
        auto xbdk = bar_[l].middleCols(N, N);
        auto xbdt = bar_[l].middleCols(2 * N, N);
        auto xbdkk = bar_[l].middleCols(3 * N, N);

        Eigen::MatrixXd abar_v = (xbv.array() * s1 + xbdk.array() * s2 * adk +
                                  xbdt.array() * s2 * adt +
                                  xbdkk.array() * (s3 * adk.square() + s2 * adkk))
                                     .matrix();
        xbdk.array() = xbdk.array() * s1 + 2.0 * xbdkk.array() * s2 * adk;
        xbdt.array() = xbdt.array() * s1;
        xbdkk.array() = xbdkk.array() * s1;
        xbv = abar_v;

        const Eigen::MatrixXd& src = (l == 0) ? in_ : post_[l - 1];
        grad.d_weights[l].noalias() = bar_[l] * src.transpose();
        grad.d_biases[l] = bar_[l].middleCols(0, N).rowwise().sum();
        if (l > 0) bar_[l - 1].noalias() = model.mlp.weights[l].transpose() * bar_[l];
    }
}

} // namespace volfit
