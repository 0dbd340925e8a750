#include "genrs/channel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace genrs {

namespace {

// Adaptive Simpson quadrature for the one-ring integrand, one complex
// entry per antenna lag.
std::complex<double> one_ring_integrand(double phi, double d, int lag) {
    const double arg = 2.0 * std::numbers::pi * d * static_cast<double>(lag) * std::sin(phi);
    return {std::cos(arg), std::sin(arg)};
}

std::complex<double> adaptive_simpson(double a, double b, std::complex<double> fa,
                                      std::complex<double> fm, std::complex<double> fb,
                                      std::complex<double> whole, double tol, int depth, double d,
                                      int lag) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const auto flm = one_ring_integrand(lm, d, lag);
    const auto frm = one_ring_integrand(rm, d, lag);
    const auto left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const auto right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, d, lag) +
           adaptive_simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, d, lag);
}

std::complex<double> one_ring_entry(double theta, double spread, double d, int lag) {
    if (lag == 0) return {1.0, 0.0};
    const double a = theta - spread, b = theta + spread;
    // Pre-split into panels finer than the integrand's oscillation before
    // adapting; a single symmetric panel can fool the error estimate.
    const int panels =
        std::max(16, static_cast<int>(std::ceil(8.0 * d * std::abs(lag) * (b - a))));
    std::complex<double> integral = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels;
        const double pb = a + (b - a) * (p + 1) / panels;
        const auto fa = one_ring_integrand(pa, d, lag);
        const auto fb = one_ring_integrand(pb, d, lag);
        const double pm = 0.5 * (pa + pb);
        const auto fm = one_ring_integrand(pm, d, lag);
        const auto whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        integral += adaptive_simpson(pa, pb, fa, fm, fb, whole, 1e-14, 30, d, lag);
    }
    return integral / (2.0 * spread);
}

cmat one_ring_covariance(const OneRingModel& model, int user_idx, int m_antennas) {
    const double theta = model.azimuth_rad.at(user_idx);
    const double spread = model.angular_spread_rad;
    if (spread <= 0.0) {
        // Degenerate spread: rank-1 steering outer product.
        cvec a(m_antennas);
        for (int p = 0; p < m_antennas; ++p) {
            const double arg = 2.0 * std::numbers::pi * model.antenna_spacing * p * std::sin(theta);
            a(p) = std::complex<double>(std::cos(arg), std::sin(arg));
        }
        return a * a.adjoint();
    }
    std::vector<std::complex<double>> lags(m_antennas);
    for (int lag = 0; lag < m_antennas; ++lag)
        lags[lag] = one_ring_entry(theta, spread, model.antenna_spacing, lag);
    cmat q(m_antennas, m_antennas);
    for (int p = 0; p < m_antennas; ++p)
        for (int c = 0; c < m_antennas; ++c)
            q(p, c) = (p >= c) ? lags[p - c] : std::conj(lags[c - p]);
    // Trace-normalize to M (diagonal is already 1 analytically; this also
    // absorbs quadrature round-off).
    const double tr = q.trace().real();
    q *= static_cast<double>(m_antennas) / tr;
    return 0.5 * (q + cmat(q.adjoint()));
}

cmat hermitian_sqrt(const cmat& q) {
    Eigen::SelfAdjointEigenSolver<cmat> es(q);
    if (es.info() != Eigen::Success) throw std::runtime_error("channel: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-10 * scale)
            throw std::runtime_error("channel: covariance not PSD");
        ev(i) = std::sqrt(std::max(0.0, ev(i)));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

ChannelStatistics::ChannelStatistics(IidModel model, int num_users, int num_antennas)
    : model_(model), num_users_(num_users), num_antennas_(num_antennas) {
    if (model.lambda <= 0.0) throw std::invalid_argument("ChannelStatistics: lambda must be positive");
    if (num_users < 1 || num_antennas < 1)
        throw std::invalid_argument("ChannelStatistics: bad dimensions");
    const cmat q = model.lambda * cmat::Identity(num_antennas, num_antennas);
    const cmat qs = std::sqrt(model.lambda) * cmat::Identity(num_antennas, num_antennas);
    cov_.assign(num_users, q);
    cov_sqrt_.assign(num_users, qs);
}

ChannelStatistics::ChannelStatistics(OneRingModel model, int num_antennas)
    : model_(model), num_users_(static_cast<int>(model.azimuth_rad.size())),
      num_antennas_(num_antennas) {
    if (num_users_ < 1 || num_antennas < 1)
        throw std::invalid_argument("ChannelStatistics: bad dimensions");
    cov_.reserve(num_users_);
    cov_sqrt_.reserve(num_users_);
    for (int k = 0; k < num_users_; ++k) {
        cov_.push_back(one_ring_covariance(model, k, num_antennas));
        cov_sqrt_.push_back(hermitian_sqrt(cov_.back()));
    }
}

ChannelStatistics::ChannelStatistics(CustomModel model)
    : num_users_(model.num_users), per_subcarrier_(true),
      num_subcarriers_(model.num_subcarriers) {
    if (num_users_ < 1 || num_subcarriers_ < 1)
        throw std::invalid_argument("ChannelStatistics: bad custom dimensions");
    if (model.covariances.size() !=
        static_cast<std::size_t>(num_users_) * num_subcarriers_)
        throw std::invalid_argument("ChannelStatistics: custom covariance count mismatch");
    num_antennas_ = static_cast<int>(model.covariances.front().rows());
    cov_ = model.covariances;
    cov_sqrt_.reserve(cov_.size());
    for (auto& q : cov_) {
        if (q.rows() != num_antennas_ || q.cols() != num_antennas_)
            throw std::invalid_argument("ChannelStatistics: ragged custom covariances");
        q = 0.5 * (q + cmat(q.adjoint()));
        cov_sqrt_.push_back(hermitian_sqrt(q));
    }
    model_ = std::move(model);
}

const cmat& ChannelStatistics::covariance(int k, int n) const {
    if (k < 1 || k > num_users_ || n < 1) throw std::out_of_range("covariance: bad index");
    if (!per_subcarrier_) return cov_[k - 1];
    if (n > num_subcarriers_) throw std::out_of_range("covariance: bad subcarrier");
    return cov_[(k - 1) * num_subcarriers_ + (n - 1)];
}

const cmat& ChannelStatistics::covariance_sqrt(int k, int n) const {
    if (k < 1 || k > num_users_ || n < 1) throw std::out_of_range("covariance_sqrt: bad index");
    if (!per_subcarrier_) return cov_sqrt_[k - 1];
    if (n > num_subcarriers_) throw std::out_of_range("covariance_sqrt: bad subcarrier");
    return cov_sqrt_[(k - 1) * num_subcarriers_ + (n - 1)];
}

cvec standard_complex_gaussian(int m, std::uint64_t seed, std::uint64_t sample, int k, int n,
                               bool antithetic) {
    RngStream rng(seed, sample, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n));
    cvec g(m);
    for (int i = 0; i < m; ++i) {
        double u1 = rng.next_uniform();
        const double u2 = rng.next_uniform();
        if (antithetic) u1 = 1.0 - u1;
        // Box-Muller; complex entry has variance 1 total.
        const double r = std::sqrt(-std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        g(i) = std::complex<double>(r * std::cos(phi), r * std::sin(phi));
    }
    return g;
}

ChannelRealization sample_realization(const ChannelStatistics& stats, int num_subcarriers,
                                      std::uint64_t seed, std::uint64_t realization_index) {
    ChannelRealization real;
    real.num_users = stats.num_users();
    real.num_subcarriers = num_subcarriers;
    real.num_antennas = stats.num_antennas();
    real.h.resize(static_cast<std::size_t>(real.num_users) * num_subcarriers);
    for (int k = 1; k <= real.num_users; ++k) {
        for (int n = 1; n <= num_subcarriers; ++n) {
            const cvec g = standard_complex_gaussian(real.num_antennas, seed, realization_index, k, n);
            real.at(k, n) = stats.covariance_sqrt(k, n) * g;
        }
    }
    return real;
}

std::vector<double> group_azimuths(int num_groups, int num_users) {
    if (num_groups < 1 || num_groups > num_users)
        throw std::invalid_argument("group_azimuths: need 1 <= G <= K");
    const double lo = -std::numbers::pi / 3.0, hi = std::numbers::pi / 3.0;
    std::vector<double> per_group(num_groups);
    if (num_groups == 1) {
        per_group[0] = 0.0;
    } else {
        for (int g = 0; g < num_groups; ++g)
            per_group[g] = lo + (hi - lo) * static_cast<double>(g) / (num_groups - 1);
    }
    std::vector<double> out(num_users);
    for (int k = 0; k < num_users; ++k) out[k] = per_group[k % num_groups];
    return out;
}

void dump_realization_csv(const ChannelRealization& real, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("dump_realization_csv: cannot open " + path);
    f << "k,n,antenna,re,im\n";
    f.precision(17);
    for (int k = 1; k <= real.num_users; ++k)
        for (int n = 1; n <= real.num_subcarriers; ++n)
            for (int m = 0; m < real.num_antennas; ++m) {
                const auto& v = real.at(k, n)(m);
                f << k << ',' << n << ',' << m << ',' << v.real() << ',' << v.imag() << '\n';
            }
}

}  // namespace genrs
