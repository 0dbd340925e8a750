#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "genrs/rng.hpp"

namespace genrs {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

/// One slot's channel: an M-vector per (user k, subcarrier n), both 1-based
/// via at(); storage is row-major in (k, n).
struct ChannelRealization {
    int num_users = 0;
    int num_subcarriers = 0;
    int num_antennas = 0;
    std::vector<cvec> h;  // size K*N

    const cvec& at(int k, int n) const { return h[(k - 1) * num_subcarriers + (n - 1)]; }
    cvec& at(int k, int n) { return h[(k - 1) * num_subcarriers + (n - 1)]; }
};

struct IidModel {
    double lambda = 1.0;  // per-antenna variance; Q = lambda * I
};

/// One-ring scattering around a uniform linear array: per-user azimuth,
/// common angular spread, antenna spacing in wavelengths.  Covariances
/// are Toeplitz with entries (1/2Δ)∫ exp(j2πd(p−q)sinφ)dφ over
/// [θ−Δ, θ+Δ], trace-normalized to M.
struct OneRingModel {
    std::vector<double> azimuth_rad;   // per user
    double angular_spread_rad = 0.17453292519943295;  // 10 degrees
    double antenna_spacing = 0.5;
};

/// Explicit per-(user, subcarrier) covariance matrices.
struct CustomModel {
    int num_users = 0;
    int num_subcarriers = 0;
    std::vector<cmat> covariances;  // [(k-1)*N + (n-1)], Hermitian PSD
};

/// Second-order statistics for all users.  Model-based covariances are
/// flat across subcarriers (Q_{k,n} = Q_k); the custom form resolves n.
class ChannelStatistics {
public:
    ChannelStatistics(IidModel model, int num_users, int num_antennas);
    ChannelStatistics(OneRingModel model, int num_antennas);
    explicit ChannelStatistics(CustomModel model);

    int num_users() const { return num_users_; }
    int num_antennas() const { return num_antennas_; }
    bool is_iid() const { return std::holds_alternative<IidModel>(model_); }
    double iid_lambda() const { return std::get<IidModel>(model_).lambda; }

    /// Q_{k,n}: Hermitian PSD, computed once per user and cached.
    const cmat& covariance(int k, int n) const;

    /// Q_{k,n}^{1/2} via Hermitian eigendecomposition; eigenvalues in
    /// [-1e-10, 0) are clamped to 0, anything lower is an error.
    const cmat& covariance_sqrt(int k, int n) const;

private:
    std::variant<IidModel, OneRingModel, CustomModel> model_;
    int num_users_ = 0;
    int num_antennas_ = 0;
    bool per_subcarrier_ = false;
    int num_subcarriers_ = 1;
    std::vector<cmat> cov_;       // per user, or per (k, n) when resolved
    std::vector<cmat> cov_sqrt_;
};

/// Q_{k,n} for the given statistics (1-based k, n).
inline const cmat& covariance_of(const ChannelStatistics& stats, int k, int n) {
    return stats.covariance(k, n);
}

/// Draws h_{k,n} = Q_{k,n}^{1/2} g with g standard complex Gaussian.
/// Each (k, n) uses the substream (seed, realization_index, k, n) with
/// antenna components drawn in order, so draws are reproducible and
/// independent of scheduling.
ChannelRealization sample_realization(const ChannelStatistics& stats, int num_subcarriers,
                                      std::uint64_t seed, std::uint64_t realization_index);

/// Standard complex Gaussian M-vector on the (seed, sample, k, n) stream.
/// With antithetic=true the radial uniforms are flipped (u -> 1-u), giving
/// the negatively correlated partner of the same stream's base draw.
cvec standard_complex_gaussian(int m, std::uint64_t seed, std::uint64_t sample, int k, int n,
                               bool antithetic = false);

/// Round-robin grouping of K users into G groups with azimuths equally
/// spaced in [-pi/3, pi/3]; all users of a group share the azimuth.
std::vector<double> group_azimuths(int num_groups, int num_users);

/// Debug dump, one row per (k, n, antenna): k,n,antenna,re,im.
void dump_realization_csv(const ChannelRealization& real, const std::string& path);

}  // namespace genrs
