#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "genrs/channel.hpp"

using namespace genrs;

namespace {

// Steering vector of a ULA at azimuth theta, spacing d wavelengths.
cvec steering(int m, double theta, double d) {
    cvec a(m);
    for (int p = 0; p < m; ++p) {
        const double arg = 2.0 * std::numbers::pi * d * p * std::sin(theta);
        a(p) = std::complex<double>(std::cos(arg), std::sin(arg));
    }
    return a;
}

// Plain high-resolution trapezoid quadrature of the one-ring integrand.
std::complex<double> trapezoid_entry(double theta, double spread, double d, int lag, int points) {
    const double a = theta - spread, b = theta + spread;
    std::complex<double> acc = 0.0;
    for (int i = 0; i <= points; ++i) {
        const double phi = a + (b - a) * i / points;
        const double arg = 2.0 * std::numbers::pi * d * lag * std::sin(phi);
        std::complex<double> f(std::cos(arg), std::sin(arg));
        acc += (i == 0 || i == points) ? 0.5 * f : f;
    }
    return acc * ((b - a) / points) / (2.0 * spread);
}

}  // namespace

TEST_CASE("iid covariance is a scaled identity") {
    ChannelStatistics stats(IidModel{1.0}, 2, 4);
    const cmat& q = covariance_of(stats, 1, 1);
    CHECK((q - cmat::Identity(4, 4)).norm() == doctest::Approx(0.0));
    CHECK(q.trace().real() == doctest::Approx(4.0));
}

TEST_CASE("one-ring covariance: hermitian, PSD, trace M") {
    for (int m : {2, 4, 8}) {
        for (double spread_deg : {2.0, 10.0, 30.0}) {
            OneRingModel model;
            model.azimuth_rad = {0.3, -0.7};
            model.angular_spread_rad = spread_deg * std::numbers::pi / 180.0;
            ChannelStatistics stats(model, m);
            for (int k = 1; k <= 2; ++k) {
                const cmat& q = covariance_of(stats, k, 1);
                CHECK((q - cmat(q.adjoint())).norm() < 1e-12);
                CHECK(q.trace().real() == doctest::Approx(m).epsilon(1e-9));
                Eigen::SelfAdjointEigenSolver<cmat> es(q);
                CHECK(es.eigenvalues().minCoeff() > -1e-10);
            }
        }
    }
}

TEST_CASE("one-ring rank-1 limit at vanishing spread") {
    const double theta = 0.42;
    OneRingModel model;
    model.azimuth_rad = {theta};
    model.angular_spread_rad = 1e-7;
    ChannelStatistics stats(model, 4);
    const cmat& q = covariance_of(stats, 1, 1);
    const cvec a = steering(4, theta, 0.5);
    const cmat expect = a * a.adjoint();  // trace M already
    CHECK((q - expect).norm() < 1e-5);
}

TEST_CASE("one-ring entries match a brute-force quadrature oracle") {
    // theta = 0, spread = pi gives Bessel-type lags J0(pi m).
    OneRingModel model;
    model.azimuth_rad = {0.0};
    model.angular_spread_rad = std::numbers::pi;
    ChannelStatistics stats(model, 4);
    const cmat& q = covariance_of(stats, 1, 1);
    for (int lag = 0; lag < 4; ++lag) {
        const auto oracle = trapezoid_entry(0.0, std::numbers::pi, 0.5, lag, 1000000);
        CHECK(std::abs(q(lag, 0) - oracle) < 1e-7);
        CHECK(std::abs(q(lag, 0) - std::cyl_bessel_j(0, std::numbers::pi * lag)) < 1e-7);
    }
    // An asymmetric window too.
    OneRingModel m2;
    m2.azimuth_rad = {0.5};
    m2.angular_spread_rad = 0.2;
    ChannelStatistics s2(m2, 3);
    const cmat& q2 = covariance_of(s2, 1, 1);
    for (int lag = 0; lag < 3; ++lag) {
        const auto oracle = trapezoid_entry(0.5, 0.2, 0.5, lag, 1000000);
        CHECK(std::abs(q2(lag, 0) - oracle) < 1e-7);
    }
}

TEST_CASE("iid sampling second moment") {
    const double lambda = 2.5;
    ChannelStatistics stats(IidModel{lambda}, 1, 1);
    const int draws = 100000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        auto real = sample_realization(stats, 1, 7, i);
        acc += std::norm(real.at(1, 1)(0));
    }
    const double mean = acc / draws;
    // var of |g|^2 is lambda^2, so 3 sigma of the MC mean:
    const double three_sigma = 3.0 * lambda / std::sqrt(static_cast<double>(draws));
    CHECK(std::abs(mean - lambda) < three_sigma);
}

TEST_CASE("fixed seed reproduces bit-identical realizations") {
    OneRingModel model;
    model.azimuth_rad = group_azimuths(2, 3);
    ChannelStatistics stats(model, 4);
    auto a = sample_realization(stats, 2, 1234, 5);
    auto b = sample_realization(stats, 2, 1234, 5);
    auto c = sample_realization(stats, 2, 1234, 6);
    bool identical = true, differs = false;
    for (std::size_t i = 0; i < a.h.size(); ++i) {
        identical = identical && (a.h[i] == b.h[i]);
        differs = differs || (a.h[i] != c.h[i]);
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("rank-1 one-ring draws align with the steering vector") {
    OneRingModel model;
    model.azimuth_rad = {-0.2};
    model.angular_spread_rad = 1e-8;
    ChannelStatistics stats(model, 4);
    const cvec a = steering(4, -0.2, 0.5);
    for (int r = 0; r < 20; ++r) {
        auto real = sample_realization(stats, 1, 99, r);
        const cvec& h = real.at(1, 1);
        // Component orthogonal to the steering direction should vanish.
        const cvec proj = a * (a.dot(h) / a.squaredNorm());
        CHECK((h - proj).norm() < 1e-3 * h.norm());
    }
}

TEST_CASE("sampling is covariance-faithful") {
    OneRingModel model;
    model.azimuth_rad = {0.35};
    model.angular_spread_rad = 10.0 * std::numbers::pi / 180.0;
    ChannelStatistics stats(model, 4);
    const cmat& q = covariance_of(stats, 1, 1);
    cmat acc = cmat::Zero(4, 4);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto real = sample_realization(stats, 1, 31337, i);
        acc += real.at(1, 1) * real.at(1, 1).adjoint();
    }
    acc /= draws;
    CHECK((acc - q).norm() / q.norm() <= 0.1);
}

TEST_CASE("group azimuth assignment") {
    auto one = group_azimuths(1, 3);
    CHECK(one == std::vector<double>{0.0, 0.0, 0.0});

    auto three = group_azimuths(3, 3);
    CHECK(three[0] != three[1]);
    CHECK(three[1] != three[2]);
    CHECK(three[0] == doctest::Approx(-std::numbers::pi / 3));
    CHECK(three[2] == doctest::Approx(std::numbers::pi / 3));

    auto two = group_azimuths(2, 5);  // round robin: 0,1,0,1,0
    CHECK(two[0] == two[2]);
    CHECK(two[1] == two[3]);
    CHECK(two[0] != two[1]);

    CHECK_THROWS(group_azimuths(0, 3));
    CHECK_THROWS(group_azimuths(4, 3));
}

TEST_CASE("antithetic partner flips the radial component") {
    const cvec g0 = standard_complex_gaussian(2, 5, 0, 1, 1, false);
    const cvec g1 = standard_complex_gaussian(2, 5, 0, 1, 1, true);
    // Same phase, anticorrelated radius: the product g0*conj(g1) is real
    // positive per component.
    for (int i = 0; i < 2; ++i) {
        const auto prod = g0(i) * std::conj(g1(i));
        CHECK(prod.imag() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(prod.real() > 0.0);
    }
    // First antenna component does not depend on the vector length.
    const cvec big = standard_complex_gaussian(8, 5, 0, 1, 1, false);
    CHECK(big(0) == g0(0));
    CHECK(big(1) == g0(1));
}

TEST_CASE("csv debug dump") {
    ChannelStatistics stats(IidModel{1.0}, 2, 2);
    auto real = sample_realization(stats, 2, 42, 0);
    const std::string path = "channel_dump_test.csv";
    dump_realization_csv(real, path);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "k,n,antenna,re,im");
    int rows = 0;
    std::string line;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 2 * 2 * 2);
    std::remove(path.c_str());
}
