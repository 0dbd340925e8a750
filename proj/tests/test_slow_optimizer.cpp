#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "genrs/slow.hpp"

using namespace genrs;

namespace {

RequestProfile sim_profile() {
    // The three-user, seven-message setup used throughout the experiments.
    RequestProfile p;
    p.num_users = 3;
    p.num_messages = 7;
    p.requests = {{1, 4, 5, 7}, {2, 4, 6, 7}, {3, 5, 6, 7}};
    return p;
}

SlowParams default_params(const SplitStructure& s, double P = 1.0, double B = 30e3,
                          double noise = 1e-9) {
    SlowParams p;
    p.power = P;
    p.bandwidth = B;
    p.noise = noise;
    p.weights.assign(s.groups().size(), 1.0 / static_cast<double>(s.groups().size()));
    return p;
}

ChannelRealization iid_realization(int K, int N, int M, std::uint64_t seed,
                                   std::uint64_t idx = 0) {
    ChannelStatistics stats(IidModel{1.0}, K, M);
    return sample_realization(stats, N, seed, idx);
}

RequestProfile unicast_profile(int K) {
    RequestProfile p;
    p.num_users = K;
    p.num_messages = K;
    p.requests.resize(K);
    for (int k = 0; k < K; ++k) p.requests[k] = {k + 1};
    return p;
}

}  // namespace

TEST_CASE("achievable rate rhs basics") {
    auto part = partition_messages(unicast_profile(2));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    const int N = 2, M = 2;
    auto h = iid_realization(2, N, M, 11);
    auto params = default_params(s);

    // Zero beams give zero rate.
    std::vector<cvec> w0(s.layers().size() * N, cvec::Zero(M));
    for (int k = 1; k <= 2; ++k)
        for (const auto& x : decode_subsets(s, k))
            CHECK(achievable_rate_rhs(h, w0, s, params, k, x) == 0.0);

    // Random beams match a direct recomputation with independent complex
    // arithmetic.
    std::vector<cvec> w(s.layers().size() * N);
    RngStream rng(5);
    for (auto& v : w) {
        v = cvec(M);
        for (int m = 0; m < M; ++m)
            v(m) = 0.3 * std::complex<double>(rng.next_uniform() - 0.5, rng.next_uniform() - 0.5);
    }
    const int k = 2;
    const auto xs = decode_subsets(s, k);
    const auto& x = xs[1];
    double expect = 0.0;
    const auto& mine = s.user_layers(k);
    for (int n = 1; n <= N; ++n) {
        double sig = 0.0, interf = 0.0;
        for (std::size_t li = 0; li < s.layers().size(); ++li) {
            std::complex<double> dot = 0.0;
            for (int m = 0; m < M; ++m) dot += std::conj(h.at(k, n)(m)) * w[li * N + n - 1](m);
            const bool in_x = std::find(x.begin(), x.end(), static_cast<int>(li)) != x.end();
            const bool is_mine =
                std::find(mine.begin(), mine.end(), static_cast<int>(li)) != mine.end();
            if (in_x) sig += std::norm(dot);
            if (!is_mine) interf += std::norm(dot);
        }
        expect += std::log2(1.0 + sig / (params.noise + interf));
    }
    expect *= params.bandwidth;
    CHECK(achievable_rate_rhs(h, w, s, params, k, x) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single-user rhs has no interference term") {
    auto part = partition_messages(unicast_profile(1));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto h = iid_realization(1, 1, 4, 3);
    auto params = default_params(s);
    std::vector<cvec> w{0.4 * h.at(1, 1)};
    const double expect =
        params.bandwidth * std::log2(1.0 + std::norm(h.at(1, 1).dot(w[0])) / params.noise);
    CHECK(achievable_rate_rhs(h, w, s, params, 1, {0}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("feasible initializer is strictly feasible with 0.9 P power") {
    auto part = partition_messages(sim_profile());
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    const int N = 2, M = 2;
    auto h = iid_realization(3, N, M, 21);
    auto params = default_params(s);

    auto init = init_feasible_slow(h, s, params);
    double pw = 0.0;
    for (const auto& w : init.w) pw += w.squaredNorm();
    CHECK(pw == doctest::Approx(0.9 * params.power).epsilon(1e-12));

    auto sub = build_problem4(h, s, init, params);
    auto evals = evaluate_constraints(sub.program, sub.start);
    for (const auto& ev : evals) {
        CHECK(ev.in_domain);
        CHECK(ev.value < 0.0);
    }
    // And the equalities hold at the packed point.
    for (const auto& eq : sub.program.equalities())
        CHECK(std::abs(eq.value_at(sub.start)) < 1e-9);

    // Direct re-evaluation of the original constraints.
    CHECK(slow_feasibility_gap(h, s, params, init) < 0.0);
}

TEST_CASE("initializer beam direction is MRT to the group sum channel") {
    RequestProfile p;
    p.num_users = 2;
    p.num_messages = 1;
    p.requests = {{1}, {1}};
    auto s = build_layers(partition_messages(p), LayerPolicy::FullGeneral);
    REQUIRE(s.layers().size() == 1);
    auto h = iid_realization(2, 1, 4, 77);
    auto params = default_params(s);
    auto init = init_feasible_slow(h, s, params);
    const cvec sum = h.at(1, 1) + h.at(2, 1);
    const std::complex<double> corr = sum.normalized().dot(init.w[0].normalized());
    CHECK(std::abs(corr) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("problem-4 linearization touches the DC constraint at the expansion point") {
    auto part = partition_messages(sim_profile());
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    const int N = 2, M = 2;
    auto h = iid_realization(3, N, M, 31);
    auto params = default_params(s);
    auto prev = init_feasible_slow(h, s, params);
    auto sub = build_problem4(h, s, prev, params);
    auto evals = evaluate_constraints(sub.program, sub.start);

    // Identify the convexified rows: per decode slot they follow the
    // e - v coupling row; compare against the original DC constraint value
    // sigma-normalized, as built.
    const int L = static_cast<int>(s.layers().size());
    int row = 1 + s.num_split_indices();  // skip power and R >= 0 rows
    int slot = 0;
    for (int k = 1; k <= s.num_users(); ++k) {
        const auto& mine = s.user_layers(k);
        for (const auto& x : decode_subsets(s, k)) {
            for (int n = 1; n <= N; ++n, ++slot) {
                const double u_prev = prev.u[slot];
                double sig = 0.0, interf = 0.0;
                for (int li = 0; li < L; ++li) {
                    const double p2 =
                        std::norm(h.at(k, n).dot(prev.w[li * N + n - 1])) / params.noise;
                    const bool in_x = std::find(x.begin(), x.end(), li) != x.end();
                    const bool is_mine = std::binary_search(mine.begin(), mine.end(), li);
                    if (in_x) sig += p2;
                    if (!is_mine) interf += p2;
                }
                const double dc_value = interf + 1.0 - (sig + interf + 1.0) / u_prev;
                ++row;  // skip the e - v row
                CHECK(evals[row].value ==
                      doctest::Approx(dc_value).epsilon(1e-9));
                ++row;
            }
        }
    }
}

TEST_CASE("phase one accepts the previous iterate with inflated u") {
    auto part = partition_messages(unicast_profile(2));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto h = iid_realization(2, 1, 2, 9);
    auto params = default_params(s);
    auto prev = init_feasible_slow(h, s, params);
    for (auto& u : prev.u) u *= 1.0 + 1e-6;
    auto sub = build_problem4(h, s, prev, params);
    auto p1 = phase1_start(sub.program, sub.start);
    REQUIRE(p1.feasible);
    CHECK((p1.x - sub.start).norm() == 0.0);  // accepted unchanged
}

TEST_CASE("single-user cccp reaches MRT capacity") {
    auto part = partition_messages(unicast_profile(1));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto params = default_params(s);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto h = iid_realization(1, 1, 4, seed);
        auto sol = cccp_slow(h, s, params);
        const double capacity =
            params.bandwidth *
            std::log2(1.0 + params.power * h.at(1, 1).squaredNorm() / params.noise);
        CHECK(sol.objective_trace.back() >= 0.99 * capacity);
        CHECK(sol.objective_trace.back() <= capacity * (1.0 + 1e-9));
    }
}

TEST_CASE("cccp trace is monotone, output feasible, lemma-1 gap small") {
    auto part = partition_messages(sim_profile());
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto params = default_params(s);
    auto h = iid_realization(3, 2, 2, 5);
    auto sol = cccp_slow(h, s, params);
    REQUIRE(sol.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
        CHECK(sol.objective_trace[i] >= sol.objective_trace[i - 1] - 1e-6);
    CHECK(slow_feasibility_gap(h, s, params, sol.iterate) < 1e-6);
    CHECK(lemma1_activity(sol.iterate, params) <= 1e-3);

    // Weighted sum rate recomputed from the split rates matches the trace.
    double wsr = 0.0;
    for (std::size_t gi = 0; gi < s.groups().size(); ++gi)
        wsr += params.weights[gi] * message_rate(sol.iterate.rates, s, s.groups()[gi]);
    CHECK(wsr == doctest::Approx(sol.objective_trace.back()).epsilon(1e-9));
}

TEST_CASE("lemma-1 activity arithmetic") {
    auto part = partition_messages(unicast_profile(1));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto params = default_params(s);
    SlowIterate it;
    it.w = {cvec::Zero(2)};
    it.rates = RateAllocation::zeros(s);
    it.e = {3.0 * params.bandwidth};
    it.u = {8.0};
    CHECK(lemma1_activity(it, params) == doctest::Approx(0.0));
    it.u = {16.0};  // u inflated x2: |2^e - u|/u = 1/2
    CHECK(lemma1_activity(it, params) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two orthogonal users beat a hand-built zero-forcing point") {
    auto part = partition_messages(unicast_profile(2));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto params = default_params(s);
    ChannelRealization h;
    h.num_users = 2;
    h.num_subcarriers = 1;
    h.num_antennas = 2;
    h.h.resize(2);
    h.at(1, 1) = cvec(2);
    h.at(1, 1) << 1.3, 0.0;
    h.at(2, 1) = cvec(2);
    h.at(2, 1) << 0.0, 1.3;

    // Hand point: private MRT at P/2 each, nothing on the common layer.
    std::vector<cvec> wz(s.layers().size(), cvec::Zero(2));
    wz[s.layer_index(UserSet::of({1}))] = std::sqrt(params.power / 2) * cvec::Unit(2, 0);
    wz[s.layer_index(UserSet::of({2}))] = std::sqrt(params.power / 2) * cvec::Unit(2, 1);
    double hand = 0.0;
    hand += params.weights[0] * achievable_rate_rhs(h, wz, s, params, 1,
                                                    {s.layer_index(UserSet::of({1}))});
    hand += params.weights[1] * achievable_rate_rhs(h, wz, s, params, 2,
                                                    {s.layer_index(UserSet::of({2}))});

    params.obj_tol_rel = 1e-5;
    auto sol = cccp_slow(h, s, params);
    CHECK(sol.objective_trace.back() >= hand * (1.0 - 1e-4));
}

TEST_CASE("all-zero weights are rejected per the parameter contract") {
    auto part = partition_messages(unicast_profile(2));
    auto s = build_layers(part, LayerPolicy::FullGeneral);
    auto params = default_params(s);
    params.weights.assign(s.groups().size(), 0.0);
    auto h = iid_realization(2, 1, 2, 2);
    CHECK_THROWS_AS(cccp_slow(h, s, params), std::invalid_argument);
}

TEST_CASE("ofdma single user equals capacity") {
    auto part = partition_messages(unicast_profile(1));
    auto s = build_layers(part, LayerPolicy::NoSplit);
    auto params = default_params(s);
    params.weights = {1.0};
    auto h = iid_realization(1, 1, 4, 8);
    auto res = ofdma_baseline(h, s, params);
    const double capacity =
        params.bandwidth *
        std::log2(1.0 + params.power * h.at(1, 1).squaredNorm() / params.noise);
    CHECK(res.wsr == doctest::Approx(capacity).epsilon(1e-5));
}

TEST_CASE("ofdma equal channels give the common min rate") {
    RequestProfile p;
    p.num_users = 2;
    p.num_messages = 1;
    p.requests = {{1}, {1}};
    auto s = build_layers(partition_messages(p), LayerPolicy::NoSplit);
    auto params = default_params(s);
    params.weights = {1.0};
    ChannelRealization h;
    h.num_users = 2;
    h.num_subcarriers = 1;
    h.num_antennas = 2;
    h.h.resize(2);
    h.at(1, 1) = cvec(2);
    h.at(1, 1) << 1.0, 0.5;
    h.at(2, 1) = h.at(1, 1);
    auto res = ofdma_baseline(h, s, params);
    const double capacity =
        params.bandwidth *
        std::log2(1.0 + params.power * h.at(1, 1).squaredNorm() / params.noise);
    CHECK(res.wsr == doctest::Approx(capacity).epsilon(1e-5));
}

TEST_CASE("ofdma two subcarriers match the exhaustive oracle") {
    // Two units with clearly separated per-subcarrier gains.
    RequestProfile p;
    p.num_users = 2;
    p.num_messages = 2;
    p.requests = {{1}, {2}};
    auto s = build_layers(partition_messages(p), LayerPolicy::NoSplit);
    auto params = default_params(s, 0.5);
    ChannelRealization h;
    h.num_users = 2;
    h.num_subcarriers = 2;
    h.num_antennas = 1;
    h.h.resize(4);
    h.at(1, 1) = cvec(1);
    h.at(1, 1) << 2.0;
    h.at(1, 2) = cvec(1);
    h.at(1, 2) << 0.2;
    h.at(2, 1) = cvec(1);
    h.at(2, 1) << 0.3;
    h.at(2, 2) = cvec(1);
    h.at(2, 2) << 1.5;

    auto res = ofdma_baseline(h, s, params);

    // Brute force: all 4 assignments x fine power grid.
    double best = 0.0;
    const double g11 = 4.0 / params.noise, g12 = 0.04 / params.noise;
    const double g21 = 0.09 / params.noise, g22 = 2.25 / params.noise;
    const double gains[2][2] = {{g11, g12}, {g21, g22}};
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
            for (int step = 0; step <= 4000; ++step) {
                const double p1 = params.power * step / 4000.0;
                const double p2 = params.power - p1;
                const double wsr =
                    params.weights[a1] * params.bandwidth * std::log2(1.0 + p1 * gains[a1][0]) +
                    params.weights[a2] * params.bandwidth * std::log2(1.0 + p2 * gains[a2][1]);
                best = std::max(best, wsr);
            }
        }
    CHECK(res.wsr == doctest::Approx(best).epsilon(1e-4));
}
