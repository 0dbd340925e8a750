#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "genrs/harness.hpp"

using namespace genrs;

namespace {

std::string tiny_slow_config(const std::string& extra = "") {
    return R"(scenario = slow
users = 2
messages = 3
request.1 = 1,3
request.2 = 2,3
alpha = uniform
schemes = prop-rs,noma
channel = iid
subcarriers = 1
antennas = 2
bandwidth_hz = 30e3
noise_w = 1e-9
power_dbm = 27
sweep = none
realizations = 3
seed = 9
)" + extra;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Strips the wall-time column (the only nondeterministic field).
std::string strip_wall(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> tok;
        std::stringstream ls(line);
        std::string t;
        while (std::getline(ls, t, ',')) tok.push_back(t);
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (i == 7) continue;  // wall_ms
            out << tok[i] << (i + 1 < tok.size() ? "," : "");
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace

TEST_CASE("config parsing, defaults, and rejection rules") {
    auto cfg = parse_config(tiny_slow_config());
    CHECK(cfg.users == 2);
    CHECK(cfg.alpha.size() == 3);  // units {1},{2},{1,2}
    CHECK(cfg.alpha[0] == doctest::Approx(1.0 / 3.0));
    CHECK(cfg.power_watts() == doctest::Approx(0.501187).epsilon(1e-5));

    CHECK_THROWS_AS(parse_config("scenario = warp\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(tiny_slow_config("unknown_key = 1\n")), ConfigError);
    // Scheme/scenario compatibility is named at load time.
    try {
        auto bad = parse_config(tiny_slow_config());
        bad.schemes = {"fast-prop"};
        validate_config(bad);
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("scenario") != std::string::npos);
    }
    // ofdma only in slow; fast-iid needs iid channel.
    CHECK_THROWS_AS(parse_config(R"(scenario = fast
users = 1
messages = 1
request.1 = 1
schemes = ofdma
channel = iid
)"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"(scenario = fast
users = 1
messages = 1
request.1 = 1
schemes = fast-iid
channel = onering
)"),
                    ConfigError);
    // Sweep G on iid channels is rejected.
    CHECK_THROWS_AS(parse_config(tiny_slow_config("sweep = G\nsweep_values = 1,2\n")),
                    ConfigError);
}

TEST_CASE("empty scheme list gives an empty result set") {
    auto cfg = parse_config(tiny_slow_config());
    cfg.schemes.clear();
    auto out = run(cfg, 1);
    CHECK(out.records.empty());
    CHECK(!out.any_failed);
    auto summary = summarize(out.records);
    CHECK(summary.cells.empty());
}

TEST_CASE("run produces deterministic, self-consistent records") {
    auto cfg = parse_config(tiny_slow_config());
    cfg.realizations = 2;
    auto out1 = run(cfg, 1);
    auto out2 = run(cfg, 2);  // different worker count, same bytes
    REQUIRE(out1.records.size() == out2.records.size());
    REQUIRE(out1.records.size() == 4);  // 2 schemes x 2 realizations

    const std::string p1 = "harness_t1.csv", p2 = "harness_t2.csv";
    emit_csv(out1, p1);
    emit_csv(out2, p2);
    CHECK(strip_wall(read_file(p1)) == strip_wall(read_file(p2)));

    for (const auto& r : out1.records) {
        REQUIRE(r.status == "ok");
        // WSR recomputes from the stored unit rates through the weights.
        double wsr = 0.0;
        for (std::size_t gi = 0; gi < r.unit_rates.size(); ++gi)
            wsr += cfg.alpha[gi] * r.unit_rates[gi];
        CHECK(wsr == doctest::Approx(r.wsr).epsilon(1e-9));
        // Layer rates redistribute exactly the unit rates.
        double us = 0.0, ls = 0.0;
        for (double v : r.unit_rates) us += v;
        for (double v : r.layer_rates) ls += v;
        CHECK(us == doctest::Approx(ls).epsilon(1e-6));
    }

    // Paired channel draws: both schemes saw the same seeds per realization.
    CHECK(out1.records[0].seed == out1.records[2].seed);

    // Round trip through the CSV format at its 9-digit precision.
    auto parsed = parse_records_csv(p1);
    REQUIRE(parsed.records.size() == out1.records.size());
    CHECK(parsed.groups == out1.groups);
    CHECK(parsed.layers == out1.layers);
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
        CHECK(parsed.records[i].scheme == out1.records[i].scheme);
        CHECK(parsed.records[i].realization == out1.records[i].realization);
        CHECK(parsed.records[i].wsr ==
              doctest::Approx(out1.records[i].wsr).epsilon(1e-8));
    }
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("summaries: means, degenerate cells, pairwise differencing") {
    std::vector<ResultRecord> recs;
    auto mk = [](std::string scheme, int rz, double wsr) {
        ResultRecord r;
        r.scheme = std::move(scheme);
        r.realization = rz;
        r.wsr = wsr;
        return r;
    };
    recs.push_back(mk("a", 0, 10.0));
    recs.push_back(mk("a", 1, 14.0));
    recs.push_back(mk("b", 0, 9.0));
    recs.push_back(mk("b", 1, 12.0));
    recs.push_back(mk("c", 0, 7.0));

    auto s = summarize(recs);
    REQUIRE(s.cells.size() == 3);
    for (const auto& c : s.cells) {
        if (c.scheme == "a") {
            CHECK(c.mean == doctest::Approx(12.0));
            CHECK(c.std_error == doctest::Approx(2.0));  // sd 2.828 / sqrt 2
        }
        if (c.scheme == "c") CHECK(c.degenerate);
    }
    bool found = false;
    for (const auto& d : s.pairwise) {
        if (d.scheme_a == "a" && d.scheme_b == "b") {
            found = true;
            CHECK(d.pairs == 2);
            CHECK(d.mean_diff == doctest::Approx(1.5));  // (1 + 2)/2
        }
        if (d.scheme_a == d.scheme_b) CHECK(d.mean_diff == 0.0);
    }
    CHECK(found);
    CHECK(!s.warnings.empty());  // < 5 records everywhere

    // Identical schemes compared -> zero difference.
    std::vector<ResultRecord> twin = {mk("x", 0, 5.0), mk("y", 0, 5.0)};
    auto st = summarize(twin);
    REQUIRE(st.pairwise.size() == 1);
    CHECK(st.pairwise[0].mean_diff == 0.0);
}

TEST_CASE("failed cells are recorded and the run continues") {
    auto cfg = parse_config(tiny_slow_config());
    cfg.realizations = 1;
    // Sabotage: negative power cannot be expressed through the config
    // (validate rejects it), so exercise the path with an absurd noise
    // level that breaks the initializer instead: zero channel energy.
    cfg.noise_w = 1e300;  // drives every SINR ratio to 1: no interior rates
    auto out = run(cfg, 1);
    REQUIRE(out.records.size() == 2);
    int failed = 0;
    for (const auto& r : out.records) failed += r.status != "ok";
    CHECK(out.any_failed == (failed > 0));
    CHECK(failed > 0);
}

TEST_CASE("fast scenario records evaluate through the rate lp") {
    ExperimentConfig cfg = parse_config(R"(scenario = fast
users = 1
messages = 1
request.1 = 1
schemes = fast-iid
channel = iid
subcarriers = 1
antennas = 2
bandwidth_hz = 30e3
noise_w = 1e-9
power_dbm = 30
realizations = 1
seed = 5
mc_samples = 400
)");
    auto out = run(cfg, 1);
    REQUIRE(out.records.size() == 1);
    REQUIRE(out.records[0].status == "ok");
    CHECK(out.records[0].wsr > 0.0);

    // Antenna-count independence of the iid pipeline, bit for bit.
    cfg.antennas = 4;
    auto out4 = run(cfg, 1);
    CHECK(out4.records[0].wsr == out.records[0].wsr);
}

TEST_CASE("ordering check flags a trailing full-split scheme") {
    std::vector<ResultRecord> recs;
    ResultRecord a;
    a.scheme = "prop-rs";
    a.wsr = 90.0;
    ResultRecord b;
    b.scheme = "noma";
    b.wsr = 100.0;
    recs = {a, b};
    auto v = ordering_violations(summarize(recs));
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("prop-rs") != std::string::npos);

    a.wsr = 99.5;  // within 1%
    recs = {a, b};
    CHECK(ordering_violations(summarize(recs)).empty());
}

TEST_CASE("mean WSR climbs along power and antenna sweeps") {
    const std::string base = R"(scenario = slow
users = 2
messages = 3
request.1 = 1,3
request.2 = 2,3
schemes = prop-rs
channel = iid
subcarriers = 1
antennas = 2
bandwidth_hz = 30e3
noise_w = 1e-9
realizations = 5
seed = 12
)";
    {
        auto cfg = parse_config(base + "sweep = P\nsweep_values = 20,30\n");
        auto summary = summarize(run(cfg, 1).records);
        REQUIRE(summary.cells.size() == 2);
        const auto& lo = summary.cells[0].sweep_value < summary.cells[1].sweep_value
                             ? summary.cells[0]
                             : summary.cells[1];
        const auto& hi = &lo == &summary.cells[0] ? summary.cells[1] : summary.cells[0];
        CHECK(hi.mean >= lo.mean - (hi.std_error + lo.std_error));
    }
    {
        auto cfg = parse_config(base + "power_dbm = 27\nsweep = M\nsweep_values = 2,4\n");
        auto summary = summarize(run(cfg, 1).records);
        REQUIRE(summary.cells.size() == 2);
        const auto& lo = summary.cells[0].sweep_value < summary.cells[1].sweep_value
                             ? summary.cells[0]
                             : summary.cells[1];
        const auto& hi = &lo == &summary.cells[0] ? summary.cells[1] : summary.cells[0];
        CHECK(hi.mean >= lo.mean - (hi.std_error + lo.std_error));
    }
}
