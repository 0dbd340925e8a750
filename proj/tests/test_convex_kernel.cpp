#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "genrs/rng.hpp"
#include "genrs/solver.hpp"

using namespace genrs;
using Eigen::VectorXd;

namespace {

// Dykstra projection onto an intersection of balls and a symmetric box,
// then a support point of c via projection of a far point along c.  Serves
// as the independent first-order oracle for linear-objective instances.
struct BallInstance {
    std::vector<VectorXd> centers;
    std::vector<double> radii;
    double box = 0.0;  // |x_i| <= box; 0 disables
    VectorXd c;
};

VectorXd dykstra_project(const BallInstance& inst, const VectorXd& x0, int sweeps) {
    const int d = x0.size();
    const int sets = static_cast<int>(inst.centers.size()) + (inst.box > 0 ? 1 : 0);
    VectorXd x = x0;
    std::vector<VectorXd> inc(sets, VectorXd::Zero(d));
    for (int s = 0; s < sweeps; ++s) {
        for (int j = 0; j < sets; ++j) {
            VectorXd y = x + inc[j];
            VectorXd p;
            if (j < static_cast<int>(inst.centers.size())) {
                VectorXd dlt = y - inst.centers[j];
                const double nrm = dlt.norm();
                p = nrm <= inst.radii[j] ? y : VectorXd(inst.centers[j] + dlt * (inst.radii[j] / nrm));
            } else {
                p = y.cwiseMax(-inst.box).cwiseMin(inst.box);
            }
            inc[j] = y - p;
            x = p;
        }
    }
    return x;
}

// Projected gradient ascent with an annealed step; the independent
// first-order oracle for these linear-objective instances.
VectorXd pgd_support(const BallInstance& inst) {
    VectorXd x = VectorXd::Zero(inst.c.size());
    double step = 0.3;
    for (int level = 0; level < 12; ++level, step *= 0.3)
        for (int it = 0; it < 1000; ++it) x = dykstra_project(inst, x + step * inst.c, 60);
    return x;
}

double finite_diff(const ConvexProgram& prog, int ci, const VectorXd& x, int i, double step) {
    VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    const double fp = evaluate_constraints(prog, xp)[ci].value;
    const double fm = evaluate_constraints(prog, xm)[ci].value;
    return (fp - fm) / (2.0 * step);
}

void check_gradients(const ConvexProgram& prog, const VectorXd& x, double rel_tol = 1e-5) {
    auto evals = evaluate_constraints(prog, x);
    for (int ci = 0; ci < prog.num_constraints(); ++ci) {
        REQUIRE(evals[ci].in_domain);
        const double gscale = std::max(1.0, evals[ci].gradient.cwiseAbs().maxCoeff());
        for (int i = 0; i < x.size(); ++i) {
            const double step = 1e-6 * std::max(1.0, std::abs(x(i)));
            const double fd = finite_diff(prog, ci, x, i, step);
            CHECK(std::abs(evals[ci].gradient(i) - fd) <= rel_tol * std::max(gscale, std::abs(fd)));
        }
    }
}

}  // namespace

TEST_CASE("box LP") {
    VariableSpace vs;
    Block r = vs.add_block("r", 1);
    LinearForm obj;
    obj.add(r.at(0), 1.0);
    // r <= 5  and  r >= 0
    ConvexProgram p2(vs);
    p2.maximize(obj);
    {
        LinearForm f;
        f.add(r.at(0), 1.0);
        f.constant = -5.0;
        p2.add_constraint().affine(std::move(f));
    }
    {
        LinearForm f;
        f.add(r.at(0), -1.0);
        p2.add_constraint().affine(std::move(f));
    }
    VectorXd start(1);
    start << 1.0;
    auto sol = solve(p2, start);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(sol.kkt_residual < 1e-4);
}

TEST_CASE("equality-constrained LP") {
    VariableSpace vs;
    Block xy = vs.add_block("xy", 2);
    ConvexProgram prog(vs);
    LinearForm obj;
    obj.add(xy.at(0), 1.0);
    prog.maximize(obj);
    {
        LinearForm f;  // x <= 0.75
        f.add(xy.at(0), 1.0);
        f.constant = -0.75;
        prog.add_constraint().affine(std::move(f));
    }
    {
        LinearForm f;  // y >= 0.1
        f.add(xy.at(1), -1.0);
        f.constant = 0.1;
        prog.add_constraint().affine(std::move(f));
    }
    {
        LinearForm f;  // x + y = 1
        f.add(xy.at(0), 1.0);
        f.add(xy.at(1), 1.0);
        f.constant = -1.0;
        prog.add_equality(std::move(f));
    }
    VectorXd start(2);
    start << 0.3, 0.7;
    auto sol = solve(prog, start);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(sol.x(0) + sol.x(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single-user capacity through the exponential atom") {
    // maximize R subject to 2^{R/B} <= u and u <= 1 + snr, with u carried
    // as v = log2(u): the 2^{R/B} <= u coupling is then the affine row
    // R/B - v <= 0 and the cap becomes the exponential atom 2^v <= 1+snr.
    const double B = 30e3;
    const double snr = 8137.5;  // P|h|^2 / sigma^2
    VariableSpace vs;
    Block r = vs.add_block("rate", 1, 10.0 * B);
    Block v = vs.add_block("v", 1, 13.0);
    ConvexProgram prog(vs);
    LinearForm obj;
    obj.add(r.at(0), 1.0);
    prog.maximize(obj);
    {
        LinearForm f;  // R/B - v <= 0
        f.add(r.at(0), 1.0 / B);
        f.add(v.at(0), -1.0);
        prog.add_constraint(10.0).affine(std::move(f));
    }
    {
        ExponentialAtom e;  // 2^v - (1 + snr) <= 0
        e.scale = 1.0;
        e.exp_index = v.at(0);
        e.denom = 1.0;
        e.linear.constant = -(1.0 + snr);
        prog.add_constraint(snr).exponential(std::move(e));
    }
    {
        LinearForm f;  // R >= 0
        f.add(r.at(0), -1.0);
        prog.add_constraint(B).affine(std::move(f));
    }
    VectorXd start(2);
    start << 1.0, 1.0;
    SolveOptions opt;
    opt.tol = 1e-8;
    auto sol = solve(prog, start, opt);
    const double expect = B * std::log2(1.0 + snr);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.objective - expect) / expect < 1e-6);
}

TEST_CASE("solver agreement with projection oracle on random ball instances") {
    RngStream rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 5 + static_cast<int>(rng.next_u64() % 26);
        BallInstance inst;
        const int balls = 2 + static_cast<int>(rng.next_u64() % 2);
        for (int b = 0; b < balls; ++b) {
            VectorXd z(d);
            for (int i = 0; i < d; ++i) z(i) = 0.3 * (2.0 * rng.next_uniform() - 1.0);
            inst.centers.push_back(z);
            inst.radii.push_back(z.norm() + 0.7 + 0.5 * rng.next_uniform());
        }
        inst.c = VectorXd(d);
        for (int i = 0; i < d; ++i) inst.c(i) = 2.0 * rng.next_uniform() - 1.0;
        inst.c.normalize();

        VariableSpace vs;
        Block xb = vs.add_block("x", d);
        ConvexProgram prog(vs);
        LinearForm obj;
        for (int i = 0; i < d; ++i) obj.add(xb.at(i), inst.c(i));
        prog.maximize(obj);
        for (int b = 0; b < balls; ++b) {
            QuadraticAtom q;
            for (int i = 0; i < d; ++i) {
                LinearForm f;
                f.add(xb.at(i), 1.0);
                f.constant = -inst.centers[b](i);
                q.terms.push_back({1.0, std::move(f)});
            }
            Constraint& con = prog.add_constraint();
            con.quadratic(std::move(q));
            LinearForm rr;
            rr.constant = -inst.radii[b] * inst.radii[b];
            con.affine(std::move(rr));
        }

        SolveOptions opt;
        opt.tol = 1e-8;
        auto sol = solve(prog, VectorXd::Zero(d), opt);
        REQUIRE(sol.status == SolveStatus::Optimal);

        const VectorXd oracle = pgd_support(inst);
        const double oracle_obj = inst.c.dot(oracle);
        CHECK(std::abs(sol.objective - oracle_obj) <= 1e-5 * std::max(1.0, std::abs(oracle_obj)));
    }
}

TEST_CASE("phase one accepts interior hints and rejects contradictions") {
    // ||w||^2 <= P with hint w = 0.
    {
        VariableSpace vs;
        Block w = vs.add_block("w", 4);
        ConvexProgram prog(vs);
        LinearForm obj;
        obj.add(w.at(0), 1.0);
        prog.maximize(obj);
        QuadraticAtom q;
        for (int i = 0; i < 4; ++i) q.terms.push_back({1.0, LinearForm{}.add(w.at(i), 1.0)});
        Constraint& con = prog.add_constraint();
        con.quadratic(std::move(q));
        con.affine(LinearForm{{}, -2.0});  // - P
        auto p1 = phase1_start(prog, VectorXd::Zero(4));
        REQUIRE(p1.feasible);
        CHECK(p1.x == VectorXd::Zero(4));
    }
    // x <= -1 and x >= 1: empty interior.
    {
        VariableSpace vs;
        Block x = vs.add_block("x", 1);
        ConvexProgram prog(vs);
        LinearForm obj;
        obj.add(x.at(0), 1.0);
        prog.maximize(obj);
        {
            LinearForm f;
            f.add(x.at(0), 1.0);
            f.constant = 1.0;  // x + 1 <= 0
            prog.add_constraint().affine(std::move(f));
        }
        {
            LinearForm f;
            f.add(x.at(0), -1.0);
            f.constant = 1.0;  // 1 - x <= 0
            prog.add_constraint().affine(std::move(f));
        }
        auto p1 = phase1_start(prog, VectorXd::Zero(1));
        CHECK(!p1.feasible);
        auto sol = solve(prog, VectorXd::Zero(1));
        CHECK(sol.status == SolveStatus::Infeasible);
    }
}

TEST_CASE("evaluate_constraints basics") {
    VariableSpace vs;
    Block x = vs.add_block("x", 3);
    ConvexProgram prog(vs);
    LinearForm f;
    f.add(x.at(0), 2.0);
    f.add(x.at(2), -1.5);
    f.constant = 0.75;
    prog.add_constraint().affine(std::move(f));
    auto evals = evaluate_constraints(prog, VectorXd::Zero(3));
    CHECK(evals[0].value == doctest::Approx(0.75));
    CHECK(evals[0].gradient(0) == doctest::Approx(2.0));
    CHECK(evals[0].gradient(1) == doctest::Approx(0.0));
    CHECK(evals[0].gradient(2) == doctest::Approx(-1.5));
}

TEST_CASE("quadratic atom reproduces |h^H w|^2") {
    RngStream rng(5);
    const int m = 4;
    Eigen::VectorXcd h(m), w(m);
    for (int i = 0; i < m; ++i) {
        h(i) = std::complex<double>(rng.next_uniform() - 0.5, rng.next_uniform() - 0.5);
        w(i) = std::complex<double>(rng.next_uniform() - 0.5, rng.next_uniform() - 0.5);
    }
    // Interleaved (re, im) layout; |h^H w|^2 = p(x)^2 + q(x)^2.
    VariableSpace vs;
    Block wb = vs.add_block("w", 2 * m);
    ConvexProgram prog(vs);
    QuadraticAtom q;
    LinearForm p_form, q_form;
    for (int i = 0; i < m; ++i) {
        const double a = h(i).real(), b = h(i).imag();
        p_form.add(wb.at(2 * i), a);
        p_form.add(wb.at(2 * i + 1), b);
        q_form.add(wb.at(2 * i), -b);
        q_form.add(wb.at(2 * i + 1), a);
    }
    q.terms.push_back({1.0, p_form});
    q.terms.push_back({1.0, q_form});
    prog.add_constraint().quadratic(std::move(q));

    VectorXd xw(2 * m);
    for (int i = 0; i < m; ++i) {
        xw(2 * i) = w(i).real();
        xw(2 * i + 1) = w(i).imag();
    }
    const double direct = std::norm(h.dot(w));  // Eigen dot conjugates the first argument
    auto evals = evaluate_constraints(prog, xw);
    CHECK(std::abs(evals[0].value - direct) <= 1e-12 * std::max(1.0, direct));
}

TEST_CASE("analytic gradients match finite differences for every atom kind") {
    RngStream rng(777);
    VariableSpace vs;
    Block x = vs.add_block("x", 5);
    ConvexProgram prog(vs);
    {
        LinearForm f;
        f.add(x.at(0), 1.3);
        f.add(x.at(4), -0.4);
        f.constant = 0.2;
        prog.add_constraint().affine(std::move(f));
    }
    {
        QuadraticAtom q;
        for (int r = 0; r < 3; ++r) {
            LinearForm f;
            for (int i = 0; i < 5; ++i) f.add(x.at(i), 2.0 * rng.next_uniform() - 1.0);
            f.constant = rng.next_uniform() - 0.5;
            q.terms.push_back({0.5 + rng.next_uniform(), std::move(f)});
        }
        prog.add_constraint().quadratic(std::move(q));
    }
    {
        ExponentialAtom e;
        e.scale = 0.8;
        e.exp_index = x.at(2);
        e.denom = 1.7;
        e.linear.add(x.at(3), -1.0);
        prog.add_constraint().exponential(std::move(e));
    }
    {
        NegLogAtom n;
        for (int r = 0; r < 2; ++r) {
            LinearForm f;
            f.add(x.at(r), 0.3);
            f.constant = 4.0;  // keeps arguments positive near the sample box
            n.terms.push_back({1.0 + rng.next_uniform(), std::move(f)});
        }
        prog.add_constraint().neglog(std::move(n));
    }
    for (int pt = 0; pt < 100; ++pt) {
        VectorXd xv(5);
        for (int i = 0; i < 5; ++i) xv(i) = 2.0 * rng.next_uniform() - 1.0;
        check_gradients(prog, xv);
    }
}

TEST_CASE("barrier path objective is monotone across stages") {
    VariableSpace vs;
    Block xb = vs.add_block("x", 6);
    ConvexProgram prog(vs);
    RngStream rng(31);
    LinearForm obj;
    for (int i = 0; i < 6; ++i) obj.add(xb.at(i), 2.0 * rng.next_uniform() - 1.0);
    prog.maximize(obj);
    QuadraticAtom q;
    for (int i = 0; i < 6; ++i) q.terms.push_back({1.0, LinearForm{}.add(xb.at(i), 1.0)});
    Constraint& con = prog.add_constraint();
    con.quadratic(std::move(q));
    con.affine(LinearForm{{}, -4.0});

    const std::string trace = "kernel_trace_test.csv";
    SolveOptions opt;
    opt.trace_path = trace;
    auto sol = solve(prog, VectorXd::Zero(6), opt);
    REQUIRE(sol.status == SolveStatus::Optimal);

    std::ifstream f(trace);
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);  // header
    int prev_stage = -1;
    double stage_last = 0.0;
    std::vector<double> stage_obj;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        const int stage = std::stoi(tok);
        std::getline(ss, tok, ',');
        std::getline(ss, tok, ',');
        std::getline(ss, tok, ',');
        const double objv = std::stod(tok);
        if (stage != prev_stage && prev_stage >= 0) stage_obj.push_back(stage_last);
        prev_stage = stage;
        stage_last = objv;
    }
    stage_obj.push_back(stage_last);
    REQUIRE(stage_obj.size() >= 2);
    for (std::size_t i = 1; i < stage_obj.size(); ++i)
        CHECK(stage_obj[i] >= stage_obj[i - 1] - 1e-9 * std::max(1.0, std::abs(stage_obj[i])));
    std::remove(trace.c_str());
}
