#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace genrs {

/// Handle to a contiguous run of real variables.
struct Block {
    int offset = 0;
    int size = 0;

    int at(int i) const {
        if (i < 0 || i >= size) throw std::out_of_range("Block::at");
        return offset + i;
    }
};

/// Named real variable blocks making up the optimization vector.
/// Complex quantities are stored as interleaved (re, im) pairs.  Each
/// coordinate carries a positive scale (its expected magnitude) that the
/// solver uses to equilibrate the Newton systems; scales never change
/// the mathematical program.
class VariableSpace {
public:
    Block add_block(const std::string& name, int size, double scale = 1.0);

    int dimension() const { return dim_; }
    const Block& block(const std::string& name) const;
    bool has_block(const std::string& name) const;

    void set_scale(int index, double scale);
    double scale(int index) const { return scales_.at(index); }
    const std::vector<double>& scales() const { return scales_; }

private:
    struct Entry {
        std::string name;
        Block block;
    };
    std::vector<Entry> entries_;
    std::vector<double> scales_;
    int dim_ = 0;
};

/// Sparse affine function c·x + b.
struct LinearForm {
    std::vector<std::pair<int, double>> coeffs;
    double constant = 0.0;

    LinearForm& add(int index, double coeff) {
        if (coeff != 0.0) coeffs.emplace_back(index, coeff);
        return *this;
    }
    double value_at(const Eigen::VectorXd& x) const {
        double v = constant;
        for (const auto& [i, c] : coeffs) v += c * x(i);
        return v;
    }
};

/// c·x + b
struct AffineAtom {
    LinearForm form;
};

/// Σ_r weight_r · form_r(x)², weights ≥ 0 (PSD by construction).
struct QuadraticAtom {
    struct Term {
        double weight = 1.0;
        LinearForm form;
    };
    std::vector<Term> terms;
};

/// scale · 2^(x_i / denom) + linear(x), scale > 0.
struct ExponentialAtom {
    double scale = 1.0;
    int exp_index = 0;
    double denom = 1.0;
    LinearForm linear;
};

/// −Σ_m weight_m · log2(form_m(x)), weights > 0; domain form_m(x) > 0.
struct NegLogAtom {
    struct Term {
        double weight = 1.0;
        LinearForm form;
    };
    std::vector<Term> terms;
};

using ConstraintAtom = std::variant<AffineAtom, QuadraticAtom, ExponentialAtom, NegLogAtom>;

/// Σ atoms ≤ 0.  `scale` is the typical magnitude of the left-hand side,
/// used for feasibility margins and phase-I equilibration.
struct Constraint {
    std::vector<ConstraintAtom> atoms;
    double scale = 1.0;

    Constraint& affine(LinearForm f) {
        atoms.emplace_back(AffineAtom{std::move(f)});
        return *this;
    }
    Constraint& quadratic(QuadraticAtom q) {
        atoms.emplace_back(std::move(q));
        return *this;
    }
    Constraint& exponential(ExponentialAtom e) {
        atoms.emplace_back(std::move(e));
        return *this;
    }
    Constraint& neglog(NegLogAtom n) {
        atoms.emplace_back(std::move(n));
        return *this;
    }
};

/// Linear objective plus smooth convex constraint atoms and linear
/// equalities.  The sense is always maximize.
class ConvexProgram {
public:
    explicit ConvexProgram(VariableSpace space) : space_(std::move(space)) {}

    VariableSpace& space() { return space_; }
    const VariableSpace& space() const { return space_; }
    int dimension() const { return space_.dimension(); }

    void maximize(LinearForm objective) { objective_ = std::move(objective); }
    const LinearForm& objective() const { return objective_; }

    Constraint& add_constraint(double scale = 1.0) {
        constraints_.emplace_back();
        constraints_.back().scale = scale;
        return constraints_.back();
    }
    /// form(x) = 0
    void add_equality(LinearForm form) { equalities_.push_back(std::move(form)); }

    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<LinearForm>& equalities() const { return equalities_; }
    int num_constraints() const { return static_cast<int>(constraints_.size()); }
    int num_equalities() const { return static_cast<int>(equalities_.size()); }

private:
    VariableSpace space_;
    LinearForm objective_;
    std::vector<Constraint> constraints_;
    std::vector<LinearForm> equalities_;
};

/// Per-constraint evaluation result.
struct ConstraintEval {
    double value = 0.0;
    Eigen::VectorXd gradient;
    bool in_domain = true;
};

/// Values and dense gradients of every constraint at x.  Throws only on
/// dimension mismatch; out-of-domain constraints are flagged instead.
std::vector<ConstraintEval> evaluate_constraints(const ConvexProgram& program,
                                                 const Eigen::VectorXd& x);

}  // namespace genrs
