// dictionary.hpp — monomial observable dictionaries G: R^D -> C^M
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "json.hpp"

namespace koopman {

// Exponent vector of a single monomial term, one entry per state variable.
struct MultiIndex {
    std::vector<int> exponents;

    int degree() const {
        int d = 0;
        for (int e : exponents) d += e;
        return d;
    }
    bool operator==(const MultiIndex& other) const = default;
};

// Ordered family of monomials. Ordering is graded-lex: ascending total degree,
// then lexicographic with x1 ranked before x2 (so degree 2 in two variables
// reads x1^2, x1*x2, x2^2). Immutable in practice: build once, evaluate anywhere.
struct Dictionary {
    int state_dim = 0;
    std::vector<MultiIndex> terms;

    int size() const { return static_cast<int>(terms.size()); }

    // G(x): values are real monomials returned as complex with zero imaginary
    // part, so downstream spectral code is generic over complex dictionaries.
    Eigen::VectorXcd evaluate(const Eigen::VectorXd& x) const;

    // dG/dx: M x D matrix of analytic partial derivatives.
    Eigen::MatrixXd evaluate_jacobian(const Eigen::VectorXd& x) const;

    nlohmann::json to_json() const;
    static Dictionary from_json(const nlohmann::json& j);
};

// All monomials of total degree 1..max_degree (plus the constant term when
// requested), graded-lex ordered.
Dictionary build_monomial_dictionary(int state_dim, int max_degree, bool include_constant);

// Dictionary from an explicit term list; validates distinctness.
Dictionary make_dictionary(int state_dim, std::vector<MultiIndex> terms);

}  // namespace koopman
