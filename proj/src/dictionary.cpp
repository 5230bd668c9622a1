#include "koopman/dictionary.hpp"

#include <algorithm>
#include <set>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

// Graded-lex: lower total degree first; within a degree, higher power on the
// earlier variable first ((2,0) before (1,1) before (0,2)).
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(),
                                        a.exponents.begin(), a.exponents.end());
}

void enumerate_degree(int state_dim, int degree, int var, MultiIndex& scratch,
                      std::vector<MultiIndex>& out) {
    if (var == state_dim - 1) {
        scratch.exponents[var] = degree;
        out.push_back(scratch);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        scratch.exponents[var] = e;
        enumerate_degree(state_dim, degree - e, var + 1, scratch, out);
    }
}

}  // namespace

Dictionary build_monomial_dictionary(int state_dim, int max_degree, bool include_constant) {
    if (state_dim < 1) throw InputError("dictionary: state_dim must be >= 1");
    if (max_degree < 1) throw InputError("dictionary: max_degree must be >= 1");

    std::vector<MultiIndex> terms;
    MultiIndex scratch;
    scratch.exponents.assign(static_cast<std::size_t>(state_dim), 0);
    if (include_constant) terms.push_back(scratch);
    for (int d = 1; d <= max_degree; ++d) enumerate_degree(state_dim, d, 0, scratch, terms);
    std::sort(terms.begin(), terms.end(), graded_lex_less);
    return Dictionary{state_dim, std::move(terms)};
}

Dictionary make_dictionary(int state_dim, std::vector<MultiIndex> terms) {
    if (state_dim < 1) throw InputError("dictionary: state_dim must be >= 1");
    std::set<std::vector<int>> seen;
    for (const auto& t : terms) {
        if (static_cast<int>(t.exponents.size()) != state_dim)
            throw InputError("dictionary: term exponent length != state_dim");
        for (int e : t.exponents)
            if (e < 0) throw InputError("dictionary: negative exponent");
        if (!seen.insert(t.exponents).second)
            throw InputError("dictionary: duplicate term");
    }
    return Dictionary{state_dim, std::move(terms)};
}

Eigen::VectorXcd Dictionary::evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != state_dim)
        throw InputError("dictionary evaluate: state vector has wrong dimension");
    Eigen::VectorXcd g(size());
    for (int m = 0; m < size(); ++m) {
        double v = 1.0;
        for (int j = 0; j < state_dim; ++j) {
            const int e = terms[static_cast<std::size_t>(m)].exponents[static_cast<std::size_t>(j)];
            for (int k = 0; k < e; ++k) v *= x[j];
        }
        g[m] = std::complex<double>(v, 0.0);
    }
    return g;
}

Eigen::MatrixXd Dictionary::evaluate_jacobian(const Eigen::VectorXd& x) const {
    if (x.size() != state_dim)
        throw InputError("dictionary jacobian: state vector has wrong dimension");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(size(), state_dim);
    for (int m = 0; m < size(); ++m) {
        const auto& exps = terms[static_cast<std::size_t>(m)].exponents;
        for (int j = 0; j < state_dim; ++j) {
            const int ej = exps[static_cast<std::size_t>(j)];
            if (ej == 0) continue;
            // d/dx_j of prod x_i^{e_i} = e_j x_j^{e_j-1} prod_{i!=j} x_i^{e_i}
            double v = static_cast<double>(ej);
            for (int i = 0; i < state_dim; ++i) {
                const int e = (i == j) ? exps[static_cast<std::size_t>(i)] - 1
                                       : exps[static_cast<std::size_t>(i)];
                for (int k = 0; k < e; ++k) v *= x[i];
            }
            jac(m, j) = v;
        }
    }
    return jac;
}

nlohmann::json Dictionary::to_json() const {
    int max_degree = 0;
    bool has_constant = false;
    nlohmann::json term_list = nlohmann::json::array();
    for (const auto& t : terms) {
        max_degree = std::max(max_degree, t.degree());
        if (t.degree() == 0) has_constant = true;
        term_list.push_back(t.exponents);
    }
    return {{"state_dim", state_dim},
            {"include_constant", has_constant},
            {"max_degree", max_degree},
            {"terms", term_list}};
}

Dictionary Dictionary::from_json(const nlohmann::json& j) {
    const int state_dim = j.at("state_dim").get<int>();
    std::vector<MultiIndex> terms;
    for (const auto& t : j.at("terms")) {
        MultiIndex mi;
        mi.exponents = t.get<std::vector<int>>();
        terms.push_back(std::move(mi));
    }
    return make_dictionary(state_dim, std::move(terms));
}

}  // namespace koopman
