#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "metahunt/errors.hpp"
#include "metahunt/linalg.hpp"
#include "metahunt/special_functions.hpp"
#include "metahunt/weight_estimation.hpp"

namespace metahunt {

enum class FeatureKind { identity, polynomial };

/// Deterministic finite-dimensional feature map: per-feature standardization
/// learned on the training covariates, then either the standardized
/// coordinates (identity) or all monomials up to the given total degree.
/// These explicit maps stand in for general kernel feature maps.
struct FeatureMap {
    FeatureKind kind = FeatureKind::identity;
    int degree = 1;
    bool intercept = true;
    bool standardized = false;
    std::vector<double> means;  // learned on training W
    std::vector<double> scales; // strictly positive

    static FeatureMap identity(bool with_intercept = true) {
        FeatureMap f;
        f.kind = FeatureKind::identity;
        f.degree = 1;
        f.intercept = with_intercept;
        return f;
    }

    static FeatureMap polynomial(int degree, bool with_intercept = true) {
        if (degree < 1) throw ArgumentError("FeatureMap: polynomial degree must be >= 1");
        FeatureMap f;
        f.kind = FeatureKind::polynomial;
        f.degree = degree;
        f.intercept = with_intercept;
        return f;
    }

    bool fitted() const { return standardized; }
    std::size_t input_dim() const { return means.size(); }

    void fit_standardization(const std::vector<std::vector<double>>& w) {
        if (w.empty()) throw ArgumentError("FeatureMap: no training covariates");
        standardized = true;
        const std::size_t p = w[0].size();
        means.assign(p, 0.0);
        scales.assign(p, 0.0);
        for (const auto& row : w) {
            if (row.size() != p) throw ArgumentError("FeatureMap: ragged covariates");
            for (std::size_t j = 0; j < p; ++j) means[j] += row[j];
        }
        for (auto& m : means) m /= double(w.size());
        for (const auto& row : w)
            for (std::size_t j = 0; j < p; ++j) {
                const double d = row[j] - means[j];
                scales[j] += d * d;
            }
        for (auto& s : scales) {
            s = std::sqrt(s / double(w.size()));
            if (!(s > 0.0)) s = 1.0; // constant feature
        }
    }

    std::vector<double> standardize(const std::vector<double>& w) const {
        if (w.size() != means.size())
            throw ArgumentError("FeatureMap: covariate dimension " + std::to_string(w.size()) +
                                " does not match training dimension " + std::to_string(means.size()));
        std::vector<double> z(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) z[j] = (w[j] - means[j]) / scales[j];
        return z;
    }

    std::vector<double> destandardize(const std::vector<double>& z) const {
        std::vector<double> w(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) w[j] = z[j] * scales[j] + means[j];
        return w;
    }

    /// psi(W): feature vector of the (standardized) covariates.
    std::vector<double> transform(const std::vector<double>& w) const {
        if (!fitted()) throw ArgumentError("FeatureMap: standardization not fitted");
        const std::vector<double> z = standardize(w);
        std::vector<double> out;
        if (intercept) out.push_back(1.0);
        if (kind == FeatureKind::identity) {
            out.insert(out.end(), z.begin(), z.end());
            return out;
        }
        // all monomials of total degree 1..degree, enumerated by
        // nondecreasing coordinate index for determinism
        std::vector<std::size_t> stack;
        append_monomials(z, 0, 1.0, stack, out);
        return out;
    }

    std::size_t output_dim() const {
        if (!fitted()) throw ArgumentError("FeatureMap: standardization not fitted");
        std::vector<double> probe(means.size(), 0.0);
        return transform(probe).size();
    }

private:
    void append_monomials(const std::vector<double>& z, std::size_t start, double prod,
                          std::vector<std::size_t>& stack, std::vector<double>& out) const {
        if (int(stack.size()) == degree) return;
        for (std::size_t j = start; j < z.size(); ++j) {
            stack.push_back(j);
            const double p = prod * z[j];
            out.push_back(p);
            append_monomials(z, j, p, stack, out);
            stack.pop_back();
        }
    }
};

/// Kernelized Dirichlet regression parameters: alpha_k(W) =
/// exp(coef_k . psi(W)) clamped to [alpha_floor, alpha_cap].
struct DirichletRegParams {
    Matrix coef; // K x p'
    FeatureMap feature_map;
    double alpha_floor = 1e-6;
    double alpha_cap = 1e8;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;

    std::vector<double> alpha_at(const std::vector<double>& w0) const {
        const std::vector<double> psi = feature_map.transform(w0);
        std::vector<double> alpha(coef.rows);
        for (std::size_t k = 0; k < coef.rows; ++k) {
            double z = 0.0;
            for (std::size_t j = 0; j < coef.cols; ++j) z += coef(k, j) * psi[j];
            alpha[k] = std::clamp(std::exp(z), alpha_floor, alpha_cap);
        }
        return alpha;
    }
};

/// Kernelized log-ratio regression parameters: eta_k(W) = coef_k . psi(W)
/// for k = 2..K with category 1 as reference.
struct LogRatioRegParams {
    Matrix coef; // (K-1) x p'
    FeatureMap feature_map;
    double ridge_lambda = 0.0;

    std::size_t n_categories() const { return coef.rows + 1; }
};

using WeightModelParams = std::variant<DirichletRegParams, LogRatioRegParams>;

namespace detail {

/// Interior clamp: coordinates below 1e-6 are raised to 1e-6 and the vector
/// renormalized. Hull projections produce exact zeros and both likelihoods
/// need interior points.
inline std::vector<double> clamp_interior(const SimplexWeights& pi) {
    std::vector<double> p = pi.w;
    double sum = 0.0;
    for (auto& x : p) {
        x = std::max(x, 1e-6);
        sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
}

struct DirichletObjective {
    const std::vector<std::vector<double>>& psi;    // m x p'
    const std::vector<std::vector<double>>& log_pi; // m x K
    double alpha_floor;
    double alpha_cap;

    // log-likelihood, gradient, and (optionally) the full negated Hessian
    // w.r.t. the K x p' coefficients, flattened as q = k*p + j
    double eval(const Matrix& coef, Matrix* grad, Matrix* neg_hessian = nullptr) const {
        const std::size_t m = psi.size();
        const std::size_t k_cat = log_pi[0].size();
        const std::size_t p = psi[0].size();
        if (grad) *grad = Matrix(k_cat, p);
        if (neg_hessian) *neg_hessian = Matrix(k_cat * p, k_cat * p);
        double ll = 0.0;
        std::vector<double> a_vec(k_cat), big_a(k_cat);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<bool> clamped(k_cat, false);
            double alpha_sum = 0.0;
            for (std::size_t k = 0; k < k_cat; ++k) {
                double z = 0.0;
                for (std::size_t j = 0; j < p; ++j) z += coef(k, j) * psi[i][j];
                double a = std::exp(z);
                if (a < alpha_floor) {
                    a = alpha_floor;
                    clamped[k] = true;
                } else if (a > alpha_cap) {
                    a = alpha_cap;
                    clamped[k] = true;
                }
                a_vec[k] = a;
                alpha_sum += a;
            }
            ll += log_gamma(alpha_sum);
            const double dig_sum = grad ? digamma(alpha_sum) : 0.0;
            const double trig_sum = neg_hessian ? trigamma(alpha_sum) : 0.0;
            for (std::size_t k = 0; k < k_cat; ++k) {
                ll += -log_gamma(a_vec[k]) + (a_vec[k] - 1.0) * log_pi[i][k];
                big_a[k] = clamped[k] ? 0.0 : dig_sum - digamma(a_vec[k]) + log_pi[i][k];
                if (grad && !clamped[k]) {
                    const double gk = a_vec[k] * big_a[k];
                    for (std::size_t j = 0; j < p; ++j) (*grad)(k, j) += gk * psi[i][j];
                }
            }
            if (!neg_hessian) continue;
            // d^2 l / dz_k dz_l = [k=l] (a_k A_k + a_k^2 (psi1(S) - psi1(a_k)))
            //                   + [k!=l] a_k a_l psi1(S), zeroed through clamps
            for (std::size_t k = 0; k < k_cat; ++k) {
                if (clamped[k]) continue;
                for (std::size_t l = k; l < k_cat; ++l) {
                    if (clamped[l]) continue;
                    double h_kl = a_vec[k] * a_vec[l] * trig_sum;
                    if (k == l)
                        h_kl += a_vec[k] * big_a[k] - a_vec[k] * a_vec[k] * trigamma(a_vec[k]);
                    for (std::size_t j = 0; j < p; ++j)
                        for (std::size_t j2 = 0; j2 < p; ++j2) {
                            const double v = h_kl * psi[i][j] * psi[i][j2];
                            (*neg_hessian)(k * p + j, l * p + j2) -= v;
                            if (k != l) (*neg_hessian)(l * p + j2, k * p + j) -= v;
                        }
                }
            }
        }
        return ll;
    }
};

} // namespace detail

/// Maximum-likelihood Dirichlet regression by gradient ascent with Armijo
/// backtracking (initial step 1, factor 0.5, cap 5000 iterations).
inline DirichletRegParams fit_dirichlet(const std::vector<std::vector<double>>& w,
                                        const std::vector<SimplexWeights>& pi_hat, FeatureMap map,
                                        double alpha_floor = 1e-6, double alpha_cap = 1e8,
                                        int max_iterations = 5000,
                                        std::vector<double>* ll_trace = nullptr) {
    if (w.size() != pi_hat.size() || w.empty())
        throw ArgumentError("fit_dirichlet: covariate/weight count mismatch");
    const std::size_t k_cat = pi_hat[0].size();
    if (w.size() < k_cat)
        throw ArgumentError("fit_dirichlet: need at least K studies");

    map.fit_standardization(w);
    std::vector<std::vector<double>> psi(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) psi[i] = map.transform(w[i]);
    std::vector<std::vector<double>> log_pi(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (pi_hat[i].size() != k_cat) throw ArgumentError("fit_dirichlet: ragged weights");
        const std::vector<double> p = detail::clamp_interior(pi_hat[i]);
        log_pi[i].resize(k_cat);
        for (std::size_t k = 0; k < k_cat; ++k) log_pi[i][k] = std::log(p[k]);
    }

    const std::size_t p_dim = psi[0].size();
    detail::DirichletObjective obj{psi, log_pi, alpha_floor, alpha_cap};

    DirichletRegParams params;
    params.feature_map = map;
    params.alpha_floor = alpha_floor;
    params.alpha_cap = alpha_cap;
    params.coef = Matrix(k_cat, p_dim); // start at alpha == 1 everywhere

    Matrix grad, neg_hess;
    double ll = obj.eval(params.coef, &grad, &neg_hess);
    if (!std::isfinite(ll))
        throw FitError("fit_dirichlet: non-finite likelihood at the starting point");
    if (ll_trace) ll_trace->push_back(ll);

    // damped-Newton ascent on the exact (K p')^2 Hessian; plain gradient
    // steps stall when alpha spans several orders of magnitude across studies
    for (int it = 0; it < max_iterations; ++it) {
        params.iterations = it + 1;
        double gnorm2 = 0.0;
        for (double g : grad.data) gnorm2 += g * g;
        if (std::sqrt(gnorm2) <= 1e-6 * (1.0 + std::fabs(ll))) {
            params.converged = true;
            break;
        }

        double scale = 0.0;
        for (std::size_t q = 0; q < neg_hess.rows; ++q)
            scale = std::max(scale, std::fabs(neg_hess(q, q)));
        if (scale <= 0.0) scale = 1.0;
        std::vector<double> dir;
        double slope = 0.0;
        for (double tau = 0.0;; tau = (tau == 0.0) ? 1e-10 * scale : tau * 100.0) {
            Matrix damped = neg_hess;
            for (std::size_t q = 0; q < damped.rows; ++q) damped(q, q) += tau;
            try {
                dir = solve_spd(damped, grad.data);
            } catch (const FitError&) {
                continue;
            }
            slope = 0.0;
            for (std::size_t q = 0; q < dir.size(); ++q) slope += grad.data[q] * dir[q];
            if (slope > 0.0) break;
            if (tau > 1e12 * scale) { // fall back to the raw gradient
                dir = grad.data;
                slope = gnorm2;
                break;
            }
        }

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Matrix cand = params.coef;
            for (std::size_t q = 0; q < cand.data.size(); ++q) cand.data[q] += step * dir[q];
            const double cand_ll = obj.eval(cand, nullptr);
            if (std::isfinite(cand_ll) && cand_ll >= ll + 1e-4 * step * slope) {
                params.coef = std::move(cand);
                ll = cand_ll;
                if (ll_trace) ll_trace->push_back(ll);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            params.converged = true; // no ascent direction at floating precision
            break;
        }
        ll = obj.eval(params.coef, &grad, &neg_hess);
        if (!std::isfinite(ll)) throw FitError("fit_dirichlet: likelihood became non-finite");
    }
    params.log_likelihood = ll;
    return params;
}

/// Analytic gradient of the Dirichlet log-likelihood at the given
/// coefficients; exposed for the finite-difference oracle in tests.
inline std::pair<double, Matrix> dirichlet_loglik_grad(const std::vector<std::vector<double>>& w,
                                                       const std::vector<SimplexWeights>& pi_hat,
                                                       const FeatureMap& fitted_map,
                                                       const Matrix& coef, double alpha_floor = 1e-6,
                                                       double alpha_cap = 1e8) {
    std::vector<std::vector<double>> psi(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) psi[i] = fitted_map.transform(w[i]);
    std::vector<std::vector<double>> log_pi(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::vector<double> p = detail::clamp_interior(pi_hat[i]);
        log_pi[i].resize(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) log_pi[i][k] = std::log(p[k]);
    }
    detail::DirichletObjective obj{psi, log_pi, alpha_floor, alpha_cap};
    Matrix grad;
    const double ll = obj.eval(coef, &grad);
    return {ll, grad};
}

/// Per-coordinate ridge regression of eta_k = log(pi_k / pi_1), k = 2..K,
/// on psi(W). Closed form; the intercept column is not penalized, so
/// lambda -> infinity recovers the intercept-only fit.
inline LogRatioRegParams fit_logratio(const std::vector<std::vector<double>>& w,
                                      const std::vector<SimplexWeights>& pi_hat, FeatureMap map,
                                      double ridge_lambda) {
    if (w.size() != pi_hat.size() || w.empty())
        throw ArgumentError("fit_logratio: covariate/weight count mismatch");
    if (!(ridge_lambda >= 0.0)) throw ArgumentError("fit_logratio: lambda must be >= 0");
    const std::size_t k_cat = pi_hat[0].size();
    if (w.size() < k_cat) throw ArgumentError("fit_logratio: need at least K studies");

    map.fit_standardization(w);
    const std::size_t m = w.size();
    std::vector<std::vector<double>> psi(m);
    for (std::size_t i = 0; i < m; ++i) psi[i] = map.transform(w[i]);
    const std::size_t p = psi[0].size();

    Matrix xtx(p, p);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t c = 0; c < p; ++c) xtx(a, c) += psi[i][a] * psi[i][c];
    for (std::size_t a = 0; a < p; ++a) {
        const bool is_intercept = map.intercept && a == 0;
        if (!is_intercept) xtx(a, a) += ridge_lambda;
    }

    LogRatioRegParams params;
    params.feature_map = map;
    params.ridge_lambda = ridge_lambda;
    params.coef = Matrix(k_cat - 1, p); // K = 1 leaves no free parameters

    for (std::size_t k = 1; k < k_cat; ++k) {
        std::vector<double> xty(p, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::vector<double> pi = detail::clamp_interior(pi_hat[i]);
            const double eta = std::log(pi[k] / pi[0]);
            for (std::size_t a = 0; a < p; ++a) xty[a] += psi[i][a] * eta;
        }
        std::vector<double> gamma;
        try {
            gamma = solve_spd(xtx, xty);
        } catch (const FitError&) {
            throw FitError("fit_logratio: singular design even with ridge");
        }
        for (std::size_t a = 0; a < p; ++a) params.coef(k - 1, a) = gamma[a];
    }
    return params;
}

/// Predicted weight vector at new covariates W0. Dirichlet: mean direction
/// alpha / sum(alpha). Log-ratio: softmax of (0, eta_2, ..., eta_K).
inline SimplexWeights predict_weights(const WeightModelParams& params,
                                      const std::vector<double>& w0) {
    if (const auto* d = std::get_if<DirichletRegParams>(&params)) {
        std::vector<double> alpha = d->alpha_at(w0);
        double sum = 0.0;
        for (double a : alpha) sum += a;
        for (auto& a : alpha) a /= sum;
        return SimplexWeights(std::move(alpha));
    }
    const auto& lr = std::get<LogRatioRegParams>(params);
    const std::vector<double> psi = lr.feature_map.transform(w0);
    std::vector<double> eta(lr.n_categories(), 0.0);
    for (std::size_t k = 1; k < eta.size(); ++k)
        for (std::size_t j = 0; j < lr.coef.cols; ++j) eta[k] += lr.coef(k - 1, j) * psi[j];
    const double mx = *std::max_element(eta.begin(), eta.end());
    double sum = 0.0;
    for (auto& e : eta) {
        e = std::exp(e - mx);
        sum += e;
    }
    for (auto& e : eta) e /= sum;
    return SimplexWeights(std::move(eta));
}

inline std::size_t weight_model_k(const WeightModelParams& params) {
    if (const auto* d = std::get_if<DirichletRegParams>(&params)) return d->coef.rows;
    return std::get<LogRatioRegParams>(params).n_categories();
}

} // namespace metahunt
