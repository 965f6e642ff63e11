#pragma once

#include <cstdint>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/model.hpp"

namespace isac {

/// U_m = [A_t, dA_t/dtheta, dA_t/dphi, a_t(user)]: N_t x (3K + 1). With the
/// G = A_r Sigma A_t^H response these span the optimal transmit covariance.
CMat basis(const ChannelRealization& r, int m, const SystemConfig& cfg);

struct XiPair {
    CMat xi_c; ///< N_R x N_R, Hermitian rank one
    CMat xi_s; ///< N_R x N_R, Hermitian PSD
};

/// xi_c[a,b] = (D D^H h)^H u_a u_b^H (D D^H h), xi_s = U^H A_t Sigma Sigma^* A_t^H U.
XiPair xi_matrices(const ChannelRealization& r, const BeamspaceDictionary& dict, int m,
                   const SystemConfig& cfg);

/// (Xi_c + gamma Xi_s) scaled to Frobenius norm sqrt(P_t), with negative
/// eigenvalues floored at zero and the norm restored. Throws
/// std::invalid_argument for a zero combination.
CMat optimal_lambda(const CMat& xi_c, const CMat& xi_s, double gamma, double p_total);

struct ClosedForm {
    double r_star = 0.0;   ///< bits, summed over subcarriers
    double crb_star = 0.0; ///< +inf when invalid
    /// false when the CRB denominator or a rate argument is non-positive.
    bool valid = true;
};

/// Substituted rate and CRB at the Pareto optimum, one XiPair per subcarrier.
/// The double sums use the entry products exactly as printed (real part);
/// the CRB denominator is summed over subcarriers.
ClosedForm pareto_closed_form(const std::vector<XiPair>& xi, double gamma, double p_total,
                              double sigma_c2);
/// Same quantities through an explicit Lambda per subcarrier.
ClosedForm pareto_from_lambda(const std::vector<XiPair>& xi, const std::vector<CMat>& lambda,
                              double sigma_c2);

/// sum_m sum_k [argmax user_m == argmax target_{k,m}].
int peak_similarity(const BeamspaceProfile& profile);

/// Sparse approximation of xi_c, xi_s from the peak coincidences at one
/// subcarrier (`hits[k]` is true when target k peaks with the user).
XiPair xi_approximation(const std::vector<bool>& hits, const CVec& sigma);

struct Prop1Report {
    std::vector<double> offsets;
    std::vector<double> mean_correlation;
    std::vector<double> mean_similarity;
    std::vector<double> mean_r_star;
    std::vector<double> mean_crb_star;
    std::vector<double> mean_inv_crb_star;
    double spearman_cor_rate = 0.0;
    double spearman_cor_inv_crb = 0.0;
    double spearman_offset_similarity = 0.0; ///< expected negative
    double spearman_similarity_cor = 0.0;
    int invalid_trials = 0;
    bool degenerate = false; ///< fewer than two groups
    bool pass = false;
};

/// Spearman rank correlation (average ranks for ties); 0 when undefined.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// For each offset (used as the MSIA of the scene) averages Cor (no TTDs),
/// the peak similarity and the closed-form pair over n_trials seeded scenes.
Prop1Report verify_proposition1(const SystemConfig& cfg, int n_trials,
                                const std::vector<double>& offsets, double gamma,
                                std::uint64_t base_seed);

} // namespace isac
