#ifndef JCMP_CHANNEL_HPP
#define JCMP_CHANNEL_HPP

#include <string>
#include <vector>

namespace jcmp {
namespace channel {

// Radio environment: power-law pathloss referenced at d0, flat noise floor.
struct ChannelParams {
    double ref_gain_K0 = 1e-4;      // linear gain at the reference distance
    double ref_dist_d0 = 1.0;       // m
    double pathloss_exp_beta = 3.68;
    double noise_psd_N0 = 1e-13;    // W/Hz
    double bandwidth_B = 20e6;      // Hz
};

// One adaptive modulation-and-coding mode. The packet error rate over an
// AWGN channel is approximated as
//   PER(gamma) = 1                     for gamma <  thresh_gamma_p
//   PER(gamma) = coef_a * exp(-coef_g * gamma)   otherwise,
// continuous at the threshold: coef_a * exp(-coef_g * thresh_gamma_p) = 1.
struct TxMode {
    std::string label;
    double rate_Rn = 0.0;        // information bits per symbol
    double coef_a = 1.0;
    double coef_g = 0.0;         // 1 / linear SNR
    double thresh_gamma_p = 0.0; // linear SNR
};

struct ModeTable {
    std::vector<TxMode> modes;
};

// Per-link transmission decision produced by the power/mode sizing routines.
struct LinkPlan {
    int mode_index = -1;
    double tx_power = 0.0;   // W
    double per_budget = 0.0; // averaged PER this power was sized for
    double energy = 0.0;     // J, for the data volume the plan was made for
};

// Throw std::domain_error / ConfigError when an invariant fails.
void validate(const ChannelParams& ch);
void validate(const TxMode& m);
void validate(const ModeTable& tbl);

// Parse a mode table from JSON text: {"modes":[{label, rate, a, g, gamma_p_dB}, ...]}.
// gamma_p_dB is converted to linear and then snapped to ln(a)/g so the
// piecewise PER model is exactly continuous regardless of rounding in the file.
ModeTable parse_mode_table(const std::string& json_text);
ModeTable load_mode_table(const std::string& path);

// K0 * (d / d0)^(-beta). Strictly decreasing in d.
double path_gain(double d, const ChannelParams& ch);

// N0 * B in watts.
double noise_power(const ChannelParams& ch);

// Fading-averaged received SNR, linear: p_tx * gain(d) / noise_power.
double mean_snr(double p_tx, double d, const ChannelParams& ch);

// Instantaneous-SNR packet error rate of one mode. In [0, 1], non-increasing.
double per_instant(double gamma, const TxMode& m);

// PER averaged over Rayleigh fading (exponential SNR with mean gamma_bar):
//   1 - exp(-gp/gb) + a/(1 + g*gb) * exp(-gp*(1 + g*gb)/gb)
double per_rayleigh(double gamma_bar, const TxMode& m);

// Inverse of per_rayleigh in its first argument, solved by bisection to
// |per_rayleigh(result) - eps| <= 1e-10 * eps.
double required_mean_snr(double eps, const TxMode& m);

// Cheapest way to push data_D bits over one link of length d while keeping the
// averaged PER at eps and the transmit power at or below p_max. Considers every
// mode; ties resolve to the lower mode index. Throws InfeasibleError (with the
// minimum power shortfall) when no mode fits under the cap.
LinkPlan min_link_energy(double d, double eps, double data_D,
                         const ChannelParams& ch, const ModeTable& tbl,
                         double p_max);

} // namespace channel
} // namespace jcmp

#endif
