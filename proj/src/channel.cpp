#include "jcmp/channel.hpp"

#include "jcmp/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace jcmp {
namespace channel {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

} // namespace

void validate(const ChannelParams& ch) {
    require(ch.ref_gain_K0 > 0.0, "ChannelParams.ref_gain_K0 must be > 0");
    require(ch.ref_dist_d0 > 0.0, "ChannelParams.ref_dist_d0 must be > 0");
    require(ch.pathloss_exp_beta >= 2.0, "ChannelParams.pathloss_exp_beta must be >= 2");
    require(ch.noise_psd_N0 > 0.0, "ChannelParams.noise_psd_N0 must be > 0");
    require(ch.bandwidth_B > 0.0, "ChannelParams.bandwidth_B must be > 0");
}

void validate(const TxMode& m) {
    require(m.rate_Rn > 0.0, "TxMode.rate_Rn must be > 0 (" + m.label + ")");
    require(m.coef_a >= 1.0, "TxMode.coef_a must be >= 1 (" + m.label + ")");
    require(m.coef_g > 0.0, "TxMode.coef_g must be > 0 (" + m.label + ")");
    require(m.thresh_gamma_p >= 0.0, "TxMode.thresh_gamma_p must be >= 0 (" + m.label + ")");
    const double junction = m.coef_a * std::exp(-m.coef_g * m.thresh_gamma_p);
    require(std::abs(junction - 1.0) <= 1e-6,
            "TxMode PER model discontinuous at thresh_gamma_p (" + m.label + ")");
}

void validate(const ModeTable& tbl) {
    require(!tbl.modes.empty(), "ModeTable must not be empty");
    for (const auto& m : tbl.modes) validate(m);
    for (std::size_t i = 1; i < tbl.modes.size(); ++i) {
        require(tbl.modes[i].rate_Rn > tbl.modes[i - 1].rate_Rn,
                "ModeTable rates must be strictly increasing");
    }
}

ModeTable parse_mode_table(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("mode table: ") + e.what());
    }
    if (!j.is_object() || !j.contains("modes") || !j["modes"].is_array())
        throw ConfigError("mode table: expected an object with a \"modes\" array");

    ModeTable tbl;
    for (const auto& rec : j["modes"]) {
        for (const auto& [key, _] : rec.items()) {
            if (key != "label" && key != "rate" && key != "a" && key != "g" &&
                key != "gamma_p_dB")
                throw ConfigError("mode table: unknown key \"" + key + "\"");
        }
        for (const char* key : {"label", "rate", "a", "g", "gamma_p_dB"})
            if (!rec.contains(key))
                throw ConfigError(std::string("mode table: missing key \"") + key + "\"");

        TxMode m;
        m.label = rec["label"].get<std::string>();
        m.rate_Rn = rec["rate"].get<double>();
        m.coef_a = rec["a"].get<double>();
        m.coef_g = rec["g"].get<double>();
        const double gp_file = std::pow(10.0, rec["gamma_p_dB"].get<double>() / 10.0);
        // Snap the threshold to the exact continuity point; published tables
        // round gamma_p to a few decimals.
        if (m.coef_a < 1.0 || m.coef_g <= 0.0)
            throw ConfigError("mode table: a must be >= 1 and g > 0 (" + m.label + ")");
        m.thresh_gamma_p = std::log(m.coef_a) / m.coef_g;
        if (gp_file > 0.0 && std::abs(std::log(gp_file / m.thresh_gamma_p)) > 0.1)
            throw ConfigError("mode table: gamma_p_dB inconsistent with ln(a)/g (" +
                              m.label + ")");
        tbl.modes.push_back(std::move(m));
    }
    try {
        validate(tbl);
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("mode table: ") + e.what());
    }
    return tbl;
}

ModeTable load_mode_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("mode table: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mode_table(ss.str());
}

double path_gain(double d, const ChannelParams& ch) {
    require(d > 0.0, "path_gain: distance must be > 0");
    return ch.ref_gain_K0 * std::pow(d / ch.ref_dist_d0, -ch.pathloss_exp_beta);
}

double noise_power(const ChannelParams& ch) {
    return ch.noise_psd_N0 * ch.bandwidth_B;
}

double mean_snr(double p_tx, double d, const ChannelParams& ch) {
    require(p_tx >= 0.0, "mean_snr: transmit power must be >= 0");
    return p_tx * path_gain(d, ch) / noise_power(ch);
}

double per_instant(double gamma, const TxMode& m) {
    if (gamma < m.thresh_gamma_p) return 1.0;
    return std::min(1.0, m.coef_a * std::exp(-m.coef_g * gamma));
}

double per_rayleigh(double gamma_bar, const TxMode& m) {
    require(gamma_bar > 0.0, "per_rayleigh: mean SNR must be > 0");
    const double a = m.coef_a, g = m.coef_g, gp = m.thresh_gamma_p;
    // -expm1 keeps the first term accurate when gp/gamma_bar is tiny; both
    // terms are positive, so the sum stays accurate down to PERs near 1e-15.
    const double per = -std::expm1(-gp / gamma_bar) +
                       a / (1.0 + g * gamma_bar) *
                           std::exp(-gp * (1.0 + g * gamma_bar) / gamma_bar);
    return std::clamp(per, 0.0, 1.0);
}

double required_mean_snr(double eps, const TxMode& m) {
    require(eps > 0.0 && eps < 1.0, "required_mean_snr: eps must be in (0,1)");

    // per_rayleigh is strictly decreasing with range (0,1); bracket the root
    // around the small-eps asymptote (gp + 1/g) / eps and bisect in the log
    // domain.
    const double estimate = (m.thresh_gamma_p + 1.0 / m.coef_g) / eps;
    double lo = estimate / 16.0, hi = estimate * 16.0;
    for (int i = 0; i < 64 && per_rayleigh(lo, m) < eps; ++i) lo /= 16.0;
    for (int i = 0; i < 64 && per_rayleigh(hi, m) > eps; ++i) hi *= 16.0;

    double mid = std::sqrt(lo * hi);
    for (int i = 0; i < 200; ++i) {
        mid = std::sqrt(lo * hi);
        const double per = per_rayleigh(mid, m);
        if (std::abs(per - eps) <= 1e-13 * eps) break;
        if (per > eps)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return mid;
}

LinkPlan min_link_energy(double d, double eps, double data_D,
                         const ChannelParams& ch, const ModeTable& tbl,
                         double p_max) {
    require(d > 0.0, "min_link_energy: distance must be > 0");
    require(eps > 0.0 && eps < 1.0, "min_link_energy: eps must be in (0,1)");
    require(data_D > 0.0, "min_link_energy: data volume must be > 0");
    require(p_max > 0.0, "min_link_energy: p_max must be > 0");

    const double gain = path_gain(d, ch);
    const double noise = noise_power(ch);

    LinkPlan best;
    double best_energy = std::numeric_limits<double>::infinity();
    double min_power = std::numeric_limits<double>::infinity();

    for (std::size_t n = 0; n < tbl.modes.size(); ++n) {
        const TxMode& m = tbl.modes[n];
        const double p = required_mean_snr(eps, m) * noise / gain;
        min_power = std::min(min_power, p);
        if (p > p_max) continue;
        const double energy = p * data_D / (m.rate_Rn * ch.bandwidth_B);
        if (energy < best_energy) {
            best_energy = energy;
            best = LinkPlan{static_cast<int>(n), p, eps, energy};
        }
    }

    if (best.mode_index < 0) {
        throw InfeasibleError("min_link_energy: no mode feasible at p_max",
                              min_power - p_max);
    }
    return best;
}

} // namespace channel
} // namespace jcmp
