#include "nvmag/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

namespace nvmag {

void SensitivityInputs::validate() const {
    if (!(contrast > 0.0 && contrast <= 1.0))
        throw std::invalid_argument("SensitivityInputs: contrast must be in (0, 1]");
    if (!(pl_rate_hz > 0.0)) throw std::invalid_argument("SensitivityInputs: pl_rate_hz must be > 0");
    if (!(readout_us > 0.0)) throw std::invalid_argument("SensitivityInputs: readout_us must be > 0");
    if (!(t2_star_us > 0.0)) throw std::invalid_argument("SensitivityInputs: t2_star_us must be > 0");
    if (!(t2_us > 0.0)) throw std::invalid_argument("SensitivityInputs: t2_us must be > 0");
    if (!(t2_us >= t2_star_us))
        throw std::invalid_argument("SensitivityInputs: t2_us must be >= t2_star_us");
}

void PhotonBudget::validate() const {
    if (!(p_sat_mw > 0.0)) throw std::invalid_argument("PhotonBudget: p_sat_mw must be > 0");
    if (!(c_sat_hz > 0.0)) throw std::invalid_argument("PhotonBudget: c_sat_hz must be > 0");
    if (!(enhancement > 0.0)) throw std::invalid_argument("PhotonBudget: enhancement must be > 0");
    if (!(insertion_loss_db >= 0.0))
        throw std::invalid_argument("PhotonBudget: insertion_loss_db must be >= 0");
    if (!(mfd_x_um > 0.0 && mfd_y_um > 0.0))
        throw std::invalid_argument("PhotonBudget: mode field diameters must be > 0");
}

double eta_dc(const SensitivityInputs& in, double g_factor) {
    in.validate();
    if (!(g_factor > 0.0)) throw std::invalid_argument("eta_dc: g_factor must be > 0");
    const double prefactor =
        constants::hbar_j_s / (g_factor * constants::mu_bohr_j_per_t);
    const double readout_s = in.readout_us * 1e-6;
    const double t2_star_s = in.t2_star_us * 1e-6;
    return prefactor / (in.contrast * std::sqrt(in.pl_rate_hz * readout_s)) /
           std::sqrt(t2_star_s);
}

double eta_ac(double eta_dc_value, double t2_star_us, double t2_us) {
    if (!(t2_star_us > 0.0 && t2_us > 0.0))
        throw std::invalid_argument("eta_ac: times must be > 0");
    return eta_dc_value * std::sqrt(t2_star_us / t2_us);
}

double saturation_rate(const PhotonBudget& budget, double p_mw) {
    budget.validate();
    if (!(p_mw >= 0.0)) throw std::invalid_argument("saturation_rate: power must be >= 0");
    const double c_sat = budget.enhancement * budget.c_sat_hz;
    const double p_sat = budget.enhancement * budget.p_sat_mw;
    return c_sat * p_mw / (p_mw + p_sat);
}

double db_to_transmission(double loss_db) {
    if (!(loss_db >= 0.0)) throw std::invalid_argument("db_to_transmission: loss must be >= 0");
    return std::pow(10.0, -loss_db / 10.0);
}

double transmission_to_db(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("transmission_to_db: fraction must be in (0, 1]");
    return -10.0 * std::log10(fraction);
}

double gaussian_mode_overlap(double mfd1_x_um, double mfd1_y_um, double mfd2_x_um,
                             double mfd2_y_um) {
    if (!(mfd1_x_um > 0.0 && mfd1_y_um > 0.0 && mfd2_x_um > 0.0 && mfd2_y_um > 0.0))
        throw std::invalid_argument("gaussian_mode_overlap: MFDs must be > 0");
    auto axis_factor = [](double w1, double w2) { return 2.0 * w1 * w2 / (w1 * w1 + w2 * w2); };
    return axis_factor(mfd1_x_um, mfd2_x_um) * axis_factor(mfd1_y_um, mfd2_y_um);
}

SensitivityReport sensitivity_report(const SensitivityInputs& inputs, const PhotonBudget& budget,
                                     double g_factor) {
    inputs.validate();
    budget.validate();

    SensitivityReport report;
    report.g_factor = g_factor;
    report.inputs = inputs;
    report.budget = budget;

    report.baseline_eta_dc_t = eta_dc(inputs, g_factor);
    report.baseline_eta_ac_t = eta_ac(report.baseline_eta_dc_t, inputs.t2_star_us, inputs.t2_us);

    SensitivityInputs enhanced = inputs;
    enhanced.pl_rate_hz = inputs.pl_rate_hz * budget.enhancement;
    report.enhanced_eta_dc_t = eta_dc(enhanced, g_factor);
    report.enhanced_eta_ac_t = eta_ac(report.enhanced_eta_dc_t, inputs.t2_star_us, inputs.t2_us);

    report.improvement_ratio = std::sqrt(budget.enhancement);
    report.transmission_fraction = db_to_transmission(budget.insertion_loss_db);
    report.enhanced_saturation_rate_hz = budget.enhancement * budget.c_sat_hz;
    report.enhanced_saturation_power_mw = budget.enhancement * budget.p_sat_mw;
    return report;
}

}  // namespace nvmag
