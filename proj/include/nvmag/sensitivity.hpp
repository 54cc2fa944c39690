#pragma once

#include "nvmag/constants.hpp"

namespace nvmag {

struct SensitivityInputs {
    double contrast = 0.03;        // ODMR contrast Lambda
    double pl_rate_hz = 362.4e9;   // detected PL rate C
    double readout_us = 0.5;       // readout duration t_L
    double t2_star_us = 0.5;
    double t2_us = 5.0;

    void validate() const;
};

struct PhotonBudget {
    double p_sat_mw = 11.7;
    double c_sat_hz = 362.4e9;
    double enhancement = 1.0;       // multiplier on both saturation power and rate
    double insertion_loss_db = 0.0;
    double mfd_x_um = 5.0;
    double mfd_y_um = 5.0;

    void validate() const;
};

// Photon-shot-noise-limited DC sensitivity in T/sqrt(Hz):
//   eta_dc = hbar/(g mu_B) * 1/(Lambda sqrt(C t_L)) * 1/sqrt(T2*)
double eta_dc(const SensitivityInputs& in, double g_factor = constants::g_factor_default);

// eta_ac = eta_dc * sqrt(T2*/T2)
double eta_ac(double eta_dc_value, double t2_star_us, double t2_us);

// Saturating PL rate C(P) = k*c_sat*P/(P + k*p_sat) with k the enhancement
// factor applied to both the saturation power and the saturation rate.
double saturation_rate(const PhotonBudget& budget, double p_mw);

double db_to_transmission(double loss_db);
double transmission_to_db(double fraction);

// Separable elliptical-Gaussian overlap of two modes given their field
// diameters; 1 for identical modes, symmetric under swap.
double gaussian_mode_overlap(double mfd1_x_um, double mfd1_y_um, double mfd2_x_um,
                             double mfd2_y_um);

struct SensitivityReport {
    double g_factor = constants::g_factor_default;
    SensitivityInputs inputs;
    PhotonBudget budget;

    double baseline_eta_dc_t = 0.0;   // enhancement = 1
    double baseline_eta_ac_t = 0.0;
    double enhanced_eta_dc_t = 0.0;   // PL rate scaled by budget.enhancement
    double enhanced_eta_ac_t = 0.0;
    double improvement_ratio = 1.0;   // = sqrt(enhancement)

    double transmission_fraction = 1.0;
    double enhanced_saturation_rate_hz = 0.0;
    double enhanced_saturation_power_mw = 0.0;
};

SensitivityReport sensitivity_report(const SensitivityInputs& inputs, const PhotonBudget& budget,
                                     double g_factor = constants::g_factor_default);

}  // namespace nvmag
