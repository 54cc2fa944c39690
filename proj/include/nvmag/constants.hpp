#pragma once

// CODATA physical constants and model defaults shared across the toolkit.
namespace nvmag::constants {

inline constexpr double hbar_j_s = 1.054571817e-34;
inline constexpr double mu_bohr_j_per_t = 9.2740100783e-24;
inline constexpr double planck_j_s = 6.62607015e-34;

// Lande g-factor for the NV ground-state electron spin.
inline constexpr double g_factor_default = 2.0;

// Gyromagnetic ratio g*mu_B/h in MHz/mT (1 MHz/mT = 1e9 Hz/T).
inline constexpr double gamma_mhz_per_mt(double g_factor) {
    return g_factor * mu_bohr_j_per_t / planck_j_s * 1e-9;
}

inline constexpr double d_mhz_default = 2870.0;       // axial zero-field splitting
inline constexpr double e_mhz_default = 3.0;          // transverse zero-field splitting
inline constexpr double a_hyperfine_mhz_default = 2.16;  // 14N hyperfine splitting

}  // namespace nvmag::constants
