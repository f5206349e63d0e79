#pragma once

// Internal unit system: length nm, time ps, mass amu, energy kJ/mol,
// temperature K. These are mutually consistent: 1 kJ/mol == 1 amu nm^2/ps^2,
// so no hidden conversion factors appear inside force or integration code.
// Conversions to reporting units (m^2/s, mPa s, g/cm^3, bar) happen only at
// I/O boundaries.

namespace egomd::units {

inline constexpr double kBoltzmann = 0.0083144621;  // kJ/(mol K)
inline constexpr double kAvogadro = 6.02214076e23;  // 1/mol

// amu/nm^3 -> g/cm^3
inline constexpr double kDensityToGramPerCm3 = 1e21 / kAvogadro;  // ~1.66054e-3

// nm^2/ps -> m^2/s
inline constexpr double kDiffusionToM2PerS = 1e-6;

// amu/(nm ps) -> Pa s (= kg m^-1 s^-1)
inline constexpr double kViscosityToPaS = 1e18 / kAvogadro;  // ~1.66054e-6

// amu/(nm ps) -> mPa s
inline constexpr double kViscosityToMPaS = kViscosityToPaS * 1e3;

// bar -> kJ/(mol nm^3)
inline constexpr double kBarToInternalPressure = 1e-22 * kAvogadro / 1e3;  // 0.0602214076

inline constexpr double kAtmInBar = 1.01325;

}  // namespace egomd::units
