//! Physical constants (SI units).

/// Faraday constant, C/mol.
pub const FARADAY: f64 = 96_485.332_12;

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;

/// Reference temperature for transport properties, K (25 degC).
pub const T_REF: f64 = 298.15;

/// Lower clamp on exchange current density, A/m^2. Keeps the asinh
/// overpotential finite when the particle surface saturates or depletes.
pub const I0_FLOOR: f64 = 1e-8;
