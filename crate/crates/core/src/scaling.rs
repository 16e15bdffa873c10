//! Laboratory units to the dimensionless control set and back.
//!
//! With modulation frequency `ω`, gravity `g`, mass `m` and evanescent decay
//! wavenumber `k`, the scaled variables are `z = z̃ω²/g`, `p = p̃ω/(mg)` and
//! `t = ωt̃`. The Hamiltonian then reads
//!
//! ```text
//! H = p²/2 + z + V0 · exp(-κ (z - λ sin t))
//! ```
//!
//! with `V0 = ħω²Ω/(4mg²)`, `κ = 2kg/ω²`, `λ = ω²ε/(2kg)` and the commutator
//! `[z, p] = i·kbar`, `kbar = ħω³/(mg²)`.

use crate::error::ParamError;
use crate::math;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;
/// Terrestrial gravity in m/s².
pub const STANDARD_GRAVITY: f64 = 9.8;
/// Modulation strength above which classical diffusion becomes global.
pub const LAMBDA_CRITICAL: f64 = 0.24;
/// Saturation value of the mirror potential; keeps the wall finite.
pub const POTENTIAL_CEILING: f64 = 1e300;

/// Experimental parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabParams {
    /// Atomic mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Evanescent-wave decay wavenumber `k`, 1/m. The intensity falls as `exp(-2kz)`.
    pub decay_wavenumber: f64,
    /// Modulation angular frequency `ω`, rad/s.
    pub mod_frequency: f64,
    /// Modulation depth `ε` of the intensity exponent.
    pub mod_amplitude: f64,
    /// Effective Rabi frequency `Ω_eff`, rad/s.
    pub rabi_eff: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
}

impl LabParams {
    /// Cesium atoms on a mirror with a 0.55 μm decay length and modulation
    /// depth 0.55. Frequency and Rabi frequency must still be chosen.
    pub fn cesium(mod_frequency: f64, rabi_eff: f64) -> Self {
        LabParams {
            mass: 2.2e-25,
            gravity: STANDARD_GRAVITY,
            decay_wavenumber: 1.0 / 0.55e-6,
            mod_frequency,
            mod_amplitude: 0.55,
            rabi_eff,
            hbar: HBAR,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        ParamError::check_positive("mass", self.mass)?;
        ParamError::check_positive("gravity", self.gravity)?;
        ParamError::check_positive("decay_wavenumber", self.decay_wavenumber)?;
        ParamError::check_positive("mod_frequency", self.mod_frequency)?;
        ParamError::check_positive("hbar", self.hbar)?;
        ParamError::check_non_negative("mod_amplitude", self.mod_amplitude)?;
        ParamError::check_non_negative("rabi_eff", self.rabi_eff)?;
        Ok(())
    }
}

/// The dimensionless control set consumed by every dynamics module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    /// Mirror strength `V0`.
    pub v0: f64,
    /// Mirror steepness `κ`.
    pub kappa: f64,
    /// Modulation strength `λ`; the effective mirror surface sits at `λ sin t`.
    pub lambda: f64,
    /// Scaled Planck constant.
    pub kbar: f64,
}

impl ScaledParams {
    pub fn new(v0: f64, kappa: f64, lambda: f64, kbar: f64) -> Result<Self, ParamError> {
        let params = ScaledParams { v0, kappa, lambda, kbar };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        ParamError::check_non_negative("v0", self.v0)?;
        ParamError::check_positive("kappa", self.kappa)?;
        ParamError::check_non_negative("lambda", self.lambda)?;
        ParamError::check_positive("kbar", self.kbar)?;
        Ok(())
    }

    /// Position of the effective mirror surface at time `t`.
    #[inline]
    pub fn mirror_position(&self, t: f64) -> f64 {
        self.lambda * math::sin(t)
    }

    /// Velocity of the effective mirror surface at time `t`.
    #[inline]
    pub fn mirror_velocity(&self, t: f64) -> f64 {
        self.lambda * math::cos(t)
    }

    /// Mirror potential `V0 exp(-κ(z - λ sin t))`, saturated at [`POTENTIAL_CEILING`].
    #[inline]
    pub fn mirror_potential(&self, z: f64, t: f64) -> f64 {
        saturated_exp_scaled(self.v0, -self.kappa * (z - self.mirror_position(t)))
    }

    /// Total potential: gravity plus mirror.
    #[inline]
    pub fn potential(&self, z: f64, t: f64) -> f64 {
        z + self.mirror_potential(z, t)
    }

    /// Force `-∂V/∂z = -1 + κ V0 exp(-κ(z - λ sin t))`, saturated.
    #[inline]
    pub fn force(&self, z: f64, t: f64) -> f64 {
        let wall = self.mirror_potential(z, t);
        let push =
            if wall >= POTENTIAL_CEILING { POTENTIAL_CEILING } else { (self.kappa * wall).min(POTENTIAL_CEILING) };
        push - 1.0
    }
}

/// `amplitude · exp(arg)` clamped to `[0, POTENTIAL_CEILING]`.
#[inline]
pub(crate) fn saturated_exp_scaled(amplitude: f64, arg: f64) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    let value = amplitude * math::exp(arg);
    if value.is_finite() {
        value.min(POTENTIAL_CEILING)
    } else {
        POTENTIAL_CEILING
    }
}

/// The physical quantities needed to map a scaled parameter set back to lab units.
///
/// The scaled set has four entries and the lab set seven, so three of them
/// must be fixed. The modulation frequency follows from `kbar`; if an anchor
/// frequency is supplied it has to agree with that value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabAnchor {
    pub mass: f64,
    pub gravity: f64,
    pub hbar: f64,
    pub mod_frequency: Option<f64>,
}

impl LabAnchor {
    pub fn new(mass: f64, gravity: f64, hbar: f64) -> Self {
        LabAnchor { mass, gravity, hbar, mod_frequency: None }
    }

    pub fn with_frequency(mut self, mod_frequency: f64) -> Self {
        self.mod_frequency = Some(mod_frequency);
        self
    }
}

pub fn to_dimensionless(lab: &LabParams) -> Result<ScaledParams, ParamError> {
    lab.validate()?;
    let LabParams { mass: m, gravity: g, decay_wavenumber: k, mod_frequency: w, .. } = *lab;
    let w2 = w * w;
    Ok(ScaledParams {
        v0: lab.hbar * w2 * lab.rabi_eff / (4.0 * m * g * g),
        kappa: 2.0 * k * g / w2,
        lambda: w2 * lab.mod_amplitude / (2.0 * k * g),
        kbar: lab.hbar * w2 * w / (m * g * g),
    })
}

/// Frequency at which a particle of the anchor's mass has scaled Planck constant `kbar`.
pub fn frequency_for_kbar(kbar: f64, mass: f64, gravity: f64, hbar: f64) -> f64 {
    math::cbrt(kbar * mass * gravity * gravity / hbar)
}

pub fn to_lab(scaled: &ScaledParams, anchor: &LabAnchor) -> Result<LabParams, ParamError> {
    scaled.validate()?;
    ParamError::check_positive("anchor.mass", anchor.mass)?;
    ParamError::check_positive("anchor.gravity", anchor.gravity)?;
    ParamError::check_positive("anchor.hbar", anchor.hbar)?;
    let (m, g, hbar) = (anchor.mass, anchor.gravity, anchor.hbar);
    let w = frequency_for_kbar(scaled.kbar, m, g, hbar);
    if let Some(given) = anchor.mod_frequency {
        ParamError::check_positive("anchor.mod_frequency", given)?;
        if ((given - w) / w).abs() > 1e-9 {
            return Err(ParamError::InconsistentAnchor { given, implied: w });
        }
    }
    let w2 = w * w;
    let k = scaled.kappa * w2 / (2.0 * g);
    Ok(LabParams {
        mass: m,
        gravity: g,
        decay_wavenumber: k,
        mod_frequency: w,
        mod_amplitude: scaled.kappa * scaled.lambda,
        rabi_eff: 4.0 * m * g * g * scaled.v0 / (hbar * w2),
        hbar,
    })
}

/// Scaled energy `p²/2 + z + V0 exp(-κ(z - λ sin t))`.
#[inline]
pub fn scaled_hamiltonian_value(z: f64, p: f64, t: f64, params: &ScaledParams) -> f64 {
    0.5 * p * p + params.potential(z, t)
}
