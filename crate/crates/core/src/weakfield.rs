//! Closed-form weak-field solutions.
//!
//! In the weak-drive limit only the five amplitudes `C_g0, C_g1, C_e0, C_g2,
//! C_e1` matter. Every formula here is evaluated in complex arithmetic on the
//! detuned rates `κ(1+iΦ)` and `(γ/2)(1+iΔ)`, so resonant and detuned cases
//! share one code path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockspace::{Channel, Level, ModelParams, PureState};
use crate::scalar::{c, czero, re, Cplx, Real};

/// Complex damping rates after folding in the detunings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates<T: Real> {
    /// `κ(1 + iΦ)`
    pub kappa: Cplx<T>,
    /// `(γ/2)(1 + iΔ)`
    pub gamma_half: Cplx<T>,
}

/// Applies the detuning substitutions `κ → κ(1+iΦ)`, `γ/2 → (γ/2)(1+iΔ)`.
pub fn apply_detuning<T: Real>(params: &ModelParams<T>) -> EffectiveRates<T> {
    let half = T::lit(0.5);
    EffectiveRates {
        kappa: c(T::one(), params.phi) * params.kappa,
        gamma_half: c(T::one(), params.delta) * (params.gamma * half),
    }
}

/// The five amplitudes kept in the weak-field truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFieldAmplitudes<T: Real> {
    pub c_g0: Cplx<T>,
    pub c_g1: Cplx<T>,
    pub c_e0: Cplx<T>,
    pub c_g2: Cplx<T>,
    pub c_e1: Cplx<T>,
}

impl<T: Real> WeakFieldAmplitudes<T> {
    pub fn as_array(&self) -> [Cplx<T>; 5] {
        [self.c_g0, self.c_g1, self.c_e0, self.c_g2, self.c_e1]
    }

    /// `<a†a>` carried by these amplitudes: `|C_g1|² + 2|C_g2|² + |C_e1|²`.
    pub fn photon_number(&self) -> T {
        self.c_g1.norm_sqr() + T::lit(2.0) * self.c_g2.norm_sqr() + self.c_e1.norm_sqr()
    }

    /// Embeds the amplitudes in a truncated state vector (unnormalized).
    pub fn to_state(&self, n_max: usize) -> Result<PureState<T>> {
        let mut s = PureState::zero(n_max);
        s.set(0, Level::Ground, self.c_g0)?;
        s.set(1, Level::Ground, self.c_g1)?;
        s.set(0, Level::Excited, self.c_e0)?;
        s.set(2, Level::Ground, self.c_g2)?;
        s.set(1, Level::Excited, self.c_e1)?;
        Ok(s)
    }

    pub fn from_state(state: &PureState<T>) -> Self {
        Self {
            c_g0: state.amplitude(0, Level::Ground),
            c_g1: state.amplitude(1, Level::Ground),
            c_e0: state.amplitude(0, Level::Excited),
            c_g2: state.amplitude(2, Level::Ground),
            c_e1: state.amplitude(1, Level::Excited),
        }
    }
}

/// Order-F steady state of the weak-field amplitude equations.
pub fn steady_state_analytic<T: Real>(params: &ModelParams<T>) -> Result<WeakFieldAmplitudes<T>> {
    params.validate()?;
    let rates = apply_detuning(params);
    let g = params.g;
    let f = params.drive;
    let k = rates.kappa;
    let kg = rates.kappa + rates.gamma_half;
    let denom = k * kg + g * g;
    if denom.norm() == T::zero() {
        return Err(Error::InvalidParams {
            field: "g",
            reason: "g^2 + kappa(kappa + gamma/2) vanishes".into(),
        });
    }
    let half = T::lit(0.5);
    Ok(WeakFieldAmplitudes {
        c_g0: re(T::one()),
        c_g1: czero(),
        c_e0: czero(),
        c_g2: f * half * kg / denom,
        c_e1: -(f * g) / (denom * T::lit(2.0).sqrt()),
    })
}

/// Steady-state `<a†a> = 2|C_g2|² + |C_e1|²` of the no-jump steady state.
pub fn mean_photon_analytic<T: Real>(params: &ModelParams<T>) -> Result<T> {
    Ok(steady_state_analytic(params)?.photon_number())
}

/// Rates governing the one-quantum conditional evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneQuantumEvolution<T: Real> {
    /// `κ/2 + γ/4`
    pub mu: Cplx<T>,
    /// `κ/2 − γ/4`
    pub delta_rate: Cplx<T>,
    /// `Ω`, principal root of `(κ − γ/2)² − 4g²`.
    pub omega: Cplx<T>,
    pub g: T,
}

impl<T: Real> OneQuantumEvolution<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let rates = apply_detuning(params);
        let half = T::lit(0.5);
        Self {
            mu: (rates.kappa + rates.gamma_half) * half,
            delta_rate: (rates.kappa - rates.gamma_half) * half,
            omega: big_omega(params),
            g: params.g,
        }
    }

    /// Evolves `(C_g1, C_e0)` by `tau`. The result does not depend on which
    /// square-root branch `Ω` takes: `cosh(Ωτ/2)` and `sinh(Ωτ/2)/Ω` are both
    /// even in `Ω`.
    pub fn evolve(&self, c_g1: Cplx<T>, c_e0: Cplx<T>, tau: T) -> (Cplx<T>, Cplx<T>) {
        let half = T::lit(0.5);
        let x = self.omega * tau;
        let cosh = (x * half).cosh();
        // (2/Ω) sinh(Ωτ/2)
        let sinh_over = if x.norm() < T::lit(1e-4) {
            let x2 = x * x;
            (re(T::one()) + x2 / T::lit(24.0) + x2 * x2 / T::lit(1920.0)) * tau
        } else {
            (x * half).sinh() * T::lit(2.0) / self.omega
        };
        let decay = (-self.mu * tau).exp();
        let g = self.g;
        let new_g1 = decay * (c_g1 * cosh + (c_e0 * g - self.delta_rate * c_g1) * sinh_over);
        let new_e0 = decay * (c_e0 * cosh + (self.delta_rate * c_e0 - c_g1 * g) * sinh_over);
        (new_g1, new_e0)
    }
}

/// `Ω = √((κ − γ/2)² − 4g²)` on the detuned rates, principal branch.
pub fn big_omega<T: Real>(params: &ModelParams<T>) -> Cplx<T> {
    let rates = apply_detuning(params);
    let d = rates.kappa - rates.gamma_half;
    (d * d - re(T::lit(4.0) * params.g * params.g)).sqrt()
}

/// Unnormalized one-quantum amplitudes a time `tau` after preparation.
pub fn conditional_evolution_analytic<T: Real>(
    c_g1: Cplx<T>,
    c_e0: Cplx<T>,
    params: &ModelParams<T>,
    tau: T,
) -> Result<(Cplx<T>, Cplx<T>)> {
    if !(tau >= T::zero()) {
        return Err(Error::NegativeTime(tau.to_f64_lossy()));
    }
    Ok(OneQuantumEvolution::new(params).evolve(c_g1, c_e0, tau))
}

/// `(cos gτ − sin gτ, cos gτ + sin gτ)`, the printed closed form for the
/// `2κ = γ = g` case. Its squared norm is 2, and relative to
/// [`conditional_evolution_analytic`] started from the transmission-collapsed
/// state the `C_e0` component carries the opposite sign.
pub fn resonant_case_amplitudes<T: Real>(g: T, tau: T) -> Result<(T, T)> {
    if !(tau >= T::zero()) {
        return Err(Error::NegativeTime(tau.to_f64_lossy()));
    }
    let (s, co) = (g * tau).sin_cos();
    Ok((co - s, co + s))
}

/// Post-detection one-quantum state `C_g1|g,1> + C_e0|e,0>`. The `|g,0>`
/// component vanishes at order F and is not represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalState<T: Real> {
    pub c_g1: Cplx<T>,
    pub c_e0: Cplx<T>,
    pub channel: Channel,
    /// Time elapsed since the triggering detection.
    pub tau: T,
}

impl<T: Real> ConditionalState<T> {
    pub fn norm_sq(&self) -> T {
        self.c_g1.norm_sqr() + self.c_e0.norm_sqr()
    }

    /// Projects a full state onto `{|g,1>, |e,0>}` and normalizes.
    pub fn from_state(state: &PureState<T>, channel: Channel) -> Result<Self> {
        let g1 = state.amplitude(1, Level::Ground);
        let e0 = state.amplitude(0, Level::Excited);
        let n = (g1.norm_sqr() + e0.norm_sqr()).sqrt();
        if !(n > T::zero()) {
            return Err(Error::NotNormalizable);
        }
        Ok(Self { c_g1: g1 / n, c_e0: e0 / n, channel, tau: T::zero() })
    }

    pub fn to_state(&self, n_max: usize) -> Result<PureState<T>> {
        let mut s = PureState::zero(n_max);
        s.set(1, Level::Ground, self.c_g1)?;
        s.set(0, Level::Excited, self.c_e0)?;
        Ok(s)
    }

    /// Conditional state after a further `tau` of no-jump evolution,
    /// renormalized.
    pub fn evolved(&self, params: &ModelParams<T>, tau: T) -> Result<Self> {
        let (g1, e0) = conditional_evolution_analytic(self.c_g1, self.c_e0, params, tau)?;
        let n = (g1.norm_sqr() + e0.norm_sqr()).sqrt();
        if !(n > T::zero()) {
            return Err(Error::NotNormalizable);
        }
        Ok(Self { c_g1: g1 / n, c_e0: e0 / n, channel: self.channel, tau: self.tau + tau })
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::Unnormalized { norm_sq: n.to_f64_lossy() });
        }
        Ok(())
    }
}

/// State prepared by a transmitted-photon detection from the weak-field
/// steady state: direction `(κ + γ/2, −g)` in `(C_g1, C_e0)`, unit norm.
///
/// With detuned (complex) rates the direction is normalized by its modulus,
/// which keeps the state unit-norm.
pub fn collapsed_state_transmission<T: Real>(params: &ModelParams<T>) -> Result<ConditionalState<T>> {
    params.validate()?;
    let rates = apply_detuning(params);
    let kg = rates.kappa + rates.gamma_half;
    let n = (kg.norm_sqr() + params.g * params.g).sqrt();
    if !(n > T::zero()) {
        return Err(Error::InvalidParams {
            field: "g",
            reason: "g and kappa + gamma/2 both vanish".into(),
        });
    }
    Ok(ConditionalState {
        c_g1: kg / n,
        c_e0: re(-params.g / n),
        channel: Channel::Transmission,
        tau: T::zero(),
    })
}

/// State prepared by a fluorescence detection: exactly `|g,1>`.
pub fn collapsed_state_fluorescence<T: Real>(params: &ModelParams<T>) -> Result<ConditionalState<T>> {
    params.validate()?;
    if params.g == T::zero() || params.drive.norm() == T::zero() {
        return Err(Error::ImpossibleDetection { channel: Channel::Fluorescence.name() });
    }
    Ok(ConditionalState {
        c_g1: re(T::one()),
        c_e0: czero(),
        channel: Channel::Fluorescence,
        tau: T::zero(),
    })
}

/// Laboratory quantities behind the drive amplitude F and the coupling g.
/// Units are the caller's; the conversions take ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalDriveParams<T: Real> {
    /// Cavity finesse.
    pub finesse: T,
    /// Intensity transmission of the input mirror.
    pub t_mirror: T,
    /// Input-mirror transmission entering `κ_in = cT'/L`.
    pub t_prime: T,
    /// Cavity length.
    pub length: T,
    pub speed_of_light: T,
    /// Phase change at the input mirror.
    pub phi_in: T,
    pub chi2: T,
    /// Pump intensity at 2ω.
    pub intensity_in: T,
    pub mode_volume: T,
    /// Resonance frequency ω₀.
    pub omega0: T,
    /// Dipole matrix element μ.
    pub mu_dipole: T,
    pub epsilon0: T,
}

impl<T: Real> PhysicalDriveParams<T> {
    /// Input-mirror field loss rate `cT'/L`.
    pub fn kappa_in(&self) -> T {
        self.speed_of_light * self.t_prime / self.length
    }
}

/// `F = −i κ_in (ℱ/π) √(ε₀ V T / ω) e^{iφ} χ⁽²⁾ I_in`.
pub fn drive_from_physical<T: Real>(p: &PhysicalDriveParams<T>) -> Cplx<T> {
    let root = (p.epsilon0 * p.mode_volume * p.t_mirror / p.omega0).sqrt();
    let magnitude = p.kappa_in() * (p.finesse / T::PI()) * root * p.chi2 * p.intensity_in;
    let phase = Cplx::from_polar(T::one(), p.phi_in);
    c(T::zero(), -T::one()) * phase * magnitude
}

/// `g = μ √(ω₀ / (ε₀ V))`.
pub fn coupling_from_physical<T: Real>(p: &PhysicalDriveParams<T>) -> Result<T> {
    if !(p.mode_volume > T::zero()) {
        return Err(Error::InvalidParams { field: "mode_volume", reason: "must be > 0".into() });
    }
    if !(p.epsilon0 > T::zero()) {
        return Err(Error::InvalidParams { field: "epsilon0", reason: "must be > 0".into() });
    }
    Ok(p.mu_dipole * (p.omega0 / (p.epsilon0 * p.mode_volume)).sqrt())
}
