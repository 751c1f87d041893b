//! Truncated atom–cavity Hilbert space.
//!
//! Basis states `|n, s>` pair a cavity Fock number `n <= n_max` with the atomic
//! level `s`. They are laid out as `index = 2n + s` with `g = 0` and `e = 1`, so
//! each photon number occupies a contiguous pair of slots.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{czero, re, Cplx, Real};

/// Atomic level of the two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn offset(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Excited => 1,
        }
    }
}

/// Detection channel, one per collapse operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Photon leaving through the output mirror; collapse operator `a`.
    Transmission,
    /// Spontaneous emission out the side of the cavity; collapse operator `σ−`.
    Fluorescence,
}

impl Channel {
    pub fn operator(self) -> Operator {
        match self {
            Channel::Transmission => Operator::Annihilate,
            Channel::Fluorescence => Operator::Lower,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Transmission => "transmission",
            Channel::Fluorescence => "fluorescence",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ladder and atomic operators acting on [`PureState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// `a`
    Annihilate,
    /// `a†`
    Create,
    /// `σ−`
    Lower,
    /// `σ+`
    Raise,
}

/// Model rates and couplings. All rates share one unit (κ = 1 is customary)
/// and ħ = 1.
///
/// `g` is the collective coupling seen by the cavity mode; for `n_atoms`
/// atoms it is `√N` times the single-atom value (see
/// [`crate::composite::scale_n_atoms`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T: Real> {
    pub g: T,
    /// Cavity field decay rate κ.
    pub kappa: T,
    /// Spontaneous emission rate γ into non-cavity modes.
    pub gamma: T,
    /// Two-photon drive amplitude F.
    #[serde(serialize_with = "crate::serialize_complex")]
    pub drive: Cplx<T>,
    /// Cavity detuning in units of κ.
    pub phi: T,
    /// Atomic detuning in units of γ/2.
    pub delta: T,
    pub n_atoms: usize,
    pub n_max: usize,
}

impl<T: Real> ModelParams<T> {
    /// Resonant single-atom parameters with a real drive and cutoff `n_max = 2`.
    pub fn new(g: T, kappa: T, gamma: T, drive: T) -> Self {
        Self {
            g,
            kappa,
            gamma,
            drive: re(drive),
            phi: T::zero(),
            delta: T::zero(),
            n_atoms: 1,
            n_max: 2,
        }
    }

    pub fn with_drive(mut self, drive: Cplx<T>) -> Self {
        self.drive = drive;
        self
    }

    pub fn with_detuning(mut self, phi: T, delta: T) -> Self {
        self.phi = phi;
        self.delta = delta;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_g(mut self, g: T) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: &str) -> Error {
            Error::InvalidParams { field, reason: reason.to_owned() }
        }
        let finite = |x: T| x.is_finite();
        if !(finite(self.kappa) && self.kappa > T::zero()) {
            return Err(bad("kappa", "must be finite and > 0"));
        }
        if !(finite(self.g) && self.g >= T::zero()) {
            return Err(bad("g", "must be finite and >= 0"));
        }
        if !(finite(self.gamma) && self.gamma >= T::zero()) {
            return Err(bad("gamma", "must be finite and >= 0"));
        }
        if !(finite(self.drive.re) && finite(self.drive.im)) {
            return Err(bad("drive", "must be finite"));
        }
        if !finite(self.phi) {
            return Err(bad("phi", "must be finite"));
        }
        if !finite(self.delta) {
            return Err(bad("delta", "must be finite"));
        }
        if self.n_atoms < 1 {
            return Err(bad("n_atoms", "must be >= 1"));
        }
        if self.n_max < 2 {
            return Err(bad("n_max", "two-photon drive needs n_max >= 2"));
        }
        Ok(())
    }

    /// Whether `|F|/κ <= 0.1`, the regime where the order-F closed forms hold.
    pub fn weak_field_ok(&self) -> bool {
        self.drive.norm() <= T::lit(0.1) * self.kappa
    }

    /// Human-readable warnings attached to results computed from these params.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.weak_field_ok() {
            out.push(format!(
                "|F|/kappa = {} exceeds 0.1; weak-field closed forms are only accurate to order F",
                (self.drive.norm() / self.kappa).to_f64_lossy()
            ));
        }
        out
    }

    pub fn dim(&self) -> usize {
        dimension(self.n_max)
    }
}

/// Hilbert space dimension for cutoff `n_max`.
pub fn dimension(n_max: usize) -> usize {
    2 * (n_max + 1)
}

/// Index of `|n, s>` in the state vector.
pub fn basis_index(n_max: usize, n: usize, level: Level) -> Result<usize> {
    if n > n_max {
        return Err(Error::Cutoff { n, n_max });
    }
    Ok(2 * n + level.offset())
}

/// Inverse of [`basis_index`].
pub fn basis_label(n_max: usize, index: usize) -> Result<(usize, Level)> {
    if index >= dimension(n_max) {
        return Err(Error::Cutoff { n: index / 2, n_max });
    }
    let level = if index % 2 == 0 { Level::Ground } else { Level::Excited };
    Ok((index / 2, level))
}

/// Pure state over the truncated basis. No-jump evolution leaves it
/// sub-normalized; the squared norm is then the survival probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real> {
    n_max: usize,
    amplitudes: Vec<Cplx<T>>,
}

impl<T: Real> PureState<T> {
    pub fn zero(n_max: usize) -> Self {
        Self { n_max, amplitudes: vec![czero(); dimension(n_max)] }
    }

    /// The basis state `|n, s>`.
    pub fn basis(n_max: usize, n: usize, level: Level) -> Result<Self> {
        let mut s = Self::zero(n_max);
        let i = basis_index(n_max, n, level)?;
        s.amplitudes[i] = re(T::one());
        Ok(s)
    }

    /// `|0, g>`, the dark state of the undriven system.
    pub fn vacuum(n_max: usize) -> Self {
        Self::basis(n_max, 0, Level::Ground).expect("n = 0 always in range")
    }

    pub fn from_amplitudes(n_max: usize, amplitudes: Vec<Cplx<T>>) -> Result<Self> {
        let expected = dimension(n_max);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: amplitudes.len() });
        }
        Ok(Self { n_max, amplitudes })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Cplx<T>> {
        self.amplitudes
    }

    /// Amplitude on `|n, s>`; zero above the cutoff.
    pub fn amplitude(&self, n: usize, level: Level) -> Cplx<T> {
        basis_index(self.n_max, n, level)
            .map(|i| self.amplitudes[i])
            .unwrap_or_else(|_| czero())
    }

    pub fn set(&mut self, n: usize, level: Level, value: Cplx<T>) -> Result<()> {
        let i = basis_index(self.n_max, n, level)?;
        self.amplitudes[i] = value;
        Ok(())
    }

    pub fn norm_sq(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: Cplx<T>) -> Self {
        Self {
            n_max: self.n_max,
            amplitudes: self.amplitudes.iter().map(|z| *z * factor).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        self.check_same_space(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Returns the Euclidean norm and the unit vector along `self`.
    pub fn normalized(&self) -> Result<(T, Self)> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalizable);
        }
        Ok((norm, self.scaled(re(T::one() / norm))))
    }

    /// Unnormalized `<ψ|a†a|ψ>`.
    pub fn photon_number(&self) -> T {
        self.amplitudes
            .chunks_exact(2)
            .enumerate()
            .fold(T::zero(), |acc, (n, pair)| {
                acc + T::count(n) * (pair[0].norm_sqr() + pair[1].norm_sqr())
            })
    }

    /// Unnormalized `<ψ|σ+σ−|ψ>`.
    pub fn excitation(&self) -> T {
        self.amplitudes
            .chunks_exact(2)
            .fold(T::zero(), |acc, pair| acc + pair[1].norm_sqr())
    }

    /// Applies a ladder or atomic operator. The result may be unnormalized or
    /// zero. Raising the photon number out of the truncated space is an
    /// error rather than a silent truncation.
    pub fn apply(&self, op: Operator) -> Result<Self> {
        let mut out = Self::zero(self.n_max);
        let amp = &self.amplitudes;
        let dst = &mut out.amplitudes;
        match op {
            Operator::Annihilate => {
                for n in 1..=self.n_max {
                    let s = T::count(n).sqrt();
                    dst[2 * (n - 1)] = amp[2 * n] * s;
                    dst[2 * (n - 1) + 1] = amp[2 * n + 1] * s;
                }
            }
            Operator::Create => {
                let top = 2 * self.n_max;
                if amp[top] != czero() || amp[top + 1] != czero() {
                    return Err(Error::Cutoff { n: self.n_max + 1, n_max: self.n_max });
                }
                for n in 0..self.n_max {
                    let s = T::count(n + 1).sqrt();
                    dst[2 * (n + 1)] = amp[2 * n] * s;
                    dst[2 * (n + 1) + 1] = amp[2 * n + 1] * s;
                }
            }
            Operator::Lower => {
                for n in 0..=self.n_max {
                    dst[2 * n] = amp[2 * n + 1];
                }
            }
            Operator::Raise => {
                for n in 0..=self.n_max {
                    dst[2 * n + 1] = amp[2 * n];
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}
