//! Entanglement sharing between two nodes and N-atom scaling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockspace::{Channel, ModelParams};
use crate::scalar::{czero, re, Cplx, Real};
use crate::weakfield::ConditionalState;

/// One-click state of two identical nodes behind a 50/50 beamsplitter, in the
/// basis `[|g,1;g,0>, |g,0;g,1>, |e,0;g,0>, |g,0;e,0>]`.
///
/// The zeroth-order background `|g,0;g,0>` belongs to the no-click branch and
/// is not represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedState<T: Real> {
    pub amplitudes: [Cplx<T>; 4],
}

impl<T: Real> SharedState<T> {
    pub fn norm_sq(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }

    pub fn inner(&self, other: &Self) -> Cplx<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    /// The state with the two nodes exchanged.
    pub fn swapped(&self) -> Self {
        let [a, b, c, d] = self.amplitudes;
        Self { amplitudes: [b, a, d, c] }
    }

    /// Amplitudes `(|00>, |01>, |10>, |11>)` of the photonic which-node qubit
    /// pair, where `|10>` is the photon in node A.
    pub fn photonic_qubits(&self) -> [Cplx<T>; 4] {
        [czero(), self.amplitudes[1], self.amplitudes[0], czero()]
    }
}

/// Shares a transmission-triggered conditional state between two nodes.
pub fn share_via_beamsplitter<T: Real>(cond: &ConditionalState<T>) -> Result<SharedState<T>> {
    if cond.channel != Channel::Transmission {
        return Err(Error::InvalidParams {
            field: "channel",
            reason: "beamsplitter sharing needs a transmission-triggered state".into(),
        });
    }
    cond.require_normalized()?;
    let s = T::FRAC_1_SQRT_2();
    Ok(SharedState { amplitudes: [cond.c_g1 * s, cond.c_g1 * s, cond.c_e0 * s, cond.c_e0 * s] })
}

/// `(|01> + |10>)/√2` with both atoms in the ground state.
pub fn single_rail_bell<T: Real>() -> SharedState<T> {
    let s = re(T::FRAC_1_SQRT_2());
    SharedState { amplitudes: [s, s, czero(), czero()] }
}

/// Concurrence `2|ad − bc|` of a normalized two-qubit pure state
/// `a|00> + b|01> + c|10> + d|11>`.
pub fn concurrence_pure<T: Real>(amps: [Cplx<T>; 4]) -> Result<T> {
    let n = amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    if (n - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::Unnormalized { norm_sq: n.to_f64_lossy() });
    }
    let [a, b, c, d] = amps;
    Ok((T::lit(2.0) * (a * d - b * c).norm()).min(T::one()))
}

/// Atom–field qubit amplitudes `(|0g>, |0e>, |1g>, |1e>)` of a conditional
/// state.
pub fn atom_field_qubits<T: Real>(cond: &ConditionalState<T>) -> [Cplx<T>; 4] {
    [czero(), cond.c_e0, cond.c_g1, czero()]
}

/// Concurrence of the atom–field pair, `2|C_g1 C_e0|`.
pub fn conditional_concurrence<T: Real>(cond: &ConditionalState<T>) -> Result<T> {
    concurrence_pure(atom_field_qubits(cond))
}

/// `|<Bell|ψ>|²` with `|Bell> = (|0,e> − |1,g>)/√2`.
pub fn bell_fidelity<T: Real>(cond: &ConditionalState<T>) -> T {
    ((cond.c_e0 - cond.c_g1) * T::FRAC_1_SQRT_2()).norm_sqr()
}

/// Parameters for `n` atoms coupling collectively: `g → √(n/N₀) g` where `N₀`
/// is the current atom count.
pub fn scale_n_atoms<T: Real>(params: &ModelParams<T>, n: usize) -> Result<ModelParams<T>> {
    if n < 1 {
        return Err(Error::InvalidParams { field: "n_atoms", reason: "must be >= 1".into() });
    }
    params.validate()?;
    let factor = (T::count(n) / T::count(params.n_atoms)).sqrt();
    Ok(ModelParams { g: params.g * factor, n_atoms: n, ..*params })
}

/// Serializable view of a shared state.
#[derive(Debug, Clone, Serialize)]
pub struct SharedStateReport {
    pub basis: [&'static str; 4],
    pub amplitudes: [[f64; 2]; 4],
}

impl<T: Real> From<&SharedState<T>> for SharedStateReport {
    fn from(s: &SharedState<T>) -> Self {
        Self {
            basis: ["g1;g0", "g0;g1", "e0;g0", "g0;e0"],
            amplitudes: s.amplitudes.map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()]),
        }
    }
}
