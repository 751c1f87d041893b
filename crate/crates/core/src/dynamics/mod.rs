//! Conditioned (no-jump) evolution, quantum-jump sampling and the
//! density-matrix oracle.
//!
//! The effective generator is `dψ/dt = Lψ` with
//!
//! ```text
//! L = −κ(1+iΦ) a†a − (γ/2)(1+iΔ) σ+σ− + g (a†σ− − aσ+) + (F a†² − F* a²)/√2
//! ```
//!
//! projected onto the truncated basis. The pair drive carries a `1/√2` so that
//! `<g,2|L|g,0> = F`, matching the weak-field amplitude equations. The norm
//! decays as `d‖ψ‖²/dt = −(2κ<a†a> + γ<σ+σ−>)`, so the detection channels are
//! `√(2κ) a` and `√γ σ−`.

mod integrator;
mod master;
mod trajectory;

pub use master::{master_equation_oracle, master_equation_steady_state, MasterOracleResult};
pub use trajectory::{
    ensemble_observable, run_ensemble, sample_trajectory, trajectory_seed, EnsembleResult, Estimate,
    JumpEvent, Observable, Sample, TrajectoryRecord, TrajectorySettings, TrajectorySummary,
};

pub(crate) use integrator::{rk4_step_matrix, Rk4};

use crate::error::{Error, Result};
use crate::fockspace::{basis_index, Channel, Level, ModelParams, PureState};
use crate::linalg::CMatrix;
use crate::scalar::{czero, re, Cplx, Real};
use crate::weakfield::{apply_detuning, WeakFieldAmplitudes};

/// Precomputed coefficients of the effective generator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Generator<T: Real> {
    pub kappa: Cplx<T>,
    pub gamma_half: Cplx<T>,
    /// `F/√2`
    pub pair: Cplx<T>,
    pub g: T,
    pub n_max: usize,
}

impl<T: Real> Generator<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let rates = apply_detuning(params);
        Self {
            kappa: rates.kappa,
            gamma_half: rates.gamma_half,
            pair: params.drive / T::lit(2.0).sqrt(),
            g: params.g,
            n_max: params.n_max,
        }
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Writes `Lψ` into `out` using coupling `g` (which may vary in time).
    pub fn apply(&self, g: T, amp: &[Cplx<T>], out: &mut [Cplx<T>]) {
        let n_max = self.n_max;
        for z in out.iter_mut() {
            *z = czero();
        }
        let pair_conj = self.pair.conj();
        for n in 0..=n_max {
            let nf = T::count(n);
            let cg = amp[2 * n];
            let ce = amp[2 * n + 1];
            out[2 * n] = out[2 * n] - self.kappa * nf * cg;
            out[2 * n + 1] = out[2 * n + 1] - (self.kappa * nf + self.gamma_half) * ce;
            if g != T::zero() {
                // g a†σ−|e,n> = g√(n+1)|g,n+1>
                if n < n_max {
                    out[2 * (n + 1)] = out[2 * (n + 1)] + ce * (g * T::count(n + 1).sqrt());
                }
                // −g aσ+|g,n> = −g√n|e,n−1>
                if n >= 1 {
                    out[2 * (n - 1) + 1] = out[2 * (n - 1) + 1] - cg * (g * nf.sqrt());
                }
            }
            if self.pair != czero() {
                if n + 2 <= n_max {
                    let s = (T::count((n + 1) * (n + 2))).sqrt();
                    out[2 * (n + 2)] = out[2 * (n + 2)] + self.pair * cg * s;
                    out[2 * (n + 2) + 1] = out[2 * (n + 2) + 1] + self.pair * ce * s;
                }
                if n >= 2 {
                    let s = (T::count(n * (n - 1))).sqrt();
                    out[2 * (n - 2)] = out[2 * (n - 2)] - pair_conj * cg * s;
                    out[2 * (n - 2) + 1] = out[2 * (n - 2) + 1] - pair_conj * ce * s;
                }
            }
        }
    }

    /// Dense matrix of the generator at coupling `g`.
    pub fn matrix(&self, g: T) -> Result<CMatrix<T>> {
        let dim = self.dim();
        CMatrix::from_columns(dim, |unit| {
            let mut out = vec![czero(); dim];
            self.apply(g, unit, &mut out);
            Ok(out)
        })
    }
}

/// Checks `dt · max(|κ(1+iΦ)|·n_max, γ|1+iΔ|, g, |F|) <= 0.1`.
pub fn check_stability<T: Real>(params: &ModelParams<T>, dt: T) -> Result<()> {
    check_stability_with_g(params, params.g, dt)
}

pub(crate) fn check_stability_with_g<T: Real>(params: &ModelParams<T>, g_max: T, dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParams { field: "dt", reason: "must be finite and > 0".into() });
    }
    let rates = apply_detuning(params);
    let fastest = (rates.kappa.norm() * T::count(params.n_max))
        .max(rates.gamma_half.norm() * T::lit(2.0))
        .max(g_max)
        .max(params.drive.norm());
    let product = dt * fastest;
    if product > T::lit(0.1) * (T::one() + T::tol(1e-12)) {
        return Err(Error::Stability { dt: dt.to_f64_lossy(), product: product.to_f64_lossy() });
    }
    Ok(())
}

fn check_state<T: Real>(params: &ModelParams<T>, state: &PureState<T>) -> Result<()> {
    if state.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), found: state.dim() });
    }
    Ok(())
}

/// Time derivative `dψ/dt` under the effective non-Hermitian evolution.
pub fn apply_effective_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    state: &PureState<T>,
) -> Result<PureState<T>> {
    params.validate()?;
    check_state(params, state)?;
    let gen = Generator::new(params);
    let mut out = vec![czero(); state.dim()];
    gen.apply(params.g, state.amplitudes(), &mut out);
    PureState::from_amplitudes(params.n_max, out)
}

/// Integrates the no-jump evolution for `steps` RK4 steps of size `dt`. The
/// output is left unnormalized.
pub fn evolve_no_jump<T: Real>(
    state: &PureState<T>,
    params: &ModelParams<T>,
    dt: T,
    steps: usize,
) -> Result<PureState<T>> {
    params.validate()?;
    check_state(params, state)?;
    check_stability(params, dt)?;
    let gen = Generator::new(params);
    let mut rk = Rk4::new(state.dim());
    let mut y = state.amplitudes().to_vec();
    for k in 0..steps {
        rk.step(T::count(k) * dt, dt, &mut y, |_, y, out| gen.apply(gen.g, y, out));
    }
    PureState::from_amplitudes(params.n_max, y)
}

/// Detection rates `(2κ<a†a>, γ<σ+σ−>)` for a normalized state.
pub fn jump_rates<T: Real>(params: &ModelParams<T>, state: &PureState<T>) -> Result<(T, T)> {
    check_state(params, state)?;
    let n = state.norm_sq();
    if (n - T::one()).abs() > T::tol(1e-6) {
        return Err(Error::Unnormalized { norm_sq: n.to_f64_lossy() });
    }
    Ok(unnormalized_rates(params, state))
}

pub(crate) fn unnormalized_rates<T: Real>(params: &ModelParams<T>, state: &PureState<T>) -> (T, T) {
    (
        T::lit(2.0) * params.kappa * state.photon_number(),
        params.gamma * state.excitation(),
    )
}

/// Applies the collapse operator of `channel` and renormalizes. Any overall
/// prefactor of the collapse operator cancels here.
pub fn collapse<T: Real>(state: &PureState<T>, channel: Channel) -> Result<PureState<T>> {
    let jumped = state.apply(channel.operator())?;
    match jumped.normalized() {
        Ok((_, unit)) => Ok(unit),
        Err(Error::NotNormalizable) => Err(Error::ImpossibleDetection { channel: channel.name() }),
        Err(e) => Err(e),
    }
}

/// Stationary point of the weak-field amplitude equations, found by solving
/// the four driven rows of the generator with `C_g0 = 1`.
pub fn steady_state_numeric<T: Real>(params: &ModelParams<T>) -> Result<WeakFieldAmplitudes<T>> {
    params.validate()?;
    let n_max = params.n_max;
    let m = Generator::new(params).matrix(params.g)?;
    let idx = |n, l| basis_index(n_max, n, l).expect("weak-field basis within cutoff");
    let g0 = idx(0, Level::Ground);
    let unknowns = [
        idx(1, Level::Ground),
        idx(0, Level::Excited),
        idx(2, Level::Ground),
        idx(1, Level::Excited),
    ];
    let mut sub = CMatrix::zeros(4);
    let mut rhs = vec![czero(); 4];
    for (r, &row) in unknowns.iter().enumerate() {
        for (col, &c) in unknowns.iter().enumerate() {
            sub[(r, col)] = m[(row, c)];
        }
        rhs[r] = -m[(row, g0)];
    }
    let x = sub.solve(&rhs)?;
    Ok(WeakFieldAmplitudes { c_g0: re(T::one()), c_g1: x[0], c_e0: x[1], c_g2: x[2], c_e1: x[3] })
}
