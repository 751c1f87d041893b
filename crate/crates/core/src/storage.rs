//! Single-photon storage by ramping the atom–field coupling.
//!
//! A detection in the cavity-induced-transparency regime `κ ≫ √N g ≫ γ`
//! leaves `|1,g>`. Lowering `g` to zero maps the surviving excitation onto the
//! atoms, where it decays at `γ` instead of `2κ`; raising `g` again releases
//! it into the cavity. The protocol is simulated as conditioned no-emission
//! evolution with a time-dependent `g(t)`, and emission probabilities are
//! accumulated channel by channel alongside the state.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{check_stability_with_g, Generator, Rk4};
use crate::error::{Error, Result};
use crate::fockspace::{Level, ModelParams, PureState};
use crate::scalar::{czero, re, Cplx, Real};
use crate::weakfield::apply_detuning;

/// Default smooth-step ramp length in units of `1/κ`.
pub const DEFAULT_RAMP_KAPPA_TIMES: f64 = 20.0;

/// Ramps shorter than this many cavity lifetimes are flagged non-adiabatic.
pub const ADIABATIC_KAPPA_TIMES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Linear,
    /// `3x² − 2x³` between breakpoints; zero slope at each breakpoint.
    SmoothStep,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "smooth-step" | "smoothstep" | "smooth_step" => Ok(Self::SmoothStep),
            other => Err(Error::InvalidSchedule(format!("unknown interpolation `{other}`"))),
        }
    }
}

/// Piecewise ramp-down of the coupling, starting at `t = 0`. The ramp-up is
/// its mirror image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RampSchedule<T: Real> {
    breakpoints: Vec<(T, T)>,
    interpolation: Interpolation,
}

impl<T: Real> RampSchedule<T> {
    pub fn new(breakpoints: Vec<(T, T)>, interpolation: Interpolation) -> Result<Self> {
        let Some(&(t0, _)) = breakpoints.first() else {
            return Err(Error::InvalidSchedule("no breakpoints".into()));
        };
        if t0 != T::zero() {
            return Err(Error::InvalidSchedule("first breakpoint must be at t = 0".into()));
        }
        if breakpoints.iter().any(|&(t, g)| !t.is_finite() || !g.is_finite() || g < T::zero()) {
            return Err(Error::InvalidSchedule("times must be finite and couplings >= 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidSchedule("breakpoint times must strictly increase".into()));
        }
        Ok(Self { breakpoints, interpolation })
    }

    /// Smooth-step ramp from `g0` to zero over `duration`.
    pub fn smooth_ramp_down(g0: T, duration: T) -> Result<Self> {
        Self::new(vec![(T::zero(), g0), (duration, T::zero())], Interpolation::SmoothStep)
    }

    /// The default ramp: smooth-step over `20/κ`.
    pub fn default_for(params: &ModelParams<T>) -> Result<Self> {
        Self::smooth_ramp_down(params.g, T::lit(DEFAULT_RAMP_KAPPA_TIMES) / params.kappa)
    }

    /// Holds `g0` throughout (no ramp).
    pub fn constant(g0: T) -> Result<Self> {
        Self::new(vec![(T::zero(), g0)], Interpolation::Linear)
    }

    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.breakpoints
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn duration(&self) -> T {
        self.breakpoints.last().map_or(T::zero(), |b| b.0)
    }

    pub fn initial(&self) -> T {
        self.breakpoints[0].1
    }

    pub fn last(&self) -> T {
        self.breakpoints[self.breakpoints.len() - 1].1
    }

    pub fn max_value(&self) -> T {
        self.breakpoints.iter().fold(T::zero(), |m, b| m.max(b.1))
    }

    /// Coupling during the ramp-down, held constant outside it.
    pub fn value_at(&self, t: T) -> T {
        let bp = &self.breakpoints;
        if t <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((t0, g0), (t1, g1)) = (w[0], w[1]);
            if t <= t1 {
                let x = (t - t0) / (t1 - t0);
                let s = match self.interpolation {
                    Interpolation::Linear => x,
                    Interpolation::SmoothStep => x * x * (T::lit(3.0) - T::lit(2.0) * x),
                };
                return g0 + (g1 - g0) * s;
            }
        }
        self.last()
    }
}

/// Outcome of the CIT regime check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CitCheck<T: Real> {
    pub ok: bool,
    /// `κ / (√N g)`
    pub cavity_ratio: T,
    /// `√N g / γ`; infinite when `γ = 0`.
    pub atom_ratio: T,
    pub factor: T,
}

/// Checks `κ ≫ √N g ≫ γ` with "≫" meaning "at least `factor` times". The
/// params' `g` is already the collective coupling.
pub fn check_cit_regime<T: Real>(params: &ModelParams<T>, factor: T) -> Result<CitCheck<T>> {
    params.validate()?;
    if !(factor >= T::one()) {
        return Err(Error::InvalidParams { field: "factor", reason: "must be >= 1".into() });
    }
    let g = params.g;
    let cavity_ratio = if g > T::zero() { params.kappa / g } else { T::infinity() };
    let atom_ratio = if params.gamma > T::zero() { g / params.gamma } else { T::infinity() };
    let ok = g > T::zero() && cavity_ratio >= factor && atom_ratio >= factor;
    Ok(CitCheck { ok, cavity_ratio, atom_ratio, factor })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StorageSample<T: Real> {
    pub time: T,
    pub g: T,
    /// Unnormalized `<a†a>`: probability the photon is still in the cavity.
    pub cavity_population: T,
    /// Unnormalized `<σ+σ−>`.
    pub atomic_population: T,
    pub norm_sq: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    RampDown,
    Storage,
    RampUp,
    Release,
}

/// Emission probability accumulated in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEmission<T: Real> {
    pub phase: Phase,
    pub start: T,
    pub end: T,
    pub transmission: T,
    pub fluorescence: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct StorageReport<T: Real> {
    pub schedule: RampSchedule<T>,
    pub t_store: T,
    pub t_release: T,
    pub samples: Vec<StorageSample<T>>,
    pub phases: Vec<PhaseEmission<T>>,
    /// `‖ψ‖²` at the end of the storage window.
    pub survival_probability: T,
    /// Transmission emission from the start of the ramp-up to the end.
    pub retrieval_probability: T,
    pub final_norm_sq: T,
    /// `|Σ emissions + final ‖ψ‖² − 1|`.
    pub bookkeeping_error: T,
    /// Decay rate of `‖ψ‖²` fitted over the storage window.
    pub storage_decay_rate: Option<T>,
    /// `κ` times the ramp duration.
    pub adiabaticity: T,
    pub adiabatic: bool,
    #[serde(skip)]
    pub final_state: PureState<T>,
}

/// Runs ramp-down, storage window and mirrored ramp-up from `|1,g>`.
pub fn run_storage_protocol<T: Real>(
    params: &ModelParams<T>,
    schedule: &RampSchedule<T>,
    t_store: T,
    dt: T,
) -> Result<StorageReport<T>> {
    run_storage_with_release(params, schedule, t_store, T::zero(), dt)
}

/// As [`run_storage_protocol`], followed by a hold of `t_release` at the
/// initial coupling so the retrieved photon can leave the cavity.
pub fn run_storage_with_release<T: Real>(
    params: &ModelParams<T>,
    schedule: &RampSchedule<T>,
    t_store: T,
    t_release: T,
    dt: T,
) -> Result<StorageReport<T>> {
    params.validate()?;
    if !(t_store >= T::zero()) {
        return Err(Error::NegativeTime(t_store.to_f64_lossy()));
    }
    if !(t_release >= T::zero()) {
        return Err(Error::NegativeTime(t_release.to_f64_lossy()));
    }
    if (schedule.initial() - params.g).abs() > T::tol(1e-12) * (T::one() + params.g) {
        return Err(Error::InvalidSchedule(format!(
            "schedule starts at g = {} but params have g = {}",
            schedule.initial(),
            params.g
        )));
    }
    check_stability_with_g(params, schedule.max_value(), dt)?;

    let gen = Generator::new(params);
    let dim = params.dim();
    let two_kappa = T::lit(2.0) * params.kappa;
    let gamma = params.gamma;
    let ramp = schedule.duration();
    let g_hold = schedule.last();
    let g0 = schedule.initial();

    // State plus two accumulators for emitted probability.
    let mut y = PureState::<T>::basis(params.n_max, 1, Level::Ground)?.into_amplitudes();
    y.push(czero());
    y.push(czero());
    let mut rk = Rk4::new(dim + 2);
    let rhs = |g: T, y: &[Cplx<T>], out: &mut [Cplx<T>]| {
        gen.apply(g, &y[..dim], &mut out[..dim]);
        let (mut photons, mut excitation) = (T::zero(), T::zero());
        for (n, pair) in y[..dim].chunks_exact(2).enumerate() {
            let pg = pair[0].norm_sqr();
            let pe = pair[1].norm_sqr();
            photons = photons + T::count(n) * (pg + pe);
            excitation = excitation + pe;
        }
        out[dim] = re(two_kappa * photons);
        out[dim + 1] = re(gamma * excitation);
    };

    let phases: [(Phase, T); 4] = [
        (Phase::RampDown, ramp),
        (Phase::Storage, t_store),
        (Phase::RampUp, ramp),
        (Phase::Release, t_release),
    ];
    let coupling = |phase: Phase, local: T| match phase {
        Phase::RampDown => schedule.value_at(local),
        Phase::Storage => g_hold,
        Phase::RampUp => schedule.value_at(ramp - local),
        Phase::Release => g0,
    };

    let sample = |time: T, g: T, y: &[Cplx<T>]| {
        let s = PureState::from_amplitudes(params.n_max, y[..dim].to_vec()).expect("dimension fixed");
        StorageSample {
            time,
            g,
            cavity_population: s.photon_number(),
            atomic_population: s.excitation(),
            norm_sq: s.norm_sq(),
        }
    };

    let mut samples = vec![sample(T::zero(), g0, &y)];
    let mut emissions = Vec::with_capacity(4);
    // (time, ‖ψ‖²) from the end of the ramp-down through the storage window
    let mut window = Vec::new();
    let mut survival = T::one();
    let mut t = T::zero();
    for (phase, length) in phases {
        let start = t;
        let before = (y[dim].re, y[dim + 1].re);
        if phase == Phase::Storage {
            let last = samples[samples.len() - 1];
            window.push((last.time, last.norm_sq));
        }
        if length > T::zero() {
            let steps = (length / dt).ceil().to_usize().unwrap_or(1).max(1);
            let h = length / T::count(steps);
            let stride = (steps / 500).max(1);
            for k in 0..steps {
                let local = T::count(k) * h;
                rk.step(local, h, &mut y, |tl, y, out| rhs(coupling(phase, tl), y, out));
                if (k + 1) % stride == 0 || k + 1 == steps {
                    let local_end = T::count(k + 1) * h;
                    let s = sample(start + local_end, coupling(phase, local_end), &y);
                    if phase == Phase::Storage {
                        window.push((s.time, s.norm_sq));
                    }
                    samples.push(s);
                }
            }
            t = start + length;
        }
        if phase == Phase::Storage {
            survival = y[..dim].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        }
        emissions.push(PhaseEmission {
            phase,
            start,
            end: t,
            transmission: y[dim].re - before.0,
            fluorescence: y[dim + 1].re - before.1,
        });
    }

    let final_state = PureState::from_amplitudes(params.n_max, y[..dim].to_vec())?;
    let final_norm_sq = final_state.norm_sq();
    let emitted = y[dim].re + y[dim + 1].re;
    let retrieval = emissions
        .iter()
        .filter(|e| matches!(e.phase, Phase::RampUp | Phase::Release))
        .fold(T::zero(), |a, e| a + e.transmission);
    let adiabaticity = params.kappa * ramp;
    Ok(StorageReport {
        schedule: schedule.clone(),
        t_store,
        t_release,
        samples,
        phases: emissions,
        survival_probability: survival,
        retrieval_probability: retrieval,
        final_norm_sq,
        bookkeeping_error: (emitted + final_norm_sq - T::one()).abs(),
        storage_decay_rate: fit_decay_rate(&window),
        adiabaticity,
        adiabatic: adiabaticity >= T::lit(ADIABATIC_KAPPA_TIMES),
        final_state,
    })
}

/// Least-squares decay rate `−d ln y / dt` of positive `(t, y)` points.
pub fn fit_decay_rate<T: Real>(points: &[(T, T)]) -> Option<T> {
    let pts: Vec<(T, T)> = points.iter().filter(|p| p.1 > T::zero()).map(|&(t, y)| (t, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::count(pts.len());
    let mt = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(sxy, sxx), p| {
        let dx = p.0 - mt;
        (sxy + dx * (p.1 - my), sxx + dx * dx)
    });
    (sxx > T::zero()).then(|| -sxy / sxx)
}

/// Slow (atom-like) eigenvector `(C_g1, C_e0)` of the one-quantum no-jump
/// evolution at coupling `g`: the dark-state polariton the stored excitation
/// follows when the ramp is adiabatic. Normalized.
pub fn dark_polariton<T: Real>(params: &ModelParams<T>, g: T) -> (Cplx<T>, Cplx<T>) {
    let rates = apply_detuning(params);
    let half = T::lit(0.5);
    let mu = (rates.kappa + rates.gamma_half) * half;
    let d = rates.kappa - rates.gamma_half;
    let omega = (d * d - re(T::lit(4.0) * g * g)).sqrt();
    let lambda = -mu + omega * half;
    let v = (re(g), rates.kappa + lambda);
    let n = (v.0.norm_sqr() + v.1.norm_sqr()).sqrt();
    if n > T::zero() {
        (v.0 / n, v.1 / n)
    } else {
        (czero(), re(T::one()))
    }
}

/// `1 − |<polariton|ψ>|²/‖ψ‖²` for the final state of a run, with the polariton
/// taken at the schedule's initial coupling.
pub fn return_infidelity<T: Real>(params: &ModelParams<T>, report: &StorageReport<T>) -> Result<T> {
    let (p1, p0) = dark_polariton(params, report.schedule.initial());
    let s = &report.final_state;
    let n = s.norm_sq();
    if !(n > T::zero()) {
        return Err(Error::NotNormalizable);
    }
    let overlap = p1.conj() * s.amplitude(1, Level::Ground) + p0.conj() * s.amplitude(0, Level::Excited);
    Ok((T::one() - overlap.norm_sqr() / n).max(T::zero()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve<T: Real> {
    /// `(t_store, ‖ψ‖² at the end of the storage window)`
    pub points: Vec<(T, T)>,
    /// Decay rate fitted over the grid.
    pub fitted_decay_rate: Option<T>,
}

/// Survival probability at the end of the storage window for each `t_store`
/// in `grid`. Grid points run in parallel; output keeps grid order.
pub fn storage_survival_curve<T: Real>(
    params: &ModelParams<T>,
    schedule: &RampSchedule<T>,
    grid: &[T],
    dt: T,
) -> Result<SurvivalCurve<T>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let points = grid
        .par_iter()
        .map(|&t_store| Ok((t_store, run_storage_protocol(params, schedule, t_store, dt)?.survival_probability)))
        .collect::<Result<Vec<_>>>()?;
    let fitted_decay_rate = fit_decay_rate(&points);
    Ok(SurvivalCurve { points, fitted_decay_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::scale_n_atoms;
    use crate::weakfield::conditional_evolution_analytic;
    use num_complex::Complex64;

    #[test]
    fn schedule_interpolation() {
        let s = RampSchedule::new(vec![(0.0, 2.0), (1.0, 0.0)], Interpolation::Linear).unwrap();
        assert_eq!(s.value_at(0.25), 1.5);
        assert_eq!(s.value_at(5.0), 0.0);
        let s = RampSchedule::<f64>::smooth_ramp_down(2.0, 1.0).unwrap();
        assert_eq!(s.value_at(0.5), 1.0);
        assert!((s.value_at(0.25) - 2.0 * (1.0 - 0.15625)).abs() < 1e-15);
        assert!(RampSchedule::new(vec![(0.0, 1.0), (0.0, 0.0)], Interpolation::Linear).is_err());
        assert!(RampSchedule::new(vec![(0.0, -1.0)], Interpolation::Linear).is_err());
        assert!(RampSchedule::<f64>::new(vec![], Interpolation::Linear).is_err());
        assert_eq!("smooth-step".parse::<Interpolation>().unwrap(), Interpolation::SmoothStep);
    }

    #[test]
    fn cit_examples() {
        let c = check_cit_regime(&ModelParams::<f64>::new(1.0, 100.0, 0.01, 0.0), 10.0).unwrap();
        assert!(c.ok);
        assert!((c.cavity_ratio - 100.0).abs() < 1e-12 && (c.atom_ratio - 100.0).abs() < 1e-12);
        assert!(!check_cit_regime(&ModelParams::<f64>::new(1.0, 1.0, 1.0, 0.0), 10.0).unwrap().ok);
        let c0 = check_cit_regime(&ModelParams::<f64>::new(1.0, 100.0, 0.0, 0.0), 10.0).unwrap();
        assert!(c0.ok && c0.atom_ratio.is_infinite());

        let one = ModelParams::<f64>::new(1.0, 100.0, 0.01, 0.0);
        let four = scale_n_atoms(&one, 4).unwrap();
        let a = check_cit_regime(&one, 10.0).unwrap();
        let b = check_cit_regime(&four, 10.0).unwrap();
        assert!((b.cavity_ratio / a.cavity_ratio - 0.5).abs() < 1e-12);
        assert!((b.atom_ratio / a.atom_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_schedule_follows_analytic_evolution() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.0, 0.0);
        let sched = RampSchedule::constant(1.0).unwrap();
        let r = run_storage_with_release(&p, &sched, 0.0, 3.0, 1e-3).unwrap();
        let (g1, e0) = conditional_evolution_analytic(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), &p, 3.0).unwrap();
        assert!((r.final_state.amplitude(1, Level::Ground) - g1).norm() < 1e-9);
        assert!((r.final_state.amplitude(0, Level::Excited) - e0).norm() < 1e-9);
        for s in &r.samples {
            let (g1, _) = conditional_evolution_analytic(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), &p, s.time).unwrap();
            assert!((s.cavity_population - g1.norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn instantaneous_ramps_reduce_to_constant_coupling() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.1, 0.0);
        let quick = RampSchedule::smooth_ramp_down(1.0, 1e-7).unwrap();
        let a = run_storage_with_release(&p, &quick, 0.0, 2.0, 1e-3).unwrap();
        let b = run_storage_with_release(&p, &RampSchedule::constant(1.0).unwrap(), 0.0, 2.0, 1e-3).unwrap();
        assert!((a.final_norm_sq - b.final_norm_sq).abs() < 1e-6);
        assert!((a.retrieval_probability - b.retrieval_probability).abs() < 1e-6);
    }

    #[test]
    fn schedule_must_start_at_params_coupling() {
        let p = ModelParams::<f64>::new(1.0, 10.0, 0.001, 0.0);
        let s = RampSchedule::smooth_ramp_down(2.0, 2.0).unwrap();
        assert!(matches!(run_storage_protocol(&p, &s, 1.0, 1e-3), Err(Error::InvalidSchedule(_))));
        assert!(matches!(
            run_storage_protocol(&p, &RampSchedule::smooth_ramp_down(1.0, 2.0).unwrap(), -1.0, 1e-3),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn populations_bounded_and_norm_non_increasing() {
        let p = ModelParams::<f64>::new(1.0, 10.0, 0.05, 0.0);
        let s = RampSchedule::default_for(&p).unwrap();
        let r = run_storage_with_release(&p, &s, 5.0, 5.0, 2e-3).unwrap();
        for w in r.samples.windows(2) {
            assert!(w[1].norm_sq <= w[0].norm_sq + 1e-12);
        }
        for s in &r.samples {
            assert!((0.0..=1.0).contains(&s.cavity_population));
            assert!((0.0..=1.0).contains(&s.atomic_population));
        }
        assert!(r.bookkeeping_error < 1e-6);
        assert!(r.retrieval_probability > 0.0);
    }

    #[test]
    fn survival_flat_without_spontaneous_emission() {
        let p = ModelParams::<f64>::new(1.0, 10.0, 0.0, 0.0);
        let s = RampSchedule::default_for(&p).unwrap();
        let curve = storage_survival_curve(&p, &s, &[0.0, 5.0, 10.0, 20.0], 2e-3).unwrap();
        // only the cavity residue left at the end of the ramp can still leak
        let first = curve.points[0].1;
        for &(_, y) in &curve.points {
            assert!((y - first).abs() < 1e-5 * first, "{:?}", curve.points);
        }
        assert!(curve.fitted_decay_rate.unwrap().abs() < 1e-6);
        assert_eq!(storage_survival_curve(&p, &s, &[], 2e-3).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn survival_decays_at_gamma_and_is_monotone() {
        let p = ModelParams::<f64>::new(1.0, 10.0, 0.01, 0.0);
        let s = RampSchedule::default_for(&p).unwrap();
        let curve = storage_survival_curve(&p, &s, &[0.0, 10.0, 20.0, 40.0], 2e-3).unwrap();
        assert!(curve.points.windows(2).all(|w| w[1].1 <= w[0].1));
        let rate = curve.fitted_decay_rate.unwrap();
        assert!((rate / 0.01 - 1.0).abs() < 0.1, "rate {rate}");
    }

    #[test]
    fn fit_recovers_exponential() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.3 * (-0.2 * i as f64).exp())).collect();
        assert!((fit_decay_rate(&pts).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(fit_decay_rate(&pts[..1]), None);
    }
}
