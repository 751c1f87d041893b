//! Monte Carlo wavefunction unraveling with photon-counting jumps.
//!
//! Each trajectory starts in `|0,g>`, evolves under the no-jump generator and
//! fires a jump when `‖ψ‖²` falls below a uniform threshold drawn from
//! `(0, 1)`. The channel is picked in proportion to the detection rates, the
//! state collapses and a fresh threshold is drawn.
//!
//! Random numbers come from ChaCha8 seeded per trajectory with
//! [`trajectory_seed`], so a `(base_seed, index)` pair maps to the same stream
//! on every platform and under any thread schedule.

use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_stability, collapse, rk4_step_matrix, unnormalized_rates, Generator};
use crate::error::{Error, Result};
use crate::fockspace::{Channel, ModelParams, PureState};
use crate::linalg::CMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent<T: Real> {
    /// Threshold-crossing time, linearly interpolated within the step.
    pub time: T,
    pub channel: Channel,
}

/// Observables of the normalized conditioned state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<T: Real> {
    pub time: T,
    pub photon_number: T,
    pub excitation: T,
    /// `‖ψ‖²` before renormalization, i.e. since the last jump.
    pub norm_sq: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<T: Real> {
    pub seed: u64,
    pub events: Vec<JumpEvent<T>>,
    /// Samples on the `sample_every` grid. A jump adds two samples at the
    /// step where it fires, one before and one after the collapse.
    pub samples: Vec<Sample<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySettings<T: Real> {
    pub t_final: T,
    pub dt: T,
    /// Integration steps between stored samples.
    pub sample_every: usize,
    /// Time averages and click rates only use `t >= burn_in`.
    pub burn_in: T,
}

impl<T: Real> TrajectorySettings<T> {
    /// Samples every `0.05` time units (at least every step) and discards the
    /// first tenth of the run.
    pub fn new(t_final: T, dt: T) -> Self {
        let every = (T::lit(0.05) / dt).round().to_usize().unwrap_or(1).max(1);
        Self { t_final, dt, sample_every: every, burn_in: t_final / T::lit(10.0) }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > T::zero()) {
            return Err(Error::InvalidParams { field: "t_final", reason: "must be > 0".into() });
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParams { field: "sample_every", reason: "must be >= 1".into() });
        }
        if !(self.burn_in >= T::zero() && self.burn_in < self.t_final) {
            return Err(Error::InvalidParams { field: "burn_in", reason: "must lie in [0, t_final)".into() });
        }
        if self.steps() == 0 {
            return Err(Error::InvalidParams { field: "dt", reason: "larger than t_final".into() });
        }
        Ok(())
    }
}

/// Per-trajectory seed: SplitMix64 applied to `base + (index + 1)·φ64`.
pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

trait Observer<T: Real> {
    fn sample(&mut self, s: Sample<T>);
    fn jump(&mut self, e: JumpEvent<T>);
}

impl<T: Real> Observer<T> for TrajectoryRecord<T> {
    fn sample(&mut self, s: Sample<T>) {
        self.samples.push(s);
    }
    fn jump(&mut self, e: JumpEvent<T>) {
        self.events.push(e);
    }
}

/// Time averages of one trajectory over `[burn_in, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySummary<T: Real> {
    pub seed: u64,
    pub photon_number: T,
    pub excitation: T,
    pub transmission_rate: T,
    pub fluorescence_rate: T,
    pub transmission_clicks: usize,
    pub fluorescence_clicks: usize,
    /// Jumps over the whole run, burn-in included.
    pub total_jumps: usize,
}

/// Trapezoidal accumulator used both on the fly and for stored records.
struct Accumulator<T: Real> {
    burn_in: T,
    last: Option<Sample<T>>,
    start: Option<T>,
    photon_area: T,
    excitation_area: T,
    clicks: [usize; 2],
    total_jumps: usize,
}

impl<T: Real> Accumulator<T> {
    fn new(burn_in: T) -> Self {
        Self {
            burn_in,
            last: None,
            start: None,
            photon_area: T::zero(),
            excitation_area: T::zero(),
            clicks: [0, 0],
            total_jumps: 0,
        }
    }

    fn finish(self, seed: u64) -> TrajectorySummary<T> {
        let start = self.start.unwrap_or(self.burn_in);
        let end = self.last.map_or(start, |s| s.time);
        let span = end - start;
        let per = |x: T| if span > T::zero() { x / span } else { T::zero() };
        TrajectorySummary {
            seed,
            photon_number: per(self.photon_area),
            excitation: per(self.excitation_area),
            transmission_rate: per(T::count(self.clicks[0])),
            fluorescence_rate: per(T::count(self.clicks[1])),
            transmission_clicks: self.clicks[0],
            fluorescence_clicks: self.clicks[1],
            total_jumps: self.total_jumps,
        }
    }
}

impl<T: Real> Observer<T> for Accumulator<T> {
    fn sample(&mut self, s: Sample<T>) {
        if s.time < self.burn_in {
            return;
        }
        match self.last {
            Some(prev) => {
                let w = (s.time - prev.time) * T::lit(0.5);
                self.photon_area = self.photon_area + (prev.photon_number + s.photon_number) * w;
                self.excitation_area = self.excitation_area + (prev.excitation + s.excitation) * w;
            }
            None => self.start = Some(s.time),
        }
        self.last = Some(s);
    }

    fn jump(&mut self, e: JumpEvent<T>) {
        self.total_jumps += 1;
        if self.start.is_some_and(|t0| e.time > t0) {
            match e.channel {
                Channel::Transmission => self.clicks[0] += 1,
                Channel::Fluorescence => self.clicks[1] += 1,
            }
        }
    }
}

impl<T: Real> TrajectoryRecord<T> {
    /// Time averages of this record over `[burn_in, end]`.
    pub fn summarize(&self, burn_in: T) -> TrajectorySummary<T> {
        let mut acc = Accumulator::new(burn_in);
        let mut events = self.events.iter().peekable();
        for s in &self.samples {
            while let Some(e) = events.peek() {
                if e.time <= s.time {
                    acc.jump(**e);
                    events.next();
                } else {
                    break;
                }
            }
            acc.sample(*s);
        }
        for e in events {
            acc.jump(*e);
        }
        acc.finish(self.seed)
    }
}

/// Shared, read-only propagators for one parameter set.
struct Engine<T: Real> {
    params: ModelParams<T>,
    settings: TrajectorySettings<T>,
    step: CMatrix<T>,
    block: CMatrix<T>,
}

impl<T: Real> Engine<T> {
    fn new(params: &ModelParams<T>, settings: &TrajectorySettings<T>) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        check_stability(params, settings.dt)?;
        let gen = Generator::new(params);
        let step = rk4_step_matrix(params.dim(), settings.dt, |y, out| gen.apply(gen.g, y, out))?;
        let block = step.pow(settings.sample_every as u64);
        Ok(Self { params: *params, settings: *settings, step, block })
    }

    fn observe(&self, time: T, psi: &[num_complex::Complex<T>], norm_sq: T) -> Result<Sample<T>> {
        let state = PureState::from_amplitudes(self.params.n_max, psi.to_vec())?;
        Ok(Sample {
            time,
            photon_number: state.photon_number() / norm_sq,
            excitation: state.excitation() / norm_sq,
            norm_sq,
        })
    }

    fn run<O: Observer<T>>(&self, seed: u64, obs: &mut O) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut threshold = T::lit(Open01.sample(&mut rng));
        let n_max = self.params.n_max;
        let dt = self.settings.dt;
        let total = self.settings.steps();
        let every = self.settings.sample_every;
        let mut psi = PureState::<T>::vacuum(n_max).into_amplitudes();
        let mut buf = psi.clone();
        let norm = |v: &[num_complex::Complex<T>]| v.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let mut index = 0usize;
        obs.sample(self.observe(T::zero(), &psi, T::one())?);

        while index < total {
            let len = every.min(total - index);
            if len == every {
                self.block.mul_vec_into(&psi, &mut buf);
                if norm(&buf) >= threshold {
                    std::mem::swap(&mut psi, &mut buf);
                    index += len;
                    obs.sample(self.observe(T::count(index) * dt, &psi, norm(&psi))?);
                    continue;
                }
            }
            // The threshold is crossed inside this block (or it is the short
            // final block): redo it one step at a time.
            for _ in 0..len {
                let before = norm(&psi);
                self.step.mul_vec_into(&psi, &mut buf);
                std::mem::swap(&mut psi, &mut buf);
                index += 1;
                let after = norm(&psi);
                if after < threshold {
                    let frac = if before > after { (before - threshold) / (before - after) } else { T::one() };
                    let time = (T::count(index - 1) + frac) * dt;
                    let t_grid = T::count(index) * dt;
                    obs.sample(self.observe(t_grid, &psi, after)?);
                    let state = PureState::from_amplitudes(n_max, psi.clone())?;
                    let (rt, rf) = unnormalized_rates(&self.params, &state);
                    let total_rate = rt + rf;
                    if !(total_rate > T::zero()) {
                        return Err(Error::ImpossibleDetection { channel: "any" });
                    }
                    let u = T::lit(Open01.sample(&mut rng));
                    let channel = if u * total_rate < rt { Channel::Transmission } else { Channel::Fluorescence };
                    psi = collapse(&state, channel)?.into_amplitudes();
                    obs.jump(JumpEvent { time, channel });
                    obs.sample(self.observe(t_grid, &psi, T::one())?);
                    threshold = T::lit(Open01.sample(&mut rng));
                }
            }
            obs.sample(self.observe(T::count(index) * dt, &psi, norm(&psi))?);
        }
        Ok(())
    }
}

/// Runs one trajectory and keeps its full record.
pub fn sample_trajectory<T: Real>(
    params: &ModelParams<T>,
    settings: &TrajectorySettings<T>,
    seed: u64,
) -> Result<TrajectoryRecord<T>> {
    let engine = Engine::new(params, settings)?;
    let mut record = TrajectoryRecord { seed, events: Vec::new(), samples: Vec::new() };
    engine.run(seed, &mut record)?;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PhotonNumber,
    Excitation,
    TransmissionRate,
    FluorescenceRate,
}

/// Ensemble mean with its standard error. `std_error` is `None` for a single
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T: Real> {
    pub mean: T,
    pub std_error: Option<T>,
}

impl<T: Real> Estimate<T> {
    fn from_values(values: impl Iterator<Item = T> + Clone) -> Self {
        let n = values.clone().count();
        let nf = T::count(n);
        let mean = values.clone().fold(T::zero(), |a, x| a + x) / nf;
        let std_error = (n > 1).then(|| {
            let var = values.fold(T::zero(), |a, x| a + (x - mean) * (x - mean)) / T::count(n - 1);
            (var / nf).sqrt()
        });
        Self { mean, std_error }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: T, k: T) -> bool {
        match self.std_error {
            Some(se) => (self.mean - value).abs() <= k * se,
            None => self.mean == value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult<T: Real> {
    pub n_traj: usize,
    pub base_seed: u64,
    pub photon_number: Estimate<T>,
    pub excitation: Estimate<T>,
    pub transmission_rate: Estimate<T>,
    pub fluorescence_rate: Estimate<T>,
    pub transmission_clicks: usize,
    pub fluorescence_clicks: usize,
    pub total_jumps: usize,
}

impl<T: Real> EnsembleResult<T> {
    pub fn estimate(&self, observable: Observable) -> Estimate<T> {
        match observable {
            Observable::PhotonNumber => self.photon_number,
            Observable::Excitation => self.excitation,
            Observable::TransmissionRate => self.transmission_rate,
            Observable::FluorescenceRate => self.fluorescence_rate,
        }
    }
}

/// Runs `n_traj` trajectories in parallel and reduces their time averages in
/// ascending trajectory order.
pub fn run_ensemble<T: Real>(
    params: &ModelParams<T>,
    n_traj: usize,
    settings: &TrajectorySettings<T>,
    base_seed: u64,
) -> Result<EnsembleResult<T>> {
    if n_traj == 0 {
        return Err(Error::InvalidParams { field: "n_traj", reason: "must be >= 1".into() });
    }
    let engine = Engine::new(params, settings)?;
    let summaries = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let seed = trajectory_seed(base_seed, i);
            let mut acc = Accumulator::new(settings.burn_in);
            engine.run(seed, &mut acc)?;
            Ok(acc.finish(seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let est = |f: fn(&TrajectorySummary<T>) -> T| Estimate::from_values(summaries.iter().map(f));
    Ok(EnsembleResult {
        n_traj,
        base_seed,
        photon_number: est(|s| s.photon_number),
        excitation: est(|s| s.excitation),
        transmission_rate: est(|s| s.transmission_rate),
        fluorescence_rate: est(|s| s.fluorescence_rate),
        transmission_clicks: summaries.iter().map(|s| s.transmission_clicks).sum(),
        fluorescence_clicks: summaries.iter().map(|s| s.fluorescence_clicks).sum(),
        total_jumps: summaries.iter().map(|s| s.total_jumps).sum(),
    })
}

/// Ensemble estimate of a single observable.
pub fn ensemble_observable<T: Real>(
    params: &ModelParams<T>,
    n_traj: usize,
    settings: &TrajectorySettings<T>,
    base_seed: u64,
    observable: Observable,
) -> Result<Estimate<T>> {
    Ok(run_ensemble(params, n_traj, settings, base_seed)?.estimate(observable))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::master_equation_oracle;

    #[test]
    fn undriven_trajectory_stays_dark() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.3, 0.0);
        let s = TrajectorySettings::new(20.0, 1e-3);
        let rec = sample_trajectory(&p, &s, 7).unwrap();
        assert!(rec.events.is_empty());
        let last = rec.samples.last().unwrap();
        assert_eq!((last.photon_number, last.excitation, last.norm_sq), (0.0, 0.0, 1.0));
        assert!((last.time - 20.0).abs() < 1e-9);
    }

    #[test]
    fn identical_seed_gives_identical_record() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.2, 0.1);
        let s = TrajectorySettings::new(100.0, 2e-3);
        let a = sample_trajectory(&p, &s, 42).unwrap();
        let b = sample_trajectory(&p, &s, 42).unwrap();
        assert!(!a.events.is_empty());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = sample_trajectory(&p, &s, 43).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn jump_times_increase_and_norms_are_bounded() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.5, 0.1);
        let s = TrajectorySettings::new(200.0, 2e-3);
        let rec = sample_trajectory(&p, &s, 3).unwrap();
        assert!(rec.events.len() > 2);
        assert!(rec.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(rec.samples.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(rec.samples.iter().all(|s| s.norm_sq > 0.0 && s.norm_sq <= 1.0 + 1e-12));
    }

    #[test]
    fn block_stepping_matches_single_steps() {
        // Same seed, coarse and fine sampling: the jump history must agree.
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.5, 0.1);
        let mut fine = TrajectorySettings::new(60.0, 2e-3);
        fine.sample_every = 1;
        let mut coarse = fine;
        coarse.sample_every = 50;
        let a = sample_trajectory(&p, &fine, 11).unwrap();
        let b = sample_trajectory(&p, &coarse, 11).unwrap();
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            assert_eq!(x.channel, y.channel);
            assert!((x.time - y.time).abs() < 1e-9);
        }
    }

    #[test]
    fn summary_of_record_matches_streaming_summary() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.5, 0.1);
        let s = TrajectorySettings::new(100.0, 2e-3);
        let rec = sample_trajectory(&p, &s, 5).unwrap();
        let from_record = rec.summarize(s.burn_in);
        let engine = Engine::new(&p, &s).unwrap();
        let mut acc = Accumulator::new(s.burn_in);
        engine.run(5, &mut acc).unwrap();
        assert_eq!(from_record, acc.finish(5));
    }

    #[test]
    fn single_trajectory_ensemble() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.5, 0.1);
        let s = TrajectorySettings::new(50.0, 2e-3);
        let e = run_ensemble(&p, 1, &s, 9).unwrap();
        let rec = sample_trajectory(&p, &s, trajectory_seed(9, 0)).unwrap();
        assert_eq!(e.photon_number.mean, rec.summarize(s.burn_in).photon_number);
        assert_eq!(e.photon_number.std_error, None);
    }

    #[test]
    fn undriven_ensemble_is_exactly_dark() {
        let p = ModelParams::<f64>::new(1.0, 1.0, 0.5, 0.0);
        let e = ensemble_observable(&p, 8, &TrajectorySettings::new(10.0, 1e-3), 1, Observable::PhotonNumber).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(trajectory_seed(0, 0), trajectory_seed(0, 0));
        let seeds: std::collections::HashSet<_> = (0..1000).map(|i| trajectory_seed(17, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn ensemble_matches_oracle_with_fluorescence() {
        // Strong drive and large γ make both channels busy at modest cost.
        let p = ModelParams::<f64>::new(1.0, 1.0, 1.0, 0.1);
        let s = TrajectorySettings::new(100.0, 2e-3);
        let e = run_ensemble(&p, 400, &s, 2024).unwrap();
        let me = master_equation_oracle(&p, 100.0, 2e-3).unwrap();
        assert!(e.photon_number.agrees_with(me.photon_number, 3.0), "{:?} vs {}", e.photon_number, me.photon_number);
        assert!(e.excitation.agrees_with(me.excitation, 3.0), "{:?} vs {}", e.excitation, me.excitation);
        assert!(e.fluorescence_rate.agrees_with(p.gamma * me.excitation, 3.0));
        assert!(e.transmission_rate.agrees_with(2.0 * p.kappa * me.photon_number, 3.0));
    }
}
