//! Crank-Nicolson time stepping and energy-decay measurements.
//!
//! The trapezoidal rule maps `z` to `(I - τA/2)^{-1}(I + τA/2) z`, the Cayley
//! transform of `τA/2`. It is a contraction in `‖·‖_h` for every step size
//! whenever `A` is dissipative, so traces are non-increasing by construction.

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::network::DiscreteSystem;
use crate::spectral::{fit_power_law, PowerLawFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_HORIZON: f64 = 100.0;
/// Energies below this are excluded from fits.
pub const ENERGY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub state: Vec<f64>,
    /// Built through the resolvent, hence a discrete `D(A)` element.
    pub classical: bool,
    /// How the state was made.
    pub tag: String,
    pub seed: Option<u64>,
}

impl InitialData {
    pub fn zero(sys: &DiscreteSystem) -> Self {
        Self {
            state: vec![0.0; sys.dim()],
            classical: true,
            tag: "zero".into(),
            seed: None,
        }
    }

    /// Coordinatewise uniform on `[-1, 1]`, scaled to unit energy. No
    /// smoothing, so this plays the role of mild-solution data.
    pub fn random(sys: &DiscreteSystem, seed: u64) -> Self {
        let mut state = random_state(sys.dim(), seed);
        normalize(sys, &mut state);
        Self {
            state,
            classical: false,
            tag: format!("uniform seed={seed}"),
            seed: Some(seed),
        }
    }

    pub fn from_state(state: Vec<f64>, tag: &str) -> Self {
        Self {
            state,
            classical: false,
            tag: tag.into(),
            seed: None,
        }
    }
}

fn random_state(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn normalize(sys: &DiscreteSystem, z: &mut [f64]) {
    let e = sys.energy(z);
    if e > 0.0 {
        let k = e.sqrt().recip();
        z.iter_mut().for_each(|v| *v *= k);
    }
}

/// `z₀ = (I - A_h)^{-1} r` for uniform random `r`, normalized to `E(0) = 1`.
pub fn classical_initial_data(sys: &DiscreteSystem, seed: u64) -> Result<InitialData> {
    let m = sys.generator().shifted(1.0, -1.0);
    let lu = BandedLu::factor(&m)?;
    let mut state = random_state(sys.dim(), seed);
    lu.solve_in_place(&mut state);
    normalize(sys, &mut state);
    Ok(InitialData {
        state,
        classical: true,
        tag: format!("resolvent-smoothed uniform seed={seed}"),
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    pub variant: String,
    pub seed: Option<u64>,
    pub betas: Vec<f64>,
}

impl EnergyTrace {
    /// Energy at the recorded time nearest to `t`.
    pub fn energy_at(&self, t: f64) -> f64 {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.energies[i]
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }

    /// True if no energy exceeds its predecessor by more than `rel` relative to `E(0)`.
    pub fn is_non_increasing(&self, rel: f64) -> bool {
        let slack = rel * self.energies[0].max(f64::MIN_POSITIVE);
        self.energies.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E\n");
        for (t, e) in self.times.iter().zip(&self.energies) {
            out.push_str(&format!("{t:.12e},{e:.12e}\n"));
        }
        out
    }
}

/// Crank-Nicolson integration of `ż = A_h z` up to `t_end`, recording the
/// energy every `stride` steps and at the final step.
pub fn simulate_with_stride(
    sys: &DiscreteSystem,
    z0: &InitialData,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EnergyTrace> {
    if !(dt > 0.0 && t_end > 0.0 && dt <= t_end) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < dt <= T, got dt={dt}, T={t_end}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    if z0.state.len() != sys.dim() {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} entries, system has {}",
            z0.state.len(),
            sys.dim()
        )));
    }
    let steps = (t_end / dt).round() as usize;
    let implicit = sys.generator().shifted(1.0, -0.5 * dt);
    let explicit: CsrMatrix<f64> = sys.generator().shifted(1.0, 0.5 * dt);
    let lu = BandedLu::factor(&implicit)?;

    let mut z = z0.state.clone();
    let mut next = vec![0.0; z.len()];
    let mut times = vec![0.0];
    let mut energies = vec![sys.energy(&z)];
    for k in 1..=steps {
        explicit.matvec_into(&z, &mut next);
        lu.solve_in_place(&mut next);
        std::mem::swap(&mut z, &mut next);
        if k % stride == 0 || k == steps {
            let e = sys.energy(&z);
            if !e.is_finite() {
                return Err(Error::NonFinite { step: k });
            }
            times.push(k as f64 * dt);
            energies.push(e);
        }
    }
    Ok(EnergyTrace {
        times,
        energies,
        n: sys.n(),
        dt,
        variant: sys.variant.name().to_string(),
        seed: z0.seed,
        betas: sys.betas.clone(),
    })
}

/// [`simulate_with_stride`] with the default output stride.
pub fn simulate(sys: &DiscreteSystem, z0: &InitialData, t_end: f64, dt: f64) -> Result<EnergyTrace> {
    simulate_with_stride(sys, z0, t_end, dt, DEFAULT_STRIDE)
}

/// Power-law fit `E ~ t^{-α}` over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub fit: PowerLawFit,
    /// Set when energies under [`ENERGY_FLOOR`] shortened the window; `fit.window`
    /// then ends at the last usable time.
    pub truncated: bool,
}

pub fn decay_exponent(trace: &EnergyTrace, window: [f64; 2]) -> Result<DecayFit> {
    let last = *trace.times.last().unwrap();
    if window[0] < 0.0 || window[1] > last + 1e-9 || !(window[0] < window[1]) {
        return Err(Error::InvalidParameter(format!(
            "window {window:?} outside trace [0, {last}]"
        )));
    }
    let mut hi = window[1];
    let mut truncated = false;
    for (&t, &e) in trace.times.iter().zip(&trace.energies) {
        if t >= window[0] && t <= window[1] && !(e > ENERGY_FLOOR) {
            hi = t;
            truncated = true;
            break;
        }
    }
    let (ts, es): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(&t, &e)| t >= window[0] && t <= hi && e > ENERGY_FLOOR)
        .map(|(t, e)| (*t, *e))
        .unzip();
    if ts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in [{}, {hi}]{}",
            ts.len(),
            window[0],
            if truncated {
                format!(" (energy below {ENERGY_FLOOR:e} from t = {hi})")
            } else {
                String::new()
            }
        )));
    }
    let fit = fit_power_law(&ts, &es, [window[0], hi])?;
    Ok(DecayFit {
        alpha: -fit.exponent,
        fit,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRun {
    pub seed: u64,
    pub trace: EnergyTrace,
    /// `None` when the window holds too few usable points.
    pub fit: Option<DecayFit>,
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MildClassicalReport {
    pub window: [f64; 2],
    pub mild: Vec<DecayRun>,
    pub classical: Vec<DecayRun>,
    /// Every trace ends below `1e-6 · E(0)`.
    pub all_decayed: bool,
    /// Classical exponent ≥ mild exponent − 0.2 for every seed.
    pub classical_not_slower: bool,
    /// Smallest classical exponent over the seeds.
    pub worst_classical_alpha: Option<f64>,
}

fn decay_run(
    sys: &DiscreteSystem,
    z0: &InitialData,
    seed: u64,
    t_end: f64,
    dt: f64,
    window: [f64; 2],
) -> Result<DecayRun> {
    let trace = simulate(sys, z0, t_end, dt)?;
    let fit = decay_exponent(&trace, window).ok();
    let final_ratio = trace.final_energy() / trace.energies[0];
    Ok(DecayRun {
        seed,
        trace,
        fit,
        final_ratio,
    })
}

/// Simulates raw random data and resolvent-smoothed data for each seed.
pub fn mild_vs_classical_comparison(
    sys: &DiscreteSystem,
    seeds: &[u64],
    t_end: f64,
    dt: f64,
    window: [f64; 2],
) -> Result<MildClassicalReport> {
    let runs: Vec<(DecayRun, DecayRun)> = seeds
        .par_iter()
        .map(|&seed| {
            let mild = decay_run(sys, &InitialData::random(sys, seed), seed, t_end, dt, window)?;
            let classical = decay_run(sys, &classical_initial_data(sys, seed)?, seed, t_end, dt, window)?;
            Ok((mild, classical))
        })
        .collect::<Result<_>>()?;
    let (mild, classical): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let all_decayed = mild.iter().chain(&classical).all(|r| r.final_ratio <= 1e-6);
    let classical_not_slower = mild.iter().zip(&classical).all(|(m, c)| match (m.fit, c.fit) {
        (Some(m), Some(c)) => c.alpha >= m.alpha - 0.2,
        _ => false,
    });
    let worst_classical_alpha = classical.iter().filter_map(|r| r.fit.map(|f| f.alpha)).reduce(f64::min);
    Ok(MildClassicalReport {
        window,
        mild,
        classical,
        all_decayed,
        classical_not_slower,
        worst_classical_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_paper_network, discretize, discretize_wave_damped, ExteriorBc};

    fn skew() -> DiscreteSystem {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]);
        DiscreteSystem::custom(a, vec![1.0, 1.0]).unwrap()
    }

    fn full(n: usize) -> DiscreteSystem {
        discretize(
            &build_paper_network(1.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn skew_system_conserves_energy() {
        let sys = skew();
        let z0 = InitialData::from_state(vec![1.0, 0.5], "test");
        let trace = simulate_with_stride(&sys, &z0, 100.0, 0.01, 1).unwrap();
        assert_eq!(trace.times.len(), 10_001);
        let e0 = trace.energies[0];
        assert!(trace.energies.iter().all(|e| (e - e0).abs() <= 1e-12 * e0));
    }

    #[test]
    fn zero_data_stays_zero() {
        let sys = full(16);
        let trace = simulate(&sys, &InitialData::zero(&sys), 1.0, 0.01).unwrap();
        assert!(trace.energies.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn energy_non_increasing_for_any_step() {
        let sys = full(16);
        let z0 = InitialData::random(&sys, 3);
        for dt in [1e-3, 0.1, 2.0] {
            let trace = simulate_with_stride(&sys, &z0, 20.0, dt, 1).unwrap();
            assert!(trace.is_non_increasing(1e-12), "dt={dt}");
        }
    }

    #[test]
    fn deterministic() {
        let sys = full(16);
        let z0 = classical_initial_data(&sys, 9).unwrap();
        let a = simulate(&sys, &z0, 2.0, 0.01).unwrap();
        let b = simulate(&sys, &z0, 2.0, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn second_order_in_time() {
        let sys = full(16);
        let z0 = classical_initial_data(&sys, 1).unwrap();
        let e = |dt: f64| simulate(&sys, &z0, 1.0, dt).unwrap().final_energy();
        let (e1, e2, e3) = (e(0.02), e(0.01), e(0.005));
        let order = ((e1 - e2) / (e2 - e3)).abs().log2();
        assert!(order >= 1.8, "order {order}");
    }

    #[test]
    fn classical_data_is_normalized_and_seeded() {
        let sys = full(32);
        let a = classical_initial_data(&sys, 1).unwrap();
        let b = classical_initial_data(&sys, 2).unwrap();
        assert!((sys.energy(&a.state) - 1.0).abs() < 1e-12);
        assert_ne!(a.state, b.state);
        // ‖A(I - A)^{-1} r‖ ≤ 2‖r‖ and ‖(I - A)^{-1} r‖ ≥ ‖r‖ / ‖I - A‖ give a
        // refinement-independent bound only for the ratio below, which is at most 2‖r‖/‖z‖
        let az = sys.apply(&a.state);
        assert!(sys.norm_sq(&az).sqrt() / sys.norm_sq(&a.state).sqrt() < 1e3);
    }

    #[test]
    fn synthetic_decay() {
        let times: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        let trace = EnergyTrace {
            energies: times.iter().map(|t| t.powi(-4)).collect(),
            times,
            n: 0,
            dt: 1.0,
            variant: "custom".into(),
            seed: None,
            betas: vec![],
        };
        let fit = decay_exponent(&trace, [5.0, 50.0]).unwrap();
        assert!((fit.alpha - 4.0).abs() < 1e-12 && !fit.truncated);
    }

    #[test]
    fn underflow_truncates_the_window() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let trace = EnergyTrace {
            energies: times.iter().map(|t| (-2.0 * t).exp()).collect(),
            times,
            n: 0,
            dt: 1.0,
            variant: "custom".into(),
            seed: None,
            betas: vec![],
        };
        let fit = decay_exponent(&trace, [5.0, 50.0]).unwrap();
        assert!(fit.truncated && fit.fit.window[1] <= 35.0);
        assert!(matches!(
            decay_exponent(&trace, [40.0, 50.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn damped_wave_energy_drops() {
        let sys = discretize_wave_damped(
            &build_paper_network(1.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).unwrap(),
            64,
        )
        .unwrap();
        let z0 = classical_initial_data(&sys, 4).unwrap();
        let trace = simulate(&sys, &z0, 10.0, 1e-2).unwrap();
        assert!(trace.is_non_increasing(1e-12));
        assert!(trace.final_energy() < 1e-2);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = full(8);
        let z0 = InitialData::zero(&sys);
        assert!(simulate(&sys, &z0, 1.0, 2.0).is_err());
        assert!(simulate(&sys, &z0, 1.0, 0.0).is_err());
        assert!(simulate(&sys, &InitialData::zero(&skew()), 1.0, 0.1).is_err());
    }
}
