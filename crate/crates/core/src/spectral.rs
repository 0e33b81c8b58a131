//! Resolvent norms along the imaginary axis in the energy norm.
//!
//! With weights `m`, `‖R‖_h = ‖W^{1/2} R W^{-1/2}‖₂`. The largest singular
//! value of `C = W^{1/2} (is - A_h)^{-1} W^{-1/2}` is found by power iteration
//! on `C Cᴴ`, which only needs one sparse LU of `is - A_h` and its adjoint
//! solve per step.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, BandedLu, CsrMatrix};
use crate::network::DiscreteSystem;
use crate::transfer::{resolvent_bound_estimate, HeatEdgeParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_ITERATIONS: usize = 500;
pub const RELATIVE_TOLERANCE: f64 = 1e-6;
/// A factorization whose pivot ratio falls below this is treated as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;
/// `invertible` in [`kernel_check`] means `σ_min > KERNEL_TOLERANCE · ‖A_h‖`.
pub const KERNEL_TOLERANCE: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `is - A_h` as a complex sparse matrix.
fn shifted_operator(sys: &DiscreteSystem, s: f64) -> CsrMatrix<Complex64> {
    sys.generator().map(|v| c(v, 0.0)).shifted(c(0.0, s), c(-1.0, 0.0))
}

/// Largest singular value of the weighted inverse of `m`, by power iteration.
fn inverse_norm(m: &CsrMatrix<Complex64>, weights: &[f64]) -> Result<f64> {
    let lu = BandedLu::factor(m)?;
    let pivot_ratio = lu.pivot_ratio();
    if pivot_ratio < SINGULAR_PIVOT_RATIO {
        return Err(Error::IllConditioned { pivot_ratio });
    }
    let sq: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let dim = weights.len();
    let mut x = vec![c(1.0, 0.0); dim];
    let mut estimate = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        // y = Cᴴ x = W^{-1/2} (is - A)^{-H} W^{1/2} x
        let mut y: Vec<Complex64> = x.iter().zip(&sq).map(|(v, s)| v * s).collect();
        lu.solve_adjoint_in_place(&mut y);
        y.iter_mut().zip(&sq).for_each(|(v, s)| *v /= s);
        let next = norm2(&y);
        // x = C y
        y.iter_mut().zip(&sq).for_each(|(v, s)| *v /= s);
        lu.solve_in_place(&mut y);
        y.iter_mut().zip(&sq).for_each(|(v, s)| *v *= s);
        x = y;
        if !next.is_finite() {
            return Err(Error::Singular { column: 0 });
        }
        if (next - estimate).abs() <= RELATIVE_TOLERANCE * next {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        estimate,
    })
}

/// `‖(is - A_h)^{-1}‖_h`.
pub fn resolvent_norm(sys: &DiscreteSystem, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("frequency must be finite, got {s}")));
    }
    inverse_norm(&shifted_operator(sys, s), sys.weights())
}

/// Dense reference value of [`resolvent_norm`] from a full complex SVD.
/// Intended for dimensions up to a few hundred.
pub fn dense_resolvent_norm(sys: &DiscreteSystem, s: f64) -> f64 {
    let dim = sys.dim();
    let w = sys.weights();
    let mut b = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        b[(i, i)] = c(0.0, s);
    }
    for (r, col, v) in sys.generator().triplets() {
        b[(r, col)] -= c(v * (w[r] / w[col]).sqrt(), 0.0);
    }
    let sv = b.singular_values();
    1.0 / sv.min()
}

/// Weighted spectral norm `‖A_h‖_h` by power iteration on `BᵀB`.
pub fn operator_norm(sys: &DiscreteSystem) -> f64 {
    let a = sys.generator();
    let at = a.transpose();
    let sq: Vec<f64> = sys.weights().iter().map(|w| w.sqrt()).collect();
    let mut x = vec![1.0; sys.dim()];
    let mut estimate = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        // B = W^{1/2} A W^{-1/2}
        let y: Vec<f64> = x.iter().zip(&sq).map(|(v, s)| v / s).collect();
        let mut y = a.matvec(&y);
        y.iter_mut().zip(&sq).for_each(|(v, s)| *v *= s);
        let next = norm2(&y);
        y.iter_mut().zip(&sq).for_each(|(v, s)| *v *= s);
        let mut z = at.matvec(&y);
        z.iter_mut().zip(&sq).for_each(|(v, s)| *v /= s);
        x = z;
        if next == 0.0 || (next - estimate).abs() <= RELATIVE_TOLERANCE * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub sigma_min: f64,
    pub operator_norm: f64,
    pub invertible: bool,
}

/// Smallest weighted singular value of `A_h`. A singular factorization is a
/// valid outcome and reports `σ_min = 0`.
pub fn kernel_check(sys: &DiscreteSystem) -> KernelReport {
    let norm = operator_norm(sys);
    let sigma_min = match resolvent_norm(sys, 0.0) {
        Ok(r) => 1.0 / r,
        Err(Error::NoConvergence { estimate, .. }) => 1.0 / estimate,
        Err(_) => 0.0,
    };
    KernelReport {
        sigma_min,
        operator_norm: norm,
        invertible: sigma_min > KERNEL_TOLERANCE * norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFlag {
    Ok,
    /// `|s| h > 1`: the grid no longer resolves the frequency.
    Unresolved,
    /// The solve failed (shift on or next to the spectrum, or no convergence).
    Failed,
}

impl ScanFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanFlag::Ok => "ok",
            ScanFlag::Unresolved => "unresolved",
            ScanFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub s_values: Vec<f64>,
    /// `NaN` where the flag is `Failed`.
    pub norms: Vec<f64>,
    pub flags: Vec<ScanFlag>,
    pub n: usize,
    pub variant: String,
    pub betas: Vec<f64>,
}

impl ResolventScan {
    /// `(s, norm)` pairs whose flag is `Ok`.
    pub fn resolved(&self) -> (Vec<f64>, Vec<f64>) {
        self.s_values
            .iter()
            .zip(&self.norms)
            .zip(&self.flags)
            .filter(|(_, f)| **f == ScanFlag::Ok)
            .map(|((s, r), _)| (*s, *r))
            .unzip()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,norm,flag\n");
        for ((s, r), f) in self.s_values.iter().zip(&self.norms).zip(&self.flags) {
            out.push_str(&format!("{s:.12e},{r:.12e},{}\n", f.as_str()));
        }
        out
    }
}

/// Evaluates [`resolvent_norm`] at every frequency in parallel.
pub fn scan_resolvent(sys: &DiscreteSystem, s_grid: &[f64]) -> Result<ResolventScan> {
    if s_grid.is_empty() {
        return Err(Error::InvalidParameter("empty frequency grid".into()));
    }
    let h = if sys.n() > 0 { 1.0 / sys.n() as f64 } else { 0.0 };
    let results: Vec<(f64, ScanFlag)> = s_grid
        .par_iter()
        .map(|&s| match resolvent_norm(sys, s) {
            Ok(r) if s.abs() * h > 1.0 => (r, ScanFlag::Unresolved),
            Ok(r) => (r, ScanFlag::Ok),
            Err(_) => (f64::NAN, ScanFlag::Failed),
        })
        .collect();
    let (norms, flags) = results.into_iter().unzip();
    Ok(ResolventScan {
        s_values: s_grid.to_vec(),
        norms,
        flags,
        n: sys.n(),
        variant: sys.variant.name().to_string(),
        betas: sys.betas.clone(),
    })
}

/// Eigenvalue of `A_h` nearest to `is`, by inverse iteration from a fixed
/// pseudo-random start. Returns the estimate after `iterations` steps.
pub fn nearest_eigenvalue(sys: &DiscreteSystem, s: f64, iterations: usize) -> Result<Complex64> {
    let lu = BandedLu::factor(&shifted_operator(sys, s))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut x: Vec<Complex64> = (0..sys.dim()).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let mut theta = c(0.0, 0.0);
    for _ in 0..iterations.max(1) {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let y = lu.solve(&x);
        // y ≈ x / (is - λ)
        theta = dot(&x, &y);
        x = y;
    }
    if theta.norm() == 0.0 || !theta.is_finite() {
        return Err(Error::Singular { column: 0 });
    }
    Ok(c(0.0, s) - theta.inv())
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    /// Frequencies below this are left out (the excluded band `(-ε, ε)`).
    pub epsilon: f64,
    /// Distance between inverse-iteration shifts along the axis.
    pub shift_spacing: f64,
    pub inverse_iterations: usize,
    /// Eigenvalues with `Re λ < -max_damping` are too far from the axis to
    /// produce a peak worth refining.
    pub max_damping: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            shift_spacing: 0.5,
            inverse_iterations: 25,
            max_damping: 1.0,
        }
    }
}

/// A local maximum of `s ↦ ‖(is - A_h)^{-1}‖_h` next to an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventPeak {
    pub s: f64,
    pub norm: f64,
    pub eigenvalue: Complex64,
}

/// `M(s) = sup_{ε ≤ σ ≤ s} ‖(iσ - A_h)^{-1}‖_h` on a grid.
///
/// Along the axis the resolvent norm is a comb of narrow resonance peaks
/// sitting on an `O(1)` floor, so pointwise samples mostly see the floor.
/// The running supremum is the quantity whose growth rate the `≲` bounds
/// describe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventEnvelope {
    /// `norms` holds `M(s)`.
    pub envelope: ResolventScan,
    /// Plain `‖(is - A_h)^{-1}‖_h` at the grid points.
    pub samples: ResolventScan,
    pub peaks: Vec<ResolventPeak>,
    pub options: EnvelopeOptions,
}

/// Locates the resonance peaks in `[ε, max s_grid]` and evaluates the running
/// supremum at every grid point. The grid must be increasing with entries `≥ ε`.
pub fn resolvent_envelope(sys: &DiscreteSystem, s_grid: &[f64], options: EnvelopeOptions) -> Result<ResolventEnvelope> {
    if s_grid.is_empty() {
        return Err(Error::InvalidParameter("empty frequency grid".into()));
    }
    if s_grid.windows(2).any(|w| w[0] >= w[1]) || s_grid[0] < options.epsilon {
        return Err(Error::InvalidParameter(format!(
            "envelope grid must increase from at least ε = {}",
            options.epsilon
        )));
    }
    if !(options.shift_spacing > 0.0) {
        return Err(Error::InvalidParameter("shift spacing must be positive".into()));
    }
    let lo = options.epsilon;
    let hi = *s_grid.last().unwrap();
    let count = ((hi - lo) / options.shift_spacing).ceil() as usize + 1;
    let shifts: Vec<f64> = (0..count)
        .map(|k| (lo + k as f64 * options.shift_spacing).min(hi))
        .collect();
    let eigenvalues: Vec<Complex64> = shifts
        .par_iter()
        .filter_map(|&s| nearest_eigenvalue(sys, s, options.inverse_iterations).ok())
        .filter(|l| l.re >= -options.max_damping && l.im >= lo && l.im <= hi)
        .collect();
    // estimates of one eigenvalue (or a tight cluster) from neighbouring
    // shifts differ slightly; refine each group once over its hull
    let mut eigenvalues = eigenvalues;
    eigenvalues.sort_by(|a, b| a.im.total_cmp(&b.im));
    let mut groups: Vec<(f64, f64, Complex64)> = Vec::new();
    for l in eigenvalues {
        let w = (3.0 * l.re.abs()).max(0.01);
        match groups.last_mut() {
            Some(g) if l.im - w <= g.1 => {
                g.1 = g.1.max(l.im + w);
                if l.re > g.2.re {
                    g.2 = l;
                }
            }
            _ => groups.push((l.im - w, l.im + w, l)),
        }
    }
    let norm = |s: f64| resolvent_norm(sys, s).unwrap_or(f64::INFINITY);
    let mut peaks: Vec<ResolventPeak> = groups
        .par_iter()
        .map(|&(a, b, l)| {
            let (a, b) = (a.max(lo), b.min(hi));
            let (s, m) = golden_max(norm, a, b, 1e-4 * (b - a));
            ResolventPeak {
                s,
                norm: m,
                eigenvalue: l,
            }
        })
        .collect();
    peaks.sort_by(|a, b| a.s.total_cmp(&b.s));

    let samples = scan_resolvent(sys, s_grid)?;
    let floor = norm(lo);
    let mut running = floor;
    let mut next_peak = 0;
    let mut envelope = samples.clone();
    for (j, &s) in s_grid.iter().enumerate() {
        while next_peak < peaks.len() && peaks[next_peak].s <= s {
            running = running.max(peaks[next_peak].norm);
            next_peak += 1;
        }
        if samples.flags[j] != ScanFlag::Failed {
            running = running.max(samples.norms[j]);
        }
        envelope.norms[j] = running;
        if !running.is_finite() {
            envelope.flags[j] = ScanFlag::Failed;
        }
    }
    Ok(ResolventEnvelope {
        envelope,
        samples,
        peaks,
        options,
    })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    // exp(ln x) can miss x by an ulp, which would drop the ends from closed windows
    grid[0] = lo;
    grid[count - 1] = hi;
    grid
}

/// `y ≈ exp(log_prefactor) · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub window: [f64; 2],
    pub points: usize,
}

/// Least squares on `(ln x, ln y)` over the points with `x` in `window`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: [f64; 2]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("xs and ys differ in length".into()));
    }
    if !(window[0] < window[1]) {
        return Err(Error::InvalidParameter(format!("empty window {window:?}")));
    }
    let mut pts = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < window[0] || x > window[1] {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::InvalidParameter(format!("non-positive data ({x}, {y})")));
        }
        pts.push((x.ln(), y.ln()));
    }
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} points in window {window:?}, need 5",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let exponent = sxy / sxx;
    let log_prefactor = my - exponent * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - log_prefactor - exponent * p.0).powi(2)).sum();
    Ok(PowerLawFit {
        exponent,
        log_prefactor,
        residual: (rss / k).sqrt(),
        window,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub s: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub rows: Vec<BoundRow>,
    /// Fits over the whole scan; `None` with fewer than five rows.
    pub measured_fit: Option<PowerLawFit>,
    pub bound_fit: Option<PowerLawFit>,
    /// `max ratio / min ratio`.
    pub ratio_spread: f64,
}

impl BoundComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,measured,bound,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.s, r.measured, r.bound, r.ratio
            ));
        }
        out
    }
}

/// Tabulates measured resolvent norms against `μ(s)/η(s)` for the heat
/// diffusivities `betas`. Rows with a failed solve are skipped.
pub fn compare_to_theorem_bound(scan: &ResolventScan, betas: [f64; 3]) -> Result<BoundComparison> {
    let params = HeatEdgeParams::triple(betas)?;
    let mut rows = Vec::new();
    for ((&s, &m), f) in scan.s_values.iter().zip(&scan.norms).zip(&scan.flags) {
        if s == 0.0 {
            return Err(Error::InvalidParameter("frequency 0 has no bound".into()));
        }
        if *f == ScanFlag::Failed {
            continue;
        }
        let bound = resolvent_bound_estimate(s, &params)?;
        rows.push(BoundRow {
            s,
            measured: m,
            bound,
            ratio: m / bound,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no successful scan points".into()));
    }
    let abs_s: Vec<f64> = rows.iter().map(|r| r.s.abs()).collect();
    let lo = abs_s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = abs_s.iter().cloned().fold(0.0, f64::max);
    let fit = |ys: Vec<f64>| fit_power_law(&abs_s, &ys, [lo, hi]).ok();
    let measured_fit = fit(rows.iter().map(|r| r.measured).collect());
    let bound_fit = fit(rows.iter().map(|r| r.bound).collect());
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(BoundComparison {
        rows,
        measured_fit,
        bound_fit,
        ratio_spread: max / min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        build_paper_network, discretize, discretize_heat_dirichlet, discretize_wave_damped, ExteriorBc,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64) -> DiscreteSystem {
        DiscreteSystem::custom(CsrMatrix::from_triplets(1, 1, &[(0, 0, a)]), vec![1.0]).unwrap()
    }

    fn five_edge_network(bc: ExteriorBc) -> crate::network::NetworkSpec {
        build_paper_network(1.0, 1.0, 1.0, bc).unwrap()
    }

    #[test]
    fn scalar_resolvent() {
        let sys = scalar(-1.0);
        for s in [0.0, 0.5, 3.0, -7.0] {
            let r = resolvent_norm(&sys, s).unwrap();
            assert!((r - 1.0 / (1.0 + s * s).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_shift_is_an_error() {
        assert!(resolvent_norm(&scalar(0.0), 0.0).is_err());
    }

    #[test]
    fn weights_enter_the_norm() {
        // A = [[-1, 1], [0, -1]] with weights (1, 4) vs. Euclidean
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (0, 1, 1.0), (1, 1, -1.0)]);
        let sys = DiscreteSystem::custom(a, vec![1.0, 4.0]).unwrap();
        let r = resolvent_norm(&sys, 0.0).unwrap();
        // W^{1/2} A^{-1} W^{-1/2} = [[-1, -1/2], [0, -1]]
        let m = nalgebra::Matrix2::<f64>::new(-1.0, -0.5, 0.0, -1.0);
        let expected = m.singular_values().max();
        assert!((r - expected).abs() < 1e-6 * expected, "{r} vs {expected}");
        assert!((dense_resolvent_norm(&sys, 0.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_oracle_on_full_network() {
        let sys = discretize(&five_edge_network(ExteriorBc::DirichletVelocity), 16).unwrap();
        for s in [0.0, 1.5, 10.0, -4.0] {
            let a = resolvent_norm(&sys, s).unwrap();
            let b = dense_resolvent_norm(&sys, s);
            assert!((a - b).abs() <= 1e-5 * b, "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let sys = discretize(&five_edge_network(ExteriorBc::DirichletVelocity), 32).unwrap();
        for s in [0.7, 5.0, 23.0] {
            let a = resolvent_norm(&sys, s).unwrap();
            let b = resolvent_norm(&sys, -s).unwrap();
            assert!((a - b).abs() <= 1e-6 * a);
        }
    }

    #[test]
    fn heat_dirichlet_peak_at_zero() {
        let sys = discretize_heat_dirichlet(&five_edge_network(ExteriorBc::DirichletVelocity), 32).unwrap();
        let r0 = resolvent_norm(&sys, 0.0).unwrap();
        for s in [0.5, 3.0, 30.0, -80.0] {
            assert!(resolvent_norm(&sys, s).unwrap() < r0);
        }
        // self-adjoint: 1/|λ_max| with λ_max ≈ -π²
        assert!((1.0 / r0 - std::f64::consts::PI.powi(2)).abs() < 0.2 * std::f64::consts::PI.powi(2));
    }

    #[test]
    fn kernel_dichotomy() {
        let dir = kernel_check(&discretize(&five_edge_network(ExteriorBc::DirichletVelocity), 32).unwrap());
        assert!(dir.invertible, "{dir:?}");
        let neu = kernel_check(&discretize(&five_edge_network(ExteriorBc::NeumannStress), 32).unwrap());
        assert!(!neu.invertible && neu.sigma_min <= 1e-8, "{neu:?}");
        let heat =
            kernel_check(&discretize_heat_dirichlet(&five_edge_network(ExteriorBc::DirichletVelocity), 32).unwrap());
        assert!(heat.invertible);
    }

    #[test]
    fn operator_norm_matches_dense() {
        let sys = discretize_wave_damped(&five_edge_network(ExteriorBc::DirichletVelocity), 8).unwrap();
        let dim = sys.dim();
        let w = sys.weights();
        let mut b = DMatrix::<f64>::zeros(dim, dim);
        for (r, col, v) in sys.generator().triplets() {
            b[(r, col)] = v * (w[r] / w[col]).sqrt();
        }
        let expected = b.singular_values().max();
        assert!((operator_norm(&sys) - expected).abs() < 1e-4 * expected);
    }

    #[test]
    fn scan_is_elementwise_and_flags_unresolved() {
        let sys = discretize(&five_edge_network(ExteriorBc::DirichletVelocity), 8).unwrap();
        let grid = [1.0, 4.0, 20.0];
        let scan = scan_resolvent(&sys, &grid).unwrap();
        assert_eq!(scan.norms[1], resolvent_norm(&sys, 4.0).unwrap());
        assert_eq!(scan.flags, vec![ScanFlag::Ok, ScanFlag::Ok, ScanFlag::Unresolved]);
        let rev: Vec<f64> = grid.iter().rev().cloned().collect();
        let back = scan_resolvent(&sys, &rev).unwrap();
        let mut norms = back.norms.clone();
        norms.reverse();
        assert_eq!(norms, scan.norms);
        assert!(scan_resolvent(&sys, &[]).is_err());
        assert!(scan.to_csv().starts_with("s,norm,flag\n"));
    }

    #[test]
    fn exact_power_laws() {
        let xs = log_grid(1.0, 100.0, 20);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.sqrt()).collect();
        let f = fit_power_law(&xs, &ys, [1.0, 100.0]).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12 && f.residual <= 1e-12);
        assert!((f.log_prefactor - 3f64.ln()).abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(-4)).collect();
        assert!((fit_power_law(&xs, &ys, [1.0, 100.0]).unwrap().exponent + 4.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = log_grid(1.0, 1e4, 200);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.sqrt() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let f = fit_power_law(&xs, &ys, [1.0, 1e4]).unwrap();
        assert!((f.exponent - 0.5).abs() < 0.05);
    }

    #[test]
    fn fit_rejections() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_power_law(&xs, &xs, [0.0, 10.0]),
            Err(Error::InsufficientData(_))
        ));
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 2.0, 0.0, 4.0, 5.0];
        assert!(fit_power_law(&xs, &ys, [0.0, 10.0]).is_err());
        assert!(fit_power_law(&xs, &xs, [3.0, 3.0]).is_err());
    }

    #[test]
    fn bound_comparison_single_point() {
        let sys = discretize(&five_edge_network(ExteriorBc::DirichletVelocity), 16).unwrap();
        let scan = scan_resolvent(&sys, &[5.0]).unwrap();
        let cmp = compare_to_theorem_bound(&scan, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert!(cmp.measured_fit.is_none());
        assert_eq!(cmp.ratio_spread, 1.0);
    }
}
