//! Closed-form transfer functions of the heat edges and of the three-edge
//! heat network, and the frequency-domain quantities built from them.
//!
//! A single heat edge `w_t = β w_xx` on `(0, 1)` with Dirichlet inputs
//! `(w(0), w(1))` and flux outputs `(-β w'(0), β w'(1))` has the symmetric
//! transfer matrix
//!
//! ```text
//! P(λ) = [[p1, p2], [p2, p1]],  p1 = √(λβ) coth ν,  p2 = -√(λβ) / sinh ν,  ν = √(λ/β)
//! ```
//!
//! with `P(0) = β [[1, -1], [-1, 1]]`. The heat network glues three such edges
//! into a triangle; its transfer matrix is `P₂(λ) = R diag(P¹, P², P³) Rᵀ`.

use crate::error::{Error, Result};
use crate::linalg::spectral_norm3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Below this `|ν|` the `λ = 0` values are returned instead of the closed form.
pub const SMALL_NU: f64 = 1e-4;

/// Above this `Re ν` the hyperbolic functions are evaluated through `e^{-2ν}`.
pub const LARGE_NU: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatEdgeParams {
    beta: f64,
}

impl HeatEdgeParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be positive, got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Parameters for the three heat edges of the network.
    pub fn triple(betas: [f64; 3]) -> Result<[Self; 3]> {
        Ok([Self::new(betas[0])?, Self::new(betas[1])?, Self::new(betas[2])?])
    }
}

/// Value of a transfer function at one complex frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub lambda: Complex64,
    /// Row-major square matrix.
    pub entries: Vec<Vec<Complex64>>,
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i][j]
    }

    pub fn to_array3(&self) -> [[Complex64; 3]; 3] {
        assert_eq!(self.dim(), 3, "not a 3x3 transfer matrix");
        let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (i, row) in self.entries.iter().enumerate() {
            a[i].copy_from_slice(row);
        }
        a
    }

    pub fn real_part(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|r| r.iter().map(|z| z.re).collect()).collect()
    }
}

/// `Re P₂(is)` assembled from the real-axis formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealPartMatrix {
    pub s: f64,
    pub entries: [[f64; 3]; 3],
}

impl RealPartMatrix {
    /// True when every row has a positive diagonal strictly larger than the
    /// sum of the moduli of its off-diagonal entries.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        (0..3).all(|i| {
            let off: f64 = (0..3).filter(|&j| j != i).map(|j| self.entries[i][j].abs()).sum();
            self.entries[i][i] > 0.0 && self.entries[i][i] > off
        })
    }
}

/// The 3×6 interconnection matrix gluing three two-port heat edges into the
/// heat triangle: row `j` collects the two edge ends meeting at vertex `j+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterconnectionMatrix {
    pub entries: [[u8; 6]; 3],
}

pub const INTERCONNECTION: InterconnectionMatrix = InterconnectionMatrix {
    entries: [[1, 0, 0, 0, 0, 1], [0, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 0]],
};

/// `(p1(λ), p2(λ))` for one heat edge, assuming validated inputs.
fn edge_entries(lambda: Complex64, beta: f64) -> (Complex64, Complex64) {
    let nu = (lambda / beta).sqrt();
    if nu.norm() < SMALL_NU {
        return (Complex64::new(beta, 0.0), Complex64::new(-beta, 0.0));
    }
    // √(λβ) = β ν on the principal branch
    let root = nu * beta;
    let (coth, csch) = if nu.re > LARGE_NU {
        let e2 = (-2.0 * nu).exp();
        let denom = Complex64::new(1.0, 0.0) - e2;
        ((1.0 + e2) / denom, 2.0 * (-nu).exp() / denom)
    } else {
        (
            Complex64::new(1.0, 0.0) / nu.tanh(),
            Complex64::new(1.0, 0.0) / nu.sinh(),
        )
    };
    (root * coth, -root * csch)
}

fn check_half_plane(lambda: Complex64) -> Result<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::OutsideHalfPlane(format!("non-finite frequency {lambda}")));
    }
    if lambda.re < 0.0 {
        return Err(Error::OutsideHalfPlane(format!("Re λ = {} < 0", lambda.re)));
    }
    Ok(())
}

/// Transfer matrix of a single heat edge.
pub fn heat_edge_transfer(lambda: Complex64, params: HeatEdgeParams) -> Result<TransferMatrix> {
    check_half_plane(lambda)?;
    let (p1, p2) = edge_entries(lambda, params.beta);
    Ok(TransferMatrix {
        lambda,
        entries: vec![vec![p1, p2], vec![p2, p1]],
    })
}

/// Transfer matrix of the heat triangle, written out entrywise.
pub fn network_transfer_p2(lambda: Complex64, betas: &[HeatEdgeParams; 3]) -> Result<TransferMatrix> {
    check_half_plane(lambda)?;
    let [(a1, a2), (b1, b2), (c1, c2)] = betas.map(|p| edge_entries(lambda, p.beta));
    Ok(TransferMatrix {
        lambda,
        entries: vec![vec![a1 + c1, a2, c2], vec![a2, a1 + b1, b2], vec![c2, b2, b1 + c1]],
    })
}

/// The same matrix computed as `R diag(P¹, P², P³) Rᵀ`.
pub fn network_transfer_by_interconnection(lambda: Complex64, betas: &[HeatEdgeParams; 3]) -> Result<TransferMatrix> {
    let mut block = [[Complex64::new(0.0, 0.0); 6]; 6];
    for (k, p) in betas.iter().enumerate() {
        let edge = heat_edge_transfer(lambda, *p)?;
        for i in 0..2 {
            for j in 0..2 {
                block[2 * k + i][2 * k + j] = edge.get(i, j);
            }
        }
    }
    let r = INTERCONNECTION.entries;
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            for a in 0..6 {
                for b in 0..6 {
                    if r[i][a] == 1 && r[j][b] == 1 {
                        *e += block[a][b];
                    }
                }
            }
        }
    }
    Ok(TransferMatrix { lambda, entries })
}

/// `(q1, q2) = (Re p1(is), Re p2(is))` from the real-axis formulas.
pub fn q_entries(s: f64, beta: f64) -> (f64, f64) {
    let a = (s.abs() / (2.0 * beta)).sqrt();
    let (sa, ca) = a.sin_cos();
    if a > LARGE_NU {
        // divide through by sinh² a
        let csch = 2.0 * (-a).exp() / (1.0 - (-2.0 * a).exp());
        let coth = (1.0 + (-2.0 * a).exp()) / (1.0 - (-2.0 * a).exp());
        let denom = 1.0 + sa * sa * csch * csch;
        let q1 = beta * a * (coth + ca * sa * csch * csch) / denom;
        let q2 = -beta * a * (ca * csch + coth * sa * csch) / denom;
        (q1, q2)
    } else {
        let (sh, ch) = (a.sinh(), a.cosh());
        let denom = sh * sh + sa * sa;
        let q1 = beta * a * (ch * sh + ca * sa) / denom;
        let q2 = -beta * a * (ca * sh + ch * sa) / denom;
        (q1, q2)
    }
}

fn check_nonzero(s: f64) -> Result<()> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "frequency must be finite and nonzero, got {s}"
        )));
    }
    Ok(())
}

/// `Re P₂(is)` for `s ≠ 0`.
pub fn re_p2_on_axis(s: f64, betas: &[HeatEdgeParams; 3]) -> Result<RealPartMatrix> {
    check_nonzero(s)?;
    let [(a1, a2), (b1, b2), (c1, c2)] = betas.map(|p| q_entries(s, p.beta));
    Ok(RealPartMatrix {
        s,
        entries: [[a1 + c1, a2, c2], [a2, a1 + b1, b2], [c2, b2, b1 + c1]],
    })
}

/// Smallest eigenvalue of `Re P₂(is)`; the best constant `η(s)` with
/// `Re P₂(is) ≥ η(s) I`.
pub fn eta_lower_bound(s: f64, betas: &[HeatEdgeParams; 3]) -> Result<f64> {
    let re = re_p2_on_axis(s, betas)?;
    // symmetric QR keeps the absolute error at rounding level times the
    // norm; the closed-form cubic would not for the smallest eigenvalue
    let m = nalgebra::Matrix3::from_fn(|i, j| re.entries[i][j]);
    let min = m.symmetric_eigenvalues().min();
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite(min));
    }
    Ok(min)
}

/// `μ(s) = 1 + ‖P₂(1 + is)‖²`.
pub fn mu(s: f64, betas: &[HeatEdgeParams; 3]) -> f64 {
    let p = network_transfer_p2(Complex64::new(1.0, s), betas).expect("Re λ = 1 is admissible");
    let norm = spectral_norm3(&p.to_array3());
    1.0 + norm * norm
}

/// `μ(s)/η(s)`, the resolvent bound for the coupled generator up to an
/// unspecified constant.
pub fn resolvent_bound_estimate(s: f64, betas: &[HeatEdgeParams; 3]) -> Result<f64> {
    let eta = eta_lower_bound(s, betas)?;
    Ok(mu(s, betas) / eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn zero_frequency_is_beta_laplacian() {
        let p = heat_edge_transfer(c(0.0, 0.0), HeatEdgeParams::new(2.0).unwrap()).unwrap();
        assert_eq!(
            p.entries,
            vec![vec![c(2.0, 0.0), c(-2.0, 0.0)], vec![c(-2.0, 0.0), c(2.0, 0.0)]]
        );
    }

    #[test]
    fn unit_frequency_reference_values() {
        // coth(1) and -1/sinh(1), evaluated with 40-digit arithmetic
        let p = heat_edge_transfer(c(1.0, 0.0), HeatEdgeParams::new(1.0).unwrap()).unwrap();
        assert!(rel(p.get(0, 0), c(1.313_035_285_499_331_3, 0.0)) < 1e-14);
        assert!(rel(p.get(0, 1), c(-0.850_918_128_239_321_5, 0.0)) < 1e-14);
    }

    #[test]
    fn complex_frequency_reference_values() {
        // λ = 2+3i, β = 2: 40-digit reference
        let p = heat_edge_transfer(c(2.0, 3.0), HeatEdgeParams::new(2.0).unwrap()).unwrap();
        assert!(rel(p.get(0, 0), c(2.701_078_990_194_815, 0.873_872_339_767_808)) < 1e-13);
        assert!(rel(p.get(1, 0), c(-1.638_463_054_378_723, 0.390_366_924_192_45)) < 1e-13);
    }

    #[test]
    fn tiny_frequency_is_continuous() {
        let p = heat_edge_transfer(c(1e-8, 0.0), HeatEdgeParams::new(3.0).unwrap()).unwrap();
        assert!((p.get(0, 0) - c(3.0, 0.0)).norm() < 1e-3);
        assert!((p.get(0, 1) - c(-3.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn small_nu_switch_discontinuity_is_tiny() {
        let beta = 1.0;
        let lam = c(SMALL_NU * SMALL_NU * beta * 1.000001, 0.0);
        let (p1, p2) = edge_entries(lam, beta);
        assert!((p1 - c(beta, 0.0)).norm() < 1e-8);
        assert!((p2 + c(beta, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn rejects_left_half_plane_and_bad_beta() {
        let p = HeatEdgeParams::new(1.0).unwrap();
        assert!(matches!(
            heat_edge_transfer(c(-1e-3, 1.0), p),
            Err(Error::OutsideHalfPlane(_))
        ));
        assert!(HeatEdgeParams::new(0.0).is_err());
        assert!(HeatEdgeParams::new(-1.0).is_err());
        assert!(HeatEdgeParams::new(f64::NAN).is_err());
    }

    #[test]
    fn huge_frequency_is_finite() {
        let beta = 2.0;
        let lam = c(0.0, 1e12);
        let p = heat_edge_transfer(lam, HeatEdgeParams::new(beta).unwrap()).unwrap();
        let root = (lam * beta).sqrt();
        assert!(p.entries.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(rel(p.get(0, 0), root) < 1e-12);
        assert_eq!(p.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn network_at_zero_is_triangle_laplacian() {
        let b = HeatEdgeParams::triple([1.0; 3]).unwrap();
        let p = network_transfer_p2(c(0.0, 0.0), &b).unwrap();
        let expect = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(i, j), c(expect[i][j], 0.0));
            }
        }
    }

    #[test]
    fn explicit_formula_matches_interconnection() {
        let b = HeatEdgeParams::triple([1.0, 2.0, 3.0]).unwrap();
        for lam in [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 3.0), c(0.0, -40.0), c(5.0, 1e5)] {
            let direct = network_transfer_p2(lam, &b).unwrap();
            let glued = network_transfer_by_interconnection(lam, &b).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((direct.get(i, j) - glued.get(i, j)).norm() <= 1e-14 * direct.get(i, i).norm());
                }
            }
        }
    }

    #[test]
    fn interconnection_rows_and_columns() {
        for row in INTERCONNECTION.entries {
            assert_eq!(row.iter().filter(|&&x| x == 1).count(), 2);
        }
        for col in 0..6 {
            assert!(INTERCONNECTION.entries.iter().map(|r| r[col]).sum::<u8>() <= 1);
        }
    }

    #[test]
    fn eta_vanishes_at_origin_for_equal_betas() {
        let b = HeatEdgeParams::triple([1.0; 3]).unwrap();
        let small = eta_lower_bound(1e-2, &b).unwrap();
        let smaller = eta_lower_bound(1e-3, &b).unwrap();
        assert!(small < 1e-3 && smaller < small);
    }

    #[test]
    fn zero_frequency_rejected_on_axis() {
        let b = HeatEdgeParams::triple([1.0; 3]).unwrap();
        assert!(re_p2_on_axis(0.0, &b).is_err());
        assert!(eta_lower_bound(0.0, &b).is_err());
        assert!(resolvent_bound_estimate(0.0, &b).is_err());
    }

    #[test]
    fn reference_bound_at_s_100() {
        let b = HeatEdgeParams::triple([1.0; 3]).unwrap();
        let v = resolvent_bound_estimate(100.0, &b).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
