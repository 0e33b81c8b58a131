use num_complex::Complex64;

/// A 3×3 Hermitian matrix given by its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian3 {
    pub d: [f64; 3],
    /// `(a01, a02, a12)`
    pub off: [Complex64; 3],
}

impl Hermitian3 {
    pub fn from_real_symmetric(m: &[[f64; 3]; 3]) -> Self {
        Self {
            d: [m[0][0], m[1][1], m[2][2]],
            off: [m[0][1].into(), m[0][2].into(), m[1][2].into()],
        }
    }

    /// `M^H M` for an arbitrary complex 3×3 matrix.
    pub fn gram(m: &[[Complex64; 3]; 3]) -> Self {
        let entry = |i: usize, j: usize| -> Complex64 { (0..3).map(|k| m[k][i].conj() * m[k][j]).sum() };
        Self {
            d: [entry(0, 0).re, entry(1, 1).re, entry(2, 2).re],
            off: [entry(0, 1), entry(0, 2), entry(1, 2)],
        }
    }

    fn det(&self) -> f64 {
        let [a, b, c] = self.d;
        let [x, y, z] = self.off;
        // real for Hermitian matrices
        a * b * c + 2.0 * (x * z * y.conj()).re - a * z.norm_sqr() - b * y.norm_sqr() - c * x.norm_sqr()
    }
}

/// Eigenvalues of a 3×3 Hermitian matrix in ascending order, by the
/// trigonometric solution of the characteristic cubic.
///
/// The largest eigenvalue is accurate to rounding relative to the norm. The
/// lower two can lose about half the digits when they nearly coincide.
pub fn hermitian3_eigenvalues(m: &Hermitian3) -> [f64; 3] {
    let off_sq: f64 = m.off.iter().map(|z| z.norm_sqr()).sum();
    let q = (m.d[0] + m.d[1] + m.d[2]) / 3.0;
    let dev_sq: f64 = m.d.iter().map(|&x| (x - q) * (x - q)).sum();
    let p2 = dev_sq + 2.0 * off_sq;
    let scale = m.d.iter().map(|x| x.abs()).fold(0.0, f64::max).max(off_sq.sqrt());

    // scalar matrix, or within rounding of one
    if p2.sqrt() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return [q, q, q];
    }

    let p = (p2 / 6.0).sqrt();
    let shifted = Hermitian3 {
        d: [(m.d[0] - q) / p, (m.d[1] - q) / p, (m.d[2] - q) / p],
        off: [m.off[0] / p, m.off[1] / p, m.off[2] / p],
    };
    let r = (shifted.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let middle = 3.0 * q - largest - smallest;
    let mut ev = [smallest, middle, largest];
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Spectral norm (largest singular value) of a complex 3×3 matrix.
pub fn spectral_norm3(m: &[[Complex64; 3]; 3]) -> f64 {
    let ev = hermitian3_eigenvalues(&Hermitian3::gram(m));
    ev[2].max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_triangle() {
        let m = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        let ev = hermitian3_eigenvalues(&Hermitian3::from_real_symmetric(&m));
        assert!(ev[0].abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14 && (ev[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_matrix_uses_fallback() {
        let m = [[5.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 5.0]];
        assert_eq!(hermitian3_eigenvalues(&Hermitian3::from_real_symmetric(&m)), [5.0; 3]);
    }

    #[test]
    fn diagonal_is_sorted() {
        let m = [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1e6]];
        let ev = hermitian3_eigenvalues(&Hermitian3::from_real_symmetric(&m));
        assert!((ev[2] - 1e6).abs() < 1e-9, "{ev:?}");
        // the cluster {-1, 3} sits near a double root relative to 1e6
        assert!((ev[0] + 1.0).abs() < 1e-4 && (ev[1] - 3.0).abs() < 1e-4, "{ev:?}");
    }

    #[test]
    fn spectral_norm_of_rotation_times_scale() {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let m = [
            [2.0 * i, z, z],
            [z, z, Complex64::new(-1.0, 0.0)],
            [z, Complex64::new(0.5, 0.0), z],
        ];
        assert!((spectral_norm3(&m) - 2.0).abs() < 1e-14);
    }
}
