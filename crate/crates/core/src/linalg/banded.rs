use super::{CsrMatrix, Scalar};
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
///
/// Returns `perm` with `perm[new] = old`. Disconnected components are
/// ordered one after the other, each started from a pseudo-peripheral vertex.
pub fn rcm_ordering<T: Scalar>(m: &CsrMatrix<T>) -> Vec<usize> {
    let n = m.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, c, _) in m.triplets() {
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, current);
        let far = level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if far <= ecc && current != seed {
            break;
        }
        ecc = far;
        // farthest vertex of minimum degree
        let cand = (0..adj.len())
            .filter(|&v| level[v] == far)
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        if cand == current {
            break;
        }
        current = cand;
    }
    current
}

/// LU factorization with partial pivoting of a banded matrix, stored in the
/// LAPACK `gbtrf` layout after a bandwidth-reducing symmetric permutation.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, `ldab = 2*kl + ku + 1` rows per column.
    ab: Vec<T>,
    ipiv: Vec<usize>,
    perm: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    /// Factors a square sparse matrix. The ordering is computed with reverse
    /// Cuthill-McKee.
    pub fn factor(m: &CsrMatrix<T>) -> Result<Self> {
        let perm = rcm_ordering(m);
        Self::factor_with_ordering(m, perm)
    }

    pub fn factor_with_ordering(m: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "banded LU needs a square matrix");
        assert_eq!(perm.len(), n);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, c, _) in m.triplets() {
            let (i, j) = (inv[r], inv[c]);
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let ldab = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![T::zero(); ldab * n],
            ipiv: vec![0; n],
            perm,
        };
        for (r, c, v) in m.triplets() {
            let (i, j) = (inv[r], inv[c]);
            *lu.at_mut(i, j) = v;
        }
        lu.factorize()?;
        Ok(lu)
    }

    #[inline]
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // row kv + i - j of column j, kv = kl + ku
        j * self.ldab() + self.kl + self.ku + i - j
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    fn factorize(&mut self) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.at(j, j).modulus();
            for p in 1..=km {
                let v = self.at(j + p, j).modulus();
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            self.ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { column: j });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv_piv = T::one() / self.at(j, j);
                for r in j + 1..=j + km {
                    *self.at_mut(r, j) *= inv_piv;
                }
                for c in j + 1..=ju {
                    let ujc = self.at(j, c);
                    if ujc == T::zero() {
                        continue;
                    }
                    for r in j + 1..=j + km {
                        let l = self.at(r, j);
                        *self.at_mut(r, c) -= l * ujc;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(lower, upper)` bandwidth of the permuted matrix before factorization.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Ratio of the smallest to the largest pivot modulus; a cheap indicator
    /// of near-singularity.
    pub fn pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for j in 0..self.n {
            let d = self.at(j, j).modulus();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        self.solve_permuted(&mut x);
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `M^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        self.solve_adjoint_permuted(&mut x);
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    pub fn solve_adjoint(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_adjoint_in_place(&mut x);
        x
    }

    fn solve_permuted(&self, b: &mut [T]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let l = self.ipiv[j];
            if l != j {
                b.swap(j, l);
            }
            let bj = b[j];
            if bj != T::zero() {
                for r in j + 1..=(j + self.kl).min(n - 1) {
                    b[r] -= self.at(r, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            if bj != T::zero() {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.at(i, j) * bj;
                }
            }
        }
    }

    fn solve_adjoint_permuted(&self, b: &mut [T]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(kv)..j {
                acc -= self.at(i, j).conj() * b[i];
            }
            b[j] = acc / self.at(j, j).conj();
        }
        for j in (0..n).rev() {
            let mut acc = b[j];
            for r in j + 1..=(j + self.kl).min(n - 1) {
                acc -= self.at(r, j).conj() * b[r];
            }
            b[j] = acc;
            let l = self.ipiv[j];
            if l != j {
                b.swap(j, l);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, density: f64, seed: u64) -> CsrMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            // weak diagonal so that pivoting is exercised
            t.push((i, i, Complex64::new(rng.gen_range(-0.1..0.1), 0.0)));
            for j in 0..n {
                if i != j && rng.gen::<f64>() < density {
                    t.push((i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_match_matvec() {
        for seed in 0..5 {
            let m = random_sparse(40, 0.08, seed);
            let lu = BandedLu::factor(&m).unwrap();
            let x: Vec<Complex64> = (0..40)
                .map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5))
                .collect();
            let b = m.matvec(&x);
            let y = lu.solve(&b);
            let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "seed {seed}: err {err}");

            let adj = m.transpose().map(|v| v.conj());
            let b = adj.matvec(&x);
            let y = lu.solve_adjoint(&b);
            let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "seed {seed}: adjoint err {err}");
        }
    }

    #[test]
    fn rcm_narrows_a_shuffled_path() {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut label: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            label.swap(i, rng.gen_range(0..=i));
        }
        let mut t = Vec::new();
        for i in 0..n {
            t.push((label[i], label[i], 2.0));
            if i + 1 < n {
                t.push((label[i], label[i + 1], -1.0));
                t.push((label[i + 1], label[i], -1.0));
            }
        }
        let m = CsrMatrix::from_triplets(n, n, &t);
        let lu = BandedLu::factor(&m).unwrap();
        assert_eq!(lu.bandwidth(), (1, 1));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(BandedLu::factor(&m), Err(Error::Singular { .. })));
    }
}
