use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveheat::network::{boundary_node, discrete_transfer_matrix, NodePart};
use waveheat::spectral::{log_grid, ScanFlag};
use waveheat::transfer::q_entries;
use waveheat::{
    build_paper_network, discretize, discretize_heat_dirichlet, discretize_wave_damped, fit_power_law,
    heat_edge_transfer, mu, network_transfer_p2, re_p2_on_axis, resolvent_norm, scan_resolvent, simulate, ExteriorBc,
    HeatEdgeParams, InitialData,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn close_c(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

fn betas() -> impl Strategy<Value = [f64; 3]> {
    [0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0]
}

fn bc() -> impl Strategy<Value = ExteriorBc> {
    prop_oneof![Just(ExteriorBc::DirichletVelocity), Just(ExteriorBc::NeumannStress)]
}

/// `|s|` log-uniform over `[10^lo, 10^hi]` with a random sign.
fn frequency(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

fn random_state(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_matrices_are_symmetric(re in 0.0f64..50.0, im in -1e4f64..1e4, b in betas()) {
        prop_assume!(re > 0.0 || im.abs() > 1e-9);
        let lambda = Complex64::new(re, im);
        let params = HeatEdgeParams::triple(b).unwrap();
        let p = heat_edge_transfer(lambda, params[0]).unwrap();
        prop_assert!(close_c(p.get(0, 1), p.get(1, 0), 1e-12));
        let p2 = network_transfer_p2(lambda, &params).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(close_c(p2.get(i, j), p2.get(j, i), 1e-12));
            }
        }
    }

    #[test]
    fn conjugate_frequencies_give_conjugate_entries(re in 0.0f64..10.0, im in 1e-3f64..1e3, b in betas()) {
        let params = HeatEdgeParams::triple(b).unwrap();
        let p = network_transfer_p2(Complex64::new(re, im), &params).unwrap();
        let q = network_transfer_p2(Complex64::new(re, -im), &params).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(close_c(p.get(i, j), q.get(i, j).conj(), 1e-12));
            }
        }
    }

    #[test]
    fn real_part_formulas_agree_and_dominate(s in frequency(-3.0, 6.0), b in betas()) {
        let params = HeatEdgeParams::triple(b).unwrap();
        let re = re_p2_on_axis(s, &params).unwrap();
        let p = network_transfer_p2(Complex64::new(0.0, s), &params).unwrap();
        let scale = re.entries.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((re.entries[i][j] - p.get(i, j).re).abs() <= 1e-10 * scale,
                    "entry ({i},{j}): {} vs {}", re.entries[i][j], p.get(i, j).re);
                prop_assert_eq!(re.entries[i][j], re.entries[j][i]);
            }
        }
        prop_assert!(re.is_strictly_diagonally_dominant());
        prop_assert!(mu(s, &params) >= 1.0);
    }

    #[test]
    fn q_entries_satisfy_the_difference_of_squares_identity(s in frequency(-3.0, 3.0), beta in 0.1f64..5.0) {
        let (q1, q2) = q_entries(s, beta);
        let a = (s.abs() / (2.0 * beta)).sqrt();
        let (sh2, sn2) = (a.sinh().powi(2), a.sin().powi(2));
        let want = 0.5 * beta * s.abs() * (sh2 - sn2) / (sh2 + sn2);
        // for small a both sides are differences of nearly equal numbers; the
        // second term is the rounding error of forming q1² - q2²
        let tol = 1e-10 * want.abs() + 8.0 * f64::EPSILON * (q1 * q1 + q2 * q2);
        prop_assert!((q1 * q1 - q2 * q2 - want).abs() <= tol);
    }

    #[test]
    fn discrete_system_is_dissipative_with_exact_energy_identity(
        b in betas(), n in 8usize..48, boundary in bc(), seed in any::<u64>(), which in 0usize..3,
    ) {
        let spec = build_paper_network(b[0], b[1], b[2], boundary).unwrap();
        let sys = match which {
            0 => discretize(&spec, n),
            1 => discretize_wave_damped(&spec, n),
            _ => discretize_heat_dirichlet(&spec, n),
        }
        .unwrap();
        prop_assert!(sys.weights().iter().all(|&m| m > 0.0));
        let z = random_state(sys.dim(), seed);
        let power = sys.power(&z);
        let norm = sys.norm_sq(&z);
        prop_assert!(power <= 1e-12 * norm);
        let d = sys.dissipation(&z);
        prop_assert!(rel(power, -d) <= 1e-12 || (power + d).abs() <= 1e-14 * norm);
    }

    #[test]
    fn energy_never_increases(b in betas(), n in 8usize..20, boundary in bc(), seed in any::<u64>(), dt in 1e-3f64..2.0) {
        let spec = build_paper_network(b[0], b[1], b[2], boundary).unwrap();
        let sys = discretize(&spec, n).unwrap();
        let z0 = InitialData::random(&sys, seed);
        let trace = simulate(&sys, &z0, 40.0 * dt, dt).unwrap();
        prop_assert!(trace.is_non_increasing(1e-12));
        prop_assert_eq!(trace.times[0], 0.0);
    }

    #[test]
    fn power_laws_are_recovered(p in -3.0f64..3.0, c in -5.0f64..5.0, lo in 0.1f64..10.0, k in 5usize..60) {
        let xs = log_grid(lo, lo * 100.0, k);
        let ys: Vec<f64> = xs.iter().map(|x| c.exp() * x.powf(p)).collect();
        let fit = fit_power_law(&xs, &ys, [lo, lo * 100.0]).unwrap();
        prop_assert!((fit.exponent - p).abs() <= 1e-9);
        prop_assert!((fit.log_prefactor - c).abs() <= 1e-8);
        prop_assert!(fit.residual >= 0.0 && fit.residual <= 1e-9);
        prop_assert_eq!(fit.points, k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn resolvent_norm_is_even_in_s(s in 0.1f64..20.0, b in betas()) {
        let spec = build_paper_network(b[0], b[1], b[2], ExteriorBc::DirichletVelocity).unwrap();
        let sys = discretize(&spec, 16).unwrap();
        let (p, m) = (resolvent_norm(&sys, s), resolvent_norm(&sys, -s));
        if let (Ok(p), Ok(m)) = (p, m) {
            prop_assert!(rel(p, m) <= 1e-6, "{p} vs {m}");
        }
    }

    #[test]
    fn heat_edge_transfer_converges_at_second_order(re in 0.0f64..3.0, im in -5.0f64..5.0, beta in 0.5f64..3.0) {
        let lambda = Complex64::new(re, im);
        prop_assume!(lambda.norm() >= 0.5);
        let exact = heat_edge_transfer(lambda, HeatEdgeParams::new(beta).unwrap()).unwrap();
        let spec = build_paper_network(1.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).unwrap();
        let errors: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let node = boundary_node(&spec, NodePart::HeatEdge { beta }, n).unwrap();
                let p = discrete_transfer_matrix(&node, lambda).unwrap();
                (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| (p.get(i, j) - exact.get(i, j)).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            prop_assert!(order >= 1.8, "errors {errors:?}");
        }
    }
}

#[test]
fn scan_is_independent_of_grid_order() {
    let spec = build_paper_network(1.0, 2.0, 3.0, ExteriorBc::DirichletVelocity).unwrap();
    let sys = discretize(&spec, 32).unwrap();
    let grid = log_grid(0.5, 40.0, 23);
    let forward = scan_resolvent(&sys, &grid).unwrap();
    let mut reversed_grid = grid.clone();
    reversed_grid.reverse();
    let backward = scan_resolvent(&sys, &reversed_grid).unwrap();
    let mut a: Vec<(u64, u64)> = forward
        .s_values
        .iter()
        .zip(&forward.norms)
        .map(|(s, r)| (s.to_bits(), r.to_bits()))
        .collect();
    let mut b: Vec<(u64, u64)> = backward
        .s_values
        .iter()
        .zip(&backward.norms)
        .map(|(s, r)| (s.to_bits(), r.to_bits()))
        .collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn damped_wave_resolvent_is_bounded_on_the_whole_axis() {
    let spec = build_paper_network(1.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).unwrap();
    let sys = discretize_wave_damped(&spec, 256).unwrap();
    let grid: Vec<f64> = (0..=200).map(|k| -100.0 + k as f64).collect();
    let scan = scan_resolvent(&sys, &grid).unwrap();
    assert!(scan.flags.iter().all(|f| *f == ScanFlag::Ok));
    let max = scan.norms.iter().cloned().fold(0.0, f64::max);
    let min = scan.norms.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max / min <= 1e3, "max {max}, min {min}");
}
