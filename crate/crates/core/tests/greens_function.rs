use std::sync::OnceLock;

use decumulate::lattice::{build_grid, GridSpec, StateGrid, ValueField};
use decumulate::market::{IncrementSampler, MarketParams};
use decumulate::pide::{advance, build_green, GreensFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(n: usize) -> (StateGrid, GreensFunction) {
    let m = MarketParams::crsp_tbill();
    let spec = GridSpec::with_default_bounds(n, n, &m, 30.0, 1000.0).unwrap();
    (build_grid(spec).unwrap(), build_green(&m, spec, 1.0).unwrap())
}

fn small() -> &'static (StateGrid, GreensFunction) {
    static CELL: OnceLock<(StateGrid, GreensFunction)> = OnceLock::new();
    CELL.get_or_init(|| setup(32))
}

fn hat(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// Expected tent weights `E[hat(X / h - j)]` from sampled increments.
fn sampled_weights(xs: &[f64], h: f64, radius: i64) -> Vec<f64> {
    let mut w = vec![0.0; (2 * radius + 1) as usize];
    for &x in xs {
        let u = x / h;
        let j = u.floor() as i64;
        let f = u - j as f64;
        for (k, weight) in [(j, 1.0 - f), (j + 1, f)] {
            if (-radius..=radius).contains(&k) {
                w[(k + radius) as usize] += weight;
            }
        }
    }
    let n = xs.len() as f64;
    w.iter_mut().for_each(|v| *v /= n);
    w
}

#[test]
fn unit_mass_nonnegative_and_moments_at_production_size() {
    let (_, g) = setup(512);
    let total: f64 = g.kernel.iter().sum();
    assert!((total - 1.0).abs() < 1e-8, "mass {total}");
    assert!(g.kernel.iter().all(|&w| w >= 0.0));
    let ins: f64 = g.insolvent_kernel.iter().sum();
    assert!((ins - 1.0).abs() < 1e-8);

    let m = MarketParams::crsp_tbill();
    let ((ms, vs), (mb, vb)) = g.kernel_moments();
    let (es, eb) = m.increment_mean(1.0, false);
    let (xs, xb) = m.increment_variance(1.0);
    // Tent weights reproduce linear functions exactly: the mean is exact.
    assert!((ms - es).abs() < 1e-8, "{ms} vs {es}");
    assert!((mb - eb).abs() < 1e-8, "{mb} vs {eb}");

    // Variance gains h^2 E[f(1 - f)], f the fractional cell offset of the
    // increment; the oracle estimates that term by sampling.
    let sampler = IncrementSampler::new(&m, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (hs, hb) = (g.spec.d_log_s(), g.spec.d_log_b());
    let spread = |x: f64, h: f64| {
        let f = (x / h).rem_euclid(1.0);
        h * h * f * (1.0 - f)
    };
    let n = 1_000_000;
    let (mut add_s, mut add_b) = (0.0, 0.0);
    for _ in 0..n {
        let inc = sampler.sample(false, &mut rng);
        add_s += spread(inc.ds, hs) / n as f64;
        add_b += spread(inc.db, hb) / n as f64;
    }
    assert!((vs - xs - add_s).abs() < 0.02 * hs * hs, "stock var {vs} vs {}", xs + add_s);
    assert!((vb - xb - add_b).abs() < 0.02 * hb * hb, "bond var {vb} vs {}", xb + add_b);

    let (mi, _) = g.insolvent_moments();
    let (_, ei) = m.increment_mean(1.0, true);
    assert!((mi - ei).abs() < 1e-8);
}

#[test]
fn marginals_match_sampled_tent_weights_in_sup_norm() {
    let (_, g) = setup(256);
    let m = MarketParams::crsp_tbill();
    let sampler = IncrementSampler::new(&m, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 500_000;
    let draws: Vec<_> = (0..n).map(|_| sampler.sample(false, &mut rng)).collect();
    let radius = 40i64;
    let ds: Vec<f64> = draws.iter().map(|d| d.ds).collect();
    let db: Vec<f64> = draws.iter().map(|d| d.db).collect();
    let ws = sampled_weights(&ds, g.spec.d_log_s(), radius);
    let wb = sampled_weights(&db, g.spec.d_log_b(), radius);

    let (mut cs, mut cb, mut es, mut eb) = (0.0, 0.0, 0.0, 0.0);
    let mut ks: f64 = 0.0;
    for j in -radius..=radius {
        let idx = (j + radius) as usize;
        let mut col_s = 0.0;
        let mut col_b = 0.0;
        for k in -(g.pad_b as i64 / 2)..(g.pad_b as i64 / 2) {
            col_s += g.weight(j, k);
            col_b += g.weight(k, j);
        }
        cs += col_s;
        cb += col_b;
        es += ws[idx];
        eb += wb[idx];
        ks = ks.max((cs - es).abs()).max((cb - eb).abs());
    }
    // Kolmogorov bound at the 0.1% level, 1.95 / sqrt(n).
    assert!(ks < 1.95 / (n as f64).sqrt(), "sup distance {ks}");
}

#[test]
fn hat_is_a_partition_of_unity() {
    for x in [-0.3, 0.0, 0.25, 0.999] {
        let s: f64 = (-2..=2).map(|j| hat(x - j as f64)).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
}

fn field_from(grid: &StateGrid, solvent: &[f64], insolvent: &[f64]) -> ValueField {
    let mut f = grid.new_field(1.0);
    for (k, v) in f.solvent.iter_mut().enumerate() {
        *v = solvent[k % solvent.len()];
    }
    for (k, v) in f.insolvent.iter_mut().enumerate() {
        *v = insolvent[k % insolvent.len()];
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn advance_is_monotone(
        base in prop::collection::vec(-100.0f64..100.0, 97),
        bump in prop::collection::vec(0.0f64..50.0, 89),
        ins in prop::collection::vec(-100.0f64..100.0, 13),
    ) {
        let (grid, g) = small();
        let f = field_from(grid, &base, &ins);
        let mut h = f.clone();
        for (k, v) in h.solvent.iter_mut().enumerate() {
            *v += bump[k % bump.len()];
        }
        for (k, v) in h.insolvent.iter_mut().enumerate() {
            *v += bump[k % bump.len()];
        }
        let af = advance(&f, g).unwrap();
        let ah = advance(&h, g).unwrap();
        for (a, b) in af.solvent.iter().zip(&ah.solvent).chain(af.insolvent.iter().zip(&ah.insolvent)) {
            prop_assert!(*b >= *a - 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn advance_is_linear(
        x in prop::collection::vec(-10.0f64..10.0, 61),
        y in prop::collection::vec(-10.0f64..10.0, 67),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (grid, g) = small();
        let f = field_from(grid, &x, &y);
        let h = field_from(grid, &y, &x);
        let mut combo = f.clone();
        for (c, (u, v)) in combo.solvent.iter_mut().zip(f.solvent.iter().zip(&h.solvent)) {
            *c = a * u + b * v;
        }
        for (c, (u, v)) in combo.insolvent.iter_mut().zip(f.insolvent.iter().zip(&h.insolvent)) {
            *c = a * u + b * v;
        }
        let (af, ah, ac) = (advance(&f, g).unwrap(), advance(&h, g).unwrap(), advance(&combo, g).unwrap());
        for k in 0..ac.solvent.len() {
            let want = a * af.solvent[k] + b * ah.solvent[k];
            prop_assert!((ac.solvent[k] - want).abs() < 1e-9 * 100.0);
        }
        for k in 0..ac.insolvent.len() {
            let want = a * af.insolvent[k] + b * ah.insolvent[k];
            prop_assert!((ac.insolvent[k] - want).abs() < 1e-9 * 100.0);
        }
    }
}

#[test]
fn constants_are_preserved_and_time_steps_back() {
    let (grid, g) = small();
    let f = grid.field_from_fn(7.0, |_, _| 3.5);
    let a = advance(&f, g).unwrap();
    assert_eq!(a.time_label, 6.0);
    for v in a.solvent.iter().chain(&a.insolvent) {
        assert!((v - 3.5).abs() < 1e-9);
    }
}
