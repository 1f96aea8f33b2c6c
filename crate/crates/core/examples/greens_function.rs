//! One-period transition weights on a log lattice and a single backward
//! step applied to terminal wealth.

use decumulate::lattice::{build_grid, GridSpec};
use decumulate::market::{IncrementSampler, MarketParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use decumulate::pide::{advance, build_green};

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let spec = GridSpec::with_default_bounds(128, 128, &m, 30.0, 1000.0)?;
    let g = build_green(&m, spec, 1.0)?;
    println!("padded lattice {}x{}, clipped mass {:.2e}", g.pad_s, g.pad_b, g.clipped_mass);

    let ((mean_s, var_s), (mean_b, var_b)) = g.kernel_moments();
    let (es, eb) = m.increment_mean(1.0, false);
    let (vs, vb) = m.increment_variance(1.0);
    // Tent weights spread an increment x over its two neighbouring nodes,
    // adding h^2 * E[f (1 - f)] with f the fractional cell position.
    let sampler = IncrementSampler::new(&m, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (hs, hb) = (spec.d_log_s(), spec.d_log_b());
    let spread = |x: f64, h: f64| {
        let f = (x / h).rem_euclid(1.0);
        h * h * f * (1.0 - f)
    };
    let n = 400_000;
    let (mut extra_s, mut extra_b) = (0.0, 0.0);
    for _ in 0..n {
        let inc = sampler.sample(false, &mut rng);
        extra_s += spread(inc.ds, hs) / n as f64;
        extra_b += spread(inc.db, hb) / n as f64;
    }
    let (vs, vb) = (vs + extra_s, vb + extra_b);
    println!("stock: mean {mean_s:.5} (exact {es:.5}), variance {var_s:.5} (exact + spread {vs:.5})");
    println!("bond:  mean {mean_b:.5} (exact {eb:.5}), variance {var_b:.5} (exact + spread {vb:.5})");

    // E[W_1] for W_0 = s + b, one period ahead.
    let grid = build_grid(spec)?;
    let terminal = grid.field_from_fn(1.0, |s, b| s + b);
    let back = advance(&terminal, &g)?;
    let (s, b) = (600.0, 400.0);
    let ew = grid.interpolate(&back, s, b)?;
    let exact = s * m.stock.mu.exp() + b * m.bond.mu.exp();
    println!("E[W_1 | s={s}, b={b}] = {ew:.3} (closed form {exact:.3})");

    let out = std::env::temp_dir().join("decumulate_kernel.csv");
    g.write_kernel_csv(&out, 1e-6)?;
    println!("kernel weights above 1e-6 written to {}", out.display());
    Ok(())
}
