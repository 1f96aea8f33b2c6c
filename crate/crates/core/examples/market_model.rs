//! Kou jump-diffusion market: characteristic function, compensator and
//! sampled increments.

use decumulate::market::{joint_char, jump_compensator, IncrementSampler, MarketParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    println!("stock compensator kappa_s = {:.6}", jump_compensator(&m.stock)?);
    println!("bond compensator  kappa_b = {:.6}", jump_compensator(&m.bond)?);

    for w in [0.0, 1.0, 5.0] {
        let phi = joint_char(&m, w, 0.5 * w, 1.0, false)?;
        println!("phi({w}, {}) = {:.6} {:+.6}i", 0.5 * w, phi.re, phi.im);
    }

    let sampler = IncrementSampler::new(&m, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200_000;
    let (mut sum_s, mut sum_b) = (0.0, 0.0);
    for _ in 0..n {
        let inc = sampler.sample(false, &mut rng);
        sum_s += inc.ds;
        sum_b += inc.db;
    }
    let (ms, mb) = m.increment_mean(1.0, false);
    println!("mean log stock increment: sampled {:.5}, exact {ms:.5}", sum_s / n as f64);
    println!("mean log bond increment:  sampled {:.5}, exact {mb:.5}", sum_b / n as f64);
    Ok(())
}
