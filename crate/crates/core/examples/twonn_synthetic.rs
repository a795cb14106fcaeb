//! TwoNN intrinsic dimension on point clouds of known dimension.
//!
//! cargo run --release --example twonn_synthetic

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use coding_convergence::geometry::{twonn_id_rows, DEFAULT_DISCARD_FRACTION};

fn estimate(name: &str, points: &[Vec<f64>]) {
    let rows: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    match twonn_id_rows(&rows, DEFAULT_DISCARD_FRACTION) {
        Ok(r) => println!("{name:<34} n={:<5} id={:.3}", r.n_points_used, r.id_estimate),
        Err(e) => println!("{name:<34} {e}"),
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let square: Vec<Vec<f64>> = (0..2000).map(|_| vec![rng.random(), rng.random()]).collect();
    estimate("unit square", &square);

    // A 2-D sheet bent through 3-D space still reads as two.
    let swiss: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * rng.random::<f64>());
            vec![t * t.cos(), 20.0 * rng.random::<f64>(), t * t.sin()]
        })
        .collect();
    estimate("swiss roll", &swiss);

    for d in [1, 5, 10] {
        let gauss: Vec<Vec<f64>> = (0..5000)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        estimate(&format!("{d}-D gaussian"), &gauss);
    }

    // Embedding a 3-D cloud in 64 ambient dimensions changes nothing.
    let padded: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let mut v = vec![0.0; 64];
            for x in v.iter_mut().take(3) {
                *x = rng.random();
            }
            v
        })
        .collect();
    estimate("3-D cube in 64-D", &padded);
    estimate("too few points", &square[..5]);
}
