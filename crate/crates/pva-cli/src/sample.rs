//! Seeded random differential polynomials for sampled identity checks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pva_core::{Expression, VectorExpr};

fn polynomial(rng: &mut StdRng, ell: usize) -> Expression {
    let mut e = Expression::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let mut t = Expression::int(rng.gen_range(-3..=3));
        for _ in 0..rng.gen_range(0..=2) {
            t = &t * &Expression::gen(rng.gen_range(0..ell), rng.gen_range(0..=2));
        }
        e += t;
    }
    e
}

/// `n` pairs of random vectors of length `ell`.
pub fn pairs(ell: usize, n: usize, seed: u64) -> Vec<(VectorExpr, VectorExpr)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = VectorExpr((0..ell).map(|_| polynomial(&mut rng, ell)).collect());
            let g = VectorExpr((0..ell).map(|_| polynomial(&mut rng, ell)).collect());
            (f, g)
        })
        .collect()
}
