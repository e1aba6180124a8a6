//! Counter-based random streams.
//!
//! Every consumer derives its generator from `(master seed, stream id)`, so
//! a walk or sample depends only on its index and never on scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Point;

/// Named stream families so that different stages never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Walk = 1,
    Green = 2,
    BoundarySample = 3,
    Experiment = 4,
}

/// SplitMix64 finalizer, used to mix the master seed with a stream family.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for stream `index` of family `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(purpose as u64)));
    rng.set_stream(index);
    rng
}

/// Uniform direction on the unit sphere `S^{dim-1}`.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Point {
    use std::f64::consts::TAU;
    match dim {
        2 => {
            let t = rng.gen::<f64>() * TAU;
            Point::new2(t.cos(), t.sin())
        }
        3 => {
            let z = 2.0 * rng.gen::<f64>() - 1.0;
            let t = rng.gen::<f64>() * TAU;
            let s = (1.0 - z * z).max(0.0).sqrt();
            Point::new3(s * t.cos(), s * t.sin(), z)
        }
        _ => panic!("unit_direction: dimension {dim} unsupported"),
    }
}
