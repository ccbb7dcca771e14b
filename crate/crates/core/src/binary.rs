//! Binary erasure cascade with a closed-form region.
//!
//! `X ~ Bern(1/2)`, `Y` is `X` erased with probability `p`, `Z` is `Y` erased
//! with probability `q`. The erasure symbol is letter 2 of the `y` and `z`
//! alphabets. With `V` the output of a BSC(alpha) fed by `X` and `U`
//! constant, the region boundary is
//!
//! ```text
//! R = p (1 - h(alpha))
//! L = (1 - q)(1 - p) + p (1 - h(alpha))
//! E = q (1 - p)(1 - h(alpha))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::binary_entropy;
use crate::probability::{Alphabet, Channel, JointPmf};

/// Index of the erasure letter in the `y` and `z` alphabets.
pub const ERASURE: usize = 2;

/// Parameters of one closed-form evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureCascadeParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

/// `(R, L, E)` of the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPoint {
    pub alpha: f64,
    pub rate: f64,
    pub leakage: f64,
    pub exponent: f64,
}

fn check_prob(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            range: "[0, 1]",
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "[0, 1/2]",
        })
    }
}

pub fn build_source(p: f64, q: f64) -> Result<JointPmf> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    let mut mass = vec![0.0; 2 * 3 * 3];
    let idx = |x: usize, y: usize, z: usize| (x * 3 + y) * 3 + z;
    for x in 0..2 {
        // Y = X, then Z = Y or erased
        mass[idx(x, x, x)] += 0.5 * (1.0 - p) * (1.0 - q);
        mass[idx(x, x, ERASURE)] += 0.5 * (1.0 - p) * q;
        // Y erased, so is Z
        mass[idx(x, ERASURE, ERASURE)] += 0.5 * p;
    }
    JointPmf::new(
        vec![Alphabet::new("x", 2), Alphabet::new("y", 3), Alphabet::new("z", 3)],
        mass,
    )
}

pub fn closed_form(p: f64, q: f64, alpha: f64) -> Result<ClosedFormPoint> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    check_alpha(alpha)?;
    let capacity = 1.0 - binary_entropy(alpha)?;
    Ok(ClosedFormPoint {
        alpha,
        rate: p * capacity,
        leakage: (1.0 - q) * (1.0 - p) + p * capacity,
        exponent: q * (1.0 - p) * capacity,
    })
}

/// `P(v|x)` of a binary symmetric channel with crossover `alpha`.
pub fn bsc_test_channel(alpha: f64) -> Result<Channel> {
    check_alpha(alpha)?;
    Channel::new(
        Alphabet::new("x", 2),
        Alphabet::new("v", 2),
        vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]],
    )
}
