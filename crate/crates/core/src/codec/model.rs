//! Single-letter laws the finite-blocklength scheme draws from and tests
//! typicality against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{cond_mutual_info, mutual_info};
use crate::probability::JointPmf;
use crate::region::AuxPair;

/// Rate terms that fix the codebook sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRates {
    pub i_xu: f64,
    pub i_xu_given_y: f64,
    pub i_xv_given_u: f64,
    pub i_xv_given_uy: f64,
    pub i_vy_given_u: f64,
    pub i_vz_given_u: f64,
}

/// Flat tables derived from `P(x,y,z) P(v|x) P(u|v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeModel {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub nu: usize,
    pub nv: usize,
    /// `P(x,y,z)`, row-major.
    pub p_xyz: Vec<f64>,
    pub p_x: Vec<f64>,
    /// `P(y|x)` and `P(z|x)`, rows indexed by `x`.
    pub y_given_x: Vec<f64>,
    pub z_given_x: Vec<f64>,
    pub p_u: Vec<f64>,
    /// `P(v|u)`, rows indexed by `u`.
    pub v_given_u: Vec<f64>,
    /// `P(x,u,v)`, the enrollment typicality law.
    pub p_xuv: Vec<f64>,
    /// `P(u,v|x)`, the enrollment fallback likelihood.
    pub uv_given_x: Vec<f64>,
    /// `P(u,y)` and `P(u,v,y)`, the authentication typicality laws.
    pub p_uy: Vec<f64>,
    pub p_uvy: Vec<f64>,
    /// `P(y|u,v)` and `P(z|u,v)`, rows indexed by `(u,v)`.
    pub y_given_uv: Vec<f64>,
    pub z_given_uv: Vec<f64>,
    pub rates: SchemeRates,
}

impl SchemeModel {
    pub fn new(source: &JointPmf, aux: &AuxPair) -> Result<Self> {
        let j = aux.compose(source)?;
        let size = |name: &str| j.axis(name).map(|a| a.size);
        let (nx, ny, nz, nu, nv) = (size("x")?, size("y")?, size("z")?, size("u")?, size("v")?);
        let flat = |axes: &[&str]| -> Result<Vec<f64>> { Ok(j.marginalize(axes)?.mass().to_vec()) };
        let cond = |target: &str, given: &[&str]| -> Result<Vec<f64>> {
            Ok(j.condition(target, given)?.flat().to_vec())
        };
        // joint conditionals of a pair of targets
        let pair_given = |a: &str, b: &str, given: &[&str]| -> Result<Vec<f64>> {
            let mut keep: Vec<&str> = given.to_vec();
            keep.push(a);
            keep.push(b);
            let m = j.marginalize(&keep)?;
            let w = j.axis(a)?.size * j.axis(b)?.size;
            let mut out = Vec::with_capacity(m.mass().len());
            for row in m.mass().chunks(w) {
                let t: f64 = row.iter().sum();
                if t > 0.0 {
                    out.extend(row.iter().map(|p| p / t));
                } else {
                    out.extend(std::iter::repeat_n(1.0 / w as f64, w));
                }
            }
            Ok(out)
        };
        let rates = SchemeRates {
            i_xu: mutual_info(&j, &["x"], &["u"])?,
            i_xu_given_y: cond_mutual_info(&j, &["x"], &["u"], &["y"])?,
            i_xv_given_u: cond_mutual_info(&j, &["x"], &["v"], &["u"])?,
            i_xv_given_uy: cond_mutual_info(&j, &["x"], &["v"], &["u", "y"])?,
            i_vy_given_u: cond_mutual_info(&j, &["v"], &["y"], &["u"])?,
            i_vz_given_u: cond_mutual_info(&j, &["v"], &["z"], &["u"])?,
        };
        Ok(SchemeModel {
            nx,
            ny,
            nz,
            nu,
            nv,
            p_xyz: flat(&["x", "y", "z"])?,
            p_x: flat(&["x"])?,
            y_given_x: cond("y", &["x"])?,
            z_given_x: cond("z", &["x"])?,
            p_u: flat(&["u"])?,
            v_given_u: cond("v", &["u"])?,
            p_xuv: flat(&["x", "u", "v"])?,
            uv_given_x: pair_given("u", "v", &["x"])?,
            p_uy: flat(&["u", "y"])?,
            p_uvy: flat(&["u", "v", "y"])?,
            y_given_uv: cond("y", &["u", "v"])?,
            z_given_uv: cond("z", &["u", "v"])?,
            rates,
        })
    }

    pub(crate) fn check_sequence(&self, seq: &[usize], size: usize, what: &str) -> Result<()> {
        if seq.iter().any(|&a| a >= size) {
            return Err(Error::InvalidArgument(format!(
                "{} sequence has a letter outside its alphabet",
                what
            )));
        }
        Ok(())
    }
}

/// Robust letter typicality: every joint letter's empirical frequency is
/// within `eps * p` of its probability `p`. Letters of probability zero
/// must not occur.
pub fn is_typical(pmf: &[f64], eps: f64, n: usize, letters: impl Iterator<Item = usize>) -> bool {
    let mut counts = vec![0u32; pmf.len()];
    for a in letters {
        counts[a] += 1;
    }
    let n = n as f64;
    counts.iter().zip(pmf).all(|(&c, &p)| {
        let freq = c as f64 / n;
        (freq - p).abs() <= eps * p + 1e-12
    })
}
