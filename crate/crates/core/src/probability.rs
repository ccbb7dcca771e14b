//! Finite-alphabet probability objects.
//!
//! A [`JointPmf`] is a dense tensor over an ordered list of named alphabets,
//! stored row-major with the last axis varying fastest. A [`Channel`] is a
//! row-stochastic table `p(out | in)`. Everything is immutable after
//! construction and validated on the way in; nothing is renormalized behind
//! the caller's back.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass (joints) and on row sums (channels).
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A named finite alphabet `{0, .., size-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Alphabet {
            name: name.into(),
            size,
        }
    }
}

#[derive(Deserialize)]
struct RawJoint {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
}

/// Joint probability mass function over named axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        JointPmf::new(raw.axes, raw.mass)
    }
}

/// Checks the invariants of a candidate joint: unique non-empty axes,
/// matching shape, nonnegative finite entries summing to one.
pub fn validate(axes: &[Alphabet], mass: &[f64]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if a.size == 0 {
            return Err(Error::ShapeMismatch(format!("axis `{}` has size 0", a.name)));
        }
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::DuplicateAxis(a.name.clone()));
        }
    }
    let expected: usize = axes.iter().map(|a| a.size).product();
    if expected != mass.len() {
        return Err(Error::ShapeMismatch(format!(
            "axes imply {} entries, got {}",
            expected,
            mass.len()
        )));
    }
    for (index, &value) in mass.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let sum: f64 = mass.iter().sum();
    let deviation = (sum - 1.0).abs();
    if deviation > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum, deviation });
    }
    Ok(())
}

impl JointPmf {
    pub fn new(axes: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self> {
        validate(&axes, &mass)?;
        Ok(JointPmf { axes, mass })
    }

    /// Random joint with Dirichlet(1, .., 1) mass.
    pub fn random<R: Rng + ?Sized>(axes: Vec<Alphabet>, rng: &mut R) -> Result<Self> {
        let len: usize = axes.iter().map(|a| a.size).product();
        let mass = dirichlet_flat(len, rng);
        JointPmf::new(axes, mass)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("joint serializes")
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.axes[self.axis_index(name)?])
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].size;
        }
        strides
    }

    /// Mass at a full multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.axes.len());
        let flat = index
            .iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum::<usize>();
        self.mass[flat]
    }

    /// Marginal on `keep`, in the order given by `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        let positions = keep
            .iter()
            .map(|name| self.axis_index(name))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::DuplicateAxis(keep[i].to_string()));
            }
        }
        let axes: Vec<Alphabet> = positions.iter().map(|&p| self.axes[p].clone()).collect();
        let mut out_strides = vec![0usize; self.axes.len()];
        let mut stride = 1;
        for &p in positions.iter().rev() {
            out_strides[p] = stride;
            stride *= self.axes[p].size;
        }
        let mut mass = vec![0.0; stride];
        let shape = self.shape();
        let mut digits = vec![0usize; shape.len()];
        let mut target = 0usize;
        for &m in &self.mass {
            mass[target] += m;
            // advance the mixed-radix counter, keeping `target` in sync
            for d in (0..shape.len()).rev() {
                digits[d] += 1;
                target += out_strides[d];
                if digits[d] < shape[d] {
                    break;
                }
                target -= out_strides[d] * shape[d];
                digits[d] = 0;
            }
        }
        Ok(JointPmf { axes, mass })
    }

    /// Conditional table `p(target | given)`. The input alphabet of the
    /// returned channel is the product of the `given` axes (row-major,
    /// named by joining with commas). Rows with zero conditioning mass are
    /// uniform.
    pub fn condition(&self, target: &str, given: &[&str]) -> Result<Channel> {
        if given.contains(&target) {
            return Err(Error::InvalidArgument(format!(
                "target `{}` also appears in the conditioning set",
                target
            )));
        }
        let mut keep: Vec<&str> = given.to_vec();
        keep.push(target);
        let joint = self.marginalize(&keep)?;
        let out_size = self.axis(target)?.size;
        let in_size = joint.mass.len() / out_size;
        let mut rows = Vec::with_capacity(joint.mass.len());
        for chunk in joint.mass.chunks(out_size) {
            let total: f64 = chunk.iter().sum();
            if total > 0.0 {
                rows.extend(chunk.iter().map(|m| m / total));
            } else {
                rows.extend(std::iter::repeat_n(1.0 / out_size as f64, out_size));
            }
        }
        Ok(Channel {
            input: Alphabet::new(given.join(","), in_size),
            output: self.axis(target)?.clone(),
            rows,
        })
    }

    /// Appends a size-one axis, e.g. a constant adversary observation.
    pub fn with_constant_axis(&self, name: &str) -> Result<JointPmf> {
        let mut axes = self.axes.clone();
        axes.push(Alphabet::new(name, 1));
        JointPmf::new(axes, self.mass.clone())
    }
}

#[derive(Deserialize)]
struct RawChannel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<Vec<f64>>,
}

/// Row-stochastic conditional table `p(out | in)`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<f64>,
}

impl TryFrom<RawChannel> for Channel {
    type Error = Error;

    fn try_from(raw: RawChannel) -> Result<Self> {
        Channel::new(raw.input, raw.output, raw.rows)
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows: Vec<&[f64]> = self.rows.chunks(self.output.size).collect();
        let mut st = s.serialize_struct("Channel", 3)?;
        st.serialize_field("input", &self.input)?;
        st.serialize_field("output", &self.output)?;
        st.serialize_field("rows", &rows)?;
        st.end()
    }
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.size {
            return Err(Error::ShapeMismatch(format!(
                "channel has {} rows, input `{}` has size {}",
                rows.len(),
                input.name,
                input.size
            )));
        }
        if rows.iter().any(|r| r.len() != output.size) {
            return Err(Error::ShapeMismatch(format!(
                "every row must have {} entries",
                output.size
            )));
        }
        Channel::from_flat(input, output, rows.concat())
    }

    pub fn from_flat(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Result<Self> {
        if input.size == 0 || output.size == 0 {
            return Err(Error::ShapeMismatch("channel alphabets must be non-empty".into()));
        }
        if rows.len() != input.size * output.size {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries, got {}",
                input.size * output.size,
                rows.len()
            )));
        }
        for (index, &value) in rows.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        for row in rows.chunks(output.size) {
            let sum: f64 = row.iter().sum();
            let deviation = (sum - 1.0).abs();
            if deviation > NORMALIZATION_TOL {
                return Err(Error::NotNormalized { sum, deviation });
            }
        }
        Ok(Channel {
            input,
            output,
            rows,
        })
    }

    /// `out = in`; requires equal sizes.
    pub fn identity(input: Alphabet, output_name: &str) -> Self {
        let n = input.size;
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        Channel {
            output: Alphabet::new(output_name, n),
            input,
            rows,
        }
    }

    /// Output alphabet of size one.
    pub fn constant(input: Alphabet, output_name: &str) -> Self {
        Channel {
            rows: vec![1.0; input.size],
            output: Alphabet::new(output_name, 1),
            input,
        }
    }

    /// Every row drawn independently from Dirichlet(1, .., 1).
    pub fn random<R: Rng + ?Sized>(input: Alphabet, output: Alphabet, rng: &mut R) -> Self {
        let mut rows = Vec::with_capacity(input.size * output.size);
        for _ in 0..input.size {
            rows.extend(dirichlet_flat(output.size, rng));
        }
        Channel {
            input,
            output,
            rows,
        }
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input * self.output.size + output]
    }

    pub fn row(&self, input: usize) -> &[f64] {
        let w = self.output.size;
        &self.rows[input * w..(input + 1) * w]
    }

    pub fn flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn renamed(mut self, input: &str, output: &str) -> Self {
        self.input.name = input.to_string();
        self.output.name = output.to_string();
        self
    }
}

/// Joint `P(x,y,z) vx(v|x) uv(u|v)` over axes `[u, v, x, y, z]`. The source
/// must carry axes named `x`, `y` and `z` (any order); the new axes take the
/// names of the channel outputs.
pub fn compose(source: &JointPmf, vx: &Channel, uv: &Channel) -> Result<JointPmf> {
    let xyz = source.marginalize(&["x", "y", "z"])?;
    let (nx, ny, nz) = (xyz.axes[0].size, xyz.axes[1].size, xyz.axes[2].size);
    if vx.input.size != nx {
        return Err(Error::ShapeMismatch(format!(
            "vx expects |X| = {}, source has {}",
            vx.input.size, nx
        )));
    }
    if uv.input.size != vx.output.size {
        return Err(Error::ShapeMismatch(format!(
            "uv expects |V| = {}, vx produces {}",
            uv.input.size, vx.output.size
        )));
    }
    let (nv, nu) = (vx.output.size, uv.output.size);
    let axes = vec![
        uv.output.clone(),
        vx.output.clone(),
        xyz.axes[0].clone(),
        xyz.axes[1].clone(),
        xyz.axes[2].clone(),
    ];
    let yz = ny * nz;
    let mut mass = Vec::with_capacity(nu * nv * nx * yz);
    for u in 0..nu {
        for v in 0..nv {
            let puv = uv.prob(v, u);
            for x in 0..nx {
                let w = vx.prob(x, v) * puv;
                mass.extend(xyz.mass[x * yz..(x + 1) * yz].iter().map(|m| m * w));
            }
        }
    }
    let joint = JointPmf { axes, mass };
    validate(&joint.axes, &joint.mass)?;
    Ok(joint)
}

fn dirichlet_flat<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|d| *d /= total);
    } else {
        draws.iter_mut().for_each(|d| *d = 1.0 / len as f64);
    }
    draws
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xy(mass: Vec<f64>) -> JointPmf {
        JointPmf::new(vec![Alphabet::new("x", 2), Alphabet::new("y", 2)], mass).unwrap()
    }

    #[test]
    fn validate_accepts_uniform() {
        assert!(validate(&[Alphabet::new("x", 2), Alphabet::new("y", 2)], &[0.25; 4]).is_ok());
    }

    #[test]
    fn validate_rejects_bad_tensors() {
        let axes = [Alphabet::new("x", 2), Alphabet::new("y", 2)];
        assert!(matches!(
            validate(&axes, &[0.25, 0.25, 0.25, 0.15]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            validate(&axes, &[-0.1, 0.35, 0.5, 0.25]),
            Err(Error::NegativeMass { index: 0, .. })
        ));
        assert!(matches!(validate(&axes, &[0.5, 0.5]), Err(Error::ShapeMismatch(_))));
        let dup = [Alphabet::new("x", 2), Alphabet::new("x", 2)];
        assert!(matches!(validate(&dup, &[0.25; 4]), Err(Error::DuplicateAxis(_))));
    }

    #[test]
    fn marginals() {
        assert_eq!(xy(vec![0.25; 4]).marginalize(&["x"]).unwrap().mass(), &[0.5, 0.5]);
        let diag = xy(vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(diag.marginalize(&["y"]).unwrap().mass(), &[0.5, 0.5]);
        assert!(matches!(diag.marginalize(&["w"]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn marginal_respects_keep_order() {
        let j = xy(vec![0.1, 0.2, 0.3, 0.4]);
        let t = j.marginalize(&["y", "x"]).unwrap();
        assert_eq!(t.axes()[0].name, "y");
        assert_eq!(t.mass(), &[0.1, 0.3, 0.2, 0.4]);
    }

    #[test]
    fn conditioning() {
        let ind = xy(vec![0.25; 4]);
        assert_eq!(ind.condition("y", &["x"]).unwrap().flat(), &[0.5; 4]);
        let diag = xy(vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(diag.condition("y", &["x"]).unwrap().flat(), &[1.0, 0.0, 0.0, 1.0]);
        let zero_row = xy(vec![0.0, 0.0, 0.3, 0.7]);
        assert_eq!(zero_row.condition("y", &["x"]).unwrap().row(0), &[0.5, 0.5]);
    }

    #[test]
    fn compose_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let axes = vec![
            Alphabet::new("x", 2),
            Alphabet::new("y", 3),
            Alphabet::new("z", 2),
        ];
        let src = JointPmf::random(axes, &mut rng).unwrap();
        let vx = Channel::identity(Alphabet::new("x", 2), "v");
        let uv = Channel::constant(Alphabet::new("v", 2), "u");
        let j = compose(&src, &vx, &uv).unwrap();
        assert_eq!(j.shape(), vec![1, 2, 2, 3, 2]);
        // V = X
        let vxm = j.marginalize(&["v", "x"]).unwrap();
        let px = src.marginalize(&["x"]).unwrap();
        assert_eq!(vxm.mass(), &[px.mass()[0], 0.0, 0.0, px.mass()[1]]);
        let back = j.marginalize(&["x", "y", "z"]).unwrap();
        for (a, b) in back.mass().iter().zip(src.mass()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_shape_errors() {
        let src = JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 1), Alphabet::new("z", 1)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let vx = Channel::identity(Alphabet::new("x", 3), "v");
        let uv = Channel::constant(Alphabet::new("v", 3), "u");
        assert!(matches!(compose(&src, &vx, &uv), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let j = xy(vec![0.1, 0.2, 0.3, 0.4]);
        let back = JointPmf::from_json(&j.to_json()).unwrap();
        assert_eq!(back, j);
        let bad = r#"{"axes":[{"name":"x","size":2}],"mass":[0.5,0.4]}"#;
        assert!(JointPmf::from_json(bad).is_err());
    }

    #[test]
    fn channel_validation() {
        let a = Alphabet::new("x", 2);
        let b = Alphabet::new("v", 2);
        assert!(Channel::new(a.clone(), b.clone(), vec![vec![0.5, 0.5], vec![0.2, 0.8]]).is_ok());
        assert!(matches!(
            Channel::new(a.clone(), b.clone(), vec![vec![0.5, 0.6], vec![0.2, 0.8]]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Channel::new(a, b, vec![vec![0.5, 0.5]]),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
