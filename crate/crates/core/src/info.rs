//! Entropies and mutual informations of [`JointPmf`] marginals, in bits.

use crate::error::{Error, Result};
use crate::probability::JointPmf;

/// Information quantity in bits (per symbol where a rate is meant).
pub type Bits = f64;

/// Negative mutual informations down to this value are numerical noise and
/// read as zero; anything below signals a corrupted tensor.
pub const MI_SLACK: f64 = 1e-10;

/// Shannon entropy of a mass vector, `0 log 0 = 0`.
pub fn entropy_of(mass: &[f64]) -> Bits {
    -mass
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

pub fn entropy(j: &JointPmf, axes: &[&str]) -> Result<Bits> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("entropy needs at least one axis".into()));
    }
    Ok(entropy_of(j.marginalize(axes)?.mass()))
}

fn joint_entropy(j: &JointPmf, axes: &[&str]) -> Result<Bits> {
    if axes.is_empty() {
        Ok(0.0)
    } else {
        entropy(j, axes)
    }
}

fn union<'a>(sets: &[&[&'a str]]) -> Result<Vec<&'a str>> {
    let mut out: Vec<&str> = Vec::new();
    for set in sets {
        for &a in *set {
            if out.contains(&a) {
                return Err(Error::InvalidArgument(format!(
                    "axis `{}` appears in more than one argument",
                    a
                )));
            }
            out.push(a);
        }
    }
    Ok(out)
}

/// `H(target | given) = H(target, given) - H(given)`.
pub fn cond_entropy(j: &JointPmf, target: &[&str], given: &[&str]) -> Result<Bits> {
    let all = union(&[target, given])?;
    Ok(joint_entropy(j, &all)? - joint_entropy(j, given)?)
}

fn clamp_mi(value: f64) -> Result<Bits> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -MI_SLACK {
        Ok(0.0)
    } else {
        Err(Error::Inconsistent { value })
    }
}

/// `I(a; b) = H(a) + H(b) - H(a, b)`.
pub fn mutual_info(j: &JointPmf, a: &[&str], b: &[&str]) -> Result<Bits> {
    cond_mutual_info(j, a, b, &[])
}

/// `I(a; b | c) = H(a, c) + H(b, c) - H(a, b, c) - H(c)`.
pub fn cond_mutual_info(j: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> Result<Bits> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("mutual information needs non-empty sides".into()));
    }
    let abc = union(&[a, b, c])?;
    let ac = union(&[a, c])?;
    let bc = union(&[b, c])?;
    let value = joint_entropy(j, &ac)? + joint_entropy(j, &bc)?
        - joint_entropy(j, &abc)?
        - joint_entropy(j, c)?;
    clamp_mi(value)
}

/// Binary entropy `h(alpha)`.
pub fn binary_entropy(alpha: f64) -> Result<Bits> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "[0, 1]",
        });
    }
    Ok(entropy_of(&[alpha, 1.0 - alpha]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::Alphabet;

    fn xy(mass: Vec<f64>) -> JointPmf {
        JointPmf::new(vec![Alphabet::new("x", 2), Alphabet::new("y", 2)], mass).unwrap()
    }

    fn bern(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_examples() {
        let u = JointPmf::new(vec![Alphabet::new("x", 2)], vec![0.5, 0.5]).unwrap();
        assert_eq!(entropy(&u, &["x"]).unwrap(), 1.0);
        let point = JointPmf::new(vec![Alphabet::new("x", 2)], vec![1.0, 0.0]).unwrap();
        assert_eq!(entropy(&point, &["x"]).unwrap(), 0.0);
        let b = JointPmf::new(vec![Alphabet::new("x", 2)], vec![0.11, 0.89]).unwrap();
        // -0.11 log2 0.11 - 0.89 log2 0.89
        assert!((entropy(&b, &["x"]).unwrap() - 0.499_915_958_164_528).abs() < 1e-12);
        assert!(matches!(entropy(&u, &["q"]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn conditional_entropy_examples() {
        let copy = xy(vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(cond_entropy(&copy, &["x"], &["y"]).unwrap(), 0.0);
        let ind = xy(vec![0.12, 0.28, 0.18, 0.42]);
        let hx = entropy(&ind, &["x"]).unwrap();
        assert!((cond_entropy(&ind, &["x"], &["y"]).unwrap() - hx).abs() < 1e-12);
    }

    #[test]
    fn erasure_conditional_entropy() {
        // X uniform, Y erased w.p. 0.3 (index 2)
        let p = 0.3;
        let mass = vec![0.5 * (1.0 - p), 0.0, 0.5 * p, 0.0, 0.5 * (1.0 - p), 0.5 * p];
        let j = JointPmf::new(vec![Alphabet::new("x", 2), Alphabet::new("y", 3)], mass).unwrap();
        assert!((cond_entropy(&j, &["x"], &["y"]).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mutual_info(&xy(vec![0.25; 4]), &["x"], &["y"]).unwrap(), 0.0);
        assert_eq!(mutual_info(&xy(vec![0.5, 0.0, 0.0, 0.5]), &["x"], &["y"]).unwrap(), 1.0);
        let bsc = xy(vec![0.45, 0.05, 0.05, 0.45]);
        let expected = 1.0 - bern(0.1);
        assert!((mutual_info(&bsc, &["x"], &["y"]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.531_004_406_410_718_8).abs() < 1e-12);
    }

    #[test]
    fn conditional_mutual_information_examples() {
        // c independent of (a, b)
        let ab = [0.4, 0.1, 0.2, 0.3];
        let c = [0.7, 0.3];
        let mut mass = Vec::new();
        for p in ab {
            for q in c {
                mass.push(p * q);
            }
        }
        let j = JointPmf::new(
            vec![Alphabet::new("a", 2), Alphabet::new("b", 2), Alphabet::new("c", 2)],
            mass,
        )
        .unwrap();
        let cmi = cond_mutual_info(&j, &["a"], &["b"], &["c"]).unwrap();
        let mi = mutual_info(&j, &["a"], &["b"]).unwrap();
        assert!((cmi - mi).abs() < 1e-12);

        // a = b = c
        let same = JointPmf::new(
            vec![Alphabet::new("a", 2), Alphabet::new("b", 2), Alphabet::new("c", 2)],
            vec![0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.6],
        )
        .unwrap();
        assert_eq!(cond_mutual_info(&same, &["a"], &["b"], &["c"]).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_arguments_rejected() {
        let j = xy(vec![0.25; 4]);
        assert!(matches!(
            mutual_info(&j, &["x"], &["x"]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(matches!(binary_entropy(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(binary_entropy(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn clamp_rules() {
        assert_eq!(clamp_mi(-5e-11).unwrap(), 0.0);
        assert!(matches!(clamp_mi(-1e-6), Err(Error::Inconsistent { .. })));
    }
}
