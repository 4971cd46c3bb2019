//! Entropies and conditional mutual informations over finite joint laws.
//!
//! All quantities are in bits. Probabilities below [`ZERO_MASS`] count as
//! exact zeros in entropy sums, so `0 log 0 = 0` holds at simplex corners.

use crate::error::{RbcError, Result};

pub const ZERO_MASS: f64 = 1e-15;
/// Allowed drift of a normalized tensor from total mass one.
pub const SUM_TOL: f64 = 1e-12;
/// Negative conditional MI above this is rounding and clamps to zero.
pub const NEG_MI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub card: usize,
}

/// Dense probability tensor over named finite alphabets, row-major with
/// the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new<S: Into<String>>(axes: Vec<(S, usize)>, probs: Vec<f64>) -> Result<Self> {
        let axes: Vec<Axis> = axes
            .into_iter()
            .map(|(name, card)| Axis { name: name.into(), card })
            .collect();
        for (i, a) in axes.iter().enumerate() {
            if a.card == 0 {
                return Err(RbcError::input(format!("axis {} has empty alphabet", a.name)));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(RbcError::input(format!("duplicate axis name {}", a.name)));
            }
        }
        let size: usize = axes.iter().map(|a| a.card).product();
        if probs.len() != size {
            return Err(RbcError::input(format!(
                "tensor has {} entries, axes require {}",
                probs.len(),
                size
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(RbcError::input(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(RbcError::input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(FiniteDist { axes, probs })
    }

    /// Builds a tensor by evaluating `f` on every index tuple.
    pub fn from_fn<S: Into<String>>(
        axes: Vec<(S, usize)>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let axes: Vec<(String, usize)> = axes.into_iter().map(|(n, c)| (n.into(), c)).collect();
        let cards: Vec<usize> = axes.iter().map(|a| a.1).collect();
        let size: usize = cards.iter().product();
        let mut probs = Vec::with_capacity(size);
        let mut idx = vec![0usize; cards.len()];
        for _ in 0..size {
            probs.push(f(&idx));
            increment(&mut idx, &cards);
        }
        FiniteDist::new(axes, probs)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cards(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.card).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| RbcError::input(format!("unknown axis {name}")))
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    /// Marginal over `group`, in the order the names are given.
    pub fn marginal(&self, group: &[&str]) -> Result<FiniteDist> {
        let positions = self.positions(group)?;
        let cards = self.cards();
        let out_cards: Vec<usize> = positions.iter().map(|&p| cards[p]).collect();
        let mut out = vec![0.0; out_cards.iter().product()];
        let mut idx = vec![0usize; cards.len()];
        for &p in &self.probs {
            let mut o = 0;
            for (&pos, &c) in positions.iter().zip(&out_cards) {
                o = o * c + idx[pos];
            }
            out[o] += p;
            increment(&mut idx, &cards);
        }
        Ok(FiniteDist {
            axes: positions.iter().map(|&p| self.axes[p].clone()).collect(),
            probs: out,
        })
    }

    fn positions(&self, group: &[&str]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(group.len());
        for name in group {
            let p = self.axis_index(name)?;
            if pos.contains(&p) {
                return Err(RbcError::input(format!("axis {name} listed twice")));
            }
            pos.push(p);
        }
        Ok(pos)
    }

    /// H(group) in bits.
    pub fn entropy(&self, group: &[&str]) -> Result<f64> {
        if group.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_of(self.marginal(group)?.probs()))
    }

    /// H(a | c) in bits.
    pub fn cond_entropy(&self, a: &[&str], c: &[&str]) -> Result<f64> {
        disjoint(a, c)?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        Ok(self.entropy(&ac)? - self.entropy(c)?)
    }

    /// I(a; b | c) in bits; `c` may be empty.
    ///
    /// Values in `[-1e-10, 0)` clamp to zero; anything more negative is a
    /// [`RbcError::Numerical`] error.
    pub fn cond_mutual_info(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        disjoint(a, b)?;
        disjoint(a, c)?;
        disjoint(b, c)?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let v = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?;
        if v < -NEG_MI_TOL {
            return Err(RbcError::Numerical(format!(
                "I({a:?};{b:?}|{c:?}) = {v} is negative beyond tolerance"
            )));
        }
        Ok(v.max(0.0))
    }
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    if let Some(x) = a.iter().find(|x| b.contains(x)) {
        return Err(RbcError::input(format!("axis {x} appears in overlapping sets")));
    }
    Ok(())
}

/// Advances a row-major multi-index; wraps to all zeros after the last.
pub(crate) fn increment(idx: &mut [usize], cards: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < cards[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Shannon entropy of a probability vector in bits.
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > ZERO_MASS)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn entropy(dist: &FiniteDist, group: &[&str]) -> Result<f64> {
    dist.entropy(group)
}

pub fn cond_mutual_info(dist: &FiniteDist, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    dist.cond_mutual_info(a, b, c)
}

/// h(p) = -p log p - (1-p) log(1-p).
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RbcError::input(format!("binary entropy argument {p} outside [0,1]")));
    }
    Ok(entropy_of(&[p, 1.0 - p]))
}

/// C(x) = log2(1 + x) / 2.
pub fn gaussian_cap(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(RbcError::input(format!("negative snr {snr}")));
    }
    Ok(0.5 * (1.0 + snr).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uniform(axes: Vec<(&str, usize)>) -> FiniteDist {
        let n: usize = axes.iter().map(|a| a.1).product();
        FiniteDist::new(axes, vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let d = uniform(vec![("A", 2), ("B", 2)]);
        assert_abs_diff_eq!(d.entropy(&["A", "B"]).unwrap(), 2.0, epsilon = 1e-15);
        let point = FiniteDist::new(vec![("A", 3)], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(point.entropy(&["A"]).unwrap(), 0.0);
        let d = uniform(vec![("A", 3), ("B", 2)]);
        assert_abs_diff_eq!(d.entropy(&["A"]).unwrap(), 3f64.log2(), epsilon = 1e-12);
        assert!(d.entropy(&["Z"]).is_err());
    }

    #[test]
    fn mutual_info_examples() {
        let d = uniform(vec![("A", 2), ("B", 2)]);
        assert_abs_diff_eq!(d.cond_mutual_info(&["A"], &["B"], &[]).unwrap(), 0.0);
        let copy =
            FiniteDist::from_fn(vec![("A", 2), ("B", 2)], |i| if i[0] == i[1] { 0.5 } else { 0.0 })
                .unwrap();
        assert_abs_diff_eq!(copy.cond_mutual_info(&["A"], &["B"], &[]).unwrap(), 1.0);
        let eps = 0.11;
        let bsc = FiniteDist::from_fn(vec![("X", 2), ("Y", 2)], |i| {
            0.5 * if i[0] == i[1] { 1.0 - eps } else { eps }
        })
        .unwrap();
        let h = -eps * eps.log2() - (1.0 - eps) * (1.0 - eps).log2();
        assert_abs_diff_eq!(
            bsc.cond_mutual_info(&["X"], &["Y"], &[]).unwrap(),
            1.0 - h,
            epsilon = 1e-12
        );
        assert!(bsc.cond_mutual_info(&["X"], &["X"], &[]).is_err());
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            binary_entropy(1.0 / 3.0).unwrap(),
            3f64.log2() - 2.0 / 3.0,
            epsilon = 1e-12
        );
        assert!(binary_entropy(1.5).is_err());
        assert_eq!(gaussian_cap(0.0).unwrap(), 0.0);
        assert_eq!(gaussian_cap(1.0).unwrap(), 0.5);
        assert_eq!(gaussian_cap(3.0).unwrap(), 1.0);
        assert!(gaussian_cap(-1.0).is_err());
    }

    #[test]
    fn constructor_rejects_bad_tensors() {
        assert!(FiniteDist::new(vec![("A", 2), ("A", 2)], vec![0.25; 4]).is_err());
        assert!(FiniteDist::new(vec![("A", 2)], vec![0.5, 0.6]).is_err());
        assert!(FiniteDist::new(vec![("A", 2)], vec![1.5, -0.5]).is_err());
        assert!(FiniteDist::new(vec![("A", 2)], vec![1.0]).is_err());
    }

    fn random_dist(weights: Vec<f64>) -> FiniteDist {
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        FiniteDist::new(vec![("A", 2), ("B", 3), ("C", 2), ("D", 2)], probs).unwrap()
    }

    proptest! {
        #[test]
        fn entropy_bounds(w in prop::collection::vec(0.0f64..1.0, 24).prop_filter("mass", |w| w.iter().sum::<f64>() > 1e-3)) {
            let d = random_dist(w);
            let h = d.entropy(&["A", "B"]).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= 6f64.log2() + 1e-12);
        }

        #[test]
        fn cmi_nonnegative_and_chain_rule(w in prop::collection::vec(0.0f64..1.0, 24).prop_filter("mass", |w| w.iter().sum::<f64>() > 1e-3)) {
            let d = random_dist(w);
            let lhs = d.cond_mutual_info(&["A", "B"], &["D"], &["C"]).unwrap();
            let first = d.cond_mutual_info(&["A"], &["D"], &["C"]).unwrap();
            let second = d.cond_mutual_info(&["B"], &["D"], &["A", "C"]).unwrap();
            prop_assert!(first >= 0.0 && second >= 0.0);
            prop_assert!((lhs - first - second).abs() < 1e-10);
        }

        #[test]
        fn data_processing(pa in 0.01f64..0.99, k1 in prop::collection::vec(0.01f64..1.0, 6), k2 in prop::collection::vec(0.01f64..1.0, 9)) {
            // A -> B -> C with A binary, B and C ternary.
            let row = |w: &[f64], i: usize, n: usize| w[i * n..(i + 1) * n].to_vec();
            let norm = |v: Vec<f64>| { let s: f64 = v.iter().sum(); v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
            let wab: Vec<Vec<f64>> = (0..2).map(|a| norm(row(&k1, a, 3))).collect();
            let wbc: Vec<Vec<f64>> = (0..3).map(|b| norm(row(&k2, b, 3))).collect();
            let d = FiniteDist::from_fn(vec![("A", 2), ("B", 3), ("C", 3)], |i| {
                let p = if i[0] == 0 { pa } else { 1.0 - pa };
                p * wab[i[0]][i[1]] * wbc[i[1]][i[2]]
            }).unwrap();
            let iac = d.cond_mutual_info(&["A"], &["C"], &[]).unwrap();
            let iab = d.cond_mutual_info(&["A"], &["B"], &[]).unwrap();
            prop_assert!(iac <= iab + 1e-12);
        }
    }
}
