//! Reduction of dependent binary factors to independent binary factors.
//!
//! Node `k` of the binary tree carries the independent factor `X_k`. The
//! branch `X_k = 1` leads to node `2k`, the co-branch `X_k = 0` to `2k + 1`.
//! `Z_j` takes its first value `z_j` exactly when the factor at its depth-`j`
//! node on the active path equals one.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// Largest tree for which reduction expressions are written out.
pub const MAX_EXPRESSION_FACTORS: usize = 20;
/// Largest tree that can be built at all.
pub const MAX_FACTORS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTree {
    pub n: usize,
}

/// One term of a reduction: the product of path factors followed by
/// `(z_j X_leaf + z̄_j X̄_leaf)`. `path[i] = (node, branch)` where `branch`
/// selects `X_node` over its co-factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XTerm {
    pub path: Vec<(usize, bool)>,
    pub leaf: usize,
}

pub fn build_reduction(n: usize) -> Result<ReductionTree> {
    if n < 1 {
        return invalid("reduction needs at least one Z-factor");
    }
    if n > MAX_FACTORS {
        return Err(Error::UnsupportedSize(format!("reduction limited to {MAX_FACTORS} Z-factors")));
    }
    Ok(ReductionTree { n })
}

impl ReductionTree {
    /// `2^n - 1`.
    pub fn x_count(&self) -> usize {
        (1 << self.n) - 1
    }

    /// Leaf nodes of `Z_j` run over `2^(j-1) .. 2^j - 1` in order.
    pub fn term(&self, j: usize, leaf: usize) -> XTerm {
        debug_assert!(leaf >= 1 << (j - 1) && leaf < 1 << j);
        let mut path = Vec::with_capacity(j - 1);
        let mut k = leaf;
        while k > 1 {
            let parent = k / 2;
            path.push((parent, k % 2 == 0));
            k = parent;
        }
        path.reverse();
        XTerm { path, leaf }
    }

    pub fn terms(&self, j: usize) -> Result<impl Iterator<Item = XTerm> + '_> {
        if j < 1 || j > self.n {
            return invalid(format!("Z index {j} outside 1..={}", self.n));
        }
        Ok(((1 << (j - 1))..(1 << j)).map(move |leaf| self.term(j, leaf)))
    }

    fn check_printable(&self) -> Result<()> {
        if self.n > MAX_EXPRESSION_FACTORS {
            return Err(Error::UnsupportedSize(format!(
                "expressions are written out for at most {MAX_EXPRESSION_FACTORS} Z-factors"
            )));
        }
        Ok(())
    }

    /// `Z_j=...` in LaTeX.
    pub fn latex(&self, j: usize) -> Result<String> {
        self.check_printable()?;
        let sub = |k: usize| if k < 10 { format!("_{k}") } else { format!("_{{{k}}}") };
        let x = |k: usize, branch: bool| if branch { format!("X{}", sub(k)) } else { format!("\\bar{{X}}{}", sub(k)) };
        let zj = sub(j);
        let terms: Vec<String> = self
            .terms(j)?
            .map(|term| {
                let prefix: Vec<String> = term.path.iter().map(|&(k, b)| x(k, b)).collect();
                let inner = format!("z{zj} {}+\\bar{{z}}{zj}{}", x(term.leaf, true), x(term.leaf, false));
                if prefix.is_empty() {
                    inner
                } else {
                    format!("{}({inner})", prefix.join(" "))
                }
            })
            .collect();
        Ok(format!("Z{zj}={}", terms.join("+")))
    }

    /// `Z_j = ...` with Unicode subscripts and overbars.
    pub fn unicode(&self, j: usize) -> Result<String> {
        self.check_printable()?;
        let x = |k: usize, branch: bool| format!("X{}{}", if branch { "" } else { "\u{0304}" }, subscript(k));
        let zj = subscript(j);
        let terms: Vec<String> = self
            .terms(j)?
            .map(|term| {
                let prefix: String = term.path.iter().map(|&(k, b)| x(k, b)).collect();
                let inner = format!("z{zj}{} + z\u{0304}{zj}{}", x(term.leaf, true), x(term.leaf, false));
                if prefix.is_empty() {
                    inner
                } else {
                    format!("{prefix}({inner})")
                }
            })
            .collect();
        Ok(format!("Z{zj} = {}", terms.join(" + ")))
    }

    /// Node reached after `Z_1..Z_j` take the given values (`true` = `z`).
    pub fn node_of(&self, pattern: &[bool]) -> usize {
        pattern.iter().fold(1, |k, &z| 2 * k + usize::from(!z))
    }
}

fn subscript(k: usize) -> String {
    const DIGITS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    k.to_string().chars().map(|c| DIGITS[c.to_digit(10).unwrap() as usize]).collect()
}

/// Evaluate each `Z_j` term by term from a full assignment of `X_1..X_{2^n-1}`
/// (index 0 holds `X_1`). Returns `true` where `Z_j = z_j`.
pub fn evaluate_reduction(tree: &ReductionTree, x: &[bool]) -> Result<Vec<bool>> {
    if x.len() != tree.x_count() {
        return invalid(format!("assignment needs {} X-factors, got {}", tree.x_count(), x.len()));
    }
    let val = |k: usize, branch: bool| x[k - 1] == branch;
    (1..=tree.n)
        .map(|j| {
            let mut active = tree.terms(j)?.filter(|t| t.path.iter().all(|&(k, b)| val(k, b)));
            match (active.next(), active.next()) {
                (Some(t), None) => Ok(x[t.leaf - 1]),
                _ => Err(Error::InvalidInput(format!("Z_{j} does not have exactly one active term"))),
            }
        })
        .collect()
}

/// Joint law of `n` binary Z-factors. Index bit `n - j` (most significant
/// first) is set when `Z_j = z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n < 1 || n > MAX_FACTORS {
            return invalid("joint distribution needs between 1 and 26 factors");
        }
        if probs.len() != 1 << n {
            return invalid(format!("joint distribution of {n} factors needs {} probabilities", 1usize << n));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return invalid("joint probabilities must be non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("joint probabilities sum to {total}"));
        }
        Ok(JointDistribution { n, probs })
    }

    /// From patterns such as `"101"`, where `1` stands for `z_j`; missing patterns have mass zero.
    pub fn from_patterns(patterns: &BTreeMap<String, f64>) -> Result<Self> {
        let n = match patterns.keys().next() {
            Some(k) => k.len(),
            None => return invalid("no joint probabilities given"),
        };
        if n < 1 || n > MAX_FACTORS {
            return invalid("joint distribution needs between 1 and 26 factors");
        }
        let mut probs = vec![0.0; 1 << n];
        for (pattern, p) in patterns {
            probs[pattern_index(pattern, n)?] = *p;
        }
        Self::new(n, probs)
    }

    pub fn pattern(&self, index: usize) -> String {
        (0..self.n).map(|j| if index >> (self.n - 1 - j) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn prob(&self, pattern: &str) -> Result<f64> {
        Ok(self.probs[pattern_index(pattern, self.n)?])
    }

    pub fn to_patterns(&self) -> BTreeMap<String, f64> {
        self.probs.iter().enumerate().map(|(i, p)| (self.pattern(i), *p)).collect()
    }

    fn values(&self, index: usize) -> Vec<bool> {
        (0..self.n).map(|j| index >> (self.n - 1 - j) & 1 == 1).collect()
    }
}

fn pattern_index(pattern: &str, n: usize) -> Result<usize> {
    if pattern.len() != n {
        return invalid(format!("pattern {pattern:?} should have {n} symbols"));
    }
    pattern.chars().try_fold(0usize, |acc, c| match c {
        '1' => Ok(2 * acc + 1),
        '0' => Ok(2 * acc),
        _ => invalid(format!("pattern {pattern:?} may only contain 0 and 1")),
    })
}

/// `Q(X_k = 1)` for every node `k`, index 0 holding `X_1`. Every branch of
/// the tree, including each complete pattern, must carry positive mass.
pub fn x_probs_from_joint(joint: &JointDistribution) -> Result<Vec<f64>> {
    let tree = ReductionTree { n: joint.n };
    let mut mass = vec![0.0; 1 << (joint.n + 1)];
    for (i, p) in joint.probs.iter().enumerate() {
        mass[tree.node_of(&joint.values(i))] = *p;
    }
    for k in (1..(1 << joint.n)).rev() {
        mass[k] = mass[2 * k] + mass[2 * k + 1];
    }
    if let Some(node) = (1..mass.len()).find(|&k| mass[k] == 0.0) {
        return Err(Error::DegenerateDistribution { node });
    }
    Ok((1..(1 << joint.n)).map(|k| (mass[2 * k] / mass[k]).clamp(0.0, 1.0)).collect())
}

pub fn joint_from_x_probs(tree: &ReductionTree, x_probs: &[f64]) -> Result<JointDistribution> {
    if x_probs.len() != tree.x_count() {
        return invalid(format!("need {} X-factor probabilities", tree.x_count()));
    }
    if x_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return invalid("X-factor probabilities must lie in [0, 1]");
    }
    // mass[k] is the probability that the active path passes through node k
    let mut mass = vec![0.0; 1 << (tree.n + 1)];
    mass[1] = 1.0;
    for k in 1..(1 << tree.n) {
        let p = x_probs[k - 1];
        mass[2 * k] = mass[k] * p;
        mass[2 * k + 1] = mass[k] * (1.0 - p);
    }
    let probs = (0..1usize << tree.n)
        .map(|i| {
            let pattern: Vec<bool> = (0..tree.n).map(|j| i >> (tree.n - 1 - j) & 1 == 1).collect();
            mass[tree.node_of(&pattern)]
        })
        .collect();
    JointDistribution::new(tree.n, probs)
}

/// Draw the X-factors independently, evaluate the reduction, and count the
/// resulting Z patterns (indexed as in [`JointDistribution`]).
pub fn sample_pattern_counts(tree: &ReductionTree, x_probs: &[f64], samples: u64, seed: u64) -> Result<Vec<u64>> {
    joint_from_x_probs(tree, x_probs)?;
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Result<Vec<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let mut counts = vec![0u64; 1 << tree.n];
            let mut x = vec![false; tree.x_count()];
            for _ in c * CHUNK..samples.min((c + 1) * CHUNK) {
                for (xk, p) in x.iter_mut().zip(x_probs) {
                    *xk = rng.random::<f64>() < *p;
                }
                let z = evaluate_reduction(tree, &x)?;
                counts[z.iter().fold(0, |acc, &b| 2 * acc + usize::from(b))] += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![0u64; 1 << tree.n];
    for counts in partial? {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(total)
}
