//! Finite non-recombining binary scenario trees.
//!
//! Nodes are numbered from 1 in heap order: node `k` sits at level
//! `floor(log2 k)` and its children are `2k` (up) and `2k + 1` (down). A
//! process is stored as one value per node, index 0 unused.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Deepest supported tree; a full binary tree doubles in size per level.
pub const MAX_DEPTH: usize = 22;

/// Levels at least this wide are processed in parallel.
const PARALLEL_WIDTH: usize = 1 << 14;

pub type Values = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    depth: usize,
    /// Probability of the up move out of each non-terminal node.
    up_prob: Vec<f64>,
}

impl ScenarioTree {
    pub fn new(depth: usize, up_prob: Vec<f64>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return invalid(format!("lattice depth {depth} exceeds {MAX_DEPTH}"));
        }
        if up_prob.len() != 1 << depth {
            return invalid(format!("need {} transition probabilities", 1usize << depth));
        }
        if up_prob[1..].iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return invalid("transition probabilities must lie strictly inside (0, 1)");
        }
        Ok(ScenarioTree { depth, up_prob })
    }

    /// Same up probability at every node.
    pub fn binomial(depth: usize, q: f64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return invalid(format!("lattice depth {depth} exceeds {MAX_DEPTH}"));
        }
        let mut up = vec![q; 1 << depth];
        up[0] = 0.5;
        Self::new(depth, up)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        1 << (self.depth + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level(k: usize) -> usize {
        k.ilog2() as usize
    }

    pub fn nodes(level: usize) -> Range<usize> {
        (1 << level)..(1 << (level + 1))
    }

    pub fn up_prob(&self, k: usize) -> f64 {
        self.up_prob[k]
    }

    /// Up moves on the path from the root to `k`.
    pub fn up_moves(k: usize) -> usize {
        Self::level(k) + 1 - k.count_ones() as usize
    }

    /// Probability of reaching `k` from the root.
    pub fn path_prob(&self, k: usize) -> f64 {
        let mut p = 1.0;
        let mut n = k;
        while n > 1 {
            let q = self.up_prob[n / 2];
            p *= if n % 2 == 0 { q } else { 1.0 - q };
            n /= 2;
        }
        p
    }

    /// Build a process from a function of `(level, node)`.
    pub fn process(&self, f: impl Fn(usize, usize) -> f64 + Sync) -> Values {
        let mut v = vec![0.0; self.len()];
        v[1..].par_iter_mut().enumerate().for_each(|(i, x)| {
            let k = i + 1;
            *x = f(Self::level(k), k);
        });
        v
    }

    /// One-step conditional expectation at `k` of a process defined on its children.
    pub fn step(&self, values: &[f64], k: usize) -> f64 {
        let q = self.up_prob[k];
        q * values[2 * k] + (1.0 - q) * values[2 * k + 1]
    }

    /// Starting from values at level `to`, fill levels `from..to` with the
    /// conditional expectations `E_i[X_to]`. Levels outside `from..=to` are
    /// left untouched.
    pub fn condition(&self, values: &mut [f64], from: usize, to: usize) {
        for level in (from..to).rev() {
            let (lower, upper) = values.split_at_mut(1 << (level + 1));
            let here = &mut lower[1 << level..];
            let base = 1 << level;
            let fill = |(i, x): (usize, &mut f64)| {
                let k = base + i;
                let q = self.up_prob[k];
                // children of k live at 2k - 2^(level+1) in `upper`
                let c = 2 * k - (1 << (level + 1));
                *x = q * upper[c] + (1.0 - q) * upper[c + 1];
            };
            if here.len() >= PARALLEL_WIDTH {
                here.par_iter_mut().enumerate().for_each(fill);
            } else {
                here.iter_mut().enumerate().for_each(fill);
            }
        }
    }

    /// `E_i[X_to]` at every node of levels `0..=to`, from a process whose level-`to` values are used.
    pub fn conditional(&self, process: &[f64], to: usize) -> Values {
        let mut v = vec![0.0; 1 << (to + 1)];
        let r = Self::nodes(to);
        v[r.clone()].copy_from_slice(&process[r]);
        self.condition(&mut v, 0, to);
        v
    }

    /// `E[X_to]` seen from the root.
    pub fn expectation(&self, process: &[f64], to: usize) -> f64 {
        self.conditional(process, to)[1]
    }

    /// Largest `|E_{i-1}[X_i] - X_{i-1}|` over all non-terminal nodes.
    pub fn martingale_residual(&self, process: &[f64]) -> f64 {
        (1..(1 << self.depth)).into_par_iter().map(|k| (self.step(process, k) - process[k]).abs()).reduce(|| 0.0, f64::max)
    }

    /// Whether the two children of every node carry the same value.
    pub fn is_previsible(&self, process: &[f64]) -> bool {
        (1..(1 << self.depth)).all(|k| process[2 * k] == process[2 * k + 1])
    }

    pub fn check_process(&self, process: &[f64], what: &str) -> Result<()> {
        if process.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "{what} needs {} node values, got {}",
                self.len(),
                process.len()
            )));
        }
        Ok(())
    }

    /// Node reached by a path of moves, `true` meaning up.
    pub fn node_of(moves: &[bool]) -> usize {
        moves.iter().fold(1, |k, &up| 2 * k + usize::from(!up))
    }
}
