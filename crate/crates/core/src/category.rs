//! Dense path enumerations, the `t`-index, and the finite-depth global
//! category test.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::forecast_test::Verdict;
use crate::path::{History, PathSpec};
use crate::prob::Prob;
use crate::theory::Theory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryError {
    #[error("no t <= {depth} satisfies the mass condition for i={i}, k={k}")]
    DepthExceeded { i: usize, k: usize, depth: usize },
    #[error("invalid test parameters: {0}")]
    InvalidParams(&'static str),
}

/// A countable dense family of paths `s^1, s^2, …`.
///
/// `Theta(θ)` lists θ first, then, stage by stage, the paths that first
/// agree with θ from period `t` on, in lexicographic order. `Default` is the
/// same construction around `0^∞`: the eventually-zero paths ordered by the
/// length of their last 1, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DenseEnum {
    Default,
    Theta(PathSpec),
}

impl DenseEnum {
    pub fn anchor(&self) -> PathSpec {
        match self {
            DenseEnum::Default => PathSpec::constant(0),
            DenseEnum::Theta(theta) => theta.clone(),
        }
    }

    /// `s^i`, `i >= 1`.
    pub fn path(&self, i: usize) -> PathSpec {
        assert!(i >= 1, "dense paths are indexed from 1");
        let theta = self.anchor();
        if i == 1 {
            return theta;
        }
        let j = i - 1;
        let len = usize::BITS as usize - j.leading_zeros() as usize;
        let r = j - (1usize << (len - 1));
        let mut head = History::from_index(r as u64, len - 1);
        head.push(1 - theta.bit_at(len));
        theta.tail_from(len).prepend(&head)
    }

    /// Every history of length `len` is extended by some `s^i` with
    /// `i <= density_bound(len)`.
    pub fn density_bound(&self, len: usize) -> usize {
        1usize << len.min(usize::BITS as usize - 2)
    }

    /// Smallest `i <= cap` with `s^i` in `C(h)`.
    pub fn first_extending(&self, h: &History, cap: usize) -> Option<usize> {
        (1..=cap).find(|&i| self.path(i).in_cylinder(h))
    }
}

impl fmt::Display for DenseEnum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenseEnum::Default => f.write_str("default"),
            DenseEnum::Theta(theta) => write!(f, "theta:{theta}"),
        }
    }
}

pub fn nth_dense_path(dense: &DenseEnum, i: usize) -> PathSpec {
    dense.path(i)
}

pub fn stheta_enum(theta: PathSpec) -> DenseEnum {
    DenseEnum::Theta(theta)
}

/// How atom mass on `s^i` enters the `t`-index condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AtomMode {
    /// Treat every atom as 0; delays `t` and keeps the type-I bound.
    #[default]
    Conservative,
    /// Subtract the theory's declared atom mass.
    Declared,
}

impl fmt::Display for AtomMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomMode::Conservative => "conservative",
            AtomMode::Declared => "declared",
        })
    }
}

/// Truncation parameters of the global category test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GctParams {
    /// Layer count `K`.
    pub layers: usize,
    /// Path-index cap `I`.
    pub paths: usize,
    /// Depth cap `D`.
    pub depth: usize,
    pub atoms: AtomMode,
    pub dense: DenseEnum,
}

impl GctParams {
    pub fn new(layers: usize, paths: usize, depth: usize) -> Result<Self, CategoryError> {
        let params = Self {
            layers,
            paths,
            depth,
            atoms: AtomMode::Conservative,
            dense: DenseEnum::Default,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CategoryError> {
        if self.layers == 0 || self.paths == 0 || self.depth == 0 {
            return Err(CategoryError::InvalidParams("K, I and D must be positive"));
        }
        if self.depth < self.layers + self.paths {
            return Err(CategoryError::InvalidParams("D must be at least K + I"));
        }
        Ok(())
    }

    pub fn with_atoms(mut self, atoms: AtomMode) -> Self {
        self.atoms = atoms;
        self
    }

    pub fn with_dense(mut self, dense: DenseEnum) -> Self {
        self.dense = dense;
        self
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }
}

impl Default for GctParams {
    fn default() -> Self {
        Self::new(7, 12, 64).expect("default parameters are valid")
    }
}

impl fmt::Display for GctParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gct:K={},I={},D={},atoms={},S={}",
            self.layers, self.paths, self.depth, self.atoms, self.dense
        )
    }
}

/// Smallest `t` in `0..probs.len()` with `probs[t] − atom <= 2^{-(k+i)}`.
fn first_small(probs: &[Prob], atom: &Prob, exponent: usize) -> Option<usize> {
    let mode = probs[0].mode();
    let bound = Prob::pow2_neg(exponent as u32, mode);
    probs.iter().position(|p| (p - atom).le(&bound))
}

fn atom_for(p: &Theory, s: &PathSpec, mode: AtomMode) -> Prob {
    match mode {
        AtomMode::Conservative => Prob::zero(p.mode()),
        AtomMode::Declared => p.atom_lower(s),
    }
}

/// `t(i, k, P)`.
pub fn t_index(p: &Theory, i: usize, k: usize, params: &GctParams) -> Result<usize, CategoryError> {
    let s = params.dense.path(i);
    let probs = p.path_probs(&s, params.depth);
    first_small(&probs, &atom_for(p, &s, params.atoms), k + i).ok_or(CategoryError::DepthExceeded {
        i,
        k,
        depth: params.depth,
    })
}

/// The rejection cylinders of one theory: `bases[k-1][i-1] = s^i | t(i,k,P)`.
#[derive(Clone, Debug)]
pub struct GctRegion {
    t: Vec<Vec<Option<usize>>>,
    bases: Vec<Vec<Option<History>>>,
    masses: Vec<Vec<Option<Prob>>>,
}

impl GctRegion {
    pub fn build(p: &Theory, params: &GctParams) -> Self {
        let k_max = params.layers;
        let mut t = alloc::vec![alloc::vec![None; params.paths]; k_max];
        let mut bases = alloc::vec![alloc::vec![None; params.paths]; k_max];
        let mut masses = alloc::vec![alloc::vec![None; params.paths]; k_max];
        for i in 1..=params.paths {
            let s = params.dense.path(i);
            let probs = p.path_probs(&s, params.depth);
            let atom = atom_for(p, &s, params.atoms);
            for k in 1..=k_max {
                if let Some(ti) = first_small(&probs, &atom, k + i) {
                    t[k - 1][i - 1] = Some(ti);
                    bases[k - 1][i - 1] = Some(s.truncate(ti));
                    masses[k - 1][i - 1] = Some(probs[ti].clone());
                }
            }
        }
        Self { t, bases, masses }
    }

    pub fn layers(&self) -> usize {
        self.bases.len()
    }

    /// `t(i, k, P)`, `None` when the depth cap was exceeded.
    pub fn t_index(&self, i: usize, k: usize) -> Option<usize> {
        self.t[k - 1][i - 1]
    }

    pub fn base(&self, i: usize, k: usize) -> Option<&History> {
        self.bases[k - 1][i - 1].as_ref()
    }

    /// Bases of layer `k` that were found within the depth cap.
    pub fn layer(&self, k: usize) -> impl Iterator<Item = (usize, &History)> {
        self.bases[k - 1]
            .iter()
            .enumerate()
            .filter_map(|(j, b)| b.as_ref().map(|b| (j + 1, b)))
    }

    /// `Σ_i P(C(s^i | t(i,k,P)))`.
    pub fn layer_mass(&self, k: usize) -> Option<Prob> {
        let present: Vec<&Prob> = self.masses[k - 1].iter().flatten().collect();
        let mode = present.first().map(|p| p.mode())?;
        Some(Prob::sum(present, mode))
    }

    pub fn has_depth_exceeded(&self) -> bool {
        self.t.iter().flatten().any(Option::is_none)
    }

    /// Rejects at the first prefix length at which every layer has a base
    /// that the prefix extends.
    pub fn verdict(&self, h: &History) -> Verdict {
        if self.bases.is_empty() {
            return Verdict::AcceptSoFar;
        }
        let mut at = 0;
        for layer in &self.bases {
            let hit = layer
                .iter()
                .flatten()
                .filter(|b| h.extends(b))
                .map(History::len)
                .min();
            match hit {
                Some(n) => at = at.max(n),
                None => return Verdict::AcceptSoFar,
            }
        }
        Verdict::Reject(at)
    }
}

pub fn gct_verdict(p: &Theory, h: &History, params: &GctParams) -> Verdict {
    GctRegion::build(p, params).verdict(h)
}

/// `2^{-K} + Σ_{i<=I} atom_upper(P, s^i, D)`; may exceed 1.
pub fn type1_bound(p: &Theory, params: &GctParams) -> Prob {
    let mode = p.mode();
    let mut bound = Prob::pow2_neg(params.layers as u32, mode);
    for i in 1..=params.paths {
        bound = &bound + &p.atom_upper(&params.dense.path(i), params.depth);
    }
    bound
}

/// `ceil(log2(2 (m+1)^3))`: layers giving type-I error below `1/(2(m+1)^3)`.
pub fn layers_for(m: usize) -> usize {
    let target = 2 * (m as u128 + 1).pow(3);
    let mut k = 0;
    while (1u128 << k) < target {
        k += 1;
    }
    k
}
