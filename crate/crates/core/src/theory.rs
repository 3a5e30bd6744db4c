//! Theories as next-outcome forecast oracles, built-in theory families, and
//! finite-support random generators of theories.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::path::{History, PathSpec};
use crate::prob::{Arith, Prob};

/// Tolerance for weight normalization in approximate mode.
pub const APPROX_WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("probability parameter {0} outside [0, 1]")]
    OutOfRange(String),
    #[error("markov row {row} sums to {sum}, expected 1")]
    RowSum { row: u8, sum: String },
    #[error("mixture or lottery has no components")]
    Empty,
    #[error("weight {0} must be strictly positive")]
    ZeroWeight(String),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(String),
    #[error("declared atom mass {0} must be strictly positive")]
    ZeroAtom(String),
    #[error("declared atom masses sum to {0}, exceeding 1")]
    AtomOverflow(String),
    #[error("tree strategy: {0}")]
    Tree(String),
}

/// What a theory states about its atoms.
#[derive(Clone, Debug, PartialEq)]
pub enum Declaration {
    /// Every single path has measure zero.
    Nonatomic,
    /// All mass sits on the listed atoms.
    FinitelyAtomic(Vec<(PathSpec, Prob)>),
    /// No claim; bounds fall back to cylinder measures.
    Undeclared,
}

/// A behavioral strategy: grid forecasts `nodes[v] / grid` at each history of
/// length below `horizon`, and `1/2` afterwards.
///
/// Nodes are heap-indexed: the empty history is node 1 and the child of node
/// `v` after outcome `b` is `2v + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeStrategy {
    pub grid: u32,
    pub horizon: usize,
    pub nodes: Vec<u32>,
}

impl TreeStrategy {
    /// A strategy that forecasts `level / grid` everywhere within the horizon.
    pub fn constant(grid: u32, horizon: usize, level: u32) -> Self {
        Self {
            grid,
            horizon,
            nodes: alloc::vec![level; 1usize << horizon],
        }
    }

    pub fn level_at(&self, h: &History) -> Option<u32> {
        (h.len() < self.horizon).then(|| self.nodes[node_index(h)])
    }

    fn validate(&self) -> Result<(), TheoryError> {
        if self.grid == 0 {
            return Err(TheoryError::Tree("grid must be positive".into()));
        }
        if self.horizon > 24 {
            return Err(TheoryError::Tree(format!("horizon {} too large", self.horizon)));
        }
        if self.nodes.len() != 1usize << self.horizon {
            return Err(TheoryError::Tree(format!(
                "expected {} node slots, found {}",
                1usize << self.horizon,
                self.nodes.len()
            )));
        }
        if self.nodes.iter().skip(1).any(|&l| l > self.grid) {
            return Err(TheoryError::Tree("forecast level above grid".into()));
        }
        Ok(())
    }
}

/// Heap index of a history (root = 1).
pub fn node_index(h: &History) -> usize {
    h.bits()
        .iter()
        .fold(1usize, |v, &b| 2 * v + usize::from(b))
}

#[derive(Clone, Debug)]
pub enum Kind {
    Bernoulli(Prob),
    /// First-order chain; forecasts of 1 initially and after a 0 or a 1.
    Markov {
        rows: [Prob; 4],
        init: Prob,
    },
    PointMass(PathSpec, Arith),
    Mixture(Vec<(Prob, Theory)>),
    /// Laplace rule of succession: `(ones + 1) / (n + 2)`.
    Counting(Arith),
    Tree(TreeStrategy, Arith),
}

#[derive(Debug)]
struct Inner {
    kind: Kind,
    label: String,
    declaration: Declaration,
}

/// A probability measure on infinite binary paths, given by its forecasts.
#[derive(Clone)]
pub struct Theory {
    inner: Arc<Inner>,
}

fn check_unit(p: &Prob) -> Result<(), TheoryError> {
    if p.gt(&Prob::one(p.mode())) {
        return Err(TheoryError::OutOfRange(p.to_string()));
    }
    Ok(())
}

fn weights_sum_to_one(weights: &[&Prob]) -> Result<(), TheoryError> {
    let exact = weights.iter().all(|w| w.mode() == Arith::Exact);
    for w in weights {
        if w.is_zero() {
            return Err(TheoryError::ZeroWeight(w.to_string()));
        }
    }
    let mode = if exact { Arith::Exact } else { Arith::Approx };
    let sum = Prob::sum(weights.iter().copied(), mode);
    let ok = if exact {
        sum.is_one()
    } else {
        (sum.to_f64() - 1.0).abs() <= APPROX_WEIGHT_TOLERANCE
    };
    if ok {
        Ok(())
    } else {
        Err(TheoryError::WeightSum(sum.to_string()))
    }
}

fn validate_atoms(atoms: &[(PathSpec, Prob)]) -> Result<(), TheoryError> {
    for (_, m) in atoms {
        if m.is_zero() {
            return Err(TheoryError::ZeroAtom(m.to_string()));
        }
    }
    let mode = atoms.first().map_or(Arith::Exact, |(_, m)| m.mode());
    let total = Prob::sum(atoms.iter().map(|(_, m)| m), mode);
    if total.gt(&Prob::one(mode)) {
        return Err(TheoryError::AtomOverflow(total.to_string()));
    }
    Ok(())
}

impl Theory {
    fn build(kind: Kind, label: String, declaration: Declaration) -> Self {
        Self {
            inner: Arc::new(Inner {
                kind,
                label,
                declaration,
            }),
        }
    }

    /// I.i.d. outcomes with `P(1) = p`.
    pub fn bernoulli(p: Prob) -> Result<Self, TheoryError> {
        check_unit(&p)?;
        let declaration = if p.is_zero() {
            Declaration::FinitelyAtomic(alloc::vec![(PathSpec::constant(0), Prob::one(p.mode()))])
        } else if p.is_one() {
            Declaration::FinitelyAtomic(alloc::vec![(PathSpec::constant(1), Prob::one(p.mode()))])
        } else {
            Declaration::Nonatomic
        };
        let label = format!("bernoulli:{p}");
        Ok(Self::build(Kind::Bernoulli(p), label, declaration))
    }

    /// Markov chain from its row-stochastic transition matrix
    /// `[p00, p01, p10, p11]`; the first outcome follows the stationary law.
    pub fn markov(p00: Prob, p01: Prob, p10: Prob, p11: Prob) -> Result<Self, TheoryError> {
        for p in [&p00, &p01, &p10, &p11] {
            check_unit(p)?;
        }
        for (row, (a, b)) in [(0u8, (&p00, &p01)), (1, (&p10, &p11))] {
            let sum = a + b;
            let ok = match sum.mode() {
                Arith::Exact => sum.is_one(),
                Arith::Approx => (sum.to_f64() - 1.0).abs() <= APPROX_WEIGHT_TOLERANCE,
            };
            if !ok {
                return Err(TheoryError::RowSum {
                    row,
                    sum: sum.to_string(),
                });
            }
        }
        let flow = &p01 + &p10;
        let init = if flow.is_zero() {
            Prob::from_ratio(1, 2, p01.mode())
        } else {
            &p01 / &flow
        };
        let interior = |p: &Prob| !p.is_zero() && !p.is_one();
        let declaration = if interior(&p01) && interior(&p11) {
            Declaration::Nonatomic
        } else {
            Declaration::Undeclared
        };
        let label = format!("markov:{p00},{p01},{p10},{p11}");
        Ok(Self::build(
            Kind::Markov {
                rows: [p00, p01, p10, p11],
                init,
            },
            label,
            declaration,
        ))
    }

    /// All mass on a single path.
    pub fn point_mass(path: PathSpec, mode: Arith) -> Self {
        let label = format!("pointmass:{path}");
        let declaration = Declaration::FinitelyAtomic(alloc::vec![(path.clone(), Prob::one(mode))]);
        Self::build(Kind::PointMass(path, mode), label, declaration)
    }

    /// Laplace's rule of succession (the uniform mixture of Bernoulli theories).
    pub fn counting(mode: Arith) -> Self {
        Self::build(Kind::Counting(mode), "counting".into(), Declaration::Nonatomic)
    }

    /// A weighted mixture; weights must be positive and sum to one.
    pub fn mixture(components: Vec<(Prob, Theory)>) -> Result<Self, TheoryError> {
        if components.is_empty() {
            return Err(TheoryError::Empty);
        }
        weights_sum_to_one(&components.iter().map(|(w, _)| w).collect::<Vec<_>>())?;
        let declaration = if components.iter().all(|(_, t)| t.is_nonatomic()) {
            Declaration::Nonatomic
        } else if components.iter().all(|(_, t)| t.is_finitely_atomic()) {
            let mut atoms: Vec<(PathSpec, Prob)> = Vec::new();
            for (w, t) in &components {
                if let Declaration::FinitelyAtomic(list) = t.declaration() {
                    for (path, mass) in list {
                        let m = w * mass;
                        match atoms.iter_mut().find(|(p, _)| p == path) {
                            Some((_, acc)) => *acc = &*acc + &m,
                            None => atoms.push((path.clone(), m)),
                        }
                    }
                }
            }
            Declaration::FinitelyAtomic(atoms)
        } else {
            Declaration::Undeclared
        };
        let label = format!(
            "mixture:{}",
            components
                .iter()
                .map(|(w, t)| {
                    if t.label().contains(';') {
                        format!("{w}@[{}]", t.label())
                    } else {
                        format!("{w}@{}", t.label())
                    }
                })
                .collect::<Vec<_>>()
                .join(";")
        );
        Ok(Self::build(Kind::Mixture(components), label, declaration))
    }

    /// A behavioral strategy over a finite horizon, continued by fair coin flips.
    pub fn tree(strategy: TreeStrategy, mode: Arith) -> Result<Self, TheoryError> {
        strategy.validate()?;
        let digits: String = strategy
            .nodes
            .iter()
            .skip(1)
            .map(|&l| char::from_digit(l, 36).unwrap_or('?'))
            .collect();
        let label = format!("tree:{}/{}/{}", strategy.grid, strategy.horizon, digits);
        Ok(Self::build(Kind::Tree(strategy, mode), label, Declaration::Nonatomic))
    }

    /// Replaces the atom declaration after validating it.
    pub fn with_declaration(&self, declaration: Declaration) -> Result<Self, TheoryError> {
        if let Declaration::FinitelyAtomic(atoms) = &declaration {
            validate_atoms(atoms)?;
        }
        Ok(Self::build(
            self.inner.kind.clone(),
            self.inner.label.clone(),
            declaration,
        ))
    }

    /// Drops any atom declaration.
    pub fn undeclared(&self) -> Self {
        self.with_declaration(Declaration::Undeclared)
            .expect("undeclared is always valid")
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        Self::build(
            self.inner.kind.clone(),
            label.into(),
            self.inner.declaration.clone(),
        )
    }

    pub fn kind(&self) -> &Kind {
        &self.inner.kind
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn declaration(&self) -> &Declaration {
        &self.inner.declaration
    }

    pub fn is_nonatomic(&self) -> bool {
        matches!(self.inner.declaration, Declaration::Nonatomic)
    }

    pub fn is_finitely_atomic(&self) -> bool {
        matches!(self.inner.declaration, Declaration::FinitelyAtomic(_))
    }

    /// Shared identity: true when both handles point to the same theory.
    pub fn same_as(&self, other: &Theory) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn mode(&self) -> Arith {
        match &self.inner.kind {
            Kind::Bernoulli(p) => p.mode(),
            Kind::Markov { init, .. } => init.mode(),
            Kind::PointMass(_, m) | Kind::Counting(m) | Kind::Tree(_, m) => *m,
            Kind::Mixture(c) => {
                if c.iter().all(|(w, t)| w.mode() == Arith::Exact && t.mode() == Arith::Exact) {
                    Arith::Exact
                } else {
                    Arith::Approx
                }
            }
        }
    }

    pub fn cursor(&self) -> Cursor<'_> {
        Cursor::new(self)
    }

    /// Probability that the next outcome is 1 after `h`; 0 when `P(C(h)) = 0`.
    pub fn forecast(&self, h: &History) -> Prob {
        let mut c = self.cursor();
        for &b in h.bits() {
            c.step(b);
        }
        c.forecast()
    }

    /// `P(C(h))`.
    pub fn cylinder_prob(&self, h: &History) -> Prob {
        match &self.inner.kind {
            Kind::Bernoulli(p) => {
                let ones = h.ones() as u32;
                let zeros = h.len() as u32 - ones;
                &p.pow(ones) * &p.complement().pow(zeros)
            }
            Kind::Mixture(components) => {
                let mode = self.mode();
                components.iter().fold(Prob::zero(mode), |acc, (w, t)| {
                    &acc + &(w * &t.cylinder_prob(h))
                })
            }
            _ => {
                let mut c = self.cursor();
                for &b in h.bits() {
                    c.step(b);
                }
                c.mass().clone()
            }
        }
    }

    /// Forecasts `f_0, …, f_n` made along `h` (one more than `h.len()`).
    pub fn forecasts_along(&self, h: &History) -> Vec<Prob> {
        let mut c = self.cursor();
        let mut out = Vec::with_capacity(h.len() + 1);
        for &b in h.bits() {
            out.push(c.forecast());
            c.step(b);
        }
        out.push(c.forecast());
        out
    }

    /// `P(C(h|t))` for `t = 0..=h.len()`.
    pub fn cylinder_probs_along(&self, h: &History) -> Vec<Prob> {
        let mut c = self.cursor();
        let mut out = Vec::with_capacity(h.len() + 1);
        out.push(c.mass().clone());
        for &b in h.bits() {
            c.step(b);
            out.push(c.mass().clone());
        }
        out
    }

    /// `P(C(s|t))` for `t = 0..=depth` along an infinite path.
    pub fn path_probs(&self, s: &PathSpec, depth: usize) -> Vec<Prob> {
        self.cylinder_probs_along(&s.truncate(depth))
    }

    /// Lower bound on the atom mass at `s`: the declared value, else 0.
    pub fn atom_lower(&self, s: &PathSpec) -> Prob {
        match &self.inner.declaration {
            Declaration::FinitelyAtomic(atoms) => atoms
                .iter()
                .find(|(p, _)| p == s)
                .map(|(_, m)| m.clone())
                .unwrap_or_else(|| Prob::zero(self.mode())),
            _ => Prob::zero(self.mode()),
        }
    }

    /// Upper bound on the atom mass at `s` using cylinders of depth `depth`.
    pub fn atom_upper(&self, s: &PathSpec, depth: usize) -> Prob {
        match &self.inner.declaration {
            Declaration::Nonatomic => Prob::zero(self.mode()),
            Declaration::FinitelyAtomic(_) => self.atom_lower(s),
            Declaration::Undeclared => self.cylinder_prob(&s.truncate(depth)),
        }
    }

    /// Draws a length-`horizon` history from this theory.
    pub fn sample_path(&self, seed: u64, horizon: usize) -> History {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_path_with(&mut rng, horizon)
    }

    pub fn sample_path_with<R: Rng>(&self, rng: &mut R, horizon: usize) -> History {
        let mut c = Cursor::sampler(self);
        let mut h = History::empty();
        for _ in 0..horizon {
            let f = c.forecast().to_f64();
            let bit = u8::from(rng.random::<f64>() < f);
            c.step(bit);
            h.push(bit);
        }
        h
    }

    /// A finitely atomic theory with the same forecasts as `self` at every
    /// prefix of `h` (including `h`), and deterministic zeros everywhere else.
    pub fn atomic_splice(&self, h: &History) -> Theory {
        let mode = self.mode();
        let mut c = self.cursor();
        let mut atoms: Vec<(Prob, Theory)> = Vec::new();
        let mut push = |prefix: History, mass: Prob| {
            if !mass.is_zero() {
                atoms.push((mass, Theory::point_mass(PathSpec::eventually(&prefix, 0), mode)));
            }
        };
        for t in 0..=h.len() {
            let f = c.forecast();
            let prefix = h.truncate(t);
            let mass = c.mass().clone();
            let one = &mass * &f;
            let zero = &mass * &f.complement();
            if t == h.len() {
                push(prefix.child(0), zero);
                push(prefix.child(1), one);
            } else {
                let off = 1 - h.bit(t + 1);
                push(prefix.child(off), if off == 1 { one } else { zero });
                c.step(h.bit(t + 1));
            }
        }
        if mode == Arith::Approx {
            let total = Prob::sum(atoms.iter().map(|(m, _)| m), mode);
            for (m, _) in atoms.iter_mut() {
                *m = &*m / &total;
            }
        }
        Theory::mixture(atoms)
            .expect("splice masses partition the unit mass")
            .with_label(format!("splice({};{h})", self.label()))
    }
}

impl fmt::Debug for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Theory({})", self.label())
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Incremental evaluation of forecasts and cylinder mass along a history.
#[derive(Clone)]
pub struct Cursor<'a> {
    theory: &'a Theory,
    depth: usize,
    mass: Prob,
    track: bool,
    state: State<'a>,
}

#[derive(Clone)]
enum State<'a> {
    Plain,
    Markov(Option<u8>),
    Counting { ones: u64 },
    Tree { node: usize },
    Mixture(Vec<(&'a Prob, Cursor<'a>)>),
}

impl<'a> Cursor<'a> {
    pub fn new(theory: &'a Theory) -> Self {
        let state = match theory.kind() {
            Kind::Bernoulli(_) | Kind::PointMass(..) => State::Plain,
            Kind::Markov { .. } => State::Markov(None),
            Kind::Counting(_) => State::Counting { ones: 0 },
            Kind::Tree(..) => State::Tree { node: 1 },
            Kind::Mixture(components) => {
                State::Mixture(components.iter().map(|(w, t)| (w, Cursor::new(t))).collect())
            }
        };
        Self {
            theory,
            depth: 0,
            mass: Prob::one(theory.mode()),
            track: true,
            state,
        }
    }

    /// A cursor for drawing outcomes: forecasts only, no cylinder mass.
    /// Only valid along histories with positive probability.
    pub fn sampler(theory: &'a Theory) -> Self {
        let mut c = Self::new(theory);
        c.track = matches!(c.state, State::Mixture(_));
        c
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `P(C(h))` for the history consumed so far.
    pub fn mass(&self) -> &Prob {
        &self.mass
    }

    pub fn forecast(&self) -> Prob {
        let mode = self.theory.mode();
        if self.mass.is_zero() {
            return Prob::zero(mode);
        }
        match (self.theory.kind(), &self.state) {
            (Kind::Bernoulli(p), _) => p.clone(),
            (Kind::Markov { rows, init }, State::Markov(last)) => match last {
                None => init.clone(),
                Some(0) => rows[1].clone(),
                Some(_) => rows[3].clone(),
            },
            (Kind::PointMass(path, _), _) => {
                if path.bit_at(self.depth + 1) == 1 {
                    Prob::one(mode)
                } else {
                    Prob::zero(mode)
                }
            }
            (Kind::Counting(_), State::Counting { ones }) => {
                Prob::from_ratio(ones + 1, self.depth as u64 + 2, mode)
            }
            (Kind::Tree(strategy, _), State::Tree { node }) => {
                if self.depth < strategy.horizon {
                    Prob::from_ratio(u64::from(strategy.nodes[*node]), u64::from(strategy.grid), mode)
                } else {
                    Prob::from_ratio(1, 2, mode)
                }
            }
            (Kind::Mixture(_), State::Mixture(children)) => {
                let mut num = Prob::zero(mode);
                let mut den = Prob::zero(mode);
                for (w, child) in children {
                    let posterior = *w * child.mass();
                    if posterior.is_zero() {
                        continue;
                    }
                    num = &num + &(&posterior * &child.forecast());
                    den = &den + &posterior;
                }
                &num / &den
            }
            _ => unreachable!("cursor state matches its theory kind"),
        }
    }

    /// Consumes one outcome.
    pub fn step(&mut self, bit: u8) {
        let bit = u8::from(bit != 0);
        let f = self.forecast();
        match &mut self.state {
            State::Plain => {}
            State::Markov(last) => *last = Some(bit),
            State::Counting { ones } => *ones += u64::from(bit),
            State::Tree { node } => *node = (2 * *node + usize::from(bit)).min(usize::MAX / 4),
            State::Mixture(children) => {
                for (_, child) in children.iter_mut() {
                    child.step(bit);
                }
            }
        }
        self.mass = match &self.state {
            State::Mixture(children) => {
                let mode = self.theory.mode();
                children
                    .iter()
                    .fold(Prob::zero(mode), |acc, (w, c)| &acc + &(*w * c.mass()))
            }
            _ if !self.track => self.mass.clone(),
            _ => {
                let factor = if bit == 1 { f } else { f.complement() };
                &self.mass * &factor
            }
        };
        self.depth += 1;
        if let (Kind::Tree(strategy, _), State::Tree { node }) = (self.theory.kind(), &mut self.state) {
            if self.depth > strategy.horizon {
                *node = 0;
            }
        }
    }
}

/// A finite-support random generator of theories.
#[derive(Clone, Debug)]
pub struct TheoryLottery {
    support: Vec<(Theory, Prob)>,
}

impl TheoryLottery {
    pub fn new(support: Vec<(Theory, Prob)>) -> Result<Self, TheoryError> {
        if support.is_empty() {
            return Err(TheoryError::Empty);
        }
        weights_sum_to_one(&support.iter().map(|(_, w)| w).collect::<Vec<_>>())?;
        Ok(Self { support })
    }

    /// All mass on one theory.
    pub fn singleton(theory: Theory) -> Self {
        let mode = theory.mode();
        Self {
            support: alloc::vec![(theory, Prob::one(mode))],
        }
    }

    /// Equal weights over the given theories.
    pub fn uniform(theories: Vec<Theory>, mode: Arith) -> Result<Self, TheoryError> {
        let n = theories.len() as u64;
        if n == 0 {
            return Err(TheoryError::Empty);
        }
        Self::new(
            theories
                .into_iter()
                .map(|t| (t, Prob::from_ratio(1, n, mode)))
                .collect(),
        )
    }

    pub fn support(&self) -> &[(Theory, Prob)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mode(&self) -> Arith {
        if self
            .support
            .iter()
            .all(|(t, w)| w.mode() == Arith::Exact && t.mode() == Arith::Exact)
        {
            Arith::Exact
        } else {
            Arith::Approx
        }
    }

    /// Draws a support member with its weight.
    pub fn sample_theory(&self, seed: u64) -> &Theory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> &Theory {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (t, w) in &self.support {
            acc += w.to_f64();
            if u < acc {
                return t;
            }
        }
        &self.support.last().expect("nonempty").0
    }
}

/// Convenience: exact probability from a decimal fraction `n / 10^digits`.
pub fn decimal(n: u64, digits: u32, mode: Arith) -> Prob {
    Prob::from_ratio(n, 10u64.pow(digits), mode)
}

/// Rounds a probability to the nearest grid level `k / grid`.
pub fn nearest_level(p: &Prob, grid: u32) -> u32 {
    libm::round(p.to_f64() * f64::from(grid)).to_u32().unwrap_or(0).min(grid)
}
