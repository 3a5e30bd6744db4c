//! The finite-horizon game between an expert choosing a theory lottery and
//! nature choosing a path, with certified solutions.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::forecast_test::{AvgMatch, Test};
use crate::path::History;
use crate::prob::{Arith, Prob};
use crate::theory::{node_index, Theory, TheoryError, TheoryLottery, TreeStrategy};

/// Default limit on `rows × 2^horizon`.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;
/// Largest horizon with exhaustive columns.
pub const MAX_HORIZON: usize = 20;
/// Denominator used to rationalize solver weights.
const WEIGHT_SCALE: f64 = 1e9;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("the menu is empty")]
    EmptyMenu,
    #[error("{cells} cells exceed the budget of {budget}")]
    BudgetExceeded { cells: u128, budget: usize },
    #[error("gap {} above target after {} iterations", .0.gap, .0.iterations)]
    IterationLimit(Box<Equilibrium>),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

fn check_budget(rows: usize, horizon: usize, budget: usize) -> Result<(), GameError> {
    let cells = (rows.max(1) as u128) << horizon.min(100);
    if horizon > MAX_HORIZON || cells > budget as u128 {
        return Err(GameError::BudgetExceeded { cells, budget });
    }
    Ok(())
}

/// Acceptance indicators: rows are theories, columns are histories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl GameMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, GameError> {
        let cols = rows.first().ok_or(GameError::EmptyMenu)?.len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged game matrix");
            entries.extend(row.iter().map(|&e| u8::from(e != 0)));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Payoff of a row mixture against each column.
    pub fn column_payoffs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        for (r, &w) in x.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                if self.get(r, c) == 1 {
                    *o += w;
                }
            }
        }
        out
    }

    /// Payoff of each row against a column mixture.
    pub fn row_payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(y)
                    .filter(|(&e, _)| e == 1)
                    .map(|(_, &w)| w)
                    .sum()
            })
            .collect()
    }

    /// Exact `min_c Σ_r w_r A[r][c]` for integer weights over `denominator`.
    pub fn exact_worst(&self, numerators: &[u64], denominator: u64) -> (Prob, usize) {
        let mut best = (u64::MAX, 0);
        for c in 0..self.cols {
            let s: u64 = (0..self.rows)
                .filter(|&r| self.get(r, c) == 1)
                .map(|r| numerators[r])
                .sum();
            if s < best.0 {
                best = (s, c);
            }
        }
        (Prob::from_ratio(best.0, denominator, Arith::Exact), best.1)
    }
}

/// All `2^horizon` histories in index order.
pub fn all_columns(horizon: usize) -> Vec<History> {
    History::all_of_length(horizon).collect()
}

/// Entry `(P, s)` is 1 iff `test` does not reject `P` on `s`.
pub fn build_game(test: &Test, menu: &[Theory], horizon: usize) -> Result<GameMatrix, GameError> {
    build_game_with_budget(test, menu, horizon, DEFAULT_CELL_BUDGET)
}

pub fn build_game_with_budget(
    test: &Test,
    menu: &[Theory],
    horizon: usize,
    budget: usize,
) -> Result<GameMatrix, GameError> {
    if menu.is_empty() {
        return Err(GameError::EmptyMenu);
    }
    check_budget(menu.len(), horizon, budget)?;
    let columns = all_columns(horizon);
    let rows: Vec<Vec<u8>> = menu
        .iter()
        .map(|p| {
            let prepared = test.prepare(p);
            columns
                .iter()
                .map(|s| u8::from(!prepared.verdict(s).is_reject()))
                .collect()
        })
        .collect();
    GameMatrix::from_rows(&rows)
}

/// A row lottery with its certificate.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    /// Rationalized row weights `numerators[r] / denominator`.
    pub numerators: Vec<u64>,
    pub denominator: u64,
    /// Exact worst-column payoff of the rationalized lottery.
    pub value: Prob,
    /// Best-response value against the averaged column strategy.
    pub upper: f64,
    pub gap: f64,
    pub column_weights: Vec<f64>,
    pub iterations: usize,
}

impl Equilibrium {
    pub fn weight(&self, r: usize) -> Prob {
        Prob::from_ratio(self.numerators[r], self.denominator, Arith::Exact)
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .map(|&n| n as f64 / self.denominator as f64)
            .collect()
    }

    /// The lottery over the menu rows with positive weight.
    pub fn lottery(&self, menu: &[Theory]) -> Result<TheoryLottery, GameError> {
        let support = menu
            .iter()
            .enumerate()
            .filter(|(r, _)| self.numerators[*r] > 0)
            .map(|(r, t)| (t.clone(), self.weight(r)))
            .collect();
        Ok(TheoryLottery::new(support)?)
    }
}

fn rationalize(x: &[f64]) -> (Vec<u64>, u64) {
    let mut nums: Vec<u64> = x
        .iter()
        .map(|&w| libm::round(w.max(0.0) * WEIGHT_SCALE) as u64)
        .collect();
    let mut total: u64 = nums.iter().sum();
    if total == 0 {
        nums[0] = 1;
        total = 1;
    }
    (nums, total)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Optimistic multiplicative weights for both players, with the averaged
/// strategies certified against every column and every row.
pub fn solve_zero_sum(m: &GameMatrix, target_gap: f64) -> Result<Equilibrium, GameError> {
    solve_zero_sum_with(m, target_gap, 200_000)
}

pub fn solve_zero_sum_with(
    m: &GameMatrix,
    target_gap: f64,
    max_iter: usize,
) -> Result<Equilibrium, GameError> {
    if m.rows() == 0 {
        return Err(GameError::EmptyMenu);
    }
    let eta = 0.1;
    let (nr, nc) = (m.rows(), m.cols());
    let mut row_logits = alloc::vec![0.0; nr];
    let mut col_logits = alloc::vec![0.0; nc];
    let mut last_row_gain = alloc::vec![0.0; nr];
    let mut last_col_loss = alloc::vec![0.0; nc];
    let mut x_sum = alloc::vec![0.0; nr];
    let mut y_sum = alloc::vec![0.0; nc];
    let mut best_x: Vec<f64> = alloc::vec![1.0 / nr as f64; nr];
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_y: Vec<f64> = alloc::vec![1.0 / nc as f64; nc];
    let mut best_upper = f64::INFINITY;
    let mut iterations = 0;

    let mut check = |x: &[f64], y: &[f64], best_x: &mut Vec<f64>, best_y: &mut Vec<f64>| {
        let lower = m.column_payoffs(x).into_iter().fold(f64::INFINITY, f64::min);
        let upper = m.row_payoffs(y).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if lower > best_lower {
            best_lower = lower;
            *best_x = x.to_vec();
        }
        if upper < best_upper {
            best_upper = upper;
            *best_y = y.to_vec();
        }
        best_upper - best_lower
    };

    // pure-strategy starting certificates
    for r in 0..nr {
        let mut e = alloc::vec![0.0; nr];
        e[r] = 1.0;
        check(&e, &best_y.clone(), &mut best_x, &mut best_y);
    }

    while iterations < max_iter {
        iterations += 1;
        // optimistic step: play against last gradient counted twice
        let x_logits: Vec<f64> = row_logits
            .iter()
            .zip(&last_row_gain)
            .map(|(l, g)| l + eta * g)
            .collect();
        let y_logits: Vec<f64> = col_logits
            .iter()
            .zip(&last_col_loss)
            .map(|(l, g)| l - eta * g)
            .collect();
        let x = softmax(&x_logits);
        let y = softmax(&y_logits);
        let gain = m.row_payoffs(&y);
        let loss = m.column_payoffs(&x);
        for r in 0..nr {
            row_logits[r] += eta * gain[r];
            x_sum[r] += x[r];
        }
        for c in 0..nc {
            col_logits[c] -= eta * loss[c];
            y_sum[c] += y[c];
        }
        last_row_gain = gain;
        last_col_loss = loss;
        if iterations % 25 == 0 || iterations == max_iter {
            let xa: Vec<f64> = x_sum.iter().map(|s| s / iterations as f64).collect();
            let ya: Vec<f64> = y_sum.iter().map(|s| s / iterations as f64).collect();
            let gap = check(&xa, &ya, &mut best_x, &mut best_y);
            if gap <= target_gap / 2.0 {
                break;
            }
        }
    }

    let (numerators, denominator) = rationalize(&best_x);
    let (value, _) = m.exact_worst(&numerators, denominator);
    let gap = (best_upper - value.to_f64()).max(0.0);
    let eq = Equilibrium {
        numerators,
        denominator,
        value,
        upper: best_upper,
        gap,
        column_weights: best_y,
        iterations,
    };
    if eq.gap > target_gap {
        return Err(GameError::IterationLimit(Box::new(eq)));
    }
    Ok(eq)
}

/// Exact worst-case pass probability of `lottery` over all histories.
pub fn manipulation_certificate(
    test: &Test,
    lottery: &TheoryLottery,
    horizon: usize,
) -> Result<Prob, GameError> {
    Ok(worst_column(test, lottery, horizon)?.0)
}

/// The worst history for `lottery` and its pass probability.
pub fn worst_column(
    test: &Test,
    lottery: &TheoryLottery,
    horizon: usize,
) -> Result<(Prob, History), GameError> {
    check_budget(lottery.len(), horizon, DEFAULT_CELL_BUDGET)?;
    let mode = lottery.mode();
    let prepared: Vec<_> = lottery
        .support()
        .iter()
        .map(|(p, w)| (test.prepare(p), w))
        .collect();
    let mut best: Option<(Prob, History)> = None;
    for s in History::all_of_length(horizon) {
        let pass = Prob::sum(
            prepared
                .iter()
                .filter(|(t, _)| !t.verdict(&s).is_reject())
                .map(|(_, w)| *w),
            mode,
        );
        if best.as_ref().is_none_or(|(b, _)| pass.le(b) && pass != *b) {
            best = Some((pass, s));
        }
    }
    Ok(best.expect("at least one history"))
}

/// Exact acceptance of a grid strategy by an average-matching test on `s`,
/// in integer arithmetic.
pub fn tree_passes(tree: &TreeStrategy, test: &AvgMatch, s: &History) -> bool {
    let (p, q) = tol_parts(test);
    let g = i128::from(tree.grid);
    let mut forecast_units = 0i128;
    let mut ones = 0i128;
    let mut node = 1usize;
    // after a zero-probability outcome the theory forecasts 0 for good
    let mut null = false;
    for (idx, &b) in s.bits().iter().enumerate() {
        let level = if null {
            0
        } else if idx < tree.horizon {
            i128::from(tree.nodes[node])
        } else {
            // beyond the horizon the strategy forecasts 1/2
            return tree_passes_slow(tree, test, s);
        };
        null = null || is_null_step(level, g, b);
        forecast_units += level;
        ones += i128::from(b);
        node = 2 * node + usize::from(b);
        let n = idx as i128 + 1;
        if idx + 1 >= test.n_min && violates(forecast_units, ones, n, g, p, q) {
            return false;
        }
    }
    true
}

fn tree_passes_slow(tree: &TreeStrategy, test: &AvgMatch, s: &History) -> bool {
    let theory = Theory::tree(tree.clone(), Arith::Exact).expect("valid strategy");
    !test.verdict(&theory, s).is_reject()
}

fn tol_parts(test: &AvgMatch) -> (i128, i128) {
    let p = test.tol.numer().to_i128().expect("tolerance numerator fits");
    let q = test.tol.denom().to_i128().expect("tolerance denominator fits");
    (p, q)
}

/// `|F/g − S| > (p/q) n`, i.e. `|F − gS| q > p g n`.
fn violates(f: i128, ones: i128, n: i128, g: i128, p: i128, q: i128) -> bool {
    (f - g * ones).abs() * q > p * g * n
}

fn is_null_step(level: i128, g: i128, b: u8) -> bool {
    (level == g && b == 0) || (level == 0 && b == 1)
}

/// Best behavioral grid strategy against a distribution over length-`horizon`
/// histories, found by dynamic programming over (node, forecast units, null).
/// A strategy that has seen a zero-probability outcome forecasts 0 afterwards.
pub fn best_response_tree(
    test: &AvgMatch,
    grid: u32,
    horizon: usize,
    column_mass: &[(History, f64)],
) -> (TreeStrategy, f64) {
    let (p, q) = tol_parts(test);
    let g = i128::from(grid);
    let nodes = 1usize << horizon;
    // subtree mass per heap node
    let mut mass = alloc::vec![0.0f64; 2 * nodes];
    for (s, w) in column_mass {
        mass[node_index(s)] += w;
    }
    for v in (1..nodes).rev() {
        mass[v] = mass[2 * v] + mass[2 * v + 1];
    }
    let max_units = grid as usize * horizon;
    let width = max_units + 1;
    // value[v * width + F] for nodes at every depth, filled bottom-up;
    // dead[..] is the same after a null step
    let mut value = alloc::vec![0.0f64; 2 * nodes * width];
    let mut dead = alloc::vec![0.0f64; 2 * nodes * width];
    let mut choice = alloc::vec![0u32; nodes * width];
    for v in nodes..2 * nodes {
        for f in 0..width {
            value[v * width + f] = mass[v];
            dead[v * width + f] = mass[v];
        }
    }
    for depth in (0..horizon).rev() {
        let n = depth as i128 + 1;
        for v in (1usize << depth)..(1usize << (depth + 1)) {
            let ones_here = (v - (1usize << depth)).count_ones() as i128;
            if mass[v] == 0.0 {
                continue;
            }
            let checked = depth + 1 >= test.n_min;
            for f in 0..=(grid as usize * depth) {
                let mut dead_total = 0.0;
                for b in 0..2usize {
                    let child = 2 * v + b;
                    if !(checked && violates(f as i128, ones_here + b as i128, n, g, p, q)) {
                        dead_total += dead[child * width + f];
                    }
                }
                dead[v * width + f] = dead_total;
                let mut best = (-1.0, 0u32);
                for level in 0..=grid {
                    let f2 = f + level as usize;
                    let mut total = 0.0;
                    for b in 0..2usize {
                        let child = 2 * v + b;
                        let ones = ones_here + b as i128;
                        if checked && violates(f2 as i128, ones, n, g, p, q) {
                            continue;
                        }
                        total += if is_null_step(i128::from(level), g, b as u8) {
                            dead[child * width + f2]
                        } else {
                            value[child * width + f2]
                        };
                    }
                    if total > best.0 + 1e-15 {
                        best = (total, level);
                    }
                }
                value[v * width + f] = best.0;
                choice[v * width + f] = best.1;
            }
        }
    }
    // read off the strategy along every node, tracking forecast units; nodes
    // below a null step are never consulted and keep level 0
    let mut levels = alloc::vec![0u32; nodes];
    let mut units = alloc::vec![0usize; nodes];
    let mut live = alloc::vec![false; nodes];
    live[1] = true;
    for v in 1..nodes {
        if !live[v] {
            continue;
        }
        let f = units[v];
        let level = choice[v * width + f];
        levels[v] = level;
        if 2 * v < nodes {
            for b in 0..2usize {
                units[2 * v + b] = f + level as usize;
                live[2 * v + b] = !is_null_step(i128::from(level), g, b as u8);
            }
        }
    }
    (
        TreeStrategy {
            grid,
            horizon,
            nodes: levels,
        },
        value[width],
    )
}

/// Largest worst-case pass indicator of any single grid strategy (0 or 1).
pub fn best_pure_worst_case(test: &AvgMatch, grid: u32, horizon: usize) -> u8 {
    let (p, q) = tol_parts(test);
    let g = i128::from(grid);
    // the adversary's choice only depends on (depth, F, ones, null)
    let max_units = grid as usize * horizon;
    let table = || alloc::vec![alloc::vec![alloc::vec![true; horizon + 1]; max_units + 1]; horizon + 1];
    // win[depth][f][ones]: the expert can survive from here
    let mut win = table();
    let mut dead = table();
    for depth in (0..horizon).rev() {
        let n = depth as i128 + 1;
        let checked = depth + 1 >= test.n_min;
        for f in 0..=(grid as usize * depth) {
            for ones in 0..=depth {
                dead[depth][f][ones] = (0..2).all(|b| {
                    let o2 = ones + b;
                    !(checked && violates(f as i128, o2 as i128, n, g, p, q)) && dead[depth + 1][f][o2]
                });
                win[depth][f][ones] = (0..=grid).any(|level| {
                    let f2 = f + level as usize;
                    (0..2).all(|b| {
                        let o2 = ones + b;
                        let bad = checked && violates(f2 as i128, o2 as i128, n, g, p, q);
                        let next = if is_null_step(i128::from(level), g, b as u8) {
                            dead[depth + 1][f2][o2]
                        } else {
                            win[depth + 1][f2][o2]
                        };
                        !bad && next
                    })
                });
            }
        }
    }
    u8::from(win[0][0][0])
}

/// Result of [`double_oracle`].
#[derive(Clone, Debug)]
pub struct DoubleOracle {
    pub menu: Vec<TreeStrategy>,
    pub equilibrium: Equilibrium,
    /// Exact worst case of the lottery over all histories.
    pub lower: Prob,
    /// Best-response value against the column mixture: no grid lottery can
    /// guarantee more.
    pub upper: f64,
    pub gap: f64,
    pub rounds: usize,
    /// Best worst case of any single menu strategy.
    pub best_single: Prob,
}

impl DoubleOracle {
    pub fn theories(&self) -> Vec<Theory> {
        self.menu
            .iter()
            .map(|t| Theory::tree(t.clone(), Arith::Exact).expect("valid strategy"))
            .collect()
    }

    pub fn lottery(&self) -> Result<TheoryLottery, GameError> {
        self.equilibrium.lottery(&self.theories())
    }
}

fn tree_matrix(test: &AvgMatch, menu: &[TreeStrategy], columns: &[History]) -> GameMatrix {
    let rows: Vec<Vec<u8>> = menu
        .iter()
        .map(|t| columns.iter().map(|s| u8::from(tree_passes(t, test, s))).collect())
        .collect();
    GameMatrix::from_rows(&rows).expect("nonempty menu")
}

/// Alternates exhaustive worst-path and exact best-response oracles around
/// a restricted game until the certified gap meets `target_gap`.
pub fn double_oracle(
    test: &AvgMatch,
    grid: u32,
    horizon: usize,
    target_gap: f64,
    max_rounds: usize,
) -> Result<DoubleOracle, GameError> {
    check_budget(1, horizon, DEFAULT_CELL_BUDGET)?;
    let all = all_columns(horizon);
    let mut menu: Vec<TreeStrategy> = (0..=grid)
        .map(|l| TreeStrategy::constant(grid, horizon, l))
        .collect();
    let mut cols: Vec<usize> = alloc::vec![0, all.len() - 1];
    let mut upper = f64::INFINITY;
    let mut best: Option<(Equilibrium, Prob, Vec<TreeStrategy>)> = None;
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let columns: Vec<History> = cols.iter().map(|&c| all[c].clone()).collect();
        let restricted = tree_matrix(test, &menu, &columns);
        let eq = match solve_zero_sum(&restricted, target_gap / 4.0) {
            Ok(eq) => eq,
            Err(GameError::IterationLimit(eq)) => *eq,
            Err(e) => return Err(e),
        };
        // column oracle: exact worst case over every history
        let full = tree_matrix(test, &menu, &all);
        let (lower, worst) = full.exact_worst(&eq.numerators, eq.denominator);
        // row oracle: best response to the restricted column mixture
        let mixture: Vec<(History, f64)> = columns
            .iter()
            .cloned()
            .zip(eq.column_weights.iter().cloned())
            .collect();
        let (tree, br) = best_response_tree(test, grid, horizon, &mixture);
        upper = upper.min(br);
        let improved = best.as_ref().is_none_or(|(_, b, _)| lower.gt(b));
        if improved {
            best = Some((eq, lower.clone(), menu.clone()));
        }
        let (_, best_lower, _) = best.as_ref().expect("set above");
        if upper - best_lower.to_f64() <= target_gap {
            break;
        }
        let mut grew = false;
        if !cols.contains(&worst) {
            cols.push(worst);
            grew = true;
        }
        if !menu.contains(&tree) {
            menu.push(tree);
            grew = true;
        }
        if !grew {
            break;
        }
    }
    let (equilibrium, lower, menu) = best.expect("at least one round");
    let full = tree_matrix(test, &menu, &all);
    let best_single = (0..menu.len())
        .map(|r| full.row(r).iter().copied().min().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let gap = (upper - lower.to_f64()).max(0.0);
    Ok(DoubleOracle {
        menu,
        equilibrium,
        lower,
        upper,
        gap,
        rounds,
        best_single: Prob::from_ratio(u64::from(best_single), 1, Arith::Exact),
    })
}

/// Every grid strategy over `horizon` periods, for tiny cases.
pub fn all_trees(grid: u32, horizon: usize, limit: usize) -> Option<Vec<TreeStrategy>> {
    let slots = (1usize << horizon) - 1;
    let count = (grid as u128 + 1).checked_pow(slots as u32)?;
    if count > limit as u128 {
        return None;
    }
    let mut out = Vec::with_capacity(count as usize);
    for mut code in 0..count {
        let mut nodes = alloc::vec![0u32; slots + 1];
        for slot in nodes.iter_mut().skip(1) {
            *slot = (code % (grid as u128 + 1)) as u32;
            code /= grid as u128 + 1;
        }
        out.push(TreeStrategy { grid, horizon, nodes });
    }
    Some(out)
}

/// `Σ_r w_r A[r][c]` as an exact rational, for oracle checks.
pub fn exact_payoff(m: &GameMatrix, weights: &[BigRational], c: usize) -> BigRational {
    (0..m.rows())
        .filter(|&r| m.get(r, c) == 1)
        .fold(BigRational::zero(), |acc, r| acc + &weights[r])
}

/// Rational from a float weight at the solver's resolution.
pub fn weight_rational(w: f64) -> BigRational {
    BigRational::new(
        BigInt::from(libm::round(w * WEIGHT_SCALE) as i64),
        BigInt::from(WEIGHT_SCALE as i64),
    )
}
