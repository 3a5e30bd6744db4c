//! A randomized online forecaster that stays calibrated against any outcome
//! sequence, by minimizing internal regret over grid forecasts.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Each grid forecast `a/g` runs its own Hedge learner; every round the
/// forecast is drawn from the stationary distribution of the learners'
/// recommendations, and learner `a` is charged the squared losses scaled by
/// the probability of `a`.
pub struct CalibratedForecaster {
    grid: u32,
    /// `losses[a][b]`: scaled cumulative loss of action `b` for learner `a`.
    losses: Vec<Vec<f64>>,
    /// Total probability each learner has been charged with.
    exposure: Vec<f64>,
    current: Vec<f64>,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
    ones: Vec<u64>,
    rounds: u64,
}

impl CalibratedForecaster {
    pub fn new(grid: u32, seed: u64) -> Self {
        assert!(grid >= 2, "need at least three grid forecasts");
        let n = grid as usize + 1;
        let mut f = Self {
            grid,
            losses: alloc::vec![alloc::vec![0.0; n]; n],
            exposure: alloc::vec![0.0; n],
            current: alloc::vec![1.0 / n as f64; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: alloc::vec![0; n],
            ones: alloc::vec![0; n],
            rounds: 0,
        };
        f.refresh();
        f
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    /// Distribution over grid levels for the coming round.
    pub fn distribution(&self) -> &[f64] {
        &self.current
    }

    pub fn mean_forecast(&self) -> f64 {
        self.current
            .iter()
            .enumerate()
            .map(|(a, p)| p * a as f64 / f64::from(self.grid))
            .sum()
    }

    /// Draws this round's grid level.
    pub fn draw(&mut self) -> u32 {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (a, p) in self.current.iter().enumerate() {
            acc += p;
            if u < acc {
                return a as u32;
            }
        }
        self.grid
    }

    /// Records the drawn level and the outcome, then updates the learners.
    pub fn observe(&mut self, level: u32, outcome: u8) {
        let y = f64::from(outcome.min(1));
        let g = f64::from(self.grid);
        self.counts[level as usize] += 1;
        self.ones[level as usize] += u64::from(outcome.min(1));
        self.rounds += 1;
        for a in 0..self.current.len() {
            let scale = self.current[a];
            self.exposure[a] += scale;
            for b in 0..self.current.len() {
                let d = b as f64 / g - y;
                self.losses[a][b] += scale * d * d;
            }
        }
        self.refresh();
    }

    fn hedge(&self, a: usize) -> Vec<f64> {
        let n = self.current.len() as f64;
        let eta = libm::sqrt(8.0 * libm::log(n) / self.exposure[a].max(1.0));
        let row = &self.losses[a];
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = row.iter().map(|l| libm::exp(-eta * (l - min))).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    fn refresh(&mut self) {
        let n = self.current.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|a| self.hedge(a)).collect();
        self.current = stationary(&rows);
    }

    /// `Σ_b (n_b / n) |ȳ_b − b/g|` over the levels drawn so far.
    pub fn calibration_error(&self) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let g = f64::from(self.grid);
        self.counts
            .iter()
            .zip(&self.ones)
            .enumerate()
            .filter(|(_, (&c, _))| c > 0)
            .map(|(b, (&c, &o))| {
                let freq = o as f64 / c as f64;
                (c as f64 / self.rounds as f64) * (freq - b as f64 / g).abs()
            })
            .sum()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }
}

/// Stationary distribution `p = pQ` of a row-stochastic matrix with positive
/// entries, by Gaussian elimination.
pub fn stationary(q: &[Vec<f64>]) -> Vec<f64> {
    let n = q.len();
    // (Q^T − I) p = 0 with the last equation replaced by Σ p = 1
    let mut a = alloc::vec![alloc::vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = q[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty");
        a.swap(col, pivot);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for k in col..=n {
            a[col][k] /= d;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    for k in col..=n {
                        a[r][k] -= factor * a[col][k];
                    }
                }
            }
        }
    }
    let mut p: Vec<f64> = (0..n).map(|i| a[i][n].max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    } else {
        p = alloc::vec![1.0 / n as f64; n];
    }
    p
}

/// Outcome generators used to exercise the forecaster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adversary {
    AllOnes,
    AllZeros,
    Alternating,
    /// Outcome 1 iff the forecaster's mean forecast is below 1/2.
    Flip,
    /// Fair coin flips.
    Coin,
}

impl Adversary {
    pub const ALL: [Adversary; 5] = [
        Adversary::AllOnes,
        Adversary::AllZeros,
        Adversary::Alternating,
        Adversary::Flip,
        Adversary::Coin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Adversary::AllOnes => "all-ones",
            Adversary::AllZeros => "all-zeros",
            Adversary::Alternating => "alternating",
            Adversary::Flip => "flip",
            Adversary::Coin => "coin",
        }
    }
}

/// Plays `rounds` rounds and returns the final weighted calibration error.
pub fn run_against(adversary: Adversary, grid: u32, rounds: u64, seed: u64) -> f64 {
    let mut f = CalibratedForecaster::new(grid, seed);
    let mut coin = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for t in 0..rounds {
        let mean = f.mean_forecast();
        let outcome = match adversary {
            Adversary::AllOnes => 1,
            Adversary::AllZeros => 0,
            Adversary::Alternating => (t % 2) as u8,
            Adversary::Flip => u8::from(mean < 0.5),
            Adversary::Coin => u8::from(coin.random::<bool>()),
        };
        let level = f.draw();
        f.observe(level, outcome);
    }
    f.calibration_error()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_solves_two_state_chain() {
        let q = alloc::vec![alloc::vec![0.9, 0.1], alloc::vec![0.2, 0.8]];
        let p = stationary(&q);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_on_constant_sequences() {
        assert!(run_against(Adversary::AllOnes, 10, 10_000, 1) <= 0.05);
        assert!(run_against(Adversary::Coin, 10, 10_000, 2) <= 0.05);
    }
}
