//! Experiment drivers. Each returns a [`Report`]; replications run in
//! parallel with seeds derived from `(seed, stream, index)`, so results do
//! not depend on the worker count.

use std::time::Instant;

use catest_core::calibrate::{run_against, Adversary};
use catest_core::category::{gct_verdict, type1_bound, GctParams};
use catest_core::forecast_test::{is_prequential_witness, Test};
use catest_core::game::{
    best_pure_worst_case, build_game, double_oracle, manipulation_certificate, solve_zero_sum, tree_passes,
    GameError,
};
use catest_core::reveal::{prop3_draw, random_theta, revelation_path, verify_failure, RevealError};
use catest_core::theory::node_index;
use catest_core::{Arith, History, Prob, Theory, TheoryError, TheoryLottery, TreeStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{
    AuditSection, ConfigError, ContractSection, ManipulateSection, Prop3Section, RevealSection, Type1Section,
};
use crate::contract::sweep;
use crate::report::{Kind, Report, Schema};
use crate::syntax::{parse_lottery, parse_rational, parse_test, parse_theory, render_float, render_lottery, render_prob};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Reveal(#[from] RevealError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{0}")]
    Unsupported(String),
}

/// Settings shared by every experiment.
#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub seed: u64,
    pub mode: Arith,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of replication `index` in stream `stream`.
pub fn replication_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

fn field<T>(section: &'static str, name: &'static str, r: Result<T, crate::syntax::SyntaxError>) -> Result<T, ConfigError> {
    r.map_err(ConfigError::field(section, name))
}

fn prob_f64(x: f64, mode: Arith) -> Prob {
    Prob::from_f64(x.clamp(0.0, f64::MAX), mode).expect("finite")
}

/// Monte Carlo rejection rate of each theory under itself.
pub fn type1(cfg: &Type1Section, opts: &Options) -> Result<Report, ExperimentError> {
    let test = field("type1", "test", parse_test(&cfg.test, opts.mode))?;
    if cfg.replications == 0 {
        return Err(ConfigError::Value {
            section: "type1",
            field: "replications",
            message: "must be at least 1".into(),
        }
        .into());
    }
    let mut report = Report::new(
        "type1",
        Schema::new(&[
            ("theory", Kind::Text),
            ("test", Kind::Text),
            ("horizon", Kind::Int),
            ("replications", Kind::Int),
            ("rejections", Kind::Int),
            ("rate", Kind::Float),
            ("bound", Kind::Prob),
            ("sigma", Kind::Float),
            ("held", Kind::Bool),
        ]),
    );
    for (stream, spec) in cfg.theories.iter().enumerate() {
        let theory = field("type1", "theories", parse_theory(spec, opts.mode))?;
        let started = Instant::now();
        let prepared = test.prepare(&theory);
        let rejections = (0..cfg.replications as u64)
            .into_par_iter()
            .filter(|&r| {
                let h = theory.sample_path(replication_seed(opts.seed, stream as u64, r), cfg.horizon);
                prepared.verdict(&h).is_reject()
            })
            .count();
        let n = cfg.replications as f64;
        let rate = rejections as f64 / n;
        let bound = match &test {
            Test::Gct(params) => Some(type1_bound(&theory, params)),
            other => other
                .declared_epsilon(&theory, cfg.horizon)
                .map(|e| prob_f64(e, opts.mode)),
        };
        let (sigma, held) = match &bound {
            Some(b) => {
                let r = b.to_f64().min(1.0);
                let sigma = (r * (1.0 - r) / n).sqrt();
                (Some(sigma), rate <= r + 3.0 * sigma)
            }
            None => (None, true),
        };
        report.held &= held;
        report.note(format!(
            "{}: {rejections}/{} rejected, rate {} vs bound {} (+3 sigma {}), {:.2}s",
            theory.label(),
            cfg.replications,
            render_float(rate),
            bound.as_ref().map_or("none".into(), render_prob),
            sigma.map_or("-".into(), |s| render_float(3.0 * s)),
            started.elapsed().as_secs_f64()
        ));
        report.row(vec![
            theory.label().into(),
            test.to_string().into(),
            cfg.horizon.into(),
            cfg.replications.into(),
            rejections.into(),
            rate.into(),
            bound.into(),
            sigma.into(),
            held.into(),
        ]);
    }
    Ok(report)
}

/// Result of the manipulation experiment, beyond its report.
#[derive(Clone, Debug)]
pub struct Manipulation {
    pub report: Report,
    pub lottery: TheoryLottery,
    /// Exact worst-case pass probability of the lottery.
    pub certified: Prob,
    pub upper: f64,
    pub gap: f64,
    /// Best worst case of any single menu theory.
    pub best_single: Prob,
    /// Best worst case of any single grid strategy, when known.
    pub best_pure: Option<u8>,
    pub seconds: f64,
}

/// Solves the tester-versus-expert game for a manipulating lottery.
pub fn manipulate(cfg: &ManipulateSection) -> Result<Manipulation, ExperimentError> {
    let test = field("manipulate", "test", parse_test(&cfg.test, Arith::Exact))?;
    let started = Instant::now();
    let mut report = Report::new(
        "manipulate",
        Schema::new(&[
            ("theory", Kind::Text),
            ("weight", Kind::Prob),
            ("worst_case_pass", Kind::Prob),
        ]),
    );
    let (lottery, certified, upper, gap, singles, best_pure) = match cfg.strategy.as_str() {
        "double-oracle" => {
            let Test::AvgMatch(avg) = &test else {
                return Err(ExperimentError::Unsupported(format!(
                    "double-oracle needs an avgmatch test, got {test}"
                )));
            };
            let r = double_oracle(avg, cfg.g, cfg.horizon, cfg.gap, cfg.max_rounds)?;
            let columns: Vec<History> = History::all_of_length(cfg.horizon).collect();
            for (i, t) in r.menu.iter().enumerate() {
                if r.equilibrium.numerators[i] == 0 {
                    continue;
                }
                let passes = columns.iter().all(|s| tree_passes(t, avg, s));
                report.row(vec![
                    Theory::tree(t.clone(), Arith::Exact)?.label().into(),
                    r.equilibrium.weight(i).into(),
                    Prob::from_ratio(u64::from(passes), 1, Arith::Exact).into(),
                ]);
            }
            let lottery = r.lottery()?;
            let best_single = r.best_single.clone();
            let best_pure = best_pure_worst_case(avg, cfg.g, cfg.horizon);
            (lottery, r.lower, r.upper, r.gap, best_single, Some(best_pure))
        }
        "menu" => {
            let menu: Vec<Theory> = cfg
                .menu
                .iter()
                .map(|s| field("manipulate", "menu", parse_theory(s, Arith::Exact)))
                .collect::<Result<_, _>>()?;
            let m = build_game(&test, &menu, cfg.horizon)?;
            let eq = match solve_zero_sum(&m, cfg.gap) {
                Ok(eq) => eq,
                Err(GameError::IterationLimit(eq)) => *eq,
                Err(e) => return Err(e.into()),
            };
            let mut best_single = Prob::zero(Arith::Exact);
            for (i, theory) in menu.iter().enumerate() {
                let worst = u64::from(m.row(i).iter().copied().min().unwrap_or(0));
                let worst = Prob::from_ratio(worst, 1, Arith::Exact);
                if worst.gt(&best_single) {
                    best_single = worst.clone();
                }
                if eq.numerators[i] > 0 {
                    report.row(vec![theory.label().into(), eq.weight(i).into(), worst.into()]);
                }
            }
            (eq.lottery(&menu)?, eq.value.clone(), eq.upper, eq.gap, best_single, None)
        }
        other => {
            return Err(ConfigError::Value {
                section: "manipulate",
                field: "strategy",
                message: format!("unknown strategy `{other}`"),
            }
            .into())
        }
    };
    // re-evaluate the lottery with the theory-level test
    let recomputed = manipulation_certificate(&test, &lottery, cfg.horizon)?;
    let seconds = started.elapsed().as_secs_f64();
    report.held = gap <= cfg.gap && recomputed == certified;
    report.note(format!("test: {test}, horizon {}, grid {}", cfg.horizon, cfg.g));
    report.note(format!(
        "certified worst-case pass {} ({}), upper bound {}, gap {}",
        render_prob(&certified),
        render_float(certified.to_f64()),
        render_float(upper),
        render_float(gap)
    ));
    report.note(format!("re-evaluated certificate {}", render_prob(&recomputed)));
    report.note(format!("best single menu theory {}", render_prob(&singles)));
    if let Some(b) = best_pure {
        report.note(format!("best single grid strategy {b}"));
    }
    if let Some(e) = test.declared_epsilon(&Theory::counting(Arith::Exact), cfg.horizon) {
        report.note(format!("declared epsilon {}", render_float(e)));
    }
    report.note(format!("support {} theories, {:.2}s", lottery.len(), seconds));
    report.note(format!("lottery: {}", render_lottery(&lottery)));
    Ok(Manipulation {
        report,
        lottery,
        certified,
        upper,
        gap,
        best_single: singles,
        best_pure,
        seconds,
    })
}

/// Weighted calibration error of the randomized forecaster against each
/// adversary and seed.
pub fn calibration(cfg: &ManipulateSection, opts: &Options, target: f64) -> Report {
    let mut report = Report::new(
        "calibration",
        Schema::new(&[
            ("adversary", Kind::Text),
            ("seed", Kind::Int),
            ("grid", Kind::Int),
            ("rounds", Kind::Int),
            ("error", Kind::Float),
            ("held", Kind::Bool),
        ]),
    );
    let jobs: Vec<(usize, Adversary, u64)> = Adversary::ALL
        .iter()
        .enumerate()
        .flat_map(|(a, &adv)| (0..cfg.calibration_seeds).map(move |s| (a, adv, s)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(a, adv, s)| {
            run_against(
                adv,
                cfg.calibration_grid,
                cfg.calibration_rounds,
                replication_seed(opts.seed, a as u64, s),
            )
        })
        .collect();
    let mut worst: f64 = 0.0;
    for ((_, adv, s), err) in jobs.iter().zip(&errors) {
        let ok = *err <= target;
        report.held &= ok;
        worst = worst.max(*err);
        report.row(vec![
            adv.name().into(),
            (*s).into(),
            (cfg.calibration_grid as usize).into(),
            cfg.calibration_rounds.into(),
            (*err).into(),
            ok.into(),
        ]);
    }
    report.note(format!(
        "grid {}, {} rounds, worst error {} against target {}",
        cfg.calibration_grid,
        cfg.calibration_rounds,
        render_float(worst),
        render_float(target)
    ));
    report
}

/// A nonatomic built-in theory with parameters on a 1/20 grid inside [0.2, 0.8].
pub fn random_nonatomic_theory<R: Rng>(rng: &mut R, mode: Arith) -> Theory {
    let level = |rng: &mut R| Prob::from_ratio(rng.random_range(4..=16), 20, mode);
    match rng.random_range(0..4) {
        0 => Theory::bernoulli(level(rng)).expect("interior"),
        1 => {
            let (p01, p11) = (level(rng), level(rng));
            Theory::markov(p01.complement(), p01, p11.complement(), p11).expect("rows sum to one")
        }
        2 => Theory::counting(mode),
        _ => {
            let w = Prob::from_ratio(rng.random_range(1..=9), 10, mode);
            Theory::mixture(vec![
                (w.complement(), Theory::bernoulli(level(rng)).expect("interior")),
                (w, Theory::bernoulli(level(rng)).expect("interior")),
            ])
            .expect("weights sum to one")
        }
    }
}

/// Up to `max_support` random nonatomic theories with random weights.
pub fn random_lottery(seed: u64, max_support: usize, mode: Arith) -> TheoryLottery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_support.max(1));
    let weights: Vec<u64> = (0..n).map(|_| rng.random_range(1..=10)).collect();
    let total: u64 = weights.iter().sum();
    let support = weights
        .iter()
        .map(|&w| (random_nonatomic_theory(&mut rng, mode), Prob::from_ratio(w, total, mode)))
        .collect();
    TheoryLottery::new(support).expect("weights sum to one")
}

fn lotteries(cfg: &RevealSection, opts: &Options) -> Result<Vec<TheoryLottery>, ConfigError> {
    if cfg.zeta.is_empty() {
        Ok((0..cfg.random)
            .map(|i| random_lottery(replication_seed(opts.seed, 0, i as u64), cfg.max_support, opts.mode))
            .collect())
    } else {
        cfg.zeta
            .iter()
            .map(|s| field("reveal", "zeta", parse_lottery(s, opts.mode)))
            .collect()
    }
}

fn gct_params(cfg: &RevealSection) -> Result<GctParams, ConfigError> {
    GctParams::new(cfg.layers, cfg.paths, cfg.depth).map_err(|e| ConfigError::Value {
        section: "reveal",
        field: "K",
        message: e.to_string(),
    })
}

/// One lottery's revelation run.
#[derive(Clone, Debug)]
pub struct RevealRun {
    pub history: History,
    pub failure: Prob,
    pub verified: Prob,
    pub skipped: bool,
    pub seconds: f64,
}

/// `Σ_{k<=K} (k + I)`.
pub fn revelation_length_bound(layers: usize, paths: usize) -> usize {
    (1..=layers).map(|k| k + paths).sum()
}

/// Exact: both equal one. Float: within rounding of one.
fn full_failure(verified: &Prob, failure: &Prob) -> bool {
    match verified.mode() {
        Arith::Exact => verified.is_one() && verified == failure,
        Arith::Approx => (verified.to_f64() - 1.0).abs() <= 1e-9 && (failure.to_f64() - 1.0).abs() <= 1e-9,
    }
}

/// Builds a revelation history for each lottery and re-verifies it.
pub fn reveal(cfg: &RevealSection, opts: &Options) -> Result<(Report, Vec<RevealRun>), ExperimentError> {
    let params = gct_params(cfg)?;
    let lotteries = lotteries(cfg, opts)?;
    let bound = revelation_length_bound(cfg.layers, cfg.paths);
    let mut report = Report::new(
        "reveal",
        Schema::new(&[
            ("lottery", Kind::Int),
            ("theory", Kind::Text),
            ("rejection_period", Kind::Int),
            ("weight", Kind::Prob),
            ("cumulative_failure", Kind::Prob),
        ]),
    );
    let outcomes: Vec<_> = lotteries
        .par_iter()
        .map(|lottery| {
            let started = Instant::now();
            let result = revelation_path(lottery, &params)?;
            let verified = verify_failure(lottery, &result.history, &params);
            Ok::<_, RevealError>((result, verified, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, _>>()?;
    let mut runs = Vec::new();
    for (idx, (result, verified, seconds)) in outcomes.into_iter().enumerate() {
        let mut cumulative = Prob::zero(lotteries[idx].mode());
        for o in &result.outcomes {
            if o.rejection.is_some() {
                cumulative = &cumulative + &o.weight;
            }
            report.row(vec![
                idx.into(),
                o.label.clone().into(),
                o.rejection.into(),
                (&o.weight).into(),
                (&cumulative).into(),
            ]);
        }
        let ok = full_failure(&verified, &result.failure) && result.history.len() <= bound && !result.has_skips();
        report.held &= ok;
        report.note(format!(
            "lottery {idx}: {} theories, history {} (length {} <= {bound}), failure {}, verified {}, {} truncated layers, {:.3}s",
            lotteries[idx].len(),
            result.history,
            result.history.len(),
            render_prob(&result.failure),
            render_prob(&verified),
            result.outcomes.iter().map(|o| o.skipped_layers.len()).sum::<usize>(),
            seconds
        ));
        runs.push(RevealRun {
            skipped: result.has_skips(),
            history: result.history,
            failure: result.failure,
            verified,
            seconds,
        });
    }
    Ok((report, runs))
}

/// Revelation along `S_θ` for random θ, with the likelihood test against
/// `Q^{S_θ}` and the ratio bounds at every layer event.
pub fn prop3(reveal_cfg: &RevealSection, cfg: &Prop3Section, opts: &Options) -> Result<Report, ExperimentError> {
    let params = gct_params(reveal_cfg)?;
    let c = field("prop3", "c", parse_rational(&cfg.c))?;
    let lotteries = lotteries(reveal_cfg, opts)?;
    let mut report = Report::new(
        "prop3",
        Schema::new(&[
            ("lottery", Kind::Int),
            ("theta", Kind::Text),
            ("history_length", Kind::Int),
            ("category_failure", Kind::Prob),
            ("all_rejected", Kind::Bool),
            ("events", Kind::Int),
            ("violations", Kind::Int),
        ]),
    );
    if let Some((p, _)) = lotteries
        .iter()
        .flat_map(|l| l.support())
        .find(|(p, _)| !p.is_nonatomic())
    {
        return Err(RevealError::Atomic(p.label().into()).into());
    }
    let jobs: Vec<(usize, usize)> = (0..lotteries.len())
        .flat_map(|l| (0..cfg.thetas).map(move |j| (l, j)))
        .collect();
    let draws = jobs
        .par_iter()
        .map(|&(l, j)| {
            let theta = random_theta(replication_seed(opts.seed, 1 + l as u64, j as u64), params.depth);
            prop3_draw(&lotteries[l], theta, &params, cfg.cap, c.clone())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mut full, mut events, mut violations) = (0, 0, 0);
    for (&(l, _), d) in jobs.iter().zip(&draws) {
        full += usize::from(d.all_rejected);
        events += d.events;
        violations += d.violations;
        report.row(vec![
            l.into(),
            d.theta.to_string().into(),
            d.history.len().into(),
            (&d.category_failure).into(),
            d.all_rejected.into(),
            d.events.into(),
            d.violations.into(),
        ]);
    }
    report.held = violations == 0 && full == draws.len();
    report.note(format!(
        "{} lotteries x {} theta draws, c = {}, N = {}",
        lotteries.len(),
        cfg.thetas,
        cfg.c,
        cfg.cap
    ));
    report.note(format!(
        "full rejection in {full}/{} draws (fraction {}), {violations} ratio-bound violations in {events} layer events",
        draws.len(),
        render_float(full as f64 / draws.len().max(1) as f64)
    ));
    Ok(report)
}

/// Screening-contract payoffs over a parameter grid.
pub fn contract(cfg: &ContractSection) -> Result<Report, ExperimentError> {
    let list = |name: &'static str, v: &[String]| -> Result<Vec<_>, ConfigError> {
        v.iter().map(|s| field("contract", name, parse_rational(s))).collect()
    };
    let points = sweep(&list("u", &cfg.u)?, &list("d", &cfg.d)?, &list("eps", &cfg.eps)?);
    let mut report = Report::new(
        "contract",
        Schema::new(&[
            ("u", Kind::Float),
            ("d", Kind::Float),
            ("eps", Kind::Float),
            ("screens", Kind::Bool),
            ("payoff_at_eps", Kind::Float),
            ("payoff_at_one_minus_eps", Kind::Float),
            ("sign_pattern", Kind::Bool),
        ]),
    );
    let f = |r: &num_rational::BigRational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
    let mut screening = 0;
    for p in &points {
        if p.screens {
            screening += 1;
            report.held &= p.sign_pattern();
        }
        report.row(vec![
            f(&p.params.u).into(),
            f(&p.params.d).into(),
            f(&p.params.eps).into(),
            p.screens.into(),
            f(&p.at_eps).into(),
            f(&p.at_complement).into(),
            p.sign_pattern().into(),
        ]);
    }
    report.note(format!(
        "{} parameter points, {screening} satisfy the screening conditions",
        points.len()
    ));
    Ok(report)
}

fn random_tree<R: Rng>(rng: &mut R, grid: u32, horizon: usize) -> TreeStrategy {
    let mut nodes = vec![0; 1 << horizon];
    for v in nodes.iter_mut().skip(1) {
        *v = rng.random_range(0..=grid);
    }
    TreeStrategy { grid, horizon, nodes }
}

/// Two theories with identical forecasts along a history but different
/// forecasts elsewhere: a grid strategy rewired off the path, or a theory
/// and its atomic splice.
pub fn forecast_equivalent_probe<R: Rng>(rng: &mut R, horizon: usize, mode: Arith) -> (Theory, Theory, History) {
    let len = rng.random_range(1..=horizon);
    let h = History::from_index(rng.random_range(0..1u64 << len), len);
    if rng.random::<bool>() {
        let tree = random_tree(rng, 4, horizon + 1);
        let on_path: Vec<usize> = (0..=h.len()).map(|t| node_index(&h.truncate(t))).collect();
        let mut other = tree.clone();
        for (v, level) in other.nodes.iter_mut().enumerate().skip(1) {
            if !on_path.contains(&v) {
                *level = rng.random_range(0..=tree.grid);
            }
        }
        let a = Theory::tree(tree, mode).expect("valid strategy");
        let b = Theory::tree(other, mode).expect("valid strategy");
        (a, b, h)
    } else {
        let a = random_nonatomic_theory(rng, mode);
        let b = a.atomic_splice(&h);
        (a, b, h)
    }
}

/// Forecast-equivalent probes of the prequential tests, and an exhaustive
/// search for a category-test witness.
pub fn audit(cfg: &AuditSection, opts: &Options) -> Result<Report, ExperimentError> {
    let mut report = Report::new(
        "audit",
        Schema::new(&[
            ("test", Kind::Text),
            ("declared_prequential", Kind::Bool),
            ("probes", Kind::Int),
            ("witnesses", Kind::Int),
            ("held", Kind::Bool),
        ]),
    );
    for (stream, spec) in cfg.tests.iter().enumerate() {
        let test = field("audit", "tests", parse_test(spec, opts.mode))?;
        let witnesses = (0..cfg.probes as u64)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(opts.seed, stream as u64, i));
                let (a, b, h) = forecast_equivalent_probe(&mut rng, cfg.horizon, opts.mode);
                is_prequential_witness(&test, &a, &b, &h)
            })
            .count();
        let ok = !test.is_prequential() || witnesses == 0;
        report.held &= ok;
        report.note(format!("{test}: {witnesses} witnesses in {} probes", cfg.probes));
        report.row(vec![
            test.to_string().into(),
            test.is_prequential().into(),
            cfg.probes.into(),
            witnesses.into(),
            ok.into(),
        ]);
    }
    let gct = field("audit", "gct", parse_test(&cfg.gct, opts.mode))?;
    let Test::Gct(params) = &gct else {
        return Err(ExperimentError::Unsupported(format!("audit.gct must be a gct test, got {gct}")));
    };
    let (searched, found, example) = gct_witness_search(params, cfg.horizon, opts.mode);
    report.held &= found > 0;
    report.note(format!("{gct}: {found} witnesses in {searched} (theory, history) pairs"));
    report.row(vec![
        gct.to_string().into(),
        gct.is_prequential().into(),
        searched.into(),
        found.into(),
        (found > 0).into(),
    ]);
    if let Some((theory, h)) = example {
        report.note(format!(
            "category-test witness: {theory} and its atomic splice on {h}: {} vs {}",
            gct_verdict(&theory, &h, params),
            gct_verdict(&theory.atomic_splice(&h), &h, params)
        ));
    }
    Ok(report)
}

fn witness_pool(mode: Arith) -> Vec<Theory> {
    let p = |n, d| Prob::from_ratio(n, d, mode);
    vec![
        Theory::bernoulli(p(1, 2)).expect("interior"),
        Theory::bernoulli(p(1, 4)).expect("interior"),
        Theory::bernoulli(p(3, 4)).expect("interior"),
        Theory::markov(p(3, 5), p(2, 5), p(3, 10), p(7, 10)).expect("rows sum to one"),
        Theory::counting(mode),
    ]
}

/// Every history up to `horizon` against every pool theory paired with its
/// atomic splice. Returns (pairs searched, witnesses, first witness).
pub fn gct_witness_search(
    params: &GctParams,
    horizon: usize,
    mode: Arith,
) -> (usize, usize, Option<(Theory, History)>) {
    let test = Test::Gct(params.clone());
    let pool = witness_pool(mode);
    let histories: Vec<History> = (0..=horizon).flat_map(History::all_of_length).collect();
    let hits: Vec<Option<(Theory, History)>> = histories
        .par_iter()
        .flat_map_iter(|h| {
            let test = &test;
            pool.iter().map(move |t| {
                let spliced = t.atomic_splice(h);
                is_prequential_witness(test, t, &spliced, h).then(|| (t.clone(), h.clone()))
            })
        })
        .collect();
    let searched = hits.len();
    let found = hits.iter().filter(|x| x.is_some()).count();
    (searched, found, hits.into_iter().flatten().next())
}
