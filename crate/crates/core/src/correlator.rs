//! The two-point correlator `S_l(theta) = sum_s |phi_s(0) phi_s(l)|`, its
//! average over the phase, and decay-rate estimators.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{build_hamiltonian, eigensystem, EigenSystem, ModelParams, Window};
use crate::resonance::{theta_sets, IntervalSet, MinSine};
use crate::sum::{sum, Neumaier};

/// `sum_s |phi_s(0)| |phi_s(l)|`.
pub fn correlator_at(es: &EigenSystem, ell: i64) -> Result<f64> {
    let w = es.window();
    let i0 = w.check(0)?;
    let il = w.check(ell)?;
    let mut acc = Neumaier::new();
    for s in 0..es.len() {
        let v = es.vector(s);
        acc.add((v[i0] * v[il]).abs());
    }
    let value = acc.value();
    debug_assert!((0.0..=1.0 + 1e-10).contains(&value), "correlator {value}");
    Ok(value)
}

/// [`correlator_at`] for every `l` in `ells`.
pub fn correlator_profile(es: &EigenSystem, ells: std::ops::RangeInclusive<i64>) -> Result<Vec<f64>> {
    ells.map(|l| correlator_at(es, l)).collect()
}

/// Margin so that the truncation error `e^{-L M}` is about `e^{-30}`.
pub fn default_margin(lyapunov: f64) -> u32 {
    if lyapunov <= 0.0 {
        return 80;
    }
    ((30.0 / lyapunov).ceil() as u32).clamp(16, 80)
}

/// Computes and memoizes correlator profiles on `[-M, l_max + M]`, one
/// eigensystem per phase.
#[derive(Debug)]
pub struct ProfileEvaluator {
    params: ModelParams,
    window: Window,
    ell_min: i64,
    ell_max: i64,
    cache: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl ProfileEvaluator {
    pub fn new(params: &ModelParams, ell_min: i64, ell_max: i64, margin: u32) -> Result<Self> {
        if ell_min > ell_max || ell_min < 0 {
            return Err(Error::invalid("ell", format!("bad range [{ell_min}, {ell_max}]")));
        }
        let m = margin as i64;
        Ok(Self {
            params: params.clone(),
            window: Window::new(-m, ell_max + m)?,
            ell_min,
            ell_max,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn ell_range(&self) -> (i64, i64) {
        (self.ell_min, self.ell_max)
    }

    pub fn eigensystem(&self, theta: f64) -> Result<EigenSystem> {
        let p = self.params.with_theta(theta);
        eigensystem(&build_hamiltonian(&p, self.window))
    }

    pub fn profile(&self, theta: f64) -> Result<Arc<Vec<f64>>> {
        let key = theta.to_bits();
        if let Some(p) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let es = self.eigensystem(theta)?;
        let p = Arc::new(correlator_profile(&es, self.ell_min..=self.ell_max)?);
        self.cache.lock().expect("cache lock").insert(key, p.clone());
        Ok(p)
    }

    pub fn value(&self, theta: f64, ell: i64) -> Result<f64> {
        if ell < self.ell_min || ell > self.ell_max {
            return Err(Error::invalid("ell", format!("{ell} outside [{}, {}]", self.ell_min, self.ell_max)));
        }
        Ok(self.profile(theta)?[(ell - self.ell_min) as usize])
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratifiedSpec {
    /// Shell exponents as fractions of `L`; thresholds are `e^{-eta_j L l}`.
    pub ladder: Vec<f64>,
    pub shell_samples: usize,
    pub bulk_points: usize,
    pub seed: u64,
}

impl StratifiedSpec {
    pub fn default_ladder() -> Vec<f64> {
        (1..=8).map(|j| j as f64 / 8.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    UniformGrid { points: usize },
    MonteCarlo { samples: usize, seed: u64 },
    Stratified(StratifiedSpec),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UniformGrid { .. } => "uniform-grid",
            Strategy::MonteCarlo { .. } => "monte-carlo",
            Strategy::Stratified(_) => "stratified",
        }
    }
}

/// Resonance shells for `S_l`: with `g(theta) = min_{0 <= m <= 2l}
/// |sin pi(2 theta + m alpha)|` and thresholds `t_j = e^{-eta_j L l}`,
/// shell `j` is `{t_{j+1} < g <= t_j}`, the last shell is `{g <= t_k}` and the
/// bulk is `{g > t_1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellPlan {
    pub ell: i64,
    pub etas: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub bulk: IntervalSet,
    pub shells: Vec<IntervalSet>,
}

/// Pair sums `a + b` that couple sites near 0 with sites near `l`.
pub fn shell_indices(ell: i64) -> std::ops::RangeInclusive<i64> {
    0..=2 * ell.abs()
}

pub fn shell_plan(params: &ModelParams, ell: i64, ladder: &[f64]) -> Result<ShellPlan> {
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[0] < w[1])) || !(ladder[0] > 0.0) {
        return Err(Error::invalid("ladder", "must be positive and increasing"));
    }
    if ell == 0 {
        return Err(Error::invalid("ell", "must be nonzero"));
    }
    let l = params.lyapunov();
    if l <= 0.0 {
        return Err(Error::invalid("lambda", "shells need a positive Lyapunov exponent"));
    }
    let etas: Vec<f64> = ladder.iter().map(|f| f * l).collect();
    let thresholds: Vec<f64> = etas.iter().map(|e| (-e * ell.abs() as f64).exp()).collect();
    let levels: Vec<IntervalSet> = thresholds
        .iter()
        .map(|&t| sublevel(params, shell_indices(ell), t))
        .collect();
    let mut shells = Vec::with_capacity(levels.len());
    for j in 0..levels.len() {
        shells.push(match levels.get(j + 1) {
            Some(next) => levels[j].difference(next),
            None => levels[j].clone(),
        });
    }
    Ok(ShellPlan {
        ell,
        etas,
        thresholds,
        bulk: levels[0].complement(),
        shells,
    })
}

fn sublevel(params: &ModelParams, ms: std::ops::RangeInclusive<i64>, t: f64) -> IntervalSet {
    let mut out = IntervalSet::empty();
    let sets: Vec<IntervalSet> = ms
        .map(|m| crate::resonance::sine_sublevel_dd(params.alpha.multiple(m), t))
        .collect();
    for s in &sets {
        out = out.union(s);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Grid,
    Random,
}

/// Nodes spread uniformly over a set of known measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub measure: f64,
    pub kind: NodeKind,
    pub nodes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub strata: Vec<Stratum>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic stream seed for a sub-task.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// `n` points at cumulative arc length `(i + shift) / n` of the set.
fn set_grid(set: &IntervalSet, n: usize, shift: f64) -> Vec<f64> {
    let mut cum = Vec::with_capacity(set.len());
    let mut acc = 0.0;
    for &(a, b) in set.arcs() {
        acc += b - a;
        cum.push(acc);
    }
    let total = acc;
    let mut j = 0;
    (0..n)
        .map(|i| {
            let target = (i as f64 + shift) / n as f64 * total;
            while j + 1 < cum.len() && cum[j] < target {
                j += 1;
            }
            let (a, b) = set.arcs()[j];
            let start = if j == 0 { 0.0 } else { cum[j - 1] };
            (a + (target - start)).clamp(a, b)
        })
        .collect()
}

impl Quadrature {
    pub fn uniform_grid(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("points", "must be positive"));
        }
        Ok(Self {
            strata: vec![Stratum {
                label: "bulk".into(),
                measure: 1.0,
                kind: NodeKind::Grid,
                nodes: midpoints(points),
            }],
        })
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Result<Self> {
        if samples < 2 {
            return Err(Error::invalid("samples", "need at least 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            strata: vec![Stratum {
                label: "bulk".into(),
                measure: 1.0,
                kind: NodeKind::Random,
                nodes: (0..samples).map(|_| rng.gen::<f64>()).collect(),
            }],
        })
    }

    /// Bulk nodes are the midpoint grid restricted to the bulk set, so they
    /// coincide across `l`; shells get randomly shifted grids in arc length.
    pub fn stratified(plan: &ShellPlan, spec: &StratifiedSpec) -> Result<Self> {
        if spec.shell_samples < 2 || spec.bulk_points == 0 {
            return Err(Error::invalid("stratified", "need shell_samples >= 2 and bulk_points > 0"));
        }
        let mut strata = vec![Stratum {
            label: "bulk".into(),
            measure: plan.bulk.measure(),
            kind: NodeKind::Grid,
            nodes: midpoints(spec.bulk_points)
                .into_iter()
                .filter(|&t| plan.bulk.contains(t))
                .collect(),
        }];
        for (j, shell) in plan.shells.iter().enumerate() {
            let seed = derive_seed(spec.seed, &[plan.ell as u64, j as u64]);
            let shift: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
            let nodes = if shell.is_empty() {
                Vec::new()
            } else {
                set_grid(shell, spec.shell_samples, shift)
            };
            strata.push(Stratum {
                label: format!("shell_{}", j + 1),
                measure: shell.measure(),
                kind: NodeKind::Grid,
                nodes,
            });
        }
        Ok(Self { strata })
    }

    pub fn for_strategy(strategy: &Strategy, params: &ModelParams, ell: i64) -> Result<Self> {
        match strategy {
            Strategy::UniformGrid { points } => Self::uniform_grid(*points),
            Strategy::MonteCarlo { samples, seed } => Self::monte_carlo(*samples, derive_seed(*seed, &[ell as u64])),
            Strategy::Stratified(spec) => Self::stratified(&shell_plan(params, ell, &spec.ladder)?, spec),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.strata.iter().map(|s| s.nodes.len()).sum()
    }

    fn flat(&self) -> Vec<(usize, f64)> {
        self.strata
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.nodes.iter().map(move |&t| (k, t)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    pub label: String,
    pub measure: f64,
    pub samples: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub ell: i64,
    pub estimate: f64,
    pub error: f64,
    pub bulk: f64,
    pub shells: Vec<f64>,
    pub strata: Vec<StratumEstimate>,
    pub n_samples: usize,
}

fn stratum_estimate(s: &Stratum, values: &[f64]) -> StratumEstimate {
    let n = values.len();
    if n == 0 {
        // Nothing sampled; the integrand is bounded by 1.
        return StratumEstimate {
            label: s.label.clone(),
            measure: s.measure,
            samples: 0,
            value: 0.0,
            error: s.measure,
        };
    }
    let mean = sum(values.iter().copied()) / n as f64;
    let error = match (s.kind, n) {
        (_, 1) => s.measure,
        (NodeKind::Grid, _) => {
            let even: Vec<f64> = values.iter().step_by(2).copied().collect();
            let me = sum(even.iter().copied()) / even.len() as f64;
            s.measure * (mean - me).abs()
        }
        (NodeKind::Random, _) => {
            let var = sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
            s.measure * (var / n as f64).sqrt()
        }
    };
    StratumEstimate {
        label: s.label.clone(),
        measure: s.measure,
        samples: n,
        value: s.measure * mean,
        error,
    }
}

/// Integrates `f` with the given quadrature. The first stratum is the bulk.
pub fn expectation<F>(ell: i64, quad: &Quadrature, f: F) -> Result<CorrelatorEstimate>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let flat = quad.flat();
    let values: Vec<f64> = flat.par_iter().map(|&(_, t)| f(t)).collect::<Result<_>>()?;
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); quad.strata.len()];
    for (&(k, _), v) in flat.iter().zip(values) {
        per[k].push(v);
    }
    let strata: Vec<StratumEstimate> = quad
        .strata
        .iter()
        .zip(&per)
        .map(|(s, v)| stratum_estimate(s, v))
        .collect();
    let estimate = sum(strata.iter().map(|s| s.value));
    let error = sum(strata.iter().map(|s| s.error * s.error)).sqrt();
    Ok(CorrelatorEstimate {
        ell,
        estimate,
        error,
        bulk: strata[0].value,
        shells: strata[1..].iter().map(|s| s.value).collect(),
        n_samples: flat.len(),
        strata,
    })
}

/// `E[S_l]` with the evaluator's cached profiles.
pub fn estimate_correlator(ev: &ProfileEvaluator, ell: i64, strategy: &Strategy) -> Result<CorrelatorEstimate> {
    let quad = Quadrature::for_strategy(strategy, ev.params(), ell)?;
    expectation(ell, &quad, |t| ev.value(t, ell))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub ells: Vec<i64>,
    pub exponents: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Largest pointwise exponent over the second half of the range.
    pub gamma_plus: f64,
    /// Smallest pointwise exponent over the second half of the range.
    pub gamma_minus: f64,
    pub tail_start: i64,
    /// `l` values dropped for nonpositive estimates.
    pub dropped: Vec<i64>,
}

impl GammaFit {
    pub fn tail_exponents(&self) -> impl Iterator<Item = f64> + '_ {
        self.ells
            .iter()
            .zip(&self.exponents)
            .filter(move |(l, _)| **l >= self.tail_start)
            .map(|(_, e)| *e)
    }

    /// Whether `gamma_minus <= slope <= gamma_plus`.
    pub fn slope_bracketed(&self) -> bool {
        self.gamma_minus <= self.slope && self.slope <= self.gamma_plus
    }
}

pub const GAMMA_FIT_MIN_POINTS: usize = 5;

/// Least-squares slope of `-ln E` against `l`, with pointwise exponents
/// `-ln E / l` and their extremes over the tail half.
pub fn gamma_fit(points: &[(i64, f64)]) -> Result<GammaFit> {
    let mut dropped = Vec::new();
    let mut pts: Vec<(i64, f64)> = Vec::with_capacity(points.len());
    for &(l, e) in points {
        if e > 0.0 && e.is_finite() && l != 0 {
            pts.push((l, e));
        } else {
            dropped.push(l);
        }
    }
    if pts.len() < GAMMA_FIT_MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: GAMMA_FIT_MIN_POINTS,
            have: pts.len(),
        });
    }
    pts.sort_by_key(|p| p.0);
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| -p.1.ln()).collect();
    let mx = sum(xs.iter().copied()) / n;
    let my = sum(ys.iter().copied()) / n;
    let sxy = sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let exponents: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y / x.abs()).collect();
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    let tail_start = lo + (hi - lo + 1) / 2;
    let tail: Vec<f64> = pts
        .iter()
        .zip(&exponents)
        .filter(|(p, _)| p.0 >= tail_start)
        .map(|(_, e)| *e)
        .collect();
    Ok(GammaFit {
        ells: pts.iter().map(|p| p.0).collect(),
        exponents,
        slope,
        intercept,
        gamma_plus: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        gamma_minus: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_start,
        dropped,
    })
}

/// [`gamma_fit`] on a sweep of estimates.
pub fn gamma_fit_estimates(estimates: &[CorrelatorEstimate]) -> Result<GammaFit> {
    let pts: Vec<(i64, f64)> = estimates.iter().map(|e| (e.ell, e.estimate)).collect();
    gamma_fit(&pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterDecomposition {
    pub ell: i64,
    pub delta0: f64,
    /// Phase-averaged contribution of eigenfunctions centered at each site.
    pub rows: Vec<(i64, f64)>,
    pub total: f64,
    /// Centers `n >= (1 - delta0) l`.
    pub part_i: f64,
    /// Centers `n <= delta0 l`.
    pub part_ii: f64,
    pub part_iii: f64,
}

/// Splits the phase average of `S_l` by localization center.
pub fn decompose_by_center(ev: &ProfileEvaluator, ell: i64, quad: &Quadrature, delta0: f64) -> Result<CenterDecomposition> {
    if !(delta0 > 0.0 && delta0 < 0.5) {
        return Err(Error::invalid("delta0", "must lie in (0, 1/2)"));
    }
    let w = ev.window();
    let (i0, il) = (w.check(0)?, w.check(ell)?);
    let flat = quad.flat();
    let weights: Vec<f64> = quad
        .strata
        .iter()
        .map(|s| if s.nodes.is_empty() { 0.0 } else { s.measure / s.nodes.len() as f64 })
        .collect();
    let per_node: Vec<Vec<(i64, f64)>> = flat
        .par_iter()
        .map(|&(_, t)| {
            let es = ev.eigensystem(t)?;
            Ok((0..es.len())
                .map(|s| {
                    let v = es.vector(s);
                    (es.meta(s).center, (v[i0] * v[il]).abs())
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut acc: BTreeMap<i64, Neumaier> = BTreeMap::new();
    for (&(k, _), items) in flat.iter().zip(&per_node) {
        for &(c, x) in items {
            acc.entry(c).or_default().add(weights[k] * x);
        }
    }
    let rows: Vec<(i64, f64)> = acc.into_iter().map(|(c, a)| (c, a.value())).collect();
    let total = sum(rows.iter().map(|r| r.1));
    let lf = ell as f64;
    let part = |pred: &dyn Fn(f64) -> bool| sum(rows.iter().filter(|r| pred(r.0 as f64)).map(|r| r.1));
    let part_i = part(&|n| n >= (1.0 - delta0) * lf);
    let part_ii = part(&|n| n <= delta0 * lf);
    let part_iii = part(&|n| n > delta0 * lf && n < (1.0 - delta0) * lf);
    Ok(CenterDecomposition {
        ell,
        delta0,
        rows,
        total,
        part_i,
        part_ii,
        part_iii,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCake {
    /// Midpoint rule for the integral of `f` over the set.
    pub lhs: f64,
    /// Integral over `t` of the superlevel measure, from a shifted node set.
    pub rhs: f64,
    pub residual: f64,
}

/// Offset of the second node set, in units of the grid spacing.
pub const LAYERCAKE_SHIFT: f64 = 0.618_033_988_749_894_8;

/// Compares the direct integral of `0 <= f <= 1` over `omega` with the
/// integral of its superlevel-set measures.
pub fn layercake_check<F>(omega: &IntervalSet, resolution: usize, f: F) -> Result<LayerCake>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be positive"));
    }
    if omega.is_empty() {
        return Ok(LayerCake {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        });
    }
    let eval = |nodes: Vec<f64>| -> Result<Vec<f64>> {
        let v: Vec<f64> = nodes.par_iter().map(|&t| f(t)).collect::<Result<_>>()?;
        if let Some(bad) = v.iter().find(|x| !(**x >= 0.0 && **x <= 1.0 + 1e-12)) {
            return Err(Error::invalid("integrand", format!("value {bad} outside [0, 1]")));
        }
        Ok(v)
    };
    let m = omega.measure();
    let a = eval(set_grid(omega, resolution, 0.5))?;
    let lhs = m * sum(a.iter().copied()) / resolution as f64;

    let mut b = eval(set_grid(omega, resolution, LAYERCAKE_SHIFT))?;
    b.sort_by(f64::total_cmp);
    // For t in (b_(k-1), b_(k)] the superlevel set {f > t} holds n - k + 1
    // of the n nodes.
    let n = b.len() as f64;
    let mut acc = Neumaier::new();
    let mut prev = 0.0;
    for (k, &v) in b.iter().enumerate() {
        let v = v.min(1.0);
        acc.add((v - prev) * m * (n - k as f64) / n);
        prev = v;
    }
    let rhs = acc.value();
    Ok(LayerCake {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: i64,
    pub gamma: f64,
    pub theta_measure: f64,
    pub tail_bound: f64,
    /// `|theta| - tail_bound`.
    pub measure_lower: f64,
    /// `e^{-Gamma|n|} / 100`.
    pub required_measure: f64,
    pub samples: Vec<(f64, f64)>,
    /// Fraction of samples with `S_n >= 1/4`.
    pub fraction_quarter: f64,
    /// `measure_lower * fraction_quarter / 4`.
    pub integral_bound: f64,
    /// `e^{-Gamma|n|} / 400`.
    pub target: f64,
    /// No usable phase set after the tail correction.
    pub inconclusive: bool,
}

impl LowerBoundReport {
    pub fn passes(&self, min_fraction: f64) -> bool {
        !self.inconclusive
            && self.measure_lower >= self.required_measure
            && self.fraction_quarter >= min_fraction
            && self.integral_bound >= self.target
    }
}

/// Samples phases from the constructed set and evaluates `S_n` on
/// `[-M, |n| + M]`.
pub fn lower_bound_experiment(params: &ModelParams, n: i64, gamma: f64, samples: usize, seed: u64, margin: u32) -> Result<LowerBoundReport> {
    let ts = theta_sets(gamma, n, params, crate::resonance::default_k_cutoff(n), crate::resonance::THETA2_FACTOR)?;
    let na = n.abs();
    let decay = (-gamma * na as f64).exp();
    let mut report = LowerBoundReport {
        n,
        gamma,
        theta_measure: ts.theta.measure(),
        tail_bound: ts.tail_bound,
        measure_lower: ts.measure_lower,
        required_measure: decay / 100.0,
        samples: Vec::new(),
        fraction_quarter: 0.0,
        integral_bound: 0.0,
        target: decay / 400.0,
        inconclusive: ts.theta.is_empty() || ts.measure_lower <= 0.0,
    };
    if report.inconclusive || samples == 0 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thetas = ts.theta.sample(&mut rng, samples);
    let ev = ProfileEvaluator::new(params, na, na, margin)?;
    let values: Vec<f64> = thetas
        .par_iter()
        .map(|&t| ev.value(t, na))
        .collect::<Result<_>>()?;
    let good = values.iter().filter(|&&v| v >= 0.25).count();
    report.fraction_quarter = good as f64 / samples as f64;
    report.integral_bound = report.measure_lower * report.fraction_quarter / 4.0;
    report.samples = thetas.into_iter().zip(values).collect();
    Ok(report)
}

/// `g(theta) = min_{m in ms} |sin pi(2 theta + m alpha)|`.
pub fn min_sine(params: &ModelParams, ms: std::ops::RangeInclusive<i64>) -> MinSine {
    MinSine::for_multiples(params, ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_fit_exact_exponential() {
        let pts: Vec<(i64, f64)> = (4..=24).map(|l| (l, (-1.0986 * l as f64).exp())).collect();
        let g = gamma_fit(&pts).unwrap();
        assert!((g.slope - 1.0986).abs() < 1e-12);
        assert!(g.intercept.abs() < 1e-10);
        assert!((g.gamma_plus - 1.0986).abs() < 1e-12);
        assert_eq!(g.tail_start, 14);
    }

    #[test]
    fn gamma_fit_drops_nonpositive() {
        let mut pts: Vec<(i64, f64)> = (1..=6).map(|l| (l, (-0.5 * l as f64).exp())).collect();
        pts.push((7, 0.0));
        let g = gamma_fit(&pts).unwrap();
        assert_eq!(g.dropped, vec![7]);
        assert!(gamma_fit(&pts[..4]).is_err());
    }

    #[test]
    fn set_grid_stays_inside() {
        let s = IntervalSet::from_arcs([(0.1, 0.2), (0.7, 0.75)]);
        let g = set_grid(&s, 30, 0.5);
        assert!(g.iter().all(|&t| s.contains(t)));
        assert_eq!(g.iter().filter(|&&t| t > 0.5).count(), 10);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_eq!(derive_seed(9, &[1]), derive_seed(9, &[1]));
    }
}
