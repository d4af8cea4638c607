use amolab_core::cocycle::lyapunov_grid;
use amolab_core::correlator::{
    derive_seed, estimate_correlator, gamma_fit_estimates, lower_bound_experiment, CorrelatorEstimate, ProfileEvaluator,
    Strategy,
};
use amolab_core::localization::{classify_and_verify, palindrome_check, verify_corollary, DecayConfig, Outcome, Probe};
use amolab_core::operator::{build_hamiltonian, eigensystem};
use amolab_core::resonance::{default_k_cutoff, set_a, set_b, set_measure_bound, theta_sets, THETA2_FACTOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::EigenCache;
use crate::config::RunConfig;
use crate::output::{Artifacts, Cell};
use crate::suite::{self, resonant_phase, Sizes};
use crate::CliError;

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub cache: Option<&'a EigenCache>,
    pub out: Artifacts,
}

#[derive(Serialize)]
struct Details {
    seed: u64,
    config: RunConfig,
    window_rule: String,
}

fn details(cfg: &RunConfig) -> Details {
    Details {
        seed: cfg.seed,
        config: cfg.canonical(),
        window_rule: format!(
            "spectra and verdicts on [-{r}, {r}]; correlators on [-M, l_max + M] with M = {m}",
            r = cfg.window.radius,
            m = cfg.margin()
        ),
    }
}

fn eigen(ctx: &Context, p: &amolab_core::ModelParams, w: amolab_core::Window) -> Result<(amolab_core::EigenSystem, bool), CliError> {
    Ok(match ctx.cache {
        Some(c) => c.get_or_compute(p, w)?,
        None => (eigensystem(&build_hamiltonian(p, w))?, false),
    })
}

pub fn spectrum(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let p = cfg.params()?;
    let w = cfg.window();
    let (es, hit) = eigen(&ctx, &p, w)?;
    let h = build_hamiltonian(&p, w);
    ctx.out.csv(
        "spectrum.csv",
        &["s", "energy", "center", "sup_norm", "boundary_mass"],
        (0..es.len()).map(|s| {
            let m = es.meta(s);
            vec![s.into(), es.energy(s).into(), m.center.into(), m.sup_norm.into(), m.boundary_mass.into()]
        }),
    )?;
    let (lo, hi) = (es.energy(0), es.energy(es.len() - 1));
    let bins = cfg.dos_bins;
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &e in es.energies() {
        counts[(((e - lo) / width) as usize).min(bins - 1)] += 1;
    }
    ctx.out.csv(
        "dos.csv",
        &["bin_lo", "bin_hi", "count", "density"],
        counts.iter().enumerate().map(|(i, &c)| {
            let a = lo + i as f64 * width;
            vec![a.into(), (a + width).into(), c.into(), (c as f64 / (es.len() as f64 * width)).into()]
        }),
    )?;
    ctx.out.gnuplot("dos.gp", "dos.csv", 1, &[(4, "density of states")], false)?;
    let (a, b) = es.completeness_defects();
    ctx.out.say(format!("spectrum: {} states on [{}, {}], energies in [{lo:.6}, {hi:.6}]", es.len(), w.lo(), w.hi()));
    ctx.out.say(format!(
        "orthonormality defect {:.3e}, completeness defect {:.3e}, scaled residual {:.3e}",
        es.orthonormality_defect(),
        a.max(b),
        es.max_scaled_residual(&h)
    ));
    if hit {
        eprintln!("cache hit");
    }
    Ok(ctx.out.finish("spectrum", &details(cfg))?)
}

pub fn lyapunov(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let p = cfg.params()?;
    let (es, _) = eigen(&ctx, &p, cfg.window())?;
    let energies = suite::interior_energies(&es, cfg.lyapunov.energies);
    let est = lyapunov_grid(&energies, &p, cfg.lyapunov.steps)?;
    let l = p.lyapunov();
    ctx.out.csv(
        "lyapunov.csv",
        &["energy", "estimate", "tail", "relative_deviation"],
        est.iter()
            .map(|e| vec![e.energy.into(), e.value.into(), e.tail.into(), ((e.value - l).abs() / l).into()]),
    )?;
    ctx.out.gnuplot("lyapunov.gp", "lyapunov.csv", 1, &[(2, "estimate")], false)?;
    let worst = est.iter().map(|e| (e.value - l).abs() / l).fold(0.0, f64::max);
    ctx.out.say(format!(
        "lyapunov: {} interior energies, {} steps; worst relative deviation from ln lambda = {l:.6}: {:.3}%",
        est.len(),
        cfg.lyapunov.steps,
        100.0 * worst
    ));
    Ok(ctx.out.finish("lyapunov", &details(cfg))?)
}

fn sweep(cfg: &RunConfig) -> Result<Vec<CorrelatorEstimate>, CliError> {
    let p = cfg.params()?;
    let ev = ProfileEvaluator::new(&p, cfg.ell.min, cfg.ell.max, cfg.margin())?;
    let strategy = cfg.strategy();
    Ok((cfg.ell.min..=cfg.ell.max)
        .map(|ell| estimate_correlator(&ev, ell, &strategy))
        .collect::<amolab_core::Result<_>>()?)
}

fn write_estimates(out: &mut Artifacts, cfg: &RunConfig, est: &[CorrelatorEstimate]) -> std::io::Result<()> {
    let k = match cfg.strategy() {
        Strategy::Stratified(s) => s.ladder.len(),
        _ => 0,
    };
    let mut header: Vec<String> = ["ell", "estimate", "error", "bulk"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|j| format!("shell_{j}")));
    header.push("n_samples".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "correlator.csv",
        &header,
        est.iter().map(|e| {
            let mut row: Vec<Cell> = vec![e.ell.into(), e.estimate.into(), e.error.into(), e.bulk.into()];
            row.extend(e.shells.iter().map(|&s| Cell::from(s)));
            row.push(e.n_samples.into());
            row
        }),
    )?;
    out.csv(
        "strata.csv",
        &["ell", "stratum", "measure", "samples", "value", "error"],
        est.iter().flat_map(|e| {
            e.strata.iter().map(move |s| {
                vec![e.ell.into(), s.label.clone().into(), s.measure.into(), s.samples.into(), s.value.into(), s.error.into()]
            })
        }),
    )?;
    out.gnuplot("correlator.gp", "correlator.csv", 1, &[(2, "E S_l")], true)
}

pub fn correlator(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let est = sweep(cfg)?;
    write_estimates(&mut ctx.out, cfg, &est)?;
    for e in &est {
        ctx.out.say(format!("l = {:>3}: E S_l = {:.6e} +- {:.2e} ({} samples)", e.ell, e.estimate, e.error, e.n_samples));
    }
    Ok(ctx.out.finish("correlator", &details(cfg))?)
}

pub fn gamma(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let est = sweep(cfg)?;
    for e in est.iter().filter(|e| e.estimate <= 0.0) {
        eprintln!("warning: dropping l = {} with nonpositive estimate {:e}", e.ell, e.estimate);
    }
    write_estimates(&mut ctx.out, cfg, &est)?;
    let fit = gamma_fit_estimates(&est)?;
    ctx.out.csv(
        "gamma.csv",
        &["ell", "exponent", "in_tail"],
        fit.ells
            .iter()
            .zip(&fit.exponents)
            .map(|(&l, &g)| vec![l.into(), g.into(), (l >= fit.tail_start).into()]),
    )?;
    ctx.out.json("gamma_fit.json", &fit)?;
    ctx.out.gnuplot("gamma.gp", "gamma.csv", 1, &[(2, "-ln E S_l / l")], false)?;
    let l = cfg.lyapunov();
    ctx.out.say(format!(
        "gamma: slope {:.6} vs L = ln {} = {:.6} (relative deviation {:.2}%)",
        fit.slope,
        cfg.model.lambda,
        l,
        100.0 * (fit.slope - l).abs() / l
    ));
    ctx.out.say(format!(
        "gamma: tail proxies gamma_minus = {:.6}, gamma_plus = {:.6} over l >= {}; slope bracketed: {}",
        fit.gamma_minus,
        fit.gamma_plus,
        fit.tail_start,
        fit.slope_bracketed()
    ));
    Ok(ctx.out.finish("gamma", &details(cfg))?)
}

pub fn verify_localization(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let base = cfg.params()?;
    let l = base.lyapunov();
    let dcfg = DecayConfig::new(cfg.epsilon * l);
    let eta = cfg.eta * l;
    let w = cfg.window();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x10c]));
    let thetas: Vec<f64> = (0..cfg.phases).map(|_| rng.gen()).collect();
    let probe = cfg.ell.max.max(1);
    let per_phase: Vec<Vec<Vec<Cell>>> = thetas
        .par_iter()
        .map(|&t| {
            let p = base.with_theta(t);
            let es = eigensystem(&build_hamiltonian(&p, w))?;
            let mut rows = Vec::new();
            for pr in [Probe::Relative(probe), Probe::Relative(-probe)] {
                for (kind, v) in [
                    ("decay", classify_and_verify(&es, &p, pr, &dcfg)?),
                    ("corollary", verify_corollary(&es, &p, pr, eta, &dcfg)?),
                ] {
                    for v in v {
                        let outcome = match v.outcome {
                            Outcome::Inapplicable(skip) => format!("skip:{skip:?}"),
                            o => format!("{o:?}"),
                        };
                        rows.push(vec![
                            t.into(),
                            kind.into(),
                            v.s.into(),
                            v.center.into(),
                            v.ell.into(),
                            v.x0.into(),
                            v.sine.into(),
                            format!("{:?}", v.case).into(),
                            v.eta.into(),
                            v.bound.into(),
                            v.ratio.into(),
                            outcome.into(),
                            v.is_applicable().into(),
                            v.passed().into(),
                            v.is_consistent().into(),
                        ]);
                    }
                }
            }
            Ok(rows)
        })
        .collect::<amolab_core::Result<_>>()?;
    let rows: Vec<Vec<Cell>> = per_phase.into_iter().flatten().collect();
    let count = |kind: &str, col: usize| {
        rows.iter()
            .filter(|r| r[1] == Cell::from(kind) && r[col] == Cell::Bool(true))
            .count()
    };
    let inconsistent = rows.iter().filter(|r| r[14] == Cell::Bool(false)).count();
    for kind in ["decay", "corollary"] {
        let (a, p) = (count(kind, 12), count(kind, 13));
        ctx.out.say(format!(
            "{kind}: {p}/{a} applicable verdicts pass ({:.2}%)",
            if a == 0 { 0.0 } else { 100.0 * p as f64 / a as f64 }
        ));
    }
    ctx.out.say(format!("pass-flag/inequality inconsistencies: {inconsistent}"));
    ctx.out.csv(
        "verdicts.csv",
        &[
            "theta", "kind", "s", "center", "ell", "x0", "sine", "case", "eta", "bound", "ratio", "outcome", "applicable",
            "passed", "consistent",
        ],
        rows,
    )?;
    Ok(ctx.out.finish("verify-localization", &details(cfg))?)
}

pub fn resonance_sets(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let p = cfg.params()?;
    let l = p.lyapunov();
    let eta = cfg.eta * l;
    let mut measures: Vec<Vec<Cell>> = Vec::new();
    let mut arcs: Vec<Vec<Cell>> = Vec::new();
    let mut push_arcs = |name: &str, n: i64, ell: i64, s: &amolab_core::IntervalSet| {
        for &(a, b) in s.arcs() {
            arcs.push(vec![name.into(), n.into(), ell.into(), a.into(), b.into()]);
        }
    };
    for &n in &cfg.n {
        let a = set_a(eta, n, &p)?;
        measures.push(vec!["A".into(), n.into(), 0i64.into(), a.measure().into(), set_measure_bound(eta, n).into()]);
        push_arcs("A", n, 0, &a);
        for ell in cfg.ell.min..=cfg.ell.max {
            if ell == n {
                continue;
            }
            let b = set_b(eta, n, ell, &p)?;
            measures.push(vec![
                "B".into(),
                n.into(),
                ell.into(),
                b.measure().into(),
                set_measure_bound(eta, n - ell).into(),
            ]);
        }
        let ts = theta_sets(cfg.gamma * l, n, &p, default_k_cutoff(n), THETA2_FACTOR)?;
        for (name, s) in [("theta1", &ts.theta1), ("theta2", &ts.theta2), ("theta", &ts.theta)] {
            measures.push(vec![name.into(), n.into(), 0i64.into(), s.measure().into(), f64::NAN.into()]);
        }
        push_arcs("theta", n, 0, &ts.theta);
        ctx.out.say(format!(
            "n = {n}: |A| = {:.6e} (bound {:.6e}), |Theta| = {:.6e}, tail bound {:.3e}, lower measure {:.6e} vs e^(-Gamma n)/100 = {:.6e}",
            a.measure(),
            set_measure_bound(eta, n),
            ts.theta.measure(),
            ts.tail_bound,
            ts.measure_lower,
            (-cfg.gamma * l * n.abs() as f64).exp() / 100.0
        ));
    }
    ctx.out.csv("measures.csv", &["set", "n", "ell", "measure", "bound"], measures)?;
    ctx.out.csv("arcs.csv", &["set", "n", "ell", "lo", "hi"], arcs)?;
    Ok(ctx.out.finish("resonance-sets", &details(cfg))?)
}

pub fn theta_experiment(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let p = cfg.params()?;
    let l = p.lyapunov();
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &n in &cfg.n {
        let r = lower_bound_experiment(&p, n, cfg.gamma * l, cfg.samples, derive_seed(cfg.seed, &[n as u64]), cfg.margin())?;
        ctx.out.say(format!(
            "n = {n}: |Theta| - tail = {:.3e} (need {:.3e}); S_n >= 1/4 for {:.1}%; integral bound {:.3e} vs {:.3e}; {}",
            r.measure_lower,
            r.required_measure,
            100.0 * r.fraction_quarter,
            r.integral_bound,
            r.target,
            if r.inconclusive {
                "inconclusive".to_string()
            } else if r.passes(0.9) {
                "pass".to_string()
            } else {
                "fail".to_string()
            }
        ));
        rows.push(vec![
            n.into(),
            r.theta_measure.into(),
            r.tail_bound.into(),
            r.measure_lower.into(),
            r.required_measure.into(),
            r.fraction_quarter.into(),
            r.integral_bound.into(),
            r.target.into(),
            r.inconclusive.into(),
            r.passes(0.9).into(),
        ]);
        samples.extend(r.samples.iter().map(|&(t, s)| vec![n.into(), t.into(), s.into()]));
    }
    ctx.out.csv(
        "theta_experiment.csv",
        &[
            "n", "theta_measure", "tail_bound", "measure_lower", "required_measure", "fraction_quarter", "integral_bound", "target",
            "inconclusive", "passed",
        ],
        rows,
    )?;
    ctx.out.csv("theta_samples.csv", &["n", "theta", "s_n"], samples)?;
    Ok(ctx.out.finish("theta-experiment", &details(cfg))?)
}

pub fn palindrome(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let base = cfg.params()?;
    let l = base.lyapunov();
    let gamma = cfg.gamma * l;
    let eps = cfg.epsilon * (gamma - l);
    let eps2 = 2.0 * eps;
    let mut rows = Vec::new();
    for &n in &cfg.n {
        let p = base.with_theta(resonant_phase(&base.alpha, n, 0));
        let (es, _) = eigen(&ctx, &p, cfg.window())?;
        let r = palindrome_check(&p, n, gamma, eps, &es)?;
        ctx.out.say(format!(
            "n = {n}: difference bound holds for {:.1}%, Wronskian bound for {:.1}% of {} interior eigenfunctions",
            100.0 * r.conclusion_fraction().unwrap_or(0.0),
            100.0 * r.wronskian_fraction(eps2).unwrap_or(0.0),
            r.entries.iter().filter(|e| e.interior).count()
        ));
        rows.extend(r.entries.iter().map(|e| {
            vec![
                n.into(),
                e.s.into(),
                e.center.into(),
                e.sup_norm.into(),
                e.diff_minus.into(),
                e.diff_plus.into(),
                (e.iota as i64).into(),
                e.wronskian_max.into(),
                e.increment_constant.into(),
                e.interior.into(),
            ]
        }));
    }
    ctx.out.csv(
        "palindrome.csv",
        &["n", "s", "center", "sup_norm", "diff_minus", "diff_plus", "iota", "wronskian_max", "increment_constant", "interior"],
        rows,
    )?;
    Ok(ctx.out.finish("palindrome", &details(cfg))?)
}

pub fn check_all(mut ctx: Context) -> Result<Vec<String>, CliError> {
    let cfg = ctx.config;
    let sizes = Sizes::for_scale(cfg.scale);
    let mut results = Vec::new();
    for id in suite::IN_PROCESS {
        let r = suite::run_criterion(id, &sizes, cfg.seed)?;
        ctx.out.say(r.line());
        eprintln!("criterion {id}: {:.1} s", r.elapsed.as_secs_f64());
        results.push(r);
    }
    ctx.out.csv(
        "acceptance.csv",
        &["criterion", "name", "passed", "detail"],
        results
            .iter()
            .map(|r| vec![(r.id as i64).into(), r.name.into(), r.passed.into(), r.detail.clone().into()]),
    )?;
    ctx.out.json("acceptance.json", &results)?;
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let files = ctx.out.finish("check-all", &details(cfg))?;
    if failed.is_empty() {
        Ok(files)
    } else {
        Err(CliError::Acceptance(failed))
    }
}
