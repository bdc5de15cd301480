//! One function per subcommand. Each builds the instance, runs the trials
//! through [`run_trials`] and fills in an [`Outcome`].

use crate::error::CliError;
use crate::ingest;
use crate::report::{num, run_trials, summarize, InstanceInfo, Outcome, CRITERION, Z};
use crate::{
    CnfSource, Command, CriterionArgs, EntropyArgs, GraphArgs, HypArgs, KsatArgs, KthueArgs, LatinArgs, MatrixArgs,
    NonrepArgs, ParallelArgs, RamseyArgs, RhoArgs, WtlArgs,
};
use lll_apps::gen::{random_bounded_degree_graph, random_color_matrix, random_hypergraph, random_regular_cnf};
use lll_apps::graph::Graph;
use lll_apps::hypergraph::{max_neighborhood, run_hyp2col, HypInstance, HypOptions};
use lll_apps::nonrep::{kthue_params, nonrep_params, rho_params, run_kthue, run_nonrep, run_rho_similar, NonRepOptions};
use lll_apps::perm::{
    full_transversal_limit, partial_latin_bound, partial_latin_params, run_latin, run_partial_latin, stein_baseline,
    stein_bound, ColorMatrix, LatinOptions,
};
use lll_apps::ramsey::{clique_dependency, clique_prob, ramsey_criterion, ramsey_n, run_ramsey_n};
use lll_apps::sat::{max_occurrence_limit, CnfInstance, SatOptions, SatSolver};
use lll_apps::verify::{
    check_clique_free, check_hyp2col, check_k_repetition_free, check_nonrepetitive, check_rho_similar_free,
    check_transversal, VerifyError,
};
use lll_core::analysis::{check_pegden, check_symmetric, minimal_mu, DEFAULT_EXACT_LIMIT};
use lll_core::engine::run_mt;
use lll_core::entropy::{mt_entropy_bound, Order};
use lll_core::rng::TrialRng;
use lll_core::truncated::{gamma, run_parallel_truncated, solve_parallel_params, BETA_TOL};
use lll_core::witness::{enumerate_family_trees, verify_wtl};
use lll_core::{EngineOptions, Event, EventFamily, Model, ProductSpace};
use serde_json::{json, Map, Value};
use std::borrow::Cow;
use std::collections::HashMap;
use std::f64::consts::E;
use std::path::Path;

const LIMIT: usize = DEFAULT_EXACT_LIMIT;

/// Settings shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub trials: u64,
    pub cap: u64,
}

impl Ctx {
    fn opts(&self) -> EngineOptions {
        EngineOptions::new(self.cap).audit(false)
    }
}

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Outcome, CliError> {
    match cmd {
        Command::Latin(a) => latin(a, ctx),
        Command::PartialLatin(a) => partial_latin(a, ctx),
        Command::Stein(a) => stein(a, ctx),
        Command::Nonrep(a) => nonrep(a, ctx),
        Command::Kthue(a) => kthue(a, ctx),
        Command::RhoSimilar(a) => rho_similar(a, ctx),
        Command::Hyp2col(a) => hyp2col(a, ctx),
        Command::Ramsey(a) => ramsey(a, ctx),
        Command::KsatPartial(a) => ksat_partial(a, ctx),
        Command::ParallelTruncated(a) => parallel_truncated(a, ctx),
        Command::EntropyBound(a) => entropy_bound(a, ctx),
        Command::CriterionCheck(a) => criterion_check(a, ctx),
        Command::WtlVerify(a) => wtl_verify(a, ctx),
    }
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Per-trial result of a search whose output is independently verified.
struct Checked {
    row: Vec<f64>,
    /// `Some(true)` verified clean, `Some(false)` a bad witness was found,
    /// `None` the instance was too large to verify.
    verified: Option<bool>,
    witness: Option<String>,
}

impl Checked {
    fn from_verify(row: Vec<f64>, v: Result<Option<Vec<usize>>, VerifyError>) -> Self {
        match v {
            Ok(None) => Checked { row, verified: Some(true), witness: None },
            Ok(Some(w)) => Checked { row, verified: Some(false), witness: Some(format!("{w:?}")) },
            Err(VerifyError::TooLarge { .. }) => Checked { row, verified: None, witness: None },
            Err(e) => Checked { row, verified: Some(false), witness: Some(e.to_string()) },
        }
    }
}

/// Records statistics and the verification check for a batch of [`Checked`].
fn finish_checked(out: &mut Outcome, names: &[&str], trials: Vec<Checked>, what: &str) {
    let rows: Vec<Vec<f64>> = trials.iter().map(|t| t.row.clone()).collect();
    out.statistics = summarize(names, &rows);
    let verified = trials.iter().filter(|t| t.verified == Some(true)).count();
    let skipped = trials.iter().filter(|t| t.verified.is_none()).count();
    let bad: Vec<(usize, &Checked)> = trials.iter().enumerate().filter(|(_, t)| t.verified == Some(false)).collect();
    out.result("verified", verified).result("unverified", skipped).result("invalid", bad.len());
    let detail = match bad.first() {
        Some((i, t)) => format!("trial {i}: {}", t.witness.as_deref().unwrap_or("")),
        None if skipped > 0 => format!("{verified} verified, {skipped} too large to verify exhaustively"),
        None => format!("all {verified} outputs verified"),
    };
    out.check(what, bad.is_empty(), detail);
}

fn mean_at_least(out: &mut Outcome, stat: &str, bound: f64) {
    let s = out.stat(stat);
    let (mean, se) = (s.mean, s.stderr);
    out.check(&format!("{stat} ≥ bound"), mean >= bound - Z * se, format!("mean {mean} vs bound {bound} (3σ = {})", Z * se));
}

fn mean_at_most(out: &mut Outcome, stat: &str, bound: f64) {
    let s = out.stat(stat);
    let (mean, se) = (s.mean, s.stderr);
    out.check(&format!("{stat} ≤ bound"), mean <= bound + Z * se, format!("mean {mean} vs bound {bound} (3σ = {})", Z * se));
}

// ---------------------------------------------------------------------------
// Transversals

/// A fixed matrix from a file, or `None` to draw one per trial.
fn matrix_source(instance: &Option<std::path::PathBuf>, n: usize, delta: usize) -> Result<(Option<ColorMatrix>, InstanceInfo), CliError> {
    match instance {
        Some(p) => {
            let (text, digest) = ingest::read(p)?;
            let m = ingest::color_matrix(&text)?;
            let summary = obj(json!({"n": m.n(), "delta": m.delta(), "colors": m.num_colors()}));
            Ok((Some(m), InstanceInfo::file("color-matrix", &path_str(p), digest, summary)))
        }
        None => {
            if delta == 0 || delta > n {
                return Err(invalid(format!("Δ = {delta} must lie in 1..={n}")));
            }
            let desc = format!("random_color_matrix n={n} delta={delta}, one per trial");
            Ok((None, InstanceInfo::generated("color-matrix", desc, obj(json!({"n": n, "delta": delta})))))
        }
    }
}

fn matrix_for<'a>(fixed: &'a Option<ColorMatrix>, n: usize, delta: usize, rng: &mut TrialRng) -> Result<Cow<'a, ColorMatrix>, CliError> {
    Ok(match fixed {
        Some(m) => Cow::Borrowed(m),
        None => Cow::Owned(random_color_matrix(n, delta, rng).map_err(invalid)?),
    })
}

fn latin(a: &LatinArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (fixed, info) = matrix_source(&a.instance, a.n as usize, a.delta as usize)?;
    let (n, delta) = fixed.as_ref().map_or((a.n as usize, a.delta as usize), |m| (m.n(), m.delta()));
    let limit = full_transversal_limit(n);
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("audit", a.audit).param("force", a.force);
    out.bound("delta_limit", limit);
    let admissible = delta <= 1 || delta as f64 <= limit;
    out.check(CRITERION, admissible || a.force, format!("Δ = {delta}, 27n/256 = {limit:.4}"));
    if !admissible && !a.force {
        return Ok(out);
    }
    let opts = ctx.opts().audit(a.audit);
    let lopts = LatinOptions { audit_buckets: a.audit, force: a.force };
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let m = matrix_for(&fixed, n, delta, rng)?;
        let r = run_latin(&m, rng, &opts, &lopts)?;
        let row = vec![r.resamplings as f64, r.probes as f64];
        Ok(Checked::from_verify(row, check_transversal(&m, &r.pi)))
    })?;
    finish_checked(&mut out, &["resamplings", "probes"], trials, "transversal");
    Ok(out)
}

fn partial_latin(a: &MatrixArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = a.n as usize;
    let beta = a.beta.unwrap_or(0.25);
    let delta = ((beta * n as f64).round() as usize).max(1);
    let (fixed, info) = matrix_source(&a.instance, n, delta)?;
    let (n, delta) = fixed.as_ref().map_or((n, delta), |m| (m.n(), m.delta()));
    let beta = delta as f64 / n as f64;
    let params = partial_latin_params(n, delta);
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("beta", beta);
    out.param("alpha", num(params.alpha)).param("theta_hat", num(params.theta_hat)).param("q", num(params.q));
    let bound = partial_latin_bound(n, beta);
    out.bound("length", bound);
    let opts = ctx.opts();
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let m = matrix_for(&fixed, n, delta, rng)?;
        let r = run_partial_latin(&m, rng, &opts)?;
        let mut seen = std::collections::HashSet::new();
        let distinct = (0..n).filter(|&x| r.active[x]).all(|x| seen.insert(m.color(x, r.pi[x])));
        let valid = distinct && seen.len() == r.length;
        Ok((vec![r.length as f64, r.resamplings as f64], valid))
    })?;
    let invalid_runs = trials.iter().filter(|t| !t.1).count();
    let rows: Vec<Vec<f64>> = trials.into_iter().map(|t| t.0).collect();
    out.statistics = summarize(&["length", "resamplings"], &rows);
    out.check("partial transversal", invalid_runs == 0, format!("{invalid_runs} outputs repeat a color"));
    mean_at_least(&mut out, "length", bound);
    Ok(out)
}

fn stein(a: &MatrixArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = a.n as usize;
    let beta = a.beta.unwrap_or(1.0);
    let delta = ((beta * n as f64).round() as usize).clamp(1, n);
    let (fixed, info) = matrix_source(&a.instance, n, delta)?;
    let (n, delta) = fixed.as_ref().map_or((n, delta), |m| (m.n(), m.delta()));
    let beta = delta as f64 / n as f64;
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("beta", beta);
    let bound = stein_bound(n, beta);
    out.bound("length", bound);
    let rows = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let m = matrix_for(&fixed, n, delta, rng)?;
        Ok(vec![stein_baseline(&m, rng).1 as f64])
    })?;
    out.statistics = summarize(&["length"], &rows);
    mean_at_least(&mut out, "length", bound);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Graph colorings

fn graph_source(a: &GraphArgs) -> Result<(Option<Graph>, InstanceInfo), CliError> {
    match &a.instance {
        Some(p) => {
            let (text, digest) = ingest::read(p)?;
            let g = ingest::graph_edgelist(&text)?;
            let summary = obj(json!({"n": g.n(), "edges": g.edges().len(), "max_degree": g.max_degree()}));
            Ok((Some(g), InstanceInfo::file("graph-edgelist", &path_str(p), digest, summary)))
        }
        None => {
            let desc = format!("random_bounded_degree_graph n={} maxdeg={}, one per trial", a.n, a.maxdeg);
            let summary = obj(json!({"n": a.n, "maxdeg": a.maxdeg}));
            Ok((None, InstanceInfo::generated("graph-edgelist", desc, summary)))
        }
    }
}

/// The fixed graph, or a fresh random one.
fn graph_for<'a>(fixed: &'a Option<Graph>, a: &GraphArgs, rng: &mut TrialRng) -> Cow<'a, Graph> {
    match fixed {
        Some(g) => Cow::Borrowed(g),
        None => Cow::Owned(random_bounded_degree_graph(a.n as usize, a.maxdeg as usize, rng)),
    }
}

/// `(n, Δ)` the parameters are computed for; generated graphs use the
/// degree cap.
fn graph_dims(fixed: &Option<Graph>, a: &GraphArgs) -> (usize, usize) {
    fixed.as_ref().map_or((a.n as usize, a.maxdeg as usize), |g| (g.n(), g.max_degree().max(1)))
}

fn nonrep(a: &NonrepArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (fixed, info) = graph_source(&a.graph)?;
    let (n, delta) = graph_dims(&fixed, &a.graph);
    let params = nonrep_params(delta)?;
    let palette = a.colors.unwrap_or(params.c);
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("colors", palette).param("shortcut", !a.graph.no_shortcut);
    out.param("phi", num(params.phi)).param("alpha", num(params.alpha)).param("beta", num(params.beta));
    out.bound("colors", params.c).bound("slack", num(params.slack));
    let opts = ctx.opts();
    let nopts = NonRepOptions { shortcut: !a.graph.no_shortcut, ..Default::default() };
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let g = graph_for(&fixed, &a.graph, rng);
        let r = run_nonrep(&g, palette, rng, &opts, &nopts)?;
        let row = vec![r.resamplings as f64, r.used_shortcut as u8 as f64];
        Ok(Checked::from_verify(row, check_nonrepetitive(&g, &r.colors)))
    })?;
    finish_checked(&mut out, &["resamplings", "shortcut"], trials, "nonrepetitive");
    Ok(out)
}

fn kthue(a: &KthueArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (fixed, info) = graph_source(&a.graph)?;
    let (n, delta) = graph_dims(&fixed, &a.graph);
    let k = a.k as usize;
    let params = kthue_params(delta, k, a.epsilon, n)?;
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("k", k).param("epsilon", a.epsilon);
    out.param("shortcut", !a.graph.no_shortcut);
    out.param("phi", num(params.phi)).param("alpha", num(params.alpha)).param("l_max", params.l_max);
    out.bound("colors", params.c).bound("tail", num(params.tail)).bound("slack", num(params.slack));
    let opts = ctx.opts();
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let g = graph_for(&fixed, &a.graph, rng);
        let r = run_kthue(&g, k, a.epsilon, rng, &opts, !a.graph.no_shortcut)?;
        let row = vec![r.resamplings as f64, r.used_shortcut as u8 as f64, r.params.c as f64];
        Ok(Checked::from_verify(row, check_k_repetition_free(&g, &r.colors, k, r.checked_length)))
    })?;
    finish_checked(&mut out, &["resamplings", "shortcut", "colors"], trials, "k-repetition-free");
    Ok(out)
}

fn rho_similar(a: &RhoArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (fixed, info) = graph_source(&a.graph)?;
    let (n, delta) = graph_dims(&fixed, &a.graph);
    let params = rho_params(delta, a.rho)?;
    let mut out = Outcome::new(info, ctx.trials);
    out.param("n", n).param("delta", delta).param("rho", a.rho).param("shortcut", !a.graph.no_shortcut);
    out.param("phi", num(params.phi)).param("alpha", num(params.alpha)).param("h", num(params.h));
    out.bound("colors", params.c).bound("slack", num(params.slack));
    let opts = ctx.opts();
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let g = graph_for(&fixed, &a.graph, rng);
        let r = run_rho_similar(&g, a.rho, rng, &opts, !a.graph.no_shortcut)?;
        let row = vec![r.resamplings as f64, r.used_shortcut as u8 as f64, r.params.c as f64];
        Ok(Checked::from_verify(row, check_rho_similar_free(&g, &r.colors, a.rho)))
    })?;
    finish_checked(&mut out, &["resamplings", "shortcut", "colors"], trials, "rho-similar-free");
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hypergraphs and Ramsey

fn hyp2col(a: &HypArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (fixed, info) = match &a.instance {
        Some(p) => {
            let (text, digest) = ingest::read(p)?;
            let h = ingest::hypergraph(&text)?;
            let summary = obj(json!({"n": h.n, "k": h.k, "m": h.m(), "max_neighborhood": h.l}));
            (Some(h), InstanceInfo::file("hypergraph", &path_str(p), digest, summary))
        }
        None => {
            let desc = format!("random_hypergraph n={} k={} m={} maxdeg={}, one per trial", a.n, a.k, a.m, a.maxdeg);
            let summary = obj(json!({"n": a.n, "k": a.k, "m": a.m, "maxdeg": a.maxdeg}));
            (None, InstanceInfo::generated("hypergraph", desc, summary))
        }
    };
    let k = fixed.as_ref().map_or(a.k as usize, |h| h.k);
    let l_limit = max_neighborhood(k);
    let mut out = Outcome::new(info, ctx.trials);
    out.param("k", k).param("shortcut", !a.no_shortcut).param("audit", a.audit).param("unchecked", a.unchecked);
    out.bound("max_neighborhood", num(l_limit));
    if let Some(h) = &fixed {
        let ok = h.l as f64 <= l_limit;
        out.check(CRITERION, ok || a.unchecked, format!("max |N(f)| = {}, limit {l_limit:.3}", h.l));
        if !ok && !a.unchecked {
            return Ok(out);
        }
    }
    let opts = ctx.opts().audit(a.audit);
    let hopts = HypOptions { shortcut: !a.no_shortcut, audit_lists: a.audit, ..Default::default() };
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let inst = match &fixed {
            Some(h) => Cow::Borrowed(h),
            None => {
                let (n, m, maxdeg) = (a.n as usize, a.m as usize, a.maxdeg as usize);
                let edges = random_hypergraph(n, k, m, maxdeg, rng).map_err(invalid)?;
                Cow::Owned(HypInstance::unchecked(n, k, edges)?)
            }
        };
        if !a.unchecked && inst.l as f64 > l_limit {
            return Err(CliError::Criterion(format!("max |N(f)| = {} exceeds {l_limit:.3}", inst.l)));
        }
        let r = run_hyp2col(&inst, rng, &opts, &hopts)?;
        let row = vec![
            r.resamplings as f64,
            r.used_shortcut as u8 as f64,
            r.restarts as f64,
            r.certified as u8 as f64,
            r.t_bound,
            inst.l as f64,
        ];
        Ok(Checked::from_verify(row, check_hyp2col(&inst, &r.colors)))
    })?;
    let certified = trials.iter().all(|t| t.row[3] == 1.0);
    out.result("certified", certified);
    finish_checked(
        &mut out,
        &["resamplings", "shortcut", "restarts", "certified", "t_bound", "max_neighborhood"],
        trials,
        "proper two-coloring",
    );
    Ok(out)
}

fn ramsey(a: &RamseyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let k = a.k as usize;
    let n = a.n.map_or_else(|| ramsey_n(k), |n| n as usize);
    if n < k {
        return Err(invalid(format!("n = {n} is below k = {k}")));
    }
    let info = InstanceInfo::generated("complete-graph", format!("K_{n}, cliques of size {k}"), obj(json!({"n": n, "k": k})));
    let mut out = Outcome::new(info, ctx.trials);
    out.param("k", k).param("n", n);
    let crit = ramsey_criterion(n, k);
    out.bound("clique_prob", num(clique_prob(k))).bound("dependency", clique_dependency(n, k));
    out.bound("symmetric_alpha", num(crit.alpha.unwrap_or(f64::NAN)));
    out.result("n", n).result("symmetric_criterion", crit.satisfied);
    let opts = ctx.opts();
    let trials = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let r = run_ramsey_n(n, k, rng, &opts)?;
        Ok(Checked::from_verify(vec![r.resamplings as f64], check_clique_free(n, &r.coloring.colors, k)))
    })?;
    let clique_free = trials.iter().all(|t| t.verified == Some(true));
    out.result("clique_free", clique_free);
    finish_checked(&mut out, &["resamplings"], trials, "no monochromatic clique");
    Ok(out)
}

// ---------------------------------------------------------------------------
// Partial k-SAT

fn ksat_partial(a: &KsatArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (inst, info) = match &a.instance {
        Some(p) => {
            let (text, digest) = ingest::read(p)?;
            let inst = ingest::dimacs(&text, None)?;
            let summary = cnf_summary(&inst);
            (inst, InstanceInfo::file("dimacs", &path_str(p), digest, summary))
        }
        None => {
            let (n, k, l) = (a.n as usize, a.k as usize, a.l as usize);
            let desc = format!("random_regular_cnf n={n} k={k} l={l}, stream {} of seed {}", u64::MAX, ctx.seed);
            let inst = random_regular_cnf(n, k, l, &mut lll_core::rng::stream(ctx.seed, u64::MAX)).map_err(invalid)?;
            let summary = cnf_summary(&inst);
            (inst, InstanceInfo::generated("dimacs", desc, summary))
        }
    };
    let (k, alpha) = (inst.k(), a.alpha);
    let limit = max_occurrence_limit(k, alpha);
    let mut out = Outcome::new(info, ctx.trials);
    out.param("alpha", alpha).param("shortcut", !a.no_shortcut).param("best_of", a.best_of);
    out.bound("max_occurrence", num(limit));
    let occ = inst.max_occurrence();
    out.check(CRITERION, occ as f64 <= limit, format!("max occurrence {occ}, limit {limit:.4}"));
    if occ as f64 > limit {
        return Ok(out);
    }
    let solver = SatSolver::new(&inst, alpha)?;
    let bound = solver.bound();
    out.param("z", num(solver.bias.z)).bound("satisfied", bound);
    let opts = ctx.opts();
    let sopts = SatOptions { shortcut: !a.no_shortcut, best_of: a.best_of as usize, ..Default::default() };
    let rows = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let r = solver.run(rng, &opts, &sopts)?;
        let consistent = inst.count_satisfied(&r.assignment) == r.satisfied;
        Ok(vec![r.satisfied as f64, r.resamplings as f64, consistent as u8 as f64])
    })?;
    out.statistics = summarize(&["satisfied", "resamplings", "consistent"], &rows);
    let consistent = out.stat("consistent").min == 1.0;
    out.check("satisfied count", consistent, "recounted against the formula".into());
    mean_at_least(&mut out, "satisfied", bound);
    Ok(out)
}

fn cnf_summary(inst: &CnfInstance) -> Map<String, Value> {
    obj(json!({"n": inst.n(), "m": inst.m(), "k": inst.k(), "max_occurrence": inst.max_occurrence()}))
}

// ---------------------------------------------------------------------------
// Parallel truncation

/// Events `X_i = … = X_{i+width−1} = 1` around a cycle of `m` variables.
fn ring(m: usize, width: usize, p1: f64) -> Result<EventFamily, CliError> {
    let s = ProductSpace::bernoulli(&vec![p1; m]).map_err(invalid)?;
    let ev = (0..m)
        .map(|i| {
            let pairs: Vec<(usize, u32)> = (0..width).map(|j| ((i + j) % m, 1)).collect();
            Event::assignment(&s, &pairs).map_err(invalid)
        })
        .collect::<Result<_, _>>()?;
    EventFamily::new(s, ev, vec![0.0; m]).map_err(invalid)
}

fn parallel_truncated(a: &ParallelArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let d = a.d as usize;
    let p = a.p.unwrap_or(a.alpha / (E * d as f64));
    let m = a.events as usize;
    let width = d.div_ceil(2);
    let simulate = d % 2 == 1 && m > d;
    let desc = if simulate {
        format!("ring of {m} events, width {width}, p = {p}")
    } else {
        format!("symmetric parameters p = {p}, d = {d}")
    };
    let info = InstanceInfo::generated("ring", desc, obj(json!({"events": m, "width": width, "d": d, "simulated": simulate})));
    let mut out = Outcome::new(info, ctx.trials);
    out.param("p", num(p)).param("d", d).param("alpha", a.alpha);
    let value = E * p * d as f64;
    out.check(CRITERION, value <= a.alpha * (1.0 + 1e-12), format!("e·p·d = {value:.6}, α = {}", a.alpha));
    if value > a.alpha * (1.0 + 1e-12) {
        return Ok(out);
    }
    let pp = solve_parallel_params(p, d, a.alpha, BETA_TOL)?;
    out.param("r", num(pp.r)).param("lambda", num(pp.lambda)).param("z", num(pp.z));
    out.param("rounds", pp.t).param("beta", num(pp.beta));
    out.bound("survival", num(pp.survival_bound));
    let miss = (gamma(pp.beta, pp.r, d, pp.t) - pp.z).abs();
    out.check("γ_t(β) = z", miss <= BETA_TOL, format!("|γ_t(β) − z| = {miss:e}"));
    out.result("simulated", simulate);
    if !simulate {
        return Ok(out);
    }
    let f = ring(m, width, p.powf(1.0 / width as f64))?;
    let rows = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let run = run_parallel_truncated(&f, pp.beta, pp.t, rng);
        let live = f.find_all(&run.config);
        Ok(vec![live.contains(&0) as u8 as f64, live.len() as f64 / m as f64, run.resamplings() as f64])
    })?;
    out.statistics = summarize(&["survival_event0", "survival_fraction", "resamplings"], &rows);
    mean_at_most(&mut out, "survival_event0", pp.survival_bound);
    mean_at_most(&mut out, "survival_fraction", pp.survival_bound);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Analysis commands on clause families

/// Five fair bits, four pairwise-overlapping events.
fn builtin_family() -> EventFamily {
    let s = ProductSpace::uniform(5, 2);
    let ev = [
        vec![(0, 1), (1, 1), (2, 1)],
        vec![(2, 0), (3, 1), (4, 1)],
        vec![(0, 0), (3, 0), (4, 1)],
        vec![(1, 0), (4, 0)],
    ]
    .iter()
    .map(|pairs| Event::assignment(&s, pairs).expect("valid event"))
    .collect();
    EventFamily::new(s, ev, vec![0.0; 4]).expect("valid family")
}

/// Clause-violation events of a formula over fair bits.
fn cnf_family(inst: &CnfInstance) -> Result<EventFamily, CliError> {
    let s = ProductSpace::uniform(inst.n(), 2);
    let ev = inst
        .clauses()
        .iter()
        .map(|c| {
            let pairs: Vec<(usize, u32)> = c.iter().map(|l| (l.var, if l.positive { 0 } else { 1 })).collect();
            Event::assignment(&s, &pairs).map_err(invalid)
        })
        .collect::<Result<_, _>>()?;
    EventFamily::new(s, ev, vec![0.0; inst.m()]).map_err(invalid)
}

fn family_source(src: &CnfSource) -> Result<(EventFamily, InstanceInfo), CliError> {
    match &src.instance {
        Some(p) => {
            let (text, digest) = ingest::read(p)?;
            let inst = ingest::dimacs(&text, src.k.map(|k| k as usize))?;
            let f = cnf_family(&inst)?;
            Ok((f, InstanceInfo::file("dimacs", &path_str(p), digest, cnf_summary(&inst))))
        }
        None => {
            let f = builtin_family();
            let summary = obj(json!({"variables": 5, "events": f.len()}));
            Ok((f, InstanceInfo::generated("events", "built-in: 5 fair bits, 4 overlapping events".into(), summary)))
        }
    }
}

/// Attaches the least `μ` satisfying the criterion, or records its absence.
fn with_mu(f: EventFamily, out: &mut Outcome) -> Result<Option<EventFamily>, CliError> {
    match minimal_mu(&f, LIMIT) {
        Some(mu) => {
            let rep = check_pegden(&f, &mu, LIMIT);
            out.check(CRITERION, rep.satisfied, format!("minimal μ, slack {:e}", rep.slack));
            out.result("mu", mu.iter().map(|&x| num(x)).collect::<Vec<_>>());
            Ok(Some(f.with_mu(mu).map_err(invalid)?))
        }
        None => {
            out.check(CRITERION, false, "no μ satisfies the criterion".into());
            Ok(None)
        }
    }
}

fn entropy_bound(a: &EntropyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (f, info) = family_source(&a.source)?;
    let mut out = Outcome::new(info, ctx.trials);
    let order = match a.order {
        Order::Infinity => json!("inf"),
        Order::Finite(r) => json!(r),
    };
    out.param("order", order);
    let Some(f) = with_mu(f, &mut out)? else { return Ok(out) };
    let b = mt_entropy_bound(&f, f.mu(), a.order, LIMIT)?;
    out.bound("entropy", num(b.bound)).bound("base_entropy", num(b.base_entropy));
    out.bound("count", num(b.count_bound));
    let d = b.distortion;
    out.result("distortion_exact", d.exact.map(num)).result("distortion_crude", num(d.crude));
    out.result("distortion_variable", num(d.variable_based));
    if let Some(x) = d.exact {
        let ok = x <= d.crude + 1e-12 && x <= d.variable_based + 1e-12;
        out.check("exact distortion is smallest", ok, format!("{x} vs {} and {}", d.crude, d.variable_based));
    }
    let vars = f.space().num_vars();
    if !(matches!(a.order, Order::Infinity) && vars <= 12) {
        out.result("simulated", false);
        return Ok(out);
    }
    // min-entropy bound: no outcome more likely than e^{-H}
    let opts = ctx.opts();
    let outcomes = run_trials(ctx.seed, ctx.trials, |_, rng| {
        let x = run_mt(&f, rng, &opts)?.config;
        Ok(x.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (b as u64) << i))
    })?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for o in &outcomes {
        *counts.entry(*o).or_default() += 1;
    }
    let t = outcomes.len() as f64;
    let top = counts.values().copied().max().unwrap_or(0) as f64 / t;
    let se = (top * (1.0 - top) / t).sqrt();
    let cap = (-b.bound).exp();
    out.result("simulated", true).result("distinct_outcomes", counts.len()).result("max_frequency", top);
    out.bound("max_probability", num(cap));
    out.check("max frequency ≤ e^-H", top <= cap + Z * se, format!("{top} vs {cap} (3σ = {})", Z * se));
    Ok(out)
}

fn criterion_check(a: &CriterionArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    if let (Some(p), Some(d)) = (a.p, a.d) {
        let info = InstanceInfo::generated("symmetric", format!("p = {p}, d = {d}"), obj(json!({"p": p, "d": d})));
        let mut out = Outcome::new(info, ctx.trials);
        out.param("p", p).param("d", d);
        let rep = check_symmetric(p, d as usize);
        let alpha = rep.alpha.unwrap_or(f64::NAN);
        out.result("satisfied", rep.satisfied).result("alpha", num(alpha));
        out.result("slack", num(rep.slack)).result("epsilon_slack", num(rep.epsilon_slack));
        out.check(CRITERION, rep.satisfied, format!("e·p·d = {alpha:.6}"));
        return Ok(out);
    }
    let src = CnfSource { instance: a.instance.clone(), k: None };
    let (f, info) = family_source(&src)?;
    let mut out = Outcome::new(info, ctx.trials);
    let p_max = f.events().iter().map(Event::prob).fold(0.0, f64::max);
    let d_max = (0..f.len()).map(|i| f.neighbors(i).len()).max().unwrap_or(1).max(1);
    let sym = check_symmetric(p_max, d_max);
    out.result("symmetric_satisfied", sym.satisfied).result("symmetric_alpha", num(sym.alpha.unwrap_or(f64::NAN)));
    let satisfied = with_mu(f, &mut out)?.is_some();
    out.result("satisfied", satisfied);
    Ok(out)
}

fn wtl_verify(a: &WtlArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (f, info) = family_source(&a.source)?;
    let mut out = Outcome::new(info, ctx.trials);
    out.param("min_weight", a.min_weight);
    let Some(f) = with_mu(f, &mut out)? else { return Ok(out) };
    let mut trees = Vec::new();
    let mut truncated = false;
    for b in 0..f.len() {
        let e = enumerate_family_trees(&f, b, a.min_weight, 200_000);
        truncated |= e.truncated;
        trees.extend(e.trees);
    }
    out.check("enumeration complete", !truncated, format!("{} trees", trees.len()));
    let opts = ctx.opts();
    let rep = verify_wtl(&f, &trees, ctx.trials, ctx.seed, |rng| run_mt(&f, rng, &opts))
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let over = rep.weight_sums.iter().enumerate().find(|(_, &(sum, mu, _))| sum > mu * (1.0 + 1e-9));
    let detail = match over {
        Some((b, (sum, mu, _))) => format!("B{b}: {sum} > μ = {mu}"),
        None => "every weight sum ≤ μ".into(),
    };
    out.check("tree weights ≤ μ", over.is_none(), detail);
    let worst = rep.trees.iter().max_by(|x, y| (x.frequency - x.weight).total_cmp(&(y.frequency - y.weight)));
    out.result("trees", rep.trees.len()).result("violations", rep.violations);
    if let Some(w) = worst {
        out.result("worst", json!({"tree": w.tree, "weight": num(w.weight), "frequency": w.frequency, "stderr": w.stderr}));
    }
    out.check("tree frequencies ≤ weights", rep.violations == 0, format!("{} violations", rep.violations));
    Ok(out)
}
