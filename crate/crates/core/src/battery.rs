//! Property battery over seeded random tuples and model symbols.
//!
//! Each criterion draws its cases from its own seed stream, evaluates them
//! in parallel and reduces to a handful of worst-case [`Check`]s. Case
//! failures (errors) are counted, never skipped.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{
    best_random_alignment, build_charfn, coincidence_fit, coincidence_from_unitary,
    dilation_form_mismatch, dilation_form_residual, eval_pair_blaschke, CharFn, OneVar, RawEvaluator,
};
use crate::defects::{commutator_defect, default_series_cutoff, defect_series_residual, DefectPackage};
use crate::dilation::{build_dilation, build_dilation_auto};
use crate::hardy::{
    ahern_clark_growth, build_space, quotient_model, structural_checks, torus_grid, InnerSymbol,
    ModelOptions, QuotientModel,
};
use crate::numerics::{op_norm, singular_values_of, CMatrix, Check, Tolerances};
use crate::random::{
    disc_point, kernel_node_tuple, nilpotent_tuple, random_pure_contraction, random_unitary, seeded,
    triangular_commuting_pair, SeededRng,
};
use crate::tuples::{defect_first_kind, CTuple};

pub const CRITERIA: usize = 11;

/// Battery configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: Tolerances,
    pub grid_per_axis: usize,
    pub window_margin: usize,
    /// Dilation degree; automatic when absent.
    pub degree: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            tol: Tolerances::default(),
            grid_per_axis: 32,
            window_margin: 1,
            degree: None,
        }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: String,
    pub cases: usize,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
    pub pass: bool,
}

impl CriterionReport {
    fn new(id: usize, name: &str, cases: usize, mut checks: Vec<Check>, errors: Vec<String>) -> Self {
        checks.push(Check::at_most("errors", errors.len() as f64, 0.0));
        let pass = checks.iter().all(|c| c.pass);
        Self {
            id,
            name: name.into(),
            cases,
            checks,
            errors,
            pass,
        }
    }
}

/// A report with its wall time in seconds.
#[derive(Debug, Clone)]
pub struct Timed {
    pub report: CriterionReport,
    pub seconds: f64,
}

pub fn criterion_name(id: usize) -> &'static str {
    match id {
        1 => "one_variable_reduction",
        2 => "blaschke_recovery",
        3 => "one_variable_inner",
        4 => "pair_form_identity",
        5 => "unitary_invariance",
        6 => "positivity",
        7 => "windowed_models",
        8 => "quotient_growth",
        9 => "series_expansions",
        10 => "dilation_theorem",
        11 => "dilation_form",
        _ => "unknown",
    }
}

/// Runs criterion `id` in `1..=CRITERIA`.
pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> Timed {
    let start = Instant::now();
    let report = match id {
        1 => one_variable_reduction(cfg),
        2 => blaschke_recovery(cfg),
        3 => one_variable_inner(cfg),
        4 => pair_form_identity(cfg),
        5 => unitary_invariance(cfg),
        6 => positivity(cfg),
        7 => windowed_models(cfg),
        8 => quotient_growth(cfg),
        9 => series_expansions(cfg),
        10 => dilation_theorem(cfg),
        11 => dilation_form(cfg),
        _ => CriterionReport::new(id, "unknown", 0, vec![], vec![format!("no criterion {id}")]),
    };
    Timed {
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// All criteria in order.
pub fn run_all(cfg: &SuiteConfig) -> Vec<Timed> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg)).collect()
}

fn stream(cfg: &SuiteConfig, id: usize) -> SeededRng {
    seeded(cfg.seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn case_seeds(cfg: &SuiteConfig, id: usize, count: usize) -> Vec<u64> {
    let mut rng = stream(cfg, id);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Per-case maxima reduced over cases, plus the error messages.
fn reduce<const K: usize>(results: Vec<Result<[f64; K], String>>) -> ([f64; K], Vec<String>) {
    let mut worst = [0.0; K];
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => {
                for (w, x) in worst.iter_mut().zip(v) {
                    *w = if x.is_nan() { f64::NAN } else { w.max(x) };
                }
            }
            Err(e) => errors.push(format!("case {i}: {e}")),
        }
    }
    (worst, errors)
}

fn points<R: Rng>(rng: &mut R, n: usize, count: usize, radius: f64) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|_| (0..n).map(|_| disc_point(rng, radius)).collect())
        .collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn onevar_case(seed: u64, tol: Tolerances) -> Result<(CTuple, CharFn, OneVar, Vec<Complex64>), String> {
    let mut rng = seeded(seed);
    let d = rng.random_range(1..=8);
    let x = random_pure_contraction(&mut rng, d, 0.95);
    let pts: Vec<Complex64> = (0..25).map(|_| disc_point(&mut rng, 0.98)).collect();
    let t = CTuple::validate(vec![x.clone()], tol).map_err(err)?;
    let pkg = DefectPackage::compute(&t).map_err(err)?;
    let f = build_charfn(&t, &pkg, None).map_err(err)?;
    let one = OneVar::new(&x, &tol).map_err(err)?;
    Ok((t, f, one, pts))
}

fn one_variable_reduction(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 1, 200);
    let results: Vec<Result<[f64; 2], String>> = seeds
        .par_iter()
        .map(|&s| {
            let (_, f, one, pts) = onevar_case(s, cfg.tol)?;
            let mut ambient: f64 = 0.0;
            let mut spectra: f64 = 0.0;
            for w in pts {
                let a = f.eval_ambient(&[w]).map_err(err)?;
                let b1 = one.eval(w).map_err(err)?;
                let b = &one.output_basis * &b1 * one.input_basis.adjoint();
                ambient = ambient.max(op_norm(&(a - b)));
                let sa = singular_values_of(&f.eval(&[w]).map_err(err)?);
                let sb = singular_values_of(&b1);
                let gap = if sa.len() == sb.len() {
                    sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                spectra = spectra.max(gap);
            }
            Ok([ambient, spectra])
        })
        .collect();
    let ([ambient, spectra], errors) = reduce(results);
    CriterionReport::new(
        1,
        criterion_name(1),
        seeds.len(),
        vec![
            Check::at_most("aligned_difference", ambient, 1e-9),
            Check::at_most("singular_value_difference", spectra, 1e-9),
        ],
        errors,
    )
}

fn blaschke_recovery(cfg: &SuiteConfig) -> CriterionReport {
    let zeros = [
        Complex64::new(0.3, 0.0),
        Complex64::new(0.5, 0.2),
        Complex64::new(-0.7, 0.0),
    ];
    let mut rng = stream(cfg, 2);
    let pts: Vec<Complex64> = (0..50).map(|_| disc_point(&mut rng, 1.0)).collect();
    let results: Vec<Result<[f64; 1], String>> = zeros
        .iter()
        .map(|&a| {
            let t = CTuple::validate(vec![CMatrix::from_element(1, 1, a)], cfg.tol).map_err(err)?;
            let pkg = DefectPackage::compute(&t).map_err(err)?;
            let f = build_charfn(&t, &pkg, None).map_err(err)?;
            let mut worst: f64 = 0.0;
            for &w in &pts {
                let v = f.eval(&[w]).map_err(err)?;
                let expect = (w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w);
                worst = worst.max((v[(0, 0)] - expect).norm());
            }
            Ok([worst])
        })
        .collect();
    let ([worst], errors) = reduce(results);
    CriterionReport::new(
        2,
        criterion_name(2),
        zeros.len(),
        vec![Check::at_most("scalar_difference", worst, 1e-12)],
        errors,
    )
}

fn one_variable_inner(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 1, 200);
    let results: Vec<Result<[f64; 1], String>> = seeds
        .par_iter()
        .map(|&s| {
            let (_, f, _, _) = onevar_case(s, cfg.tol)?;
            Ok([f.inner_residual_grid(64).map_err(err)?])
        })
        .collect();
    let ([worst], errors) = reduce(results);
    CriterionReport::new(
        3,
        criterion_name(3),
        seeds.len(),
        vec![Check::at_most("inner_residual", worst, 1e-8)],
        errors,
    )
}

fn pair_form_identity(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 4, 100);
    let results: Vec<Result<[f64; 1], String>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = seeded(s);
            let t = if i % 2 == 0 {
                let d = rng.random_range(1..=6);
                CTuple::validate(triangular_commuting_pair(&mut rng, d, 0.95), cfg.tol).map_err(err)?
            } else {
                let m = rng.random_range(1..=6);
                kernel_node_tuple(&mut rng, 2, m, 0.7, cfg.tol).map_err(err)?.0
            };
            let d = t.dim();
            let d_star = defect_first_kind(&t)
                .map(|x| x.root)
                .unwrap_or_else(|_| CMatrix::identity(d, d));
            let raw = RawEvaluator {
                matrices: t.matrices().to_vec(),
                d_star: d_star.clone(),
            };
            let h = CMatrix::identity(2 * d, 2 * d);
            let mut worst: f64 = 0.0;
            for w in points(&mut rng, 2, 20, 0.95) {
                let a = raw.apply(&w, &h).map_err(err)?;
                let b = eval_pair_blaschke(&t, &d_star, &w, &h).map_err(err)?;
                worst = worst.max(op_norm(&(a - b)));
            }
            Ok([worst])
        })
        .collect();
    let ([worst], errors) = reduce(results);
    CriterionReport::new(
        4,
        criterion_name(4),
        seeds.len(),
        vec![Check::at_most("pair_form_difference", worst, 1e-11)],
        errors,
    )
}

/// Model symbols on two variables.
pub fn model_symbols() -> Vec<(&'static str, InnerSymbol)> {
    let diag = InnerSymbol::Blockdiag {
        children: vec![
            InnerSymbol::monomial(&[1, 1]),
            InnerSymbol::unitary(CMatrix::identity(1, 1)),
        ],
    };
    vec![
        ("z1", InnerSymbol::monomial(&[1, 0])),
        ("z1z2", InnerSymbol::monomial(&[1, 1])),
        ("z1^2z2", InnerSymbol::monomial(&[2, 1])),
        ("diag(z1z2,1)", diag),
    ]
}

fn model(symbol: &InnerSymbol, degree: usize, cfg: &SuiteConfig) -> Result<QuotientModel, String> {
    let space = build_space(2, degree, symbol.output_dim()).map_err(err)?;
    let opts = ModelOptions {
        window_margin: cfg.window_margin,
        ..ModelOptions::default()
    };
    quotient_model(&space, symbol, cfg.tol, opts).map_err(err)
}

/// Characteristic function of the model tuple on its exact window.
fn model_charfn(m: &QuotientModel) -> Result<CharFn, String> {
    let t = m.tuple().map_err(err)?;
    let pkg = DefectPackage::compute(&t).map_err(err)?;
    build_charfn(&t, &pkg, m.quotient_window().as_ref()).map_err(err)
}

fn unitary_invariance(cfg: &SuiteConfig) -> CriterionReport {
    let symbols = model_symbols();
    let degrees = [4usize, 5];
    let bases: Vec<Result<CharFn, String>> = degrees
        .iter()
        .flat_map(|&n| symbols.iter().map(move |(_, s)| (n, s)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(n, s)| model_charfn(&model(s, *n, cfg)?))
        .collect();
    let seeds = case_seeds(cfg, 5, 50);
    let constructive: Vec<Result<[f64; 2], String>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = bases[i % bases.len()].as_ref().map_err(|e| e.clone())?;
            let mut rng = seeded(s);
            let sigma = random_unitary(&mut rng, f.tuple.dim());
            let pts = points(&mut rng, 2, 20, 1.0);
            let out = coincidence_from_unitary(f, &sigma, &pts).map_err(err)?;
            Ok([out.coincidence.residual, out.coincidence.unitarity_defect])
        })
        .collect();
    let ([residual, unitarity], mut errors) = reduce(constructive);

    let mut rng = stream(cfg, 50);
    let torus = torus_grid(1, cfg.grid_per_axis.max(4));
    let mut probe = f64::INFINITY;
    let mut fit_probe = f64::INFINITY;
    for pair in 0..10 {
        let m = 1 + pair % 4;
        let result = (|| -> Result<(f64, f64), String> {
            let (ta, na) = kernel_node_tuple(&mut rng, 1, m, 0.7, cfg.tol).map_err(err)?;
            let (tb, _) = loop {
                let (tb, nb) = kernel_node_tuple(&mut rng, 1, m, 0.7, cfg.tol).map_err(err)?;
                if node_separation(&na, &nb) >= 0.3 {
                    break (tb, nb);
                }
            };
            let fa = build_charfn(&ta, &DefectPackage::compute(&ta).map_err(err)?, None).map_err(err)?;
            let fb = build_charfn(&tb, &DefectPackage::compute(&tb).map_err(err)?, None).map_err(err)?;
            let a = fa.eval_grid(&torus).map_err(err)?;
            let b = fb.eval_grid(&torus).map_err(err)?;
            let best = best_random_alignment(&a, &b, 50, &mut rng);
            let fit = coincidence_fit(&a, &b).map_or(f64::INFINITY, |f| f.residual);
            Ok((best, fit))
        })();
        match result {
            Ok((best, fit)) => {
                probe = probe.min(best);
                fit_probe = fit_probe.min(fit);
            }
            Err(e) => errors.push(format!("probe {pair}: {e}")),
        }
    }
    CriterionReport::new(
        5,
        criterion_name(5),
        seeds.len() + 10,
        vec![
            Check::at_most("coincidence_residual", residual, 1e-9),
            Check::at_most("intertwiner_unitarity", unitarity, 1e-10),
            Check::at_least("distinct_nodes_best_alignment", probe, 0.1),
            Check::at_least("distinct_nodes_fitted_alignment", fit_probe, 0.1),
        ],
        errors,
    )
}

/// Hausdorff distance between two node sets in the max-coordinate metric.
fn node_separation(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let dist = |x: &[Complex64], y: &[Complex64]| {
        x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    };
    let one_sided = |a: &[Vec<Complex64>], b: &[Vec<Complex64>]| {
        a.iter()
            .map(|x| b.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

fn positivity(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 6, 500);
    let results: Vec<Result<[f64; 2], String>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = seeded(s);
            let n = 2 + i % 2;
            let m = rng.random_range(1..=12);
            let (t, _) = kernel_node_tuple(&mut rng, n, m, 0.8, cfg.tol).map_err(err)?;
            let szego = t.szego_min_eig();
            let comm = commutator_defect(&t).map_err(err)?.min_eig;
            Ok([(-szego).max(0.0), (-comm).max(0.0)])
        })
        .collect();
    let ([szego, comm], errors) = reduce(results);
    CriterionReport::new(
        6,
        criterion_name(6),
        seeds.len(),
        vec![
            Check::at_most("szego_negativity", szego, 1e-10),
            Check::at_most("commutator_defect_negativity", comm, 1e-10),
        ],
        errors,
    )
}

fn windowed_models(cfg: &SuiteConfig) -> CriterionReport {
    let symbols = model_symbols();
    let cases: Vec<(usize, &InnerSymbol)> = [4usize, 6, 8]
        .iter()
        .flat_map(|&n| symbols.iter().map(move |(_, s)| (n, s)))
        .collect();
    let torus = torus_grid(2, cfg.grid_per_axis.clamp(4, 16));
    let results: Vec<Result<[f64; 5], String>> = cases
        .par_iter()
        .map(|&(n, symbol)| {
            let m = model(symbol, n, cfg)?;
            let report = structural_checks(&m).map_err(err)?;
            let structural = report
                .checks
                .iter()
                .filter(|c| !matches!(c.name.as_str(), "joint_defect_psd" | "dominance"))
                .map(|c| if c.pass { 0.0 } else { c.value.max(f64::MIN_POSITIVE) })
                .fold(0.0, f64::max);
            let worst_residual = report
                .checks
                .iter()
                .filter(|c| c.threshold > 0.0)
                .map(|c| c.value)
                .fold(0.0, f64::max);
            let find = |name: &str| report.checks.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.value);
            let minimal_wandering = report.dim_wandering as f64 - report.dim_submodule_constants as f64;
            let dim_gap = (minimal_wandering - report.dim_joint_defect as f64).abs();
            let f = model_charfn(&m)?;
            let extra = report.dim_submodule_constants;
            let theta_c = crate::charfn::inner_block_compose(&f, extra);
            let a: Vec<CMatrix> = torus.iter().map(|w| symbol.eval(w)).collect();
            let b: Vec<CMatrix> = torus.iter().map(|w| theta_c.eval(w)).collect();
            let recovery = coincidence_fit(&a, &b).map_or(f64::INFINITY, |fit| fit.residual);
            Ok([
                structural.max(worst_residual),
                dim_gap,
                find("joint_defect_psd"),
                find("dominance"),
                recovery,
            ])
        })
        .collect();
    let ([structural, dim_gap, psd, dominance, recovery], errors) = reduce(results);
    CriterionReport::new(
        7,
        criterion_name(7),
        cases.len(),
        vec![
            Check::at_most("structural_residual", structural, 1e-8),
            Check::at_most("minimal_wandering_vs_defect_dimension", dim_gap, 0.0),
            Check::at_most("joint_defect_negativity", psd, 1e-10),
            Check::at_most("dominance_violation", dominance, 1e-10),
            Check::at_most("symbol_recovery", recovery, 1e-8),
        ],
        errors,
    )
}

/// `(N+1)^2 - ∏(N+1-α_i)^+`, the quotient dimension for `z^α` on the box.
fn monomial_quotient_dim(alpha: &[usize], degree: usize) -> usize {
    let side = degree + 1;
    side.pow(alpha.len() as u32) - alpha.iter().map(|&a| side.saturating_sub(a)).product::<usize>()
}

fn quotient_growth(cfg: &SuiteConfig) -> CriterionReport {
    let exps: [[usize; 2]; 6] = [[1, 0], [0, 1], [1, 1], [2, 1], [1, 2], [3, 0]];
    let results: Vec<Result<[f64; 2], String>> = exps
        .par_iter()
        .map(|alpha| {
            let growth =
                ahern_clark_growth(&InnerSymbol::monomial(alpha), 2, 2..=10, &cfg.tol).map_err(err)?;
            let mismatch = growth
                .degrees
                .iter()
                .zip(&growth.dims)
                .map(|(&n, &d)| (d as f64 - monomial_quotient_dim(alpha, n) as f64).abs())
                .fold(0.0, f64::max);
            let stalls = growth.dims.windows(2).filter(|w| w[1] <= w[0]).count();
            Ok([stalls as f64, mismatch])
        })
        .collect();
    let ([stalls, mismatch], errors) = reduce(results);
    CriterionReport::new(
        8,
        criterion_name(8),
        exps.len(),
        vec![
            Check::at_most("non_increasing_steps", stalls, 0.0),
            Check::at_most("count_mismatch", mismatch, 0.0),
        ],
        errors,
    )
}

fn subsets_without(n: usize, j: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m & (1 << j) == 0)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn series_expansions(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 9, 100);
    let results: Vec<Result<(bool, [f64; 1], f64), String>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = seeded(s);
            let n = 2 + (i / 2) % 2;
            let nilpotent = i % 2 == 0;
            let (t, k_start) = if nilpotent {
                let d = rng.random_range(2..=6);
                let t = CTuple::validate(nilpotent_tuple(&mut rng, n, d, 0.9), cfg.tol).map_err(err)?;
                (t, d)
            } else {
                let m = rng.random_range(2..=6);
                let (t, _) = kernel_node_tuple(&mut rng, n, m, 0.6, cfg.tol).map_err(err)?;
                let rho = t.spectral_radii().into_iter().fold(0.0, f64::max);
                (t, default_series_cutoff(rho, 1e-12))
            };
            let mut worst: f64 = 0.0;
            let mut slack: f64 = 0.0;
            for j in 0..n {
                for p in subsets_without(n, j) {
                    let mut k = k_start;
                    let mut r = defect_series_residual(&t, j, &p, k).map_err(err)?;
                    while !nilpotent && r.certified_bound > 1e-11 && k < 200 {
                        k = (2 * k).min(200);
                        r = defect_series_residual(&t, j, &p, k).map_err(err)?;
                    }
                    worst = worst.max(r.residual);
                    if !nilpotent {
                        slack = slack.max(r.residual - r.certified_bound);
                    }
                }
            }
            Ok((nilpotent, [worst], slack))
        })
        .collect();
    let mut nil = Vec::new();
    let mut node = Vec::new();
    let mut slack: f64 = 0.0;
    for r in results {
        match r {
            Ok((true, v, _)) => nil.push(Ok(v)),
            Ok((false, v, s)) => {
                slack = slack.max(s);
                node.push(Ok(v))
            }
            Err(e) => nil.push(Err(e)),
        }
    }
    let ([nil_worst], mut errors) = reduce(nil);
    let ([node_worst], more) = reduce(node);
    errors.extend(more);
    CriterionReport::new(
        9,
        criterion_name(9),
        seeds.len(),
        vec![
            Check::at_most("nilpotent_residual", nil_worst, 1e-12),
            Check::at_most("kernel_node_residual", node_worst, 1e-10),
            Check::at_most("residual_above_certified_bound", slack.max(0.0), 1e-12),
        ],
        errors,
    )
}

fn dilation_theorem(cfg: &SuiteConfig) -> CriterionReport {
    let seeds = case_seeds(cfg, 10, 100);
    let results: Vec<Result<[f64; 4], String>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = seeded(s);
            let (n, m, radius) = if i % 5 < 3 {
                (2, rng.random_range(2..=5), 0.8)
            } else {
                (3, rng.random_range(2..=4), 0.5)
            };
            let (t, _) = kernel_node_tuple(&mut rng, n, m, radius, cfg.tol).map_err(err)?;
            let dd = match cfg.degree {
                Some(deg) => build_dilation(&t, deg),
                None => build_dilation_auto(&t),
            }
            .map_err(err)?;
            let d = dd.defects();
            let over = |x: f64| (x - d.tail_bound).max(0.0);
            Ok([
                over(d.isometry),
                over(d.intertwining),
                over(d.minimality),
                over(d.model_equivalence),
            ])
        })
        .collect();
    let ([iso, inter, mini, equiv], errors) = reduce(results);
    CriterionReport::new(
        10,
        criterion_name(10),
        seeds.len(),
        vec![
            Check::at_most("isometry_excess", iso, 1e-10),
            Check::at_most("intertwining_excess", inter, 1e-10),
            Check::at_most("minimality_excess", mini, 1e-10),
            Check::at_most("model_equivalence_excess", equiv, 1e-10),
        ],
        errors,
    )
}

fn dilation_form(cfg: &SuiteConfig) -> CriterionReport {
    let mut jobs: Vec<Box<dyn Fn() -> Result<f64, String> + Send + Sync>> = Vec::new();
    for a in [0.0, 0.3, -0.6] {
        jobs.push(Box::new(move || {
            let t = CTuple::validate(vec![CMatrix::from_element(1, 1, Complex64::new(a, 0.0))], cfg.tol)
                .map_err(err)?;
            let f = build_charfn(&t, &DefectPackage::compute(&t).map_err(err)?, None).map_err(err)?;
            let dd = build_dilation(&t, 24).map_err(err)?;
            Ok(dilation_form_residual(&dd, &f, 24))
        }));
    }
    for s in case_seeds(cfg, 11, 10) {
        jobs.push(Box::new(move || {
            let mut rng = seeded(s);
            let d = rng.random_range(1..=4);
            let x = random_pure_contraction(&mut rng, d, 0.9);
            let t = CTuple::validate(vec![x], cfg.tol).map_err(err)?;
            let f = build_charfn(&t, &DefectPackage::compute(&t).map_err(err)?, None).map_err(err)?;
            let dd = build_dilation(&t, 20).map_err(err)?;
            Ok(dilation_form_residual(&dd, &f, 20))
        }));
    }
    for (_, symbol) in model_symbols() {
        for degree in [4usize, 6] {
            let symbol = symbol.clone();
            jobs.push(Box::new(move || {
                let m = model(&symbol, degree, cfg)?;
                let f = model_charfn(&m)?;
                let dd = build_dilation(&f.tuple, degree + 1).map_err(err)?;
                Ok(dilation_form_residual(&dd, &f, degree + 1))
            }));
        }
    }
    for s in case_seeds(cfg, 111, 6) {
        jobs.push(Box::new(move || {
            let mut rng = seeded(s);
            let m = rng.random_range(2..=4);
            let (t, _) = kernel_node_tuple(&mut rng, 2, m, 0.6, cfg.tol).map_err(err)?;
            let dd = build_dilation(&t, 10).map_err(err)?;
            let d_star = defect_first_kind(&t).map_err(err)?.root;
            let h = CMatrix::identity(2 * t.dim(), 2 * t.dim());
            Ok(dilation_form_mismatch(&dd, &d_star, &h, 10))
        }));
    }
    let results: Vec<Result<[f64; 1], String>> = jobs.par_iter().map(|job| job().map(|v| [v])).collect();
    let cases = results.len();
    let ([worst], errors) = reduce(results);
    CriterionReport::new(
        11,
        criterion_name(11),
        cases,
        vec![Check::at_most("coefficient_mismatch", worst, 1e-11)],
        errors,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomial_quotient_dim(&[1, 0], 5), 6);
        assert_eq!(monomial_quotient_dim(&[1, 1], 5), 11);
        assert_eq!(monomial_quotient_dim(&[2, 1], 4), 13);
        assert_eq!(monomial_quotient_dim(&[7, 0], 4), 25);
    }

    #[test]
    fn separation() {
        let a = vec![vec![Complex64::new(0.1, 0.0)]];
        let b = vec![vec![Complex64::new(0.5, 0.0)], vec![Complex64::new(0.1, 0.0)]];
        assert!((node_separation(&a, &b) - 0.4).abs() < 1e-15);
        assert_eq!(node_separation(&a, &a), 0.0);
    }

    #[test]
    fn seeds_are_stable() {
        let cfg = SuiteConfig::default();
        assert_eq!(case_seeds(&cfg, 3, 4), case_seeds(&cfg, 3, 4));
        assert_ne!(case_seeds(&cfg, 3, 4), case_seeds(&cfg, 4, 4));
    }

    #[test]
    fn errors_fail_the_criterion() {
        let r = CriterionReport::new(0, "x", 1, vec![Check::at_most("a", 0.0, 1.0)], vec!["boom".into()]);
        assert!(!r.pass);
        let r = CriterionReport::new(0, "x", 1, vec![Check::at_most("a", 0.0, 1.0)], vec![]);
        assert!(r.pass);
    }
}
