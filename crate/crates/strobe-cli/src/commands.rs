//! The batch commands: coefficient lookup, mode and field dumps,
//! convergence sweeps, commutator-defect diagnostics and reconstruction
//! tables. Every output embeds the resolved configuration and the tool
//! version; identical configuration and seed give identical bytes.

use rayon::prelude::*;
use serde_json::json;

use strobe::averaging::{assemble_explicit, averaged_split, AveragedSplit, ModeSet};
use strobe::error::{Error, Result};
use strobe::phase::{augmented_split, commuting_pair, reconstruct, reconstruction_pairs};
use strobe::problems::Problem;
use strobe::stats::{loglog_slope, max_and_rms};
use strobe::transport::{diagonal_eval, solve_reference};
use strobe::words::{BetaTable, Word};

use crate::config::{ExperimentConfig, OutputFormat};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors below this are treated as an exact-arithmetic floor: the
/// fitted slope is meaningless there and reported as "exact".
const EXACT_FLOOR: f64 = 1e-8;

fn f(x: f64) -> String {
    format!("{x:.17e}")
}

fn csv_header(cfg: &ExperimentConfig, columns: &str) -> String {
    format!(
        "# strobe {VERSION}\n# config {}\n{columns}\n",
        serde_json::to_string(&cfg.resolved_json()).expect("config serializes")
    )
}

fn json_envelope(cfg: &ExperimentConfig, body: serde_json::Value) -> String {
    let mut out = serde_json::to_string_pretty(&json!({
        "tool": "strobe",
        "version": VERSION,
        "config": cfg.resolved_json(),
        "result": body,
    }))
    .expect("json serializes");
    out.push('\n');
    out
}

fn install_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::usage(format!("cannot build worker pool: {e}")))
}

/// Exact coefficient of one word.
pub fn cmd_beta(word: &str, cfg: &ExperimentConfig) -> Result<String> {
    let entries: Vec<i64> = word
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::usage(format!("bad word letter '{s}'")))
        })
        .collect::<Result<_>>()?;
    if entries.is_empty() {
        return Err(Error::usage("beta needs a nonempty word"));
    }
    let w = Word::new(entries);
    let mut table = BetaTable::new();
    let exact = table.beta(&w)?;
    let c = exact.to_complex();
    Ok(match cfg.format {
        OutputFormat::Csv => format!("word,re,im,re_float,im_float\n{w},{},{},{},{}\n",
            exact.re, exact.im, f(c.re), f(c.im)),
        OutputFormat::Json => json_envelope(
            cfg,
            json!({
                "word": w.to_string(),
                "exact": { "re": exact.re.to_string(), "im": exact.im.to_string() },
                "float": { "re": c.re, "im": c.im },
            }),
        ),
    })
}

fn split_for(p: &Problem, cfg: &ExperimentConfig, eps: f64) -> Result<AveragedSplit> {
    if p.omega_is_constant {
        averaged_split(&p.flow(), &p.g, &p.k, cfg.order, eps, &cfg.averaging())
    } else {
        let ap = p.augmented()?;
        augmented_split(&ap, cfg.order, eps, &cfg.averaging())
    }
}

/// Fourier-mode dump at the evaluation points.
pub fn cmd_modes(cfg: &ExperimentConfig) -> Result<String> {
    let p = cfg.build_problem()?;
    let (flow, field) = if p.omega_is_constant {
        (p.flow(), p.k.clone())
    } else {
        let ap = p.augmented()?;
        (ap.flow.clone(), ap.kcheck.clone())
    };
    let modes = ModeSet::new(flow, field, cfg.averaging())?;
    let mut points = cfg.evaluation_points(&p)?;
    if !p.omega_is_constant {
        for y in points.iter_mut() {
            y.insert(0, 0.0);
        }
    }
    let mut rows = Vec::new();
    for y in &points {
        let at = modes.at(y)?;
        let alias = modes.alias_report(y)?;
        let mut per_k = serde_json::Map::new();
        for k in -modes.k_max()..=modes.k_max() {
            let m = at.mode(k);
            per_k.insert(
                k.to_string(),
                json!({
                    "re": m.iter().map(|c| c.re).collect::<Vec<_>>(),
                    "im": m.iter().map(|c| c.im).collect::<Vec<_>>(),
                }),
            );
        }
        rows.push(json!({
            "point": y,
            "modes": per_k,
            "discarded_energy": alias.discarded_max,
            "alias_threshold": alias.threshold,
            "conjugate_defect": modes.conjugate_defect(y)?,
        }));
    }
    Ok(json_envelope(cfg, json!(rows)))
}

/// Averaged-field dump at the evaluation points.
pub fn cmd_fields(cfg: &ExperimentConfig) -> Result<String> {
    let p = cfg.build_problem()?;
    let eps = cfg.eps[0];
    let split = split_for(&p, cfg, eps)?;
    let mut points = cfg.evaluation_points(&p)?;
    if !p.omega_is_constant {
        for y in points.iter_mut() {
            y.insert(0, 0.0);
        }
    }
    let mut rows = Vec::new();
    for y in &points {
        let mut terms = Vec::new();
        for (i, term) in split.k_terms.iter().enumerate() {
            terms.push(json!({ "r": i + 1, "value": term.eval(y)? }));
        }
        rows.push(json!({
            "point": y,
            "k_terms": terms,
            "k_eps": split.k_eps.eval(y)?,
            "g_eps": split.g_eps.eval(y)?,
            "commutator_defect": split.commutator_defect(y)?,
        }));
    }
    Ok(json_envelope(cfg, json!({ "eps": eps, "order": split.order, "points": rows })))
}

struct SweepRow {
    eps: f64,
    max_err: f64,
    rms_err: f64,
}

fn render_sweep(cfg: &ExperimentConfig, rows: &[SweepRow], slope: &str, what: &str) -> String {
    match cfg.format {
        OutputFormat::Csv => {
            let mut out = csv_header(cfg, "eps,max_err,rms_err");
            for r in rows {
                out.push_str(&format!("{},{},{}\n", f(r.eps), f(r.max_err), f(r.rms_err)));
            }
            out.push_str(&format!("# comparison,{what}\n# fitted_slope,{slope}\n"));
            out
        }
        OutputFormat::Json => json_envelope(
            cfg,
            json!({
                "comparison": what,
                "rows": rows
                    .iter()
                    .map(|r| json!({ "eps": r.eps, "max_err": r.max_err, "rms_err": r.rms_err }))
                    .collect::<Vec<_>>(),
                "fitted_slope": slope,
            }),
        ),
    }
}

fn fit_or_exact(rows: &[SweepRow]) -> String {
    if rows.iter().all(|r| r.max_err <= EXACT_FLOOR) {
        "exact".to_string()
    } else {
        match loglog_slope(&rows.iter().map(|r| (r.eps, r.max_err)).collect::<Vec<_>>()) {
            Some(s) => format!("{s:.4}"),
            None => "undefined".to_string(),
        }
    }
}

/// Convergence sweep of the non-stiff solver against the exact solution
/// when the problem has one, else against the stiff reference.
pub fn cmd_convergence(cfg: &ExperimentConfig) -> Result<String> {
    if cfg.eps.len() < 3 {
        return Err(Error::usage("convergence needs at least three eps values"));
    }
    let p = cfg.build_problem()?;
    let points = cfg.evaluation_points(&p)?;
    let integ = cfg.integrator();
    let pool = install_pool(cfg.workers)?;
    let t = cfg.t_final;
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let errs: Vec<f64> = if p.omega_is_constant {
            let split = split_for(&p, cfg, eps)?;
            pool.install(|| {
                points
                    .par_iter()
                    .map(|y| -> Result<f64> {
                        let (got, _) = diagonal_eval(&split, &p.f0, t, y, &integ)?;
                        let want = match &p.exact_solution {
                            Some(e) => e(t, y, eps),
                            None => {
                                solve_reference(&p.omega, &p.g, &p.k, &p.f0, eps, t, y, &integ)?.0
                            }
                        };
                        Ok(got - want)
                    })
                    .collect::<Result<Vec<f64>>>()
            })?
        } else {
            let ap = p.augmented()?;
            let pairs = reconstruction_pairs(
                &ap,
                cfg.order,
                eps,
                &cfg.averaging(),
                &points[..points.len().min(2)].to_vec(),
            )?;
            pool.install(|| {
                points
                    .par_iter()
                    .map(|y| -> Result<f64> {
                        let r = reconstruct(&pairs, &p.f0, t, y, eps, &integ, None)?;
                        let want = match &p.exact_solution {
                            Some(e) => e(t, y, eps),
                            None => {
                                solve_reference(&p.omega, &p.g, &p.k, &p.f0, eps, t, y, &integ)?.0
                            }
                        };
                        Ok(r.value - want)
                    })
                    .collect::<Result<Vec<f64>>>()
            })?
        };
        let (max_err, rms_err) = max_and_rms(&errs);
        rows.push(SweepRow { eps, max_err, rms_err });
    }
    let slope = fit_or_exact(&rows);
    let what = if p.exact_solution.is_some() { "exact solution" } else { "stiff reference" };
    Ok(render_sweep(cfg, &rows, &slope, what))
}

/// Commutator-defect diagnostics of the truncated pair over eps.
pub fn cmd_defect(cfg: &ExperimentConfig) -> Result<String> {
    let p = cfg.build_problem()?;
    let points = cfg.evaluation_points(&p)?;
    let ap = p.augmented()?;
    let mut bracket_rows = Vec::new();
    let mut source_rows = Vec::new();
    for &eps in &cfg.eps {
        let split = augmented_split(&ap, cfg.order, eps, &cfg.averaging())?;
        let pair = commuting_pair(&split, &points[..points.len().min(2)].to_vec())?;
        let mut b = 0.0_f64;
        let mut s = 0.0_f64;
        for y in &points {
            b = b.max(pair.bracket_defect(y)?);
            s = s.max(pair.source_defect(y)?);
        }
        bracket_rows.push((eps, b));
        source_rows.push((eps, s));
    }
    let fit = |rows: &[(f64, f64)]| {
        if rows.iter().all(|r| r.1 <= EXACT_FLOOR) {
            "exact".to_string()
        } else {
            match loglog_slope(rows) {
                Some(s) => format!("{s:.4}"),
                None => "undefined".to_string(),
            }
        }
    };
    let bslope = fit(&bracket_rows);
    let sslope = fit(&source_rows);
    Ok(match cfg.format {
        OutputFormat::Csv => {
            let mut out = csv_header(cfg, "eps,bracket_defect,source_defect");
            for ((eps, b), (_, s)) in bracket_rows.iter().zip(&source_rows) {
                out.push_str(&format!("{},{},{}\n", f(*eps), f(*b), f(*s)));
            }
            out.push_str(&format!("# bracket_slope,{bslope}\n# source_slope,{sslope}\n"));
            out
        }
        OutputFormat::Json => json_envelope(
            cfg,
            json!({
                "rows": bracket_rows
                    .iter()
                    .zip(&source_rows)
                    .map(|((eps, b), (_, s))| json!({
                        "eps": eps, "bracket_defect": b, "source_defect": s
                    }))
                    .collect::<Vec<_>>(),
                "bracket_slope": bslope,
                "source_slope": sslope,
            }),
        ),
    })
}

/// Reconstruction table: recovered value against the reference, with the
/// phase diagnostics, at every (eps, point).
pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<String> {
    let p = cfg.build_problem()?;
    if p.omega_is_constant {
        return Err(Error::usage(format!(
            "problem '{}' has constant frequency; use the convergence command \
             (diagonal evaluation) instead",
            p.name
        )));
    }
    let points = cfg.evaluation_points(&p)?;
    let integ = cfg.integrator();
    let ap = p.augmented()?;
    let pool = install_pool(cfg.workers)?;
    let t = cfg.t_final;
    let mut all = Vec::new();
    for &eps in &cfg.eps {
        let pairs = reconstruction_pairs(
            &ap,
            cfg.order,
            eps,
            &cfg.averaging(),
            &points[..points.len().min(2)].to_vec(),
        )?;
        let rows: Vec<(f64, f64, f64, f64)> = pool.install(|| {
            points
                .par_iter()
                .map(|y| -> Result<(f64, f64, f64, f64)> {
                    let r = reconstruct(&pairs, &p.f0, t, y, eps, &integ, None)?;
                    let want = match &p.exact_solution {
                        Some(e) => e(t, y, eps),
                        None => {
                            solve_reference(&p.omega, &p.g, &p.k, &p.f0, eps, t, y, &integ)?.0
                        }
                    };
                    Ok((r.value, want, r.tau, r.s_residual))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (i, row) in rows.iter().enumerate() {
            all.push((eps, i, *row));
        }
    }
    Ok(match cfg.format {
        OutputFormat::Csv => {
            let mut out =
                csv_header(cfg, "eps,point_index,value,reference,error,tau,s_residual");
            for (eps, i, (v, w, tau, res)) in &all {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    f(*eps),
                    i,
                    f(*v),
                    f(*w),
                    f(v - w),
                    f(*tau),
                    f(*res)
                ));
            }
            out
        }
        OutputFormat::Json => json_envelope(
            cfg,
            json!(all
                .iter()
                .map(|(eps, i, (v, w, tau, res))| json!({
                    "eps": eps,
                    "point_index": i,
                    "value": v,
                    "reference": w,
                    "error": v - w,
                    "tau": tau,
                    "s_residual": res,
                }))
                .collect::<Vec<_>>()),
        ),
    })
}

/// The assembled averaged terms for one problem at the configured order,
/// compared against the iterated-integral oracle (diagnostic command used
/// by the route-agreement checks).
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<String> {
    let p = cfg.build_problem()?;
    let (flow, field) = if p.omega_is_constant {
        (p.flow(), p.k.clone())
    } else {
        let ap = p.augmented()?;
        (ap.flow.clone(), ap.kcheck.clone())
    };
    let modes = ModeSet::new(flow.clone(), field.clone(), cfg.averaging())?;
    let mut points = cfg.evaluation_points(&p)?;
    if !p.omega_is_constant {
        for y in points.iter_mut() {
            y.insert(0, 0.0);
        }
    }
    let mut rows = Vec::new();
    for y in &points {
        let mut per_r = Vec::new();
        for r in 1..=(cfg.order + 1).min(3) {
            let explicit = assemble_explicit(&modes, r)?.eval(y)?;
            let oracle = strobe::averaging::integral_oracle(&flow, &field, r, y, None, false)?;
            let diff = explicit
                .iter()
                .zip(&oracle)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            per_r.push(json!({ "r": r, "explicit": explicit, "integral": oracle, "max_diff": diff }));
        }
        rows.push(json!({ "point": y, "terms": per_r }));
    }
    Ok(json_envelope(cfg, json!(rows)))
}
