//! Runs a resolved experiment and writes `results.json`, `data.csv` and
//! `plot.svg`.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Experiment, Resolved};
use super::svg::{line_plot, Series};
use crate::attractor::{code, graph_sample, omega_limit_sample, spine, target_set};
use crate::error::{Error, Result};
use crate::exact::{point_to_f64, to_f64};
use crate::fiber::FiberSet;
use crate::measures::{
    convergence_curve, pointwise_sync_curve, sample_with_marginal, CurveConfig, DISCARD_LIMIT,
};
use crate::rng::child_seed;
use crate::splitting::{check_split, decay_estimate, separation_sweep};

/// Everything an experiment produces.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plot: Option<String>,
    /// Set when a convergence budget ran out; outputs are still written.
    pub budget_failure: Option<String>,
}

impl Outcome {
    fn new(summary: Value, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Outcome {
            summary,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
            plot: None,
            budget_failure: None,
        }
    }
}

/// Exit status for a library error: budget and convergence failures are 3,
/// everything else is a rejected input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. }
        | Error::DiscardFractionTooHigh { .. }
        | Error::SolverStalled(_)
        | Error::BudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn set_rows(set: &FiberSet) -> (Vec<String>, Vec<Vec<String>>) {
    let comps = set.to_f64();
    let dim = comps.first().map_or(1, Vec::len);
    let mut header = vec!["component".to_string()];
    for c in 1..=dim {
        header.push(format!("lo_{c}"));
        header.push(format!("hi_{c}"));
    }
    let rows = comps
        .iter()
        .enumerate()
        .map(|(i, sides)| {
            let mut row = vec![i.to_string()];
            for &(lo, hi) in sides {
                row.push(num(lo));
                row.push(num(hi));
            }
            row
        })
        .collect();
    (header, rows)
}

fn set_outcome(summary: Value, set: &FiberSet) -> Outcome {
    let (header, rows) = set_rows(set);
    Outcome {
        summary,
        header,
        rows,
        plot: None,
        budget_failure: None,
    }
}

pub fn execute(r: &Resolved) -> Result<Outcome> {
    let sys = &r.zoo.system;
    let seed = r.seed;
    match &r.experiment {
        Experiment::Code {
            theta,
            max_depth,
            tol,
        } => {
            let c = code(theta, sys, *max_depth, *tol);
            let summary = json!({
                "converged": c.is_converged(),
                "point": c.point_f64(),
                "point_exact": c.point.as_ref().map(|p| p.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
                "depth_used": c.depth_used,
                "final_diameter": c.final_diameter,
                "theta": theta.to_string(),
            });
            let point = c.point_f64();
            let rows = c
                .enclosure
                .sides
                .iter()
                .enumerate()
                .map(|(i, side)| {
                    let (lo, hi) = side.to_f64();
                    let p = point.as_ref().map_or(String::new(), |p| num(p[i]));
                    vec![(i + 1).to_string(), p, num(lo), num(hi)]
                })
                .collect();
            let mut out = Outcome::new(
                summary,
                &["coordinate", "point", "enclosure_lo", "enclosure_hi"],
                rows,
            );
            if !c.is_converged() {
                out.budget_failure = Some(
                    Error::NotConverged {
                        depth: c.depth_used,
                        diameter: c.final_diameter,
                    }
                    .to_string(),
                );
            }
            Ok(out)
        }
        Experiment::Spine {
            theta,
            depth,
            over_target,
            target_iter,
            target_tol,
        } => {
            let (base, target_summary) = if *over_target {
                let t = target_set(sys, *target_iter, *target_tol);
                let s = json!({
                    "method": t.method,
                    "iterations": t.iterations,
                    "converged": t.converged,
                    "components": t.set.component_count(),
                });
                (t.set, s)
            } else {
                (sys.full_set(), Value::Null)
            };
            let s = spine(theta, sys, &base, *depth);
            let summary = json!({
                "theta": theta.to_string(),
                "depth": depth,
                "component_count": s.component_count(),
                "diameter": to_f64(&s.diameter()),
                "target": target_summary,
            });
            Ok(set_outcome(summary, &s))
        }
        Experiment::Target { max_iter, tol } => {
            let t = target_set(sys, *max_iter, *tol);
            let summary = json!({
                "method": t.method,
                "iterations": t.iterations,
                "last_step": t.last_step,
                "converged": t.converged,
                "resolution": t.resolution,
                "seed_word": t.seed_word,
                "component_count": t.set.component_count(),
                "diameter": to_f64(&t.set.diameter()),
            });
            let mut out = set_outcome(summary, &t.set);
            if !t.converged {
                out.budget_failure = Some(format!(
                    "target set did not converge in {max_iter} iterations"
                ));
            }
            Ok(out)
        }
        Experiment::SplitCheck {
            word_a,
            word_b,
            sweep_words,
            sweep_max_len,
        } => {
            let cert = check_split(sys, word_a, word_b)?;
            let sweep = separation_sweep(sys, &cert, *sweep_words, *sweep_max_len, seed);
            let gaps = cert.gaps_f64();
            let summary = json!({
                "word_a": word_a,
                "word_b": word_b,
                "gaps": gaps,
                "gaps_exact": cert.gaps.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
                "monotone": cert.monotone,
                "sweep": sweep,
            });
            let (ha, hb) = (cert.images.0.hull(), cert.images.1.hull());
            let rows = gaps
                .iter()
                .enumerate()
                .map(|(c, g)| {
                    let side =
                        |h: &Option<crate::fiber::Cuboid>| h.as_ref().map(|b| b.sides[c].to_f64());
                    let (a, b) = (side(&ha).unwrap_or_default(), side(&hb).unwrap_or_default());
                    vec![
                        (c + 1).to_string(),
                        num(a.0),
                        num(a.1),
                        num(b.0),
                        num(b.1),
                        num(*g),
                    ]
                })
                .collect();
            Ok(Outcome::new(
                summary,
                &["coordinate", "a_lo", "a_hi", "b_lo", "b_hi", "gap"],
                rows,
            ))
        }
        Experiment::Decay { depths, n_samples } => {
            let d = decay_estimate(sys, depths, *n_samples, seed)?;
            let rows = (0..d.depths.len())
                .map(|i| {
                    vec![
                        d.depths[i].to_string(),
                        num(d.mean_diams[i]),
                        num(d.stderrs[i]),
                    ]
                })
                .collect();
            let points = d
                .depths
                .iter()
                .zip(&d.mean_diams)
                .map(|(&n, &m)| (n as f64, m))
                .collect();
            let mut out = Outcome::new(
                serde_json::to_value(&d).expect("serialisable"),
                &["depth", "mean", "stderr"],
                rows,
            );
            out.plot = Some(line_plot(
                "Mean backward-image diameter",
                "depth n",
                "mean diameter",
                &[Series {
                    label: "mean diameter",
                    points,
                }],
                true,
            ));
            Ok(out)
        }
        Experiment::WassersteinCurve {
            n_atoms,
            law,
            depths,
            word_length,
            base_depth,
            tol,
            reference,
        } => {
            let mu0 = sample_with_marginal(sys, *n_atoms, law, *word_length, seed)?;
            let cfg = CurveConfig {
                depths: depths.clone(),
                word_length: *word_length,
                base_depth: *base_depth,
                tol: *tol,
                seed: child_seed(seed, 1),
                reference: *reference,
            };
            let curve = convergence_curve(sys, &mu0, &cfg)?;
            let rows = curve
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        num(p.distance),
                        num(p.error_bound),
                        p.reference_atoms.to_string(),
                    ]
                })
                .collect();
            let summary = json!({
                "atoms": mu0.len(),
                "reference": reference,
                "curve": curve,
                "final_distance": curve.last().map(|p| p.distance),
            });
            let mut out = Outcome::new(
                summary,
                &["n", "distance", "error_bound", "reference_atoms"],
                rows,
            );
            out.plot = Some(line_plot(
                "Wasserstein distance to the graph measure",
                "n",
                "distance",
                &[
                    Series {
                        label: "distance",
                        points: curve.iter().map(|p| (p.n as f64, p.distance)).collect(),
                    },
                    Series {
                        label: "error bound",
                        points: curve.iter().map(|p| (p.n as f64, p.error_bound)).collect(),
                    },
                ],
                true,
            ));
            Ok(out)
        }
        Experiment::SyncCurve {
            theta,
            x,
            depths,
            max_depth,
            tol,
        } => {
            let curve = pointwise_sync_curve(sys, theta, x, depths, *max_depth, *tol)?;
            let rows = curve
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.distance.map_or(String::new(), num),
                        p.coding_depth.to_string(),
                    ]
                })
                .collect();
            let unconverged: Vec<usize> = curve
                .iter()
                .filter(|p| p.distance.is_none())
                .map(|p| p.n)
                .collect();
            let summary = json!({ "theta": theta.to_string(), "curve": curve, "unconverged_depths": unconverged });
            let mut out = Outcome::new(summary, &["n", "distance", "coding_depth"], rows);
            out.plot = Some(line_plot(
                "Distance to the graph along one orbit",
                "n",
                "fiber distance",
                &[Series {
                    label: "distance",
                    points: curve
                        .iter()
                        .filter_map(|p| p.distance.map(|d| (p.n as f64, d)))
                        .collect(),
                }],
                true,
            ));
            if !unconverged.is_empty() {
                out.budget_failure =
                    Some(format!("coding did not converge at depths {unconverged:?}"));
            }
            Ok(out)
        }
        Experiment::Omega {
            theta,
            x,
            burn_in,
            n_iter,
            n_atoms,
            word_length,
            tol,
            cylinder_depth,
            threshold,
        } => {
            let cloud = omega_limit_sample(theta, x, sys, *burn_in, *n_iter);
            let index = cloud.cylinder_index(*cylinder_depth);
            let graph = graph_sample(sys, *n_atoms, *word_length, seed, *tol);
            let mut rows = Vec::new();
            let mut matched = Vec::new();
            for (i, atom) in graph.pairs.iter().enumerate() {
                let p = point_to_f64(&atom.point);
                let nearest = index.nearest(&cloud, &atom.window, &p);
                if let Some(d) = nearest {
                    matched.push(d);
                }
                rows.push(vec![
                    i.to_string(),
                    index.hits(&atom.window).to_string(),
                    nearest.map_or(String::new(), num),
                ]);
            }
            let worst = matched.iter().copied().fold(0.0, f64::max);
            let within = matched.iter().filter(|&&d| d <= *threshold).count();
            let summary = json!({
                "graph_atoms": graph.pairs.len(),
                "not_converged": graph.not_converged,
                "matched": matched.len(),
                "within_threshold": within,
                "threshold": threshold,
                "max_nearest_distance": worst,
                "all_matched_within": !matched.is_empty() && within == matched.len(),
                "orbit_points": cloud.points.len(),
            });
            Ok(Outcome::new(
                summary,
                &["atom", "cylinder_hits", "nearest_distance"],
                rows,
            ))
        }
        Experiment::GraphSample {
            n_points,
            word_length,
            tol,
        } => {
            let g = graph_sample(sys, *n_points, *word_length, seed, *tol);
            let discarded = 1.0 - g.convergence_fraction();
            let dim = sys.dim();
            let mut header = vec!["index".to_string(), "window".to_string()];
            header.extend((1..=dim).map(|c| format!("x_{c}")));
            header.push("residual".into());
            let rows = g
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut row = vec![i.to_string(), p.window.to_string()];
                    row.extend(point_to_f64(&p.point).into_iter().map(num));
                    row.push(num(p.residual));
                    row
                })
                .collect();
            let summary = json!({
                "n_points": g.n_points,
                "converged": g.pairs.len(),
                "not_converged": g.not_converged,
                "discarded_fraction": discarded,
                "max_residual": g.max_residual(),
            });
            let budget_failure = (discarded > DISCARD_LIMIT).then(|| {
                Error::DiscardFractionTooHigh {
                    fraction: discarded,
                    limit: DISCARD_LIMIT,
                }
                .to_string()
            });
            Ok(Outcome {
                summary,
                header,
                rows,
                plot: None,
                budget_failure,
            })
        }
    }
}

/// SHA-256 of the canonical (sorted-key, compact) JSON of the resolved config.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(
        serde_json::to_string(config)
            .expect("serialisable")
            .as_bytes(),
    );
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn results_json(r: &Resolved, outcome: &Outcome) -> Value {
    json!({
        "experiment": r.kind,
        "system": r.zoo.name,
        "summary": outcome.summary,
        "status": if outcome.budget_failure.is_some() { "budget_exceeded" } else { "ok" },
        "failure": outcome.budget_failure,
        "provenance": {
            "config_hash": config_hash(&r.config),
            "seed": r.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "config": r.config,
        },
    })
}

pub fn write_outputs(r: &Resolved, outcome: &Outcome, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&results_json(r, outcome)).expect("serialisable");
    text.push('\n');
    fs::write(dir.join("results.json"), text)?;
    let mut w = csv::Writer::from_path(dir.join("data.csv"))?;
    w.write_record(&outcome.header)?;
    for row in &outcome.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    if let Some(svg) = &outcome.plot {
        fs::write(dir.join("plot.svg"), svg)?;
    }
    Ok(())
}
