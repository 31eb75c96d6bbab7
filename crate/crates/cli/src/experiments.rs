//! Experiment dispatch: runs the configured experiment, writes CSV
//! results and a JSON run manifest.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polarmap::mapping::{selection_to_permutation_at, Permutation, Selection};
use polarmap::ofdm::{run_link_sim, run_sorted_sim, PilotScheme, SnrSweep, SweepPoint};
use polarmap::polar::PolarCode;
use polarmap::search::{
    brute_force_select, optimize_permutation, surrogate_select, table_gain, Point, SearchBudget,
    SearchOutcome, SelectionResult,
};

use crate::config::{ExperimentConfig, ExperimentKind};

/// Versions recorded in every manifest.
#[derive(Serialize)]
struct Versions {
    #[serde(rename = "polarmap")]
    core: &'static str,
    #[serde(rename = "polarmap-cli")]
    cli: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config: &'a ExperimentConfig,
    config_key_values: String,
    versions: Versions,
    positions_convention: &'static str,
    wall_time_s: f64,
    outputs: Vec<String>,
    summary: serde_json::Value,
}

/// Runs one experiment; returns the files written (CSV first, manifest
/// last).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let (mut files, summary) = match cfg.kind {
        ExperimentKind::BruteForce => run_brute_force(cfg, cfg.v.expect("validated"))?,
        ExperimentKind::Fig1Table => run_brute_force(cfg, 1)?,
        ExperimentKind::SurrogateSelect => run_surrogate_select(cfg)?,
        ExperimentKind::SurrogatePermute => run_surrogate_permute(cfg)?,
        ExperimentKind::LinkSim => run_link(cfg)?,
        ExperimentKind::SortedSim => run_sorted(cfg)?,
    };

    let manifest = Manifest {
        experiment: cfg.kind.as_key(),
        config: cfg,
        config_key_values: cfg.to_key_values(),
        versions: Versions {
            core: polarmap::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        },
        positions_convention: "1-based in files and reports, 0-based internally",
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: files.iter().map(|f| f.display().to_string()).collect(),
        summary,
    };
    let manifest_path = with_suffix(&cfg.out, ".manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).context("serializing manifest")?,
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;
    files.push(manifest_path);
    Ok(files)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn one_based(sel: &[usize]) -> String {
    sel.iter()
        .map(|x| (x + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `candidate,ber,errors,frames,seed` rows; candidates are quoted
/// comma-separated 1-based positions.
fn write_search_csv(
    path: &Path,
    rows: impl Iterator<Item = (String, f64, u64, u64)>,
    seed: u64,
) -> Result<()> {
    let mut out = String::from("candidate,ber,errors,frames,seed\n");
    for (candidate, ber, errors, frames) in rows {
        out.push_str(&format!("\"{candidate}\",{ber},{errors},{frames},{seed}\n"));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn selection_rows<'a>(
    table: &'a [SelectionResult],
) -> impl Iterator<Item = (String, f64, u64, u64)> + 'a {
    table.iter().map(|row| {
        (
            one_based(row.selection.as_slice()),
            row.estimate.ber,
            row.estimate.bit_errors,
            row.estimate.bits_tested,
        )
    })
}

fn run_brute_force(cfg: &ExperimentConfig, v: usize) -> Result<(Vec<PathBuf>, serde_json::Value)> {
    let budget = SearchBudget::new(u64::MAX, cfg.frames, cfg.seed)
        .map_err(|e| anyhow!("{e}"))?;
    let (best, table) =
        brute_force_select(cfg.n, cfg.k, v, cfg.p.expect("validated"), &budget, cfg.rule)?;
    write_search_csv(&cfg.out, selection_rows(&table), budget.evaluation_seed())?;
    let best_row = table
        .iter()
        .find(|r| r.selection == best)
        .expect("best selection appears in its own table");
    let summary = serde_json::json!({
        "best_candidate": one_based(best.as_slice()),
        "best_ber": best_row.estimate.ber,
        "worst_best_gain": table_gain(&table),
        "evaluations": table.len(),
    });
    Ok((vec![cfg.out.clone()], summary))
}

fn outcome_rows<'a>(
    outcome: &'a SearchOutcome,
) -> impl Iterator<Item = (String, f64, u64, u64)> + 'a {
    outcome.log.iter().map(|e| {
        let candidate = match &e.point {
            Point::Selection(s) => one_based(s.as_slice()),
            Point::Permutation(p) => one_based(p.as_slice()),
        };
        (candidate, e.value, 0, 0)
    })
}

fn search_budget(cfg: &ExperimentConfig) -> Result<SearchBudget> {
    SearchBudget::new(
        cfg.max_evals.expect("validated"),
        cfg.frames_per_eval,
        cfg.seed,
    )
    .map_err(|e| anyhow!("{e}"))
}

fn run_surrogate_select(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, serde_json::Value)> {
    let budget = search_budget(cfg)?;
    let (best, outcome) = surrogate_select(
        cfg.n,
        cfg.k,
        cfg.v.expect("validated"),
        cfg.p.expect("validated"),
        &budget,
        cfg.rule,
    )?;
    write_eval_log(cfg, &budget, &outcome)?;
    let best_path = with_suffix(&cfg.out, ".best.txt");
    std::fs::write(&best_path, format!("{}\n", one_based(best.as_slice())))?;
    let summary = serde_json::json!({
        "best_candidate": one_based(best.as_slice()),
        "best_ber": outcome.best_value,
        "evaluations": outcome.log.len(),
    });
    Ok((vec![cfg.out.clone(), best_path], summary))
}

fn run_surrogate_permute(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, serde_json::Value)> {
    let budget = search_budget(cfg)?;
    let (best, outcome) = optimize_permutation(cfg.n, cfg.k, &budget, cfg.rule)?;
    write_eval_log(cfg, &budget, &outcome)?;
    let best_path = with_suffix(&cfg.out, ".best.txt");
    std::fs::write(&best_path, format!("{}\n", one_based(best.as_slice())))?;
    let summary = serde_json::json!({
        "best_candidate": one_based(best.as_slice()),
        "best_ber": outcome.best_value,
        "evaluations": outcome.log.len(),
    });
    Ok((vec![cfg.out.clone(), best_path], summary))
}

fn write_eval_log(
    cfg: &ExperimentConfig,
    budget: &SearchBudget,
    outcome: &SearchOutcome,
) -> Result<()> {
    // objective evaluations all use the common-random-numbers seed and
    // frames_per_eval frames
    let frames = budget.frames_per_evaluation * cfg.k as u64;
    let rows = outcome.log.iter().map(|e| {
        let candidate = match &e.point {
            Point::Selection(s) => one_based(s.as_slice()),
            Point::Permutation(p) => one_based(p.as_slice()),
        };
        let errors = (e.value * frames as f64).round() as u64;
        (candidate, e.value, errors, frames)
    });
    write_search_csv(&cfg.out, rows, budget.evaluation_seed())
}

/// `snr_db,ber,errors,frames,mapping_label` rows.
fn write_sweep_csv(path: &Path, blocks: &[(&str, Vec<SweepPoint>)]) -> Result<()> {
    let mut out = String::from("snr_db,ber,errors,frames,mapping_label\n");
    for (label, points) in blocks {
        for p in points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.snr_db, p.estimate.ber, p.estimate.bit_errors, p.estimate.bits_tested, label
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a permutation file: comma-separated 1-based positions.
pub fn read_permutation(path: &Path, n: usize) -> Result<Permutation> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading permutation {}", path.display()))?;
    let entries: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("`{t}`: {e}")))
        .collect::<Result<_>>()?;
    if entries.len() != n {
        bail!(
            "permutation in {} has {} entries, expected {n}",
            path.display(),
            entries.len()
        );
    }
    if entries.iter().any(|&x| x == 0 || x > n) {
        bail!("permutation entries are 1-based positions in 1..={n}");
    }
    Permutation::new(entries.into_iter().map(|x| x - 1).collect()).map_err(|e| anyhow!("{e}"))
}

fn fading_model(cfg: &ExperimentConfig) -> Result<polarmap::channels::FadingModel> {
    // per-point SNR overrides the model's own; any positive placeholder works
    polarmap::channels::FadingModel::new(cfg.fd, cfg.sigma_h_sq, 1.0, cfg.n)
        .map_err(|e| anyhow!("{e}"))
}

fn run_link(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, serde_json::Value)> {
    let code = PolarCode::new(cfg.n, cfg.k)?;
    let v = cfg.v.expect("validated");
    let scheme = PilotScheme::new(cfg.n, v, cfg.pilot_spacing)?;
    let model = fading_model(cfg)?;
    let sweep = SnrSweep::new(cfg.snr_db_list.clone(), cfg.frames)?;

    let perm = match (&cfg.selection, &cfg.perm_file) {
        (Some(_), Some(_)) => bail!("give either `selection` or `perm_file`, not both"),
        (Some(sel), None) => {
            let selection = Selection::new(sel.clone()).map_err(|e| anyhow!("{e}"))?;
            if selection.len() != scheme.count() {
                bail!(
                    "selection has {} entries but the pilot scheme reserves {}",
                    selection.len(),
                    scheme.count()
                );
            }
            // route the chosen coded bits onto the pilot subcarriers,
            // where estimates are most reliable
            Some(selection_to_permutation_at(
                &selection,
                scheme.positions(),
                cfg.n,
            )?)
        }
        (None, Some(path)) => Some(read_permutation(path, cfg.n)?),
        (None, None) => None,
    };

    let unmapped = run_link_sim(
        &code,
        None,
        &model,
        &scheme,
        cfg.estimator,
        &sweep,
        cfg.seed,
        cfg.rule,
    )?;
    let mut blocks = Vec::new();
    let mut summary = serde_json::json!({
        "estimator": format!("{:?}", cfg.estimator),
        "pilots": scheme.count(),
    });
    if let Some(perm) = &perm {
        let mapped = run_link_sim(
            &code,
            Some(perm),
            &model,
            &scheme,
            cfg.estimator,
            &sweep,
            cfg.seed,
            cfg.rule,
        )?;
        let max_ratio = unmapped
            .iter()
            .zip(&mapped)
            .map(|(u, m)| u.estimate.ber / m.estimate.ber.max(1e-300))
            .fold(0.0f64, f64::max);
        summary["max_unmapped_over_mapped"] = serde_json::json!(max_ratio);
        blocks.push(("mapped", mapped));
    }
    blocks.push(("unmapped", unmapped));
    write_sweep_csv(&cfg.out, &blocks)?;
    Ok((vec![cfg.out.clone()], summary))
}

fn run_sorted(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, serde_json::Value)> {
    let code = PolarCode::new(cfg.n, cfg.k)?;
    let model = fading_model(cfg)?;
    let sweep = SnrSweep::new(cfg.snr_db_list.clone(), cfg.frames)?;
    let good = read_permutation(cfg.perm_file.as_ref().expect("validated"), cfg.n)?;
    let bad = good.reversed();
    let none = Permutation::identity(cfg.n);

    let blocks = vec![
        (
            "good",
            run_sorted_sim(&code, &good, &model, &sweep, cfg.seed, cfg.rule)?,
        ),
        (
            "bad",
            run_sorted_sim(&code, &bad, &model, &sweep, cfg.seed, cfg.rule)?,
        ),
        (
            "none",
            run_sorted_sim(&code, &none, &model, &sweep, cfg.seed, cfg.rule)?,
        ),
    ];
    write_sweep_csv(&cfg.out, &blocks)?;
    let summary = serde_json::json!({
        "labels": ["good", "bad", "none"],
    });
    Ok((vec![cfg.out.clone()], summary))
}
