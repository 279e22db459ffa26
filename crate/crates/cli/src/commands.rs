use anyhow::Result;

use metatune::meta::run_meta_all;
use metatune::metrics::evaluate_rows;
use metatune::tuning::{actual_grid, evaluation_split};
use metatune::{
    cochran_q, friedman, run_tuning, train_forest, ConfigPerformance, ImpureLeafPolicy, Probe, TechniqueId, TestResult,
    TuningReport,
};

use crate::manifest::write_report;
use crate::{Outcome, RunContext};

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Column label for a nominal confidence: `NC90`, `NC99.5`.
pub(crate) fn nc_label(nc: f64) -> String {
    let pct = (nc * 1e6).round() / 1e4;
    format!("NC{pct}")
}

fn test_cells(t: &TestResult) -> Vec<String> {
    vec![
        num(t.statistic),
        t.df.to_string(),
        num(t.p_value),
        num(t.tie_correction),
        t.significant.to_string(),
        t.degenerate.to_string(),
    ]
}

const TEST_COLUMNS: [&str; 6] = ["statistic", "df", "p_value", "tie_correction", "significant", "degenerate"];

fn flagged(cells: &[ConfigPerformance]) -> usize {
    cells.iter().map(|c| c.flagged_points).sum()
}

fn percent_reliable(cells: &[ConfigPerformance]) -> f64 {
    100.0 * cells.iter().filter(|c| c.usable_reliable()).count() as f64 / cells.len() as f64
}

fn grid_rows(ctx: &RunContext) -> Result<(Vec<Vec<ConfigPerformance>>, usize)> {
    let (train, test) = evaluation_split(&ctx.data)?;
    let g = actual_grid(&train, &test, &ctx.ncs, &ctx.settings, Probe::none())?;
    let warnings = g.grid.iter().map(|c| flagged(c)).sum();
    Ok((g.grid, warnings))
}

pub(crate) fn coverage(ctx: &RunContext) -> Result<Outcome> {
    let (grid, warnings) = grid_rows(ctx)?;
    let mut rows = Vec::new();
    let mut tests = Vec::new();
    for cells in &grid {
        for c in cells {
            rows.push(vec![
                num(c.nc),
                num(c.mtry),
                num(c.coverage),
                c.reliable.to_string(),
                c.usable.to_string(),
                c.flagged_points.to_string(),
            ]);
        }
        let matrix: Vec<Vec<bool>> = (0..cells[0].point_coverage.len())
            .map(|i| cells.iter().map(|c| c.point_coverage[i]).collect())
            .collect();
        let mut r = vec![num(cells[0].nc), num(percent_reliable(cells))];
        r.extend(test_cells(&cochran_q(&matrix)?));
        tests.push(r);
    }
    let m = &ctx.manifest;
    let mut tcols = vec!["nc", "percent_reliable"];
    tcols.extend(TEST_COLUMNS);
    let files = vec![
        write_report(
            &ctx.out,
            "coverage.csv",
            m,
            &["one row per (nc, mtry); coverage on the evaluation test third"],
            &["nc", "mtry", "coverage", "reliable", "usable", "flagged_points"],
            &rows,
        )?,
        write_report(
            &ctx.out,
            "coverage_tests.csv",
            m,
            &["Cochran's Q across grid configurations on point coverage; alpha 0.05"],
            &tcols,
            &tests,
        )?,
    ];
    Ok(Outcome { files, warnings })
}

pub(crate) fn width(ctx: &RunContext) -> Result<Outcome> {
    let (grid, warnings) = grid_rows(ctx)?;
    let mut rows = Vec::new();
    let mut tests = Vec::new();
    for cells in &grid {
        for c in cells {
            rows.push(vec![
                num(c.nc),
                num(c.mtry),
                num(c.mean_width),
                c.reliable.to_string(),
                c.usable.to_string(),
                c.flagged_points.to_string(),
            ]);
        }
        let matrix: Vec<Vec<f64>> = (0..cells[0].point_width.len())
            .map(|i| cells.iter().map(|c| c.point_width[i]).collect())
            .collect();
        let mut r = vec![num(cells[0].nc), num(percent_reliable(cells))];
        r.extend(test_cells(&friedman(&matrix)?));
        tests.push(r);
    }
    let m = &ctx.manifest;
    let mut tcols = vec!["nc", "percent_reliable"];
    tcols.extend(TEST_COLUMNS);
    let files = vec![
        write_report(
            &ctx.out,
            "width.csv",
            m,
            &["one row per (nc, mtry); mean width on the evaluation test third"],
            &["nc", "mtry", "mean_width", "reliable", "usable", "flagged_points"],
            &rows,
        )?,
        write_report(
            &ctx.out,
            "width_tests.csv",
            m,
            &["Friedman's test across grid configurations on point width, tie-corrected; alpha 0.05"],
            &tcols,
            &tests,
        )?,
    ];
    Ok(Outcome { files, warnings })
}

fn tag_columns(first: &'static str, ncs: &[f64]) -> Vec<String> {
    let mut cols = vec!["project".to_string(), first.to_string()];
    cols.extend(ncs.iter().map(|&nc| nc_label(nc)));
    cols
}

fn report_warnings(report: &TuningReport) -> usize {
    let actual: usize = report.actual.grid.iter().map(|c| flagged(c)).sum();
    let predicted = report
        .predicted
        .iter()
        .flat_map(|p| &p.cells)
        .filter(|c| !c.usable)
        .count();
    actual + predicted
}

pub(crate) fn tune(ctx: &RunContext, techs: &[TechniqueId]) -> Result<Outcome> {
    let report = run_tuning(&ctx.data, techs, &ctx.ncs, &ctx.settings, Probe::none())?;
    let m = &ctx.manifest;

    let tags: Vec<Vec<String>> = report
        .outcomes
        .iter()
        .zip(techs)
        .map(|(row, t)| {
            let mut r = vec![ctx.project.clone(), t.label().to_string()];
            r.extend(row.iter().map(|o| o.tag.to_string()));
            r
        })
        .collect();

    let rq1: Vec<Vec<String>> = report
        .ncs
        .iter()
        .zip(&report.potential)
        .enumerate()
        .map(|(j, (&nc, (tag, test)))| {
            vec![
                ctx.project.clone(),
                num(nc),
                tag.to_string(),
                num(percent_reliable(&report.actual.grid[j])),
                report.actual.default[j].reliable.to_string(),
                num(report.actual.default[j].coverage),
                num(report.actual.default[j].mean_width),
                opt_num(test.map(|t| t.p_value)),
            ]
        })
        .collect();

    let mut selection = Vec::new();
    let mut detail = Vec::new();
    for row in &report.outcomes {
        for o in row {
            let j = report.actual.nc_index(o.nc).expect("nc present");
            selection.push(vec![
                ctx.project.clone(),
                o.technique.label().to_string(),
                num(o.nc),
                opt_num(o.selected_mtry),
                num(o.default_mtry),
                o.tag.to_string(),
                opt_num(o.comparison.map(|t| t.p_value)),
            ]);
            for (cell, actual) in o.predicted.iter().zip(&report.actual.grid[j]) {
                detail.push(vec![
                    o.technique.label().to_string(),
                    num(o.nc),
                    num(cell.mtry),
                    num(cell.predicted_coverage),
                    num(cell.predicted_mean_width),
                    cell.predicted_reliable.to_string(),
                    cell.usable.to_string(),
                    num(actual.coverage),
                    num(actual.mean_width),
                    actual.reliable.to_string(),
                    (o.selected_mtry == Some(cell.mtry)).to_string(),
                ]);
            }
        }
    }

    let tag_cols = tag_columns("technique", &ctx.ncs);
    let tag_cols: Vec<&str> = tag_cols.iter().map(String::as_str).collect();
    let files = vec![
        write_report(
            &ctx.out,
            "tune_tags.csv",
            m,
            &["technique benefit tags: DU SB APU PU (beneficial) NSD (neutral) NKU SW TU (counterproductive)"],
            &tag_cols,
            &tags,
        )?,
        write_report(
            &ctx.out,
            "tune_rq1.csv",
            m,
            &["potential benefit of tuning: DU SB AU NSB E; p_value of the default vs best narrower reliable width test"],
            &[
                "project",
                "nc",
                "tag",
                "percent_reliable",
                "default_reliable",
                "default_coverage",
                "default_mean_width",
                "p_value",
            ],
            &rq1,
        )?,
        write_report(
            &ctx.out,
            "tune_selection.csv",
            m,
            &["selected_mtry blank when every configuration is predicted unreliable"],
            &["project", "technique", "nc", "selected_mtry", "default_mtry", "tag", "p_value"],
            &selection,
        )?,
        write_report(
            &ctx.out,
            "tune_detail.csv",
            m,
            &["predicted (technique) against actual (evaluation test third) per grid cell"],
            &[
                "technique",
                "nc",
                "mtry",
                "predicted_coverage",
                "predicted_mean_width",
                "predicted_reliable",
                "usable",
                "actual_coverage",
                "actual_mean_width",
                "actual_reliable",
                "selected",
            ],
            &detail,
        )?,
    ];
    Ok(Outcome {
        files,
        warnings: report_warnings(&report),
    })
}

pub(crate) fn meta(ctx: &RunContext, techs: &[TechniqueId]) -> Result<Outcome> {
    let (outer, metas) = run_meta_all(&ctx.data, techs, &ctx.ncs, &ctx.settings, Probe::none())?;
    let mut tags = Vec::new();
    let mut provenance = Vec::new();
    let mut warnings = report_warnings(&outer);
    for mo in &metas {
        warnings += report_warnings(&mo.inner);
        let mut r = vec![ctx.project.clone(), mo.meta_technique.label().to_string()];
        r.extend(mo.choices.iter().map(|c| c.actual_tag.to_string()));
        tags.push(r);
        for c in &mo.choices {
            provenance.push(vec![
                ctx.project.clone(),
                mo.meta_technique.label().to_string(),
                num(c.nc),
                c.chosen_technique.label().to_string(),
                c.predicted_tag.to_string(),
                c.actual_tag.to_string(),
                opt_num(c.selected_mtry),
            ]);
        }
    }
    let cols = tag_columns("meta_technique", &ctx.ncs);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let files = vec![
        write_report(
            &ctx.out,
            "meta_tags.csv",
            &ctx.manifest,
            &["actual benefit of the composite technique chosen per nc; ties broken by canonical technique order"],
            &cols,
            &tags,
        )?,
        write_report(
            &ctx.out,
            "meta_provenance.csv",
            &ctx.manifest,
            &["predicted_tag comes from the inner holdout of the training two thirds"],
            &[
                "project",
                "meta_technique",
                "nc",
                "chosen_technique",
                "predicted_tag",
                "actual_tag",
                "selected_mtry",
            ],
            &provenance,
        )?,
    ];
    Ok(Outcome { files, warnings })
}

pub(crate) fn intervals(ctx: &RunContext, mtry: f64) -> Result<Outcome> {
    let (train, test) = evaluation_split(&ctx.data)?;
    let model = train_forest(&train, &ctx.settings.base.with_mtry(mtry))?;
    let all: Vec<usize> = (0..test.len()).collect();
    let perf = evaluate_rows(&model, &test, &all, &ctx.ncs)?;
    let mut rows = Vec::with_capacity(test.len());
    let mut warnings = 0;
    for (i, x) in test.rows().iter().enumerate() {
        let y = test.responses()[i];
        // Under the error policy an impure point is still reported, from the
        // pooled responses, and counted as a warning.
        let ivs = match model.intervals_for(x, &ctx.ncs) {
            Err(metatune::Error::ImpureLeaf) => {
                warnings += 1;
                model.intervals_with(x, &ctx.ncs, ImpureLeafPolicy::Pool)?
            }
            other => other?,
        };
        let narrowest = ivs
            .iter()
            .find(|iv| iv.contains(y))
            .map(|iv| nc_label(iv.nc))
            .unwrap_or_else(|| "none".into());
        let mut r = vec![
            i.to_string(),
            test.origin()[i].to_string(),
            num(y),
            num(ivs[0].point),
        ];
        for iv in &ivs {
            r.push(num(iv.lower));
            r.push(num(iv.upper));
        }
        r.push(narrowest);
        r.push(ivs.iter().any(|iv| iv.impure).to_string());
        rows.push(r);
    }
    let mut cols: Vec<String> = vec!["row".into(), "origin".into(), "actual".into(), "point".into()];
    for &nc in &ctx.ncs {
        let l = nc_label(nc);
        cols.push(format!("lower_{l}"));
        cols.push(format!("upper_{l}"));
    }
    cols.push("narrowest_covering".into());
    cols.push("impure".into());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();

    let summary: Vec<Vec<String>> = perf
        .iter()
        .map(|p| {
            vec![
                num(p.nc),
                p.covered_count().to_string(),
                p.point_coverage.len().to_string(),
                num(p.coverage),
                num(p.mean_width),
            ]
        })
        .collect();
    let files = vec![
        write_report(
            &ctx.out,
            "intervals.csv",
            &ctx.manifest,
            &["origin is the row's position after chronological ordering; narrowest_covering is none when no interval covers"],
            &cols,
            &rows,
        )?,
        write_report(
            &ctx.out,
            "intervals_summary.csv",
            &ctx.manifest,
            &[],
            &["nc", "covered", "total", "coverage", "mean_width"],
            &summary,
        )?,
    ];
    Ok(Outcome { files, warnings })
}

/// Confusion counts and error summary of one technique at one nc.
#[derive(Debug, Clone, PartialEq)]
pub struct Accuracy {
    pub cells: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub emmre: Option<f64>,
    pub zero_width_excluded: usize,
}

/// Actual reliability is the truth, predicted reliability the classifier;
/// EMMRE is the plain mean of `|predicted - actual| / actual` mean width over
/// cells with nonzero actual width.
pub fn accuracy(pairs: &[(bool, f64, bool, f64)]) -> Accuracy {
    let mut a = Accuracy {
        cells: pairs.len(),
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        precision: None,
        recall: None,
        f1: None,
        emmre: None,
        zero_width_excluded: 0,
    };
    let mut mre = Vec::new();
    for &(pred, pred_w, actual, actual_w) in pairs {
        match (pred, actual) {
            (true, true) => a.tp += 1,
            (true, false) => a.fp += 1,
            (false, true) => a.fn_ += 1,
            (false, false) => a.tn += 1,
        }
        if actual_w > 0.0 {
            mre.push((pred_w - actual_w).abs() / actual_w);
        } else {
            a.zero_width_excluded += 1;
        }
    }
    let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
    a.precision = ratio(a.tp, a.tp + a.fp);
    a.recall = ratio(a.tp, a.tp + a.fn_);
    a.f1 = match (a.precision, a.recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    if !mre.is_empty() {
        a.emmre = Some(mre.iter().sum::<f64>() / mre.len() as f64);
    }
    a
}

pub(crate) fn technique_accuracy(ctx: &RunContext, techs: &[TechniqueId]) -> Result<Outcome> {
    let report = run_tuning(&ctx.data, techs, &ctx.ncs, &ctx.settings, Probe::none())?;
    let mut rows = Vec::new();
    for row in &report.outcomes {
        for o in row {
            let j = report.actual.nc_index(o.nc).expect("nc present");
            let pairs: Vec<_> = o
                .predicted
                .iter()
                .zip(&report.actual.grid[j])
                .map(|(p, a)| {
                    (
                        p.usable && p.predicted_reliable,
                        p.predicted_mean_width,
                        a.usable_reliable(),
                        a.mean_width,
                    )
                })
                .collect();
            let acc = accuracy(&pairs);
            let mut flags = Vec::new();
            for (name, v) in [
                ("precision", acc.precision),
                ("recall", acc.recall),
                ("f1", acc.f1),
                ("emmre", acc.emmre),
            ] {
                if v.is_none() {
                    flags.push(format!("{name}_undefined"));
                }
            }
            rows.push(vec![
                o.technique.label().to_string(),
                num(o.nc),
                acc.cells.to_string(),
                acc.tp.to_string(),
                acc.fp.to_string(),
                acc.fn_.to_string(),
                acc.tn.to_string(),
                opt_num(acc.precision),
                opt_num(acc.recall),
                opt_num(acc.f1),
                opt_num(acc.emmre),
                acc.zero_width_excluded.to_string(),
                flags.join(";"),
            ]);
        }
    }
    let files = vec![write_report(
        &ctx.out,
        "technique_accuracy.csv",
        &ctx.manifest,
        &[
            "interpretation: actual reliability is ground truth and predicted reliability the classifier output",
            "interpretation: emmre is the mean of |predicted - actual| / actual mean width over cells with actual width > 0",
            "undefined ratios are left blank and listed in flags",
        ],
        &[
            "technique",
            "nc",
            "cells",
            "tp",
            "fp",
            "fn",
            "tn",
            "precision",
            "recall",
            "f1",
            "emmre",
            "zero_width_excluded",
            "flags",
        ],
        &rows,
    )?];
    Ok(Outcome {
        files,
        warnings: report_warnings(&report),
    })
}
