//! Figure rendering from persisted artifacts: confusion heatmap, per-class
//! and mean ROC/PR panels, per-class score bars, and learning curves.
//!
//! Every number drawn here comes from `metrics_*.json` or `history.json`;
//! nothing is recomputed from predictions. Output is deterministic: fixed
//! palette, fixed fonts, no timestamps, so re-rendering unchanged artifacts
//! reproduces identical bytes.

use std::path::{Path, PathBuf};

use plotters::coord::Shift;
use plotters::prelude::*;
use plotters::style::text_anchor::{HPos, Pos, VPos};
use venation_core::metrics::{CurveSample, EvaluationReport};
use venation_core::train::TrainingHistory;

use crate::artifacts::RunArtifacts;
use crate::error::{ReportError, Result};
use crate::font::ensure_fonts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Png,
    Svg,
}

impl OutputFormat {
    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Png => "png",
            OutputFormat::Svg => "svg",
        }
    }
}

/// Files written plus warnings for skipped figures.
#[derive(Debug, Default)]
pub struct RenderOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn draw_err<E: std::fmt::Display>(e: E) -> ReportError {
    ReportError::Draw(e.to_string())
}

macro_rules! render_to {
    ($fmt:expr, $path:expr, $size:expr, $draw:expr) => {{
        match $fmt {
            OutputFormat::Png => {
                let root = BitMapBackend::new($path, $size).into_drawing_area();
                root.fill(&WHITE).map_err(draw_err)?;
                $draw(&root)?;
                root.present().map_err(draw_err)?;
            }
            OutputFormat::Svg => {
                let root = SVGBackend::new($path, $size).into_drawing_area();
                root.fill(&WHITE).map_err(draw_err)?;
                $draw(&root)?;
                root.present().map_err(draw_err)?;
            }
        }
    }};
}

fn heat_color(ratio: f64) -> RGBColor {
    // white -> deep blue; darker diagonal means more correct predictions
    let r = (245.0 - 215.0 * ratio) as u8;
    let g = (247.0 - 199.0 * ratio) as u8;
    let b = (250.0 - 130.0 * ratio) as u8;
    RGBColor(r, g, b)
}

fn draw_confusion<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    report: &EvaluationReport<f64>,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let k = report.class_names.len();
    let max = report
        .confusion
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let mut chart = ChartBuilder::on(root)
        .caption("Confusion matrix (rows: true, columns: predicted)", ("sans-serif", 22))
        .margin(10)
        .x_label_area_size(140)
        .y_label_area_size(150)
        .build_cartesian_2d(0f64..k as f64, 0f64..k as f64)
        .map_err(draw_err)?;
    let names = report.class_names.clone();
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(k)
        .y_labels(k)
        .x_label_formatter(&|x| {
            let idx = x.floor() as usize;
            if *x - x.floor() == 0.5 && idx < k {
                names[idx].clone()
            } else {
                String::new()
            }
        })
        .y_label_formatter(&|y| {
            let idx = y.floor() as usize;
            if *y - y.floor() == 0.5 && idx < k {
                names[k - 1 - idx].clone()
            } else {
                String::new()
            }
        })
        .x_label_style(("sans-serif", 12).into_font().transform(FontTransform::Rotate90))
        .y_label_style(("sans-serif", 12))
        .axis_desc_style(("sans-serif", 14))
        .x_desc("predicted")
        .y_desc("true")
        .draw()
        .map_err(draw_err)?;

    // ticks at cell centers
    chart
        .draw_series((0..k).flat_map(|i| {
            let report = &report.confusion;
            (0..k).map(move |j| {
                let count = report[i][j] as f64;
                let y_top = (k - i) as f64;
                Rectangle::new(
                    [(j as f64, y_top - 1.0), (j as f64 + 1.0, y_top)],
                    heat_color(count / max).filled(),
                )
            })
        }))
        .map_err(draw_err)?;
    if k <= 24 {
        chart
            .draw_series((0..k).flat_map(|i| {
                let counts = &report.confusion;
                (0..k).map(move |j| {
                    let count = counts[i][j];
                    let color = if (count as f64) / max > 0.55 { WHITE } else { BLACK };
                    Text::new(
                        count.to_string(),
                        (j as f64 + 0.5, (k - i) as f64 - 0.5),
                        ("sans-serif", 11).into_font().color(&color).pos(Pos::new(
                            HPos::Center,
                            VPos::Center,
                        )),
                    )
                })
            }))
            .map_err(draw_err)?;
    }
    Ok(())
}

fn curve_series(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.to_vec()
}

fn draw_curve_panel<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    curves: &[CurveSample<f64>],
    title: &str,
    x_desc: &str,
    y_desc: &str,
    diagonal: bool,
    auc_label: &str,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let mut chart = ChartBuilder::on(root)
        .caption(title, ("sans-serif", 22))
        .margin(10)
        .x_label_area_size(45)
        .y_label_area_size(55)
        .build_cartesian_2d(0f64..1f64, 0f64..1.02f64)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .label_style(("sans-serif", 13))
        .axis_desc_style(("sans-serif", 15))
        .draw()
        .map_err(draw_err)?;

    if diagonal {
        chart
            .draw_series(LineSeries::new(
                [(0.0, 0.0), (1.0, 1.0)],
                RGBColor(160, 160, 160).stroke_width(1),
            ))
            .map_err(draw_err)?;
    }

    for (i, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let label = match &curve.class {
            Some(name) => format!("{name} ({auc_label}={:.3})", curve.auc),
            None => format!("{auc_label}={:.4}", curve.auc),
        };
        chart
            .draw_series(LineSeries::new(
                curve_series(&curve.points),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(label)
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.85))
        .border_style(RGBColor(120, 120, 120))
        .label_font(("sans-serif", 12))
        .draw()
        .map_err(draw_err)?;
    Ok(())
}

fn draw_scores<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    report: &EvaluationReport<f64>,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let k = report.class_names.len();
    let mut chart = ChartBuilder::on(root)
        .caption(
            "Per-class metrics (one-vs-rest accuracy shown separately from recall)",
            ("sans-serif", 20),
        )
        .margin(10)
        .x_label_area_size(140)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..k as f64, 0f64..1.05f64)
        .map_err(draw_err)?;
    let names = report.class_names.clone();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(k)
        .x_label_formatter(&|x| {
            let idx = x.floor() as usize;
            if *x - x.floor() == 0.5 && idx < k {
                names[idx].clone()
            } else {
                String::new()
            }
        })
        .x_label_style(("sans-serif", 12).into_font().transform(FontTransform::Rotate90))
        .y_desc("score")
        .axis_desc_style(("sans-serif", 15))
        .draw()
        .map_err(draw_err)?;

    let metrics: [(&str, RGBColor, Box<dyn Fn(usize) -> f64>); 4] = [
        (
            "precision",
            RGBColor(31, 119, 180),
            Box::new(|i| report.per_class[i].precision),
        ),
        (
            "recall",
            RGBColor(255, 127, 14),
            Box::new(|i| report.per_class[i].recall),
        ),
        (
            "f1",
            RGBColor(44, 160, 44),
            Box::new(|i| report.per_class[i].f1),
        ),
        (
            "ovr accuracy",
            RGBColor(148, 103, 189),
            Box::new(|i| report.per_class[i].ovr_accuracy),
        ),
    ];
    for (m, (label, color, value)) in metrics.iter().enumerate() {
        let color = *color;
        chart
            .draw_series((0..k).map(|i| {
                let x0 = i as f64 + 0.12 + m as f64 * 0.19;
                Rectangle::new([(x0, 0.0), (x0 + 0.17, value(i))], color.filled())
            }))
            .map_err(draw_err)?
            .label(*label)
            .legend(move |(x, y)| {
                Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.filled())
            });
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.85))
        .border_style(RGBColor(120, 120, 120))
        .label_font(("sans-serif", 13))
        .draw()
        .map_err(draw_err)?;
    Ok(())
}

struct LearningSeries {
    epochs: Vec<f64>,
    train: Vec<f64>,
    val: Vec<f64>,
    phase_bounds: Vec<f64>,
}

fn learning_series(history: &TrainingHistory, loss: bool) -> LearningSeries {
    let mut epochs = Vec::new();
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut phase_bounds = Vec::new();
    let mut offset = 0usize;
    for (i, phase) in history.phases.iter().enumerate() {
        if i > 0 {
            phase_bounds.push(offset as f64 + 0.5);
        }
        for r in &phase.records {
            epochs.push((offset + r.epoch) as f64);
            if loss {
                train.push(r.train_loss);
                val.push(r.val_loss);
            } else {
                train.push(r.train_accuracy);
                val.push(r.val_accuracy);
            }
        }
        offset += phase.records.len();
    }
    LearningSeries {
        epochs,
        train,
        val,
        phase_bounds,
    }
}

fn draw_learning_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, Shift>,
    series: &LearningSeries,
    title: &str,
    y_desc: &str,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let x_max = series.epochs.last().copied().unwrap_or(1.0).max(1.0);
    let y_max = series
        .train
        .iter()
        .chain(&series.val)
        .cloned()
        .fold(f64::MIN, f64::max)
        .max(1e-9);
    let y_min = series
        .train
        .iter()
        .chain(&series.val)
        .cloned()
        .fold(f64::MAX, f64::min)
        .min(0.0);
    let pad = (y_max - y_min).max(1e-6) * 0.06;
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(8)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(0.5f64..(x_max + 0.5), (y_min - pad)..(y_max + pad))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("epoch")
        .y_desc(y_desc)
        .label_style(("sans-serif", 12))
        .axis_desc_style(("sans-serif", 14))
        .draw()
        .map_err(draw_err)?;

    for &bound in &series.phase_bounds {
        chart
            .draw_series(LineSeries::new(
                [(bound, y_min - pad), (bound, y_max + pad)],
                RGBColor(150, 150, 150).stroke_width(1),
            ))
            .map_err(draw_err)?;
    }
    let train_color = RGBColor(31, 119, 180);
    let val_color = RGBColor(214, 39, 40);
    chart
        .draw_series(LineSeries::new(
            series.epochs.iter().cloned().zip(series.train.iter().cloned()),
            train_color.stroke_width(2),
        ))
        .map_err(draw_err)?
        .label("train")
        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], train_color.stroke_width(2)));
    chart
        .draw_series(LineSeries::new(
            series.epochs.iter().cloned().zip(series.val.iter().cloned()),
            val_color.stroke_width(2),
        ))
        .map_err(draw_err)?
        .label("validation")
        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], val_color.stroke_width(2)));
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperRight)
        .background_style(WHITE.mix(0.85))
        .border_style(RGBColor(120, 120, 120))
        .label_font(("sans-serif", 12))
        .draw()
        .map_err(draw_err)?;
    Ok(())
}

fn draw_learning<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    history: &TrainingHistory,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let (top, bottom) = root.split_vertically(350);
    draw_learning_panel(&top, &learning_series(history, false), "Accuracy", "accuracy")?;
    draw_learning_panel(&bottom, &learning_series(history, true), "Loss", "loss")?;
    Ok(())
}

/// Render the seven standard figures for one run into `out_dir`.
///
/// Figures whose source data is absent (empty history, missing curves) are
/// skipped with a warning rather than failing the run.
pub fn render_figures(
    run: &RunArtifacts,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RenderOutcome> {
    ensure_fonts()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| ReportError::io(format!("creating {}", out_dir.display()), e))?;
    let mut outcome = RenderOutcome::default();
    let ext = format.extension();
    let test = &run.metrics_test;

    let path = out_dir.join(format!("fig_confusion.{ext}"));
    render_to!(format, &path, (900, 820), |root: &DrawingArea<_, _>| {
        draw_confusion(root, test)
    });
    outcome.written.push(path);

    if test.curves.roc.is_empty() {
        outcome
            .warnings
            .push("no per-class ROC curves available; skipping fig_roc".into());
    } else {
        let path = out_dir.join(format!("fig_roc.{ext}"));
        render_to!(format, &path, (1000, 760), |root: &DrawingArea<_, _>| {
            draw_curve_panel(
                root,
                &test.curves.roc,
                "One-vs-rest ROC curves",
                "false positive rate",
                "true positive rate",
                true,
                "AUC",
            )
        });
        outcome.written.push(path);
    }

    match &test.curves.mean_roc {
        Some(mean) => {
            let path = out_dir.join(format!("fig_roc_mean.{ext}"));
            let curves = vec![mean.clone()];
            render_to!(format, &path, (800, 620), |root: &DrawingArea<_, _>| {
                draw_curve_panel(
                    root,
                    &curves,
                    "Mean ROC curve",
                    "false positive rate",
                    "true positive rate",
                    true,
                    "mean AUC",
                )
            });
            outcome.written.push(path);
        }
        None => outcome
            .warnings
            .push("no mean ROC curve available; skipping fig_roc_mean".into()),
    }

    if test.curves.pr.is_empty() {
        outcome
            .warnings
            .push("no per-class PR curves available; skipping fig_pr".into());
    } else {
        let path = out_dir.join(format!("fig_pr.{ext}"));
        render_to!(format, &path, (1000, 760), |root: &DrawingArea<_, _>| {
            draw_curve_panel(
                root,
                &test.curves.pr,
                "One-vs-rest precision-recall curves",
                "recall",
                "precision",
                false,
                "AP",
            )
        });
        outcome.written.push(path);
    }

    match &test.curves.mean_pr {
        Some(mean) => {
            let path = out_dir.join(format!("fig_pr_mean.{ext}"));
            let curves = vec![mean.clone()];
            render_to!(format, &path, (800, 620), |root: &DrawingArea<_, _>| {
                draw_curve_panel(
                    root,
                    &curves,
                    "Mean precision-recall curve",
                    "recall",
                    "precision",
                    false,
                    "mean AP",
                )
            });
            outcome.written.push(path);
        }
        None => outcome
            .warnings
            .push("no mean PR curve available; skipping fig_pr_mean".into()),
    }

    let path = out_dir.join(format!("fig_scores.{ext}"));
    render_to!(format, &path, (1100, 680), |root: &DrawingArea<_, _>| {
        draw_scores(root, test)
    });
    outcome.written.push(path);

    if run.history.phases.iter().all(|p| p.records.is_empty()) {
        outcome
            .warnings
            .push("history has no epochs; skipping fig_learning".into());
    } else {
        let path = out_dir.join(format!("fig_learning.{ext}"));
        render_to!(format, &path, (1000, 700), |root: &DrawingArea<_, _>| {
            draw_learning(root, &run.history)
        });
        outcome.written.push(path);
    }

    Ok(outcome)
}
