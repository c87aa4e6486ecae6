//! Accuracy measurement and learning-curve sweeps.

use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::corpus::AmbiguousText;
use crate::decide::TrainOptions;
use crate::error::{Error, Result};
use crate::inventory::{AmbiguityInventory, TagId, TagInventory};
use crate::model::TaggerConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub ambiguous_total: usize,
    pub ambiguous_correct: usize,
    pub accuracy: f64,
    /// 1.0 when the test set has no ambiguous tokens.
    pub ambiguous_accuracy: f64,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Tokens: {}", self.total)?;
        writeln!(f, "Correct: {}", self.correct)?;
        writeln!(f, "Accuracy: {:.4}", self.accuracy)?;
        writeln!(f, "Ambiguous tokens: {}", self.ambiguous_total)?;
        writeln!(f, "Ambiguous correct: {}", self.ambiguous_correct)?;
        write!(f, "Ambiguous accuracy: {:.4}", self.ambiguous_accuracy)
    }
}

pub fn accuracy(pred: &[TagId], gold: &AmbiguousText, classes: &AmbiguityInventory) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            predicted: pred.len(),
            gold: gold.len(),
        });
    }
    let mut report = EvalReport {
        total: 0,
        correct: 0,
        ambiguous_total: 0,
        ambiguous_correct: 0,
        accuracy: 0.0,
        ambiguous_accuracy: 1.0,
    };
    for (i, (p, tok)) in pred.iter().zip(gold.tokens()).enumerate() {
        let g = tok.gold.ok_or(Error::MissingGold(i))?;
        let hit = *p == g;
        report.total += 1;
        report.correct += hit as usize;
        if classes.is_ambiguous(tok.class) {
            report.ambiguous_total += 1;
            report.ambiguous_correct += hit as usize;
        }
    }
    if report.total > 0 {
        report.accuracy = report.correct as f64 / report.total as f64;
    }
    if report.ambiguous_total > 0 {
        report.ambiguous_accuracy = report.ambiguous_correct as f64 / report.ambiguous_total as f64;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub train_tokens: usize,
    pub report: EvalReport,
    /// Stored parameters of the trained model.
    pub parameters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

/// Train every configuration on growing prefixes of `train` and evaluate on
/// `test`. All taggers see the same prefixes. Cells run in parallel; the
/// result is ordered by configuration, then size.
pub fn learning_curve(
    configs: &[TaggerConfig],
    train: &AmbiguousText,
    test: &AmbiguousText,
    sizes: &[usize],
    tags: &TagInventory,
    classes: &AmbiguityInventory,
    opts: &TrainOptions,
) -> Result<Vec<LearningCurve>> {
    if let Some(w) = sizes.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(format!(
            "training sizes must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&size) = sizes.iter().find(|&&s| s > train.len()) {
        return Err(Error::SizeExceedsCorpus {
            size,
            available: train.len(),
        });
    }
    let prefixes: Vec<AmbiguousText> = sizes.iter().map(|&s| train.prefix(s)).collect();
    let cells: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..sizes.len()).map(move |s| (c, s)))
        .collect();
    let results: Vec<Result<CurvePoint>> = cells
        .par_iter()
        .map(|&(c, s)| {
            let model = configs[c].train(&prefixes[s], tags, classes, opts)?;
            let report = accuracy(&model.tag(test, classes), test, classes)?;
            Ok(CurvePoint {
                train_tokens: sizes[s],
                report,
                parameters: model.parameter_count(),
            })
        })
        .collect();
    let mut results = results.into_iter();
    let mut curves = Vec::with_capacity(configs.len());
    for config in configs {
        let points = results.by_ref().take(sizes.len()).collect::<Result<Vec<_>>>()?;
        curves.push(LearningCurve {
            label: config.label(),
            points,
        });
    }
    Ok(curves)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-(tagger, size) mean and standard deviation across seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub train_tokens: usize,
    pub accuracy: (f64, f64),
    pub ambiguous_accuracy: (f64, f64),
    pub seeds: usize,
}

/// Aggregate one set of curves per seed; every run must share labels and sizes.
pub fn summarize(runs: &[Vec<LearningCurve>]) -> Result<Vec<SummaryRow>> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::new();
    for (c, curve) in first.iter().enumerate() {
        for (p, point) in curve.points.iter().enumerate() {
            let mut acc = Vec::new();
            let mut amb = Vec::new();
            for run in runs {
                let other = run
                    .get(c)
                    .and_then(|cv| cv.points.get(p).map(|pt| (cv, pt)))
                    .filter(|(cv, pt)| cv.label == curve.label && pt.train_tokens == point.train_tokens)
                    .ok_or_else(|| Error::Invalid("runs have different taggers or sizes".into()))?;
                acc.push(other.1.report.accuracy);
                amb.push(other.1.report.ambiguous_accuracy);
            }
            rows.push(SummaryRow {
                label: curve.label.clone(),
                train_tokens: point.train_tokens,
                accuracy: mean_std(&acc),
                ambiguous_accuracy: mean_std(&amb),
                seeds: runs.len(),
            });
        }
    }
    Ok(rows)
}

/// Columns `tagger,train_tokens,accuracy,ambiguous_accuracy`.
pub fn write_csv<W: Write>(curves: &[LearningCurve], out: W) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Invalid("no curves to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tagger", "train_tokens", "accuracy", "ambiguous_accuracy"])?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                curve.label.clone(),
                p.train_tokens.to_string(),
                p.report.accuracy.to_string(),
                p.report.ambiguous_accuracy.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row from a curve CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub tagger: String,
    pub train_tokens: usize,
    pub accuracy: f64,
    pub ambiguous_accuracy: f64,
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let bad = |field: &str| Error::parse(i + 2, format!("bad {field}"));
        if record.len() != 4 {
            return Err(Error::parse(i + 2, "expected 4 columns"));
        }
        rows.push(CsvRow {
            tagger: record[0].to_string(),
            train_tokens: record[1].parse().map_err(|_| bad("train_tokens"))?,
            accuracy: record[2].parse().map_err(|_| bad("accuracy"))?,
            ambiguous_accuracy: record[3].parse().map_err(|_| bad("ambiguous_accuracy"))?,
        });
    }
    Ok(rows)
}

/// Columns `tagger,train_tokens,parameters`: realized model sizes.
pub fn write_parameter_csv<W: Write>(curves: &[LearningCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tagger", "train_tokens", "parameters"])?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([curve.label.clone(), p.train_tokens.to_string(), p.parameters.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `tagger,train_tokens,seeds,mean_accuracy,std_accuracy,mean_ambiguous_accuracy,std_ambiguous_accuracy`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tagger",
        "train_tokens",
        "seeds",
        "mean_accuracy",
        "std_accuracy",
        "mean_ambiguous_accuracy",
        "std_ambiguous_accuracy",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.train_tokens.to_string(),
            r.seeds.to_string(),
            r.accuracy.0.to_string(),
            r.accuracy.1.to_string(),
            r.ambiguous_accuracy.0.to_string(),
            r.ambiguous_accuracy.1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Accuracy against training tokens, one polyline per tagger.
pub fn write_svg<W: Write>(curves: &[LearningCurve], mut out: W) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Invalid("no curves to plot".into()));
    }
    let (width, height) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 180.0, 20.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let points = curves.iter().flat_map(|c| &c.points);
    let max_x = points.clone().map(|p| p.train_tokens).max().unwrap_or(1).max(1) as f64;
    let (mut lo, mut hi) = points
        .map(|p| p.report.accuracy)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(0.005);
    let (lo, hi) = ((lo - pad).max(0.0), (hi + pad).min(1.0));
    let x = |v: f64| left + v / max_x * plot_w;
    let y = |v: f64| top + (1.0 - (v - lo) / (hi - lo)) * plot_h;

    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    )?;
    writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h)?;
    for k in 0..=4 {
        let fx = max_x * k as f64 / 4.0;
        let fy = lo + (hi - lo) * k as f64 / 4.0;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            x(fx),
            top + plot_h + 16.0,
            fx
        )?;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            left - 6.0,
            y(fy) + 4.0,
            fy
        )?;
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Training tokens</text>"#,
        left + plot_w / 2.0,
        height - 15.0
    )?;
    writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">Accuracy</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )?;
    for (i, curve) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", x(p.train_tokens as f64), y(p.report.accuracy)))
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        )?;
        let ly = top + 14.0 + 18.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            left + plot_w + 10.0,
            left + plot_w + 30.0
        )?;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + plot_w + 35.0,
            ly + 4.0,
            escape(&curve.label)
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::inventory::ClassId;

    fn gold_text() -> (AmbiguityInventory, AmbiguousText, Vec<TagId>) {
        let tags = TagInventory::parse("D\nN\nV\n").unwrap();
        let [d, n, v] = ["D", "N", "V"].map(|s| tags.id(s).unwrap());
        let mut classes = AmbiguityInventory::new(&tags);
        let cd = classes.intern([d]).unwrap();
        let cn = classes.intern([n]).unwrap();
        let cnv = classes.intern([n, v]).unwrap();
        let spec: [(ClassId, TagId); 8] = [
            (cd, d), (cnv, n), (cn, n), (cd, d), (cnv, v), (cn, n), (cd, d), (cn, n),
        ];
        let doc = spec
            .iter()
            .map(|&(class, g)| Token { surface: "w".into(), class, gold: Some(g) })
            .collect();
        let gold_tags = spec.iter().map(|p| p.1).collect();
        (classes, AmbiguousText::from_documents([doc]), gold_tags)
    }

    #[test]
    fn perfect_and_partial_accuracy() {
        let (classes, text, gold) = gold_text();
        let r = accuracy(&gold, &text, &classes).unwrap();
        assert_eq!((r.accuracy, r.ambiguous_accuracy), (1.0, 1.0));
        let mut pred = gold.clone();
        pred[4] = pred[1]; // the V token tagged N
        let r = accuracy(&pred, &text, &classes).unwrap();
        assert_eq!((r.total, r.correct, r.ambiguous_total, r.ambiguous_correct), (8, 7, 2, 1));
        assert_eq!(r.accuracy, 7.0 / 8.0);
        assert_eq!(r.ambiguous_accuracy, 0.5);
    }

    #[test]
    fn vacuous_ambiguous_accuracy() {
        let (classes, text, gold) = gold_text();
        let unamb = text.prefix(1);
        let r = accuracy(&gold[..1], &unamb, &classes).unwrap();
        assert_eq!((r.ambiguous_total, r.ambiguous_accuracy), (0, 1.0));
    }

    #[test]
    fn accuracy_errors() {
        let (classes, text, gold) = gold_text();
        assert!(matches!(accuracy(&gold[..3], &text, &classes), Err(Error::LengthMismatch { .. })));
        let stripped = text.without_gold();
        assert!(matches!(accuracy(&gold, &stripped, &classes), Err(Error::MissingGold(0))));
    }

    fn curve(label: &str, pts: &[(usize, f64)]) -> LearningCurve {
        LearningCurve {
            label: label.into(),
            points: pts
                .iter()
                .map(|&(n, a)| CurvePoint {
                    train_tokens: n,
                    report: EvalReport {
                        total: 10,
                        correct: 0,
                        ambiguous_total: 3,
                        ambiguous_correct: 0,
                        accuracy: a,
                        ambiguous_accuracy: a / 3.0,
                    },
                    parameters: n / 10,
                })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let curves = vec![curve("LSW(-1, +1)", &[(1000, 0.9123456789), (2000, 0.95)])];
        let mut buf = Vec::new();
        write_csv(&curves, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        let rows = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows[0].tagger, "LSW(-1, +1)");
        assert_eq!(rows[0].accuracy, 0.9123456789);
        assert_eq!(rows[1].ambiguous_accuracy, 0.95 / 3.0);
        assert!(write_csv(&[], Vec::new()).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_curve() {
        let curves = vec![
            curve("LSW(-1, +1)", &[(1000, 0.9), (2000, 0.95)]),
            curve("SW(-1, +1)", &[(1000, 0.85), (2000, 0.9)]),
        ];
        let mut buf = Vec::new();
        write_svg(&curves, &mut buf).unwrap();
        let svg = String::from_utf8(buf).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("Training tokens") && svg.contains("Accuracy"));
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn summary_over_seeds() {
        let runs = vec![
            vec![curve("HMM", &[(10, 0.5)])],
            vec![curve("HMM", &[(10, 0.7)])],
        ];
        let rows = summarize(&runs).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].accuracy.0 - 0.6).abs() < 1e-15);
        let bad = vec![vec![curve("HMM", &[(10, 0.5)])], vec![curve("SW", &[(10, 0.5)])]];
        assert!(summarize(&bad).is_err());
    }
}
