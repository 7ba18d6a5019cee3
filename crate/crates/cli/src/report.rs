//! CSV and JSON reports. Rows come out in a fixed order and floats use the
//! shortest round-trip form, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use assocgeom_core::eval::LayerProfile;
use assocgeom_core::harness::{CollectionSummary, ComplianceSummary};
use assocgeom_core::ridge::RidgeReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

/// Layer profile of one model under one extraction strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model: String,
    pub strategy: String,
    pub profile: LayerProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRidge {
    pub strategy: String,
    pub report: RidgeReport,
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    fsutil::write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::malformed(path, e.to_string());
        out.write_record(header).map_err(err)?;
        for r in rows {
            out.write_record(&r).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::malformed(path, e.to_string()))?;
    fsutil::write_string(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&fsutil::read_to_string(path)?).map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn write_evaluation(dir: &Path, profiles: &[ModelProfile]) -> Result<()> {
    let rows = profiles.iter().flat_map(|p| {
        p.profile.rows.iter().map(move |r| {
            vec![
                p.model.clone(),
                p.strategy.clone(),
                r.layer.to_string(),
                r.reference.clone(),
                r.metric.as_str().into(),
                opt(r.k),
                fmt_f(r.value),
                r.n.to_string(),
            ]
        })
    });
    write_csv(
        &dir.join("evaluation.csv"),
        &["model", "strategy", "layer", "reference", "metric", "k", "value", "n"],
        rows,
    )?;
    let rows = profiles.iter().flat_map(|p| {
        p.profile.summaries.iter().map(move |s| {
            let excluded: Vec<String> = s.excluded_layers.iter().map(u32::to_string).collect();
            vec![
                p.model.clone(),
                p.strategy.clone(),
                s.reference.clone(),
                s.metric.as_str().into(),
                opt(s.k),
                fmt_f(s.min),
                fmt_f(s.max),
                fmt_f(s.mean),
                s.n_layers.to_string(),
                excluded.join(";"),
            ]
        })
    });
    write_csv(
        &dir.join("evaluation_summary.csv"),
        &["model", "strategy", "reference", "metric", "k", "min", "max", "mean", "n_layers", "excluded_layers"],
        rows,
    )
}

pub fn write_ridge(dir: &Path, reports: &[ModelRidge]) -> Result<()> {
    let rows = reports.iter().flat_map(|m| {
        m.report.layers.iter().flat_map(move |l| {
            l.subsets.iter().map(move |s| {
                vec![
                    m.report.model.clone(),
                    m.strategy.clone(),
                    l.layer.to_string(),
                    s.subset.as_str().into(),
                    fmt_f(s.fit.alpha),
                    fmt_f(s.r2_train),
                    fmt_f(s.r2_test),
                ]
            })
        })
    });
    write_csv(&dir.join("ridge.csv"), &["model", "strategy", "layer", "subset", "alpha", "r2_train", "r2_test"], rows)?;
    let rows = reports.iter().flat_map(|m| {
        m.report.summary.iter().map(move |q| {
            vec![
                m.report.model.clone(),
                m.strategy.clone(),
                q.quantity.as_str().into(),
                fmt_f(q.min),
                fmt_f(q.max),
                fmt_f(q.mean),
            ]
        })
    });
    write_csv(&dir.join("ridge_summary.csv"), &["model", "strategy", "quantity", "min", "max", "mean"], rows)
}

fn compliance_row(model: &str, paradigm: &str, c: &ComplianceSummary) -> Vec<String> {
    let mean_attempts = if c.total == 0 { f64::NAN } else { c.attempts as f64 / c.total as f64 };
    vec![
        model.into(),
        paradigm.into(),
        c.total.to_string(),
        c.initially_compliant.to_string(),
        c.compliant.to_string(),
        fmt_f(c.initial_compliance_rate()),
        fmt_f(c.final_compliance_rate()),
        fmt_f(mean_attempts),
        c.max_attempts.to_string(),
        c.usable_associations().to_string(),
    ]
}

pub fn write_compliance(path: &Path, per_model: &BTreeMap<String, CollectionSummary>) -> Result<()> {
    let rows = per_model.iter().flat_map(|(m, s)| [compliance_row(m, "FC", &s.fc), compliance_row(m, "FA", &s.fa)]);
    write_csv(
        path,
        &[
            "model",
            "paradigm",
            "trials",
            "initially_compliant",
            "compliant",
            "initial_rate",
            "final_rate",
            "mean_attempts",
            "max_attempts",
            "usable_associations",
        ],
        rows,
    )
}

fn rate_view(c: &ComplianceSummary) -> serde_json::Value {
    serde_json::json!({
        "trials": c.total,
        "initial_rate": c.initial_compliance_rate(),
        "final_rate": c.final_compliance_rate(),
        "max_attempts": c.max_attempts,
        "usable_associations": c.usable_associations(),
    })
}

/// Headline numbers of a run in one JSON document. Object keys are sorted.
pub fn summary_json(
    compliance: &BTreeMap<String, CollectionSummary>,
    profiles: &[ModelProfile],
    ridge: &[ModelRidge],
) -> serde_json::Value {
    let mut out = serde_json::Map::new();
    let comp: serde_json::Map<_, _> = compliance
        .iter()
        .map(|(m, s)| (m.clone(), serde_json::json!({ "fc": rate_view(&s.fc), "fa": rate_view(&s.fa) })))
        .collect();
    out.insert("compliance".into(), comp.into());
    let eval: Vec<_> = profiles
        .iter()
        .flat_map(|p| {
            p.profile.summaries.iter().map(move |s| {
                serde_json::json!({
                    "model": p.model, "strategy": p.strategy, "reference": s.reference,
                    "metric": s.metric.as_str(), "k": s.k, "min": s.min, "max": s.max, "mean": s.mean,
                    "n_layers": s.n_layers, "excluded_layers": s.excluded_layers,
                })
            })
        })
        .collect();
    out.insert("evaluation".into(), eval.into());
    let reg: Vec<_> = ridge
        .iter()
        .flat_map(|m| {
            m.report.summary.iter().map(move |q| {
                serde_json::json!({
                    "model": m.report.model, "strategy": m.strategy, "quantity": q.quantity.as_str(),
                    "min": q.min, "max": q.max, "mean": q.mean,
                })
            })
        })
        .collect();
    out.insert("ridge".into(), reg.into());
    out.into()
}
