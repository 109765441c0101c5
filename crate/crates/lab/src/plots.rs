//! Vega-Lite chart documents with inline data.

use serde_json::{json, Value};
use tomita_core::Grammar;

use crate::harness::ExperimentSummary;

const SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

fn model_label(s: &ExperimentSummary) -> String {
    format!("{}-{}", s.architecture, s.activation)
}

/// Charts of accuracy per K, its variance, overall accuracy and success
/// rate, over all runs. Returned as (file name, document) pairs.
pub fn experiment_charts(summaries: &[ExperimentSummary]) -> Vec<(String, Value)> {
    let all: Vec<&ExperimentSummary> = summaries.iter().filter(|s| s.subset == "all").collect();
    let per_k: Vec<Value> = all
        .iter()
        .flat_map(|s| {
            s.per_k.iter().map(move |p| {
                json!({"grammar": s.grammar, "model": model_label(s), "K": p.k, "mean_acc": p.mean_acc, "var_acc": p.var_acc})
            })
        })
        .collect();
    let overall: Vec<Value> = all
        .iter()
        .map(|s| json!({"grammar": s.grammar, "model": model_label(s), "overall_acc": s.overall_acc, "success_rate": s.success_rate}))
        .collect();

    let line = |field: &str, title: &str| {
        json!({
            "$schema": SCHEMA,
            "title": title,
            "data": {"values": per_k},
            "mark": {"type": "line", "point": true},
            "encoding": {
                "x": {"field": "K", "type": "ordinal"},
                "y": {"field": field, "type": "quantitative"},
                "color": {"field": "model", "type": "nominal"},
                "column": {"field": "grammar", "type": "ordinal"}
            }
        })
    };
    let bar = |field: &str, title: &str| {
        json!({
            "$schema": SCHEMA,
            "title": title,
            "data": {"values": overall},
            "mark": "bar",
            "encoding": {
                "x": {"field": "model", "type": "nominal"},
                "y": {"field": field, "type": "quantitative", "scale": {"domain": [0, 1]}},
                "color": {"field": "model", "type": "nominal"},
                "column": {"field": "grammar", "type": "ordinal"}
            }
        })
    };
    vec![
        ("accuracy_by_k.vl.json".to_string(), line("mean_acc", "Mean accuracy of extracted automata by K")),
        ("variance_by_k.vl.json".to_string(), line("var_acc", "Variance of accuracy of extracted automata by K")),
        ("overall_accuracy.vl.json".to_string(), bar("overall_acc", "Average accuracy over all extractions")),
        ("success_rate.vl.json".to_string(), bar("success_rate", "Fraction of extractions identical to the ground truth")),
    ]
}

/// Concentric rings: ring `l` holds every string of length `l + 1` in
/// lexicographic order, colored by label.
pub fn ring_chart(grammar: Grammar, rings: &[Vec<bool>]) -> Value {
    let width = 24.0;
    let mut values = Vec::new();
    for (r, ring) in rings.iter().enumerate() {
        let step = std::f64::consts::TAU / ring.len() as f64;
        for (i, &label) in ring.iter().enumerate() {
            values.push(json!({
                "length": r + 1,
                "index": i,
                "label": if label { "positive" } else { "negative" },
                "theta": i as f64 * step,
                "theta2": (i + 1) as f64 * step,
                "radius": 20.0 + r as f64 * width,
                "radius2": 20.0 + (r + 1) as f64 * width - 2.0
            }));
        }
    }
    let size = 2.0 * (20.0 + rings.len() as f64 * width) + 20.0;
    json!({
        "$schema": SCHEMA,
        "title": format!("{grammar}: strings by length in lexicographic order"),
        "width": size,
        "height": size,
        "data": {"values": values},
        "mark": {"type": "arc", "stroke": "white", "strokeWidth": 0.5},
        "encoding": {
            "theta": {"field": "theta", "type": "quantitative", "scale": null},
            "theta2": {"field": "theta2"},
            "radius": {"field": "radius", "type": "quantitative", "scale": null},
            "radius2": {"field": "radius2"},
            "color": {
                "field": "label",
                "type": "nominal",
                "scale": {"domain": ["positive", "negative"], "range": ["#1f77b4", "#d9d9d9"]}
            },
            "tooltip": [{"field": "length"}, {"field": "index"}, {"field": "label"}]
        }
    })
}
