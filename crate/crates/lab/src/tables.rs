//! Complexity tables as CSV.

use anyhow::Result;
use tomita_core::complexity::{avg_edit_distance_at, classify, entropy_at, prop2_quantity};
use tomita_core::Grammar;

/// Lengths of the printed complexity table.
pub const TABLE_LENGTHS: [usize; 4] = [8, 10, 12, 14];

/// `grammar,N,entropy,avg_edit_distance,prop2` rows; undefined cells (a
/// class is empty at that length) are left blank.
pub fn metrics_csv(grammars: &[Grammar], lengths: &[usize]) -> Result<String> {
    let mut out = String::from("grammar,N,entropy,avg_edit_distance,prop2\n");
    let cell = |v: tomita_core::Result<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for &g in grammars {
        for &n in lengths {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g.index(),
                n,
                cell(entropy_at(g, n)),
                cell(avg_edit_distance_at(g, n)),
                cell(prop2_quantity(g, n))
            ));
        }
    }
    Ok(out)
}

/// `grammar,class` rows.
pub fn classes_csv(grammars: &[Grammar]) -> Result<String> {
    let mut out = String::from("grammar,class\n");
    for &g in grammars {
        out.push_str(&format!("{},{}\n", g.index(), classify(g)?.as_str()));
    }
    Ok(out)
}
