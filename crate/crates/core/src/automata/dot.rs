use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::Dfa;

/// Graphviz DOT rendering of an automaton.
///
/// Accepting states are double circles, rejecting states are shaded, the
/// start state is marked by a red arrow, and edges on `0` are dotted while
/// edges on `1` are solid. The output only depends on the automaton.
pub fn to_dot(dfa: &Dfa) -> String {
    let mut out = String::new();
    out.push_str("digraph dfa {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  start [shape=point];\n");
    for q in 0..dfa.state_count() {
        let style = if dfa.is_accepting(q) {
            "shape=doublecircle"
        } else {
            "shape=circle, style=filled, fillcolor=lightgray"
        };
        let _ = writeln!(out, "  q{q} [{style}];");
    }
    let _ = writeln!(out, "  start -> q{} [color=red];", dfa.start());
    for q in 0..dfa.state_count() {
        for a in 0..2u8 {
            if let Some(t) = dfa.transition(q, a) {
                let style = if a == 0 { "dotted" } else { "solid" };
                out.push_str(&format!("  q{q} -> q{t} [label=\"{a}\", style={style}];\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}
