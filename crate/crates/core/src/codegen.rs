//! C99 emission of the reference and hybrid programs plus a CSV test harness.
//!
//! Both programs come from the same neuron emitter, in canonical neuron
//! order, with 32-bit inputs and weights and 64-bit accumulators.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{ExecutionPlan, FlowError};
use crate::model::{NeuronId, QuantizedMLP};

/// Neurons with at least this many inputs are emitted as loops over static tables.
pub const UNROLL_LIMIT: usize = 16;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodegenError {
    #[error("plan references {0}, which is not a hidden neuron")]
    UnknownNeuron(NeuronId),
    #[error(transparent)]
    Plan(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramKind {
    Reference,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedProgram {
    pub kind: ProgramKind,
    pub entry: &'static str,
    pub source: String,
}

impl EmittedProgram {
    pub fn file_name(&self, model: &str) -> String {
        match self.kind {
            ProgramKind::Reference => format!("{model}_ref.c"),
            ProgramKind::Hybrid => format!("{model}_hybrid.c"),
        }
    }
}

fn looped(net: &QuantizedMLP, layer: usize) -> bool {
    net.layers()[layer].inputs() >= UNROLL_LIMIT
}

fn operand(layer: usize, j: usize) -> String {
    if layer == 0 {
        format!("(int64_t)x[{j}]")
    } else {
        format!("r{}[{j}]", layer - 1)
    }
}

fn affine_expr(net: &QuantizedMLP, layer: usize, i: usize) -> String {
    let l = &net.layers()[layer];
    let mut s = String::new();
    for (j, &w) in l.weights[i].iter().enumerate() {
        let op = operand(layer, j);
        match (s.is_empty(), w < 0) {
            (true, _) => write!(s, "{w} * {op}"),
            (false, false) => write!(s, " + {w} * {op}"),
            (false, true) => write!(s, " - {} * {op}", -(w as i128)),
        }
        .unwrap();
    }
    let b = l.biases[i];
    match (s.is_empty(), b < 0) {
        (true, _) => write!(s, "(int64_t){b}"),
        (false, _) if b == 0 => Ok(()),
        (false, false) => write!(s, " + {b}"),
        (false, true) => write!(s, " - {}", -(b as i128)),
    }
    .unwrap();
    s
}

/// Writes `target = W·in + b;` for neuron `i` of `layer`.
fn emit_affine(out: &mut String, net: &QuantizedMLP, layer: usize, i: usize, target: &str) {
    if looped(net, layer) {
        let n = net.layers()[layer].inputs();
        let src = if layer == 0 { "x".to_string() } else { format!("r{}", layer - 1) };
        let _ = writeln!(out, "    acc = B{layer}[{i}];");
        let _ = writeln!(out, "    for (j = 0; j < {n}; ++j) acc += (int64_t)W{layer}[{i}][j] * {src}[j];");
        let _ = writeln!(out, "    {target} = acc;");
    } else {
        let _ = writeln!(out, "    {target} = {};", affine_expr(net, layer, i));
    }
}

/// The shared hidden-neuron emitter: pre-activation then ReLU.
fn emit_hidden(out: &mut String, net: &QuantizedMLP, n: NeuronId) {
    let (l, i) = (n.layer, n.index);
    emit_affine(out, net, l, i, &format!("z{l}[{i}]"));
    let _ = writeln!(out, "    r{l}[{i}] = z{l}[{i}] > 0 ? z{l}[{i}] : 0;");
}

fn emit_tables(out: &mut String, net: &QuantizedMLP) {
    for (l, layer) in net.layers().iter().enumerate().filter(|(l, _)| looped(net, *l)) {
        let _ = writeln!(out, "static const int32_t W{l}[{}][{}] = {{", layer.outputs(), layer.inputs());
        for row in &layer.weights {
            let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            let _ = writeln!(out, "    {{{}}},", cells.join(", "));
        }
        let _ = writeln!(out, "}};");
        let cells: Vec<String> = layer.biases.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "static const int64_t B{l}[{}] = {{{}}};\n", layer.outputs(), cells.join(", "));
    }
}

fn emit_program(net: &QuantizedMLP, plan: Option<&ExecutionPlan>) -> Result<EmittedProgram, CodegenError> {
    let kind = if plan.is_some() { ProgramKind::Hybrid } else { ProgramKind::Reference };
    if let Some(p) = plan {
        p.check_model(net)?;
        let unknown = p.prologue.iter().chain(p.slots.iter().map(|s| &s.neuron)).find(|n| !net.contains_neuron(**n));
        if let Some(&n) = unknown {
            return Err(CodegenError::UnknownNeuron(n));
        }
    }
    let layers = net.layers();
    let out_layer = layers.len() - 1;
    let mut s = String::new();

    let _ = writeln!(s, "// nn2flow {TOOL_VERSION}: {} program", if plan.is_some() { "hybrid" } else { "reference" });
    let _ = writeln!(s, "// model: {}", net.name());
    let _ = writeln!(s, "// model hash: {}", net.hash());
    if let Some(p) = plan {
        let _ = writeln!(s, "// plan hash: {}", p.hash());
    }
    s.push_str("\n#include <stdint.h>\n\n");
    if plan.is_some() {
        s.push_str(
            "#ifdef NN2FLOW_TRACE_EXIT\n\
             int nn2flow_last_exit = -1;\n\
             #define NN2FLOW_EXIT(id) (nn2flow_last_exit = (id))\n\
             #else\n\
             #define NN2FLOW_EXIT(id) ((void)0)\n\
             #endif\n\n",
        );
    }
    emit_tables(&mut s, net);

    s.push_str("int predict(const int32_t *x)\n{\n");
    for (l, layer) in layers[..out_layer].iter().enumerate() {
        let n = layer.outputs();
        let _ = writeln!(s, "    int64_t z{l}[{n}] = {{0}}, r{l}[{n}] = {{0}};");
    }
    let _ = writeln!(s, "    int64_t o[{}];", layers[out_layer].outputs());
    if (0..layers.len()).any(|l| looped(net, l)) {
        s.push_str("    int64_t acc;\n    int j;\n");
    }
    s.push_str("    int c = 0;\n");

    let mut done = BTreeSet::new();
    if let Some(p) = plan {
        for w in 0..p.words() {
            let _ = writeln!(s, "    uint32_t t{w} = 0;");
        }
        s.push_str("\n    NN2FLOW_EXIT(-1);\n\n    // prologue\n");
        for &n in &p.prologue {
            emit_hidden(&mut s, net, n);
            done.insert(n);
        }
        for (k, slot) in p.slots.iter().enumerate() {
            let (l, i) = (slot.neuron.layer, slot.neuron.index);
            let _ = writeln!(
                s,
                "    if (z{l}[{i}] {}) t{} |= 0x{:08x}u;",
                slot.polarity.relation_text(),
                k / 32,
                1u32 << (k % 32)
            );
        }
        s.push_str("\n    // logic flows\n");
        for pf in &p.flows {
            let tests: Vec<String> = pf
                .mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m != 0)
                .map(|(w, &m)| format!("(t{w} & 0x{m:08x}u) == 0x{m:08x}u"))
                .collect();
            let cond = if tests.is_empty() { "1".to_string() } else { tests.join(" && ") };
            let _ = writeln!(s, "    if ({cond}) {{");
            let _ = writeln!(s, "        NN2FLOW_EXIT({});", pf.flow.id);
            let _ = writeln!(s, "        return {};", pf.flow.output_class);
            s.push_str("    }\n");
        }
        s.push_str("\n    // fallback\n");
    } else {
        s.push('\n');
    }
    for n in net.hidden_neurons().filter(|n| !done.contains(n)) {
        emit_hidden(&mut s, net, n);
    }
    for i in 0..layers[out_layer].outputs() {
        emit_affine(&mut s, net, out_layer, i, &format!("o[{i}]"));
    }
    for k in 1..layers[out_layer].outputs() {
        let _ = writeln!(s, "    if (o[{k}] > o[c]) c = {k};");
    }
    s.push_str("    return c;\n}\n");
    Ok(EmittedProgram { kind, entry: "predict", source: s })
}

pub fn emit_reference(net: &QuantizedMLP) -> EmittedProgram {
    emit_program(net, None).expect("reference emission cannot fail")
}

pub fn emit_hybrid(net: &QuantizedMLP, plan: &ExecutionPlan) -> Result<EmittedProgram, CodegenError> {
    emit_program(net, Some(plan))
}

/// A hosted `main` that reads CSV rows (features, optional trailing label)
/// from stdin and prints one class per line. With `NN2FLOW_TRACE_EXIT`
/// defined it prints `class exit`, where exit is a flow id or -1.
/// `--header` skips the first line. Malformed or out-of-domain rows exit 1.
pub fn emit_test_harness(net: &QuantizedMLP) -> String {
    let d = net.input_dim();
    let lo: Vec<String> = net.input_domain().iter().map(|i| i.lo.to_string()).collect();
    let hi: Vec<String> = net.input_domain().iter().map(|i| i.hi.to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "// nn2flow {TOOL_VERSION}: test harness");
    let _ = writeln!(s, "// model: {}", net.name());
    let _ = writeln!(s, "// model hash: {}\n", net.hash());
    s.push_str("#include <stdint.h>\n#include <stdio.h>\n#include <stdlib.h>\n#include <string.h>\n\n");
    s.push_str("int predict(const int32_t *x);\n");
    s.push_str("#ifdef NN2FLOW_TRACE_EXIT\nextern int nn2flow_last_exit;\n#endif\n\n");
    let _ = writeln!(s, "#define DIM {d}");
    let _ = writeln!(s, "static const long long LO[DIM] = {{{}}};", lo.join(", "));
    let _ = writeln!(s, "static const long long HI[DIM] = {{{}}};\n", hi.join(", "));
    s.push_str(HARNESS_BODY);
    s
}

const HARNESS_BODY: &str = r#"static int fail(long line, const char *why)
{
    fprintf(stderr, "line %ld: %s\n", line, why);
    return 1;
}

/* Parses up to DIM + 1 comma-separated integers; returns the field count or -1. */
static int parse_row(char *p, long long *v)
{
    int n = 0;
    for (;;) {
        char *end;
        while (*p == ' ' || *p == '\t') p++;
        if (n == DIM + 1) return -1;
        v[n] = strtoll(p, &end, 10);
        if (end == p) return -1;
        n++;
        p = end;
        while (*p == ' ' || *p == '\t') p++;
        if (*p == ',') { p++; continue; }
        if (*p == '\0' || *p == '\n' || *p == '\r') return n;
        return -1;
    }
}

int main(int argc, char **argv)
{
    char buf[8192];
    long long v[DIM + 1];
    int32_t x[DIM];
    long line = 0;
    int skip = argc > 1 && strcmp(argv[1], "--header") == 0;
    while (fgets(buf, sizeof buf, stdin)) {
        int n, i;
        line++;
        if (skip) { skip = 0; continue; }
        if (buf[strspn(buf, " \t\r\n")] == '\0') continue;
        if (!strchr(buf, '\n') && !feof(stdin)) return fail(line, "line too long");
        n = parse_row(buf, v);
        if (n != DIM && n != DIM + 1) return fail(line, "expected DIM or DIM+1 integer fields");
        for (i = 0; i < DIM; i++) {
            if (v[i] < LO[i] || v[i] > HI[i]) return fail(line, "feature outside the input domain");
            x[i] = (int32_t)v[i];
        }
#ifdef NN2FLOW_TRACE_EXIT
        {
            int c = predict(x);
            printf("%d %d\n", c, nn2flow_last_exit);
        }
#else
        printf("%d\n", predict(x));
#endif
    }
    return 0;
}
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{dense_zero, fixture_a};
    use crate::flow::{schedule, LogicFlow};
    use crate::model::{DenseLayer, Interval, SignConstraint};

    fn fixture_a_plan(net: &QuantizedMLP) -> ExecutionPlan {
        let f = LogicFlow {
            id: 0,
            conditions: vec![SignConstraint::inactive(0, 0)],
            output_class: 1,
            source_leaf: 0,
            merged_leaves: vec![],
        };
        schedule(net, &[f]).unwrap()
    }

    fn region<'a>(src: &'a str, from: &str, to: &str) -> &'a str {
        let a = src.find(from).unwrap();
        let b = src.find(to).unwrap();
        &src[a..b]
    }

    #[test]
    fn affine_text() {
        let net = fixture_a();
        assert_eq!(affine_expr(&net, 0, 0), "2 * (int64_t)x[0] + 0 * (int64_t)x[1] - 1");
        assert_eq!(affine_expr(&net, 1, 1), "-1 * r0[0] + 1 * r0[1] + 1");
    }

    #[test]
    fn one_multiplication_per_prologue_weight() {
        let net = fixture_a();
        let plan = fixture_a_plan(&net);
        let src = emit_hybrid(&net, &plan).unwrap().source;
        let prologue = region(&src, "// prologue", "// logic flows");
        let weights: usize = plan.prologue.iter().map(|n| net.layers()[n.layer].inputs()).sum();
        assert_eq!(prologue.matches('*').count(), weights);
        assert!(!prologue.contains("z0[1]"));
        assert!(src.find("// fallback").unwrap() > src.find("return 1;").unwrap());
    }

    #[test]
    fn only_fixed_width_include() {
        let net = fixture_a();
        for src in [emit_reference(&net).source, emit_hybrid(&net, &fixture_a_plan(&net)).unwrap().source] {
            let includes: Vec<&str> = src.lines().filter(|l| l.starts_with("#include")).collect();
            assert_eq!(includes, vec!["#include <stdint.h>"]);
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let net = fixture_a();
        let plan = fixture_a_plan(&net);
        assert_eq!(emit_hybrid(&net, &plan).unwrap(), emit_hybrid(&net, &plan).unwrap());
        assert_eq!(emit_reference(&net), emit_reference(&net));
        assert_eq!(emit_test_harness(&net), emit_test_harness(&net));
    }

    #[test]
    fn wide_layers_use_tables() {
        let mut net = dense_zero("wide", &[20, 2, 2]);
        net = QuantizedMLP::new("wide", 20, vec![Interval::new(0, 1); 20], net.layers().to_vec()).unwrap();
        let src = emit_reference(&net).source;
        assert!(src.contains("static const int32_t W0[2][20]"));
        assert!(src.contains("for (j = 0; j < 20; ++j)"));
        assert!(!src.contains("W1"));
    }

    #[test]
    fn stale_or_foreign_plans_are_refused() {
        let net = fixture_a();
        let mut plan = fixture_a_plan(&net);
        plan.prologue.push(NeuronId::new(3, 0));
        assert_eq!(emit_hybrid(&net, &plan), Err(CodegenError::UnknownNeuron(NeuronId::new(3, 0))));
        let other = QuantizedMLP::new(
            "other",
            2,
            vec![Interval::new(0, 7); 2],
            vec![DenseLayer { weights: vec![vec![1, 1]; 2], biases: vec![0, 0] }],
        )
        .unwrap();
        assert!(matches!(emit_hybrid(&other, &fixture_a_plan(&net)), Err(CodegenError::Plan(_))));
    }

    /// Snapshot of the fixture-A programs. Set NN2FLOW_BLESS=1 to rewrite.
    #[test]
    fn fixture_a_golden_files() {
        let net = fixture_a();
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/fixture-a/golden");
        let cases = [
            ("fixture_a_ref.c", emit_reference(&net).source),
            ("fixture_a_hybrid.c", emit_hybrid(&net, &fixture_a_plan(&net)).unwrap().source),
            ("fixture_a_harness.c", emit_test_harness(&net)),
        ];
        for (name, text) in cases {
            let path = dir.join(name);
            if std::env::var_os("NN2FLOW_BLESS").is_some() {
                std::fs::create_dir_all(&dir).unwrap();
                std::fs::write(&path, &text).unwrap();
            }
            let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(text, golden, "{name} drifted from its snapshot");
        }
    }
}
