// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtl_witness::{Design, TestCase};

const ALWAYS_LEAVES: &[&str] = &["a", "b", "r", "q", "w"];
const ASSIGN_LEAVES: &[&str] = &["a", "b", "r", "q"];
const OPS: &[&str] = &["+", "-", "&", "|", "^", "<<", ">>", "*"];
const CMP: &[&str] = &["==", "!=", "<", ">=", "<=", ">"];

fn leaf(rng: &mut ChaCha8Rng, leaves: &[&str]) -> String {
    if rng.gen_bool(0.25) {
        format!("4'd{}", rng.gen_range(0..16))
    } else {
        leaves[rng.gen_range(0..leaves.len())].to_string()
    }
}

fn expr(rng: &mut ChaCha8Rng, depth: u32, leaves: &[&str]) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return leaf(rng, leaves);
    }
    match rng.gen_range(0..6) {
        0 => format!("~{}", leaf(rng, leaves)),
        1 => format!("({})", expr(rng, depth - 1, leaves)),
        _ => format!(
            "{} {} {}",
            expr(rng, depth - 1, leaves),
            OPS[rng.gen_range(0..OPS.len())],
            leaf(rng, leaves)
        ),
    }
}

fn cond(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 => "c".into(),
        1 => "!c".into(),
        2 => format!("a[{}]", rng.gen_range(0..4)),
        _ => format!(
            "{} {} {}",
            expr(rng, 1, ALWAYS_LEAVES),
            CMP[rng.gen_range(0..CMP.len())],
            leaf(rng, ALWAYS_LEAVES)
        ),
    }
}

fn stmts(rng: &mut ChaCha8Rng, depth: u32, indent: usize, out: &mut String) {
    let n = rng.gen_range(1..=3);
    let pad = " ".repeat(indent);
    for _ in 0..n {
        match if depth == 0 { 0 } else { rng.gen_range(0..4) } {
            2 => {
                out.push_str(&format!("{pad}if ({}) begin\n", cond(rng)));
                stmts(rng, depth - 1, indent + 2, out);
                if rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}end else begin\n"));
                    stmts(rng, depth - 1, indent + 2, out);
                }
                out.push_str(&format!("{pad}end\n"));
            }
            3 => {
                out.push_str(&format!("{pad}case (b)\n"));
                let arms = rng.gen_range(1..=3);
                let mut labels: Vec<u64> = (0..16).collect();
                for _ in 0..arms {
                    let l = labels.remove(rng.gen_range(0..labels.len()));
                    out.push_str(&format!("{pad}  4'd{l}: begin\n"));
                    stmts(rng, depth - 1, indent + 4, out);
                    out.push_str(&format!("{pad}  end\n"));
                }
                if rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}  default: begin\n"));
                    stmts(rng, depth - 1, indent + 4, out);
                    out.push_str(&format!("{pad}  end\n"));
                }
                out.push_str(&format!("{pad}endcase\n"));
            }
            _ => {
                let target = if rng.gen_bool(0.5) { "r" } else { "q" };
                let op = if rng.gen_bool(0.7) { "<=" } else { "=" };
                out.push_str(&format!("{pad}{target} {op} {};\n", expr(rng, 2, ALWAYS_LEAVES)));
            }
        }
    }
}

/// A random well-formed design over inputs `a`, `b` (4 bit) and `c`.
pub fn random_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from(
        "module gen(\n  input [3:0] a,\n  input [3:0] b,\n  input c,\n  output [3:0] y,\n  output reg [3:0] q\n);\n  reg [3:0] r;\n  wire [3:0] w;\n",
    );
    s.push_str(&format!("  assign w = {};\n", expr(&mut rng, 2, ASSIGN_LEAVES)));
    s.push_str("  assign y = r ^ w;\n");
    s.push_str("  always @(posedge clk) begin\n");
    stmts(&mut rng, 3, 4, &mut s);
    s.push_str("  end\nendmodule\n");
    s
}

/// Random stimulus for `design` with `cycles` rows.
pub fn random_case(design: &Design, cycles: usize, rng: &mut ChaCha8Rng) -> TestCase {
    let signals: Vec<String> = design.input_names().iter().map(|s| s.to_string()).collect();
    let rows = (0..cycles)
        .map(|_| {
            design
                .inputs
                .iter()
                .map(|&id| rng.gen::<u64>() & design.signal(id).mask())
                .collect()
        })
        .collect();
    TestCase::new("rand", signals, rows)
}

/// Change every run of spaces to a random amount of spaces and tabs and
/// sprinkle blank lines, leaving tokens untouched.
pub fn reflow_whitespace(source: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for line in source.lines() {
        if rng.gen_bool(0.2) {
            out.push('\n');
        }
        for (i, word) in line.split(' ').enumerate() {
            if i > 0 {
                let n = rng.gen_range(1..=3);
                for _ in 0..n {
                    out.push(if rng.gen_bool(0.2) { '\t' } else { ' ' });
                }
            }
            out.push_str(word);
        }
        out.push('\n');
    }
    out
}

pub const BUILTIN_DESIGNS: &[(&str, &str)] = &[
    ("decoder_3_to_8", include_str!("../../suite/decoder_3_to_8.mv")),
    ("alu", include_str!("../../suite/alu.mv")),
    ("counter", include_str!("../../suite/counter.mv")),
    ("led_controller", include_str!("../../suite/led_controller.mv")),
    ("fsm", include_str!("../../suite/fsm.mv")),
    ("i2c_ctrl", include_str!("../../suite/i2c_ctrl.mv")),
];
