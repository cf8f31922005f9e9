//! Runs the full battery through the binary and prints one line per criterion.

use std::process::Command;

use serde_json::Value;

const RUNTIME_LIMITS: [(u64, f64); 3] = [(1, 10.0), (4, 10.0), (10, 30.0)];

fn suite_stdout(seed: u64) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_beurling"))
        .args(["suite", "--seed", &seed.to_string()])
        .output()
        .expect("binary runs");
    (out.status.code(), String::from_utf8(out.stdout).expect("utf-8 report"))
}

/// Removes the `"timestamp": { .. }` object from a pretty-printed report.
fn strip_timestamp(text: &str) -> String {
    let key = "\"timestamp\": {";
    let Some(start) = text.find(key) else {
        return text.to_string();
    };
    let mut depth = 0usize;
    let mut end = text.len();
    for (i, ch) in text[start..].char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    end = start + i + 1;
                    break;
                }
            }
            _ => {}
        }
    }
    format!("{}{}", &text[..start], &text[end..])
}

fn check_summary(criterion: &Value) -> String {
    criterion["checks"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|c| {
            let mark = if c["pass"] == true { "" } else { " FAIL" };
            format!("{}={:.3e}{mark}", c["name"].as_str().unwrap_or("?"), c["value"].as_f64().unwrap_or(f64::NAN))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    let (code_a, first) = suite_stdout(42);
    let (code_b, second) = suite_stdout(42);
    let report: Value = serde_json::from_str(&first).expect("suite prints JSON");
    let criteria = report["suite"]["criteria"].as_array().expect("criteria array").clone();
    let seconds: Vec<f64> = report["provenance"]["timestamp"]["criterion_seconds"]
        .as_array()
        .expect("criterion timings")
        .iter()
        .map(|s| s.as_f64().unwrap_or(f64::INFINITY))
        .collect();

    let mut failed = Vec::new();
    for (k, c) in criteria.iter().enumerate() {
        let id = c["id"].as_u64().expect("criterion id");
        let limit = RUNTIME_LIMITS.iter().find(|(i, _)| *i == id).map(|&(_, s)| s);
        let within = limit.is_none_or(|l| seconds[k] <= l);
        let pass = c["pass"] == true && within;
        let timing = match limit {
            Some(l) => format!("{:.2}s (limit {l}s)", seconds[k]),
            None => format!("{:.2}s", seconds[k]),
        };
        println!(
            "criterion {id:>2} {} {} [{timing}] {}",
            if pass { "PASS" } else { "FAIL" },
            c["name"].as_str().unwrap_or(""),
            check_summary(c),
        );
        if !pass {
            failed.push(id);
        }
    }

    let identical = strip_timestamp(&first) == strip_timestamp(&second);
    let pass12 = identical && code_a == Some(0) && code_b == Some(0);
    println!(
        "criterion 12 {} determinism: identical reports modulo timestamp = {identical}, exit codes {:?} {:?}",
        if pass12 { "PASS" } else { "FAIL" },
        code_a,
        code_b,
    );
    if !pass12 {
        failed.push(12);
    }
    if criteria.len() != 11 {
        println!("suite reported {} criteria, expected 11", criteria.len());
        std::process::exit(1);
    }
    if !failed.is_empty() {
        println!("failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("all 12 criteria pass");
}
