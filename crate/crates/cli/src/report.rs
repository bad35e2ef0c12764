use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Significant digits of numbers in machine output.
pub const MACHINE_DIGITS: usize = 12;
/// Significant digits of numbers in human output.
pub const HUMAN_DIGITS: usize = 6;

pub const EXIT_AFFIRMATIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub args: Vec<String>,
    /// SHA-256 of the scenario bytes and the effective arguments.
    pub inputs_digest: String,
    pub results: Value,
    pub warnings: Vec<String>,
    pub exit_status: i32,
}

pub fn digest(scenario: Option<&[u8]>, args: &[String]) -> String {
    let mut h = Sha256::new();
    match scenario {
        Some(bytes) => {
            h.update(b"scenario\0");
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        None => h.update(b"no-scenario\0"),
    }
    for a in args {
        h.update((a.len() as u64).to_le_bytes());
        h.update(a.as_bytes());
    }
    hex::encode(h.finalize())
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"), digits);
            *v = serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_value(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_value(x, digits)),
        _ => {}
    }
}

impl Report {
    pub fn to_machine(&self) -> String {
        let mut r = self.clone();
        round_value(&mut r.results, MACHINE_DIGITS);
        let mut s = serde_json::to_string_pretty(&r).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn parse_machine(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub fn to_human(&self) -> String {
        let mut out = format!("cohist {}\n", self.args.join(" "));
        render(&self.results, 0, &mut out);
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str(&format!("digest: {}\n", &self.inputs_digest[..16.min(self.inputs_digest.len())]));
        out
    }
}

fn human_number(x: f64) -> String {
    let r = round_sig(x, HUMAN_DIGITS);
    if r == 0.0 {
        return "0".into();
    }
    let mag = r.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (HUMAN_DIGITS as i32 - 1 - mag).max(0) as usize;
        let s = format!("{r:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.*e}", HUMAN_DIGITS - 1, r)
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(match n.as_f64() {
            Some(x) if n.is_f64() => human_number(x),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                if k == "fragment" {
                    out.push_str(&format!("{pad}{k}: (machine format only)\n"));
                    continue;
                }
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(1.0 / 27.0, 12), 0.0370370370370);
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert_eq!(human_number(1.0 / 27.0), "0.037037");
        assert_eq!(human_number(1.0), "1");
        assert_eq!(human_number(1e-12), "1.00000e-12");
    }

    #[test]
    fn machine_round_trip() {
        let r = Report {
            command: "prob".into(),
            args: vec!["C1".into(), "h0".into()],
            inputs_digest: digest(Some(b"{}"), &[]),
            results: json!({"probability": 1.0 / 27.0, "n": 3}),
            warnings: vec![],
            exit_status: 0,
        };
        let text = r.to_machine();
        let back = Report::parse_machine(&text).unwrap();
        assert_eq!(back.to_machine(), text);
        assert_eq!(back.results["probability"], json!(0.037037037037));
    }

    #[test]
    fn digest_depends_on_inputs() {
        let a = digest(Some(b"x"), &["1".into()]);
        assert_ne!(a, digest(Some(b"y"), &["1".into()]));
        assert_ne!(a, digest(Some(b"x"), &["2".into()]));
        assert_ne!(digest(None, &["ab".into()]), digest(None, &["a".into(), "b".into()]));
        assert_eq!(a.len(), 64);
    }
}
