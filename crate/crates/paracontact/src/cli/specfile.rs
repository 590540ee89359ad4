//! Plain-text manifold description format.
//!
//! ```text
//! # comment
//! dim = 3
//! coords = x y z
//! eps0 = 1
//! eps1 = -1
//! sample_box = -2 2; -2 2; -2 2
//!
//! [metric]          # lower-triangle entries g i j with i >= j, row-major
//! g 0 0 = (y^2 + 1)/4
//! g 2 0 = -y/4
//!
//! [phi]             # phi i j = i-th component of the image of the j-th
//! phi 1 0 = -1      # coordinate field
//!
//! [xi]
//! xi 2 = 2
//!
//! [eta]
//! eta 0 = -y/2
//!
//! [exclude]         # expressions that must stay away from zero at samples
//! sin(x)
//! ```
//!
//! Missing entries are zero. The metric accepts only lower-triangle entries,
//! so an asymmetric metric is unrepresentable and rejected at parse time.

use crate::expr::Expression;
use crate::geometry::{ChartManifold, EndoField, OneForm, VectorField};
use crate::structure::PCStructure;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpecFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expression error: {message}")]
    Expr { line: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("no [metric] section")]
    MissingMetric,
}

fn err(line: usize, message: impl Into<String>) -> SpecFileError {
    SpecFileError::Parse {
        line,
        message: message.into(),
    }
}

/// Parse the sectioned text format into a structure named after `name`.
pub fn parse_spec(text: &str, name: &str) -> Result<PCStructure, SpecFileError> {
    let mut dim: Option<usize> = None;
    let mut coords: Option<Vec<String>> = None;
    let mut eps0: Option<f64> = None;
    let mut eps1: Option<f64> = None;
    let mut sample_box: Option<Vec<(f64, f64)>> = None;

    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Header,
        Metric,
        Phi,
        Xi,
        Eta,
        Exclude,
    }
    let mut section = Section::Header;
    let mut metric_entries: Vec<(usize, usize, Expression, usize)> = Vec::new();
    let mut phi_entries: Vec<(usize, usize, Expression)> = Vec::new();
    let mut xi_entries: Vec<(usize, Expression)> = Vec::new();
    let mut eta_entries: Vec<(usize, Expression)> = Vec::new();
    let mut excluded: Vec<Expression> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(sec) = line.strip_prefix('[') {
            let sec = sec
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, "unterminated section header"))?;
            section = match sec {
                "metric" => Section::Metric,
                "phi" => Section::Phi,
                "xi" => Section::Xi,
                "eta" => Section::Eta,
                "exclude" => Section::Exclude,
                other => return Err(err(lineno, format!("unknown section `[{other}]`"))),
            };
            continue;
        }

        let need_coords = |lineno: usize| -> Result<&Vec<String>, SpecFileError> {
            coords
                .as_ref()
                .ok_or_else(|| err(lineno, "`coords` must come before any section"))
        };

        match section {
            Section::Header => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err(lineno, "expected `key = value`"))?;
                let key = key.trim();
                let value = value.trim();
                match key {
                    "dim" => {
                        dim = Some(value.parse().map_err(|_| {
                            err(lineno, format!("invalid dimension `{value}`"))
                        })?)
                    }
                    "coords" => {
                        coords = Some(
                            value
                                .split([' ', ','])
                                .filter(|s| !s.is_empty())
                                .map(|s| s.to_string())
                                .collect(),
                        )
                    }
                    "eps0" | "eps1" => {
                        let v: f64 = value.parse().map_err(|_| {
                            err(lineno, format!("invalid sign `{value}`"))
                        })?;
                        if v != 1.0 && v != -1.0 {
                            return Err(err(lineno, format!("`{key}` must be +1 or -1")));
                        }
                        if key == "eps0" {
                            eps0 = Some(v);
                        } else {
                            eps1 = Some(v);
                        }
                    }
                    "sample_box" => {
                        let mut the_box = Vec::new();
                        for part in value.split(';') {
                            let nums: Vec<f64> = part
                                .split_whitespace()
                                .map(|s| s.parse::<f64>())
                                .collect::<Result<_, _>>()
                                .map_err(|_| {
                                    err(lineno, format!("invalid interval `{part}`"))
                                })?;
                            if nums.len() != 2 || nums[0] >= nums[1] {
                                return Err(err(
                                    lineno,
                                    format!("interval `{part}` must be `lo hi` with lo < hi"),
                                ));
                            }
                            the_box.push((nums[0], nums[1]));
                        }
                        sample_box = Some(the_box);
                    }
                    other => return Err(err(lineno, format!("unknown key `{other}`"))),
                }
            }
            Section::Metric => {
                let c = need_coords(lineno)?.clone();
                let (i, j, e) = parse_indexed(line, "g", 2, &c, lineno)?;
                if j > i {
                    return Err(err(
                        lineno,
                        format!("metric entries must be lower-triangle (i >= j), got g {i} {j}"),
                    ));
                }
                if metric_entries.iter().any(|(a, b, _, _)| *a == i && *b == j) {
                    return Err(err(lineno, format!("duplicate metric entry g {i} {j}")));
                }
                metric_entries.push((i, j, e, lineno));
            }
            Section::Phi => {
                let c = need_coords(lineno)?.clone();
                let (i, j, e) = parse_indexed(line, "phi", 2, &c, lineno)?;
                phi_entries.push((i, j, e));
            }
            Section::Xi => {
                let c = need_coords(lineno)?.clone();
                let (i, _, e) = parse_indexed(line, "xi", 1, &c, lineno)?;
                xi_entries.push((i, e));
            }
            Section::Eta => {
                let c = need_coords(lineno)?.clone();
                let (i, _, e) = parse_indexed(line, "eta", 1, &c, lineno)?;
                eta_entries.push((i, e));
            }
            Section::Exclude => {
                let c = need_coords(lineno)?.clone();
                let e = Expression::parse(line, &c).map_err(|pe| SpecFileError::Expr {
                    line: lineno,
                    message: pe.to_string(),
                })?;
                excluded.push(e);
            }
        }
    }

    let dim = dim.ok_or(SpecFileError::MissingKey("dim"))?;
    let coords = coords.ok_or(SpecFileError::MissingKey("coords"))?;
    let eps0 = eps0.ok_or(SpecFileError::MissingKey("eps0"))?;
    let eps1 = eps1.ok_or(SpecFileError::MissingKey("eps1"))?;
    let sample_box = sample_box.ok_or(SpecFileError::MissingKey("sample_box"))?;
    if coords.len() != dim {
        return Err(err(0, format!("dim = {dim} but {} coords", coords.len())));
    }
    if sample_box.len() != dim {
        return Err(err(
            0,
            format!("sample_box has {} intervals, expected {dim}", sample_box.len()),
        ));
    }
    if metric_entries.is_empty() {
        return Err(SpecFileError::MissingMetric);
    }
    for (i, j, _, line) in &metric_entries {
        if *i >= dim || *j >= dim {
            return Err(err(*line, format!("metric index out of range: g {i} {j}")));
        }
    }

    let entries: Vec<(usize, usize, Expression)> = metric_entries
        .into_iter()
        .map(|(i, j, e, _)| (i, j, e))
        .collect();
    let chart = ChartManifold::new(coords.clone(), &entries, sample_box, excluded);

    let zero = Expression::constant(0.0, &coords);
    let mut phi = vec![zero.clone(); dim * dim];
    for (i, j, e) in phi_entries {
        if i >= dim || j >= dim {
            return Err(err(0, format!("phi index out of range: phi {i} {j}")));
        }
        phi[i * dim + j] = e;
    }
    let mut xi = vec![zero.clone(); dim];
    for (i, e) in xi_entries {
        if i >= dim {
            return Err(err(0, format!("xi index out of range: xi {i}")));
        }
        xi[i] = e;
    }
    let mut eta = vec![zero; dim];
    for (i, e) in eta_entries {
        if i >= dim {
            return Err(err(0, format!("eta index out of range: eta {i}")));
        }
        eta[i] = e;
    }

    Ok(PCStructure {
        name: name.to_string(),
        chart,
        phi: EndoField(phi),
        xi: VectorField(xi),
        eta: OneForm(eta),
        eps0,
        eps1,
    })
}

fn parse_indexed(
    line: &str,
    prefix: &str,
    indices: usize,
    coords: &[String],
    lineno: usize,
) -> Result<(usize, usize, Expression), SpecFileError> {
    let (lhs, rhs) = line
        .split_once('=')
        .ok_or_else(|| err(lineno, "expected `name indices = expression`"))?;
    let mut parts = lhs.split_whitespace();
    let head = parts.next().unwrap_or("");
    if head != prefix {
        return Err(err(lineno, format!("expected `{prefix} ...`, got `{head}`")));
    }
    let idx: Vec<usize> = parts
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| err(lineno, "indices must be integers"))?;
    if idx.len() != indices {
        return Err(err(
            lineno,
            format!("`{prefix}` takes {indices} indices, got {}", idx.len()),
        ));
    }
    let e = Expression::parse(rhs.trim(), coords).map_err(|pe| SpecFileError::Expr {
        line: lineno,
        message: pe.to_string(),
    })?;
    let i = idx[0];
    let j = if indices == 2 { idx[1] } else { 0 };
    Ok((i, j, e))
}

/// Serialize a structure back into the text format. Zero components are
/// omitted; expressions print fully parenthesized and re-parse identically.
pub fn serialize_spec(s: &PCStructure) -> String {
    let dim = s.dim();
    let mut out = String::new();
    let _ = writeln!(out, "# {}", s.name);
    let _ = writeln!(out, "dim = {dim}");
    let _ = writeln!(out, "coords = {}", s.chart.coords().join(" "));
    let _ = writeln!(out, "eps0 = {}", s.eps0 as i64);
    let _ = writeln!(out, "eps1 = {}", s.eps1 as i64);
    let the_box: Vec<String> = s
        .chart
        .sample_box
        .iter()
        .map(|(lo, hi)| format!("{lo} {hi}"))
        .collect();
    let _ = writeln!(out, "sample_box = {}", the_box.join("; "));
    let _ = writeln!(out, "\n[metric]");
    for i in 0..dim {
        for j in 0..=i {
            let e = s.chart.metric_entry(i, j);
            if !e.is_zero_constant() {
                let _ = writeln!(out, "g {i} {j} = {e}");
            }
        }
    }
    let _ = writeln!(out, "\n[phi]");
    for i in 0..dim {
        for j in 0..dim {
            let e = s.phi.component(i, j, dim);
            if !e.is_zero_constant() {
                let _ = writeln!(out, "phi {i} {j} = {e}");
            }
        }
    }
    let _ = writeln!(out, "\n[xi]");
    for (i, e) in s.xi.0.iter().enumerate() {
        if !e.is_zero_constant() {
            let _ = writeln!(out, "xi {i} = {e}");
        }
    }
    let _ = writeln!(out, "\n[eta]");
    for (i, e) in s.eta.0.iter().enumerate() {
        if !e.is_zero_constant() {
            let _ = writeln!(out, "eta {i} = {e}");
        }
    }
    if !s.chart.excluded.is_empty() {
        let _ = writeln!(out, "\n[exclude]");
        for e in &s.chart.excluded {
            let _ = writeln!(out, "{e}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{load_builtin, BUILTIN_NAMES};
    use crate::geometry::DConvention;
    use crate::structure::{classify, ClassifyConfig};

    #[test]
    fn builtins_round_trip_through_the_format() {
        for name in BUILTIN_NAMES {
            let s = load_builtin(name).unwrap();
            let text = serialize_spec(&s);
            let back = parse_spec(&text, name).unwrap();
            // identical component evaluation at a few points
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
            for _ in 0..5 {
                let p = s.chart.sample_points(1, &mut rng, |_| true).unwrap().remove(0);
                let a = s.at_point(&p, DConvention::Half).unwrap();
                let b = back.at_point(&p, DConvention::Half).unwrap();
                assert!(a.geo.g.sub(&b.geo.g).max_norm() < 1e-15, "{name} metric");
                assert!(a.phi.sub(&b.phi).max_norm() < 1e-15, "{name} phi");
                assert!(a.eta.sub(&b.eta).max_norm() < 1e-15, "{name} eta");
                assert!(a.xi.sub(&b.xi).max_norm() < 1e-15, "{name} xi");
            }
        }
    }

    #[test]
    fn exported_sasakian_still_classifies_sasakian() {
        let s = load_builtin("sasakian-r3").unwrap();
        let text = serialize_spec(&s);
        let back = parse_spec(&text, "sasakian-r3").unwrap();
        let (class, _) = classify(&back, &ClassifyConfig::default()).unwrap();
        assert!(class.sasakian && class.contact_metric && class.normal);
    }

    #[test]
    fn upper_triangle_metric_is_rejected() {
        let text = "dim = 2\ncoords = x y\neps0 = 1\neps1 = -1\nsample_box = -1 1; -1 1\n[metric]\ng 0 1 = x\n";
        let e = parse_spec(text, "bad").unwrap_err();
        match e {
            SpecFileError::Parse { message, .. } => {
                assert!(message.contains("lower-triangle"), "{message}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_metric_entry_is_rejected() {
        let text = "dim = 2\ncoords = x y\neps0 = 1\neps1 = -1\nsample_box = -1 1; -1 1\n[metric]\ng 0 0 = 1\ng 0 0 = 2\n";
        assert!(matches!(
            parse_spec(text, "bad"),
            Err(SpecFileError::Parse { .. })
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "dim = 2\ncoords = x y\neps0 = 1\neps1 = -1\nsample_box = -1 1; -1 1\n[metric]\ng 0 0 = 1 +\n";
        match parse_spec(text, "bad") {
            Err(SpecFileError::Expr { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_sign_is_rejected() {
        let text = "dim = 1\ncoords = x\neps0 = 2\neps1 = -1\nsample_box = -1 1\n[metric]\ng 0 0 = 1\n";
        assert!(matches!(
            parse_spec(text, "bad"),
            Err(SpecFileError::Parse { line: 3, .. })
        ));
    }
}
