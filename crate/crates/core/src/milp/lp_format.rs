//! CPLEX-style LP text for [`MilpModel`].
//!
//! A `\`-comment header records the model metadata so the file parses back to
//! an identical model. Content lines are indented by one space; unindented
//! lines must be section keywords. Long expressions wrap after eight terms.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{parse_err, Result};
use crate::numfmt::fmt17;
use crate::types::{LossConfig, RegConstraint, RegKind};

use super::model::{Constraint, MilpModel, Objective, Sense, VarKind, Variable};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[String]) {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        out.push(' ');
        out.push_str(t);
    }
}

/// Signed term pieces: `["-", "2.5e+00", "x"]` flattened into one string.
fn term(first: bool, coef: f64, body: &str) -> String {
    let (sign, mag) = if coef < 0.0 { ("-", -coef) } else { ("+", coef) };
    let lead = match (first, sign) {
        (true, "+") => String::new(),
        _ => format!("{sign} "),
    };
    if mag == 1.0 {
        format!("{lead}{body}")
    } else {
        format!("{lead}{} {body}", fmt17(mag))
    }
}

fn linear_terms(vars: &[Variable], lin: &[(usize, f64)], first: bool) -> Vec<String> {
    lin.iter()
        .enumerate()
        .map(|(i, &(v, c))| term(first && i == 0, c, &vars[v].name))
        .collect()
}

fn quad_terms(vars: &[Variable], quad: &[(usize, f64)], scale: f64) -> Vec<String> {
    quad.iter()
        .enumerate()
        .map(|(i, &(v, c))| term(i == 0, c * scale, &format!("{} ^2", vars[v].name)))
        .collect()
}

pub fn export_lp(model: &MilpModel) -> String {
    let vars = &model.variables;
    let mut out = String::new();
    let bounds: Vec<String> = model.reg.bounds().iter().map(|b| fmt17(*b)).collect();
    writeln!(out, "\\ mixture regression big-M model").unwrap();
    writeln!(out, "\\ n = {}", model.n).unwrap();
    writeln!(out, "\\ d = {}", model.d).unwrap();
    writeln!(out, "\\ k = {}", model.k).unwrap();
    writeln!(out, "\\ p = {}", model.loss.p()).unwrap();
    writeln!(out, "\\ reg = {}", model.reg.kind()).unwrap();
    writeln!(out, "\\ bounds = {}", bounds.join(",")).unwrap();
    writeln!(out, "\\ big_m = {}", fmt17(model.big_m)).unwrap();

    out.push_str("Minimize\n obj:");
    let mut terms = linear_terms(vars, &model.objective.linear, true);
    if !model.objective.quadratic.is_empty() {
        let lead = if terms.is_empty() { "[" } else { "+ [" };
        terms.push(lead.to_string());
        // the bracketed block is halved by the trailing `/ 2`
        terms.extend(quad_terms(vars, &model.objective.quadratic, 2.0));
        terms.push("] / 2".to_string());
    }
    push_terms(&mut out, &terms);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in &model.constraints {
        write!(out, " {}:", c.name).unwrap();
        let mut terms = linear_terms(vars, &c.linear, true);
        if !c.quadratic.is_empty() {
            let lead = if terms.is_empty() { "[" } else { "+ [" };
            terms.push(lead.to_string());
            terms.extend(quad_terms(vars, &c.quadratic, 1.0));
            terms.push("]".to_string());
        }
        terms.push(format!("{} {}", c.sense.symbol(), fmt17(c.rhs)));
        push_terms(&mut out, &terms);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for v in vars {
        match v.kind {
            VarKind::Free => writeln!(out, " {} free", v.name).unwrap(),
            VarKind::NonNegative => writeln!(out, " {} >= 0", v.name).unwrap(),
            VarKind::Binary => {}
        }
    }
    out.push_str("Binaries\n");
    for v in vars.iter().filter(|v| v.kind == VarKind::Binary) {
        writeln!(out, " {}", v.name).unwrap();
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

type Tok<'a> = (usize, &'a str);

struct RawExpr<'a> {
    line: usize,
    linear: Vec<(Tok<'a>, f64)>,
    quadratic: Vec<(Tok<'a>, f64)>,
}

/// Parses `[sign] [coef] name [^2]` terms with an optional `[ … ]` block.
/// Returns the expression and the remaining tokens.
fn parse_expr<'a>(toks: &[Tok<'a>], quad_divisor: Option<f64>) -> Result<(RawExpr<'a>, usize)> {
    let line = toks.first().map_or(0, |t| t.0);
    let mut expr = RawExpr {
        line,
        linear: Vec::new(),
        quadratic: Vec::new(),
    };
    let mut i = 0;
    let mut in_bracket = false;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < toks.len() {
        let (ln, tk) = toks[i];
        match tk {
            "<=" | ">=" | "=" if !in_bracket => break,
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "[" => {
                if in_bracket {
                    return Err(parse_err(ln, "nested `[`"));
                }
                in_bracket = true;
                sign = 1.0;
            }
            "]" => {
                if !in_bracket {
                    return Err(parse_err(ln, "unmatched `]`"));
                }
                in_bracket = false;
                if let Some(div) = quad_divisor {
                    if toks.get(i + 1).map(|t| t.1) != Some("/")
                        || toks.get(i + 2).and_then(|t| t.1.parse::<f64>().ok()) != Some(div)
                    {
                        return Err(parse_err(ln, format!("expected `] / {div}`")));
                    }
                    i += 2;
                }
            }
            _ => {
                if let Ok(v) = tk.parse::<f64>() {
                    if coef.is_some() {
                        return Err(parse_err(ln, format!("two coefficients before `{tk}`")));
                    }
                    coef = Some(v);
                } else {
                    let c = sign * coef.take().unwrap_or(1.0);
                    sign = 1.0;
                    let squared = toks.get(i + 1).map(|t| t.1) == Some("^2");
                    if in_bracket {
                        if !squared {
                            return Err(parse_err(ln, format!("expected `{tk} ^2` inside brackets")));
                        }
                        let div = quad_divisor.unwrap_or(1.0);
                        expr.quadratic.push(((ln, tk), c / div));
                        i += 1;
                    } else {
                        if squared {
                            return Err(parse_err(ln, "quadratic term outside brackets"));
                        }
                        expr.linear.push(((ln, tk), c));
                    }
                }
            }
        }
        i += 1;
    }
    if in_bracket {
        return Err(parse_err(line, "unterminated `[`"));
    }
    if coef.is_some() {
        return Err(parse_err(line, "dangling coefficient"));
    }
    Ok((expr, i))
}

fn header_value<'a>(header: &HashMap<&str, (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    header
        .get(key)
        .copied()
        .ok_or_else(|| parse_err(1, format!("header is missing `{key}`")))
}

fn header_num<T: std::str::FromStr>(header: &HashMap<&str, (usize, &str)>, key: &str) -> Result<T> {
    let (ln, v) = header_value(header, key)?;
    v.parse()
        .map_err(|_| parse_err(ln, format!("bad value `{v}` for `{key}`")))
}

pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section = Section::Header;
    let mut header: HashMap<&str, (usize, &str)> = HashMap::new();
    let mut objective_toks: Vec<Tok> = Vec::new();
    let mut constraint_toks: Vec<Tok> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut binaries: Vec<Variable> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        if let Some(comment) = raw.strip_prefix('\\') {
            if section == Section::Header {
                if let Some((k, v)) = comment.split_once('=') {
                    header.insert(k.trim(), (ln, v.trim()));
                }
            }
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            let next = match raw.trim().to_ascii_lowercase().as_str() {
                "minimize" => Section::Objective,
                "subject to" => Section::Constraints,
                "bounds" => Section::Bounds,
                "binaries" | "binary" => Section::Binaries,
                "end" => Section::End,
                _ => return Err(parse_err(ln, format!("unknown section `{}`", raw.trim()))),
            };
            if next as u8 <= section as u8 {
                return Err(parse_err(ln, format!("section `{}` out of order", raw.trim())));
            }
            section = next;
            continue;
        }
        let toks = raw.split_whitespace().map(|t| (ln, t));
        match section {
            Section::Header => return Err(parse_err(ln, "content before `Minimize`")),
            Section::Objective => objective_toks.extend(toks),
            Section::Constraints => constraint_toks.extend(toks),
            Section::Bounds => {
                let t: Vec<&str> = raw.split_whitespace().collect();
                let kind = match t.as_slice() {
                    [_, "free"] => VarKind::Free,
                    [_, ">=", "0"] => VarKind::NonNegative,
                    _ => return Err(parse_err(ln, format!("unsupported bound `{}`", raw.trim()))),
                };
                variables.push(Variable {
                    name: t[0].to_string(),
                    kind,
                });
            }
            Section::Binaries => binaries.extend(raw.split_whitespace().map(|name| Variable {
                name: name.to_string(),
                kind: VarKind::Binary,
            })),
            Section::End => return Err(parse_err(ln, "content after `End`")),
        }
    }
    if section != Section::End {
        return Err(parse_err(text.lines().count(), "missing `End`"));
    }
    variables.extend(binaries);
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    if index.len() != variables.len() {
        return Err(parse_err(1, "variable declared twice"));
    }
    let resolve = |terms: Vec<(Tok, f64)>| -> Result<Vec<(usize, f64)>> {
        terms
            .into_iter()
            .map(|((ln, name), c)| {
                index
                    .get(name)
                    .map(|&v| (v, c))
                    .ok_or_else(|| parse_err(ln, format!("undeclared variable `{name}`")))
            })
            .collect()
    };

    let objective = {
        let toks = match objective_toks.first() {
            Some((_, "obj:")) => &objective_toks[1..],
            Some(&(ln, _)) => return Err(parse_err(ln, "objective must be named `obj:`")),
            None => &objective_toks[..],
        };
        let (expr, used) = parse_expr(toks, Some(2.0))?;
        if let Some(&(ln, t)) = toks.get(used) {
            return Err(parse_err(ln, format!("unexpected `{t}` in objective")));
        }
        Objective {
            linear: resolve(expr.linear)?,
            quadratic: resolve(expr.quadratic)?,
        }
    };

    let mut constraints = Vec::new();
    let mut rest = &constraint_toks[..];
    while let Some(&(ln, name)) = rest.first() {
        let name = name
            .strip_suffix(':')
            .ok_or_else(|| parse_err(ln, format!("expected a row name, found `{name}`")))?;
        let (expr, used) = parse_expr(&rest[1..], None)?;
        let after = &rest[1 + used..];
        let (sense, rhs) = match after {
            [(_, s), (rl, r), ..] => {
                let sense = match *s {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    "=" => Sense::Eq,
                    _ => unreachable!("parse_expr stops at a sense"),
                };
                let rhs: f64 = r
                    .parse()
                    .map_err(|_| parse_err(*rl, format!("bad right-hand side `{r}`")))?;
                (sense, rhs)
            }
            _ => {
                return Err(parse_err(
                    expr.line.max(ln),
                    format!("row `{name}` has no sense and rhs"),
                ))
            }
        };
        constraints.push(Constraint {
            name: name.to_string(),
            linear: resolve(expr.linear)?,
            quadratic: resolve(expr.quadratic)?,
            sense,
            rhs,
        });
        rest = &after[2..];
    }

    let p: u8 = header_num(&header, "p")?;
    let (rl, kind) = header_value(&header, "reg")?;
    let kind = RegKind::parse(kind).map_err(|e| parse_err(rl, e.to_string()))?;
    let (bl, bounds) = header_value(&header, "bounds")?;
    let bounds = if bounds.is_empty() {
        Vec::new()
    } else {
        bounds
            .split(',')
            .map(|b| {
                b.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(bl, format!("bad bound `{b}`")))
            })
            .collect::<Result<_>>()?
    };
    let reg = if kind == RegKind::None {
        RegConstraint::none()
    } else {
        RegConstraint::new(kind, bounds).map_err(|e| parse_err(bl, e.to_string()))?
    };
    Ok(MilpModel {
        n: header_num(&header, "n")?,
        d: header_num(&header, "d")?,
        k: header_num(&header, "k")?,
        loss: LossConfig::from_p(p).map_err(|e| parse_err(header["p"].0, e.to_string()))?,
        reg,
        big_m: header_num(&header, "big_m")?,
        variables,
        constraints,
        objective,
    })
}
