//! Line-oriented reaction list format.
//!
//! ```text
//! species A input
//! species B
//! 2A + B -> C ; k=0.5 ; phase=O7
//! C -> 0 ; k=1
//! ```
//!
//! `species` lines fix registry order and roles; undeclared species are
//! registered as `generic` on first use. `0` (or `∅`) is the empty complex
//! and `#` starts a comment.

use std::fmt::Write as _;

use super::{is_identifier, Complex, Crn, PhaseTag, Reaction, Role, SpeciesRegistry};
use crate::error::{Error, Result};

pub(crate) fn print(crn: &Crn) -> String {
    let reg = crn.registry();
    let mut out = String::new();
    for id in reg.ids() {
        let _ = writeln!(out, "species {} {}", reg.name(id), reg.role(id));
    }
    for r in crn.reactions() {
        let _ = write!(
            out,
            "{} -> {} ; k={}",
            side(reg, &r.reactant),
            side(reg, &r.product),
            r.rate
        );
        if let Some(p) = &r.phase {
            let _ = write!(out, " ; phase={p}");
        }
        out.push('\n');
    }
    out
}

fn side(reg: &SpeciesRegistry, c: &Complex) -> String {
    if c.is_empty() {
        return "0".into();
    }
    c.terms()
        .iter()
        .map(|&(id, n)| {
            if n == 1 {
                reg.name(id).to_string()
            } else {
                format!("{n}{}", reg.name(id))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

pub(crate) fn parse(src: &str) -> Result<Crn> {
    let mut reg = SpeciesRegistry::new();
    let mut reactions = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("species ") {
            let mut parts = rest.split_whitespace();
            let name = parts.next().ok_or_else(|| err("missing species name".into()))?;
            let role = match parts.next() {
                None => Role::Generic,
                Some(r) => Role::parse(r).ok_or_else(|| err(format!("unknown role `{r}`")))?,
            };
            if parts.next().is_some() {
                return Err(err("trailing tokens after species role".into()));
            }
            reg.register(name, role).map_err(|e| err(e.to_string()))?;
            continue;
        }

        let mut fields = line.split(';').map(str::trim);
        let body = fields.next().unwrap_or("");
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| err("expected `->`".into()))?;
        let reactant = parse_side(&mut reg, lhs).map_err(err)?;
        let product = parse_side(&mut reg, rhs).map_err(err)?;
        let mut rate = None;
        let mut phase = None;
        for f in fields {
            if let Some(v) = f.strip_prefix("k=") {
                let k: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("invalid rate `{v}`")))?;
                rate = Some(k);
            } else if let Some(v) = f.strip_prefix("phase=") {
                phase = Some(PhaseTag::new(v.trim()).map_err(|e| err(e.to_string()))?);
            } else {
                return Err(err(format!("unexpected field `{f}`")));
            }
        }
        let rate = rate.ok_or_else(|| err("missing `k=<rate>`".into()))?;
        let mut r = Reaction::new(reactant, product, rate).map_err(|e| err(e.to_string()))?;
        r.phase = phase;
        reactions.push(r);
    }
    Crn::new(reg, reactions)
}

fn parse_side(reg: &mut SpeciesRegistry, s: &str) -> std::result::Result<Complex, String> {
    let s = s.trim();
    if s == "0" || s == "∅" {
        return Ok(Complex::empty());
    }
    let mut terms = Vec::new();
    for tok in s.split('+') {
        let tok = tok.trim();
        let digits = tok.chars().take_while(char::is_ascii_digit).count();
        let (coef, name) = tok.split_at(digits);
        let coef: u32 = if coef.is_empty() {
            1
        } else {
            coef.parse().map_err(|_| format!("invalid coefficient in `{tok}`"))?
        };
        let name = name.trim();
        if coef == 0 || !is_identifier(name) {
            return Err(format!("invalid term `{tok}`"));
        }
        let id = reg
            .get_or_register(name, Role::Generic)
            .map_err(|e| e.to_string())?;
        terms.push((id, coef));
    }
    Ok(Complex::new(terms))
}
