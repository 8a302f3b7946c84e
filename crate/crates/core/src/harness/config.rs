//! Experiment configuration files.
//!
//! The format is line based: `key = value`, `#` starts a comment and
//! `[section]` opens a section. Numeric values accept small expressions over
//! `e`, `pi` and `ell` (the domain diameter), e.g. `A = e*ell`.

use crate::exponents::ExponentExpr;
use crate::field::{LatticeField, ScalarField};
use crate::geometry::{DomainSpec, Point};
use crate::operators::Kernel;
use crate::profile::RadialProfile;
use crate::{Error, Result};
use std::fmt;

const SECTIONS: [&str; 4] = ["experiment", "domain", "exponents", "weights"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<Entry>,
}

/// A parsed config file. Rendering with `Display` and parsing again yields
/// the same document up to line numbers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigDoc {
    pub sections: Vec<Section>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<ConfigDoc> {
        let mut doc = ConfigDoc::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                if doc.sections.iter().any(|s| s.name == name) {
                    return Err(err(line, format!("duplicate section [{name}]")));
                }
                doc.sections.push(Section { name: name.to_string(), entries: Vec::new() });
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(err(line, "empty key or value"));
            }
            if !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(line, format!("bad key `{k}`")));
            }
            let sec = doc.sections.last_mut().ok_or_else(|| err(line, "entry before any section"))?;
            if sec.entries.iter().any(|e| e.key == k) {
                return Err(err(line, format!("duplicate key `{k}`")));
            }
            sec.entries.push(Entry { key: k.to_string(), value: v.to_string(), line });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.section(section)?.entries.iter().find(|e| e.key == key)
    }

    /// Sets a value, creating the section when needed.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        let idx = match self.sections.iter().position(|s| s.name == section) {
            Some(i) => i,
            None => {
                self.sections.push(Section { name: section.to_string(), entries: Vec::new() });
                self.sections.len() - 1
            }
        };
        let sec = &mut self.sections[idx];
        match sec.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => sec.entries.push(Entry { key: key.to_string(), value: value.to_string(), line: 0 }),
        }
    }

    /// The document with line numbers cleared, for comparisons.
    pub fn normalized(&self) -> ConfigDoc {
        let mut d = self.clone();
        for s in &mut d.sections {
            for e in &mut s.entries {
                e.line = 0;
            }
        }
        d
    }
}

impl fmt::Display for ConfigDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.name)?;
            for e in &s.entries {
                writeln!(f, "{} = {}", e.key, e.value)?;
            }
        }
        Ok(())
    }
}

/// Evaluates a numeric expression with `+ - * / ^`, parentheses, the
/// constants `e`, `pi`, `ell` and the functions `ln`, `exp`, `sqrt`.
pub fn eval_expr(src: &str, ell: f64) -> std::result::Result<f64, String> {
    let toks = tokenize(src)?;
    let mut p = ExprParser { toks: &toks, pos: 0, ell };
    let v = p.sum()?;
    if p.pos != toks.len() {
        return Err(format!("unexpected trailing input in `{src}`"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            if i < cs.len() && (cs[i] == 'e' || cs[i] == 'E') {
                let mut j = i + 1;
                if j < cs.len() && (cs[j] == '+' || cs[j] == '-') {
                    j += 1;
                }
                if j < cs.len() && cs[j].is_ascii_digit() {
                    i = j;
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let t: String = cs[st..i].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| format!("bad number `{t}`"))?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    ell: f64,
}

impl ExprParser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let r = self.product()?;
            v = if c == '+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let r = self.unary()?;
            v = if c == '*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> std::result::Result<f64, String> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        let tok = self.toks.get(self.pos).cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(v),
            Tok::Op('(') => {
                let v = self.sum()?;
                if self.peek_op() != Some(')') {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let a = self.sum()?;
                    if self.peek_op() != Some(')') {
                        return Err("missing `)`".into());
                    }
                    self.pos += 1;
                    return match name.as_str() {
                        "ln" => Ok(a.ln()),
                        "exp" => Ok(a.exp()),
                        "sqrt" => Ok(a.sqrt()),
                        _ => Err(format!("unknown function `{name}`")),
                    };
                }
                match name.as_str() {
                    "e" => Ok(std::f64::consts::E),
                    "pi" => Ok(std::f64::consts::PI),
                    "ell" => Ok(self.ell),
                    _ => Err(format!("unknown name `{name}`")),
                }
            }
            Tok::Op(c) => Err(format!("unexpected `{c}`")),
        }
    }
}

/// Splits `a, b(c, d), e` at top-level commas.
pub fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Splits `name(args...)` into the name and its top-level arguments.
pub fn parse_call(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| format!("expected `name(...)`, got `{s}`"))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| format!("missing `)` in `{s}`"))?;
    Ok((s[..open].trim().to_string(), split_top(inner)))
}

/// Typed access to a section with line-aware errors and `ell` substitution.
struct Reader<'a> {
    doc: &'a ConfigDoc,
    section: &'static str,
    ell: f64,
}

impl Reader<'_> {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.doc.get(self.section, key)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        eval_expr(&e.value, self.ell).map(Some).map_err(|m| err(e.line, format!("{key}: {m}")))
    }

    fn nums(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        split_top(&e.value)
            .iter()
            .map(|s| eval_expr(s, self.ell).map_err(|m| err(e.line, format!("{key}: {m}"))))
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn text(&self, key: &str) -> Option<(&str, usize)> {
        self.entry(key).map(|e| (e.value.as_str(), e.line))
    }
}

fn count_arity(name: &str, args: &[String], n: usize, line: usize) -> Result<()> {
    if args.len() != n {
        return Err(err(line, format!("`{name}` takes {n} arguments, got {}", args.len())));
    }
    Ok(())
}

fn eval_args(args: &[String], ell: f64, line: usize) -> Result<Vec<f64>> {
    args.iter().map(|a| eval_expr(a, ell).map_err(|m| err(line, m))).collect()
}

/// Parses `power(s)`, `power_log(s, m, A)`, `power_loglog(s, k, B)`,
/// `const(c)` and `scale(c, profile)`.
pub fn parse_profile(s: &str, ell: f64, line: usize) -> Result<RadialProfile> {
    let (name, args) = parse_call(s).map_err(|m| err(line, m))?;
    match name.as_str() {
        "const" => {
            count_arity(&name, &args, 1, line)?;
            Ok(RadialProfile::constant(eval_args(&args, ell, line)?[0]))
        }
        "power" => {
            count_arity(&name, &args, 1, line)?;
            Ok(RadialProfile::power(eval_args(&args, ell, line)?[0]))
        }
        "power_log" => {
            count_arity(&name, &args, 3, line)?;
            let v = eval_args(&args, ell, line)?;
            Ok(RadialProfile::power_log(v[0], v[1], v[2]))
        }
        "power_loglog" => {
            count_arity(&name, &args, 3, line)?;
            let v = eval_args(&args, ell, line)?;
            Ok(RadialProfile::power_loglog(v[0], v[1], v[2]))
        }
        "scale" => {
            count_arity(&name, &args, 2, line)?;
            let c = eval_expr(&args[0], ell).map_err(|m| err(line, m))?;
            Ok(parse_profile(&args[1], ell, line)?.scaled(c))
        }
        _ => Err(err(line, format!("unknown profile `{name}`"))),
    }
}

/// Parses an exponent: `const(p)`, `affine(a, b)`, `log(a, b, c)`,
/// `cos(a, b, c)` or `jump(base, amp, power)`.
pub fn parse_exponent(s: &str, ell: f64, line: usize) -> Result<ExponentExpr> {
    let (name, args) = parse_call(s).map_err(|m| err(line, m))?;
    let v = eval_args(&args, ell, line)?;
    let need = match name.as_str() {
        "const" => 1,
        "affine" => 2,
        "log" | "cos" | "jump" => 3,
        _ => return Err(err(line, format!("unknown exponent `{name}`"))),
    };
    count_arity(&name, &args, need, line)?;
    Ok(match name.as_str() {
        "const" => ExponentExpr::Constant(v[0]),
        "affine" => ExponentExpr::RadialAffine { a: v[0], b: v[1] },
        "log" => ExponentExpr::RadialLog { a: v[0], b: v[1], c: v[2] },
        "cos" => ExponentExpr::RadialCos { a: v[0], b: v[1], c: v[2] },
        _ => ExponentExpr::HalfSpaceJump { base: v[0], amp: v[1], power: v[2] },
    })
}

fn parse_point(v: &[f64], dim: usize, line: usize) -> Result<Point> {
    if v.len() != dim {
        return Err(err(line, format!("expected {dim} coordinates, got {}", v.len())));
    }
    Ok(crate::geometry::point(v))
}

/// Parses a field centred at `x0` unless stated otherwise: `const(c)`,
/// `power(s)`, `power_log(s, m, A)`, `power_loglog(s, k, B)`,
/// `indicator(radius[, centre coords])`, `coord(j)`, `lattice(seed, cells)`,
/// `scale(c, f)`, `product(f, g)`, `sum(f, ...)`.
pub fn parse_field(s: &str, dom: &DomainSpec, line: usize) -> Result<ScalarField> {
    let ell = dom.ell();
    let x0 = dom.x0();
    let (name, args) = parse_call(s).map_err(|m| err(line, m))?;
    match name.as_str() {
        "const" | "power" | "power_log" | "power_loglog" => {
            let prof = parse_profile(s, ell, line)?;
            prof.validate(dom.max_distance_from(&x0)).map_err(|e| err(line, e.to_string()))?;
            Ok(match name.as_str() {
                "const" => ScalarField::Constant(prof.coef),
                _ => ScalarField::radial(x0, prof),
            })
        }
        "indicator" => {
            let v = eval_args(&args, ell, line)?;
            let center = match v.len() {
                1 => x0,
                k if k == 1 + dom.dim() => parse_point(&v[1..], dom.dim(), line)?,
                _ => return Err(err(line, "indicator takes a radius and optionally a centre")),
            };
            Ok(ScalarField::Indicator { center, radius: v[0], value: 1.0 })
        }
        "coord" => {
            count_arity(&name, &args, 1, line)?;
            let j = eval_args(&args, ell, line)?[0];
            if j.fract() != 0.0 || j < 0.0 || j as usize >= dom.dim() {
                return Err(err(line, format!("bad coordinate index {j}")));
            }
            Ok(ScalarField::Coordinate { axis: j as usize, origin: x0 })
        }
        "lattice" => {
            count_arity(&name, &args, 2, line)?;
            let v = eval_args(&args, ell, line)?;
            if v[0] < 0.0 || v[0].fract() != 0.0 || v[1] < 1.0 || v[1].fract() != 0.0 {
                return Err(err(line, "lattice(seed, cells) takes non-negative integers"));
            }
            let l = LatticeField::random(dom, v[1] as usize, v[0] as u64).map_err(|e| err(line, e.to_string()))?;
            Ok(ScalarField::Lattice(l))
        }
        "scale" => {
            count_arity(&name, &args, 2, line)?;
            let c = eval_expr(&args[0], ell).map_err(|m| err(line, m))?;
            Ok(ScalarField::Scaled(c, Box::new(parse_field(&args[1], dom, line)?)))
        }
        "product" => {
            count_arity(&name, &args, 2, line)?;
            Ok(ScalarField::Product(Box::new(parse_field(&args[0], dom, line)?), Box::new(parse_field(&args[1], dom, line)?)))
        }
        "sum" => Ok(ScalarField::Sum(args.iter().map(|a| parse_field(a, dom, line)).collect::<Result<_>>()?)),
        _ => Err(err(line, format!("unknown field `{name}`"))),
    }
}

/// Named experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    EmbedChain,
    CounterexampleF,
    CounterexampleG,
    ExponentLaw,
    MaximalBound,
    PotentialBound,
    SingularBound,
    WeakEmbed,
    ZygmundAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::EmbedChain,
        ExperimentKind::CounterexampleF,
        ExperimentKind::CounterexampleG,
        ExperimentKind::ExponentLaw,
        ExperimentKind::MaximalBound,
        ExperimentKind::PotentialBound,
        ExperimentKind::SingularBound,
        ExperimentKind::WeakEmbed,
        ExperimentKind::ZygmundAudit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EmbedChain => "embed_chain",
            ExperimentKind::CounterexampleF => "counterexample_f",
            ExperimentKind::CounterexampleG => "counterexample_g",
            ExperimentKind::ExponentLaw => "exponent_law",
            ExperimentKind::MaximalBound => "maximal_bound",
            ExperimentKind::PotentialBound => "potential_bound",
            ExperimentKind::SingularBound => "singular_bound",
            ExperimentKind::WeakEmbed => "weak_embed",
            ExperimentKind::ZygmundAudit => "zygmund_audit",
        }
    }

    pub fn from_name(s: &str) -> Option<ExperimentKind> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Operators available to the `op` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Maximal,
    Fractional,
    Potential,
    Singular,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Maximal => "maximal",
            OperatorKind::Fractional => "fractional",
            OperatorKind::Potential => "potential",
            OperatorKind::Singular => "singular",
        }
    }

    pub fn from_name(s: &str) -> Option<OperatorKind> {
        [OperatorKind::Maximal, OperatorKind::Fractional, OperatorKind::Potential, OperatorKind::Singular]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub domain: DomainSpec,
    pub p: ExponentExpr,
    pub alpha: Option<ExponentExpr>,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
    pub omega: Option<RadialProfile>,
    pub omega1: Option<RadialProfile>,
    pub omega2: Option<RadialProfile>,
    pub rho: Option<RadialProfile>,
    pub ladder_depth: usize,
    pub probes: usize,
    pub points: Vec<Point>,
    pub seed: u64,
    pub epsilons: Vec<f64>,
    pub field: Option<ScalarField>,
    pub norm: Option<String>,
    pub operator: Option<OperatorKind>,
    pub kernel: Kernel,
    pub log_samples: usize,
}

const EXPERIMENT_KEYS: [&str; 11] =
    ["name", "ladder_depth", "probes", "points", "seed", "epsilons", "field", "norm", "operator", "kernel", "log_samples"];
const DOMAIN_KEYS: [&str; 7] = ["shape", "dim", "center", "radius", "lo", "hi", "x0"];
const EXPONENT_KEYS: [&str; 4] = ["p", "alpha", "lambda", "nu"];
const WEIGHT_KEYS: [&str; 4] = ["omega", "omega1", "omega2", "rho"];
pub const NORM_NAMES: [&str; 6] = ["modular", "luxemburg", "complementary_morrey", "weighted_lebesgue", "weak_weighted", "classical_morrey"];

fn check_keys(doc: &ConfigDoc, section: &str, allowed: &[&str]) -> Result<()> {
    if let Some(s) = doc.section(section) {
        for e in &s.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(err(e.line, format!("unknown key `{}` in [{section}]", e.key)));
            }
        }
    }
    Ok(())
}

fn parse_domain(doc: &ConfigDoc) -> Result<DomainSpec> {
    check_keys(doc, "domain", &DOMAIN_KEYS)?;
    let r = Reader { doc, section: "domain", ell: f64::NAN };
    let dim = r.num("dim")?.unwrap_or(2.0);
    if dim.fract() != 0.0 || !(1.0..=3.0).contains(&dim) {
        return Err(err(r.entry("dim").map_or(0, |e| e.line), "dim must be 1, 2 or 3"));
    }
    let dim = dim as usize;
    let line = |k: &str| r.entry(k).map_or(0, |e| e.line);
    let shape = r.text("shape").map_or("ball", |t| t.0);
    let wrap = |e: Error, l: usize| err(l, e.to_string());
    let base = match shape {
        "ball" => {
            let c = r.nums("center")?.unwrap_or(vec![0.0; dim]);
            let rad = r.num("radius")?.unwrap_or(1.0);
            parse_point(&c, dim, line("center"))?;
            DomainSpec::ball(dim, &c, rad, &c).map_err(|e| wrap(e, line("radius")))?
        }
        "box" => {
            let lo = r.nums("lo")?.unwrap_or(vec![-1.0; dim]);
            let hi = r.nums("hi")?.unwrap_or(vec![1.0; dim]);
            parse_point(&lo, dim, line("lo"))?;
            parse_point(&hi, dim, line("hi"))?;
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            DomainSpec::boxed(dim, &lo, &hi, &mid).map_err(|e| wrap(e, line("lo")))?
        }
        other => return Err(err(line("shape"), format!("unknown shape `{other}`"))),
    };
    match r.nums("x0")? {
        Some(v) => {
            parse_point(&v, dim, line("x0"))?;
            base.with_x0(&v).map_err(|e| wrap(e, line("x0")))
        }
        None => Ok(base),
    }
}

impl ExperimentConfig {
    /// Defaults for a domain: `p ≡ 2`, depth 18, 8 probes, seed 7.
    pub fn new(domain: DomainSpec) -> ExperimentConfig {
        ExperimentConfig {
            experiment: None,
            domain,
            p: ExponentExpr::Constant(2.0),
            alpha: None,
            lambda: None,
            nu: None,
            omega: None,
            omega1: None,
            omega2: None,
            rho: None,
            ladder_depth: 18,
            probes: 8,
            points: Vec::new(),
            seed: 7,
            epsilons: vec![0.1, 0.5, 1.0],
            field: None,
            norm: None,
            operator: None,
            kernel: Kernel::RieszTransform { component: 0 },
            log_samples: 64,
        }
    }

    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_doc(&ConfigDoc::parse(text)?)
    }

    pub fn from_doc(doc: &ConfigDoc) -> Result<ExperimentConfig> {
        let domain = parse_domain(doc)?;
        let ell = domain.ell();
        let mut cfg = ExperimentConfig::new(domain);
        check_keys(doc, "experiment", &EXPERIMENT_KEYS)?;
        check_keys(doc, "exponents", &EXPONENT_KEYS)?;
        check_keys(doc, "weights", &WEIGHT_KEYS)?;
        let ex = Reader { doc, section: "experiment", ell };
        if let Some((name, line)) = ex.text("name") {
            cfg.experiment = Some(ExperimentKind::from_name(name).ok_or_else(|| err(line, format!("unknown experiment `{name}`")))?);
        }
        let integer = |key: &str, lo: f64, hi: f64| -> Result<Option<u64>> {
            match ex.num(key)? {
                Some(v) if v.fract() == 0.0 && v >= lo && v <= hi => Ok(Some(v as u64)),
                Some(v) => Err(err(ex.entry(key).map_or(0, |e| e.line), format!("{key} = {v} out of range"))),
                None => Ok(None),
            }
        };
        if let Some(k) = integer("ladder_depth", 4.0, 48.0)? {
            cfg.ladder_depth = k as usize;
        }
        if let Some(k) = integer("probes", 0.0, 10000.0)? {
            cfg.probes = k as usize;
        }
        if let Some((text, _)) = ex.text("seed") {
            cfg.seed = match text.trim().parse::<u64>() {
                Ok(k) => k,
                Err(_) => integer("seed", 0.0, 9.0e15)?.unwrap_or(cfg.seed),
            };
        }
        if let Some(k) = integer("log_samples", 8.0, 100000.0)? {
            cfg.log_samples = k as usize;
        }
        if let Some(v) = ex.nums("epsilons")? {
            if v.iter().any(|e| !(*e > 0.0)) {
                return Err(err(ex.entry("epsilons").map_or(0, |e| e.line), "epsilons must be positive"));
            }
            cfg.epsilons = v;
        }
        if let Some((text, line)) = ex.text("points") {
            let dim = cfg.domain.dim();
            for pt in text.split(';') {
                let v = split_top(pt).iter().map(|s| eval_expr(s, ell).map_err(|m| err(line, m))).collect::<Result<Vec<f64>>>()?;
                let p = parse_point(&v, dim, line)?;
                if !cfg.domain.contains(&p) {
                    return Err(err(line, format!("probe {v:?} lies outside the domain")));
                }
                cfg.points.push(p);
            }
        }
        if let Some((text, line)) = ex.text("field") {
            cfg.field = Some(parse_field(text, &cfg.domain, line)?);
        }
        if let Some((text, line)) = ex.text("norm") {
            if !NORM_NAMES.contains(&text) {
                return Err(err(line, format!("unknown norm `{text}`")));
            }
            cfg.norm = Some(text.to_string());
        }
        if let Some((text, line)) = ex.text("operator") {
            cfg.operator = Some(OperatorKind::from_name(text).ok_or_else(|| err(line, format!("unknown operator `{text}`")))?);
        }
        if let Some((text, line)) = ex.text("kernel") {
            cfg.kernel = parse_kernel(text, cfg.domain.dim(), ell, line)?;
        }
        let xr = Reader { doc, section: "exponents", ell };
        if let Some((text, line)) = xr.text("p") {
            cfg.p = parse_exponent(text, ell, line)?;
        }
        if let Some((text, line)) = xr.text("alpha") {
            cfg.alpha = Some(parse_exponent(text, ell, line)?);
        }
        cfg.lambda = xr.num("lambda")?;
        cfg.nu = xr.num("nu")?;
        let wr = Reader { doc, section: "weights", ell };
        let weight = |key: &str| -> Result<Option<RadialProfile>> {
            match wr.text(key) {
                Some((text, line)) => {
                    let p = parse_profile(text, ell, line)?;
                    crate::conditions::WeightFunction::new(p)
                        .and_then(|w| w.validate(ell))
                        .map_err(|e| err(line, e.to_string()))?;
                    Ok(Some(p))
                }
                None => Ok(None),
            }
        };
        cfg.omega = weight("omega")?;
        cfg.omega1 = weight("omega1")?;
        cfg.omega2 = weight("omega2")?;
        cfg.rho = weight("rho")?;
        cfg.validate_exponents(doc)?;
        Ok(cfg)
    }

    fn validate_exponents(&self, doc: &ConfigDoc) -> Result<()> {
        let line = |k: &str| doc.get("exponents", k).map_or(0, |e| e.line);
        crate::exponents::ExponentField::lebesgue(self.p.clone(), &self.domain).map_err(|e| err(line("p"), e.to_string()))?;
        if let Some(a) = &self.alpha {
            crate::exponents::ExponentField::order(a.clone(), &self.domain).map_err(|e| err(line("alpha"), e.to_string()))?;
        }
        if let Some(l) = self.lambda {
            if !(0.0..=self.domain.dim() as f64).contains(&l) {
                return Err(err(line("lambda"), format!("lambda = {l} outside [0, n]")));
            }
        }
        Ok(())
    }

    /// Renders the config in the file format.
    pub fn to_doc(&self) -> ConfigDoc {
        let mut d = ConfigDoc::default();
        if let Some(k) = self.experiment {
            d.set("experiment", "name", k.name());
        }
        d.set("experiment", "ladder_depth", &self.ladder_depth.to_string());
        d.set("experiment", "probes", &self.probes.to_string());
        d.set("experiment", "seed", &self.seed.to_string());
        d.set("experiment", "epsilons", &join(&self.epsilons));
        d.set("experiment", "log_samples", &self.log_samples.to_string());
        if !self.points.is_empty() {
            let n = self.domain.dim();
            let pts: Vec<String> = self.points.iter().map(|p| join(&p[..n])).collect();
            d.set("experiment", "points", &pts.join("; "));
        }
        if let Some(f) = &self.field {
            if let Some(s) = field_text(f, &self.domain) {
                d.set("experiment", "field", &s);
            }
        }
        if let Some(n) = &self.norm {
            d.set("experiment", "norm", n);
        }
        if let Some(o) = self.operator {
            d.set("experiment", "operator", o.name());
        }
        d.set("experiment", "kernel", &kernel_text(&self.kernel));
        let dom = &self.domain;
        let n = dom.dim();
        match dom.shape() {
            crate::geometry::Shape::Ball { center, radius } => {
                d.set("domain", "shape", "ball");
                d.set("domain", "dim", &n.to_string());
                d.set("domain", "center", &join(&center[..n]));
                d.set("domain", "radius", &radius.to_string());
            }
            crate::geometry::Shape::Box { lo, hi } => {
                d.set("domain", "shape", "box");
                d.set("domain", "dim", &n.to_string());
                d.set("domain", "lo", &join(&lo[..n]));
                d.set("domain", "hi", &join(&hi[..n]));
            }
        }
        d.set("domain", "x0", &join(&dom.x0()[..n]));
        d.set("exponents", "p", &exponent_text(&self.p));
        if let Some(a) = &self.alpha {
            d.set("exponents", "alpha", &exponent_text(a));
        }
        if let Some(l) = self.lambda {
            d.set("exponents", "lambda", &l.to_string());
        }
        if let Some(v) = self.nu {
            d.set("exponents", "nu", &v.to_string());
        }
        for (k, w) in [("omega", &self.omega), ("omega1", &self.omega1), ("omega2", &self.omega2), ("rho", &self.rho)] {
            if let Some(w) = w {
                d.set("weights", k, &profile_text(w));
            }
        }
        d
    }
}

fn parse_kernel(s: &str, dim: usize, ell: f64, line: usize) -> Result<Kernel> {
    let (name, args) = parse_call(s).map_err(|m| err(line, m))?;
    let v = eval_args(&args, ell, line)?;
    let comp = |x: f64| -> Result<usize> {
        if x.fract() != 0.0 || x < 0.0 || x as usize >= dim {
            return Err(err(line, format!("bad kernel component {x}")));
        }
        Ok(x as usize)
    };
    match (name.as_str(), v.len()) {
        ("riesz", 1) => Ok(Kernel::RieszTransform { component: comp(v[0])? }),
        ("odd_power", 2) if v[1].fract() == 0.0 && (v[1] as i32) % 2 != 0 => {
            Ok(Kernel::OddPower { component: comp(v[0])?, power: v[1] as i32 })
        }
        _ => Err(err(line, format!("bad kernel `{s}`; use riesz(j) or odd_power(j, k) with odd k"))),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn kernel_text(k: &Kernel) -> String {
    match k {
        Kernel::RieszTransform { component } => format!("riesz({component})"),
        Kernel::OddPower { component, power } => format!("odd_power({component}, {power})"),
    }
}

pub fn exponent_text(e: &ExponentExpr) -> String {
    match e {
        ExponentExpr::Constant(a) => format!("const({a})"),
        ExponentExpr::RadialAffine { a, b } => format!("affine({a}, {b})"),
        ExponentExpr::RadialLog { a, b, c } => format!("log({a}, {b}, {c})"),
        ExponentExpr::RadialCos { a, b, c } => format!("cos({a}, {b}, {c})"),
        ExponentExpr::HalfSpaceJump { base, amp, power } => format!("jump({base}, {amp}, {power})"),
        ExponentExpr::Conjugate(_) | ExponentExpr::Sobolev { .. } => "const(2)".into(),
    }
}

/// Text for a profile; exact for the three named families and scalings of them.
pub fn profile_text(p: &RadialProfile) -> String {
    let base = if p.log_pow == 0.0 && p.loglog_pow == 0.0 {
        if p.power == 0.0 {
            return format!("const({})", p.coef);
        }
        format!("power({})", p.power)
    } else if p.loglog_pow == 0.0 {
        format!("power_log({}, {}, {})", p.power, p.log_pow, p.log_scale)
    } else if p.log_pow == 0.0 {
        format!("power_loglog({}, {}, {})", p.power, p.loglog_pow, p.loglog_scale)
    } else {
        format!("power_log({}, {}, {})", p.power, p.log_pow, p.log_scale)
    };
    if p.coef == 1.0 {
        base
    } else {
        format!("scale({}, {base})", p.coef)
    }
}

/// Text for the fields the parser can produce; `None` for composite lattices.
pub fn field_text(f: &ScalarField, dom: &DomainSpec) -> Option<String> {
    let n = dom.dim();
    let x0 = dom.x0();
    Some(match f {
        ScalarField::Constant(c) => format!("const({c})"),
        ScalarField::Radial { center, profile } if *center == x0 => profile_text(profile),
        ScalarField::Indicator { center, radius, value } if *value == 1.0 => {
            if *center == x0 {
                format!("indicator({radius})")
            } else {
                format!("indicator({radius}, {})", join(&center[..n]))
            }
        }
        ScalarField::Coordinate { axis, origin } if *origin == x0 => format!("coord({axis})"),
        ScalarField::Lattice(l) => format!("lattice({}, {})", l.seed(), l.cells()),
        ScalarField::Scaled(c, g) => format!("scale({c}, {})", field_text(g, dom)?),
        ScalarField::Product(a, b) => format!("product({}, {})", field_text(a, dom)?, field_text(b, dom)?),
        ScalarField::Sum(fs) => format!("sum({})", fs.iter().map(|g| field_text(g, dom)).collect::<Option<Vec<_>>>()?.join(", ")),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        let v = |s: &str| eval_expr(s, 2.0).unwrap();
        assert_eq!(v("1/2"), 0.5);
        assert_eq!(v("-2^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("e*ell"), std::f64::consts::E * 2.0);
        assert_eq!(v("(1 + 2) * -3"), -9.0);
        assert_eq!(v("1e-3"), 1e-3);
        assert_eq!(v("e^e"), std::f64::consts::E.powf(std::f64::consts::E));
        assert!(eval_expr("1 +", 1.0).is_err());
        assert!(eval_expr("foo", 1.0).is_err());
    }

    #[test]
    fn doc_roundtrip_and_errors() {
        let text = "# comment\n[experiment]\nname = exponent_law # trailing\n\n[domain]\nshape = ball\n";
        let d = ConfigDoc::parse(text).unwrap();
        assert_eq!(d.get("experiment", "name").unwrap().value, "exponent_law");
        let again = ConfigDoc::parse(&d.to_string()).unwrap();
        assert_eq!(again.normalized(), d.normalized());
        for bad in ["x = 1", "[experiment]\nx", "[nope]", "[domain]\na = 1\na = 2", "[domain\n"] {
            assert!(matches!(ConfigDoc::parse(bad), Err(Error::Config { .. })), "{bad}");
        }
    }

    #[test]
    fn experiment_config_roundtrip() {
        let text = "[experiment]\nname = maximal_bound\nladder_depth = 12\nfield = scale(2, power(-0.5))\n\
                    [domain]\nshape = box\ndim = 2\nlo = -1, -1\nhi = 1, 1\nx0 = 0.25, 0\n\
                    [exponents]\np = log(2, 1, e^2*ell)\nlambda = 1\n\
                    [weights]\nomega1 = power(0.5)\nomega2 = power_log(0.5, -1, e*ell)\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::MaximalBound));
        assert_eq!(cfg.ladder_depth, 12);
        let back = ExperimentConfig::from_doc(&cfg.to_doc()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_report_lines() {
        let e = ExperimentConfig::from_text("[domain]\nradius = -1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = ExperimentConfig::from_text("[exponents]\np = const(0.5)\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = ExperimentConfig::from_text("[weights]\nomega = power_log(0, -1, 0.5)\n").unwrap_err();
        assert!(matches!(e, Error::Config { .. }), "{e}");
        let e = ExperimentConfig::from_text("[experiment]\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
    }
}
