//! Symbolic functional equations read off a cover, and exact numeric
//! evaluation of their terms.
//!
//! Each rule becomes one term. When the rule's non-empty cells split into
//! independent lines (no cell lying in both a multi-cell row and a
//! multi-cell column), the term is a product of per-line factors, and a
//! line qualifies for a closed form in two cases: monotone classes mixed
//! with points, and a single arbitrary class with points. Anything else is
//! kept as an opaque term that can only be evaluated numerically.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, Zero};

use crate::basis::Basis;
use crate::count::count_rule;
use crate::cover::Cover;
use crate::error::Result;
use crate::registry::ClassRegistry;
use crate::rule::Rule;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GFFactor {
    /// x^pow from point cells alone in their row and column.
    X { pow: usize },
    /// The named series of a class cell alone in its row and column.
    Series { basis: Basis },
    /// A line of `monos` monotone classes and `points` point cells:
    /// points!·x^points/(1−monos·x)^(points+1).
    MonoLine { monos: usize, points: usize },
    /// A line of one arbitrary class and `points` point cells:
    /// x^p·dᵖ[xᵖ·C(x)] where dᵖ is the p-th derivative.
    ClassLine { basis: Basis, points: usize },
    /// No factored form; the term equals the rule's counting sum.
    Opaque,
}

/// One rule's contribution to the right side of an equation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GFTerm {
    pub rule: Rule,
    pub factors: Vec<GFFactor>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Equation {
    pub name: String,
    pub basis: Basis,
    pub terms: Vec<GFTerm>,
}

/// Where a named series gets its numbers.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SeriesSource {
    /// An equation in the system (a registered cover, or the root's own).
    Covered,
    /// No cover is known; numeric values come from direct enumeration.
    External,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EquationSystem {
    pub equations: Vec<Equation>,
    /// Name, displayed class, source, in naming order.
    pub legend: Vec<(String, Basis, SeriesSource)>,
}

/// Factor one rule, given the naming key of the cover's own class.
fn factor_rule(rule: &Rule) -> Vec<GFFactor> {
    let cells = rule.nonempty_cells();
    if cells.is_empty() {
        return Vec::new();
    }
    let mut row_n = vec![0usize; rule.height()];
    let mut col_n = vec![0usize; rule.width()];
    for &(x, y, _) in &cells {
        row_n[y] += 1;
        col_n[x] += 1;
    }
    if cells.iter().any(|&(x, y, _)| row_n[y] > 1 && col_n[x] > 1) {
        return vec![GFFactor::Opaque];
    }
    // Group cells by their multi-cell line, keeping first-cell order.
    #[derive(PartialEq, Eq, Hash)]
    enum Line {
        Row(usize),
        Col(usize),
        Single(usize, usize),
    }
    let mut order: Vec<Line> = Vec::new();
    let mut groups: HashMap<Line, Vec<&crate::block::Block>> = HashMap::new();
    for &(x, y, b) in &cells {
        let key = if row_n[y] > 1 {
            Line::Row(y)
        } else if col_n[x] > 1 {
            Line::Col(x)
        } else {
            Line::Single(x, y)
        };
        if !groups.contains_key(&key) {
            order.push(match key {
                Line::Row(y) => Line::Row(y),
                Line::Col(x) => Line::Col(x),
                Line::Single(x, y) => Line::Single(x, y),
            });
        }
        groups.entry(key).or_default().push(b);
    }
    let mut factors = Vec::new();
    for key in &order {
        let members = &groups[key];
        let points = members.iter().filter(|b| ***b == crate::block::Block::Point).count();
        let classes: Vec<&Basis> = members
            .iter()
            .filter_map(|b| match b {
                crate::block::Block::Class(c) => Some(c),
                _ => None,
            })
            .collect();
        let monotone = |c: &Basis| {
            let p = c.patterns();
            p.len() == 1 && p[0].len() == 2
        };
        if classes.is_empty() {
            factors.push(if points == 1 {
                GFFactor::X { pow: 1 }
            } else {
                GFFactor::MonoLine { monos: 0, points }
            });
        } else if classes.iter().all(|c| monotone(c)) {
            if classes.len() == 1 && points == 0 {
                factors.push(GFFactor::Series { basis: classes[0].clone() });
            } else {
                factors.push(GFFactor::MonoLine { monos: classes.len(), points });
            }
        } else if classes.len() == 1 {
            if points == 0 {
                factors.push(GFFactor::Series { basis: classes[0].clone() });
            } else {
                factors.push(GFFactor::ClassLine { basis: classes[0].clone(), points });
            }
        } else {
            return vec![GFFactor::Opaque];
        }
    }
    factors
}

fn series_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("S{i}")
    }
}

/// The equation system of a cover: one equation for the cover itself, plus
/// one for every class reachable through registered covers. Classes without
/// a cover are named but flagged as externally counted.
pub fn functional_equations(cover: &Cover, reg: &ClassRegistry) -> EquationSystem {
    let mut names: HashMap<Basis, String> = HashMap::new();
    let mut legend = Vec::new();
    let mut equations = Vec::new();
    let mut queue: Vec<(Basis, Cover)> = Vec::new();
    let root_key = cover.basis.canonical();
    names.insert(root_key.clone(), series_name(0));
    legend.push((series_name(0), cover.basis.clone(), SeriesSource::Covered));
    queue.push((root_key, cover.clone()));
    let mut qi = 0;
    while qi < queue.len() {
        let (key, cov) = queue[qi].clone();
        qi += 1;
        let mut terms = Vec::new();
        for rule in &cov.rules {
            terms.push(GFTerm { rule: rule.clone(), factors: factor_rule(rule) });
            for (_, _, cell) in rule.class_cells() {
                let canon = cell.canonical();
                if names.contains_key(&canon) {
                    continue;
                }
                let name = series_name(names.len());
                names.insert(canon.clone(), name.clone());
                match reg.cover_for(&canon) {
                    Some(c) => {
                        legend.push((name, canon.clone(), SeriesSource::Covered));
                        queue.push((canon, c.clone()));
                    }
                    None => legend.push((name, canon, SeriesSource::External)),
                }
            }
        }
        equations.push(Equation {
            name: names[&key].clone(),
            basis: cov.basis.clone(),
            terms,
        });
    }
    EquationSystem { equations, legend }
}

fn superscript(n: usize) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    n.to_string().chars().map(|c| DIGITS[c as usize - '0' as usize]).collect()
}

fn power(base: &str, n: usize) -> String {
    if n == 1 {
        base.to_string()
    } else {
        format!("{base}{}", superscript(n))
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

impl GFTerm {
    /// Render with merged x powers and trailing denominators, e.g.
    /// "x²·A/(1−3x)". Opaque terms show the rule itself.
    pub fn render(&self, names: &HashMap<Basis, String>) -> String {
        if self.factors.is_empty() {
            return "1".into();
        }
        if self.factors == [GFFactor::Opaque] {
            return format!("Σ[{}]", self.rule.encoding());
        }
        let mut coeff = BigUint::one();
        let mut xpow = 0usize;
        let mut parts: Vec<String> = Vec::new();
        let mut denoms: Vec<String> = Vec::new();
        let display = |basis: &Basis| {
            let canon = basis.canonical();
            names.get(&canon).cloned().unwrap_or_else(|| format!("Av({canon})"))
        };
        for f in &self.factors {
            match f {
                GFFactor::X { pow } => xpow += pow,
                GFFactor::Series { basis } => parts.push(display(basis)),
                GFFactor::MonoLine { monos, points } => {
                    coeff *= factorial(*points);
                    xpow += points;
                    if *monos > 0 {
                        let m = if *monos == 1 {
                            "x".to_string()
                        } else {
                            format!("{monos}x")
                        };
                        denoms.push(power(&format!("(1−{m})"), points + 1));
                    }
                }
                GFFactor::ClassLine { basis, points } => {
                    xpow += points;
                    parts.push(format!(
                        "d{}[{}·{}]",
                        if *points == 1 { String::new() } else { superscript(*points) },
                        power("x", *points),
                        display(basis)
                    ));
                }
                GFFactor::Opaque => unreachable!("opaque terms have a single factor"),
            }
        }
        let mut head: Vec<String> = Vec::new();
        if !coeff.is_one() {
            head.push(coeff.to_string());
        }
        if xpow > 0 {
            head.push(power("x", xpow));
        }
        head.extend(parts);
        let mut out = if head.is_empty() { "1".to_string() } else { head.join("·") };
        for d in denoms {
            out.push('/');
            out.push_str(&d);
        }
        out
    }
}

impl EquationSystem {
    fn name_map(&self) -> HashMap<Basis, String> {
        self.legend
            .iter()
            .map(|(name, basis, _)| (basis.canonical(), name.clone()))
            .collect()
    }

    /// The equations, one per line, then a legend line per named series.
    pub fn render(&self) -> String {
        let names = self.name_map();
        let mut out = String::new();
        for eq in &self.equations {
            let rhs: Vec<String> = eq.terms.iter().map(|t| t.render(&names)).collect();
            out.push_str(&format!("{} = {}\n", eq.name, rhs.join(" + ")));
        }
        for (name, basis, source) in &self.legend {
            let tag = match source {
                SeriesSource::Covered => "",
                SeriesSource::External => ", enumerated directly",
            };
            out.push_str(&format!("  {name} = Av({basis}){tag}\n"));
        }
        out
    }
}

fn factor_series(f: &GFFactor, n: usize, reg: &mut ClassRegistry) -> Result<Vec<BigUint>> {
    let mut out = vec![BigUint::zero(); n + 1];
    match f {
        GFFactor::X { pow } => {
            if *pow <= n {
                out[*pow] = BigUint::one();
            }
        }
        GFFactor::Series { basis } => out = reg.counts_to(basis, n)?,
        GFFactor::MonoLine { monos, points } => {
            let pf = factorial(*points);
            for (k, slot) in out.iter_mut().enumerate().skip(*points) {
                *slot = &pf
                    * binomial(BigUint::from(k), BigUint::from(*points))
                    * BigUint::from(*monos).pow((k - points) as u32);
            }
        }
        GFFactor::ClassLine { basis, points } => {
            let counts = reg.counts_to(basis, n)?;
            let pf = factorial(*points);
            for (k, slot) in out.iter_mut().enumerate().skip(*points) {
                *slot =
                    &pf * binomial(BigUint::from(k), BigUint::from(*points)) * &counts[k - points];
            }
        }
        GFFactor::Opaque => unreachable!("callers special-case opaque terms"),
    }
    Ok(out)
}

fn convolve(a: &[BigUint], b: &[BigUint], n: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); n + 1];
    for i in 0..=n {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..=n - i {
            if !b[j].is_zero() {
                out[i + j] += &a[i] * &b[j];
            }
        }
    }
    out
}

/// The coefficient of x^n in the term, exactly. Factored terms evaluate by
/// convolution of their factor series; opaque terms fall back to the rule's
/// counting sum.
pub fn evaluate_term_numeric(
    term: &GFTerm,
    n: usize,
    reg: &mut ClassRegistry,
) -> Result<BigUint> {
    if term.factors == [GFFactor::Opaque] {
        return count_rule(&term.rule, n, reg);
    }
    let mut acc = vec![BigUint::zero(); n + 1];
    acc[0] = BigUint::one();
    for f in &term.factors {
        let s = factor_series(f, n, reg)?;
        acc = convolve(&acc, &s, n);
    }
    Ok(acc[n].clone())
}
