//! Rules: rectangular matrices of blocks, with cells addressed by column
//! (left to right) and row (bottom to top).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::block::Block;
use crate::error::{Error, Result};

/// A rule of width `t` and height `u`. Cell (x, y) sits in column x
/// (0 = leftmost) and row y (0 = bottommost); storage index is `y*t + x`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    t: usize,
    u: usize,
    cells: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct CellDto {
    x: usize,
    y: usize,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct RuleDto {
    t: usize,
    u: usize,
    cells: Vec<CellDto>,
}

impl Rule {
    pub fn new(t: usize, u: usize, cells: Vec<Block>) -> Result<Self> {
        if t == 0 || u == 0 {
            return Err(Error::BadRule("rule dimensions must be positive".into()));
        }
        if cells.len() != t * u {
            return Err(Error::BadRule(format!(
                "expected {} cells for a {t}x{u} rule, got {}",
                t * u,
                cells.len()
            )));
        }
        Ok(Rule { t, u, cells })
    }

    /// The 1x1 rule with no contents; generates only the empty permutation.
    pub fn empty() -> Self {
        Rule { t: 1, u: 1, cells: vec![Block::EmptyClass] }
    }

    /// Build from the nonempty cells only.
    pub fn from_sparse(
        t: usize,
        u: usize,
        entries: impl IntoIterator<Item = (usize, usize, Block)>,
    ) -> Result<Self> {
        if t == 0 || u == 0 {
            return Err(Error::BadRule("rule dimensions must be positive".into()));
        }
        let mut cells = vec![Block::EmptyClass; t * u];
        let mut seen = vec![false; t * u];
        for (x, y, b) in entries {
            if x >= t || y >= u {
                return Err(Error::BadRule(format!(
                    "cell ({x},{y}) outside a {t}x{u} rule"
                )));
            }
            let i = y * t + x;
            if seen[i] {
                return Err(Error::BadRule(format!("cell ({x},{y}) assigned twice")));
            }
            seen[i] = true;
            cells[i] = b;
        }
        Ok(Rule { t, u, cells })
    }

    pub fn width(&self) -> usize {
        self.t
    }

    pub fn height(&self) -> usize {
        self.u
    }

    pub fn cell(&self, x: usize, y: usize) -> &Block {
        &self.cells[y * self.t + x]
    }

    pub fn cells(&self) -> &[Block] {
        &self.cells
    }

    /// Number of Point cells; every generated permutation of the rule
    /// contains exactly this many designated points.
    pub fn point_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Block::Point).count()
    }

    pub fn nonempty_count(&self) -> usize {
        self.cells.iter().filter(|c| **c != Block::EmptyClass).count()
    }

    /// Nonempty cells in (x, y) order, column-major.
    pub fn nonempty_cells(&self) -> Vec<(usize, usize, &Block)> {
        let mut out = Vec::new();
        for x in 0..self.t {
            for y in 0..self.u {
                let b = self.cell(x, y);
                if *b != Block::EmptyClass {
                    out.push((x, y, b));
                }
            }
        }
        out
    }

    pub fn class_cells(&self) -> Vec<(usize, usize, &Basis)> {
        self.nonempty_cells()
            .into_iter()
            .filter_map(|(x, y, b)| b.class_basis().map(|c| (x, y, c)))
            .collect()
    }

    pub fn is_empty_rule(&self) -> bool {
        self.cells.iter().all(|c| *c == Block::EmptyClass)
    }

    fn row_empty(&self, y: usize) -> bool {
        (0..self.t).all(|x| *self.cell(x, y) == Block::EmptyClass)
    }

    fn col_empty(&self, x: usize) -> bool {
        (0..self.u).all(|y| *self.cell(x, y) == Block::EmptyClass)
    }

    /// Normal form: no all-empty row or column, except the 1x1 empty rule.
    pub fn is_normal_form(&self) -> bool {
        if self.is_empty_rule() {
            return self.t == 1 && self.u == 1;
        }
        (0..self.u).all(|y| !self.row_empty(y)) && (0..self.t).all(|x| !self.col_empty(x))
    }

    /// Delete all-empty rows and columns; a contentless rule collapses to
    /// the 1x1 empty rule.
    pub fn normalize(&self) -> Rule {
        let keep_x: Vec<usize> = (0..self.t).filter(|&x| !self.col_empty(x)).collect();
        let keep_y: Vec<usize> = (0..self.u).filter(|&y| !self.row_empty(y)).collect();
        if keep_x.is_empty() || keep_y.is_empty() {
            return Rule::empty();
        }
        let mut cells = Vec::with_capacity(keep_x.len() * keep_y.len());
        for &y in &keep_y {
            for &x in &keep_x {
                cells.push(self.cell(x, y).clone());
            }
        }
        Rule { t: keep_x.len(), u: keep_y.len(), cells }
    }

    /// Compact single-line form, also the canonical sort key in listings.
    pub fn encoding(&self) -> String {
        let body: Vec<String> = self
            .nonempty_cells()
            .iter()
            .map(|(x, y, b)| format!("{x},{y}={}", b.cell_label()))
            .collect();
        format!("{}x{}:{}", self.t, self.u, body.join(";"))
    }

    pub fn to_json(&self) -> String {
        let cells = self
            .nonempty_cells()
            .into_iter()
            .map(|(x, y, b)| CellDto { x, y, c: b.cell_label() })
            .collect();
        let dto = RuleDto { t: self.t, u: self.u, cells };
        serde_json::to_string(&dto).expect("serializable")
    }

    /// Parse from JSON and normalize away empty rows and columns.
    pub fn from_json(s: &str) -> Result<Self> {
        let dto: RuleDto = serde_json::from_str(s)?;
        let mut entries = Vec::with_capacity(dto.cells.len());
        for c in &dto.cells {
            entries.push((c.x, c.y, c.c.parse::<Block>()?));
        }
        Ok(Rule::from_sparse(dto.t, dto.u, entries)?.normalize())
    }

    /// Draw the grid; points render as a bullet, classes as Av(...).
    pub fn render_ascii(&self) -> String {
        if self.is_empty_rule() {
            return "[ ]".into();
        }
        let label = |b: &Block| match b {
            Block::EmptyClass => String::new(),
            Block::Point => "\u{2022}".into(),
            Block::Class(c) => format!("Av({c})"),
        };
        let widths: Vec<usize> = (0..self.t)
            .map(|x| {
                (0..self.u)
                    .map(|y| label(self.cell(x, y)).chars().count())
                    .max()
                    .unwrap_or(0)
                    .max(1)
            })
            .collect();
        let sep: String = {
            let mut s = String::from("+");
            for w in &widths {
                s.push_str(&"-".repeat(w + 2));
                s.push('+');
            }
            s
        };
        let mut out = String::new();
        out.push_str(&sep);
        out.push('\n');
        for y in (0..self.u).rev() {
            out.push('|');
            for x in 0..self.t {
                let l = label(self.cell(x, y));
                let pad = widths[x] - l.chars().count();
                let left = pad / 2;
                out.push(' ');
                out.push_str(&" ".repeat(left));
                out.push_str(&l);
                out.push_str(&" ".repeat(pad - left));
                out.push(' ');
                out.push('|');
            }
            out.push('\n');
            out.push_str(&sep);
            out.push('\n');
        }
        out.pop();
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encoding())
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encoding())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_rule() -> Rule {
        Rule::from_sparse(
            3,
            3,
            [
                (0, 0, "Av(231)".parse().unwrap()),
                (1, 2, Block::Point),
                (2, 1, "Av(231)".parse().unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn json_matches_wire_format() {
        let r = fig_rule();
        assert_eq!(
            r.to_json(),
            r#"{"t":3,"u":3,"cells":[{"x":0,"y":0,"c":"Av(231)"},{"x":1,"y":2,"c":"pt"},{"x":2,"y":1,"c":"Av(231)"}]}"#
        );
        assert_eq!(Rule::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn json_round_trip_is_fixed_point() {
        let r = fig_rule();
        let once = r.to_json();
        assert_eq!(Rule::from_json(&once).unwrap().to_json(), once);
        let e = Rule::empty();
        assert_eq!(Rule::from_json(&e.to_json()).unwrap(), e);
    }

    #[test]
    fn parse_normalizes_empty_lines() {
        // Occupied cells only in columns 0,2 and rows 0,2: parses to 2x2.
        let js = r#"{"t":3,"u":3,"cells":[{"x":0,"y":0,"c":"Av(21)"},{"x":2,"y":2,"c":"pt"}]}"#;
        let r = Rule::from_json(js).unwrap();
        assert_eq!((r.width(), r.height()), (2, 2));
        assert_eq!(*r.cell(0, 0), "Av(21)".parse().unwrap());
        assert_eq!(*r.cell(1, 1), Block::Point);
        assert!(r.is_normal_form());
    }

    #[test]
    fn normal_form_rules() {
        assert!(Rule::empty().is_normal_form());
        assert!(fig_rule().is_normal_form());
        let wide = Rule::from_sparse(2, 1, [(0, 0, Block::Point)]).unwrap();
        assert!(!wide.is_normal_form());
        assert_eq!(wide.normalize(), Rule::from_sparse(1, 1, [(0, 0, Block::Point)]).unwrap());
        let blank = Rule::from_sparse(2, 3, []).unwrap();
        assert_eq!(blank.normalize(), Rule::empty());
    }

    #[test]
    fn cell_accounting() {
        let r = fig_rule();
        assert_eq!(r.point_count(), 1);
        assert_eq!(r.nonempty_count(), 3);
        let classes = r.class_cells();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].0, 0);
        assert_eq!(classes[1], (2, 1, &"231".parse().unwrap()));
    }

    #[test]
    fn ascii_rendering() {
        assert_eq!(Rule::empty().render_ascii(), "[ ]");
        let pic = fig_rule().render_ascii();
        assert_eq!(
            pic,
            "+---------+---+---------+\n\
             |         | \u{2022} |         |\n\
             +---------+---+---------+\n\
             |         |   | Av(231) |\n\
             +---------+---+---------+\n\
             | Av(231) |   |         |\n\
             +---------+---+---------+"
        );
    }

    #[test]
    fn bad_rules_are_rejected() {
        assert!(Rule::new(0, 1, vec![]).is_err());
        assert!(Rule::new(2, 1, vec![Block::Point]).is_err());
        assert!(Rule::from_sparse(1, 1, [(1, 0, Block::Point)]).is_err());
        assert!(Rule::from_sparse(
            1,
            1,
            [(0, 0, Block::Point), (0, 0, Block::Point)]
        )
        .is_err());
        // Duplicate cell in JSON.
        let js = r#"{"t":2,"u":1,"cells":[{"x":0,"y":0,"c":"pt"},{"x":0,"y":0,"c":"pt"}]}"#;
        assert!(Rule::from_json(js).is_err());
    }

    #[test]
    fn canonical_order_by_dimension_then_cells() {
        let a = Rule::empty();
        let b = Rule::from_sparse(1, 1, [(0, 0, Block::Point)]).unwrap();
        let c = Rule::from_sparse(2, 1, [(0, 0, Block::Point), (1, 0, Block::Point)]).unwrap();
        let mut v = vec![c.clone(), b.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, b, c]);
    }

    #[test]
    fn encoding_is_stable() {
        assert_eq!(fig_rule().encoding(), "3x3:0,0=Av(231);1,2=pt;2,1=Av(231)");
        assert_eq!(Rule::empty().encoding(), "1x1:");
    }
}
