//! Catalogue of every exactly known expected tour product.
//!
//! Each entry is an expression tree evaluated on demand; no decimal constants
//! are stored here.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::special::{elliptic_e_modulus, elliptic_k_modulus};
use crate::tour::{Topology, TourSpec};

/// Small expression language for the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Pi,
    Sqrt(Box<Expr>),
    Atan(Box<Expr>),
    /// `K(xi)` in modulus form.
    EllipticK(Box<Expr>),
    /// `E(xi)` in modulus form.
    EllipticE(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self) -> Result<f64> {
        Ok(match self {
            Expr::Int(v) => *v as f64,
            Expr::Pi => std::f64::consts::PI,
            Expr::Sqrt(e) => e.eval()?.sqrt(),
            Expr::Atan(e) => e.eval()?.atan(),
            Expr::EllipticK(e) => elliptic_k_modulus(e.eval()?)?,
            Expr::EllipticE(e) => elliptic_e_modulus(e.eval()?)?,
            Expr::Pow(b, p) => b.eval()?.powf(p.eval()?),
            Expr::Neg(e) => -e.eval()?,
            Expr::Add(v) => v.iter().map(Expr::eval).sum::<Result<f64>>()?,
            Expr::Mul(v) => v.iter().map(Expr::eval).product::<Result<f64>>()?,
            Expr::Div(a, b) => a.eval()? / b.eval()?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Neg(_) => 2,
            Expr::Mul(_) | Expr::Div(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
            Expr::Atan(e) => write!(f, "arctan({e})"),
            Expr::EllipticK(e) => write!(f, "K({e})"),
            Expr::EllipticE(e) => write!(f, "E({e})"),
            Expr::Pow(b, p) => {
                b.fmt_child(f, 5)?;
                write!(f, "^")?;
                p.fmt_child(f, 5)
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_child(f, 3)
            }
            Expr::Add(v) => {
                for (i, e) in v.iter().enumerate() {
                    match (i, e) {
                        (0, _) => e.fmt_child(f, 2)?,
                        (_, Expr::Neg(inner)) => {
                            write!(f, " - ")?;
                            inner.fmt_child(f, 3)?;
                        }
                        _ => {
                            write!(f, " + ")?;
                            e.fmt_child(f, 2)?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Mul(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    e.fmt_child(f, 3)?;
                }
                Ok(())
            }
            Expr::Div(a, b) => {
                a.fmt_child(f, 3)?;
                write!(f, "/")?;
                b.fmt_child(f, 4)
            }
        }
    }
}

// Builders; keep the catalogue below readable.
fn int(v: i64) -> Expr {
    Expr::Int(v)
}
fn pi() -> Expr {
    Expr::Pi
}
fn sqrt(e: Expr) -> Expr {
    Expr::Sqrt(Box::new(e))
}
fn atan(e: Expr) -> Expr {
    Expr::Atan(Box::new(e))
}
fn pow(b: Expr, p: Expr) -> Expr {
    Expr::Pow(Box::new(b), Box::new(p))
}
fn neg(e: Expr) -> Expr {
    Expr::Neg(Box::new(e))
}
fn add(v: Vec<Expr>) -> Expr {
    Expr::Add(v)
}
fn mul(v: Vec<Expr>) -> Expr {
    Expr::Mul(v)
}
fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div(Box::new(a), Box::new(b))
}
fn frac(p: i64, q: i64) -> Expr {
    div(int(p), int(q))
}
fn pi_pow(p: i64, q: i64) -> Expr {
    pow(pi(), frac(p, q))
}

/// Where an entry's expression comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Published closed form.
    Published,
    /// `nu(d, 2) = E|r2 - r1|² = 2d`, the second moment of a step.
    SecondMoment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueEntry {
    pub spec: TourSpec,
    pub expression: Expr,
    pub value: f64,
    pub provenance: Provenance,
}

/// Serializable view of a catalogue entry, as emitted by the `table` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueRow {
    pub quantity: String,
    pub d: usize,
    pub n: usize,
    pub topology: Topology,
    pub expression: String,
    pub value: f64,
    pub provenance: Provenance,
}

impl From<&CatalogueEntry> for CatalogueRow {
    fn from(e: &CatalogueEntry) -> Self {
        CatalogueRow {
            quantity: e.spec.label(),
            d: e.spec.d,
            n: e.spec.n,
            topology: e.spec.topology,
            expression: e.expression.to_string(),
            value: e.value,
            provenance: e.provenance,
        }
    }
}

fn published_expressions() -> Vec<(TourSpec, Expr)> {
    let open = |d, n| TourSpec::open(d, n).unwrap();
    let closed = |d, n| TourSpec::closed(d, n).unwrap();
    vec![
        (open(1, 1), div(int(2), sqrt(pi()))),
        (
            open(1, 2),
            add(vec![frac(1, 3), div(mul(vec![int(2), sqrt(int(3))]), pi())]),
        ),
        (
            open(1, 3),
            add(vec![
                div(int(5), sqrt(pi())),
                div(mul(vec![int(4), sqrt(int(2))]), pi_pow(3, 2)),
                neg(mul(vec![div(int(12), pi_pow(3, 2)), atan(sqrt(int(2)))])),
            ]),
        ),
        (
            open(1, 4),
            add(vec![
                frac(2, 15),
                div(mul(vec![int(4), sqrt(int(5))]), pow(pi(), int(2))),
                mul(vec![
                    div(int(8), pow(pi(), int(2))),
                    atan(div(sqrt(int(5)), int(7))),
                ]),
                mul(vec![
                    div(mul(vec![int(8), sqrt(int(3))]), pow(pi(), int(2))),
                    atan(sqrt(frac(3, 5))),
                ]),
            ]),
        ),
        (closed(1, 2), int(2)),
        (closed(1, 3), div(int(3), sqrt(pi()))),
        (
            closed(1, 4),
            add(vec![
                frac(2, 3),
                neg(div(int(8), pi())),
                div(mul(vec![int(8), sqrt(int(3))]), pi()),
            ]),
        ),
        (open(2, 1), sqrt(pi())),
        (
            open(2, 2),
            add(vec![
                mul(vec![int(4), Expr::EllipticE(Box::new(frac(1, 2)))]),
                neg(mul(vec![frac(3, 2), Expr::EllipticK(Box::new(frac(1, 2)))])),
            ]),
        ),
        (closed(2, 2), int(4)),
        (open(3, 1), div(int(4), sqrt(pi()))),
        (
            open(3, 2),
            add(vec![int(2), div(mul(vec![int(6), sqrt(int(3))]), pi())]),
        ),
        (
            open(3, 3),
            add(vec![
                div(int(238), mul(vec![int(3), sqrt(pi())])),
                div(mul(vec![int(56), sqrt(int(2))]), mul(vec![int(3), pi_pow(3, 2)])),
                neg(mul(vec![div(int(216), pi_pow(3, 2)), atan(sqrt(int(2)))])),
            ]),
        ),
        (
            open(3, 4),
            add(vec![
                frac(232, 45),
                neg(div(int(3140), mul(vec![int(9), pi()]))),
                div(int(56), mul(vec![sqrt(int(3)), pi()])),
                div(
                    mul(vec![int(260), sqrt(int(5))]),
                    mul(vec![int(9), pow(pi(), int(2))]),
                ),
                mul(vec![div(int(912), pow(pi(), int(2))), atan(sqrt(int(5)))]),
                mul(vec![
                    div(int(224), mul(vec![sqrt(int(3)), pow(pi(), int(2))])),
                    atan(sqrt(frac(5, 3))),
                ]),
            ]),
        ),
        (closed(3, 2), int(6)),
    ]
}

fn build_entry(spec: TourSpec, expression: Expr, provenance: Provenance) -> CatalogueEntry {
    let value = expression
        .eval()
        .expect("catalogue expressions stay inside special-function domains");
    CatalogueEntry {
        spec,
        expression,
        value,
        provenance,
    }
}

/// The published entries, evaluated once.
pub fn published() -> &'static [CatalogueEntry] {
    static TABLE: OnceLock<Vec<CatalogueEntry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        published_expressions()
            .into_iter()
            .map(|(spec, e)| build_entry(spec, e, Provenance::Published))
            .collect()
    })
}

/// Exact value of `spec`, if one is known.
///
/// Besides the published entries this covers `nu(d, 2) = 2d` for every `d`.
pub fn exact_value(spec: &TourSpec) -> Option<CatalogueEntry> {
    if let Some(e) = published().iter().find(|e| e.spec == *spec) {
        return Some(e.clone());
    }
    if spec.topology == Topology::Closed && spec.n == 2 {
        let e = mul(vec![int(2), int(spec.d as i64)]);
        return Some(build_entry(*spec, e, Provenance::SecondMoment));
    }
    None
}

/// Rows of the published catalogue, in display order.
pub fn table_rows() -> Vec<CatalogueRow> {
    published().iter().map(CatalogueRow::from).collect()
}
