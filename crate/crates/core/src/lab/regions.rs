//! Parameter regions of every theorem, proposition and lemma, as pure predicates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Direction;
use crate::error::{LabError, Result};
use crate::families::{FamilyKind, ParameterPoint};
use crate::norms::{NormClass, NormSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "T1.1-1")]
    T1_1_1,
    #[serde(rename = "T1.1-2")]
    T1_1_2,
    #[serde(rename = "T2.2")]
    T2_2,
    #[serde(rename = "T3.1-1")]
    T3_1_1,
    #[serde(rename = "T3.1-2-concave-recip")]
    T3_1_2ConcaveRecip,
    #[serde(rename = "T3.1-2-convex")]
    T3_1_2Convex,
    #[serde(rename = "T3.2")]
    T3_2,
    #[serde(rename = "P4.1-1")]
    P4_1_1,
    #[serde(rename = "P4.1-2")]
    P4_1_2,
    #[serde(rename = "P4.4-1")]
    P4_4_1,
    #[serde(rename = "P4.4-2")]
    P4_4_2,
    #[serde(rename = "T5.1-1")]
    T5_1_1,
    #[serde(rename = "T5.1-2")]
    T5_1_2,
    #[serde(rename = "T5.2-1")]
    T5_2_1,
    #[serde(rename = "T5.2-2")]
    T5_2_2,
    #[serde(rename = "L5.4")]
    L5_4,
}

/// Which functionals a region's claim speaks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormRequirement {
    Trace,
    AntiNorm,
    Norm,
    /// `||X^{-1}||^{-1}` for a symmetric norm.
    DerivedAntiNorm,
    SmallestEigenvalue,
    OperatorNorm,
}

impl NormRequirement {
    pub fn admits(self, norm: &NormSpec) -> bool {
        match self {
            NormRequirement::Trace => *norm == NormSpec::Trace,
            NormRequirement::AntiNorm => norm.class().is_antinorm(),
            NormRequirement::Norm => norm.class().is_norm(),
            NormRequirement::DerivedAntiNorm => matches!(norm, NormSpec::Derived { .. }),
            NormRequirement::SmallestEigenvalue => *norm == NormSpec::SmallestEigenvalue,
            NormRequirement::OperatorNorm => *norm == NormSpec::OperatorNorm,
        }
    }

    pub fn canonical(self, dim: usize) -> NormSpec {
        match self {
            NormRequirement::Trace => NormSpec::Trace,
            NormRequirement::AntiNorm => NormSpec::KyFanAntiNorm { k: 1 },
            NormRequirement::Norm => NormSpec::KyFanNorm { k: dim.min(2) },
            NormRequirement::DerivedAntiNorm => NormSpec::derived(NormSpec::Trace),
            NormRequirement::SmallestEigenvalue => NormSpec::SmallestEigenvalue,
            NormRequirement::OperatorNorm => NormSpec::OperatorNorm,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            NormRequirement::Trace => "the trace functional",
            NormRequirement::AntiNorm => "a symmetric anti-norm",
            NormRequirement::Norm => "a symmetric norm",
            NormRequirement::DerivedAntiNorm => "a derived anti-norm ||X^{-1}||^{-1}",
            NormRequirement::SmallestEigenvalue => "the smallest eigenvalue",
            NormRequirement::OperatorNorm => "the operator norm",
        }
    }
}

/// What a functional-family region asserts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub family: FamilyKind,
    pub direction: Direction,
    pub norm: NormRequirement,
    pub requires_cp: bool,
    /// Claim stated for `Phi = Psi = id` with `n = m`.
    pub identity_maps: bool,
    /// Region lists necessary conditions only.
    pub necessary_only: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Rel {
    Le,
    Lt,
    Ge,
    Gt,
}

#[derive(Clone, Debug)]
struct Cond {
    label: &'static str,
    value: f64,
    bound: f64,
    rel: Rel,
}

impl Cond {
    fn holds(&self) -> bool {
        match self.rel {
            Rel::Le => self.value <= self.bound,
            Rel::Lt => self.value < self.bound,
            Rel::Ge => self.value >= self.bound,
            Rel::Gt => self.value > self.bound,
        }
    }

    fn violation(&self) -> String {
        let negated = match self.rel {
            Rel::Le => ">",
            Rel::Lt => "≥",
            Rel::Ge => "<",
            Rel::Gt => "≤",
        };
        format!("{} violated: {} {} {}", self.label, self.value, negated, self.bound)
    }
}

fn c(label: &'static str, value: f64, rel: Rel, bound: f64) -> Cond {
    Cond { label, value, bound, rel }
}

type Branch = Vec<Cond>;

fn sum_inv(p: f64, q: f64) -> f64 {
    1.0 / (p + q)
}

/// `(p, q, s) -> (-p, -q, -s)` applied to a branch builder.
fn with_counterparts(point: ParameterPoint, build: impl Fn(f64, f64, f64) -> Vec<Branch>) -> Vec<Branch> {
    let mut out = build(point.p, point.q, point.s);
    out.extend(build(-point.p, -point.q, -point.s));
    out
}

fn p_in(lo: f64, lo_rel: Rel, p: f64, hi_rel: Rel, hi: f64, lo_label: &'static str, hi_label: &'static str) -> [Cond; 2] {
    [c(lo_label, p, lo_rel, lo), c(hi_label, p, hi_rel, hi)]
}

impl TheoremId {
    pub const ALL: [TheoremId; 16] = [
        TheoremId::T1_1_1,
        TheoremId::T1_1_2,
        TheoremId::T2_2,
        TheoremId::T3_1_1,
        TheoremId::T3_1_2ConcaveRecip,
        TheoremId::T3_1_2Convex,
        TheoremId::T3_2,
        TheoremId::P4_1_1,
        TheoremId::P4_1_2,
        TheoremId::P4_4_1,
        TheoremId::P4_4_2,
        TheoremId::T5_1_1,
        TheoremId::T5_1_2,
        TheoremId::T5_2_1,
        TheoremId::T5_2_2,
        TheoremId::L5_4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T1_1_1 => "T1.1-1",
            TheoremId::T1_1_2 => "T1.1-2",
            TheoremId::T2_2 => "T2.2",
            TheoremId::T3_1_1 => "T3.1-1",
            TheoremId::T3_1_2ConcaveRecip => "T3.1-2-concave-recip",
            TheoremId::T3_1_2Convex => "T3.1-2-convex",
            TheoremId::T3_2 => "T3.2",
            TheoremId::P4_1_1 => "P4.1-1",
            TheoremId::P4_1_2 => "P4.1-2",
            TheoremId::P4_4_1 => "P4.4-1",
            TheoremId::P4_4_2 => "P4.4-2",
            TheoremId::T5_1_1 => "T5.1-1",
            TheoremId::T5_1_2 => "T5.1-2",
            TheoremId::T5_2_1 => "T5.2-1",
            TheoremId::T5_2_2 => "T5.2-2",
            TheoremId::L5_4 => "L5.4",
        }
    }

    /// Human-readable statement of the region.
    pub fn statement(self) -> &'static str {
        match self {
            TheoremId::T1_1_1 => "0≤p,q≤1 and 1/2≤s≤1/(p+q), or -1≤p,q≤0 and 1/(p+q)≤s≤-1/2: Lieb trace jointly concave",
            TheoremId::T1_1_2 => "0≤p,q≤1 and -1/(p+q)≤s≤-1/2, or -1≤p,q≤0 and 1/2≤s≤-1/(p+q): Lieb trace jointly convex",
            TheoremId::T2_2 => "0≤p,q≤1 and 0<s≤1/max{p,q}, or -1≤p,q≤0 and 1/min{p,q}≤s<0: mean family anti-norm jointly concave",
            TheoremId::T3_1_1 => "0<p≤1 and 0<s≤1/p, or -1≤p<0 and 1/p≤s<0: Epstein anti-norm concave",
            TheoremId::T3_1_2ConcaveRecip => "0<p≤1 and 0<s≤1/p, or -1≤p<0 and 1/p≤s<0: ||Phi(A^p)^{-s}||^{-1} concave",
            TheoremId::T3_1_2Convex => "-1≤p<0 and s>0, or 0<p≤1 and s<0, or 1≤p≤2 and s≥1: Epstein norm convex",
            TheoremId::T3_2 => "1≤p≤2 and s≥1/p, CP map: Epstein norm convex",
            TheoremId::P4_1_1 => "necessary for concavity of Tr(X*A^pX)^s: 0<p≤1 and 0<s≤1/p, or -1≤p<0 and 1/p≤s<0",
            TheoremId::P4_1_2 => "necessary for joint concavity of Tr(A^{p/2}B^qA^{p/2})^s: 0<p,q≤1 and 0<s≤1/(p+q), or -1≤p,q<0 and 1/(p+q)≤s<0",
            TheoremId::P4_4_1 => "necessary for convexity of Tr(X*A^pX)^s: -1≤p<0 and s>0, 1≤p≤2 and s≥1/p, and the (-p,-s) counterparts",
            TheoremId::P4_4_2 => "necessary for joint convexity of Tr(A^{p/2}B^qA^{p/2})^s: six conditions with p+q>0 and s≥1/(p+q)",
            TheoremId::T5_1_1 => "0≤p,q≤1 and 0<s≤1/(p+q), or -1≤p,q≤0 and 1/(p+q)≤s<0: lambda_min family jointly concave",
            TheoremId::T5_1_2 => "six conditions: operator-norm family jointly convex",
            TheoremId::T5_2_1 => "p,q,s≠0 and the T5.1-1 conditions: lambda_min((A^{p/2}B^qA^{p/2})^s) jointly concave iff",
            TheoremId::T5_2_2 => "p,q,s≠0 and the T5.1-2 conditions: ||(A^{p/2}B^qA^{p/2})^s||_∞ jointly convex iff",
            TheoremId::L5_4 => "p=q, 1≤p<q, p<q≤-1, p≤-1 and q≥1, 1/2≤p<1≤q, or p≤-1<q≤-1/2: power-mean dominance",
        }
    }

    /// `None` for the Loewner-order lemma.
    pub fn claim(self) -> Option<Claim> {
        use Direction::{Concave, Convex};
        use FamilyKind::{Epstein, Lieb, MeanFamily};
        let mk = |family, direction, norm, requires_cp, identity_maps, necessary_only| Claim {
            family,
            direction,
            norm,
            requires_cp,
            identity_maps,
            necessary_only,
        };
        Some(match self {
            TheoremId::T1_1_1 => mk(Lieb, Concave, NormRequirement::Trace, false, false, false),
            TheoremId::T1_1_2 => mk(Lieb, Convex, NormRequirement::Trace, false, false, false),
            TheoremId::T2_2 => mk(MeanFamily, Concave, NormRequirement::AntiNorm, false, false, false),
            TheoremId::T3_1_1 => mk(Epstein, Concave, NormRequirement::AntiNorm, false, false, false),
            TheoremId::T3_1_2ConcaveRecip => mk(Epstein, Concave, NormRequirement::DerivedAntiNorm, false, false, false),
            TheoremId::T3_1_2Convex => mk(Epstein, Convex, NormRequirement::Norm, false, false, false),
            TheoremId::T3_2 => mk(Epstein, Convex, NormRequirement::Norm, true, false, false),
            TheoremId::P4_1_1 => mk(Epstein, Concave, NormRequirement::Trace, false, false, true),
            TheoremId::P4_1_2 => mk(Lieb, Concave, NormRequirement::Trace, false, true, true),
            TheoremId::P4_4_1 => mk(Epstein, Convex, NormRequirement::Trace, false, false, true),
            TheoremId::P4_4_2 => mk(Lieb, Convex, NormRequirement::Trace, false, true, true),
            TheoremId::T5_1_1 => mk(Lieb, Concave, NormRequirement::SmallestEigenvalue, false, false, false),
            TheoremId::T5_1_2 => mk(Lieb, Convex, NormRequirement::OperatorNorm, false, false, false),
            TheoremId::T5_2_1 => mk(Lieb, Concave, NormRequirement::SmallestEigenvalue, false, true, false),
            TheoremId::T5_2_2 => mk(Lieb, Convex, NormRequirement::OperatorNorm, false, true, false),
            TheoremId::L5_4 => return None,
        })
    }

    fn branches(self, point: ParameterPoint) -> Vec<Branch> {
        use Rel::*;
        let ParameterPoint { p, q, s } = point;
        let nonzero_pq = || c("|p| + |q| > 0", p.abs() + q.abs(), Gt, 0.0);
        let nonzero_s = || c("s ≠ 0", s.abs(), Gt, 0.0);
        let all_nonzero = || {
            vec![
                c("p ≠ 0", p.abs(), Gt, 0.0),
                c("q ≠ 0", q.abs(), Gt, 0.0),
                c("s ≠ 0", s.abs(), Gt, 0.0),
            ]
        };
        let unit = |v: f64, lo_label: &'static str, hi_label: &'static str| p_in(0.0, Ge, v, Le, 1.0, lo_label, hi_label);
        let neg_unit = |v: f64, lo_label: &'static str, hi_label: &'static str| p_in(-1.0, Ge, v, Le, 0.0, lo_label, hi_label);
        let pos_branch = || {
            let mut b: Branch = Vec::new();
            b.extend(unit(p, "p ≥ 0", "p ≤ 1"));
            b.extend(unit(q, "q ≥ 0", "q ≤ 1"));
            b
        };
        let neg_branch = || {
            let mut b: Branch = Vec::new();
            b.extend(neg_unit(p, "p ≥ -1", "p ≤ 0"));
            b.extend(neg_unit(q, "q ≥ -1", "q ≤ 0"));
            b
        };
        let with = |mut base: Branch, extra: Vec<Cond>| {
            base.extend(extra);
            base
        };
        let epstein_concave = || {
            vec![
                vec![c("p > 0", p, Gt, 0.0), c("p ≤ 1", p, Le, 1.0), c("s > 0", s, Gt, 0.0), c("s ≤ 1/p", s, Le, 1.0 / p)],
                vec![c("p ≥ -1", p, Ge, -1.0), c("p < 0", p, Lt, 0.0), c("s ≥ 1/p", s, Ge, 1.0 / p), c("s < 0", s, Lt, 0.0)],
            ]
        };
        let lambda_min_concave = || {
            vec![
                with(pos_branch(), vec![nonzero_pq(), c("s > 0", s, Gt, 0.0), c("s ≤ 1/(p+q)", s, Le, sum_inv(p, q))]),
                with(neg_branch(), vec![nonzero_pq(), c("s ≥ 1/(p+q)", s, Ge, sum_inv(p, q)), c("s < 0", s, Lt, 0.0)]),
            ]
        };
        let operator_convex = || {
            with_counterparts(point, |p, q, s| {
                let pq = p + q;
                vec![
                    vec![
                        c("p ≥ -1", p, Ge, -1.0),
                        c("p ≤ 0", p, Le, 0.0),
                        c("q ≥ -1", q, Ge, -1.0),
                        c("q ≤ 0", q, Le, 0.0),
                        c("|p| + |q| > 0", p.abs() + q.abs(), Gt, 0.0),
                        c("s > 0", s, Gt, 0.0),
                    ],
                    vec![
                        c("p ≥ -1", p, Ge, -1.0),
                        c("p ≤ 0", p, Le, 0.0),
                        c("q ≥ 1", q, Ge, 1.0),
                        c("q ≤ 2", q, Le, 2.0),
                        c("p + q > 0", pq, Gt, 0.0),
                        c("s ≥ 1/(p+q)", s, Ge, 1.0 / pq),
                    ],
                    vec![
                        c("p ≥ 1", p, Ge, 1.0),
                        c("p ≤ 2", p, Le, 2.0),
                        c("q ≥ -1", q, Ge, -1.0),
                        c("q ≤ 0", q, Le, 0.0),
                        c("p + q > 0", pq, Gt, 0.0),
                        c("s ≥ 1/(p+q)", s, Ge, 1.0 / pq),
                    ],
                ]
            })
        };
        match self {
            TheoremId::T1_1_1 => vec![
                with(pos_branch(), vec![nonzero_pq(), c("s ≥ 1/2", s, Ge, 0.5), c("s ≤ 1/(p+q)", s, Le, sum_inv(p, q))]),
                with(neg_branch(), vec![nonzero_pq(), c("s ≥ 1/(p+q)", s, Ge, sum_inv(p, q)), c("s ≤ -1/2", s, Le, -0.5)]),
            ],
            TheoremId::T1_1_2 => vec![
                with(pos_branch(), vec![nonzero_pq(), c("s ≥ -1/(p+q)", s, Ge, -sum_inv(p, q)), c("s ≤ -1/2", s, Le, -0.5)]),
                with(neg_branch(), vec![nonzero_pq(), c("s ≥ 1/2", s, Ge, 0.5), c("s ≤ -1/(p+q)", s, Le, -sum_inv(p, q))]),
            ],
            TheoremId::T2_2 => vec![
                with(pos_branch(), vec![nonzero_pq(), c("s > 0", s, Gt, 0.0), c("s ≤ 1/max{p,q}", s, Le, 1.0 / p.max(q))]),
                with(neg_branch(), vec![nonzero_pq(), c("s ≥ 1/min{p,q}", s, Ge, 1.0 / p.min(q)), c("s < 0", s, Lt, 0.0)]),
            ],
            TheoremId::T3_1_1 | TheoremId::T3_1_2ConcaveRecip | TheoremId::P4_1_1 => epstein_concave(),
            TheoremId::T3_1_2Convex => vec![
                vec![c("p ≥ -1", p, Ge, -1.0), c("p < 0", p, Lt, 0.0), c("s > 0", s, Gt, 0.0)],
                vec![c("p > 0", p, Gt, 0.0), c("p ≤ 1", p, Le, 1.0), c("s < 0", s, Lt, 0.0)],
                vec![c("p ≥ 1", p, Ge, 1.0), c("p ≤ 2", p, Le, 2.0), c("s ≥ 1", s, Ge, 1.0)],
            ],
            TheoremId::T3_2 => vec![vec![c("p ≥ 1", p, Ge, 1.0), c("p ≤ 2", p, Le, 2.0), c("s ≥ 1/p", s, Ge, 1.0 / p)]],
            TheoremId::P4_1_2 => vec![
                vec![
                    c("p > 0", p, Gt, 0.0),
                    c("p ≤ 1", p, Le, 1.0),
                    c("q > 0", q, Gt, 0.0),
                    c("q ≤ 1", q, Le, 1.0),
                    c("s > 0", s, Gt, 0.0),
                    c("s ≤ 1/(p+q)", s, Le, sum_inv(p, q)),
                ],
                vec![
                    c("p ≥ -1", p, Ge, -1.0),
                    c("p < 0", p, Lt, 0.0),
                    c("q ≥ -1", q, Ge, -1.0),
                    c("q < 0", q, Lt, 0.0),
                    c("s ≥ 1/(p+q)", s, Ge, sum_inv(p, q)),
                    c("s < 0", s, Lt, 0.0),
                ],
            ],
            TheoremId::P4_4_1 => with_counterparts(point, |p, _q, s| {
                vec![
                    vec![c("p ≥ -1", p, Ge, -1.0), c("p < 0", p, Lt, 0.0), c("s > 0", s, Gt, 0.0)],
                    vec![c("p ≥ 1", p, Ge, 1.0), c("p ≤ 2", p, Le, 2.0), c("s ≥ 1/p", s, Ge, 1.0 / p)],
                ]
            }),
            TheoremId::P4_4_2 => with_counterparts(point, |p, q, s| {
                let pq = p + q;
                vec![
                    vec![
                        c("p ≥ -1", p, Ge, -1.0),
                        c("p < 0", p, Lt, 0.0),
                        c("q ≥ -1", q, Ge, -1.0),
                        c("q < 0", q, Lt, 0.0),
                        c("s > 0", s, Gt, 0.0),
                    ],
                    vec![
                        c("p ≥ -1", p, Ge, -1.0),
                        c("p < 0", p, Lt, 0.0),
                        c("q ≥ 1", q, Ge, 1.0),
                        c("q ≤ 2", q, Le, 2.0),
                        c("p + q > 0", pq, Gt, 0.0),
                        c("s ≥ 1/(p+q)", s, Ge, 1.0 / pq),
                    ],
                    vec![
                        c("p ≥ 1", p, Ge, 1.0),
                        c("p ≤ 2", p, Le, 2.0),
                        c("q ≥ -1", q, Ge, -1.0),
                        c("q < 0", q, Lt, 0.0),
                        c("p + q > 0", pq, Gt, 0.0),
                        c("s ≥ 1/(p+q)", s, Ge, 1.0 / pq),
                    ],
                ]
            }),
            TheoremId::T5_1_1 => lambda_min_concave(),
            TheoremId::T5_1_2 => operator_convex(),
            TheoremId::T5_2_1 => lambda_min_concave().into_iter().map(|b| with(all_nonzero(), b)).collect(),
            TheoremId::T5_2_2 => operator_convex().into_iter().map(|b| with(all_nonzero(), b)).collect(),
            TheoremId::L5_4 => vec![
                vec![c("p = q (|p - q| ≤ 0)", (p - q).abs(), Le, 0.0)],
                vec![c("p ≥ 1", p, Ge, 1.0), c("p < q", p, Lt, q)],
                vec![c("p < q", p, Lt, q), c("q ≤ -1", q, Le, -1.0)],
                vec![c("p ≤ -1", p, Le, -1.0), c("q ≥ 1", q, Ge, 1.0)],
                vec![c("p ≥ 1/2", p, Ge, 0.5), c("p < 1", p, Lt, 1.0), c("q ≥ 1", q, Ge, 1.0)],
                vec![c("p ≤ -1", p, Le, -1.0), c("q > -1", q, Gt, -1.0), c("q ≤ -1/2", q, Le, -0.5)],
            ],
        }
        .into_iter()
        .map(|mut b| {
            if !matches!(self, TheoremId::L5_4) && !b.iter().any(|c| c.label == "s ≠ 0") {
                b.push(nonzero_s());
            }
            b
        })
        .collect()
    }

    /// Pure membership test; `s` is ignored for `L5.4`.
    pub fn member(self, point: ParameterPoint) -> bool {
        self.explain(point).is_ok()
    }

    /// `Err` names the first failed condition of the closest branch.
    pub fn explain(self, point: ParameterPoint) -> std::result::Result<(), String> {
        if ![point.p, point.q, point.s].iter().all(|v| v.is_finite()) {
            return Err(format!("non-finite parameters {point}"));
        }
        let branches = self.branches(point);
        if branches.iter().any(|b| b.iter().all(Cond::holds)) {
            return Ok(());
        }
        let closest = branches
            .iter()
            .min_by_key(|b| b.iter().filter(|c| !c.holds()).count())
            .expect("every region has a branch");
        let first = closest.iter().find(|c| !c.holds()).expect("branch fails");
        Err(first.violation())
    }
}

/// Membership by id string.
pub fn region_member(theorem_id: &str, point: ParameterPoint) -> Result<bool> {
    Ok(theorem_id.parse::<TheoremId>()?.member(point))
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(key))
            .ok_or_else(|| LabError::UnknownTheorem(key.to_string()))
    }
}

impl Claim {
    /// Why `norm` / `family` / map kinds fall outside this claim, if they do.
    pub fn check_family(&self, theorem: TheoremId, spec: &crate::families::FamilySpec) -> std::result::Result<(), String> {
        if spec.family != self.family {
            return Err(format!("{theorem} speaks about the {} family, got {}", self.family, spec.family));
        }
        if !self.norm.admits(&spec.norm) {
            return Err(format!(
                "{theorem} requires {}, got {} ({:?})",
                self.norm.describe(),
                spec.norm,
                spec.norm.class()
            ));
        }
        let maps = std::iter::once(&spec.phi).chain(spec.psi.as_ref());
        if self.requires_cp {
            for map in maps.clone() {
                if !map.is_cp() {
                    return Err(format!("{} requires cp: true", theorem_name(theorem)));
                }
            }
        }
        if self.identity_maps {
            for map in maps {
                if !matches!(map.kind, crate::posmaps::MapKind::Identity) {
                    return Err(format!("{theorem} is stated for identity maps"));
                }
            }
        }
        Ok(())
    }
}

/// Long-form name used in messages, e.g. `Theorem 3.2`.
pub fn theorem_name(id: TheoremId) -> String {
    let code = id.as_str();
    let (kind, rest) = match code.chars().next() {
        Some('T') => ("Theorem", &code[1..]),
        Some('P') => ("Proposition", &code[1..]),
        _ => ("Lemma", &code[1..]),
    };
    let number = rest.split('-').next().unwrap_or(rest);
    format!("{kind} {number}")
}

/// Class label shown next to norm names.
pub fn class_label(class: NormClass) -> &'static str {
    match class {
        NormClass::Norm => "norm",
        NormClass::AntiNorm => "anti-norm",
        NormClass::Both => "norm and anti-norm",
    }
}
