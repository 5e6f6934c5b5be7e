//! Point sets of the three moduli cases, the flag-chain classifier, the
//! Kottwitz–Rapoport trichotomy, component signs and decomposition checks.
//!
//! Each case is described by three integers `(D, H, low)` and a form:
//!
//! | case | space | `D` | `H` | `low` |
//! |---|---|---|---|---|
//! | `Z`  | symplectic, dim `t` | `t̂` | `ĥ` | 0 |
//! | `Y`  | symmetric, dim `n−t` | `t̂′ = n̂−t̂` | `ĥ′ = n̂−ĥ` | 0 |
//! | `ZY` | no form, dim `t̂₁−t̂₂` | `t̂₁` | `ĥ` | `t̂₂` |
//!
//! Members are `d = D−H` dimensional subspaces `U` (isotropic if the space is
//! formed) with `dim(U ∩ ΦU) ≥ d−1`. A label `(r̂, ŝ, kind, sign)` is read off
//! the chains `F ↦ F ∩ ΦF` and `F ↦ F + ΦF` started at `U`: `r̂ − H` is the
//! length of the first, `H − ŝ` of the second (see [`StrataCtx::classify`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::gf::{Code, FieldCtx, GfError};
use crate::report::{Check, CountRow, Report, Status};
use crate::space::{
    enumerate_rational_subspaces, enumerate_rref_block_split, first_row_free, gaussian_binomial, pivot_sets,
    FormKind, FormedSpace, SpaceError, Subspace,
};
use crate::weyl::{dl_dimension, DlFamily, DlSetting, Variant, WeylError};

/// Default enumeration budget (candidate subspaces).
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Errors of the strata layer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrataError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("subspace has dimension {got}, the configuration needs {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("subspace is not a member of the configured point set")]
    NotMember,
    #[error("chain step from dimension {from} to {to} (expected a step of exactly one)")]
    ChainStep { from: usize, to: usize },
    #[error("enumeration needs about {needed} candidates, budget is {budget}")]
    Budget { needed: u128, budget: u64 },
    #[error("component sign needs a maximal isotropic subspace of an even symmetric space")]
    Sign,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Field(#[from] GfError),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// The moduli case together with its type parameters (all even integers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum Case {
    /// Symplectic case: `t > h ≥ 0` (`t = h` is the one-point space).
    Z { t: usize, h: usize },
    /// Orthogonal case: `t ≤ h ≤ n`; `split` selects the even form.
    Y { n: usize, h: usize, t: usize, split: bool },
    /// Linear case: `t₂ ≤ h ≤ t₁`.
    Zy { t1: usize, h: usize, t2: usize },
}

/// A full strata configuration: case, residue field size `q`, level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrataConfig {
    #[serde(flatten)]
    pub case: Case,
    pub q: u32,
    pub k: u32,
}

/// Which signed family (if any) the configuration carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignCase {
    None,
    /// Even orthogonal with `h = n`: members are maximal isotropic.
    Lagrangian,
    /// Even orthogonal with `h = n−2`: terminal `wprime` flags are maximal.
    NearLagrangian,
}

/// Derived shape of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub big_d: usize,
    pub big_h: usize,
    pub low: usize,
    /// Member dimension `D − H`.
    pub d: usize,
    pub kind: FormKind,
    pub dim: usize,
    pub signs: SignCase,
}

impl StrataConfig {
    pub fn z(t: usize, h: usize, q: u32, k: u32) -> Self {
        StrataConfig { case: Case::Z { t, h }, q, k }
    }
    pub fn y(n: usize, h: usize, t: usize, split: bool, q: u32, k: u32) -> Self {
        StrataConfig { case: Case::Y { n, h, t, split }, q, k }
    }
    pub fn zy(t1: usize, h: usize, t2: usize, q: u32, k: u32) -> Self {
        StrataConfig { case: Case::Zy { t1, h, t2 }, q, k }
    }

    /// Same configuration at another level.
    pub fn at_level(self, k: u32) -> Self {
        StrataConfig { k, ..self }
    }

    /// Validates parities and ranges and derives the shape.
    pub fn shape(&self) -> Result<Shape, StrataError> {
        let bad = |m: String| Err(StrataError::Config(m));
        let even = |x: usize| x.is_multiple_of(2);
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if prime_power(self.q).is_none_or(|(p, _)| p == 2) {
            return bad(format!("q={} is not an odd prime power", self.q));
        }
        match self.case {
            Case::Z { t, h } => {
                if !even(t) || !even(h) || h > t {
                    return bad(format!("symplectic case needs even 0 ≤ h ≤ t (got t={t}, h={h})"));
                }
                let (big_d, big_h) = (t / 2, h / 2);
                Ok(Shape {
                    big_d,
                    big_h,
                    low: 0,
                    d: big_d - big_h,
                    kind: FormKind::Symplectic,
                    dim: t,
                    signs: SignCase::None,
                })
            }
            Case::Y { n, h, t, split } => {
                if !even(t) || !even(h) || t > h || h > n {
                    return bad(format!("orthogonal case needs even t ≤ h ≤ n (got n={n}, h={h}, t={t})"));
                }
                if n - t == 0 {
                    return bad("orthogonal case needs t < n".into());
                }
                let n_hat = n / 2;
                let (big_d, big_h) = (n_hat - t / 2, n_hat - h / 2);
                let kind = if n % 2 == 1 {
                    FormKind::SymmetricOdd
                } else if split {
                    FormKind::SymmetricEvenSplit
                } else {
                    FormKind::SymmetricEvenNonsplit
                };
                let signs = match (n % 2, big_h) {
                    (0, 0) => SignCase::Lagrangian,
                    (0, 1) => SignCase::NearLagrangian,
                    _ => SignCase::None,
                };
                Ok(Shape { big_d, big_h, low: 0, d: big_d - big_h, kind, dim: n - t, signs })
            }
            Case::Zy { t1, h, t2 } => {
                if !even(t1) || !even(h) || !even(t2) || t2 > h || h > t1 || t2 == t1 {
                    return bad(format!("linear case needs even t₂ ≤ h ≤ t₁, t₂ < t₁ (got {t1}, {h}, {t2})"));
                }
                let (big_d, big_h, low) = (t1 / 2, h / 2, t2 / 2);
                Ok(Shape {
                    big_d,
                    big_h,
                    low,
                    d: big_d - big_h,
                    kind: FormKind::None,
                    dim: big_d - low,
                    signs: SignCase::None,
                })
            }
        }
    }
}

impl fmt::Display for StrataConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.case {
            Case::Z { t, h } => write!(f, "Z(t={t},h={h})"),
            Case::Y { n, h, t, split } => {
                let form = if n % 2 == 1 { "" } else if split { ",split" } else { ",nonsplit" };
                write!(f, "Y(n={n},h={h},t={t}{form})")
            }
            Case::Zy { t1, h, t2 } => write!(f, "ZY(t1={t1},h={h},t2={t2})"),
        }?;
        write!(f, " q={} k={}", self.q, self.k)
    }
}

/// `(p, e)` with `q = p^e`, if `q` is a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut r, mut e) = (q, 0);
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    (r == 1).then_some((p, e))
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    W,
    Wprime,
    Id,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "n/a")]
    Na,
}

/// A stratum label `(r̂, ŝ, kind, sign)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StratumLabel {
    pub r: usize,
    pub s: usize,
    pub kind: Kind,
    pub sign: Sign,
}

impl StratumLabel {
    pub fn new(r: usize, s: usize, kind: Kind) -> Self {
        StratumLabel { r, s, kind, sign: Sign::Na }
    }
    pub fn signed(r: usize, s: usize, kind: Kind, sign: Sign) -> Self {
        StratumLabel { r, s, kind, sign }
    }
}

impl fmt::Display for StratumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::W => "w",
            Kind::Wprime => "wprime",
            Kind::Id => "id",
        };
        let s = match self.sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Na => "",
        };
        write!(f, "{k}({},{}){s}", self.r, self.s)
    }
}

impl FromStr for StratumLabel {
    type Err = StrataError;
    fn from_str(x: &str) -> Result<Self, Self::Err> {
        let err = || StrataError::Config(format!("cannot parse label {x:?}"));
        let (kind, rest) = x.split_once('(').ok_or_else(err)?;
        let kind = match kind {
            "w" => Kind::W,
            "wprime" => Kind::Wprime,
            "id" => Kind::Id,
            _ => return Err(err()),
        };
        let (nums, sign) = rest.split_once(')').ok_or_else(err)?;
        let sign = match sign {
            "" => Sign::Na,
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            _ => return Err(err()),
        };
        let (r, s) = nums.split_once(',').ok_or_else(err)?;
        let r = r.trim().parse().map_err(|_| err())?;
        let s = s.trim().parse().map_err(|_| err())?;
        Ok(StratumLabel { r, s, kind, sign })
    }
}

/// The Kottwitz–Rapoport trichotomy of a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrClass {
    W,
    Wprime,
    Id,
}

/// Result of [`StrataCtx::classify`]: the label and the full flag
/// `F_bottom ⊂ … ⊂ U ⊂ … ⊂ F_top`.
#[derive(Debug, Clone)]
pub struct Classification {
    pub label: StratumLabel,
    pub flag: Vec<Subspace>,
    /// Position of `U` inside `flag`.
    pub member_index: usize,
}

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

/// A validated configuration with its space and word data.
pub struct StrataCtx {
    cfg: StrataConfig,
    shape: Shape,
    space: Arc<FormedSpace>,
    setting: Option<DlSetting>,
}

impl fmt::Debug for StrataCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrataCtx").field("cfg", &self.cfg).field("shape", &self.shape).finish()
    }
}

impl StrataCtx {
    pub fn new(cfg: StrataConfig) -> Result<Self, StrataError> {
        let shape = cfg.shape()?;
        let (p, e) = prime_power(cfg.q).expect("validated");
        // The non-split form only lives over even-degree fields; odd levels
        // are realized inside the quadratic extension by a level filter.
        let working = if shape.kind == FormKind::SymmetricEvenNonsplit && cfg.k % 2 == 1 { 2 * cfg.k } else { cfg.k };
        let ctx = FieldCtx::auto(p, e, working)?;
        let space = FormedSpace::build(&ctx, shape.kind, shape.dim)?;
        let family = match (cfg.case, shape.kind) {
            (Case::Z { .. }, _) => DlFamily::Symplectic,
            (Case::Y { .. }, FormKind::SymmetricOdd) => DlFamily::OrthogonalOdd,
            (Case::Y { split, .. }, _) => DlFamily::OrthogonalEven { split },
            (Case::Zy { .. }, _) => DlFamily::Linear { t2: shape.low },
        };
        let setting = DlSetting::new(family, shape.big_d, shape.big_h).ok();
        Ok(StrataCtx { cfg, shape, space, setting })
    }

    pub fn config(&self) -> &StrataConfig {
        &self.cfg
    }
    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    pub fn space(&self) -> &Arc<FormedSpace> {
        &self.space
    }
    pub fn setting(&self) -> Option<&DlSetting> {
        self.setting.as_ref()
    }

    fn formed(&self) -> bool {
        self.shape.kind.is_formed()
    }

    fn level_filter(&self) -> bool {
        self.space.phi_order() != self.cfg.k
    }

    fn at_level(&self, u: &Subspace) -> bool {
        !self.level_filter() || u.apply_phi_pow(self.cfg.k) == *u
    }

    // -- membership and classification ------------------------------------

    /// Membership test (dimension, isotropy, `dim(U ∩ ΦU) ≥ d−1`).
    pub fn member(&self, u: &Subspace) -> Result<bool, StrataError> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(SpaceError::AmbientMismatch.into());
        }
        if u.dim() != self.shape.d {
            return Err(StrataError::DimensionMismatch { got: u.dim(), want: self.shape.d });
        }
        if self.formed() && !u.is_isotropic()? {
            return Ok(false);
        }
        Ok(u.intersect(&u.apply_phi())?.dim() + 1 >= u.dim())
    }

    /// Runs both chains from a member and returns its label and flag.
    pub fn classify(&self, u: &Subspace) -> Result<Classification, StrataError> {
        // Membership is checked inline: the first downward step is exactly
        // the `dim(U ∩ ΦU) ≥ d−1` condition.
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(SpaceError::AmbientMismatch.into());
        }
        if u.dim() != self.shape.d {
            return Err(StrataError::DimensionMismatch { got: u.dim(), want: self.shape.d });
        }
        if self.formed() && !u.is_isotropic()? {
            return Err(StrataError::NotMember);
        }
        let (big_h, low) = (self.shape.big_h, self.shape.low);
        let mut down = vec![u.clone()];
        loop {
            let f = down.last().expect("nonempty");
            let g = f.intersect(&f.apply_phi())?;
            if g.dim() == f.dim() {
                break;
            }
            if down.len() == 1 && g.dim() + 1 < f.dim() {
                return Err(StrataError::NotMember);
            }
            if g.dim() + 1 != f.dim() {
                return Err(StrataError::ChainStep { from: f.dim(), to: g.dim() });
            }
            down.push(g);
        }
        let mut up = vec![u.clone()];
        let kind = loop {
            let f = up.last().expect("nonempty");
            let pf = f.apply_phi();
            if pf == *f {
                break if !self.formed() {
                    Kind::W
                } else if up.len() == 1 {
                    Kind::Id
                } else {
                    Kind::Wprime
                };
            }
            let sum = f.sum(&pf)?;
            if sum.dim() != f.dim() + 1 {
                return Err(StrataError::ChainStep { from: f.dim(), to: sum.dim() });
            }
            if self.formed() && !sum.is_isotropic()? {
                break Kind::W;
            }
            up.push(sum);
        };
        let (a, b) = (down.len() - 1, up.len() - 1);
        if b > big_h - low {
            return Err(StrataError::ChainStep { from: u.dim(), to: u.dim() + b });
        }
        let mut label = StratumLabel::new(big_h + a, big_h - b, kind);
        label.sign = match (self.shape.signs, kind) {
            (SignCase::Lagrangian, Kind::W) => self.component_sign(u)?,
            (SignCase::NearLagrangian, Kind::Wprime) => self.component_sign(up.last().expect("nonempty"))?,
            _ => Sign::Na,
        };
        let member_index = down.len() - 1;
        let mut flag: Vec<Subspace> = down.into_iter().rev().collect();
        flag.extend(up.into_iter().skip(1));
        Ok(Classification { label, flag, member_index })
    }

    /// Kottwitz–Rapoport class: `id` if `U = ΦU`, `wprime` if `U ≠ ΦU` and
    /// `U + ΦU` is isotropic, `w` otherwise. Formed cases only.
    pub fn kr_class(&self, u: &Subspace) -> Result<KrClass, StrataError> {
        if !self.formed() {
            return Err(SpaceError::Formless.into());
        }
        let pu = u.apply_phi();
        if pu == *u {
            return Ok(KrClass::Id);
        }
        Ok(if u.sum(&pu)?.is_isotropic()? { KrClass::Wprime } else { KrClass::W })
    }

    /// Family sign of a maximal isotropic subspace of an even symmetric
    /// space: `+` iff `dim(F ∩ L_ref) ≡ D (mod 2)`, `L_ref = ⟨e_1..e_D⟩`.
    pub fn component_sign(&self, f: &Subspace) -> Result<Sign, StrataError> {
        let m = self.space.pairs();
        let even_sym = matches!(self.shape.kind, FormKind::SymmetricEvenSplit | FormKind::SymmetricEvenNonsplit);
        if !even_sym || f.dim() != m || !f.is_isotropic()? {
            return Err(StrataError::Sign);
        }
        let l_ref = Subspace::coordinate(&self.space, &(0..m).collect::<Vec<_>>());
        let meet = f.intersect(&l_ref)?.dim();
        Ok(if meet % 2 == m % 2 { Sign::Plus } else { Sign::Minus })
    }

    // -- index sets ---------------------------------------------------------

    /// Labels the stratification predicts for this case.
    pub fn expected_labels(&self) -> BTreeSet<StratumLabel> {
        let Shape { big_d, big_h, low, d, .. } = self.shape;
        let mut out = BTreeSet::new();
        if !self.formed() {
            out.insert(StratumLabel::new(big_h, big_h, Kind::W));
            if d > 0 {
                for r in big_h + 1..=big_d {
                    for s in low..big_h {
                        out.insert(StratumLabel::new(r, s, Kind::W));
                    }
                }
            }
            return out;
        }
        if d == 0 {
            out.insert(StratumLabel::new(big_h, big_h, Kind::Id));
            return out;
        }
        match self.shape.signs {
            SignCase::Lagrangian => {
                for r in 1..=big_d {
                    for sg in [Sign::Plus, Sign::Minus] {
                        out.insert(StratumLabel::signed(r, 0, Kind::W, sg));
                    }
                }
            }
            SignCase::NearLagrangian => {
                for r in 2..=big_d {
                    for s in 0..=1 {
                        out.insert(StratumLabel::new(r, s, Kind::W));
                    }
                    for sg in [Sign::Plus, Sign::Minus] {
                        out.insert(StratumLabel::signed(r, 0, Kind::Wprime, sg));
                    }
                }
                out.insert(StratumLabel::new(1, 1, Kind::Id));
            }
            SignCase::None => {
                for r in big_h + 1..=big_d {
                    for s in 0..=big_h {
                        out.insert(StratumLabel::new(r, s, Kind::W));
                    }
                    for s in 0..big_h {
                        out.insert(StratumLabel::new(r, s, Kind::Wprime));
                    }
                }
                out.insert(StratumLabel::new(big_h, big_h, Kind::Id));
            }
        }
        out
    }

    /// The literal linear index set `{t̂₂ ≤ ŝ ≤ ĥ ≤ r̂ ≤ t̂₁}`; it contains
    /// shapes no point can realize (see [`Self::expected_labels`]).
    pub fn literal_linear_labels(&self) -> BTreeSet<StratumLabel> {
        let Shape { big_d, big_h, low, .. } = self.shape;
        let mut out = BTreeSet::new();
        for r in big_h..=big_d {
            for s in low..=big_h {
                out.insert(StratumLabel::new(r, s, Kind::W));
            }
        }
        out
    }

    /// Whether a label can carry points over `GF(q^k)` at the configured
    /// level. Its support is a chain with `r̂−ŝ` steps which the Frobenius
    /// has to move through; the restrictions are:
    ///
    /// * `id`: a rational member exists (`d` at most the rational Witt index);
    /// * `wprime`: a rational isotropic `(D−ŝ)`-space exists and `r̂−ŝ ≤ k`;
    /// * `w`: `k ≥ 2(r̂−ŝ)`; in the even orthogonal case with `ŝ = 0` the
    ///   top of the chain is a maximal isotropic `U` with `U + ΦU`
    ///   non-isotropic, which needs the Frobenius to swap the two families
    ///   (non-split form at an even level); the split form never has points.
    pub fn realizable(&self, l: &StratumLabel) -> bool {
        let Shape { big_d, big_h, kind, .. } = self.shape;
        let k = self.cfg.k as usize;
        let nonsplit = kind == FormKind::SymmetricEvenNonsplit;
        let witt = if nonsplit { big_d - 1 } else { big_d };
        if !self.formed() {
            return (l.r == big_h && l.s == big_h) || l.r - l.s <= k;
        }
        match l.kind {
            Kind::Id => self.shape.d <= witt,
            Kind::Wprime => big_d - l.s <= witt && l.r - l.s <= k,
            Kind::W => {
                let even_orth = matches!(kind, FormKind::SymmetricEvenSplit | FormKind::SymmetricEvenNonsplit);
                let mut ok = k >= 2 * (l.r - l.s);
                if even_orth && l.s == 0 {
                    ok &= nonsplit && k.is_multiple_of(2);
                }
                ok
            }
        }
    }

    /// Index set claimed to form the closure of the stratum `l`.
    pub fn closure(&self, l: &StratumLabel) -> BTreeSet<StratumLabel> {
        let big_h = self.shape.big_h;
        let expected = self.expected_labels();
        let mut out = BTreeSet::new();
        if !self.formed() {
            for x in &expected {
                if x.s >= l.s && x.r <= l.r {
                    out.insert(*x);
                }
            }
            return out;
        }
        let id = StratumLabel::new(big_h, big_h, Kind::Id);
        match (l.kind, self.shape.signs) {
            (Kind::Id, _) => {
                out.insert(*l);
            }
            (Kind::W, SignCase::Lagrangian) => {
                for i in big_h + 1..=l.r {
                    out.insert(StratumLabel::signed(i, 0, Kind::W, l.sign));
                }
            }
            (Kind::W, _) => {
                for i in big_h + 1..=l.r {
                    for j in 0..=l.s {
                        out.insert(StratumLabel::new(i, j, Kind::W));
                    }
                    for j in 0..big_h {
                        if self.shape.signs == SignCase::NearLagrangian {
                            out.insert(StratumLabel::signed(i, j, Kind::Wprime, Sign::Plus));
                            out.insert(StratumLabel::signed(i, j, Kind::Wprime, Sign::Minus));
                        } else {
                            out.insert(StratumLabel::new(i, j, Kind::Wprime));
                        }
                    }
                }
                out.insert(id);
            }
            (Kind::Wprime, _) => {
                for i in big_h + 1..=l.r {
                    for j in l.s..big_h {
                        out.insert(StratumLabel::signed(i, j, Kind::Wprime, l.sign));
                    }
                }
                out.insert(id);
            }
        }
        out
    }

    /// Labels of the open (top-dimensional) strata.
    pub fn top_labels(&self) -> Vec<StratumLabel> {
        let Shape { big_d, big_h, low, d, .. } = self.shape;
        if d == 0 {
            let kind = if self.formed() { Kind::Id } else { Kind::W };
            return vec![StratumLabel::new(big_h, big_h, kind)];
        }
        match self.shape.signs {
            SignCase::Lagrangian => {
                vec![StratumLabel::signed(big_d, 0, Kind::W, Sign::Plus), StratumLabel::signed(big_d, 0, Kind::W, Sign::Minus)]
            }
            _ if !self.formed() => vec![StratumLabel::new(big_d, low, Kind::W)],
            _ => vec![StratumLabel::new(big_d, big_h, Kind::W)],
        }
    }

    /// Deligne–Lusztig dimension `ℓ(w) + ℓ(W_{I∩wΦ(I)}) − ℓ(W_I)` of the
    /// variety attached to a label.
    pub fn label_dimension(&self, l: &StratumLabel) -> Result<usize, WeylError> {
        let st = self.setting.as_ref().ok_or_else(|| WeylError::Params("no Weyl data for this shape".into()))?;
        if l.kind == Kind::Id || (l.r == l.s) {
            return Ok(0);
        }
        // In type D the `+` word of `w_{r0}` contains `t^+ s_{m−1}` and is not
        // reduced; both families are exchanged by an outer automorphism, so
        // the `−` word serves for either sign.
        let w = match l.kind {
            Kind::W => st.w(l.r, l.s, Variant::Minus)?,
            _ => {
                let v = if l.sign == Sign::Minus { Variant::Minus } else { Variant::Plus };
                st.wprime(l.r, l.s, v)?
            }
        };
        dl_dimension(&st.i_rs(l.r, l.s)?, &w)
    }

    // -- enumeration --------------------------------------------------------

    /// Upper bound on the number of candidates an enumeration inspects.
    pub fn cost_estimate(&self) -> u128 {
        let n = self.shape.dim as u32;
        let d = self.shape.d as u32;
        let big_q = self.space.ctx().size() as u128;
        let q = self.cfg.q as u128;
        if d == 0 {
            return 1;
        }
        if self.cfg.k <= 2 {
            // Rational (d−1)- and d-spaces, then lines in a quotient of the
            // (d−1)-space's orthogonal.
            let rat = gaussian_binomial(n, d - 1, q).saturating_add(gaussian_binomial(n, d, q));
            let j = if self.formed() { n - 2 * (d - 1) } else { n - (d - 1) };
            let lines = (big_q.saturating_pow(j) - 1) / (big_q - 1);
            rat.saturating_add(gaussian_binomial(n, d - 1, q).saturating_mul(lines))
        } else {
            gaussian_binomial(n, d, big_q)
        }
    }

    /// Streams every member to `visit`, sharded in parallel. Shards are
    /// returned in a deterministic order.
    pub fn visit_members<R, I, V>(&self, budget: u64, init: I, visit: V) -> Result<Vec<R>, StrataError>
    where
        R: Send,
        I: Fn() -> R + Sync,
        V: Fn(&mut R, Subspace) -> Result<(), StrataError> + Sync,
    {
        let d = self.shape.d;
        let needed = self.cost_estimate();
        if needed > budget as u128 {
            return Err(StrataError::Budget { needed, budget });
        }
        if d == 0 {
            let mut r = init();
            visit(&mut r, Subspace::zero(&self.space))?;
            return Ok(vec![r]);
        }
        if self.cfg.k <= 2 {
            self.visit_exact(budget, &init, &visit)
        } else {
            self.visit_brute(budget, &init, &visit)
        }
    }

    /// Exact enumeration for `k ≤ 2`: a non-rational member `U` has a
    /// rational `W = U ∩ ΦU` of codimension one (as `Φ²U = U`), so members
    /// are the rational ones plus `W + ⟨x⟩` for rational `W` and projective
    /// points `x` of `W^⊥/W`.
    fn visit_exact<R, I, V>(&self, budget: u64, init: &I, visit: &V) -> Result<Vec<R>, StrataError>
    where
        R: Send,
        I: Fn() -> R + Sync,
        V: Fn(&mut R, Subspace) -> Result<(), StrataError> + Sync,
    {
        let d = self.shape.d;
        let iso = self.formed();
        let mut first = init();
        for u in enumerate_rational_subspaces(&self.space, d, iso, budget)? {
            visit(&mut first, u)?;
        }
        if self.cfg.k == 1 {
            return Ok(vec![first]);
        }
        let ws = enumerate_rational_subspaces(&self.space, d - 1, iso, budget)?;
        let f = self.space.ctx().as_ref();
        let size = f.size() as Code;
        let rest: Vec<R> = ws
            .par_iter()
            .map(|w| -> Result<R, StrataError> {
                let mut acc = init();
                let ambient = if iso { w.perp()? } else { Subspace::full(&self.space) };
                let comp = w.complement_in(&ambient)?;
                let j = comp.len();
                let n = self.space.dim();
                let mut coeffs = vec![0 as Code; j];
                for lead in 0..j {
                    coeffs.iter_mut().for_each(|c| *c = 0);
                    coeffs[lead] = 1;
                    let tail = j - lead - 1;
                    let total = (size as u64).pow(tail as u32);
                    for _ in 0..total {
                        let mut x = vec![0 as Code; n];
                        for (c, row) in coeffs.iter().zip(&comp) {
                            if *c != 0 {
                                for (xi, &ri) in x.iter_mut().zip(row) {
                                    *xi = f.add(*xi, f.mul(*c, ri));
                                }
                            }
                        }
                        let keep = !iso || self.space.form(&x, &x) == 0;
                        if keep {
                            let mut rows: Vec<Vec<Code>> = (0..w.dim()).map(|i| w.row(i).to_vec()).collect();
                            rows.push(x);
                            let u = Subspace::span(&self.space, &rows);
                            if self.at_level(&u) && !u.is_phi_stable() {
                                visit(&mut acc, u)?;
                            }
                        }
                        // Odometer over the tail coordinates.
                        let mut t = j;
                        while t > lead + 1 {
                            t -= 1;
                            coeffs[t] += 1;
                            if coeffs[t] < size {
                                break;
                            }
                            coeffs[t] = 0;
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_, _>>()?;
        let mut out = vec![first];
        out.extend(rest);
        Ok(out)
    }

    /// Brute-force enumeration of all level-`k` (isotropic) `d`-spaces with
    /// a membership filter, sharded by pivot set and first free entry.
    fn visit_brute<R, I, V>(&self, budget: u64, init: &I, visit: &V) -> Result<Vec<R>, StrataError>
    where
        R: Send,
        I: Fn() -> R + Sync,
        V: Fn(&mut R, Subspace) -> Result<(), StrataError> + Sync,
    {
        let d = self.shape.d;
        let n = self.space.dim();
        let f = self.space.ctx().as_ref();
        let alphabet: Vec<Code> = (0..f.size() as Code).collect();
        let gram = if self.formed() { Some(self.space.gram()) } else { None };
        let mut shards = Vec::new();
        for piv in pivot_sets(n, d) {
            if first_row_free(n, &piv) == 0 {
                shards.push((piv, None));
            } else {
                for a in 0..alphabet.len() {
                    shards.push((piv.clone(), Some(a)));
                }
            }
        }
        shards
            .par_iter()
            .map(|(piv, first)| -> Result<R, StrataError> {
                let mut acc = init();
                let mut err = None;
                enumerate_rref_block_split(f, n, piv, &alphabet, gram, budget, *first, &mut |rows| {
                    let u = Subspace::span(&self.space, &rows.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>());
                    if !self.at_level(&u) {
                        return true;
                    }
                    let res = match self.member(&u) {
                        Ok(true) => visit(&mut acc, u),
                        Ok(false) => Ok(()),
                        Err(e) => Err(e),
                    };
                    if let Err(e) = res {
                        err = Some(e);
                        return false;
                    }
                    true
                })?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            })
            .collect()
    }

    /// Every member, in deterministic order (small configurations only).
    pub fn members(&self, budget: u64) -> Result<Vec<Subspace>, StrataError> {
        let shards = self.visit_members(budget, Vec::new, |acc, u| {
            acc.push(u);
            Ok(())
        })?;
        Ok(shards.into_iter().flatten().collect())
    }

    // -- counting -------------------------------------------------------------

    /// Classifies every member and tallies labels and KR classes.
    pub fn tally(&self, budget: u64) -> Result<Tally, StrataError> {
        let formed = self.formed();
        let shards = self.visit_members(budget, Tally::default, |t, u| {
            t.total += 1;
            let mut hs = DefaultHasher::new();
            u.hash(&mut hs);
            t.fingerprints.push(hs.finish());
            match self.classify(&u) {
                Ok(c) => {
                    *t.labels.entry(c.label).or_default() += 1;
                    if formed {
                        let kr = self.kr_class(&u)?;
                        *t.kr.entry((kr, c.label)).or_default() += 1;
                    }
                }
                Err(e) => {
                    t.errors += 1;
                    if t.witnesses.len() < 3 {
                        t.witnesses.push(json!({"error": e.to_string(), "subspace": format!("{u:?}")}));
                    }
                }
            }
            Ok(())
        })?;
        let mut out = Tally::default();
        for s in shards {
            out.merge(s);
        }
        out.fingerprints.sort_unstable();
        let before = out.fingerprints.len();
        out.fingerprints.dedup();
        out.duplicates = (before - out.fingerprints.len()) as u64;
        out.fingerprints = Vec::new();
        Ok(out)
    }

    /// Counts per label (the tally without bookkeeping).
    pub fn stratum_counts(&self, budget: u64) -> Result<BTreeMap<StratumLabel, u64>, StrataError> {
        Ok(self.tally(budget)?.labels)
    }

    // -- verification ---------------------------------------------------------

    /// Runs checks (1)–(6) and assembles a report.
    pub fn verify_decomposition(&self, budget: u64) -> Result<Report, StrataError> {
        let t = self.tally(budget)?;
        let expected = self.expected_labels();
        let realized: BTreeSet<StratumLabel> = t.labels.keys().copied().collect();
        let labels_json = |s: &BTreeSet<StratumLabel>| Value::from(s.iter().map(|l| l.to_string()).collect::<Vec<_>>());
        let mut checks = Vec::new();

        // (1) partition exactness.
        let sum: u64 = t.labels.values().sum();
        let ok = t.errors == 0 && t.duplicates == 0 && sum == t.total;
        checks.push(
            Check::from_bool("partition", ok, || {
                json!({"classification_errors": t.errors, "duplicates": t.duplicates, "examples": t.witnesses})
            })
            .with_data(json!({"members": t.total, "labelled": sum})),
        );

        // (2) realized label set against the index set.
        let predicted: BTreeSet<StratumLabel> = expected.iter().copied().filter(|l| self.realizable(l)).collect();
        let unexpected: BTreeSet<_> = realized.difference(&expected).copied().collect();
        let ok = unexpected.is_empty() && realized == predicted;
        let mut data = json!({
            "expected": labels_json(&expected),
            "realizable_at_level": labels_json(&predicted),
            "realized": labels_json(&realized),
        });
        if !self.formed() {
            data["literal_index_set"] = labels_json(&self.literal_linear_labels());
        }
        checks.push(
            Check::from_bool("index-set", ok, || {
                json!({
                    "unexpected": labels_json(&unexpected),
                    "missing": labels_json(&predicted.difference(&realized).copied().collect()),
                    "extra": labels_json(&realized.difference(&predicted).copied().collect()),
                })
            })
            .with_data(data),
        );

        // (3) closure of the top strata.
        let tops = self.top_labels();
        let mut union = BTreeSet::new();
        for tp in &tops {
            union.extend(self.closure(tp));
        }
        checks.push(Check::from_bool("top-closure", union == expected, || {
            json!({"closure": labels_json(&union), "expected": labels_json(&expected)})
        }));

        // (4) dimension monotonicity along claimed closures.
        if self.setting.is_some() && self.shape.d > 0 {
            let mut bad = Vec::new();
            let mut dims = serde_json::Map::new();
            let mut inconclusive = Vec::new();
            for tp in &tops {
                let Ok(top_dim) = self.label_dimension(tp) else {
                    inconclusive.push(tp.to_string());
                    continue;
                };
                for l in self.closure(tp) {
                    match self.label_dimension(&l) {
                        Ok(dl) => {
                            dims.insert(l.to_string(), dl.into());
                            if l != *tp && dl >= top_dim {
                                bad.push(json!({"top": tp.to_string(), "label": l.to_string(), "dim": dl, "top_dim": top_dim}));
                            }
                        }
                        Err(e) => inconclusive.push(format!("{l}: {e}")),
                    }
                }
                dims.insert(tp.to_string(), top_dim.into());
            }
            let status = if !bad.is_empty() {
                Status::Fail
            } else if !inconclusive.is_empty() {
                Status::Inconclusive
            } else {
                Status::Pass
            };
            let mut c = Check::new("dimension-monotonicity", status).with_data(Value::Object(dims));
            if status != Status::Pass {
                c.witness = Some(json!({"violations": bad, "undetermined": inconclusive}));
            }
            checks.push(c);
        }

        // (5) KR refinement.
        if self.formed() {
            let big_h = self.shape.big_h;
            let mut bad = Vec::new();
            let mut table = Vec::new();
            for ((kr, l), n) in &t.kr {
                let consistent = match kr {
                    KrClass::Id => l.kind == Kind::Id,
                    KrClass::W => l.kind == Kind::W && l.s == big_h,
                    KrClass::Wprime => l.kind != Kind::Id && l.s < big_h,
                };
                let entry = json!({"kr": kr, "label": l.to_string(), "count": n});
                if !consistent {
                    bad.push(entry.clone());
                }
                table.push(entry);
            }
            checks.push(Check::from_bool("kr-refinement", bad.is_empty(), || json!(bad)).with_data(json!(table)));
        }

        // (6) sign classes.
        if self.shape.signs != SignCase::None && self.shape.d > 0 {
            let mut plus = BTreeMap::new();
            let mut minus = BTreeMap::new();
            for (l, n) in &t.labels {
                let key = (l.r, l.s, l.kind);
                match l.sign {
                    Sign::Plus => *plus.entry(key).or_insert(0u64) += n,
                    Sign::Minus => *minus.entry(key).or_insert(0u64) += n,
                    Sign::Na => {}
                }
            }
            let need_points = expected.iter().any(|l| l.sign != Sign::Na && self.realizable(l));
            let (tp, tm): (u64, u64) = (plus.values().sum(), minus.values().sum());
            let keys: BTreeSet<_> = plus.keys().chain(minus.keys()).copied().collect();
            let balanced = keys.iter().all(|k| plus.get(k) == minus.get(k));
            let nonempty = !need_points || (tp > 0 && tm > 0);
            let ok = balanced && nonempty && tp == tm;
            checks.push(
                Check::from_bool("sign-classes", ok, || json!({"plus": tp, "minus": tm, "balanced": balanced}))
                    .with_data(json!({"plus": tp, "minus": tm, "points_expected": need_points})),
            );
        }

        let counts = t.labels.iter().map(|(l, n)| CountRow { label: l.to_string(), count: *n }).collect();
        let config = json!({"strata": self.cfg, "shape": self.shape, "budget": budget});
        Ok(Report::new("strata verify", config, counts, checks))
    }
}

/// Aggregated classification results.
#[derive(Debug, Clone, Default)]
pub struct Tally {
    pub total: u64,
    pub labels: BTreeMap<StratumLabel, u64>,
    pub kr: BTreeMap<(KrClass, StratumLabel), u64>,
    pub errors: u64,
    pub duplicates: u64,
    pub witnesses: Vec<Value>,
    fingerprints: Vec<u64>,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.total += o.total;
        for (l, n) in o.labels {
            *self.labels.entry(l).or_default() += n;
        }
        for (l, n) in o.kr {
            *self.kr.entry(l).or_default() += n;
        }
        self.errors += o.errors;
        for w in o.witnesses {
            if self.witnesses.len() < 3 {
                self.witnesses.push(w);
            }
        }
        self.fingerprints.extend(o.fingerprints);
    }
}

/// Counts at two levels and the fitted exponent, if any.
pub type GrowthRow = (u64, u64, Option<i64>);

/// Per-label growth exponent `round(log_q(c₂/c₁) / (k₂−k₁))` between two
/// levels; `None` where either count vanishes.
pub fn growth_exponents(
    cfg: StrataConfig,
    k1: u32,
    k2: u32,
    budget: u64,
) -> Result<BTreeMap<StratumLabel, GrowthRow>, StrataError> {
    let c1 = StrataCtx::new(cfg.at_level(k1))?.stratum_counts(budget)?;
    let c2 = StrataCtx::new(cfg.at_level(k2))?.stratum_counts(budget)?;
    let labels: BTreeSet<_> = c1.keys().chain(c2.keys()).copied().collect();
    let q = cfg.q as f64;
    Ok(labels
        .into_iter()
        .map(|l| {
            let a = c1.get(&l).copied().unwrap_or(0);
            let b = c2.get(&l).copied().unwrap_or(0);
            let g = (a > 0 && b > 0).then(|| ((b as f64 / a as f64).ln() / q.ln() / (k2 - k1) as f64).round() as i64);
            (l, (a, b, g))
        })
        .collect())
}

/// Compares the Deligne–Lusztig dimension of every `w′` label of the
/// symplectic configurations `Z(t, h)`, `t ≤ max_t`, with the empirical
/// growth exponent of its point counts between levels `k1 < k2` over `F_q`
/// (`w′` strata have no points at level 1).
/// The data records both values together with the letter count `r̂−ŝ−1`
/// and the value `r̂−ŝ` they are compared against.
pub fn wprime_dimension_check(q: u32, max_t: usize, levels: (u32, u32), budget: u64) -> Result<Check, StrataError> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    let mut skipped = Vec::new();
    let mut undetermined = Vec::new();
    for t in (2..=max_t).step_by(2) {
        for h in (2..t).step_by(2) {
            let cfg = StrataConfig::z(t, h, q, 1);
            let ctx = StrataCtx::new(cfg)?;
            let growth = match growth_exponents(cfg, levels.0, levels.1, budget) {
                Err(StrataError::Budget { .. }) => {
                    skipped.push(json!({"t": t, "h": h}));
                    continue;
                }
                other => other?,
            };
            for (l, (c1, c2, g)) in growth {
                if l.kind != Kind::Wprime {
                    continue;
                }
                let dl = ctx.label_dimension(&l).ok();
                let row = json!({"t": t, "h": h, "label": l.to_string(), "counts": [c1, c2], "growth": g,
                                 "dl_dimension": dl, "r_minus_s": l.r - l.s, "letters": l.r - l.s - 1});
                match g {
                    None => undetermined.push(row.clone()),
                    Some(g) if dl.map(|d| d as i64) != Some(g) => bad.push(row.clone()),
                    Some(_) => {}
                }
                rows.push(row);
            }
        }
    }
    let realized: BTreeSet<String> = rows
        .iter()
        .filter(|r| !r["growth"].is_null())
        .map(|r| if r["growth"] == r["letters"] { "r-s-1".to_string() } else if r["growth"] == r["r_minus_s"] { "r-s".into() } else { "other".into() })
        .collect();
    let compared = rows.len() - undetermined.len();
    let mut c = Check::from_bool("w'_rs dimension: dl_dimension = point-count growth", bad.is_empty(), || json!(bad));
    if bad.is_empty() && compared == 0 {
        c.status = Status::Inconclusive;
    }
    Ok(c.with_data(json!({
        "levels": [levels.0, levels.1],
        "realized": realized,
        "compared": compared,
        "rows": rows,
        "undetermined": undetermined,
        "skipped_over_budget": skipped,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(5), Some((5, 1)));
        assert_eq!(prime_power(12), None);
    }

    #[test]
    fn label_roundtrip() {
        for l in [
            StratumLabel::new(3, 1, Kind::W),
            StratumLabel::signed(2, 0, Kind::Wprime, Sign::Minus),
            StratumLabel::new(1, 1, Kind::Id),
        ] {
            assert_eq!(l.to_string().parse::<StratumLabel>().unwrap(), l);
        }
    }

    #[test]
    fn config_validation() {
        assert!(StrataConfig::z(4, 1, 3, 1).shape().is_err());
        assert!(StrataConfig::z(4, 6, 3, 1).shape().is_err());
        assert!(StrataConfig::y(6, 2, 4, true, 3, 1).shape().is_err());
        assert!(StrataConfig::z(4, 0, 4, 1).shape().is_err());
        let s = StrataConfig::y(6, 6, 2, false, 3, 2).shape().unwrap();
        assert_eq!((s.big_d, s.big_h, s.d, s.dim, s.signs), (2, 0, 2, 4, SignCase::Lagrangian));
    }

    #[test]
    fn k1_members_are_rational_and_id() {
        let ctx = StrataCtx::new(StrataConfig::z(4, 0, 3, 1)).unwrap();
        let c = ctx.stratum_counts(DEFAULT_BUDGET).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&StratumLabel::new(0, 0, Kind::Id)], 40);
    }
}
