//! Barrier atoms, their Legendre-Fenchel conjugates, support functions and
//! local norms.
//!
//! Every atom acts on a subset of the coordinates of the image space `R^m`.
//! Membership is tested in canonical coordinates `w = z_coords + offset`, so an
//! atom with offset `d` describes the set `{z : z + d ∈ K}` where `K` is one of
//!
//! | kind             | `K`                     | barrier                       | ϑ |
//! |------------------|-------------------------|-------------------------------|---|
//! | `HalflineLower`  | `w ≥ l`                 | `-ln(w - l)`                  | 1 |
//! | `HalflineUpper`  | `w ≤ u`                 | `-ln(u - w)`                  | 1 |
//! | `Box`            | `l ≤ w ≤ u`             | `-ln(w - l) - ln(u - w)`      | 2 |
//! | `Soc`            | `w₁ ≥ ‖w̄‖`              | `-ln(w₁² - ‖w̄‖²)`             | 2 |
//!
//! The conjugate of the shifted barrier is `Φ*(y) = φ*(y) - <y, d>`, and its
//! domain `int D*` does not depend on the offset.
//!
//! New atoms plug in by implementing [`CanonicalSet`] and adding a variant to
//! [`AtomKind`].

use std::fmt;
use std::ops::Add;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Which side of the conjugate pair is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Primal,
    Conjugate,
}

/// Derivative order requested from [`BarrierAtom::eval`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Evaluation {
    Value(f64),
    Gradient(DVector<f64>),
    Hessian(DMatrix<f64>),
}

/// A real number or `+∞`.
///
/// Support functions take the value `+∞` outside `D*`; this is kept as a tag
/// rather than a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PlusInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PlusInfinity => None,
        }
    }

    /// `self * t` for `t > 0`.
    pub fn scale(self, t: f64) -> ExtendedReal {
        debug_assert!(t > 0.0);
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v * t),
            ExtendedReal::PlusInfinity => ExtendedReal::PlusInfinity,
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PlusInfinity,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PlusInfinity => f.write_str("+inf"),
        }
    }
}

/// A closed convex set in canonical coordinates together with its barrier.
///
/// All methods receive canonical coordinates (offset already applied).
/// Dual-side methods receive points of the cone `D*` of the set.
pub trait CanonicalSet {
    fn theta(&self) -> f64;

    fn barrier(&self, w: &DVector<f64>) -> f64;
    fn barrier_gradient(&self, w: &DVector<f64>) -> DVector<f64>;
    fn barrier_hessian(&self, w: &DVector<f64>) -> DMatrix<f64>;

    fn conjugate(&self, s: &DVector<f64>) -> f64;
    fn conjugate_gradient(&self, s: &DVector<f64>) -> DVector<f64>;
    fn conjugate_hessian(&self, s: &DVector<f64>) -> DMatrix<f64>;

    /// `sup { <s, w> : w ∈ K }`.
    fn support(&self, s: &DVector<f64>) -> ExtendedReal;

    /// Smallest slack; positive iff `w ∈ int K`.
    fn primal_margin(&self, w: &DVector<f64>) -> f64;
    /// Smallest slack of `s` with respect to `D*`; `+∞` when `D*` is the whole space.
    fn dual_margin(&self, s: &DVector<f64>) -> f64;

    /// Largest `α ≥ 0` such that `w + α dw` stays in `int K` (may be `+∞`).
    fn primal_step_limit(&self, w: &DVector<f64>, dw: &DVector<f64>) -> f64;
    /// Largest `α ≥ 0` such that `s + α ds` stays in `int D*` (may be `+∞`).
    fn dual_step_limit(&self, s: &DVector<f64>, ds: &DVector<f64>) -> f64;

    /// Euclidean nearest point of `K`.
    fn project(&self, w: &DVector<f64>) -> DVector<f64>;

    /// A fixed interior point of `K` of length `len`.
    fn interior_point(&self, len: usize) -> DVector<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum AtomKind {
    HalflineLower { lower: f64 },
    HalflineUpper { upper: f64 },
    Box { lower: f64, upper: f64 },
    Soc,
}

impl AtomKind {
    /// `vᵀH⁻¹v` for the barrier (or conjugate) Hessian `H` at a canonical point.
    pub fn inverse_hessian_quadratic(&self, w: &DVector<f64>, v: &DVector<f64>, side: Side) -> f64 {
        match (self, side) {
            (AtomKind::Soc, Side::Primal) => SocSpectrum::new(w).inverse_quadratic(v),
            (AtomKind::Soc, Side::Conjugate) => SocSpectrum::new(&-w).inverse_quadratic(v),
            (_, Side::Primal) => v[0] * v[0] / self.barrier_hessian(w)[(0, 0)],
            (_, Side::Conjugate) => v[0] * v[0] / self.conjugate_hessian(w)[(0, 0)],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AtomKind::HalflineLower { .. } => "halfline_lower",
            AtomKind::HalflineUpper { .. } => "halfline_upper",
            AtomKind::Box { .. } => "box",
            AtomKind::Soc => "soc",
        }
    }
}

/// Box conjugate: distances `(s, t)` of the maximizer to the two ends of the
/// interval for slope `y`, with `s + t = h`.
fn box_maximizer(y: f64, h: f64) -> (f64, f64) {
    let yh = y * h;
    let r = yh.hypot(2.0);
    // r - yh and r + yh without cancellation
    let (r_minus, r_plus) = if yh >= 0.0 {
        (4.0 / (r + yh), r + yh)
    } else {
        (r - yh, 4.0 / (r - yh))
    };
    (2.0 * h / (2.0 + r_minus), 2.0 * h / (2.0 + r_plus))
}

fn soc_split(w: &DVector<f64>) -> (f64, f64) {
    let tail = w.rows(1, w.len() - 1).norm();
    (w[0], tail)
}

/// `J w` with `J = diag(1, -1, ..., -1)`.
fn soc_reflect(w: &DVector<f64>) -> DVector<f64> {
    let mut jw = -w.clone();
    jw[0] = w[0];
    jw
}

/// Eigen-structure of the Hessian of `-ln(wᵀJw)` at `w₁ > ‖w̄‖`: eigenvalue
/// `2/(w₁+t)²` on `(1, e)`, `2/(w₁-t)²` on `(1, -e)` and `2/q` on the rest,
/// where `t = ‖w̄‖`, `e = w̄/t` and `q = (w₁-t)(w₁+t)`. Building everything
/// from `w₁ ± t` avoids the cancellation in `4JwwᵀJ/q² - 2J/q`.
struct SocSpectrum {
    far: f64,
    near: f64,
    axis: DVector<f64>,
}

impl SocSpectrum {
    fn new(w: &DVector<f64>) -> Self {
        let (head, tail) = soc_split(w);
        let k = w.len() - 1;
        let axis = if tail > 0.0 {
            w.rows(1, k) / tail
        } else {
            let mut e = DVector::zeros(k);
            e[0] = 1.0;
            e
        };
        Self {
            far: head + tail,
            near: head - tail,
            axis,
        }
    }

    fn hessian(&self) -> DMatrix<f64> {
        let k = self.axis.len();
        let q = self.near * self.far;
        let plus = 1.0 / (self.far * self.far);
        let minus = 1.0 / (self.near * self.near);
        let mut h = DMatrix::zeros(k + 1, k + 1);
        // λ₊ b₊b₊ᵀ + λ₋ b₋b₋ᵀ with b± = (1, ±e)/√2, λ± = 2/(w₁ ± t)²
        h[(0, 0)] = plus + minus;
        for i in 0..k {
            let off = (plus - minus) * self.axis[i];
            h[(0, i + 1)] = off;
            h[(i + 1, 0)] = off;
            for j in 0..k {
                let e2 = self.axis[i] * self.axis[j];
                let perp = if i == j { 1.0 - e2 } else { -e2 };
                h[(i + 1, j + 1)] = (plus + minus) * e2 + 2.0 / q * perp;
            }
        }
        h
    }

    /// `vᵀH⁻¹v` as a sum of nonnegative terms.
    fn inverse_quadratic(&self, v: &DVector<f64>) -> f64 {
        let k = self.axis.len();
        let tail = v.rows(1, k);
        let along = tail.dot(&self.axis);
        let perp = (tail - &self.axis * along).norm_squared();
        let q = self.near * self.far;
        let plus = v[0] + along;
        let minus = v[0] - along;
        0.25 * (plus * plus * self.far * self.far + minus * minus * self.near * self.near) + 0.5 * q * perp
    }
}

/// Smallest positive root of `a α² + 2 b α + c` with `c > 0`, or `+∞`.
fn first_positive_root(a: f64, b: f64, c: f64) -> f64 {
    if a == 0.0 {
        return if b < 0.0 { -c / (2.0 * b) } else { f64::INFINITY };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -(b + b.signum() * disc.sqrt());
    let roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
    roots
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

fn soc_step_limit(w: &DVector<f64>, dw: &DVector<f64>) -> f64 {
    let n = w.len();
    let a = dw[0] * dw[0] - dw.rows(1, n - 1).norm_squared();
    let b = w[0] * dw[0] - w.rows(1, n - 1).dot(&dw.rows(1, n - 1));
    let (head, tail) = soc_split(w);
    let c = (head - tail) * (head + tail);
    first_positive_root(a, b, c)
}

fn ratio_lower(slack: f64, rate: f64) -> f64 {
    // slack + α·rate > 0
    if rate < 0.0 {
        slack / -rate
    } else {
        f64::INFINITY
    }
}

impl CanonicalSet for AtomKind {
    fn theta(&self) -> f64 {
        match self {
            AtomKind::HalflineLower { .. } | AtomKind::HalflineUpper { .. } => 1.0,
            AtomKind::Box { .. } | AtomKind::Soc => 2.0,
        }
    }

    fn barrier(&self, w: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { lower } => -(w[0] - lower).ln(),
            AtomKind::HalflineUpper { upper } => -(upper - w[0]).ln(),
            AtomKind::Box { lower, upper } => -(w[0] - lower).ln() - (upper - w[0]).ln(),
            AtomKind::Soc => {
                let (head, tail) = soc_split(w);
                -(head - tail).ln() - (head + tail).ln()
            }
        }
    }

    fn barrier_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        match *self {
            AtomKind::HalflineLower { lower } => DVector::from_element(1, -1.0 / (w[0] - lower)),
            AtomKind::HalflineUpper { upper } => DVector::from_element(1, 1.0 / (upper - w[0])),
            AtomKind::Box { lower, upper } => {
                DVector::from_element(1, -1.0 / (w[0] - lower) + 1.0 / (upper - w[0]))
            }
            AtomKind::Soc => {
                let (head, tail) = soc_split(w);
                let q = (head - tail) * (head + tail);
                soc_reflect(w) * (-2.0 / q)
            }
        }
    }

    fn barrier_hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        match *self {
            AtomKind::HalflineLower { lower } => DMatrix::from_element(1, 1, (w[0] - lower).powi(-2)),
            AtomKind::HalflineUpper { upper } => DMatrix::from_element(1, 1, (upper - w[0]).powi(-2)),
            AtomKind::Box { lower, upper } => {
                DMatrix::from_element(1, 1, (w[0] - lower).powi(-2) + (upper - w[0]).powi(-2))
            }
            AtomKind::Soc => SocSpectrum::new(w).hessian(),
        }
    }

    fn conjugate(&self, s: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { lower } => -1.0 - (-s[0]).ln() + lower * s[0],
            AtomKind::HalflineUpper { upper } => -1.0 - s[0].ln() + upper * s[0],
            AtomKind::Box { lower, upper } => {
                let (a, b) = box_maximizer(s[0], upper - lower);
                s[0] * (lower + a) + a.ln() + b.ln()
            }
            AtomKind::Soc => {
                let (head, tail) = soc_split(s);
                // sᵀJs = (-s₁ - ‖s̄‖)(-s₁ + ‖s̄‖)
                -(-head - tail).ln() - (-head + tail).ln() + 2.0 * std::f64::consts::LN_2 - 2.0
            }
        }
    }

    fn conjugate_gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        match *self {
            AtomKind::HalflineLower { lower } => DVector::from_element(1, lower - 1.0 / s[0]),
            AtomKind::HalflineUpper { upper } => DVector::from_element(1, upper - 1.0 / s[0]),
            AtomKind::Box { lower, upper } => {
                let (a, _) = box_maximizer(s[0], upper - lower);
                DVector::from_element(1, lower + a)
            }
            AtomKind::Soc => {
                let (head, tail) = soc_split(s);
                let p = (-head - tail) * (-head + tail);
                soc_reflect(s) * (-2.0 / p)
            }
        }
    }

    fn conjugate_hessian(&self, s: &DVector<f64>) -> DMatrix<f64> {
        match *self {
            AtomKind::HalflineLower { .. } | AtomKind::HalflineUpper { .. } => {
                DMatrix::from_element(1, 1, s[0].powi(-2))
            }
            AtomKind::Box { lower, upper } => {
                let (a, b) = box_maximizer(s[0], upper - lower);
                // inverse of the barrier Hessian at the maximizer
                let (a2, b2) = (a * a, b * b);
                DMatrix::from_element(1, 1, a2 * b2 / (a2 + b2))
            }
            AtomKind::Soc => SocSpectrum::new(&-s).hessian(),
        }
    }

    fn support(&self, s: &DVector<f64>) -> ExtendedReal {
        match *self {
            AtomKind::HalflineLower { lower } => {
                if s[0] <= 0.0 {
                    ExtendedReal::Finite(s[0] * lower)
                } else {
                    ExtendedReal::PlusInfinity
                }
            }
            AtomKind::HalflineUpper { upper } => {
                if s[0] >= 0.0 {
                    ExtendedReal::Finite(s[0] * upper)
                } else {
                    ExtendedReal::PlusInfinity
                }
            }
            AtomKind::Box { lower, upper } => ExtendedReal::Finite((s[0] * lower).max(s[0] * upper)),
            AtomKind::Soc => {
                let (head, tail) = soc_split(s);
                if head + tail <= 0.0 {
                    ExtendedReal::Finite(0.0)
                } else {
                    ExtendedReal::PlusInfinity
                }
            }
        }
    }

    fn primal_margin(&self, w: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { lower } => w[0] - lower,
            AtomKind::HalflineUpper { upper } => upper - w[0],
            AtomKind::Box { lower, upper } => (w[0] - lower).min(upper - w[0]),
            AtomKind::Soc => {
                let (head, tail) = soc_split(w);
                head - tail
            }
        }
    }

    fn dual_margin(&self, s: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { .. } => -s[0],
            AtomKind::HalflineUpper { .. } => s[0],
            AtomKind::Box { .. } => f64::INFINITY,
            AtomKind::Soc => {
                let (head, tail) = soc_split(s);
                -head - tail
            }
        }
    }

    fn primal_step_limit(&self, w: &DVector<f64>, dw: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { lower } => ratio_lower(w[0] - lower, dw[0]),
            AtomKind::HalflineUpper { upper } => ratio_lower(upper - w[0], -dw[0]),
            AtomKind::Box { lower, upper } => {
                ratio_lower(w[0] - lower, dw[0]).min(ratio_lower(upper - w[0], -dw[0]))
            }
            AtomKind::Soc => soc_step_limit(w, dw),
        }
    }

    fn dual_step_limit(&self, s: &DVector<f64>, ds: &DVector<f64>) -> f64 {
        match *self {
            AtomKind::HalflineLower { .. } => ratio_lower(-s[0], -ds[0]),
            AtomKind::HalflineUpper { .. } => ratio_lower(s[0], ds[0]),
            AtomKind::Box { .. } => f64::INFINITY,
            AtomKind::Soc => soc_step_limit(&-s, &-ds),
        }
    }

    fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        match *self {
            AtomKind::HalflineLower { lower } => DVector::from_element(1, w[0].max(lower)),
            AtomKind::HalflineUpper { upper } => DVector::from_element(1, w[0].min(upper)),
            AtomKind::Box { lower, upper } => DVector::from_element(1, w[0].clamp(lower, upper)),
            AtomKind::Soc => {
                let (head, tail) = soc_split(w);
                if tail <= head {
                    w.clone()
                } else if tail <= -head {
                    DVector::zeros(w.len())
                } else {
                    let scale = 0.5 * (head + tail);
                    let mut p = w * (scale / tail);
                    p[0] = scale;
                    p
                }
            }
        }
    }

    fn interior_point(&self, len: usize) -> DVector<f64> {
        match *self {
            AtomKind::HalflineLower { lower } => DVector::from_element(1, lower + 1.0),
            AtomKind::HalflineUpper { upper } => DVector::from_element(1, upper - 1.0),
            AtomKind::Box { lower, upper } => DVector::from_element(1, 0.5 * (lower + upper)),
            AtomKind::Soc => {
                let mut w = DVector::zeros(len);
                w[0] = 2.0;
                w
            }
        }
    }
}

/// One factor of `D`: a canonical set placed on some coordinates of `R^m`
/// with an offset.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierAtom {
    kind: AtomKind,
    coords: Vec<usize>,
    offset: DVector<f64>,
}

impl BarrierAtom {
    /// `coords` are zero-based indices into the image space.
    pub fn new(kind: AtomKind, coords: Vec<usize>, offset: Option<Vec<f64>>) -> Result<Self> {
        let len = coords.len();
        if len == 0 {
            return Err(Error::BadAtom("atom with no coordinates".into()));
        }
        match kind {
            AtomKind::HalflineLower { lower: b } | AtomKind::HalflineUpper { upper: b } => {
                if len != 1 {
                    return Err(Error::BadAtom(format!(
                        "{} needs exactly one coordinate",
                        kind.name()
                    )));
                }
                if !b.is_finite() {
                    return Err(Error::BadAtom(format!("{} bound must be finite", kind.name())));
                }
            }
            AtomKind::Box { lower, upper } => {
                if len != 1 {
                    return Err(Error::BadAtom("box needs exactly one coordinate".into()));
                }
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::BadAtom(format!(
                        "box requires l < u, got [{lower}, {upper}]"
                    )));
                }
            }
            AtomKind::Soc => {
                if len < 2 {
                    return Err(Error::BadAtom("soc needs at least two coordinates".into()));
                }
            }
        }
        let offset = match offset {
            Some(d) if d.len() != len => {
                return Err(Error::BadAtom(format!(
                    "offset has length {} but atom has {} coordinates",
                    d.len(),
                    len
                )))
            }
            Some(d) => DVector::from_vec(d),
            None => DVector::zeros(len),
        };
        Ok(Self { kind, coords, offset })
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn theta(&self) -> f64 {
        self.kind.theta()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Restriction of a full-space vector to this atom's coordinates.
    pub fn gather(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.coords.iter().map(|&i| v[i]))
    }

    fn canonical(&self, u: &DVector<f64>) -> DVector<f64> {
        u + &self.offset
    }

    pub fn interior_margin(&self, u: &DVector<f64>, side: Side) -> f64 {
        match side {
            Side::Primal => self.kind.primal_margin(&self.canonical(u)),
            Side::Conjugate => self.kind.dual_margin(u),
        }
    }

    fn require_interior(&self, u: &DVector<f64>, side: Side) -> Result<()> {
        let margin = self.interior_margin(u, side);
        // NaN fails too
        if margin > 0.0 {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "{} atom on coords {:?}: {:?} margin {margin:e}",
                self.kind.name(),
                self.coords,
                side
            )))
        }
    }

    pub fn value(&self, u: &DVector<f64>, side: Side) -> Result<f64> {
        self.require_interior(u, side)?;
        Ok(match side {
            Side::Primal => self.kind.barrier(&self.canonical(u)),
            Side::Conjugate => self.kind.conjugate(u) - u.dot(&self.offset),
        })
    }

    pub fn gradient(&self, u: &DVector<f64>, side: Side) -> Result<DVector<f64>> {
        self.require_interior(u, side)?;
        Ok(match side {
            Side::Primal => self.kind.barrier_gradient(&self.canonical(u)),
            Side::Conjugate => self.kind.conjugate_gradient(u) - &self.offset,
        })
    }

    pub fn hessian(&self, u: &DVector<f64>, side: Side) -> Result<DMatrix<f64>> {
        self.require_interior(u, side)?;
        Ok(match side {
            Side::Primal => self.kind.barrier_hessian(&self.canonical(u)),
            Side::Conjugate => self.kind.conjugate_hessian(u),
        })
    }

    /// `vᵀH⁻¹v` with `H` the Hessian at the block `u`.
    pub fn inverse_hessian_quadratic(&self, u: &DVector<f64>, v: &DVector<f64>, side: Side) -> Result<f64> {
        self.require_interior(u, side)?;
        let w = match side {
            Side::Primal => self.canonical(u),
            Side::Conjugate => u.clone(),
        };
        Ok(self.kind.inverse_hessian_quadratic(&w, v, side))
    }

    pub fn eval(&self, u: &DVector<f64>, side: Side, order: Order) -> Result<Evaluation> {
        Ok(match order {
            Order::Value => Evaluation::Value(self.value(u, side)?),
            Order::Gradient => Evaluation::Gradient(self.gradient(u, side)?),
            Order::Hessian => Evaluation::Hessian(self.hessian(u, side)?),
        })
    }

    /// `δ*(y | {z : z + d ∈ K}) = σ_K(y) - <y, d>`.
    pub fn support(&self, y: &DVector<f64>) -> ExtendedReal {
        self.kind.support(y) + ExtendedReal::Finite(-y.dot(&self.offset))
    }

    pub fn step_limit(&self, u: &DVector<f64>, du: &DVector<f64>, side: Side) -> f64 {
        match side {
            Side::Primal => self.kind.primal_step_limit(&self.canonical(u), du),
            Side::Conjugate => self.kind.dual_step_limit(u, du),
        }
    }

    /// Euclidean nearest point of the atom set (in atom coordinates).
    pub fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        self.kind.project(&self.canonical(u)) - &self.offset
    }

    /// Canonical interior point translated back by the offset.
    pub fn interior_point(&self) -> DVector<f64> {
        self.kind.interior_point(self.len()) - &self.offset
    }
}

/// The product `D = D₁ × … × D_k` of atoms covering `R^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    atoms: Vec<BarrierAtom>,
    dim: usize,
}

impl Domain {
    /// Checks that the atom coordinates partition `0..dim`.
    pub fn new(atoms: Vec<BarrierAtom>, dim: usize) -> Result<Self> {
        let mut owner = vec![None; dim];
        for (k, atom) in atoms.iter().enumerate() {
            for &i in atom.coords() {
                if i >= dim {
                    return Err(Error::AtomCoverage {
                        m: dim,
                        detail: format!("atom {} uses coordinate {} out of range", k + 1, i + 1),
                    });
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::AtomCoverage {
                        m: dim,
                        detail: format!("coordinate {} claimed by atoms {} and {}", i + 1, prev + 1, k + 1),
                    });
                }
                owner[i] = Some(k);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::AtomCoverage {
                m: dim,
                detail: format!("coordinate {} is not covered by any atom", i + 1),
            });
        }
        Ok(Self { atoms, dim })
    }

    pub fn atoms(&self) -> &[BarrierAtom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ϑ = Σ ϑᵢ.
    pub fn theta(&self) -> f64 {
        self.atoms.iter().map(BarrierAtom::theta).sum()
    }

    fn scatter(&self, blocks: impl Iterator<Item = (usize, DVector<f64>)>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (k, block) in blocks {
            for (j, &i) in self.atoms[k].coords().iter().enumerate() {
                out[i] = block[j];
            }
        }
        out
    }

    pub fn value(&self, u: &DVector<f64>, side: Side) -> Result<f64> {
        self.atoms.iter().map(|a| a.value(&a.gather(u), side)).sum()
    }

    pub fn gradient(&self, u: &DVector<f64>, side: Side) -> Result<DVector<f64>> {
        let blocks = self
            .atoms
            .iter()
            .map(|a| a.gradient(&a.gather(u), side))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.scatter(blocks.into_iter().enumerate()))
    }

    /// Block-diagonal Hessian as a dense `m × m` matrix.
    pub fn hessian(&self, u: &DVector<f64>, side: Side) -> Result<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for atom in &self.atoms {
            let block = atom.hessian(&atom.gather(u), side)?;
            for (a, &i) in atom.coords().iter().enumerate() {
                for (b, &j) in atom.coords().iter().enumerate() {
                    h[(i, j)] = block[(a, b)];
                }
            }
        }
        Ok(h)
    }

    pub fn support(&self, y: &DVector<f64>) -> ExtendedReal {
        self.atoms
            .iter()
            .map(|a| a.support(&a.gather(y)))
            .fold(ExtendedReal::Finite(0.0), Add::add)
    }

    pub fn margin(&self, u: &DVector<f64>, side: Side) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.interior_margin(&a.gather(u), side))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn margins(&self, u: &DVector<f64>, side: Side) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| a.interior_margin(&a.gather(u), side))
            .collect()
    }

    pub fn step_limit(&self, u: &DVector<f64>, du: &DVector<f64>, side: Side) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.step_limit(&a.gather(u), &a.gather(du), side))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance from `u` to `D`.
    pub fn distance(&self, u: &DVector<f64>) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let ua = a.gather(u);
                (a.project(&ua) - ua).norm_squared()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn interior_point(&self) -> DVector<f64> {
        self.scatter(
            self.atoms
                .iter()
                .enumerate()
                .map(|(k, a)| (k, a.interior_point())),
        )
    }

    /// `sqrt(vᵀ H⁻¹ v)` for the block-diagonal `H = Φ''(u)` or `Φ*''(u)`,
    /// evaluated per atom block from the closed-form inverse.
    pub fn inverse_hessian_norm(&self, u: &DVector<f64>, v: &DVector<f64>, side: Side) -> Result<f64> {
        let mut total = 0.0;
        for atom in &self.atoms {
            total += atom.inverse_hessian_quadratic(&atom.gather(u), &atom.gather(v), side)?;
        }
        Ok(total.sqrt())
    }
}

/// A Hessian of `Φ` or `Φ*` used as a local metric.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMetric {
    pub matrix: DMatrix<f64>,
    pub side: Side,
}

impl LocalMetric {
    pub fn new(matrix: DMatrix<f64>, side: Side) -> Self {
        Self { matrix, side }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// `‖v‖_H = sqrt(vᵀ H v)`
    Direct,
    /// `‖v‖*_H = sqrt(vᵀ H⁻¹ v)`
    Inverse,
}

pub fn local_norm(metric: &LocalMetric, v: &DVector<f64>, mode: NormMode) -> Result<f64> {
    let h = &metric.matrix;
    if h.nrows() != v.len() || h.ncols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "metric is {}x{} but vector has length {}",
            h.nrows(),
            h.ncols(),
            v.len()
        )));
    }
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure("local metric is not positive definite".into()))?;
    match mode {
        NormMode::Direct => {
            // ‖Lᵀv‖
            Ok((chol.l().transpose() * v).norm())
        }
        NormMode::Inverse => {
            let w = chol
                .l()
                .solve_lower_triangular(v)
                .ok_or_else(|| Error::FactorizationFailure("singular Cholesky factor".into()))?;
            Ok(w.norm())
        }
    }
}
