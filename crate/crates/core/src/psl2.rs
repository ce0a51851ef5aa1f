//! Arithmetic in PSL(2,R).
//!
//! Matrices are stored sign-canonicalized (positive trace, or for
//! trace zero the first nonzero of `m11, m12, m21` positive), so equality
//! in PSL(2,R) is an entrywise comparison. The one-parameter subgroups are
//!
//! ```text
//! a_t = diag(e^{t/2}, e^{-t/2})   b_s = [[1, s], [0, 1]]   c_u = [[1, 0], [u, 1]]
//! ```
//!
//! and right multiplication by them generates the geodesic, horocycle and
//! conjugate horocycle flows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Mul;
use thiserror::Error;

/// Tolerance for algebraic identities (reconstruction, group axioms).
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Tolerance for eigen-decompositions and axis frames.
pub const EIGEN_TOL: f64 = 1e-9;
/// Below this, a trace counts as zero for sign canonicalization.
const SIGN_TOL: f64 = 1e-12;
/// Products are renormalized only while `(|A| |B|)^2` stays below this,
/// with `|.|` the largest entry of each factor. The computed determinant
/// of a product carries error of order `eps (|A| |B|)^2`, which the
/// product's own entries cannot reveal when they come from cancellation.
const RENORM_SCALE: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Psl2Error {
    #[error("parameter must be finite, got {0}")]
    NonFinite(f64),
    #[error("determinant {0:.6e} is not positive")]
    BadDeterminant(f64),
    #[error("not decomposable in this cell (pivot {pivot:.3e})")]
    NotDecomposable { pivot: f64 },
    #[error("singular decomposition: 1 + rho = {0:.3e}")]
    SingularDecomposition(f64),
    #[error("distance out of local range (|M - I|_F = {0:.3e})")]
    OutOfLocalRange(f64),
    #[error("element is {0:?}, expected hyperbolic")]
    NotHyperbolic(ElementKind),
}

pub type Result<T> = std::result::Result<T, Psl2Error>;

/// An element of PSL(2,R) in canonical sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct ProjMatrix {
    m: [f64; 4],
}

impl From<ProjMatrix> for [f64; 4] {
    fn from(g: ProjMatrix) -> Self {
        g.m
    }
}

impl TryFrom<[f64; 4]> for ProjMatrix {
    type Error = Psl2Error;
    fn try_from(m: [f64; 4]) -> Result<Self> {
        ProjMatrix::new(m[0], m[1], m[2], m[3])
    }
}

fn canonical_sign(m: [f64; 4]) -> [f64; 4] {
    let tr = m[0] + m[3];
    let flip = if tr.abs() > SIGN_TOL { tr < 0.0 } else { m[..3].iter().find(|x| x.abs() > SIGN_TOL).is_some_and(|&x| x < 0.0) };
    if flip {
        m.map(|x| -x)
    } else {
        m
    }
}

fn renormalize(m: [f64; 4], operand_scale: f64) -> [f64; 4] {
    let scale = operand_scale * operand_scale;
    if scale > RENORM_SCALE {
        return m;
    }
    let det = m[0] * m[3] - m[1] * m[2];
    if det > 0.0 && (det - 1.0).abs() > f64::EPSILON {
        let k = det.sqrt().recip();
        m.map(|x| x * k)
    } else {
        m
    }
}

impl ProjMatrix {
    /// Builds an element from entries, dividing by `sqrt(det)`.
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        for x in [m11, m12, m21, m22] {
            if !x.is_finite() {
                return Err(Psl2Error::NonFinite(x));
            }
        }
        let det = m11 * m22 - m12 * m21;
        if det <= 0.0 {
            return Err(Psl2Error::BadDeterminant(det));
        }
        let k = det.sqrt().recip();
        Ok(Self::from_unimodular([m11 * k, m12 * k, m21 * k, m22 * k]))
    }

    /// Wraps entries already known to have unit determinant.
    pub(crate) fn from_unimodular(m: [f64; 4]) -> Self {
        Self { m: canonical_sign(m) }
    }

    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 1.0] }
    }

    /// Geodesic flow generator `a_t`.
    pub fn a(t: f64) -> Self {
        let h = (0.5 * t).exp();
        Self { m: [h, 0.0, 0.0, h.recip()] }
    }

    /// Horocycle flow generator `b_s`.
    pub fn b(s: f64) -> Self {
        Self { m: [1.0, s, 0.0, 1.0] }
    }

    /// Conjugate horocycle flow generator `c_u`.
    pub fn c(u: f64) -> Self {
        Self { m: [1.0, 0.0, u, 1.0] }
    }

    /// Rotation `d_theta` about `i` by angle `theta` (half-angle entries).
    pub fn d_theta(theta: f64) -> Self {
        let (sn, cs) = (0.5 * theta).sin_cos();
        Self::from_unimodular([cs, sn, -sn, cs])
    }

    /// The time-reversal element `d_pi = [[0, 1], [-1, 0]]`.
    pub fn d_pi() -> Self {
        Self::from_unimodular([0.0, 1.0, -1.0, 0.0])
    }

    pub fn entries(&self) -> [f64; 4] {
        self.m
    }

    pub fn m11(&self) -> f64 {
        self.m[0]
    }
    pub fn m12(&self) -> f64 {
        self.m[1]
    }
    pub fn m21(&self) -> f64 {
        self.m[2]
    }
    pub fn m22(&self) -> f64 {
        self.m[3]
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> f64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn compose(&self, other: &Self) -> Self {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = other.m;
        let raw = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
        let norm = |x: &[f64; 4]| x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Self { m: canonical_sign(renormalize(raw, norm(&self.m) * norm(&other.m))) }
    }

    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::from_unimodular([d, -b, -c, a])
    }

    /// Conjugate `self * x * self^-1`.
    pub fn conjugate(&self, x: &Self) -> Self {
        self.compose(x).compose(&self.inverse())
    }

    /// Maximum entrywise gap between canonical representatives.
    pub fn max_gap(&self, other: &Self) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Frobenius distance between canonical representatives.
    pub fn frobenius_gap(&self, other: &Self) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    /// Projective equality: entries agree up to a global sign within `tol`.
    pub fn proj_equal(&self, other: &Self, tol: f64) -> bool {
        let direct = self.m.iter().zip(other.m.iter()).all(|(x, y)| (x - y).abs() <= tol);
        let flipped = self.m.iter().zip(other.m.iter()).all(|(x, y)| (x + y).abs() <= tol);
        direct || flipped
    }

    /// Mobius action on the upper half-plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [a, b, c, d] = self.m;
        (z * a + b) / (z * c + d)
    }

    /// The same isometry in the disk model, as `(alpha, beta)` with
    /// `w -> (alpha w + beta) / (conj(beta) w + conj(alpha))`.
    pub fn to_disk(&self) -> (Complex64, Complex64) {
        let [a, b, c, d] = self.m;
        let alpha = Complex64::new(0.5 * (a + d), 0.5 * (b - c));
        let beta = Complex64::new(0.5 * (a - d), -0.5 * (b + c));
        (alpha, beta)
    }
}

impl Default for ProjMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for ProjMatrix {
    type Output = ProjMatrix;
    fn mul(self, rhs: ProjMatrix) -> ProjMatrix {
        self.compose(&rhs)
    }
}

impl Mul<&ProjMatrix> for &ProjMatrix {
    type Output = ProjMatrix;
    fn mul(self, rhs: &ProjMatrix) -> ProjMatrix {
        self.compose(rhs)
    }
}

impl fmt::Display for ProjMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.m;
        write!(f, "[[{a:.9}, {b:.9}], [{c:.9}, {d:.9}]]")
    }
}

/// Cayley map from the upper half-plane to the unit disk.
pub fn cayley(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    (z - i) / (z + i)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    A,
    B,
    C,
    DTheta,
    DPi,
}

/// Named one-parameter subgroup element. `param` is ignored for `DPi`.
pub fn make_generator(kind: GeneratorKind, param: f64) -> Result<ProjMatrix> {
    if kind != GeneratorKind::DPi && !param.is_finite() {
        return Err(Psl2Error::NonFinite(param));
    }
    Ok(match kind {
        GeneratorKind::A => ProjMatrix::a(param),
        GeneratorKind::B => ProjMatrix::b(param),
        GeneratorKind::C => ProjMatrix::c(param),
        GeneratorKind::DTheta => ProjMatrix::d_theta(param),
        GeneratorKind::DPi => ProjMatrix::d_pi(),
    })
}

/// Order of the unipotent factors in a section coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// `c_u b_s a_tau`, the section `P_eps`.
    CuBs,
    /// `b_s c_u a_tau`, the primed section `P'_eps`.
    BsCu,
}

/// Coordinates `(u, s)` with residual flow offset `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NacDecomposition {
    pub u: f64,
    pub s: f64,
    pub tau: f64,
    pub flavor: Flavor,
    pub rho: Option<f64>,
}

impl NacDecomposition {
    pub fn new(u: f64, s: f64, tau: f64, flavor: Flavor) -> Self {
        Self { u, s, tau, flavor, rho: None }
    }

    pub fn reconstruct(&self) -> ProjMatrix {
        let (cu, bs) = (ProjMatrix::c(self.u), ProjMatrix::b(self.s));
        let unipotent = match self.flavor {
            Flavor::CuBs => cu * bs,
            Flavor::BsCu => bs * cu,
        };
        unipotent * ProjMatrix::a(self.tau)
    }

    /// The unipotent part alone, i.e. the section point.
    pub fn section_element(&self) -> ProjMatrix {
        NacDecomposition { tau: 0.0, ..*self }.reconstruct()
    }
}

/// Splits `g` as `c_u b_s a_tau` or `b_s c_u a_tau`.
///
/// The sign representative is chosen to make the pivot (`m11`, resp.
/// `m22`) positive; the decomposition fails only when the pivot vanishes.
pub fn nac_decompose(g: &ProjMatrix, flavor: Flavor, tol: f64) -> Result<NacDecomposition> {
    let [mut m11, mut m12, mut m21, mut m22] = g.m;
    let pivot = match flavor {
        Flavor::CuBs => m11,
        Flavor::BsCu => m22,
    };
    if pivot.abs() <= tol {
        return Err(Psl2Error::NotDecomposable { pivot });
    }
    if pivot < 0.0 {
        (m11, m12, m21, m22) = (-m11, -m12, -m21, -m22);
    }
    Ok(match flavor {
        Flavor::CuBs => NacDecomposition::new(m21 / m11, m12 * m11, 2.0 * m11.ln(), flavor),
        Flavor::BsCu => NacDecomposition::new(m21 * m22, m12 / m22, -2.0 * m22.ln(), flavor),
    })
}

/// Closed form of `b_{s1} c_{u1} b_{s2} c_{u2} b_{s3} = c_u b_s a_tau`.
pub fn quintuple_product(s1: f64, u1: f64, s2: f64, u2: f64, s3: f64) -> Result<NacDecomposition> {
    let rho = u2 * (s1 + s2) + u1 * s1 * (1.0 + u2 * s2);
    let one_rho = 1.0 + rho;
    if one_rho <= 0.0 {
        return Err(Psl2Error::SingularDecomposition(one_rho));
    }
    let u = u1 + u2 + (u1 * u2 * s2 - (u1 + u2) * rho) / one_rho;
    let s = s1 + s2 + s3 + rho * ((2.0 + rho) * s3 + s1 + s2) + u1 * s1 * s2 * one_rho;
    let tau = 2.0 * one_rho.ln();
    Ok(NacDecomposition { u, s, tau, flavor: Flavor::CuBs, rho: Some(rho) })
}

/// `asinh(r) / r` and `asin(r) / r`, with series near zero.
fn log_factor(q: f64) -> f64 {
    let r = q.abs().sqrt();
    if r < 1e-4 {
        // Shared series in q = +-r^2: 1 - q/6 + 3q^2/40.
        return 1.0 - q / 6.0 + 3.0 * q * q / 40.0;
    }
    if q > 0.0 {
        r.asinh() / r
    } else {
        r.asin() / r
    }
}

/// Frobenius norm of the principal logarithm of `g^-1 h`.
///
/// Left-invariant; equals `|t|/sqrt(2)` on `a_t`, `|s|` on `b_s` and `|u|`
/// on `c_u`.
pub fn local_dist(g: &ProjMatrix, h: &ProjMatrix) -> Result<f64> {
    let m = g.inverse().compose(h);
    let off = m.frobenius_gap(&ProjMatrix::identity());
    if off >= 1.0 {
        return Err(Psl2Error::OutOfLocalRange(off));
    }
    Ok(log_norm_near_identity(&m))
}

/// `|log m|_F` for `m` near the identity (no range check).
pub(crate) fn log_norm_near_identity(m: &ProjMatrix) -> f64 {
    let [a, b, c, d] = m.m;
    let half = 0.5 * (a - d);
    // Traceless part X0 = m - (tr/2) I satisfies X0^2 = q I.
    let q = half * half + b * c;
    let x0 = (2.0 * half * half + b * b + c * c).sqrt();
    log_factor(q) * x0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementClass {
    pub kind: ElementKind,
    pub translation_length: f64,
}

pub fn classify(g: &ProjMatrix, tol: f64) -> ElementClass {
    let tr = g.trace().abs();
    let kind = if tr > 2.0 + tol {
        ElementKind::Hyperbolic
    } else if tr < 2.0 - tol {
        ElementKind::Elliptic
    } else if g.max_gap(&ProjMatrix::identity()) <= tol {
        ElementKind::Identity
    } else {
        ElementKind::Parabolic
    };
    let translation_length = if kind == ElementKind::Hyperbolic { translation_length(g) } else { 0.0 };
    ElementClass { kind, translation_length }
}

/// `2 arccosh(|tr g| / 2)`, meaningful for hyperbolic `g`.
pub fn translation_length(g: &ProjMatrix) -> f64 {
    2.0 * (0.5 * g.trace().abs()).max(1.0).acosh()
}

/// Picks whichever of two algebraically equal differences has the
/// smaller operands, to limit cancellation.
fn stable_diff(x: f64, y: f64, alt_x: f64, alt_y: f64) -> f64 {
    if x.abs().max(y.abs()) <= alt_x.abs().max(alt_y.abs()) {
        x - y
    } else {
        alt_x - alt_y
    }
}

/// Frame `F` (det 1) with `F^-1 g F = a_T`, placed so `F i` is the point of
/// the axis nearest `i`.
pub fn axis_frame(g: &ProjMatrix) -> Result<(ProjMatrix, f64)> {
    let class = classify(g, ALGEBRA_TOL);
    if class.kind != ElementKind::Hyperbolic {
        return Err(Psl2Error::NotHyperbolic(class.kind));
    }
    let t = class.translation_length;
    let [m11, m12, m21, m22] = g.m;
    let lam = (0.5 * t).exp();
    let inv = lam.recip();
    // Expanding eigenvector: (m12, lam - m11) or (lam - m22, m21),
    // with lam - m11 = m22 - 1/lam and lam - m22 = m11 - 1/lam.
    let v1 = (m12, stable_diff(lam, m11, m22, inv));
    let v2 = (stable_diff(lam, m22, m11, inv), m21);
    let (p, r) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    // Contracting eigenvector: (m12, 1/lam - m11) or (1/lam - m22, m21).
    let w1 = (m12, stable_diff(inv, m11, m22, lam));
    let w2 = (stable_diff(inv, m22, m11, lam), m21);
    let (mut q, mut s) = if w1.0.hypot(w1.1) >= w2.0.hypot(w2.1) { w1 } else { w2 };
    let mut det = p * s - q * r;
    if det < 0.0 {
        (q, s, det) = (-q, -s, -det);
    }
    let norm = det.sqrt().recip();
    let (p, r, q, s) = (p * norm, r * norm, q * norm, s * norm);
    let k = ((q * q + s * s) / (p * p + r * r)).sqrt().sqrt();
    Ok((ProjMatrix::from_unimodular([p * k, q / k, r * k, s / k]), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn raw_product(x: [f64; 4], y: [f64; 4]) -> [f64; 4] {
        [x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]]
    }

    #[test]
    fn generators_match_definitions() {
        assert_eq!(make_generator(GeneratorKind::A, 0.0).unwrap(), ProjMatrix::identity());
        let a2 = make_generator(GeneratorKind::A, 2.0).unwrap();
        assert_abs_diff_eq!(a2.m11(), std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(a2.m22(), (-1.0f64).exp(), epsilon = 1e-15);
        let bc = ProjMatrix::b(0.3) * ProjMatrix::c(0.2);
        let oracle = raw_product([1.0, 0.3, 0.0, 1.0], [1.0, 0.0, 0.2, 1.0]);
        for (x, y) in bc.entries().iter().zip(oracle) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(bc.m11(), 1.06, epsilon = 1e-15);
        // The reversed order puts the us term in the corner.
        let cb = ProjMatrix::c(0.2) * ProjMatrix::b(0.3);
        assert!(cb.proj_equal(&ProjMatrix::new(1.0, 0.3, 0.2, 1.06).unwrap(), 1e-15));
        assert!(make_generator(GeneratorKind::B, f64::NAN).is_err());
        assert!(make_generator(GeneratorKind::DPi, f64::NAN).is_ok());
    }

    #[test]
    fn d_pi_is_d_theta_at_pi() {
        assert!(ProjMatrix::d_theta(std::f64::consts::PI).proj_equal(&ProjMatrix::d_pi(), 1e-15));
        assert!((ProjMatrix::d_pi() * ProjMatrix::d_pi()).proj_equal(&ProjMatrix::identity(), 0.0));
    }

    #[test]
    fn sign_canonicalization() {
        let g = ProjMatrix::new(-2.0, -1.0, -1.0, -1.0).unwrap();
        assert!(g.trace() > 0.0);
        let neg = ProjMatrix::new(-g.m11(), -g.m12(), -g.m21(), -g.m22()).unwrap();
        assert_eq!(g, neg);
        assert!(g.proj_equal(&neg, 0.0));
        // Zero trace: first nonzero entry positive.
        assert_eq!(ProjMatrix::d_pi().m12(), 1.0);
        assert!(ProjMatrix::new(1.0, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn group_laws() {
        let g = ProjMatrix::new(2.0, 1.0, 3.0, 2.0).unwrap();
        assert!((g * g.inverse()).proj_equal(&ProjMatrix::identity(), 1e-14));
        assert!((ProjMatrix::a(0.4) * ProjMatrix::a(-1.1)).proj_equal(&ProjMatrix::a(-0.7), 1e-15));
        assert!((ProjMatrix::b(0.4) * ProjMatrix::b(0.1)).proj_equal(&ProjMatrix::b(0.5), 1e-15));
    }

    #[test]
    fn decomposition_examples() {
        let id = nac_decompose(&ProjMatrix::identity(), Flavor::CuBs, 1e-12).unwrap();
        assert_eq!((id.u, id.s, id.tau), (0.0, 0.0, 0.0));
        let g = ProjMatrix::c(0.1) * ProjMatrix::b(-0.2) * ProjMatrix::a(0.5);
        let d = nac_decompose(&g, Flavor::CuBs, 1e-12).unwrap();
        assert_abs_diff_eq!(d.u, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(d.s, -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(d.tau, 0.5, epsilon = 1e-14);
        let h = ProjMatrix::b(0.3) * ProjMatrix::c(-0.7) * ProjMatrix::a(-1.5);
        let e = nac_decompose(&h, Flavor::BsCu, 1e-12).unwrap();
        assert_abs_diff_eq!(e.u, -0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(e.s, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(e.tau, -1.5, epsilon = 1e-14);
    }

    #[test]
    fn decomposition_uses_projective_sign() {
        // Negative trace representative with m11 < 0 in canonical form.
        let g = ProjMatrix::new(-0.5, 1.0, -2.0, 2.0).unwrap();
        assert!(g.m11() < 0.0);
        assert!(nac_decompose(&g, Flavor::CuBs, 1e-12).is_ok());
        assert!(matches!(nac_decompose(&ProjMatrix::d_pi(), Flavor::CuBs, 1e-12), Err(Psl2Error::NotDecomposable { .. })));
    }

    #[test]
    fn quintuple_examples() {
        let z = quintuple_product(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((z.u, z.s, z.tau, z.rho), (0.0, 0.0, 0.0, Some(0.0)));
        let q = quintuple_product(0.1, 0.1, 0.1, 0.1, 0.1).unwrap();
        assert_abs_diff_eq!(q.rho.unwrap(), 0.0301, epsilon = 1e-15);
        let pure_b = quintuple_product(0.05, 0.0, -0.02, 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(pure_b.s, 0.13, epsilon = 1e-15);
        assert_eq!((pure_b.u, pure_b.tau), (0.0, 0.0));
        assert!(matches!(quintuple_product(-2.0, 1.0, 0.0, 0.0, 0.0), Err(Psl2Error::SingularDecomposition(_))));
    }

    #[test]
    fn local_metric_on_subgroups() {
        let id = ProjMatrix::identity();
        assert_abs_diff_eq!(local_dist(&ProjMatrix::a(0.2), &id).unwrap(), 0.2 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(local_dist(&ProjMatrix::b(0.05), &id).unwrap(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(local_dist(&ProjMatrix::c(-0.03), &id).unwrap(), 0.03, epsilon = 1e-15);
        let g = ProjMatrix::new(2.0, 1.0, 3.0, 2.0).unwrap();
        assert_eq!(local_dist(&g, &g).unwrap(), 0.0);
        // Elliptic direction: rotation d_theta has log norm theta/sqrt(2).
        assert_abs_diff_eq!(local_dist(&ProjMatrix::d_theta(0.3), &id).unwrap(), 0.3 / 2f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(local_dist(&ProjMatrix::a(3.0), &id), Err(Psl2Error::OutOfLocalRange(_))));
    }

    #[test]
    fn log_factor_series_is_continuous() {
        for q in [0.99e-8f64, 1.01e-8, -0.99e-8, -1.01e-8] {
            let r = q.abs().sqrt();
            let exact = if q > 0.0 { r.asinh() / r } else { r.asin() / r };
            assert_abs_diff_eq!(log_factor(q), exact, epsilon = 1e-15);
        }
    }

    #[test]
    fn classification() {
        let a3 = classify(&ProjMatrix::a(3.0), ALGEBRA_TOL);
        assert_eq!(a3.kind, ElementKind::Hyperbolic);
        assert_abs_diff_eq!(a3.translation_length, 3.0, epsilon = 1e-12);
        let tr3 = ProjMatrix::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(classify(&tr3, ALGEBRA_TOL).translation_length, 1.9248473002384139, epsilon = 1e-7);
        assert_eq!(classify(&ProjMatrix::b(1.0), ALGEBRA_TOL).kind, ElementKind::Parabolic);
        assert_eq!(classify(&ProjMatrix::identity(), ALGEBRA_TOL).kind, ElementKind::Identity);
        assert_eq!(classify(&ProjMatrix::d_theta(1.0), ALGEBRA_TOL).kind, ElementKind::Elliptic);
        assert!(matches!(axis_frame(&ProjMatrix::b(1.0)), Err(Psl2Error::NotHyperbolic(ElementKind::Parabolic))));
    }

    #[test]
    fn axis_frame_of_diagonal_is_identity() {
        let (f, t) = axis_frame(&ProjMatrix::a(3.0)).unwrap();
        assert_abs_diff_eq!(t, 3.0, epsilon = 1e-12);
        assert!(f.proj_equal(&ProjMatrix::identity(), 1e-12));
    }

    #[test]
    fn axis_frame_long_period() {
        let f0 = ProjMatrix::c(0.013) * ProjMatrix::b(-0.007) * ProjMatrix::a(0.3);
        let g = f0.conjugate(&ProjMatrix::a(70.0));
        let (f, t) = axis_frame(&g).unwrap();
        assert_abs_diff_eq!(t, 70.0, epsilon = 1e-9);
        let back = f.inverse() * g * f;
        let d = nac_decompose(&back, Flavor::CuBs, 1e-12).unwrap();
        assert!(d.u.abs() < 1e-9 && d.s.abs() < 1e-9, "{d:?}");
        // The frame lies on the same axis as f0.
        let rel = nac_decompose(&(f0.inverse() * f), Flavor::CuBs, 1e-12).unwrap();
        assert!(rel.u.abs() < 1e-9 && rel.s.abs() < 1e-9);
    }

    #[test]
    fn disk_model_agrees_with_cayley() {
        let g = ProjMatrix::new(2.0, 1.0, 3.0, 2.0).unwrap();
        let (alpha, beta) = g.to_disk();
        for z in [Complex64::new(0.3, 1.2), Complex64::new(-2.0, 0.1)] {
            let w = cayley(z);
            let via_disk = (alpha * w + beta) / (beta.conj() * w + alpha.conj());
            assert!((via_disk - cayley(g.apply(z))).norm() < 1e-12);
        }
    }
}
