//! Exact rational linear algebra in dimension two, a complete orbit
//! decision for 2x2 rational matrices, affine and scalar geometric
//! orbit decisions, and semilinear-set arithmetic.
//!
//! Everything here is exact: entries are arbitrary-precision rationals
//! and every `Found` answer is re-verified by recomputation before it
//! is returned. `Refuted` answers rest on certificates — periodicity
//! exhausted, an invariant quadratic form, eigenvalue growth, or a
//! p-adic descent — and in debug builds are additionally cross-checked
//! against brute force.

use crate::{Error, Int, Rational, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Outcome of a decision procedure. `Found` and `Refuted` are
/// certified; `BoundExceeded` reports an exhausted search budget and is
/// never silently coerced into a refutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision<T> {
    Found(T),
    Refuted,
    BoundExceeded(u64),
}

impl<T> Decision<T> {
    pub fn is_found(&self) -> bool {
        matches!(self, Decision::Found(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Decision::Refuted)
    }

    pub fn is_decided(&self) -> bool {
        !matches!(self, Decision::BoundExceeded(_))
    }

    pub fn found(self) -> Option<T> {
        match self {
            Decision::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Decision<U> {
        match self {
            Decision::Found(t) => Decision::Found(f(t)),
            Decision::Refuted => Decision::Refuted,
            Decision::BoundExceeded(b) => Decision::BoundExceeded(b),
        }
    }
}

pub(crate) fn rat(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

fn rat_int(x: &Int) -> Rational {
    Rational::from_integer(x.clone())
}

/// Exact 2-vector of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vec2(pub Rational, pub Rational);

impl Vec2 {
    pub fn from_i64(x: i64, y: i64) -> Self {
        Vec2(rat(x), rat(y))
    }

    pub fn zero() -> Self {
        Vec2(Rational::zero(), Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
}

/// Exact 2x2 rational matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Mat2 {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2::new(rat(a), rat(b), rat(c), rat(d))
    }

    pub fn identity() -> Self {
        Mat2::from_i64(1, 0, 0, 1)
    }

    pub fn trace(&self) -> Rational {
        &self.a + &self.d
    }

    pub fn det(&self) -> Rational {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Matrix-vector product (column-vector convention).
    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        Vec2(&self.a * &v.0 + &self.b * &v.1, &self.c * &v.0 + &self.d * &v.1)
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }
}

/// One-dimensional affine map `c -> multiplier*c + offset` over the
/// integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap1D {
    pub multiplier: Int,
    pub offset: Int,
}

impl AffineMap1D {
    pub fn new(multiplier: i64, offset: i64) -> Self {
        AffineMap1D { multiplier: Int::from(multiplier), offset: Int::from(offset) }
    }

    pub fn apply(&self, c: &Int) -> Int {
        &self.multiplier * c + &self.offset
    }
}

/// Decides whether some iterate of the affine map sends `a0` to
/// `target`: the map embeds as the 2x2 matrix `[[multiplier, offset],
/// [0, 1]]` acting on `(a0, 1)`.
pub fn affine_orbit_decide(theta: &AffineMap1D, a0: &Int, target: &Int, bound: u64) -> Decision<u64> {
    let m = Mat2::new(
        rat_int(&theta.multiplier),
        rat_int(&theta.offset),
        Rational::zero(),
        Rational::one(),
    );
    let v0 = Vec2(rat_int(a0), Rational::one());
    let t = Vec2(rat_int(target), Rational::one());
    orbit_decide(&m, &v0, &t, bound)
}

/// Decides whether `c * t^(k-1) = d` for some `k >= 1`, returning the
/// minimal such `k`. Complete for all rational inputs.
pub fn scalar_geometric_decide(t: &Rational, c: &Rational, d: &Rational) -> Decision<u64> {
    if c.is_zero() {
        return if d.is_zero() { Decision::Found(1) } else { Decision::Refuted };
    }
    let rho = d / c;
    if t.is_zero() {
        // k = 1 gives t^0 = 1; k >= 2 gives 0.
        if rho.is_one() {
            return Decision::Found(1);
        }
        return if rho.is_zero() { Decision::Found(2) } else { Decision::Refuted };
    }
    if t.is_one() {
        return if rho.is_one() { Decision::Found(1) } else { Decision::Refuted };
    }
    if *t == -Rational::one() {
        if rho.is_one() {
            return Decision::Found(1);
        }
        return if rho == -Rational::one() { Decision::Found(2) } else { Decision::Refuted };
    }
    // |t| is not 0 or 1: |t^j| is strictly monotone, so at most one
    // exponent can work and the scan below terminates.
    if rho.is_zero() {
        return Decision::Refuted;
    }
    let growing = t.abs() > Rational::one();
    let rho_abs = rho.abs();
    let mut pw = Rational::one();
    let mut j = 0u64;
    loop {
        if pw == rho {
            return Decision::Found(j + 1);
        }
        let pa = pw.abs();
        if (growing && pa > rho_abs) || (!growing && pa < rho_abs) {
            return Decision::Refuted;
        }
        pw *= t;
        j += 1;
    }
}

/// The set of exponents solving one geometric equation, used while
/// intersecting per-eigencoordinate conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
enum KSet {
    Empty,
    All,
    /// All `k` with the given parity (0 = even, 1 = odd).
    Parity(u8),
    /// An explicit sorted list.
    Finite(Vec<u64>),
}

impl KSet {
    fn intersect(&self, other: &KSet) -> KSet {
        match (self, other) {
            (KSet::Empty, _) | (_, KSet::Empty) => KSet::Empty,
            (KSet::All, x) | (x, KSet::All) => x.clone(),
            (KSet::Parity(p), KSet::Parity(q)) => {
                if p == q {
                    KSet::Parity(*p)
                } else {
                    KSet::Empty
                }
            }
            (KSet::Parity(p), KSet::Finite(v)) | (KSet::Finite(v), KSet::Parity(p)) => {
                let f: Vec<u64> = v.iter().copied().filter(|k| (k % 2) as u8 == *p).collect();
                if f.is_empty() {
                    KSet::Empty
                } else {
                    KSet::Finite(f)
                }
            }
            (KSet::Finite(v), KSet::Finite(w)) => {
                let f: Vec<u64> = v.iter().copied().filter(|k| w.contains(k)).collect();
                if f.is_empty() {
                    KSet::Empty
                } else {
                    KSet::Finite(f)
                }
            }
        }
    }

    fn min(&self) -> Option<u64> {
        match self {
            KSet::Empty => None,
            KSet::All => Some(0),
            KSet::Parity(p) => Some(*p as u64),
            KSet::Finite(v) => v.iter().copied().min(),
        }
    }
}

/// Exponent set of `alpha * lambda^k = beta` over `k >= 0`, for
/// rational `lambda != 0`.
fn geometric_kset(lambda: &Rational, alpha: &Rational, beta: &Rational) -> KSet {
    debug_assert!(!lambda.is_zero());
    if alpha.is_zero() {
        return if beta.is_zero() { KSet::All } else { KSet::Empty };
    }
    let rho = beta / alpha;
    if lambda.is_one() {
        return if rho.is_one() { KSet::All } else { KSet::Empty };
    }
    if *lambda == -Rational::one() {
        if rho.is_one() {
            return KSet::Parity(0);
        }
        return if rho == -Rational::one() { KSet::Parity(1) } else { KSet::Empty };
    }
    if rho.is_zero() {
        return KSet::Empty;
    }
    let growing = lambda.abs() > Rational::one();
    let rho_abs = rho.abs();
    let mut pw = Rational::one();
    let mut k = 0u64;
    loop {
        if pw == rho {
            return KSet::Finite(vec![k]);
        }
        let pa = pw.abs();
        if (growing && pa > rho_abs) || (!growing && pa < rho_abs) {
            return KSet::Empty;
        }
        pw *= lambda;
        k += 1;
    }
}

/// Element of the quadratic field extension by `sqrt(disc)`, with
/// `disc` a positive non-square rational.
#[derive(Clone, Debug, PartialEq, Eq)]
struct QuadExt {
    a: Rational,
    b: Rational,
    disc: Rational,
}

impl QuadExt {
    fn new(a: Rational, b: Rational, disc: Rational) -> Self {
        QuadExt { a, b, disc }
    }

    fn from_rat(a: Rational, disc: Rational) -> Self {
        QuadExt { a, b: Rational::zero(), disc }
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn mul(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.disc, o.disc);
        QuadExt {
            a: &self.a * &o.a + &self.b * &o.b * &self.disc,
            b: &self.a * &o.b + &self.b * &o.a,
            disc: self.disc.clone(),
        }
    }

    fn add(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.disc, o.disc);
        QuadExt { a: &self.a + &o.a, b: &self.b + &o.b, disc: self.disc.clone() }
    }

    fn sub(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.disc, o.disc);
        QuadExt { a: &self.a - &o.a, b: &self.b - &o.b, disc: self.disc.clone() }
    }

    fn inverse(&self) -> QuadExt {
        // 1/(a + b sqrt(D)) = (a - b sqrt(D)) / (a^2 - b^2 D); the
        // denominator is nonzero because D is not a rational square.
        let n = &self.a * &self.a - &self.b * &self.b * &self.disc;
        debug_assert!(!n.is_zero());
        QuadExt { a: &self.a / &n, b: -(&self.b / &n), disc: self.disc.clone() }
    }

    fn div(&self, o: &QuadExt) -> QuadExt {
        self.mul(&o.inverse())
    }

    /// Exact sign of `a + b*sqrt(disc)` with `disc > 0`.
    fn sign(&self) -> i8 {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // Opposite signs: compare a^2 with b^2 * disc.
        let lhs = &self.a * &self.a;
        let rhs = &self.b * &self.b * &self.disc;
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Compares absolute values: sign of |self| - |other|.
    fn abs_cmp(&self, other: &QuadExt) -> i8 {
        let s2 = self.mul(self);
        let o2 = other.mul(other);
        s2.sub(&o2).sign()
    }
}

fn rational_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Whether a nonnegative rational is a perfect square in the rationals;
/// returns the exact square root when it is.
fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let num = r.numer();
    let den = r.denom();
    let ns = num.sqrt();
    let ds = den.sqrt();
    if &(&ns * &ns) == num && &(&ds * &ds) == den {
        Some(Rational::new(ns, ds))
    } else {
        None
    }
}

/// Smallest prime factor of `n > 1` by trial division, capped; `None`
/// if no factor at most the cap divides `n` (then `n`'s least prime
/// factor exceeds the cap).
fn small_prime_factor(n: &BigInt) -> Option<BigInt> {
    let n = n.abs();
    let two = BigInt::from(2);
    if (&n % &two).is_zero() {
        return Some(two);
    }
    let mut p = BigInt::from(3);
    let cap = BigInt::from(1_000_000u64);
    while &p * &p <= n && p <= cap {
        if (&n % &p).is_zero() {
            return Some(p);
        }
        p += 2;
    }
    if &p * &p > n {
        // n itself is prime.
        return Some(n);
    }
    None
}

/// p-adic valuation of a nonzero rational.
fn padic_valuation(r: &Rational, p: &BigInt) -> i64 {
    debug_assert!(!r.is_zero());
    let mut v = 0i64;
    let mut n = r.numer().abs();
    while (&n % p).is_zero() {
        n /= p;
        v += 1;
    }
    let mut d = r.denom().abs();
    while (&d % p).is_zero() {
        d /= p;
        v -= 1;
    }
    v
}

/// Decides whether `M^k v0 = target` for some `k >= 0`, returning the
/// minimal such `k`. Complete for all rational 2x2 inputs; the `bound`
/// only caps the one search branch whose certificate needs a prime
/// factorization that trial division could not supply, and the
/// debug-build brute-force cross-check of refutations.
pub fn orbit_decide(m: &Mat2, v0: &Vec2, target: &Vec2, bound: u64) -> Decision<u64> {
    let decision = orbit_decide_inner(m, v0, target, bound);
    match &decision {
        Decision::Found(k) => {
            assert_eq!(
                &iterate_vec(m, v0, *k),
                target,
                "orbit decision returned an unverified witness"
            );
        }
        Decision::Refuted => {
            // Entries can grow exponentially in the step count, and the
            // exact arithmetic re-normalizes at every operation, so the
            // cross-check horizon is kept short.
            #[cfg(debug_assertions)]
            brute_force_cross_check(m, v0, target, bound.min(128));
        }
        Decision::BoundExceeded(_) => {}
    }
    decision
}

fn iterate_vec(m: &Mat2, v0: &Vec2, k: u64) -> Vec2 {
    let mut w = v0.clone();
    for _ in 0..k {
        w = m.mul_vec(&w);
    }
    w
}

#[cfg(debug_assertions)]
fn brute_force_cross_check(m: &Mat2, v0: &Vec2, target: &Vec2, cap: u64) {
    let mut w = v0.clone();
    for k in 0..=cap {
        assert_ne!(&w, target, "refuted orbit instance has witness k = {k}");
        w = m.mul_vec(&w);
    }
}

fn orbit_decide_inner(m: &Mat2, v0: &Vec2, target: &Vec2, bound: u64) -> Decision<u64> {
    if v0 == target {
        return Decision::Found(0);
    }
    if v0.is_zero() {
        // The orbit stays at the origin; the target differs from it.
        return Decision::Refuted;
    }
    let tr = m.trace();
    let det = m.det();

    if det.is_zero() {
        // Cayley-Hamilton gives M^2 = tr*M, so M^k v0 = tr^(k-1) (M v0)
        // for k >= 1.
        let w1 = m.mul_vec(v0);
        if w1.is_zero() {
            return if target.is_zero() { Decision::Found(1) } else { Decision::Refuted };
        }
        return match parallel_ratio(&w1, target) {
            None => Decision::Refuted,
            Some(rho) => scalar_geometric_decide(&tr, &Rational::one(), &rho),
        };
    }

    // Scalar matrix: M = lambda*I.
    if m.b.is_zero() && m.c.is_zero() && m.a == m.d {
        return match parallel_ratio(v0, target) {
            None => Decision::Refuted,
            Some(rho) => scalar_geometric_decide(&m.a, &m.a, &rho),
        };
    }

    // Zero trace: M^2 = -det * I, so the orbit splits into two scalar
    // geometric families over even and odd exponents.
    if tr.is_zero() {
        let lam = -&det;
        let w1 = m.mul_vec(v0);
        let even = match parallel_ratio(v0, target) {
            None => None,
            // k = 2j, j >= 1: lam^j = rho.
            Some(rho) => scalar_geometric_decide(&lam, &lam, &rho).found().map(|j| 2 * j),
        };
        let odd = match parallel_ratio(&w1, target) {
            None => None,
            // k = 2j + 1, j >= 0: lam^j = rho.
            Some(rho) => scalar_geometric_decide(&lam, &Rational::one(), &rho)
                .found()
                .map(|j| 2 * (j - 1) + 1),
        };
        return match (even, odd) {
            (None, None) => Decision::Refuted,
            (Some(k), None) | (None, Some(k)) => Decision::Found(k),
            (Some(k1), Some(k2)) => Decision::Found(k1.min(k2)),
        };
    }

    let delta = &tr * &tr - rat(4) * &det;

    if delta.is_zero() {
        return repeated_eigenvalue_decide(m, v0, target, &tr);
    }

    if delta.is_positive() {
        if let Some(sq) = rational_sqrt(&delta) {
            let l1 = (&tr + &sq) / rat(2);
            let l2 = (&tr - &sq) / rat(2);
            return rational_eigen_decide(m, v0, target, &l1, &l2);
        }
        return quadratic_eigen_decide(m, v0, target, &delta, &tr);
    }

    // Negative discriminant: complex eigenvalue pair of modulus
    // sqrt(det), det > 0.
    if det.is_one() {
        if tr.denom().is_one() {
            // Integer trace in (-2, 2) with det 1: M is a root of unity
            // of order dividing 12; the orbit is periodic.
            return periodic_decide(m, v0, target, 12);
        }
        return unit_rotation_decide(m, v0, target, &tr, bound);
    }
    invariant_form_decide(m, v0, target, &det)
}

/// If `target = rho * base` for a scalar `rho`, returns it.
fn parallel_ratio(base: &Vec2, target: &Vec2) -> Option<Rational> {
    debug_assert!(!base.is_zero());
    let rho = if !base.0.is_zero() { &target.0 / &base.0 } else { &target.1 / &base.1 };
    if &base.0 * &rho == target.0 && &base.1 * &rho == target.1 {
        Some(rho)
    } else {
        None
    }
}

/// Repeated eigenvalue `lambda = tr/2` with `M` not scalar: writing
/// `N = M - lambda I` (nonzero, `N^2 = 0`), the iterates are
/// `M^k v0 = lambda^k v0 + k lambda^(k-1) N v0`.
fn repeated_eigenvalue_decide(m: &Mat2, v0: &Vec2, target: &Vec2, tr: &Rational) -> Decision<u64> {
    let lam = tr / rat(2);
    debug_assert!(!lam.is_zero(), "det != 0 guarantees a nonzero eigenvalue");
    let nv = Vec2(
        &m.a * &v0.0 + &m.b * &v0.1 - &lam * &v0.0,
        &m.c * &v0.0 + &m.d * &v0.1 - &lam * &v0.1,
    );
    if nv.is_zero() {
        // v0 is an eigenvector: pure geometric sequence.
        return match parallel_ratio(v0, target) {
            None => Decision::Refuted,
            Some(rho) => scalar_geometric_decide(&lam, &lam, &rho),
        };
    }
    if lam.is_one() {
        // w_k = v0 + k * nv: solve linearly per component.
        return linear_progression_decide(v0, &nv, target).into_decision();
    }
    if lam == -Rational::one() {
        // w_k = (-1)^k (v0 - k nv): per parity a linear family.
        let neg = Vec2(-target.0.clone(), -target.1.clone());
        let mnv = Vec2(-nv.0.clone(), -nv.1.clone());
        let even = linear_progression_decide(v0, &mnv, target).filter(|k| k % 2 == 0);
        let odd = linear_progression_decide(v0, &mnv, &neg).filter(|k| k % 2 == 1);
        return match (even, odd) {
            (None, None) => Decision::Refuted,
            (Some(k), None) | (None, Some(k)) => Decision::Found(k),
            (Some(k1), Some(k2)) => Decision::Found(k1.min(k2)),
        };
    }
    // |lambda| differs from 0 and 1: scan with a certified escape on a
    // component where the linear part is nonzero.
    let (pick_nv, pick_v0, pick_t) = if !nv.0.is_zero() {
        (nv.0.clone(), v0.0.clone(), target.0.clone())
    } else {
        (nv.1.clone(), v0.1.clone(), target.1.clone())
    };
    let lam_abs = lam.abs();
    let growing = lam_abs > Rational::one();
    let t_abs = pick_t.abs();
    let mut w = v0.clone();
    let mut k = 0u64;
    loop {
        if &w == target {
            return Decision::Found(k);
        }
        // Picked component of w_k is lambda^(k-1) (lambda v0_i + k nv_i).
        if growing && k >= 1 {
            // |w_k[i]| >= k|nv_i| - |lambda v0_i| once lambda^(k-1) has
            // modulus at least 1, and that lower bound grows without
            // bound; past the target modulus no hit is possible.
            let lower = rat(k as i64) * pick_nv.abs() - (&lam * &pick_v0).abs();
            if lower > t_abs {
                return Decision::Refuted;
            }
        }
        if !growing {
            // Upper bound |lambda|^(k-1) (|lambda v0_i| + k |nv_i|)
            // eventually decreases to zero; once it is below |t_i| and
            // its step ratio has dropped under 1 it stays below.
            if pick_t.is_zero() {
                // Target component is zero: need lambda v0_i + k nv_i = 0.
                let kk = -(&lam * &pick_v0) / &pick_nv;
                return match rational_to_index(&kk) {
                    Some(kc) if kc >= 1 => {
                        if iterate_vec(m, v0, kc) == *target {
                            Decision::Found(kc)
                        } else {
                            Decision::Refuted
                        }
                    }
                    _ => Decision::Refuted,
                };
            }
            if k >= 1 {
                let bound_k = pow_rat(&lam_abs, k - 1)
                    * ((&lam * &pick_v0).abs() + rat(k as i64) * pick_nv.abs());
                let ratio_down = &lam_abs
                    * ((&lam * &pick_v0).abs() + rat(k as i64 + 1) * pick_nv.abs())
                    < (&lam * &pick_v0).abs() + rat(k as i64) * pick_nv.abs();
                if bound_k < t_abs && ratio_down {
                    return Decision::Refuted;
                }
            }
        }
        w = m.mul_vec(&w);
        k += 1;
    }
}

fn pow_rat(r: &Rational, k: u64) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

/// Solutions of `v0 + k*step = target` over `k >= 0` (vector equation,
/// each component linear in `k`).
fn linear_progression_decide(v0: &Vec2, step: &Vec2, target: &Vec2) -> Option<u64> {
    let solve = |v: &Rational, s: &Rational, t: &Rational| -> KSet {
        if s.is_zero() {
            if v == t {
                KSet::All
            } else {
                KSet::Empty
            }
        } else {
            let k = (t - v) / s;
            match rational_to_index(&k) {
                Some(kk) => KSet::Finite(vec![kk]),
                None => KSet::Empty,
            }
        }
    };
    let s0 = solve(&v0.0, &step.0, &target.0);
    let s1 = solve(&v0.1, &step.1, &target.1);
    s0.intersect(&s1).min()
}

/// A nonnegative integer value of a rational, if it is one.
fn rational_to_index(r: &Rational) -> Option<u64> {
    if !r.denom().is_one() || r.is_negative() {
        return None;
    }
    u64::try_from(r.numer().clone()).ok()
}

trait IntoDecision {
    fn into_decision(self) -> Decision<u64>;
}

impl IntoDecision for Option<u64> {
    fn into_decision(self) -> Decision<u64> {
        match self {
            Some(k) => Decision::Found(k),
            None => Decision::Refuted,
        }
    }
}

/// Distinct rational eigenvalues: decouple with left eigenvectors and
/// intersect the two geometric exponent sets.
fn rational_eigen_decide(
    m: &Mat2,
    v0: &Vec2,
    target: &Vec2,
    l1: &Rational,
    l2: &Rational,
) -> Decision<u64> {
    let left_eigen = |lam: &Rational| -> Vec2 {
        if !m.c.is_zero() {
            Vec2(m.c.clone(), lam - &m.a)
        } else if !m.b.is_zero() {
            Vec2(lam - &m.d, m.b.clone())
        } else {
            // Diagonal matrix: eigen-coordinates are the axes.
            if lam == &m.a && (lam != &m.d) {
                Vec2(Rational::one(), Rational::zero())
            } else {
                Vec2(Rational::zero(), Rational::one())
            }
        }
    };
    let dot = |l: &Vec2, v: &Vec2| -> Rational { &l.0 * &v.0 + &l.1 * &v.1 };
    let e1 = left_eigen(l1);
    let e2 = left_eigen(l2);
    let k1 = geometric_kset(l1, &dot(&e1, v0), &dot(&e1, target));
    let k2 = geometric_kset(l2, &dot(&e2, v0), &dot(&e2, target));
    match k1.intersect(&k2).min() {
        None => Decision::Refuted,
        Some(k) => {
            if iterate_vec(m, v0, k) == *target {
                Decision::Found(k)
            } else {
                Decision::Refuted
            }
        }
    }
}

/// Irrational real eigenvalues: work exactly in the quadratic field,
/// where the dominant eigencoordinate is strictly monotone in modulus,
/// leaving at most one exponent to verify.
fn quadratic_eigen_decide(
    m: &Mat2,
    v0: &Vec2,
    target: &Vec2,
    delta: &Rational,
    tr: &Rational,
) -> Decision<u64> {
    let half = |x: Rational| x / rat(2);
    let sqrt_d = QuadExt::new(Rational::zero(), Rational::one(), delta.clone());
    let lam_plus = QuadExt::new(half(tr.clone()), half(Rational::one()), delta.clone());
    let lam_minus = lam_plus.sub(&sqrt_d);
    // Dominant eigenvalue by exact modulus comparison; moduli differ
    // because the trace is nonzero here.
    let lam = if lam_plus.abs_cmp(&lam_minus) >= 0 { lam_plus } else { lam_minus };
    debug_assert!(lam.abs_cmp(&QuadExt::from_rat(Rational::one(), delta.clone())) != 0);

    // Left eigenvector for lam: (c, lam - a), or (lam - d, b) when c = 0.
    let (e0, e1) = if !m.c.is_zero() {
        (
            QuadExt::from_rat(m.c.clone(), delta.clone()),
            lam.sub(&QuadExt::from_rat(m.a.clone(), delta.clone())),
        )
    } else {
        (
            lam.sub(&QuadExt::from_rat(m.d.clone(), delta.clone())),
            QuadExt::from_rat(m.b.clone(), delta.clone()),
        )
    };
    let pair = |v: &Vec2| -> QuadExt {
        let x = QuadExt::from_rat(v.0.clone(), delta.clone());
        let y = QuadExt::from_rat(v.1.clone(), delta.clone());
        e0.mul(&x).add(&e1.mul(&y))
    };
    let alpha = pair(v0);
    let beta = pair(target);
    // alpha = 0 would force v0 = 0 (the sqrt-component of the functional
    // pins one rational coordinate), which was handled earlier.
    debug_assert!(!alpha.is_zero());
    if beta.is_zero() {
        // Only the zero vector pairs to zero; the orbit of a nonzero
        // vector under an invertible matrix stays nonzero.
        return Decision::Refuted;
    }
    let rho = beta.div(&alpha);
    let one = QuadExt::from_rat(Rational::one(), delta.clone());
    let growing = lam.abs_cmp(&one) > 0;
    let mut pw = one;
    let mut k = 0u64;
    loop {
        if pw == rho {
            return if iterate_vec(m, v0, k) == *target {
                Decision::Found(k)
            } else {
                Decision::Refuted
            };
        }
        let cmp = pw.abs_cmp(&rho);
        if (growing && cmp > 0) || (!growing && cmp < 0) {
            return Decision::Refuted;
        }
        pw = pw.mul(&lam);
        k += 1;
    }
}

/// Root-of-unity case: the matrix power cycle has length dividing
/// `order`; scan one full cycle.
fn periodic_decide(m: &Mat2, v0: &Vec2, target: &Vec2, order: u64) -> Decision<u64> {
    let mut w = v0.clone();
    for k in 0..=order {
        if &w == target {
            return Decision::Found(k);
        }
        w = m.mul_vec(&w);
    }
    // After `order + 1` steps the orbit must have wrapped around.
    debug_assert_eq!(w, m.mul_vec(v0), "claimed periodicity failed");
    Decision::Refuted
}

/// Determinant-one, non-integer rational trace of modulus below two:
/// eigenvalues lie on the unit circle but are not roots of unity, so
/// orbits never repeat. Over the p-adics for a prime dividing the trace
/// denominator, one eigenvalue has strictly negative valuation, forcing
/// the coordinate valuations into an eventual strict descent; once the
/// valuation drops below the target's, no later iterate can match.
fn unit_rotation_decide(
    m: &Mat2,
    v0: &Vec2,
    target: &Vec2,
    tr: &Rational,
    bound: u64,
) -> Decision<u64> {
    let q = tr.denom().clone();
    let prime = small_prime_factor(&q);
    let (prime, c) = match prime {
        Some(p) => {
            let c = padic_valuation(&Rational::new(q.clone(), BigInt::one()), &p);
            (Some(p), c)
        }
        None => (None, 0),
    };
    // Track a linear functional that is not identically zero along the
    // orbit: a coordinate with (u_0, u_1) != (0, 0).
    let w1 = m.mul_vec(v0);
    let use_x = !(v0.0.is_zero() && w1.0.is_zero());
    let coord = |v: &Vec2| if use_x { v.0.clone() } else { v.1.clone() };
    let t_val = {
        let t = coord(target);
        if t.is_zero() {
            None
        } else {
            prime.as_ref().map(|p| padic_valuation(&t, p))
        }
    };
    let mut prev: Option<i64> = None;
    let mut w = v0.clone();
    let mut k = 0u64;
    loop {
        if &w == target {
            return Decision::Found(k);
        }
        if let Some(p) = &prime {
            let u = coord(&w);
            if !u.is_zero() {
                let v = padic_valuation(&u, p);
                if let Some(pv) = prev {
                    if v <= pv - c {
                        // Strict descent from here on: every later
                        // valuation is smaller still.
                        let below_target = match t_val {
                            None => true,
                            Some(tv) => v < tv,
                        };
                        if below_target {
                            return Decision::Refuted;
                        }
                    }
                }
                prev = Some(v);
            } else {
                prev = None;
            }
        }
        if k >= bound {
            return Decision::BoundExceeded(bound);
        }
        w = m.mul_vec(&w);
        k += 1;
    }
}

/// Complex eigenvalues with determinant other than one: the quadratic
/// form `Q(v) = c x^2 + (d - a) x y - b y^2` satisfies `Q(Mv) = det *
/// Q(v)` and is definite (its discriminant is the negative one of `M`),
/// pinning the exponent to at most one candidate.
fn invariant_form_decide(m: &Mat2, v0: &Vec2, target: &Vec2, det: &Rational) -> Decision<u64> {
    let q = |v: &Vec2| -> Rational {
        &m.c * &v.0 * &v.0 + (&m.d - &m.a) * &v.0 * &v.1 - &m.b * &v.1 * &v.1
    };
    debug_assert!({
        let w = m.mul_vec(v0);
        q(&w) == det * q(v0)
    });
    let qv = q(v0);
    debug_assert!(!qv.is_zero(), "the form is definite and v0 is nonzero");
    let qt = q(target);
    let rho = &qt / &qv;
    // Need det^k = rho with det > 0, det != 1: at most one k.
    match scalar_geometric_decide(det, &Rational::one(), &rho) {
        Decision::Found(k1) => {
            let k = k1 - 1;
            if iterate_vec(m, v0, k) == *target {
                Decision::Found(k)
            } else {
                Decision::Refuted
            }
        }
        _ => Decision::Refuted,
    }
}

/// Dimension-checked entry point: complete in dimensions zero, one and
/// two; higher dimensions are rejected.
pub fn orbit_decide_general(
    rows: &[Vec<Rational>],
    v0: &[Rational],
    target: &[Rational],
    bound: u64,
) -> Result<Decision<u64>> {
    let n = rows.len();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if rows.iter().any(|r| r.len() != n) || v0.len() != n || target.len() != n {
        return Err(Error::UnsupportedDimension(n));
    }
    match n {
        0 => Ok(Decision::Found(0)),
        1 => {
            let m = Mat2::new(rows[0][0].clone(), Rational::zero(), Rational::zero(), Rational::one());
            let v = Vec2(v0[0].clone(), Rational::one());
            let t = Vec2(target[0].clone(), Rational::one());
            Ok(orbit_decide(&m, &v, &t, bound))
        }
        _ => {
            let m = Mat2::new(
                rows[0][0].clone(),
                rows[0][1].clone(),
                rows[1][0].clone(),
                rows[1][1].clone(),
            );
            let v = Vec2(v0[0].clone(), v0[1].clone());
            let t = Vec2(target[0].clone(), target[1].clone());
            Ok(orbit_decide(&m, &v, &t, bound))
        }
    }
}

/// A finite union of arithmetic progressions `base + period * N` over
/// the nonnegative integers; period zero denotes a singleton. Kept
/// normalized: no member progression is contained in another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemilinearSet1D {
    pairs: Vec<(u64, u64)>,
}

impl SemilinearSet1D {
    pub fn empty() -> Self {
        SemilinearSet1D { pairs: Vec::new() }
    }

    pub fn singleton(b: u64) -> Self {
        SemilinearSet1D { pairs: vec![(b, 0)] }
    }

    pub fn progression(base: u64, period: u64) -> Self {
        SemilinearSet1D { pairs: vec![(base, period)] }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut s = SemilinearSet1D { pairs: pairs.into_iter().collect() };
        s.normalize();
        s
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, k: u64) -> bool {
        self.pairs.iter().any(|&(b, q)| {
            if q == 0 {
                k == b
            } else {
                k >= b && (k - b).is_multiple_of(q)
            }
        })
    }

    /// Least element, if any.
    pub fn min(&self) -> Option<u64> {
        self.pairs.iter().map(|&(b, _)| b).min()
    }

    pub fn union(&self, other: &SemilinearSet1D) -> SemilinearSet1D {
        SemilinearSet1D::from_pairs(self.pairs.iter().chain(&other.pairs).copied())
    }

    pub fn insert(&mut self, base: u64, period: u64) {
        self.pairs.push((base, period));
        self.normalize();
    }

    /// Exact intersection, progression by progression, via the
    /// extended Euclidean algorithm.
    pub fn intersect(&self, other: &SemilinearSet1D) -> SemilinearSet1D {
        let mut out = Vec::new();
        for &(b1, q1) in &self.pairs {
            for &(b2, q2) in &other.pairs {
                if let Some(p) = progression_intersect(b1, q1, b2, q2) {
                    out.push(p);
                }
            }
        }
        SemilinearSet1D::from_pairs(out)
    }

    fn normalize(&mut self) {
        self.pairs.sort_unstable();
        self.pairs.dedup();
        let snapshot = self.pairs.clone();
        self.pairs.retain(|&(b, q)| {
            !snapshot.iter().any(|&(b2, q2)| {
                (b2, q2) != (b, q) && subsumes(b2, q2, b, q)
            })
        });
        // Equal-progression duplicates were removed by dedup; mutual
        // subsumption of distinct pairs cannot occur (it forces
        // equality), so retain keeps exactly the maximal members.
    }
}

/// Whether `base2 + period2*N` is contained in `base1 + period1*N`.
fn subsumes(base1: u64, period1: u64, base2: u64, period2: u64) -> bool {
    if base2 < base1 {
        return false;
    }
    if period1 == 0 {
        return period2 == 0 && base1 == base2;
    }
    (base2 - base1).is_multiple_of(period1) && period2.is_multiple_of(period1)
}

/// Intersection of two arithmetic progressions as a progression.
fn progression_intersect(b1: u64, q1: u64, b2: u64, q2: u64) -> Option<(u64, u64)> {
    if q1 == 0 && q2 == 0 {
        return (b1 == b2).then_some((b1, 0));
    }
    if q1 == 0 {
        return (b1 >= b2 && (b1 - b2).is_multiple_of(q2)).then_some((b1, 0));
    }
    if q2 == 0 {
        return (b2 >= b1 && (b2 - b1).is_multiple_of(q1)).then_some((b2, 0));
    }
    // Solve x = b1 (mod q1), x = b2 (mod q2), x >= max(b1, b2).
    let (g, lcm) = {
        let g = q1.gcd(&q2);
        (g, (q1 / g) as u128 * q2 as u128)
    };
    let (db, target_mod) = if b2 >= b1 { (b2 - b1, true) } else { (b1 - b2, false) };
    if db % g != 0 {
        return None;
    }
    // x = b1 + q1 * t with q1 * t = +-db (mod q2).
    let q2g = (q2 / g) as i128;
    let q1g = (q1 / g) as i128;
    let dbg = (db / g) as i128;
    let inv = mod_inverse(q1g.rem_euclid(q2g), q2g)?;
    let t0 = if target_mod {
        (dbg % q2g * inv).rem_euclid(q2g)
    } else {
        (-(dbg % q2g) * inv).rem_euclid(q2g)
    };
    let x0 = b1 as u128 + q1 as u128 * t0 as u128;
    // x0 is the least solution at or above b1; lift it above b2 as well.
    let lo = b1.max(b2) as u128;
    let x = if x0 >= lo { x0 } else { x0 + lcm * (lo - x0).div_ceil(lcm) };
    let base = u64::try_from(x).expect("progression base fits in 64 bits");
    let period = u64::try_from(lcm).expect("progression period fits in 64 bits");
    Some((base, period))
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m, a.rem_euclid(m));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m))
}

/// Intersection of two one-dimensional semilinear sets.
pub fn sl_intersect(a: &SemilinearSet1D, b: &SemilinearSet1D) -> SemilinearSet1D {
    a.intersect(b)
}

/// Least element of a one-dimensional semilinear set.
pub fn sl_min(a: &SemilinearSet1D) -> Option<u64> {
    a.min()
}

/// A set of exponent pairs `(r, s)`, built from finite pairs, diagonal
/// rays `base + t*(step, step)`, and "full" components
/// `base + t*(1,1) + i*(p,0) + j*(0,p)`. The full component is exactly
/// `{(r, s) : r >= base.0, s >= base.1, r - s = base.0 - base.1 (mod p)}`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PairSolutionSet {
    pub finite: Vec<(u64, u64)>,
    pub diagonals: Vec<DiagonalRay>,
    pub fulls: Vec<FullComponent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalRay {
    pub base: (u64, u64),
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullComponent {
    pub base: (u64, u64),
    pub period: u64,
}

impl PairSolutionSet {
    pub fn empty() -> Self {
        PairSolutionSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.diagonals.is_empty() && self.fulls.is_empty()
    }

    pub fn with_finite(mut self, p: (u64, u64)) -> Self {
        self.finite.push(p);
        self
    }

    pub fn with_diagonal(mut self, base: (u64, u64), step: u64) -> Self {
        assert!(step >= 1);
        self.diagonals.push(DiagonalRay { base, step });
        self
    }

    pub fn with_full(mut self, base: (u64, u64), period: u64) -> Self {
        assert!(period >= 1);
        self.fulls.push(FullComponent { base, period });
        self
    }

    pub fn contains(&self, p: (u64, u64)) -> bool {
        let (r, s) = p;
        if self.finite.contains(&p) {
            return true;
        }
        if self.diagonals.iter().any(|d| {
            r >= d.base.0
                && s >= d.base.1
                && r - d.base.0 == s - d.base.1
                && (r - d.base.0) % d.step == 0
        }) {
            return true;
        }
        self.fulls.iter().any(|f| {
            r >= f.base.0
                && s >= f.base.1
                && (r as i128 - s as i128).rem_euclid(f.period as i128)
                    == (f.base.0 as i128 - f.base.1 as i128).rem_euclid(f.period as i128)
        })
    }

    /// Lexicographically least element, if any.
    pub fn min_lex(&self) -> Option<(u64, u64)> {
        let mut best: Option<(u64, u64)> = None;
        let mut consider = |p: (u64, u64)| {
            if best.is_none() || p < best.unwrap() {
                best = Some(p);
            }
        };
        for &p in &self.finite {
            consider(p);
        }
        for d in &self.diagonals {
            consider(d.base);
        }
        for f in &self.fulls {
            consider(f.base);
        }
        best
    }
}

/// Membership of a pair in a pair solution set.
pub fn pair_membership(p: (u64, u64), s: &PairSolutionSet) -> bool {
    s.contains(p)
}

/// Least (lexicographic) common pair of two pair solution sets, if any.
pub fn pair_intersect_nonempty(a: &PairSolutionSet, b: &PairSolutionSet) -> Option<(u64, u64)> {
    let mut candidates: Vec<(u64, u64)> = Vec::new();
    for &p in &a.finite {
        if b.contains(p) {
            candidates.push(p);
        }
    }
    for &p in &b.finite {
        if a.contains(p) {
            candidates.push(p);
        }
    }
    for d in &a.diagonals {
        for e in &b.diagonals {
            if let Some(p) = diag_diag(d, e) {
                candidates.push(p);
            }
        }
        for f in &b.fulls {
            if let Some(p) = diag_full(d, f) {
                candidates.push(p);
            }
        }
    }
    for d in &b.diagonals {
        for f in &a.fulls {
            if let Some(p) = diag_full(d, f) {
                candidates.push(p);
            }
        }
    }
    for f in &a.fulls {
        for g in &b.fulls {
            if let Some(p) = full_full(f, g) {
                candidates.push(p);
            }
        }
    }
    let p = candidates.into_iter().min()?;
    debug_assert!(a.contains(p) && b.contains(p));
    Some(p)
}

/// Least common pair of two diagonal rays.
fn diag_diag(d: &DiagonalRay, e: &DiagonalRay) -> Option<(u64, u64)> {
    // Offsets along a diagonal keep the coordinate difference fixed.
    let dd = d.base.0 as i128 - d.base.1 as i128;
    let de = e.base.0 as i128 - e.base.1 as i128;
    if dd != de {
        return None;
    }
    // First coordinates run along d.base.0 + step*N and e.base.0 + step*N.
    let (r, _) = progression_intersect(d.base.0, d.step, e.base.0, e.step)?;
    let s = u64::try_from(r as i128 - dd).expect("diagonal point stays nonnegative");
    Some((r, s))
}

/// Least common pair of a diagonal ray and a full component.
fn diag_full(d: &DiagonalRay, f: &FullComponent) -> Option<(u64, u64)> {
    // Along the diagonal, r - s is constant, so the congruence holds for
    // all points or none.
    let dd = d.base.0 as i128 - d.base.1 as i128;
    let df = f.base.0 as i128 - f.base.1 as i128;
    let p = f.period as i128;
    if dd.rem_euclid(p) != df.rem_euclid(p) {
        return None;
    }
    // Need base + t(step, step) with both coordinates above f's base.
    let need0 = f.base.0.saturating_sub(d.base.0);
    let need1 = f.base.1.saturating_sub(d.base.1);
    let t = need0.max(need1).div_ceil(d.step);
    Some((d.base.0 + t * d.step, d.base.1 + t * d.step))
}

/// Least common pair of two full components.
fn full_full(f: &FullComponent, g: &FullComponent) -> Option<(u64, u64)> {
    // Points satisfy r >= R0, s >= S0 and two congruences on r - s.
    let r0 = f.base.0.max(g.base.0);
    let s0 = f.base.1.max(g.base.1);
    let p = f.period;
    let q = g.period;
    let ef = (f.base.0 as i128 - f.base.1 as i128).rem_euclid(p as i128) as u64;
    let eg = (g.base.0 as i128 - g.base.1 as i128).rem_euclid(q as i128) as u64;
    // Difference classes d = r - s modulo lcm(p, q); representative d0.
    let (d0, l) = progression_intersect(ef, p, eg, q)?;
    // With r = r0 fixed, the difference r - s runs over all integers
    // congruent to d0 modulo l as s varies; pick the least s >= s0 with
    // (r0 - s) in the class.
    let want = (d0 % l) as i128;
    let diff0 = r0 as i128 - s0 as i128;
    let adjust = (diff0 - want).rem_euclid(l as i128) as u64;
    Some((r0, s0 + adjust))
}
