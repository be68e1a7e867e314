//! Two-sided orbit conjugacy and twisted conjugacy for injective maps.
//!
//! For an injective endomorphism `phi` of a free group and words `x`,
//! `z`, the two-sided search describes all exponent pairs `(r, s)` with
//! `phi^r(x)` conjugate to `phi^s(z)` as a semilinear pair set, built
//! from the minimal pair together with the entry and period of the
//! conjugacy-class orbit of `z`. For an injective product endomorphism
//! the componentwise sets are intersected (with a parity split for the
//! swapped form), and the twisted-conjugacy equation
//! `(x, y) = Phi(u, v)^{-1} (z, w) (u, v)` is solved with explicit,
//! re-verified witnesses.

use crate::freeorbit::{finite_conj_orbit, twisted_conj, ConjOrbitOutcome, OracleConfig};
use crate::linear::{pair_intersect_nonempty, Decision, PairSolutionSet};
use crate::maps::{FreeMap, ProductElement, ProductEndo, TypeData};
use crate::words::ReducedWord;
use crate::{Error, Result};
use std::collections::HashMap;

/// Description of all pairs `(r, s)` with `phi^r(x) ~ phi^s(z)`.
///
/// `r1` is the least first coordinate admitting any partner and `s1`
/// the least partner of `r1`. `q_z`/`p_z` are the entry and period of
/// the conjugacy-class orbit of `z` (`q_z = None` when that orbit is
/// infinite). `set` lists the pairs with `s` at least `s1`; pairs below
/// that band exist only when the class orbit of `z` is eventually
/// periodic, and every solution `(r, s)` has `(r + t, s + t)` in `set`
/// for some `t`, so nonemptiness questions are unaffected.
#[derive(Clone, Debug)]
pub struct PairSetReport {
    pub r1: u64,
    pub s1: u64,
    pub q_z: Option<u64>,
    pub p_z: Option<u64>,
    pub set: PairSolutionSet,
}

/// Conjugacy-class orbit of a word under an injective endomorphism,
/// scanned as cyclic cores with canonical keys, exact while complete.
struct ClassOrbit {
    /// Canonical key of the class at each scanned step.
    keys: Vec<Vec<i32>>,
    /// Cyclic core at each scanned step (same indexing as `keys`).
    cores: Vec<ReducedWord>,
    /// `Some((entry, period))` when the orbit provably cycles, making
    /// `keys` a complete list of its classes.
    cycle: Option<(u64, u64)>,
    /// Whether the scanned tail is certified to keep growing, making
    /// `keys` complete up to any length it has already passed.
    growing: bool,
}

impl ClassOrbit {
    fn complete_len(&self) -> usize {
        match self.cycle {
            Some((entry, period)) => (entry + period) as usize,
            None => self.keys.len(),
        }
    }

    fn max_core_len(&self) -> usize {
        self.cores[..self.complete_len()].iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

/// Scans the class orbit of `x` under `phi`. With a cycle or a growth
/// certificate the scan is exact; otherwise it stops at the budget and
/// the caller must treat the tail as unknown.
fn scan_class_orbit(
    phi: &FreeMap,
    x: &ReducedWord,
    cfg: &OracleConfig,
    length_horizon: Option<usize>,
) -> Result<ClassOrbit> {
    let outcome = finite_conj_orbit(phi, x, cfg)?;
    let mut orbit =
        ClassOrbit { keys: Vec::new(), cores: Vec::new(), cycle: None, growing: false };
    let (cycle, growing) = match outcome {
        Decision::Found(ConjOrbitOutcome::Finite(f)) => (Some((f.entry, f.period)), false),
        Decision::Found(ConjOrbitOutcome::Infinite) => (None, true),
        Decision::Refuted => unreachable!("class-orbit finiteness is never refuted"),
        Decision::BoundExceeded(_) => (None, false),
    };
    orbit.cycle = cycle;
    orbit.growing = growing;
    let steps_needed = match cycle {
        Some((entry, period)) => entry + period,
        None => cfg.max_steps,
    };
    let mut c = x.cyclic_core().0;
    for _ in 0..steps_needed {
        orbit.keys.push(c.canonical_cyclic().letters().to_vec());
        orbit.cores.push(c.clone());
        if growing {
            if let Some(h) = length_horizon {
                // Certified growth: once past the horizon the orbit
                // never returns below it, so the scan is complete for
                // every length up to the horizon.
                if c.len() > h {
                    break;
                }
            }
        }
        c = phi.apply(&c)?.cyclic_core().0;
        if c.len() > cfg.max_word_length {
            break;
        }
    }
    Ok(orbit)
}

/// Assembles the three-case pair set from the minimal pair and the
/// entry/period of the class orbit of `z`.
fn three_case_set(r1: u64, s1: u64, orbit_of_z: Option<(u64, u64)>) -> PairSolutionSet {
    match orbit_of_z {
        None => PairSolutionSet::empty().with_diagonal((r1, s1), 1),
        Some((q_z, p_z)) if q_z <= s1 => PairSolutionSet::empty().with_full((r1, s1), p_z),
        Some((q_z, p_z)) => {
            let mut set = PairSolutionSet::empty();
            for i in 0..(q_z - s1) {
                set.finite.push((r1 + i, s1 + i));
            }
            set.with_full((r1 + q_z - s1, q_z), p_z)
        }
    }
}

/// Describes all pairs `(r, s)` with `phi^r(x) ~ phi^s(z)`.
///
/// `Found` carries the pair-set report, `Refuted` certifies that no
/// pair exists, and `BoundExceeded` reports oracle exhaustion. Small
/// members of every emitted component are re-verified by direct
/// conjugacy tests before the report is returned.
pub fn compute_pair_solution_set(
    phi: &FreeMap,
    x: &ReducedWord,
    z: &ReducedWord,
    cfg: &OracleConfig,
) -> Result<Decision<PairSetReport>> {
    if !phi.is_endo() {
        return Err(Error::RankMismatch { left: phi.domain_rank(), right: phi.codomain_rank() });
    }
    for w in [x, z] {
        if w.rank() != phi.domain_rank() {
            return Err(Error::RankMismatch { left: w.rank(), right: phi.domain_rank() });
        }
    }
    if !phi.is_injective() {
        return Err(Error::NotInjective);
    }
    // Scan the z side first: its completeness horizon bounds how far
    // the x side must look for a partner.
    let zo = scan_class_orbit(phi, z, cfg, None)?;
    if zo.cycle.is_none() && !zo.growing {
        return Ok(Decision::BoundExceeded(zo.keys.len() as u64));
    }
    let horizon = if zo.cycle.is_some() { Some(zo.max_core_len()) } else { None };
    let xo = scan_class_orbit(phi, x, cfg, horizon)?;
    if xo.cycle.is_none() && !xo.growing {
        return Ok(Decision::BoundExceeded(xo.keys.len() as u64));
    }
    let minimal = match (zo.cycle, xo.cycle) {
        (Some(_), _) => {
            // The z classes are completely listed; the x scan covered
            // every step whose core is short enough to match one.
            let mut zmin: HashMap<&[i32], u64> = HashMap::new();
            for (s, key) in zo.keys[..zo.complete_len()].iter().enumerate() {
                zmin.entry(key.as_slice()).or_insert(s as u64);
            }
            let x_complete = xo.complete_len();
            let mut hit = None;
            for (r, key) in xo.keys[..x_complete].iter().enumerate() {
                if let Some(&s) = zmin.get(key.as_slice()) {
                    hit = Some((r as u64, s));
                    break;
                }
            }
            match hit {
                Some(p) => Decision::Found(p),
                // Both lists are exhaustive for all lengths that could
                // match, so absence is a refutation.
                None => Decision::Refuted,
            }
        }
        (None, Some(_)) => {
            // Infinitely many z classes, finitely many x classes: the
            // growing z scan is complete past the longest x core.
            let x_horizon = xo.max_core_len();
            let zo = scan_class_orbit(phi, z, cfg, Some(x_horizon))?;
            if !zo.growing {
                return Ok(Decision::BoundExceeded(zo.keys.len() as u64));
            }
            let mut zmin: HashMap<&[i32], u64> = HashMap::new();
            for (s, key) in zo.keys.iter().enumerate() {
                zmin.entry(key.as_slice()).or_insert(s as u64);
            }
            let mut hit = None;
            for (r, key) in xo.keys[..xo.complete_len()].iter().enumerate() {
                if let Some(&s) = zmin.get(key.as_slice()) {
                    hit = Some((r as u64, s));
                    break;
                }
            }
            match hit {
                Some(p) => Decision::Found(p),
                None => Decision::Refuted,
            }
        }
        (None, None) => {
            // Both orbits grow: any partner of a given x class sits
            // where the z cores have comparable length, so each first
            // coordinate is settled exactly; the search over first
            // coordinates itself is budget-bounded.
            let mut zmin: HashMap<&[i32], u64> = HashMap::new();
            for (s, key) in zo.keys.iter().enumerate() {
                zmin.entry(key.as_slice()).or_insert(s as u64);
            }
            let z_scanned_past = zo.cores.last().map(|c| c.len()).unwrap_or(0);
            let mut hit = None;
            for (r, key) in xo.keys.iter().enumerate() {
                if xo.cores[r].len() > z_scanned_past {
                    // Partners for this and later steps could lie past
                    // the scanned z lengths.
                    break;
                }
                if let Some(&s) = zmin.get(key.as_slice()) {
                    hit = Some((r as u64, s));
                    break;
                }
            }
            match hit {
                Some(p) => Decision::Found(p),
                // No certified emptiness: later first coordinates are
                // never exhausted.
                None => Decision::BoundExceeded(xo.keys.len() as u64),
            }
        }
    };
    let (r1, s1) = match minimal {
        Decision::Found(p) => p,
        Decision::Refuted => return Ok(Decision::Refuted),
        Decision::BoundExceeded(at) => return Ok(Decision::BoundExceeded(at)),
    };
    let (q_z, p_z) = match zo.cycle {
        Some((entry, period)) => (Some(entry), Some(period)),
        None => (None, None),
    };
    let set = three_case_set(r1, s1, zo.cycle);
    let report = PairSetReport { r1, s1, q_z, p_z, set };
    verify_report_members(phi, x, z, &report, cfg)?;
    Ok(Decision::Found(report))
}

/// Re-verifies small members of every component of the emitted set by
/// direct conjugacy tests, skipping members whose words outgrow the
/// length budget.
fn verify_report_members(
    phi: &FreeMap,
    x: &ReducedWord,
    z: &ReducedWord,
    report: &PairSetReport,
    cfg: &OracleConfig,
) -> Result<()> {
    let mut members: Vec<(u64, u64)> = Vec::new();
    let mut finite = report.set.finite.clone();
    finite.sort_unstable();
    members.extend(finite.into_iter().take(3));
    for d in &report.set.diagonals {
        for t in 0..3u64 {
            members.push((d.base.0 + t * d.step, d.base.1 + t * d.step));
        }
    }
    for f in &report.set.fulls {
        members.push(f.base);
        members.push((f.base.0 + 1, f.base.1 + 1));
        members.push((f.base.0 + f.period, f.base.1));
        members.push((f.base.0, f.base.1 + f.period));
    }
    let max_exp = members.iter().map(|&(r, s)| r.max(s)).max().unwrap_or(0);
    let xs = bounded_orbit(phi, x, max_exp, cfg.max_word_length)?;
    let zs = bounded_orbit(phi, z, max_exp, cfg.max_word_length)?;
    for (r, s) in members {
        let (Some(xr), Some(zs_)) = (xs.get(r as usize), zs.get(s as usize)) else {
            continue;
        };
        if !xr.is_conjugate(zs_)? {
            return Err(Error::Verification(format!(
                "emitted pair ({r}, {s}) fails the conjugacy test"
            )));
        }
    }
    Ok(())
}

/// Forward orbit `x, phi(x), ..., phi^k(x)`, truncated when a word
/// outgrows the cap.
fn bounded_orbit(
    phi: &FreeMap,
    x: &ReducedWord,
    k: u64,
    cap: usize,
) -> Result<Vec<ReducedWord>> {
    let mut out = vec![x.clone()];
    for _ in 0..k {
        let next = phi.apply(out.last().unwrap())?;
        if next.len() > cap {
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// Searches for a pair `(r, s)` with `Phi^r(from)` conjugate to
/// `Phi^s(to)` for an injective product endomorphism. `Found` pairs are
/// re-verified by direct computation before being returned.
pub fn two_brcp(
    endo: &ProductEndo,
    from: &ProductElement,
    to: &ProductElement,
    cfg: &OracleConfig,
) -> Result<Decision<(u64, u64)>> {
    if !endo.is_injective() {
        return Err(Error::NotInjective);
    }
    for g in [from, to] {
        if g.ranks() != (endo.n(), endo.m()) {
            return Err(Error::RankMismatch { left: g.ranks().0, right: endo.n() });
        }
    }
    let decision = match endo.type_data() {
        TypeData::VI { phi, psi } => componentwise_pair(phi, psi, from, to, cfg)?,
        TypeData::VII { phi, psi } => {
            // Squaring the swapped form acts componentwise, so each
            // parity quadrant is a componentwise instance on the
            // squares with shifted inputs.
            let first_sq = phi.compose(psi)?;
            let second_sq = psi.compose(phi)?;
            let from_odd = ProductElement::new(psi.apply(&from.second)?, phi.apply(&from.first)?);
            let to_odd = ProductElement::new(psi.apply(&to.second)?, phi.apply(&to.first)?);
            let quadrants = [
                (componentwise_pair(&first_sq, &second_sq, from, to, cfg)?, (0, 0)),
                (componentwise_pair(&first_sq, &second_sq, &from_odd, to, cfg)?, (1, 0)),
                (componentwise_pair(&first_sq, &second_sq, from, &to_odd, cfg)?, (0, 1)),
                (componentwise_pair(&first_sq, &second_sq, &from_odd, &to_odd, cfg)?, (1, 1)),
            ];
            let mut best: Option<(u64, u64)> = None;
            let mut exhausted: Option<u64> = None;
            for (dec, (dr, ds)) in quadrants {
                match dec {
                    Decision::Found((r, s)) => {
                        let cand = (2 * r + dr, 2 * s + ds);
                        let smaller = best.is_none_or(|b| {
                            (cand.0 + cand.1, cand.0) < (b.0 + b.1, b.0)
                        });
                        if smaller {
                            best = Some(cand);
                        }
                    }
                    Decision::Refuted => {}
                    Decision::BoundExceeded(at) => {
                        exhausted = Some(exhausted.map_or(at, |e| e.min(at)));
                    }
                }
            }
            match (best, exhausted) {
                (Some(p), _) => Decision::Found(p),
                (None, Some(at)) => Decision::BoundExceeded(at),
                (None, None) => Decision::Refuted,
            }
        }
        _ => {
            return Err(Error::WrongType(
                "two-sided search needs a componentwise or swapped form".into(),
            ))
        }
    };
    if let Decision::Found((r, s)) = decision {
        let g = endo.iterate(from, r)?;
        let h = endo.iterate(to, s)?;
        if !g.is_conjugate(&h)? {
            return Err(Error::Verification(format!(
                "pair ({r}, {s}) fails the conjugacy test"
            )));
        }
    }
    Ok(decision)
}

/// Componentwise two-sided search: intersects the pair sets of the two
/// coordinates.
fn componentwise_pair(
    phi: &FreeMap,
    psi: &FreeMap,
    from: &ProductElement,
    to: &ProductElement,
    cfg: &OracleConfig,
) -> Result<Decision<(u64, u64)>> {
    let d1 = compute_pair_solution_set(phi, &from.first, &to.first, cfg)?;
    let d2 = compute_pair_solution_set(psi, &from.second, &to.second, cfg)?;
    Ok(match (d1, d2) {
        (Decision::Refuted, _) | (_, Decision::Refuted) => Decision::Refuted,
        (Decision::BoundExceeded(a), Decision::BoundExceeded(b)) => {
            Decision::BoundExceeded(a.min(b))
        }
        (Decision::BoundExceeded(at), _) | (_, Decision::BoundExceeded(at)) => {
            Decision::BoundExceeded(at)
        }
        (Decision::Found(r1), Decision::Found(r2)) => {
            // Joint solutions are closed under the diagonal shift, so
            // some joint solution lies in both emitted sets whenever
            // any exists at all; an empty intersection refutes.
            match pair_intersect_nonempty(&r1.set, &r2.set) {
                Some(p) => Decision::Found(p),
                None => Decision::Refuted,
            }
        }
    })
}

/// Solves `(x, y) = Phi(u, v)^{-1} (z, w) (u, v)` for an injective
/// product endomorphism, returning a verified witness `(u, v)`. The
/// underlying conjugator search is bounded, so exhaustion reports
/// `BoundExceeded` rather than refuting.
pub fn tcp(
    endo: &ProductEndo,
    from: &ProductElement,
    to: &ProductElement,
    cfg: &OracleConfig,
) -> Result<Decision<ProductElement>> {
    if !endo.is_injective() {
        return Err(Error::NotInjective);
    }
    for g in [from, to] {
        if g.ranks() != (endo.n(), endo.m()) {
            return Err(Error::RankMismatch { left: g.ranks().0, right: endo.n() });
        }
    }
    let decision = match endo.type_data() {
        TypeData::VI { phi, psi } => {
            // The equation splits into one twisted-conjugacy instance
            // per coordinate.
            let du = twisted_conj(phi, &from.first, &to.first, cfg)?;
            let dv = twisted_conj(psi, &from.second, &to.second, cfg)?;
            match (du, dv) {
                (Decision::Found(u), Decision::Found(v)) => {
                    Decision::Found(ProductElement::new(u, v))
                }
                (Decision::Refuted, _) | (_, Decision::Refuted) => Decision::Refuted,
                (Decision::BoundExceeded(a), Decision::BoundExceeded(b)) => {
                    Decision::BoundExceeded(a.min(b))
                }
                (Decision::BoundExceeded(at), _) | (_, Decision::BoundExceeded(at)) => {
                    Decision::BoundExceeded(at)
                }
            }
        }
        TypeData::VII { phi, psi } => {
            // Eliminating u leaves one second-factor instance for v
            // under the composed square; u is then reconstructed.
            let second_sq = psi.compose(phi)?;
            let lhs = phi.apply(&from.first)?.multiply(&from.second)?;
            let rhs = phi.apply(&to.first)?.multiply(&to.second)?;
            match twisted_conj(&second_sq, &lhs, &rhs, cfg)? {
                Decision::Found(v) => {
                    let u = to
                        .first
                        .invert()
                        .multiply(&psi.apply(&v)?)?
                        .multiply(&from.first)?;
                    Decision::Found(ProductElement::new(u, v))
                }
                Decision::Refuted => Decision::Refuted,
                Decision::BoundExceeded(at) => Decision::BoundExceeded(at),
            }
        }
        _ => {
            return Err(Error::WrongType(
                "twisted conjugacy needs a componentwise or swapped form".into(),
            ))
        }
    };
    if let Decision::Found(witness) = &decision {
        let lhs = endo.apply(&witness.invert())?.multiply(to)?.multiply(witness)?;
        if &lhs != from {
            return Err(Error::Verification("twisted witness fails the defining equation".into()));
        }
    }
    Ok(decision)
}
