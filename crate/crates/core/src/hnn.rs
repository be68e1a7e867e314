//! Normal forms and the word problem for the extension of the product
//! group by a stable letter `t` conjugating along an injective
//! endomorphism: `t^-1 g t = Phi(g)`.
//!
//! Every element has a unique reduced form `t^i g t^-j` with natural
//! `i`, `j` and `g` in the base group, where `i, j >= 1` forces
//! `g` outside the image of the map. Words over the base group and
//! `t^±1` are folded into this form exactly, using image membership
//! with preimage readback for the `t g t^-1` reductions.

use crate::maps::{ProductElement, ProductEndo, TypeData};
use crate::{Error, Result};

/// Hard cap on base-element word length during rewriting.
const LENGTH_CAP: usize = 1 << 20;

/// A reduced element `t^i g t^-j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HnnElement {
    pub i: u64,
    pub g: ProductElement,
    pub j: u64,
}

impl HnnElement {
    /// The factor sequence spelling this element back out.
    pub fn to_factors(&self) -> Vec<HnnFactor> {
        let mut out = Vec::new();
        if self.i > 0 {
            out.push(HnnFactor::T(self.i as i64));
        }
        out.push(HnnFactor::G(self.g.clone()));
        if self.j > 0 {
            out.push(HnnFactor::T(-(self.j as i64)));
        }
        out
    }
}

/// One factor of an input word: a power of the stable letter or an
/// element of the base group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HnnFactor {
    T(i64),
    G(ProductElement),
}

/// Preimage of `g` under an injective product endomorphism, when `g`
/// lies in its image. Componentwise exact computation; no search.
fn phi_preimage(endo: &ProductEndo, g: &ProductElement) -> Result<Option<ProductElement>> {
    let pre = match endo.type_data() {
        TypeData::VI { phi, psi } => match (phi.preimage(&g.first)?, psi.preimage(&g.second)?) {
            (Some(a), Some(b)) => Some(ProductElement::new(a, b)),
            _ => None,
        },
        TypeData::VII { phi, psi } => {
            // The swapped form sends (p, q) to (psi(q), phi(p)).
            match (phi.preimage(&g.second)?, psi.preimage(&g.first)?) {
                (Some(a), Some(b)) => Some(ProductElement::new(a, b)),
                _ => None,
            }
        }
        _ => {
            return Err(Error::WrongType(
                "stable-letter reduction needs a componentwise or swapped form".into(),
            ))
        }
    };
    if let Some(p) = &pre {
        debug_assert_eq!(&endo.apply(p)?, g);
    }
    Ok(pre)
}

/// Applies the endomorphism `k` times with a length guard.
fn capped_iterate(endo: &ProductEndo, g: &ProductElement, k: u64) -> Result<ProductElement> {
    let mut cur = g.clone();
    for _ in 0..k {
        cur = endo.apply(&cur)?;
        if cur.len() > LENGTH_CAP {
            return Err(Error::WordLengthCap(cur.len()));
        }
    }
    Ok(cur)
}

/// Folds a word over the base group and the stable letter into the
/// reduced form `t^i g t^-j`.
///
/// Multiplying the running form on the right: a base element `h`
/// crosses the trailing `t^-j` as its `j`-th image; a positive stable
/// letter either cancels into the trailing block or wraps the base
/// element into its image; a negative stable letter extends the
/// trailing block and then peels any `t h t^-1` with `h` in the image
/// down to the preimage.
pub fn hnn_normalize(endo: &ProductEndo, word: &[HnnFactor]) -> Result<HnnElement> {
    if !endo.is_injective() {
        return Err(Error::NotInjective);
    }
    let mut i: u64 = 0;
    let mut g = endo.identity_element();
    let mut j: u64 = 0;
    for factor in word {
        match factor {
            HnnFactor::G(h) => {
                if h.ranks() != (endo.n(), endo.m()) {
                    return Err(Error::RankMismatch { left: h.ranks().0, right: endo.n() });
                }
                let shifted = capped_iterate(endo, h, j)?;
                g = g.multiply(&shifted)?;
                if g.len() > LENGTH_CAP {
                    return Err(Error::WordLengthCap(g.len()));
                }
            }
            HnnFactor::T(k) => {
                for _ in 0..k.unsigned_abs() {
                    if *k > 0 {
                        if j > 0 {
                            j -= 1;
                        } else {
                            g = endo.apply(&g)?;
                            if g.len() > LENGTH_CAP {
                                return Err(Error::WordLengthCap(g.len()));
                            }
                            i += 1;
                        }
                    } else {
                        j += 1;
                        while i >= 1 && j >= 1 {
                            match phi_preimage(endo, &g)? {
                                Some(pre) => {
                                    g = pre;
                                    i -= 1;
                                    j -= 1;
                                }
                                None => break,
                            }
                        }
                    }
                }
            }
        }
    }
    debug_assert!(!(i >= 1 && j >= 1 && phi_preimage(endo, &g)?.is_some()));
    Ok(HnnElement { i, g, j })
}

/// Word problem: reduced forms are unique, so equality of elements is
/// componentwise equality of their forms (relative to the same map).
pub fn hnn_equal(a: &HnnElement, b: &HnnElement) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::FreeMap;
    use crate::words::ReducedWord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rw(rank: usize, s: &str) -> ReducedWord {
        let letters: Vec<i32> = s
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .map(|c| {
                if c.is_ascii_lowercase() {
                    (c as i32) - ('a' as i32) + 1
                } else {
                    -((c as i32) - ('A' as i32) + 1)
                }
            })
            .collect();
        ReducedWord::reduce(rank, &letters).unwrap()
    }

    fn vi_endo(phi: &FreeMap, psi: &FreeMap) -> ProductEndo {
        let n = phi.domain_rank();
        let m = psi.domain_rank();
        let a = phi
            .images()
            .iter()
            .map(|w| ProductElement::new(w.clone(), ReducedWord::identity(m)))
            .collect();
        let b = psi
            .images()
            .iter()
            .map(|w| ProductElement::new(ReducedWord::identity(n), w.clone()))
            .collect();
        ProductEndo::new(n, m, a, b).unwrap()
    }

    fn doubling_endo() -> ProductEndo {
        // First component doubles a and fixes b, second is untouched:
        // injective with a proper image.
        let phi = FreeMap::new(2, 2, vec![rw(2, "aa"), rw(2, "b")]).unwrap();
        vi_endo(&phi, &FreeMap::identity(2))
    }

    fn pe(f: &str, s: &str) -> ProductElement {
        ProductElement::new(rw(2, f), rw(2, s))
    }

    #[test]
    fn plain_base_element() {
        let endo = doubling_endo();
        let g = pe("ab", "ba");
        let e = hnn_normalize(&endo, &[HnnFactor::G(g.clone())]).unwrap();
        assert_eq!(e, HnnElement { i: 0, g, j: 0 });
    }

    #[test]
    fn conjugation_relation() {
        // t^-1 g t rewrites to the image of g.
        let endo = doubling_endo();
        let g = pe("ab", "ba");
        let word = [HnnFactor::T(-1), HnnFactor::G(g.clone()), HnnFactor::T(1)];
        let e = hnn_normalize(&endo, &word).unwrap();
        assert_eq!(e, HnnElement { i: 0, g: endo.apply(&g).unwrap(), j: 0 });
    }

    #[test]
    fn reverse_conjugation_splits_on_membership() {
        let endo = doubling_endo();
        // In the image: the preimage comes back out.
        let h = pe("ab", "ba");
        let img = endo.apply(&h).unwrap();
        let word = [HnnFactor::T(1), HnnFactor::G(img), HnnFactor::T(-1)];
        let e = hnn_normalize(&endo, &word).unwrap();
        assert_eq!(e, HnnElement { i: 0, g: h, j: 0 });
        // Outside the image: the stable letters stay.
        let g = pe("a", "");
        let word = [HnnFactor::T(1), HnnFactor::G(g.clone()), HnnFactor::T(-1)];
        let e = hnn_normalize(&endo, &word).unwrap();
        assert_eq!(e, HnnElement { i: 1, g, j: 1 });
    }

    #[test]
    fn iterated_conjugation() {
        let endo = doubling_endo();
        let g = pe("ab", "b");
        for k in 0..=5u64 {
            let mut word = vec![HnnFactor::T(-(k as i64)), HnnFactor::G(g.clone())];
            word.push(HnnFactor::T(k as i64));
            let e = hnn_normalize(&endo, &word).unwrap();
            assert_eq!(e, HnnElement { i: 0, g: endo.iterate(&g, k).unwrap(), j: 0 }, "k = {k}");
        }
    }

    #[test]
    fn swapped_form_preimage() {
        // Swapped-form map with identity components on equal ranks: the
        // image is everything, so t g t^-1 always reduces.
        let a = (1..=2i32)
            .map(|i| {
                ProductElement::new(
                    ReducedWord::identity(2),
                    ReducedWord::reduce(2, &[i]).unwrap(),
                )
            })
            .collect();
        let b = (1..=2i32)
            .map(|j| {
                ProductElement::new(
                    ReducedWord::reduce(2, &[j]).unwrap(),
                    ReducedWord::identity(2),
                )
            })
            .collect();
        let endo = ProductEndo::new(2, 2, a, b).unwrap();
        let g = pe("ab", "ba");
        let word = [HnnFactor::T(1), HnnFactor::G(g.clone()), HnnFactor::T(-1)];
        let e = hnn_normalize(&endo, &word).unwrap();
        assert_eq!(e.i, 0);
        assert_eq!(e.j, 0);
        assert_eq!(endo.apply(&e.g).unwrap(), g);
    }

    #[test]
    fn non_injective_rejected() {
        let phi = FreeMap::new(2, 2, vec![rw(2, "a"), rw(2, "a")]).unwrap();
        let endo = vi_endo(&phi, &FreeMap::identity(2));
        let err = hnn_normalize(&endo, &[HnnFactor::G(pe("a", "b"))]);
        assert!(matches!(err, Err(Error::NotInjective)));
    }

    fn random_word(rng: &mut ChaCha8Rng, endo: &ProductEndo) -> Vec<HnnFactor> {
        let mut word = Vec::new();
        for _ in 0..rng.gen_range(0..8) {
            if rng.gen_bool(0.5) {
                word.push(HnnFactor::T(rng.gen_range(-2..=2)));
            } else {
                word.push(HnnFactor::G(ProductElement::new(
                    ReducedWord::random(endo.n(), rng.gen_range(0..=3), rng),
                    ReducedWord::random(endo.m(), rng.gen_range(0..=3), rng),
                )));
            }
        }
        word
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1_234);
        let endo = doubling_endo();
        for _ in 0..200 {
            let word = random_word(&mut rng, &endo);
            let e = hnn_normalize(&endo, &word).unwrap();
            let again = hnn_normalize(&endo, &e.to_factors()).unwrap();
            assert!(hnn_equal(&e, &again), "{e:?} vs {again:?}");
        }
    }

    #[test]
    fn relator_is_invisible() {
        // Appending t^-1 h t Phi(h)^-1 never changes the reduced form.
        let mut rng = ChaCha8Rng::seed_from_u64(5_678);
        let endo = doubling_endo();
        for _ in 0..200 {
            let word = random_word(&mut rng, &endo);
            let h = ProductElement::new(
                ReducedWord::random(endo.n(), rng.gen_range(0..=3), &mut rng),
                ReducedWord::random(endo.m(), rng.gen_range(0..=3), &mut rng),
            );
            let mut extended = word.clone();
            extended.extend([
                HnnFactor::T(-1),
                HnnFactor::G(h.clone()),
                HnnFactor::T(1),
                HnnFactor::G(endo.apply(&h).unwrap().invert()),
            ]);
            let e1 = hnn_normalize(&endo, &word).unwrap();
            let e2 = hnn_normalize(&endo, &extended).unwrap();
            assert!(hnn_equal(&e1, &e2), "{e1:?} vs {e2:?}");
        }
    }

    #[test]
    fn related_words_rewrite_equal() {
        // Short chains of relation applications inside a word leave the
        // form unchanged: insert the relator at random positions.
        let mut rng = ChaCha8Rng::seed_from_u64(9_090);
        let endo = doubling_endo();
        for _ in 0..120 {
            let mut word = random_word(&mut rng, &endo);
            let base = hnn_normalize(&endo, &word).unwrap();
            for _ in 0..rng.gen_range(1..=3) {
                let h = ProductElement::new(
                    ReducedWord::random(endo.n(), rng.gen_range(0..=2), &mut rng),
                    ReducedWord::random(endo.m(), rng.gen_range(0..=2), &mut rng),
                );
                let relator = [
                    HnnFactor::T(-1),
                    HnnFactor::G(h.clone()),
                    HnnFactor::T(1),
                    HnnFactor::G(endo.apply(&h).unwrap().invert()),
                ];
                let at = rng.gen_range(0..=word.len());
                word.splice(at..at, relator);
            }
            let rewritten = hnn_normalize(&endo, &word).unwrap();
            assert!(hnn_equal(&base, &rewritten), "{base:?} vs {rewritten:?}");
        }
    }
}
