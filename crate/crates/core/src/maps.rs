//! Homomorphisms between free groups, folded subgroup graphs with
//! membership expressions, and endomorphisms of a direct product of two
//! free groups with their seven-type classification.
//!
//! The subgroup machinery is a Stallings folding in which every edge
//! carries a word over the subgroup's abstract generators. Folding
//! preserves the property that the provenance product along any loop at
//! the base maps to the loop's label, so a successful membership query
//! returns a self-certifying expression of the queried word as a
//! product of the generators.

use crate::words::{ExponentVector, ReducedWord};
use crate::{Error, Result};
use std::collections::{HashMap, VecDeque};
use std::fmt;

/// Appends one letter to a reduced letter stack, cancelling an inverse
/// pair instead of stacking it; repeated pushes free-reduce a stream.
fn push_reduced(out: &mut Vec<i32>, l: i32) {
    if out.last().is_some_and(|&p| p == -l) {
        out.pop();
    } else {
        out.push(l);
    }
}

/// A homomorphism between free groups, given by generator images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeMap {
    domain_rank: usize,
    codomain_rank: usize,
    images: Vec<ReducedWord>,
}

impl FreeMap {
    pub fn new(domain_rank: usize, codomain_rank: usize, images: Vec<ReducedWord>) -> Result<Self> {
        if images.len() != domain_rank {
            return Err(Error::ImageCount { got: images.len(), expected: domain_rank });
        }
        for w in &images {
            if w.rank() != codomain_rank {
                return Err(Error::RankMismatch { left: w.rank(), right: codomain_rank });
            }
        }
        Ok(FreeMap { domain_rank, codomain_rank, images })
    }

    pub fn identity(rank: usize) -> Self {
        let images = (1..=rank)
            .map(|i| ReducedWord::generator(rank, i).expect("index in range"))
            .collect();
        FreeMap { domain_rank: rank, codomain_rank: rank, images }
    }

    /// The map sending every generator to the identity.
    pub fn trivial(domain_rank: usize, codomain_rank: usize) -> Self {
        let images = vec![ReducedWord::identity(codomain_rank); domain_rank];
        FreeMap { domain_rank, codomain_rank, images }
    }

    pub fn domain_rank(&self) -> usize {
        self.domain_rank
    }

    pub fn codomain_rank(&self) -> usize {
        self.codomain_rank
    }

    pub fn images(&self) -> &[ReducedWord] {
        &self.images
    }

    pub fn is_trivial(&self) -> bool {
        self.images.iter().all(ReducedWord::is_identity)
    }

    pub fn is_endo(&self) -> bool {
        self.domain_rank == self.codomain_rank
    }

    /// Applies the homomorphism to a word of the domain.
    ///
    /// Streams the image letters through one cancellation stack, so a
    /// single application costs time linear in the output size rather
    /// than re-reducing a growing accumulator per input letter.
    pub fn apply(&self, w: &ReducedWord) -> Result<ReducedWord> {
        if w.rank() != self.domain_rank {
            return Err(Error::RankMismatch { left: w.rank(), right: self.domain_rank });
        }
        let mut out: Vec<i32> = Vec::new();
        for &l in w.letters() {
            let img = self.images[l.unsigned_abs() as usize - 1].letters();
            if l > 0 {
                for &il in img {
                    push_reduced(&mut out, il);
                }
            } else {
                for &il in img.iter().rev() {
                    push_reduced(&mut out, -il);
                }
            }
        }
        Ok(ReducedWord::from_reduced_unchecked(self.codomain_rank, out))
    }

    /// `compose(f, g)` applies `f` first: `compose(f, g)(u) = g(f(u))`.
    pub fn compose(&self, then: &FreeMap) -> Result<FreeMap> {
        if self.codomain_rank != then.domain_rank {
            return Err(Error::RankMismatch { left: self.codomain_rank, right: then.domain_rank });
        }
        let images = self
            .images
            .iter()
            .map(|w| then.apply(w))
            .collect::<Result<Vec<_>>>()?;
        FreeMap::new(self.domain_rank, then.codomain_rank, images)
    }

    /// Applies the map `k` times; requires an endomorphism when `k >= 2`.
    pub fn iterate(&self, w: &ReducedWord, k: u64) -> Result<ReducedWord> {
        if k >= 2 && !self.is_endo() {
            return Err(Error::RankMismatch { left: self.domain_rank, right: self.codomain_rank });
        }
        let mut cur = w.clone();
        for _ in 0..k {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Integer matrix of the induced map on abelianizations: entry
    /// `[i][j]` is the exponent sum of generator `i+1` in the image of
    /// generator `j+1`, so column `j` is the abelianization of image `j`.
    pub fn abelianization_matrix(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.domain_rank]; self.codomain_rank];
        for (j, w) in self.images.iter().enumerate() {
            for (i, &e) in w.abelianization().iter().enumerate() {
                m[i][j] = e;
            }
        }
        m
    }

    /// Folded graph of the image subgroup.
    pub fn image_graph(&self) -> SubgroupGraph {
        SubgroupGraph::new(self.codomain_rank, &self.images)
    }

    /// Injectivity via the image rank: a map of a rank-`n` free group is
    /// injective exactly when its image has rank `n` (free groups are
    /// Hopfian, so a full-rank image leaves no kernel).
    pub fn is_injective(&self) -> bool {
        self.image_graph().rank() == self.domain_rank
    }

    /// Surjectivity: the image's folded graph is the rose over the whole
    /// codomain alphabet.
    pub fn is_surjective(&self) -> bool {
        self.image_graph().is_rose()
    }

    pub fn is_automorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// A preimage of `w`, when `w` lies in the image subgroup. The
    /// returned word maps to `w` exactly.
    pub fn preimage(&self, w: &ReducedWord) -> Result<Option<ReducedWord>> {
        if w.rank() != self.codomain_rank {
            return Err(Error::RankMismatch { left: w.rank(), right: self.codomain_rank });
        }
        match self.image_graph().member(w) {
            None => Ok(None),
            Some(expr) => {
                debug_assert_eq!(&self.apply(&expr).unwrap(), w);
                Ok(Some(expr))
            }
        }
    }
}

/// Folded subgroup graph with provenance-carrying edges.
///
/// Vertices are numbered with the base at `0`. For each vertex the
/// adjacency map sends a signed letter to the edge's far endpoint and
/// the provenance of traversing the edge in that direction — a word
/// over the abstract generators `x_1, ..., x_k` of the subgroup. The
/// provenance product along any closed path at the base maps to the
/// path's label under `x_i -> generator_i`.
#[derive(Clone, Debug)]
pub struct SubgroupGraph {
    ambient_rank: usize,
    generators: Vec<ReducedWord>,
    adj: Vec<HashMap<i32, (usize, ReducedWord)>>,
}

/// Builds the folded graph of the subgroup generated by the given words.
pub fn stallings(ambient_rank: usize, generators: &[ReducedWord]) -> SubgroupGraph {
    SubgroupGraph::new(ambient_rank, generators)
}

impl SubgroupGraph {
    pub fn new(ambient_rank: usize, generators: &[ReducedWord]) -> Self {
        for g in generators {
            assert_eq!(g.rank(), ambient_rank, "generator rank mismatch");
        }
        let mut b = FoldBuilder::new(generators.len());
        for (i, g) in generators.iter().enumerate() {
            b.add_petal(i, g);
        }
        b.fold();
        b.compact(ambient_rank, generators.to_vec())
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn generators(&self) -> &[ReducedWord] {
        &self.generators
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(HashMap::len).sum::<usize>() / 2
    }

    /// Rank of the subgroup: `|E| - |V| + 1` of the folded core graph.
    pub fn rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    /// Whether the graph is the rose over the full ambient alphabet,
    /// i.e. the subgroup is the whole group.
    pub fn is_rose(&self) -> bool {
        self.vertex_count() == 1 && (1..=self.ambient_rank as i32).all(|a| self.adj[0].contains_key(&a))
    }

    /// Membership with certificate: traces `w` from the base; on success
    /// returns the provenance word, an expression over the abstract
    /// generators whose image is exactly `w`.
    pub fn member(&self, w: &ReducedWord) -> Option<ReducedWord> {
        assert_eq!(w.rank(), self.ambient_rank, "word rank mismatch");
        let k = self.generators.len();
        let mut cur = 0usize;
        let mut expr = ReducedWord::identity(k);
        for &l in w.letters() {
            let (next, d) = self.adj[cur].get(&l)?;
            expr = expr.multiply(d).expect("provenance ranks agree");
            cur = *next;
        }
        if cur != 0 {
            return None;
        }
        debug_assert_eq!(&self.theta(&expr).unwrap(), w);
        Some(expr)
    }

    pub fn contains(&self, w: &ReducedWord) -> bool {
        self.member(w).is_some()
    }

    /// Evaluates an expression over the abstract generators to a word of
    /// the ambient group.
    pub fn theta(&self, expr: &ReducedWord) -> Result<ReducedWord> {
        let map = FreeMap::new(self.generators.len(), self.ambient_rank, self.generators.clone())?;
        map.apply(expr)
    }
}

/// Multigraph state used while folding.
struct FoldBuilder {
    gen_count: usize,
    adj: Vec<HashMap<i32, Vec<(usize, ReducedWord)>>>,
    alive: Vec<bool>,
    queue: VecDeque<usize>,
}

impl FoldBuilder {
    fn new(gen_count: usize) -> Self {
        FoldBuilder {
            gen_count,
            adj: vec![HashMap::new()],
            alive: vec![true],
            queue: VecDeque::new(),
        }
    }

    fn new_vertex(&mut self) -> usize {
        self.adj.push(HashMap::new());
        self.alive.push(true);
        self.adj.len() - 1
    }

    fn add_entry(&mut self, u: usize, letter: i32, v: usize, d: ReducedWord) {
        self.adj[u].entry(letter).or_default().push((v, d));
    }

    /// Inserts the undirected edge `u --letter--> v` with forward
    /// provenance `d`.
    fn add_edge(&mut self, u: usize, letter: i32, v: usize, d: ReducedWord) {
        let dinv = d.invert();
        self.add_entry(u, letter, v, d);
        self.add_entry(v, -letter, u, dinv);
    }

    /// Adds the loop at the base spelling generator `i`; the provenance
    /// `x_{i+1}` sits on the first edge and the rest carry the identity.
    fn add_petal(&mut self, i: usize, g: &ReducedWord) {
        let letters = g.letters();
        if letters.is_empty() {
            return;
        }
        let one = ReducedWord::identity(self.gen_count);
        let xi = ReducedWord::generator(self.gen_count, i + 1).expect("index in range");
        let mut prev = 0usize;
        for (pos, &l) in letters.iter().enumerate() {
            let next = if pos + 1 == letters.len() { 0 } else { self.new_vertex() };
            let prov = if pos == 0 { xi.clone() } else { one.clone() };
            self.add_edge(prev, l, next, prov);
            prev = next;
        }
        self.queue.push_back(0);
    }

    /// Removes one occurrence of the entry `(target, prov)` from the
    /// given slot.
    fn remove_entry(&mut self, u: usize, letter: i32, target: usize, prov: &ReducedWord) {
        let slot = self.adj[u].get_mut(&letter).expect("slot exists");
        let pos = slot
            .iter()
            .position(|(t, d)| *t == target && d == prov)
            .expect("counterpart entry exists");
        slot.swap_remove(pos);
        if slot.is_empty() {
            self.adj[u].remove(&letter);
        }
    }

    /// Finds a slot at `u` holding two entries, if any.
    fn find_conflict(&self, u: usize) -> Option<i32> {
        self.adj[u]
            .iter()
            .find(|(_, slot)| slot.len() >= 2)
            .map(|(&letter, _)| letter)
    }

    fn fold(&mut self) {
        while let Some(u) = self.queue.pop_front() {
            if !self.alive[u] {
                continue;
            }
            while let Some(letter) = self.find_conflict(u) {
                let slot = &self.adj[u][&letter];
                let (t0, d0) = slot[0].clone();
                let (t1, d1) = slot[1].clone();
                if t0 == t1 {
                    // Parallel edges (identical endpoints and label): the
                    // second is redundant; dropping it only removes paths,
                    // so the provenance invariant is untouched.
                    self.remove_entry(u, letter, t1, &d1);
                    self.remove_entry(t1, -letter, u, &d1.invert());
                } else {
                    // Merge one endpoint into the other; the base vertex
                    // is never merged away.
                    let (keeper, dk, victim, dv) =
                        if t1 == 0 { (t1, d1, t0, d0) } else { (t0, d0, t1, d1) };
                    let gauge = dk.invert().multiply(&dv).expect("provenance ranks agree");
                    self.merge(victim, keeper, &gauge);
                    self.queue.push_back(u);
                }
            }
        }
    }

    /// Merges `victim` into `keeper`. Every edge of `victim` is rerouted
    /// to `keeper` with its outgoing provenance premultiplied by the
    /// gauge word, which keeps the provenance product of every rerouted
    /// path unchanged.
    fn merge(&mut self, victim: usize, keeper: usize, gauge: &ReducedWord) {
        debug_assert_ne!(victim, keeper);
        debug_assert_ne!(victim, 0, "base vertex is never merged away");
        self.alive[victim] = false;
        let slots: Vec<(i32, Vec<(usize, ReducedWord)>)> = self.adj[victim].drain().collect();
        for (letter, entries) in slots {
            for (w, d) in entries {
                if w == victim {
                    // Self-loop: both stored directions arrive here; act
                    // on the positively-keyed copy and write both halves.
                    if letter < 0 {
                        continue;
                    }
                    let nd = gauge
                        .multiply(&d)
                        .and_then(|t| t.multiply(&gauge.invert()))
                        .expect("provenance ranks agree");
                    self.add_entry(keeper, letter, keeper, nd.clone());
                    self.add_entry(keeper, -letter, keeper, nd.invert());
                } else {
                    self.remove_entry(w, -letter, victim, &d.invert());
                    let nd = gauge.multiply(&d).expect("provenance ranks agree");
                    self.add_entry(keeper, letter, w, nd.clone());
                    self.add_entry(w, -letter, keeper, nd.invert());
                    self.queue.push_back(w);
                }
            }
        }
        self.queue.push_back(keeper);
    }

    /// Renumbers live vertices and freezes single-entry slots.
    fn compact(self, ambient_rank: usize, generators: Vec<ReducedWord>) -> SubgroupGraph {
        let mut renumber = vec![usize::MAX; self.adj.len()];
        let mut count = 0usize;
        for (v, slot) in renumber.iter_mut().enumerate() {
            if self.alive[v] {
                *slot = count;
                count += 1;
            }
        }
        debug_assert_eq!(renumber[0], 0);
        let mut adj = vec![HashMap::new(); count];
        for v in 0..self.adj.len() {
            if !self.alive[v] {
                continue;
            }
            for (&letter, slot) in &self.adj[v] {
                assert_eq!(slot.len(), 1, "graph is folded");
                let (t, d) = &slot[0];
                debug_assert!(self.alive[*t]);
                adj[renumber[v]].insert(letter, (renumber[*t], d.clone()));
            }
        }
        SubgroupGraph { ambient_rank, generators, adj }
    }
}

/// An element of the direct product of two free groups.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProductElement {
    pub first: ReducedWord,
    pub second: ReducedWord,
}

impl ProductElement {
    pub fn new(first: ReducedWord, second: ReducedWord) -> Self {
        ProductElement { first, second }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        ProductElement { first: ReducedWord::identity(n), second: ReducedWord::identity(m) }
    }

    pub fn ranks(&self) -> (usize, usize) {
        (self.first.rank(), self.second.rank())
    }

    pub fn is_identity(&self) -> bool {
        self.first.is_identity() && self.second.is_identity()
    }

    /// Word length in the product: the sum of the component lengths.
    pub fn len(&self) -> usize {
        self.first.len() + self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        Ok(ProductElement {
            first: self.first.multiply(&other.first)?,
            second: self.second.multiply(&other.second)?,
        })
    }

    pub fn invert(&self) -> Self {
        ProductElement { first: self.first.invert(), second: self.second.invert() }
    }

    pub fn conjugate_by(&self, g: &Self) -> Result<Self> {
        Ok(ProductElement {
            first: self.first.conjugate_by(&g.first)?,
            second: self.second.conjugate_by(&g.second)?,
        })
    }

    /// Conjugacy in a direct product is componentwise.
    pub fn is_conjugate(&self, other: &Self) -> Result<bool> {
        Ok(self.first.is_conjugate(&other.first)? && self.second.is_conjugate(&other.second)?)
    }

    /// Key identifying the conjugacy class of the element.
    pub fn conjugacy_key(&self) -> (ReducedWord, ReducedWord) {
        (self.first.canonical_cyclic(), self.second.canonical_cyclic())
    }
}

impl fmt::Display for ProductElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}",
            crate::text::format_word(&self.first, crate::text::Alphabet::First),
            crate::text::format_word(&self.second, crate::text::Alphabet::Second)
        )
    }
}

impl fmt::Debug for ProductElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProductElement({self})")
    }
}

/// The seven endomorphism types of a direct product of two free groups,
/// keyed by which of the four image-component sets are trivial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EndoType {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl fmt::Display for EndoType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EndoType::I => "I",
            EndoType::II => "II",
            EndoType::III => "III",
            EndoType::IV => "IV",
            EndoType::V => "V",
            EndoType::VI => "VI",
            EndoType::VII => "VII",
        };
        f.write_str(s)
    }
}

/// Structural data extracted per type. Rebuilding the generator images
/// from this data reproduces the endomorphism exactly.
///
/// Writing `x^P` for the integer functional applied to a word, the
/// action on `(x, y)` is:
///
/// - I:   `(u^(x^P + y^R), v^(x^Q + y^S))`
/// - II:  `(phi(y), v^(x^Q + y^S))` with `phi` mapping the second factor
///   into the first
/// - III: `(u^(x^P + y^R), phi(y))`
/// - IV:  `(phi(y), psi(y))`
/// - V:   `(1, v^(x^Q + y^S))`
/// - VI:  `(phi(x), psi(y))`
/// - VII: `(psi(y), phi(x))` with `phi` from first factor to second and
///   `psi` the other way
#[derive(Clone, Debug)]
pub enum TypeData {
    I {
        u: ReducedWord,
        v: ReducedWord,
        p: ExponentVector,
        q: ExponentVector,
        r: ExponentVector,
        s: ExponentVector,
    },
    II {
        phi: FreeMap,
        v: ReducedWord,
        q: ExponentVector,
        s: ExponentVector,
    },
    III {
        u: ReducedWord,
        p: ExponentVector,
        r: ExponentVector,
        phi: FreeMap,
    },
    IV {
        phi: FreeMap,
        psi: FreeMap,
    },
    V {
        v: ReducedWord,
        q: ExponentVector,
        s: ExponentVector,
    },
    VI {
        phi: FreeMap,
        psi: FreeMap,
    },
    VII {
        phi: FreeMap,
        psi: FreeMap,
    },
}

/// A validated endomorphism of `F_n x F_m` with its classification.
#[derive(Clone, Debug)]
pub struct ProductEndo {
    n: usize,
    m: usize,
    a_images: Vec<ProductElement>,
    b_images: Vec<ProductElement>,
    type_tag: EndoType,
    type_data: TypeData,
}

impl ProductEndo {
    /// Validates generator images and classifies the endomorphism.
    ///
    /// `a_images[i]` is the image of the element with the `(i+1)`-th
    /// generator in the first coordinate and identity in the second;
    /// `b_images[j]` mirrors this for the second factor. Validity
    /// requires every `a`-image to commute with every `b`-image, which
    /// in each free factor means the components are powers of a common
    /// root.
    pub fn new(
        n: usize,
        m: usize,
        a_images: Vec<ProductElement>,
        b_images: Vec<ProductElement>,
    ) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::InvalidEndo("both factor ranks must be at least 2".into()));
        }
        if a_images.len() != n {
            return Err(Error::ImageCount { got: a_images.len(), expected: n });
        }
        if b_images.len() != m {
            return Err(Error::ImageCount { got: b_images.len(), expected: m });
        }
        for pe in a_images.iter().chain(&b_images) {
            if pe.first.rank() != n {
                return Err(Error::RankMismatch { left: pe.first.rank(), right: n });
            }
            if pe.second.rank() != m {
                return Err(Error::RankMismatch { left: pe.second.rank(), right: m });
            }
        }
        for (i, ai) in a_images.iter().enumerate() {
            for (j, bj) in b_images.iter().enumerate() {
                if !commutes(&ai.first, &bj.first)? || !commutes(&ai.second, &bj.second)? {
                    return Err(Error::NonCommutingImages { i: i + 1, j: j + 1 });
                }
            }
        }
        let (type_tag, type_data) = classify(n, m, &a_images, &b_images)?;
        let endo = ProductEndo { n, m, a_images, b_images, type_tag, type_data };
        debug_assert!({
            let (a, b) = endo.rebuild_images().unwrap();
            a == endo.a_images && b == endo.b_images
        });
        Ok(endo)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a_images(&self) -> &[ProductElement] {
        &self.a_images
    }

    pub fn b_images(&self) -> &[ProductElement] {
        &self.b_images
    }

    pub fn type_tag(&self) -> EndoType {
        self.type_tag
    }

    pub fn type_data(&self) -> &TypeData {
        &self.type_data
    }

    pub fn identity_element(&self) -> ProductElement {
        ProductElement::identity(self.n, self.m)
    }

    /// Applies the endomorphism to a product element.
    ///
    /// The two coordinates of the product multiply independently, so
    /// the image accumulates as two letter streams with inline
    /// cancellation, costing time linear in the output size.
    pub fn apply(&self, g: &ProductElement) -> Result<ProductElement> {
        if g.first.rank() != self.n {
            return Err(Error::RankMismatch { left: g.first.rank(), right: self.n });
        }
        if g.second.rank() != self.m {
            return Err(Error::RankMismatch { left: g.second.rank(), right: self.m });
        }
        let mut first: Vec<i32> = Vec::new();
        let mut second: Vec<i32> = Vec::new();
        let images = [&self.a_images, &self.b_images];
        for (side, letters) in [g.first.letters(), g.second.letters()].into_iter().enumerate() {
            for &l in letters {
                let img = &images[side][l.unsigned_abs() as usize - 1];
                if l > 0 {
                    for &il in img.first.letters() {
                        push_reduced(&mut first, il);
                    }
                    for &il in img.second.letters() {
                        push_reduced(&mut second, il);
                    }
                } else {
                    for &il in img.first.letters().iter().rev() {
                        push_reduced(&mut first, -il);
                    }
                    for &il in img.second.letters().iter().rev() {
                        push_reduced(&mut second, -il);
                    }
                }
            }
        }
        Ok(ProductElement::new(
            ReducedWord::from_reduced_unchecked(self.n, first),
            ReducedWord::from_reduced_unchecked(self.m, second),
        ))
    }

    /// Applies the endomorphism `k` times.
    pub fn iterate(&self, g: &ProductElement, k: u64) -> Result<ProductElement> {
        let mut cur = g.clone();
        for _ in 0..k {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Whether the endomorphism is injective: type VI or VII with
    /// injective components.
    pub fn is_injective(&self) -> bool {
        match &self.type_data {
            TypeData::VI { phi, psi } | TypeData::VII { phi, psi } => {
                phi.is_injective() && psi.is_injective()
            }
            _ => false,
        }
    }

    /// Whether the endomorphism is an automorphism: type VI with
    /// bijective components, or type VII (square case) likewise.
    pub fn is_automorphism(&self) -> bool {
        match &self.type_data {
            TypeData::VI { phi, psi } | TypeData::VII { phi, psi } => {
                phi.is_automorphism() && psi.is_automorphism()
            }
            _ => false,
        }
    }

    /// Reconstructs generator images from the extracted type data.
    fn rebuild_images(&self) -> Result<(Vec<ProductElement>, Vec<ProductElement>)> {
        let n = self.n;
        let m = self.m;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(m);
        match &self.type_data {
            TypeData::I { u, v, p, q, r, s } => {
                for i in 0..n {
                    a.push(ProductElement::new(u.pow(p.0[i]), v.pow(q.0[i])));
                }
                for j in 0..m {
                    b.push(ProductElement::new(u.pow(r.0[j]), v.pow(s.0[j])));
                }
            }
            TypeData::II { phi, v, q, s } => {
                for i in 0..n {
                    a.push(ProductElement::new(ReducedWord::identity(n), v.pow(q.0[i])));
                }
                for j in 0..m {
                    let bj = ReducedWord::generator(m, j + 1)?;
                    b.push(ProductElement::new(phi.apply(&bj)?, v.pow(s.0[j])));
                }
            }
            TypeData::III { u, p, r, phi } => {
                for i in 0..n {
                    a.push(ProductElement::new(u.pow(p.0[i]), ReducedWord::identity(m)));
                }
                for j in 0..m {
                    let bj = ReducedWord::generator(m, j + 1)?;
                    b.push(ProductElement::new(u.pow(r.0[j]), phi.apply(&bj)?));
                }
            }
            TypeData::IV { phi, psi } => {
                for _ in 0..n {
                    a.push(ProductElement::identity(n, m));
                }
                for j in 0..m {
                    let bj = ReducedWord::generator(m, j + 1)?;
                    b.push(ProductElement::new(phi.apply(&bj)?, psi.apply(&bj)?));
                }
            }
            TypeData::V { v, q, s } => {
                for i in 0..n {
                    a.push(ProductElement::new(ReducedWord::identity(n), v.pow(q.0[i])));
                }
                for j in 0..m {
                    b.push(ProductElement::new(ReducedWord::identity(n), v.pow(s.0[j])));
                }
            }
            TypeData::VI { phi, psi } => {
                for i in 0..n {
                    let ai = ReducedWord::generator(n, i + 1)?;
                    a.push(ProductElement::new(phi.apply(&ai)?, ReducedWord::identity(m)));
                }
                for j in 0..m {
                    let bj = ReducedWord::generator(m, j + 1)?;
                    b.push(ProductElement::new(ReducedWord::identity(n), psi.apply(&bj)?));
                }
            }
            TypeData::VII { phi, psi } => {
                for i in 0..n {
                    let ai = ReducedWord::generator(n, i + 1)?;
                    a.push(ProductElement::new(ReducedWord::identity(n), phi.apply(&ai)?));
                }
                for j in 0..m {
                    let bj = ReducedWord::generator(m, j + 1)?;
                    b.push(ProductElement::new(psi.apply(&bj)?, ReducedWord::identity(m)));
                }
            }
        }
        Ok((a, b))
    }
}

/// Two elements of a free group commute iff their product is the same
/// read in both orders (equivalently, both are powers of a common root).
fn commutes(x: &ReducedWord, y: &ReducedWord) -> Result<bool> {
    Ok(x.multiply(y)? == y.multiply(x)?)
}

/// Finds the common primitive root of a family of commuting words and
/// the exponent of each member, failing if the family is not contained
/// in a cyclic subgroup.
fn common_root<'a>(
    words: impl Iterator<Item = &'a ReducedWord> + Clone,
) -> Result<Option<(ReducedWord, Vec<i64>)>> {
    let seed = match words.clone().find(|w| !w.is_identity()) {
        None => return Ok(None),
        Some(w) => w,
    };
    let (root, _) = seed.primitive_root()?;
    let mut exps = Vec::new();
    for w in words {
        match w.power_index(&root)? {
            Some(e) => exps.push(e),
            None => {
                return Err(Error::InvalidEndo(
                    "image components that must share a cyclic root do not".into(),
                ))
            }
        }
    }
    Ok(Some((root, exps)))
}

/// Classifies by the triviality pattern of the four image-component
/// sets and extracts the structural data.
fn classify(
    n: usize,
    m: usize,
    a_images: &[ProductElement],
    b_images: &[ProductElement],
) -> Result<(EndoType, TypeData)> {
    let tx = a_images.iter().all(|g| g.first.is_identity());
    let ty = a_images.iter().all(|g| g.second.is_identity());
    let tz = b_images.iter().all(|g| g.first.is_identity());
    let tw = b_images.iter().all(|g| g.second.is_identity());

    let firsts = || a_images.iter().map(|g| &g.first).chain(b_images.iter().map(|g| &g.first));
    let seconds = || a_images.iter().map(|g| &g.second).chain(b_images.iter().map(|g| &g.second));
    let root_err = || Error::InvalidEndo("expected a common cyclic root among image components".into());

    if !tx && !ty && !tz && !tw {
        let (u, pr) = common_root(firsts())?.ok_or_else(root_err)?;
        let (v, qs) = common_root(seconds())?.ok_or_else(root_err)?;
        let (p, r) = (pr[..n].to_vec(), pr[n..].to_vec());
        let (q, s) = (qs[..n].to_vec(), qs[n..].to_vec());
        let data = TypeData::I {
            u,
            v,
            p: ExponentVector(p),
            q: ExponentVector(q),
            r: ExponentVector(r),
            s: ExponentVector(s),
        };
        return Ok((EndoType::I, data));
    }
    if ty && tz {
        let phi = FreeMap::new(n, n, a_images.iter().map(|g| g.first.clone()).collect())?;
        let psi = FreeMap::new(m, m, b_images.iter().map(|g| g.second.clone()).collect())?;
        return Ok((EndoType::VI, TypeData::VI { phi, psi }));
    }
    if tx && tw {
        let phi = FreeMap::new(n, m, a_images.iter().map(|g| g.second.clone()).collect())?;
        let psi = FreeMap::new(m, n, b_images.iter().map(|g| g.first.clone()).collect())?;
        return Ok((EndoType::VII, TypeData::VII { phi, psi }));
    }
    if tx && ty && !tz && !tw {
        let phi = FreeMap::new(m, n, b_images.iter().map(|g| g.first.clone()).collect())?;
        let psi = FreeMap::new(m, m, b_images.iter().map(|g| g.second.clone()).collect())?;
        return Ok((EndoType::IV, TypeData::IV { phi, psi }));
    }
    if tx && tz && !ty && !tw {
        let (v, qs) = common_root(seconds())?.ok_or_else(root_err)?;
        let (q, s) = (qs[..n].to_vec(), qs[n..].to_vec());
        let data = TypeData::V { v, q: ExponentVector(q), s: ExponentVector(s) };
        return Ok((EndoType::V, data));
    }
    if tx && !ty && !tz && !tw {
        let (v, qs) = common_root(seconds())?.ok_or_else(root_err)?;
        let (q, s) = (qs[..n].to_vec(), qs[n..].to_vec());
        let phi = FreeMap::new(m, n, b_images.iter().map(|g| g.first.clone()).collect())?;
        let data = TypeData::II { phi, v, q: ExponentVector(q), s: ExponentVector(s) };
        return Ok((EndoType::II, data));
    }
    if ty && !tx && !tz && !tw {
        let (u, pr) = common_root(firsts())?.ok_or_else(root_err)?;
        let (p, r) = (pr[..n].to_vec(), pr[n..].to_vec());
        let phi = FreeMap::new(m, m, b_images.iter().map(|g| g.second.clone()).collect())?;
        let data = TypeData::III { u, p: ExponentVector(p), r: ExponentVector(r), phi };
        return Ok((EndoType::III, data));
    }
    Err(Error::UnclassifiableEndo)
}
