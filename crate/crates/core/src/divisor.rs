//! Finitely supported integer divisors.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::graph::{Multigraph, VertexId};

/// An integer combination of points. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Divisor<P: Ord> {
    coefficients: BTreeMap<P, i64>,
}

impl<P: Ord> Default for Divisor<P> {
    fn default() -> Self {
        Divisor { coefficients: BTreeMap::new() }
    }
}

impl<P: Ord + Clone> Divisor<P> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The divisor `n (p)`.
    pub fn point(p: P, n: i64) -> Self {
        let mut d = Self::zero();
        d.add_at(p, n);
        d
    }

    pub fn get(&self, p: &P) -> i64 {
        self.coefficients.get(p).copied().unwrap_or(0)
    }

    pub fn add_at(&mut self, p: P, n: i64) {
        if n == 0 {
            return;
        }
        let entry = self.coefficients.entry(p);
        match entry {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(n);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += n;
                if *slot.get() == 0 {
                    slot.remove();
                }
            }
        }
    }

    pub fn degree(&self) -> i64 {
        self.coefficients.values().sum()
    }

    pub fn is_effective(&self) -> bool {
        self.coefficients.values().all(|&c| c >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &P> + '_ {
        self.coefficients.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, i64)> + '_ {
        self.coefficients.iter().map(|(p, &c)| (p, c))
    }

    /// Keeps only the points accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&P) -> bool) -> Self {
        self.iter().filter(|(p, _)| keep(p)).map(|(p, c)| (p.clone(), c)).collect()
    }

    /// Relabels points; coefficients of points sent to the same image add up.
    pub fn map_points<Q: Ord + Clone>(&self, mut f: impl FnMut(&P) -> Q) -> Divisor<Q> {
        self.iter().map(|(p, c)| (f(p), c)).collect()
    }

    pub fn scaled(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero();
        }
        Divisor {
            coefficients: self.coefficients.iter().map(|(p, &c)| (p.clone(), c * k)).collect(),
        }
    }
}

impl<P: Ord + Clone> FromIterator<(P, i64)> for Divisor<P> {
    fn from_iter<I: IntoIterator<Item = (P, i64)>>(iter: I) -> Self {
        let mut d = Self::zero();
        for (p, n) in iter {
            d.add_at(p, n);
        }
        d
    }
}

impl<P: Ord + Clone> AddAssign<&Divisor<P>> for Divisor<P> {
    fn add_assign(&mut self, rhs: &Divisor<P>) {
        for (p, c) in rhs.iter() {
            self.add_at(p.clone(), c);
        }
    }
}

impl<P: Ord + Clone> Add for &Divisor<P> {
    type Output = Divisor<P>;

    fn add(self, rhs: &Divisor<P>) -> Divisor<P> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<P: Ord + Clone> Add for Divisor<P> {
    type Output = Divisor<P>;

    fn add(mut self, rhs: Divisor<P>) -> Divisor<P> {
        self += &rhs;
        self
    }
}

impl<P: Ord + Clone> Neg for &Divisor<P> {
    type Output = Divisor<P>;

    fn neg(self) -> Divisor<P> {
        self.scaled(-1)
    }
}

impl<P: Ord + Clone> Neg for Divisor<P> {
    type Output = Divisor<P>;

    fn neg(self) -> Divisor<P> {
        self.scaled(-1)
    }
}

impl<P: Ord + Clone> Sub for &Divisor<P> {
    type Output = Divisor<P>;

    fn sub(self, rhs: &Divisor<P>) -> Divisor<P> {
        self + &(-rhs)
    }
}

impl<P: Ord + Clone> Sub for Divisor<P> {
    type Output = Divisor<P>;

    fn sub(self, rhs: Divisor<P>) -> Divisor<P> {
        &self - &rhs
    }
}

impl<P: Ord + Clone> Mul<i64> for &Divisor<P> {
    type Output = Divisor<P>;

    fn mul(self, k: i64) -> Divisor<P> {
        self.scaled(k)
    }
}

/// `K_G = sum (val(v) - 2)(v)`.
pub fn canonical_divisor(g: &Multigraph) -> Divisor<VertexId> {
    g.vertices()
        .map(|v| (v.clone(), g.valency_unchecked(v) as i64 - 2))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::samples::*;

    fn d(entries: &[(&str, i64)]) -> Divisor<VertexId> {
        entries.iter().map(|(p, n)| (VertexId::from(*p), *n)).collect()
    }

    #[test]
    fn degrees() {
        assert_eq!(Divisor::<VertexId>::zero().degree(), 0);
        assert_eq!(d(&[("a", 1), ("b", 1), ("c", -3)]).degree(), -1);
        assert_eq!(canonical_divisor(&triangle()).degree(), 0);
    }

    #[test]
    fn effectivity() {
        assert!(Divisor::<VertexId>::zero().is_effective());
        assert!(d(&[("a", 2)]).is_effective());
        assert!(!d(&[("a", 1), ("b", -1)]).is_effective());
    }

    #[test]
    fn zeros_are_dropped() {
        let x = d(&[("a", 2), ("a", -2), ("b", 0)]);
        assert!(x.is_zero());
        let y = d(&[("a", 1)]);
        assert!((&y - &y).is_zero());
    }

    #[test]
    fn canonical_examples() {
        assert!(canonical_divisor(&triangle()).is_zero());
        assert_eq!(canonical_divisor(&path(3)), d(&[("v0", -1), ("v2", -1)]));
        let k = canonical_divisor(&bowtie());
        assert_eq!(k, d(&[("p", 2)]));
        assert_eq!(k.degree(), 2 * bowtie().genus() as i64 - 2);
    }

    #[test]
    fn canonical_of_subdivision_restricts() {
        let g = Multigraph::build(&["v", "w"], &[("l", "v", "v"), ("m", "w", "w"), ("e", "v", "w")])
            .unwrap();
        let (h, mids) = g.subdivide_loops();
        let kh = canonical_divisor(&h);
        for mid in mids.values() {
            assert_eq!(kh.get(mid), 0);
        }
        assert_eq!(kh.restrict(|v| g.has_vertex(v)), canonical_divisor(&g));
    }
}
