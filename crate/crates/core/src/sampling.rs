//! Deterministic sampling primitives.
//!
//! Every sampler in the crate is driven by Halton low-discrepancy sequences
//! or by explicit lattices, never by a seeded RNG, so repeated runs of the
//! same configuration produce byte-identical outputs.

use nalgebra::DVector;

/// First primes, used as Halton bases (one per dimension).
const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical-inverse of `index` in the given base, in `[0, 1)`.
pub fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut fraction = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * fraction;
        index /= base;
        fraction *= inv_base;
    }
    value
}

/// `dim`-dimensional Halton point for a 1-based index.
///
/// Index 0 maps to the all-zeros corner; callers that want points in the
/// open box should start at 1.
pub fn halton_point(index: usize, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension limit exceeded");
    (0..dim).map(|d| radical_inverse(index, PRIMES[d])).collect()
}

/// Iterator over Halton points in the unit cube `[0,1)^dim`, starting at index 1.
pub fn halton_seq(dim: usize) -> impl Iterator<Item = Vec<f64>> {
    (1usize..).map(move |i| halton_point(i, dim))
}

/// Maps a unit-cube point into the axis box `[lo, hi]`.
pub fn cube_to_box(u: &[f64], lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        lo.len(),
        u.iter()
            .zip(lo.iter().zip(hi.iter()))
            .map(|(&ui, (&l, &h))| l + ui * (h - l)),
    )
}

/// Halton points inside a box, 1-based start.
pub fn box_points<'a>(
    lo: &'a DVector<f64>,
    hi: &'a DVector<f64>,
) -> impl Iterator<Item = DVector<f64>> + 'a {
    let dim = lo.len();
    halton_seq(dim).map(move |u| cube_to_box(&u, lo, hi))
}

/// Deterministic points of the closed unit ball, by Halton rejection from
/// the enclosing cube. Acceptance is ~0.78 in 2-D and 1.0 in 1-D, which is
/// fine for the dimensions this crate works in.
pub fn unit_ball_points(dim: usize) -> impl Iterator<Item = DVector<f64>> {
    halton_seq(dim).filter_map(move |u| {
        let p = DVector::from_iterator(dim, u.iter().map(|&ui| 2.0 * ui - 1.0));
        (p.norm() <= 1.0).then_some(p)
    })
}

/// Uniform lattice over a box: `res[d]` points per dimension, endpoints
/// included (a single point collapses to the midpoint).
#[derive(Debug, Clone)]
pub struct Lattice {
    lo: DVector<f64>,
    hi: DVector<f64>,
    res: Vec<usize>,
}

impl Lattice {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>, res: Vec<usize>) -> Self {
        assert_eq!(lo.len(), res.len());
        assert!(res.iter().all(|&r| r >= 1));
        Self { lo, hi, res }
    }

    pub fn uniform(lo: DVector<f64>, hi: DVector<f64>, res_per_dim: usize) -> Self {
        let dims = lo.len();
        Self::new(lo, hi, vec![res_per_dim; dims])
    }

    pub fn dim(&self) -> usize {
        self.res.len()
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate along one axis for a per-axis index.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let r = self.res[axis];
        if r == 1 {
            0.5 * (self.lo[axis] + self.hi[axis])
        } else {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (r - 1) as f64
        }
    }

    /// Decodes a flat index into the lattice point.
    pub fn point(&self, mut flat: usize) -> DVector<f64> {
        let mut p = DVector::zeros(self.dim());
        for axis in (0..self.dim()).rev() {
            let r = self.res[axis];
            p[axis] = self.axis_coord(axis, flat % r);
            flat /= r;
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Neighbor pairs along every axis at dyadic strides 1, 2, 4, …
    ///
    /// Doubling the per-axis resolution from `r` to `2r − 1` maps each old
    /// pair to a stride-doubled new pair, so the pair set of the refined
    /// lattice is a superset of the coarse one and max-reductions over
    /// pairs are monotone under refinement.
    pub fn dyadic_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let total = self.len();
        (0..self.dim()).flat_map(move |axis| {
            let r = self.res[axis];
            // Flat-index step for +1 along `axis`.
            let step: usize = self.res[axis + 1..].iter().product();
            let mut strides = Vec::new();
            let mut s = 1;
            while s < r {
                strides.push(s);
                s *= 2;
            }
            strides.into_iter().flat_map(move |s| {
                (0..total).filter_map(move |i| {
                    let coord = (i / step) % r;
                    (coord + s < r).then_some((i, i + s * step))
                })
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2_prefix() {
        let want = [0.5, 0.25, 0.75, 0.125, 0.625];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(radical_inverse(i + 1, 2), *w);
        }
    }

    #[test]
    fn lattice_endpoints_and_midpoint() {
        let l = Lattice::uniform(DVector::from_vec(vec![-1.0]), DVector::from_vec(vec![3.0]), 5);
        let pts: Vec<f64> = l.points().map(|p| p[0]).collect();
        assert_eq!(pts, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
        let single = Lattice::uniform(
            DVector::from_vec(vec![-1.0]),
            DVector::from_vec(vec![3.0]),
            1,
        );
        assert_eq!(single.point(0)[0], 1.0);
    }

    #[test]
    fn refinement_pairs_are_supersets() {
        let lo = DVector::from_vec(vec![0.0, 0.0]);
        let hi = DVector::from_vec(vec![1.0, 2.0]);
        let coarse = Lattice::uniform(lo.clone(), hi.clone(), 5);
        let fine = Lattice::uniform(lo, hi, 9);
        let coords = |l: &Lattice, pair: (usize, usize)| {
            let (a, b) = (l.point(pair.0), l.point(pair.1));
            (
                (a[0] * 1e9) as i64,
                (a[1] * 1e9) as i64,
                (b[0] * 1e9) as i64,
                (b[1] * 1e9) as i64,
            )
        };
        let fine_set: std::collections::HashSet<_> =
            fine.dyadic_pairs().map(|p| coords(&fine, p)).collect();
        for p in coarse.dyadic_pairs() {
            assert!(fine_set.contains(&coords(&coarse, p)));
        }
    }

    #[test]
    fn ball_points_stay_in_ball() {
        for p in unit_ball_points(2).take(200) {
            assert!(p.norm() <= 1.0 + 1e-15);
        }
    }
}
