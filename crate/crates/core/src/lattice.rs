//! The one-parameter family of diagonally distorted integer lattices.
//!
//! The lattice `L_δ ⊂ ℝⁿ` is spanned by the columns `e_i + ((δ − 1)/n)·𝟙`. Its
//! basis matrix is `I + c·𝟙𝟙ᵀ` with `c = (δ − 1)/n`, which is symmetric with
//! eigenvalues `1` (multiplicity `n − 1`) and `δ` (along `𝟙`), so the Voronoi
//! cell has volume `δ` and the inverse basis is available in closed form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Volume of the n-dimensional unit ball.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension { n, min: 1 });
    }
    let v = if n % 2 == 0 {
        let half = n / 2;
        let factorial: f64 = (1..=half).map(|k| k as f64).product();
        PI.powi(half as i32) / factorial
    } else {
        let double_factorial: f64 = (1..=n).rev().step_by(2).map(|k| k as f64).product();
        PI.powi(((n - 1) / 2) as i32) * 2f64.powi(n.div_ceil(2) as i32) / double_factorial
    };
    Ok(v)
}

/// A member of the distorted lattice family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortedLattice {
    n: usize,
    delta: f64,
}

impl DistortedLattice {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension { n, min: 2 });
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidDelta(delta));
        }
        Ok(Self { n, delta })
    }

    pub fn named(name: NamedLattice, integer_dim: usize) -> Result<Self> {
        let (n, delta) = name.params(integer_dim);
        Self::new(n, delta)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Off-diagonal shift `c = (δ − 1)/n` of the basis matrix.
    pub fn shift(&self) -> f64 {
        (self.delta - 1.0) / self.n as f64
    }

    /// Volume of the Voronoi cell, equal to `|det B| = δ`.
    pub fn cell_volume(&self) -> f64 {
        self.delta
    }

    /// Basis column `i`.
    pub fn basis_column(&self, i: usize) -> Vec<f64> {
        let c = self.shift();
        (0..self.n)
            .map(|j| if i == j { 1.0 + c } else { c })
            .collect()
    }

    /// Basis matrix in row-major order (column `i` is the i-th basis vector).
    pub fn basis(&self) -> Vec<Vec<f64>> {
        let c = self.shift();
        (0..self.n)
            .map(|row| {
                (0..self.n)
                    .map(|col| if row == col { 1.0 + c } else { c })
                    .collect()
            })
            .collect()
    }

    /// Cartesian position of the lattice point with integer coefficients `k`.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        let shift = self.shift() * coeffs.iter().sum::<i64>() as f64;
        coeffs.iter().map(|&k| k as f64 + shift).collect()
    }

    /// Maps a lattice-coordinate vector `u` to Cartesian coordinates `B·u`.
    pub fn to_cartesian(&self, u: &[f64]) -> Vec<f64> {
        let shift = self.shift() * u.iter().sum::<f64>();
        u.iter().map(|&x| x + shift).collect()
    }

    /// Inverse of [`to_cartesian`](Self::to_cartesian): `B⁻¹ = I − (c/δ)·𝟙𝟙ᵀ`.
    pub fn to_lattice_coords(&self, p: &[f64]) -> Vec<f64> {
        let shift = self.shift() / self.delta * p.iter().sum::<f64>();
        p.iter().map(|&x| x - shift).collect()
    }

    /// Gram matrix coefficient: `‖B·m‖² = ‖m‖² + γ·(Σm)²` with `γ = (δ² − 1)/n`.
    pub(crate) fn gram_shift(&self) -> f64 {
        (self.delta * self.delta - 1.0) / self.n as f64
    }

    /// Minimal distance from the origin to the boundary of the Voronoi cell.
    pub fn packing_radius(&self) -> f64 {
        let n = self.n as f64;
        let d = self.delta;
        let lower = 1.0 / (n + 1.0).sqrt();
        let upper = (n + 1.0).sqrt();
        if d <= lower {
            0.5 * d * n.sqrt()
        } else if d <= upper {
            0.5 * (1.0 + (d * d - 1.0) / n).sqrt()
        } else {
            0.5 * 2f64.sqrt()
        }
    }

    /// Maximal distance from the origin to the boundary of the Voronoi cell.
    pub fn covering_radius(&self) -> f64 {
        let n = self.n as f64;
        let d = self.delta;
        let d2 = d * d;
        if d <= 1.0 {
            ((n * n - 1.0) + (n * n + 2.0) * d2 + (n * n - 1.0) * d2 * d2).sqrt()
                / (12.0 * n).sqrt()
        } else if self.n % 2 == 1 {
            (n * n - 1.0 + d2).sqrt() / (2.0 * n.sqrt())
        } else {
            (n * n - 2.0 + d2 + 1.0 / d2).sqrt() / (2.0 * n.sqrt())
        }
    }

    /// Length of the shortest non-zero lattice vector, twice the packing radius.
    pub fn shortest_vector_norm(&self) -> f64 {
        2.0 * self.packing_radius()
    }

    /// All lattice vectors (including the origin) of norm at most `radius`,
    /// sorted by norm and then by coefficients.
    pub fn vectors_within(&self, radius: f64) -> Vec<LatticeVector> {
        let gram = self.gram_matrix();
        let chol = cholesky_upper(&gram);
        let n = self.n;
        let budget = radius * radius * (1.0 + 1e-12) + 1e-12;
        let mut out = Vec::new();
        let mut coeffs = vec![0i64; n];
        enumerate_level(&chol, n, n - 1, budget, 0.0, &mut coeffs, &mut |m| {
            let point = self.point(m);
            let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= radius * (1.0 + 1e-12) + 1e-12 {
                out.push(LatticeVector {
                    coeffs: m.to_vec(),
                    point,
                    norm,
                });
            }
        });
        out.sort_by(|a, b| {
            a.norm
                .total_cmp(&b.norm)
                .then_with(|| a.coeffs.cmp(&b.coeffs))
        });
        out
    }

    fn gram_matrix(&self) -> Vec<Vec<f64>> {
        let g = self.gram_shift();
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| if i == j { 1.0 + g } else { g })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for DistortedLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L(n={}, delta={})", self.n, self.delta)
    }
}

/// A lattice vector with its integer coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    pub coeffs: Vec<i64>,
    pub point: Vec<f64>,
    pub norm: f64,
}

fn cholesky_upper(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut r = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut s = a[i][i];
        for k in 0..i {
            s -= r[k][i] * r[k][i];
        }
        r[i][i] = s.max(0.0).sqrt();
        for j in i + 1..n {
            let mut s = a[i][j];
            for k in 0..i {
                s -= r[k][i] * r[k][j];
            }
            r[i][j] = s / r[i][i];
        }
    }
    r
}

// Fincke–Pohst enumeration of all m with ‖R·m‖² ≤ budget, fixing coordinates
// from the last one down.
fn enumerate_level(
    r: &[Vec<f64>],
    n: usize,
    level: usize,
    budget: f64,
    used: f64,
    coeffs: &mut [i64],
    visit: &mut dyn FnMut(&[i64]),
) {
    let tail: f64 = (level + 1..n).map(|j| r[level][j] * coeffs[j] as f64).sum();
    let diag = r[level][level];
    let center = -tail / diag;
    let remaining = (budget - used).max(0.0);
    let half_width = remaining.sqrt() / diag;
    let lo = (center - half_width).ceil() as i64;
    let hi = (center + half_width).floor() as i64;
    for m in lo..=hi {
        let term = diag * m as f64 + tail;
        let next = used + term * term;
        if next > budget {
            continue;
        }
        coeffs[level] = m;
        if level == 0 {
            visit(coeffs);
        } else {
            enumerate_level(r, n, level - 1, budget, next, coeffs, visit);
        }
    }
    coeffs[level] = 0;
}

/// Named members of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedLattice {
    Integer,
    Hexagonal,
    HexagonalDual,
    Fcc,
    Bcc,
}

impl NamedLattice {
    /// `(n, δ)` for this lattice; `integer_dim` is only used by [`NamedLattice::Integer`].
    pub fn params(self, integer_dim: usize) -> (usize, f64) {
        match self {
            NamedLattice::Integer => (integer_dim, 1.0),
            NamedLattice::Hexagonal => (2, 1.0 / 3f64.sqrt()),
            NamedLattice::HexagonalDual => (2, 3f64.sqrt()),
            NamedLattice::Fcc => (3, 2.0),
            NamedLattice::Bcc => (3, 0.5),
        }
    }
}

impl FromStr for NamedLattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "integer" | "cubic" => Ok(NamedLattice::Integer),
            "hexagonal" | "hex" => Ok(NamedLattice::Hexagonal),
            "hexagonal-dual" | "hex-dual" => Ok(NamedLattice::HexagonalDual),
            "fcc" => Ok(NamedLattice::Fcc),
            "bcc" => Ok(NamedLattice::Bcc),
            _ => Err(Error::Parse {
                kind: "lattice",
                value: s.to_string(),
            }),
        }
    }
}

/// Result of a closest-point query.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestPoint {
    pub coeffs: Vec<i64>,
    pub point: Vec<f64>,
    pub distance: f64,
}

/// Closest lattice point search by rounding in lattice coordinates followed by
/// an exhaustive scan of a precomputed offset list.
///
/// After rounding, the residual `y = B·f` with `f ∈ [−½, ½]ⁿ` satisfies
/// `‖y‖ ≤ ρ` where `ρ` is the largest corner norm of that cube. The nearest
/// point lies within the covering radius `R` of the query, so any offset `m`
/// that can win has `‖B·m‖ ≤ ρ + R`; all such offsets are enumerated once.
#[derive(Debug, Clone)]
pub struct NearestPointSearch {
    lattice: DistortedLattice,
    offsets: Vec<LatticeVector>,
    residual_bound: f64,
}

impl NearestPointSearch {
    pub fn new(lattice: &DistortedLattice) -> Self {
        let n = lattice.dim();
        let gamma = lattice.gram_shift();
        // ‖B·f‖² over the corners of [−½, ½]ⁿ depends only on the number of +½ entries.
        let residual_bound = (0..=n)
            .map(|plus| {
                let s = plus as f64 - n as f64 / 2.0;
                (n as f64 / 4.0 + gamma * s * s).max(0.0)
            })
            .fold(0.0f64, f64::max)
            .sqrt();
        let offsets = lattice.vectors_within(residual_bound + lattice.covering_radius());
        Self {
            lattice: lattice.clone(),
            offsets,
            residual_bound,
        }
    }

    pub fn lattice(&self) -> &DistortedLattice {
        &self.lattice
    }

    /// Number of candidate offsets scanned per query.
    pub fn offset_count(&self) -> usize {
        self.offsets.len()
    }

    /// Bound on the norm of the rounding residual.
    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    /// Nearest lattice point to `p`; exact distance ties go to the
    /// lexicographically smallest coefficient vector.
    pub fn nearest(&self, p: &[f64]) -> Result<NearestPoint> {
        let n = self.lattice.dim();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        let u = self.lattice.to_lattice_coords(p);
        let base: Vec<i64> = u.iter().map(|x| x.round() as i64).collect();
        let anchor = self.lattice.point(&base);
        let y: Vec<f64> = p.iter().zip(&anchor).map(|(a, b)| a - b).collect();

        let mut best: Option<(f64, Vec<i64>)> = None;
        for off in &self.offsets {
            let d2: f64 = y
                .iter()
                .zip(&off.point)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let coeffs: Vec<i64> = base.iter().zip(&off.coeffs).map(|(a, b)| a + b).collect();
            let better = match &best {
                None => true,
                Some((bd, bc)) => d2 < *bd || (d2 == *bd && coeffs < *bc),
            };
            if better {
                best = Some((d2, coeffs));
            }
        }
        let (d2, coeffs) = best.expect("offset list always contains the origin");
        let point = self.lattice.point(&coeffs);
        Ok(NearestPoint {
            coeffs,
            point,
            distance: d2.sqrt(),
        })
    }

    /// Whether some lattice point lies within `r` of the residual `y`, where
    /// `y` is a query point already reduced by rounding (`‖y‖ ≤ residual_bound`)
    /// and `r` does not exceed the covering radius.
    #[inline]
    pub(crate) fn residual_within(&self, y: &[f64], r: f64) -> bool {
        let r2 = r * r;
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let reach = y_norm + r;
        for off in &self.offsets {
            if off.norm > reach {
                break;
            }
            let mut d2 = 0.0;
            for (a, b) in y.iter().zip(&off.point) {
                let t = a - b;
                d2 += t * t;
            }
            if d2 <= r2 {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_ball_volumes() {
        assert!(close(unit_ball_volume(2).unwrap(), PI, 1e-15));
        assert!(close(unit_ball_volume(3).unwrap(), 4.0 * PI / 3.0, 1e-15));
        // V_n = V_{n-2}·2π/n
        let mut prev2 = 2.0; // V_1
        let mut prev1 = PI; // V_2
        for n in 3..=12 {
            let rec = prev2 * 2.0 * PI / n as f64;
            assert!(close(unit_ball_volume(n).unwrap(), rec, 1e-13), "n = {n}");
            prev2 = prev1;
            prev1 = rec;
        }
        assert!(close(
            unit_ball_volume(5).unwrap(),
            8.0 * PI * PI / 15.0,
            1e-14
        ));
        assert_eq!(
            unit_ball_volume(0),
            Err(Error::InvalidDimension { n: 0, min: 1 })
        );
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DistortedLattice::new(1, 1.0).is_err());
        assert!(DistortedLattice::new(3, 0.0).is_err());
        assert!(DistortedLattice::new(3, -1.0).is_err());
        assert!(DistortedLattice::new(3, f64::NAN).is_err());
    }

    #[test]
    fn named_lattices() {
        let hex = DistortedLattice::named(NamedLattice::Hexagonal, 0).unwrap();
        assert_eq!(hex.dim(), 2);
        assert!(close(hex.delta(), 1.0 / 3f64.sqrt(), 1e-15));
        let fcc: NamedLattice = "fcc".parse().unwrap();
        assert_eq!(fcc.params(0), (3, 2.0));
        assert_eq!("bcc".parse::<NamedLattice>().unwrap().params(0), (3, 0.5));
        assert_eq!(NamedLattice::Integer.params(5), (5, 1.0));
        assert!("diamond".parse::<NamedLattice>().is_err());
    }

    #[test]
    fn basis_columns_have_equal_pairwise_products() {
        for &(n, d) in &[(2, 0.4), (3, 2.0), (5, 0.7)] {
            let lat = DistortedLattice::new(n, d).unwrap();
            let cols: Vec<_> = (0..n).map(|i| lat.basis_column(i)).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let reference = dot(&cols[0], &cols[1]);
            for i in 0..n {
                for j in i + 1..n {
                    assert!(close(dot(&cols[i], &cols[j]), reference, 1e-14));
                }
            }
        }
    }

    #[test]
    fn packing_radius_examples() {
        let pr = |n, d| DistortedLattice::new(n, d).unwrap().packing_radius();
        assert!(close(pr(3, 1.0), 0.5, 1e-15));
        assert!(close(pr(3, 2.0), 2f64.sqrt() / 2.0, 1e-15));
        assert!(close(pr(2, 1.0 / 3f64.sqrt()), 1.0 / 6f64.sqrt(), 1e-15));
    }

    #[test]
    fn covering_radius_examples() {
        let cr = |n, d| DistortedLattice::new(n, d).unwrap().covering_radius();
        assert!(close(cr(3, 1.0), 3f64.sqrt() / 2.0, 1e-15));
        assert!(close(cr(3, 0.5), 5f64.sqrt() / 4.0, 1e-15));
        assert!(close(cr(2, 1.0 / 3f64.sqrt()), 2f64.sqrt() / 3.0, 1e-15));
    }

    #[test]
    fn shortest_vector_matches_enumeration() {
        // n = 2, δ = √3: brute force over coefficients in {−2..2}².
        let lat = DistortedLattice::new(2, 3f64.sqrt()).unwrap();
        let mut best = f64::INFINITY;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a == 0 && b == 0 {
                    continue;
                }
                let p = lat.point(&[a, b]);
                best = best.min((p[0] * p[0] + p[1] * p[1]).sqrt());
            }
        }
        assert!(close(best, 2f64.sqrt(), 1e-12));
        assert!(close(lat.shortest_vector_norm(), best, 1e-12));
        assert!(close(
            DistortedLattice::new(3, 1.0).unwrap().shortest_vector_norm(),
            1.0,
            1e-15
        ));
    }

    #[test]
    fn lattice_coordinates_round_trip() {
        let lat = DistortedLattice::new(4, 0.3).unwrap();
        let p = [0.1, -2.0, 3.5, 0.25];
        let back = lat.to_cartesian(&lat.to_lattice_coords(&p));
        for (a, b) in p.iter().zip(&back) {
            assert!(close(*a, *b, 1e-13));
        }
    }

    #[test]
    fn enumeration_matches_box_scan() {
        for &(n, d, radius) in &[(2, 0.3, 1.4), (3, 0.5, 1.3), (3, 2.5, 2.0), (4, 1.2, 1.6)] {
            let lat = DistortedLattice::new(n, d).unwrap();
            let found = lat.vectors_within(radius);
            // Eigenvalues of B are 1 and δ, so ‖B m‖ ≥ min(1, δ)·‖m‖∞.
            let w = (radius / d.min(1.0)).ceil() as i64 + 1;
            let mut expected = 0usize;
            let mut m = vec![-w; n];
            loop {
                let p = lat.point(&m);
                if p.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius {
                    expected += 1;
                }
                let mut i = 0;
                while i < n {
                    m[i] += 1;
                    if m[i] <= w {
                        break;
                    }
                    m[i] = -w;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            assert_eq!(found.len(), expected, "n={n} delta={d}");
        }
    }

    #[test]
    fn nearest_point_examples() {
        let lat = DistortedLattice::new(2, 1.0).unwrap();
        let search = NearestPointSearch::new(&lat);
        let np = search.nearest(&[0.4, 0.4]).unwrap();
        assert_eq!(np.coeffs, vec![0, 0]);
        assert!(close(np.distance, 0.32f64.sqrt(), 1e-15));

        let fcc = DistortedLattice::new(3, 2.0).unwrap();
        let search = NearestPointSearch::new(&fcc);
        let mid: Vec<f64> = fcc.basis_column(0).iter().map(|x| x / 2.0).collect();
        let np = search.nearest(&mid).unwrap();
        assert!(close(np.distance, fcc.packing_radius(), 1e-12));
        // Equidistant from 0 and b₁: the tie goes to the smaller coefficient vector.
        assert_eq!(np.coeffs, vec![0, 0, 0]);

        assert!(search.nearest(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn nearest_distance_never_exceeds_covering_radius() {
        use rand::{Rng, SeedableRng};
        let lat = DistortedLattice::new(3, 0.5).unwrap();
        let search = NearestPointSearch::new(&lat);
        let cov = lat.covering_radius();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            let u: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let p = lat.to_cartesian(&u);
            worst = worst.max(search.nearest(&p).unwrap().distance);
        }
        assert!(worst <= cov + 1e-12, "{worst} > {cov}");
        assert!(worst > 0.95 * cov);
    }

    #[test]
    fn packing_radius_continuous_at_branch_boundaries() {
        for n in 2..=6 {
            let nf = n as f64;
            for &b in &[1.0 / (nf + 1.0).sqrt(), (nf + 1.0).sqrt()] {
                let left = DistortedLattice::new(n, b * (1.0 - 1e-15)).unwrap();
                let right = DistortedLattice::new(n, b * (1.0 + 1e-15)).unwrap();
                assert!((left.packing_radius() - right.packing_radius()).abs() < 1e-12);
                // Evaluate both branch expressions exactly at the boundary.
                let middle = 0.5 * (1.0 + (b * b - 1.0) / nf).sqrt();
                let outer = if b < 1.0 {
                    0.5 * b * nf.sqrt()
                } else {
                    0.5 * 2f64.sqrt()
                };
                assert!((middle - outer).abs() < 1e-12, "n={n} boundary={b}");
            }
        }
    }

    #[test]
    fn covering_radius_continuous_at_one() {
        for n in 2..=7 {
            let nf = n as f64;
            let below = ((nf * nf - 1.0) + (nf * nf + 2.0) + (nf * nf - 1.0)).sqrt()
                / (12.0 * nf).sqrt();
            let above = if n % 2 == 1 {
                (nf * nf - 1.0 + 1.0).sqrt() / (2.0 * nf.sqrt())
            } else {
                (nf * nf - 2.0 + 1.0 + 1.0).sqrt() / (2.0 * nf.sqrt())
            };
            assert!((below - above).abs() < 1e-12, "n = {n}");
            let at = DistortedLattice::new(n, 1.0).unwrap().covering_radius();
            let next = DistortedLattice::new(n, 1.0 + 1e-13).unwrap().covering_radius();
            assert!((at - next).abs() < 1e-12);
        }
    }

    #[test]
    fn packing_radius_below_covering_radius() {
        for n in 2..=6 {
            for i in 0..200 {
                let d = 0.05 * (400f64).powf(i as f64 / 199.0);
                let lat = DistortedLattice::new(n, d).unwrap();
                let (p, c) = (lat.packing_radius(), lat.covering_radius());
                assert!(p <= c + 1e-15, "n={n} delta={d}");
                if (d - 1.0).abs() > 1e-9 {
                    assert!(p < c);
                }
            }
        }
    }

    #[test]
    fn planar_scaling_duality() {
        let lower = 1.0 / 3f64.sqrt();
        for i in 0..50 {
            let d = lower + (1.0 - lower) * i as f64 / 49.0;
            let a = DistortedLattice::new(2, d).unwrap().packing_radius();
            let b = DistortedLattice::new(2, 1.0 / d).unwrap().packing_radius();
            assert!(close(a / b, d, 1e-12));
        }
    }
}
