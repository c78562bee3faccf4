//! Exact volume of the intersection of a ball with the Voronoi cell in ℝ³.
//!
//! The cell is cut out of a cube by the bisectors of all lattice vectors up to
//! twice the covering radius; bisectors meeting the cell in a face of positive
//! area are its facets. The complement of the cell inside `B_r` is the union
//! of the spherical caps beyond the facets, and its volume follows by
//! inclusion–exclusion over the sets of facets whose caps meet inside the
//! ball. Single caps and pairs have closed forms; larger intersections use
//! the exact ball–polytope integral.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{check_radius, Error, Result};
use crate::lattice::DistortedLattice;
use crate::polytope::{
    chord_kernel, clip_halfplane, cross, dot, norm, polygon_integral, scale, square, sub, Polytope, Vec2,
    Vec3,
};

/// Affine plane `normal · x = distance` with a unit normal. The associated
/// cap is the part of the ball with `normal · x ≥ distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plane {
    pub normal: [f64; 3],
    pub distance: f64,
}

impl Plane {
    pub fn new(normal: [f64; 3], distance: f64) -> Result<Self> {
        let len = norm(normal);
        if !len.is_finite() || (len - 1.0).abs() > 1e-9 || !distance.is_finite() {
            return Err(Error::NonUnitNormal(len));
        }
        Ok(Plane { normal, distance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRadii3D {
    pub delta: f64,
    /// Six planes `±b_i`.
    pub r1: f64,
    /// Six planes `±(b_i + b_j)`.
    pub r2: f64,
    /// Two planes `±(b₁ + b₂ + b₃)`.
    pub r3: f64,
    /// 18 edges of type 1-1-2.
    pub r4: f64,
    /// 18 edges of type 1-2-3.
    pub r5: f64,
    /// 24 vertices; the covering radius.
    pub r6: f64,
}

impl CriticalRadii3D {
    pub fn as_array(&self) -> [f64; 6] {
        [self.r1, self.r2, self.r3, self.r4, self.r5, self.r6]
    }
}

pub fn critical_radii_3d(delta: f64) -> Result<CriticalRadii3D> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta > 1.0 {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: "(0, 1]",
        });
    }
    let d2 = delta * delta;
    Ok(CriticalRadii3D {
        delta,
        r1: ((d2 + 2.0) / 12.0).sqrt(),
        r2: ((2.0 * d2 + 1.0) / 6.0).sqrt(),
        r3: delta * 3f64.sqrt() / 2.0,
        r4: (d2 + 2.0) / (3.0 * 2f64.sqrt()),
        r5: ((d2 + 2.0) * (2.0 * d2 + 1.0)).sqrt() / (2.0 * 3f64.sqrt()),
        r6: (8.0 * d2 * d2 + 11.0 * d2 + 8.0).sqrt() / 6.0,
    })
}

/// Vertex distances for `δ ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualRadii3D {
    pub delta: f64,
    pub s1: f64,
    /// The covering radius.
    pub s2: f64,
}

pub fn dual_radii_3d(delta: f64) -> Result<DualRadii3D> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta < 1.0 {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: "[1, ∞)",
        });
    }
    Ok(DualRadii3D {
        delta,
        s1: (delta * delta + 2.0) / (2.0 * 3f64.sqrt() * delta),
        s2: (delta * delta + 8.0).sqrt() / (2.0 * 3f64.sqrt()),
    })
}

/// Which ordering of `r₁ … r₆` holds, decided by comparing the radii:
///
/// 1. `r₃ ≤ r₁ ≤ r₂ ≤ r₅ ≤ r₄ ≤ r₆`
/// 2. `r₁ ≤ r₃ ≤ r₂ ≤ r₄ ≤ r₅ ≤ r₆`
/// 3. `r₁ ≤ r₂ ≤ r₃ ≤ r₄ ≤ r₅ ≤ r₆`
/// 4. `r₁ ≤ r₂ ≤ r₄ ≤ r₃ ≤ r₅ ≤ r₆`
///
/// At a threshold the lower regime is returned.
pub fn ordering_regime(delta: f64) -> Result<u8> {
    let c = critical_radii_3d(delta)?;
    Ok(if c.r5 <= c.r4 {
        1
    } else if c.r3 <= c.r2 {
        2
    } else if c.r3 <= c.r4 {
        3
    } else {
        4
    })
}

/// Volume of `{x ∈ B_r : n · x ≥ d}`; `d` may be negative.
pub fn spherical_cap_volume(r: f64, d: f64) -> f64 {
    if d >= r {
        0.0
    } else if d <= -r {
        4.0 / 3.0 * PI * r * r * r
    } else {
        PI / 3.0 * (r - d) * (r - d) * (2.0 * r + d)
    }
}

/// Volume of the ball region beyond both planes.
pub fn cap_pair_intersection_volume(r: f64, p1: &Plane, p2: &Plane) -> Result<f64> {
    check_radius(r)?;
    let p1 = Plane::new(p1.normal, p1.distance)?;
    let p2 = Plane::new(p2.normal, p2.distance)?;
    Ok(cap_pair_unchecked(r, &p1, &p2))
}

fn cap_pair_unchecked(r: f64, p1: &Plane, p2: &Plane) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let (n1, d1, n2, d2) = (p1.normal, p1.distance, p2.normal, p2.distance);
    let u = cross(n1, n2);
    let s = norm(u);
    if s < 1e-12 {
        return if dot(n1, n2) > 0.0 {
            spherical_cap_volume(r, d1.max(d2))
        } else if -d2 <= d1 {
            0.0
        } else {
            spherical_cap_volume(r, d1) - spherical_cap_volume(r, -d2)
        };
    }
    // Integrate the chord length of the ball along u over the planar wedge.
    let u = scale(u, 1.0 / s);
    let e2 = cross(u, n1);
    let m1: Vec2 = [1.0, 0.0];
    let m2: Vec2 = [dot(n2, n1), dot(n2, e2)];
    let poly = clip_halfplane(&square(2.0 * r), m1, d1);
    let poly = clip_halfplane(&poly, m2, d2);
    polygon_integral(&poly, |h, t| chord_kernel(r, h, t)).max(0.0)
}

/// Volume of the ball region beyond all three planes.
pub fn cap_triple_intersection_volume(r: f64, p1: &Plane, p2: &Plane, p3: &Plane) -> Result<f64> {
    cap_intersection_volume(r, &[*p1, *p2, *p3])
}

/// Volume of the ball region beyond every plane in `planes`.
pub fn cap_intersection_volume(r: f64, planes: &[Plane]) -> Result<f64> {
    check_radius(r)?;
    let checked = planes
        .iter()
        .map(|p| Plane::new(p.normal, p.distance))
        .collect::<Result<Vec<_>>>()?;
    Ok(cap_intersection_unchecked(r, &checked))
}

fn cap_intersection_unchecked(r: f64, planes: &[Plane]) -> f64 {
    match planes {
        [] => 4.0 / 3.0 * PI * r * r * r,
        [p] => spherical_cap_volume(r, p.distance),
        [p, q] => cap_pair_unchecked(r, p, q),
        _ => {
            if r == 0.0 {
                return 0.0;
            }
            let mut poly = Polytope::cube(1.25 * r);
            for p in planes {
                poly.clip(scale(p.normal, -1.0), -p.distance, None);
                if poly.is_empty() {
                    return 0.0;
                }
            }
            poly.ball_intersection_volume(r)
        }
    }
}

/// Smallest `|x|` over `{x : nᵢ · x ≥ dᵢ}`, or infinity when empty.
fn activation_distance(planes: &[Plane]) -> f64 {
    let k = planes.len();
    if planes.iter().all(|p| p.distance <= 0.0) {
        return 0.0;
    }
    let feasible = |x: Vec3| planes.iter().all(|p| dot(p.normal, x) >= p.distance - 1e-12);
    let mut best = f64::INFINITY;
    let mut consider = |x: Vec3, multipliers_ok: bool| {
        if multipliers_ok && feasible(x) {
            best = best.min(norm(x));
        }
    };
    for i in 0..k {
        let p = planes[i];
        consider(scale(p.normal, p.distance), p.distance >= 0.0);
        for j in i + 1..k {
            let q = planes[j];
            let g = dot(p.normal, q.normal);
            let det = 1.0 - g * g;
            if det < 1e-14 {
                continue;
            }
            let l1 = (p.distance - g * q.distance) / det;
            let l2 = (q.distance - g * p.distance) / det;
            let x = [0, 1, 2].map(|a| l1 * p.normal[a] + l2 * q.normal[a]);
            consider(x, l1 >= -1e-12 && l2 >= -1e-12);
            for m in j + 1..k {
                let s = planes[m];
                let n = [p.normal, q.normal, s.normal];
                let det3 = dot(n[0], cross(n[1], n[2]));
                if det3.abs() < 1e-10 {
                    continue;
                }
                // Vertex of the three planes, then multipliers from x = Nᵀλ.
                let x = scale(
                    [0, 1, 2].map(|a| {
                        p.distance * cross(n[1], n[2])[a]
                            + q.distance * cross(n[2], n[0])[a]
                            + s.distance * cross(n[0], n[1])[a]
                    }),
                    1.0 / det3,
                );
                let lam = [
                    dot(x, cross(n[1], n[2])) / det3,
                    dot(x, cross(n[2], n[0])) / det3,
                    dot(x, cross(n[0], n[1])) / det3,
                ];
                consider(x, lam.iter().all(|&l| l >= -1e-12));
            }
        }
    }
    best
}

/// Orbit label of a coefficient vector under coordinate permutations and
/// global sign: 1 for `b_i`, 2 for `b_i + b_j`, 3 for `b₁ + b₂ + b₃`,
/// 4 for `b_i − b_j`, 5 for `b_i + b_j − b_k`, 0 otherwise.
pub fn plane_kind(coeffs: [i64; 3]) -> u8 {
    let canon = |mut c: [i64; 3]| {
        c.sort_unstable();
        c
    };
    let a = canon(coeffs);
    let b = canon(coeffs.map(|x| -x));
    match a.max(b) {
        [0, 0, 1] => 1,
        [0, 1, 1] => 2,
        [1, 1, 1] => 3,
        [-1, 0, 1] => 4,
        [-1, 1, 1] => 5,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectorPlane {
    /// Lattice coefficients of the neighbour generating this facet.
    pub coeffs: [i64; 3],
    pub plane: Plane,
    pub kind: u8,
    pub face_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrisectorEdge {
    /// Indices into the facet list.
    pub planes: (usize, usize),
    /// Distance from the origin to the edge segment.
    pub distance: f64,
    /// `[kind_a, kind_b, kind of the neighbour difference]` with `kind_a ≤ kind_b`.
    pub subtype: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellVertex {
    pub position: [f64; 3],
    pub distance: f64,
    pub planes: Vec<usize>,
}

/// Caps of facets meeting at a common cell vertex, with positive volume
/// intersection below the covering radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapTerm {
    pub planes: Vec<usize>,
    /// Radius above which the intersection has positive volume.
    pub activation: f64,
}

/// Number of items sharing (approximately) the same distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceClass {
    pub distance: f64,
    pub count: usize,
}

fn classes(mut values: Vec<f64>, tol: f64) -> Vec<DistanceClass> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<DistanceClass> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some(c) if (v - c.distance).abs() <= tol => c.count += 1,
            _ => out.push(DistanceClass { distance: v, count: 1 }),
        }
    }
    out
}

/// Facets, edges and vertices of the Voronoi cell of `L_δ` in ℝ³ together
/// with the inclusion–exclusion terms up to the covering radius.
#[derive(Debug, Clone, Serialize)]
pub struct CapArrangement {
    pub delta: f64,
    pub covering_radius: f64,
    pub planes: Vec<BisectorPlane>,
    pub edges: Vec<TrisectorEdge>,
    pub vertices: Vec<CellVertex>,
    pub terms: Vec<CapTerm>,
    /// False when the cell does not have the combinatorics shared by its
    /// neighbouring distortions (14/36/24 below 1, 12/24/14 above 1).
    pub generic: bool,
    #[serde(skip)]
    cell: Polytope,
}

impl CapArrangement {
    pub fn new(delta: f64) -> Result<Self> {
        let lat = DistortedLattice::new(3, delta)?;
        let rcov = lat.covering_radius();
        let vectors: Vec<_> = lat
            .vectors_within(2.0 * rcov * (1.0 + 1e-9))
            .into_iter()
            .filter(|v| v.norm > 0.0)
            .collect();
        let mut cell = Polytope::cube(2.0 * rcov);
        for (i, v) in vectors.iter().enumerate() {
            cell.clip(scale(to3(&v.point), 1.0 / v.norm), v.norm / 2.0, Some(i));
        }
        cell.prune(1e-10 * rcov * rcov);
        let degenerate = || Error::DegenerateCell(delta);
        if cell.faces.iter().any(|f| f.tag.is_none()) || (cell.volume() - delta).abs() > 1e-9 * delta.max(1.0) {
            return Err(degenerate());
        }

        let planes: Vec<BisectorPlane> = cell
            .faces
            .iter()
            .map(|f| {
                let v = &vectors[f.tag.unwrap_or(0)];
                let coeffs = [v.coeffs[0], v.coeffs[1], v.coeffs[2]];
                BisectorPlane {
                    coeffs,
                    plane: Plane {
                        normal: f.normal,
                        distance: f.offset,
                    },
                    kind: plane_kind(coeffs),
                    face_area: f.area(),
                }
            })
            .collect();

        // Merge face vertices into cell vertices.
        let tol = 1e-9 * rcov;
        let mut vertices: Vec<CellVertex> = Vec::new();
        for (fi, f) in cell.faces.iter().enumerate() {
            for p in &f.vertices {
                match vertices.iter_mut().find(|v| norm(sub(to_arr(v.position), *p)) <= tol) {
                    Some(v) => {
                        if !v.planes.contains(&fi) {
                            v.planes.push(fi);
                        }
                    }
                    None => vertices.push(CellVertex {
                        position: *p,
                        distance: norm(*p),
                        planes: vec![fi],
                    }),
                }
            }
        }
        for v in &mut vertices {
            v.planes.sort_unstable();
        }

        let mut edges = Vec::new();
        for a in 0..planes.len() {
            for b in a + 1..planes.len() {
                let shared: Vec<Vec3> = vertices
                    .iter()
                    .filter(|v| v.planes.contains(&a) && v.planes.contains(&b))
                    .map(|v| v.position)
                    .collect();
                if shared.len() != 2 {
                    continue;
                }
                let (ka, kb) = (planes[a].kind, planes[b].kind);
                let diff = [0, 1, 2].map(|i| planes[b].coeffs[i] - planes[a].coeffs[i]);
                edges.push(TrisectorEdge {
                    planes: (a, b),
                    distance: segment_distance(shared[0], shared[1]),
                    subtype: [ka.min(kb), ka.max(kb), plane_kind(diff)],
                });
            }
        }

        let generic = matches!(
            (delta.total_cmp(&1.0), planes.len(), edges.len(), vertices.len()),
            (std::cmp::Ordering::Less, 14, 36, 24) | (std::cmp::Ordering::Greater, 12, 24, 14)
        );

        let plain: Vec<Plane> = planes.iter().map(|p| p.plane).collect();
        let terms = enumerate_terms(&plain, &vertices, rcov);

        Ok(CapArrangement {
            delta,
            covering_radius: rcov,
            planes,
            edges,
            vertices,
            terms,
            generic,
            cell,
        })
    }

    pub fn plane_classes(&self) -> Vec<DistanceClass> {
        classes(
            self.planes.iter().map(|p| p.plane.distance).collect(),
            1e-9 * self.covering_radius,
        )
    }

    pub fn edge_classes(&self) -> Vec<DistanceClass> {
        classes(
            self.edges.iter().map(|e| e.distance).collect(),
            1e-9 * self.covering_radius,
        )
    }

    pub fn vertex_classes(&self) -> Vec<DistanceClass> {
        classes(
            self.vertices.iter().map(|v| v.distance).collect(),
            1e-9 * self.covering_radius,
        )
    }

    /// Edge subtypes with their counts, sorted by subtype.
    pub fn edge_subtype_counts(&self) -> Vec<([u8; 3], usize)> {
        let mut out: Vec<([u8; 3], usize)> = Vec::new();
        for e in &self.edges {
            match out.iter_mut().find(|(s, _)| *s == e.subtype) {
                Some((_, c)) => *c += 1,
                None => out.push((e.subtype, 1)),
            }
        }
        out.sort();
        out
    }

    /// `vol(V ∩ B_r)` by inclusion–exclusion over cap intersections.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r >= self.covering_radius {
            return Ok(self.delta);
        }
        let planes: Vec<Plane> = self.planes.iter().map(|p| p.plane).collect();
        let mut outside = 0.0;
        for term in self.terms.iter().filter(|t| t.activation < r) {
            let set: Vec<Plane> = term.planes.iter().map(|&i| planes[i]).collect();
            let v = cap_intersection_unchecked(r, &set);
            if term.planes.len() % 2 == 1 {
                outside += v;
            } else {
                outside -= v;
            }
        }
        let ball = 4.0 / 3.0 * PI * r * r * r;
        Ok((ball - outside).clamp(0.0, self.delta))
    }

    /// `vol(V ∩ B_r)` from the cone decomposition of the cell itself.
    pub fn ball_volume_direct(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.cell.ball_intersection_volume(r).min(self.delta))
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell.volume()
    }
}

fn to3(p: &[f64]) -> Vec3 {
    [p[0], p[1], p[2]]
}

fn to_arr(p: [f64; 3]) -> Vec3 {
    p
}

fn segment_distance(a: Vec3, b: Vec3) -> f64 {
    let e = sub(b, a);
    let t = (-dot(a, e) / dot(e, e)).clamp(0.0, 1.0);
    norm([0, 1, 2].map(|i| a[i] + t * e[i]))
}

// Inclusion–exclusion restricted to facet sets sharing a cell vertex. For a
// point outside the cell the facets it sees form a contractible patch of the
// boundary, so the alternating count over such sets is exactly one.
fn enumerate_terms(planes: &[Plane], vertices: &[CellVertex], rmax: f64) -> Vec<CapTerm> {
    let mut sets = std::collections::BTreeSet::new();
    for v in vertices {
        let k = v.planes.len();
        for mask in 1u32..(1 << k) {
            let set: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| v.planes[b]).collect();
            sets.insert(set);
        }
    }
    let mut out: Vec<CapTerm> = sets
        .into_iter()
        .filter_map(|set| {
            let p: Vec<Plane> = set.iter().map(|&j| planes[j]).collect();
            let activation = activation_distance(&p);
            (activation < rmax * (1.0 - 1e-12)).then_some(CapTerm {
                planes: set,
                activation,
            })
        })
        .collect();
    out.sort_by(|a, b| a.activation.total_cmp(&b.activation).then(a.planes.cmp(&b.planes)));
    out
}

/// `vol(V ∩ B_r)` for the 3D lattice with distortion `δ`.
pub fn voronoi_ball_volume_3d(delta: f64, r: f64) -> Result<f64> {
    CapArrangement::new(delta)?.ball_volume(r)
}

/// Volume-based overlap `density − union` in ℝ³.
pub fn vol_overlap_3d(delta: f64, r: f64) -> Result<f64> {
    let arr = CapArrangement::new(delta)?;
    vol_overlap_with(&arr, r)
}

pub(crate) fn vol_overlap_with(arr: &CapArrangement, r: f64) -> Result<f64> {
    let ball = 4.0 / 3.0 * PI * r * r * r;
    Ok(((ball - arr.ball_volume(r)?) / arr.delta).max(0.0))
}

/// Build the cap arrangement for `δ`.
pub fn build_cap_arrangement(delta: f64) -> Result<CapArrangement> {
    CapArrangement::new(delta)
}
