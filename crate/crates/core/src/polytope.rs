//! Convex polytopes in ℝ³ and exact integrals of radial weights over them.
//!
//! The volume of `B_r ∩ P` is computed through the field
//! `F(x) = x/3` inside the ball and `r³x/(3|x|³)` outside, whose divergence
//! is the ball indicator. Each face contributes `(d/3)∫_F min(1, r³/|x|³) dA`
//! with `d` the signed face offset, and every face integral reduces to a sum
//! over edges of a one-dimensional antiderivative in the edge angle.

pub(crate) type Vec3 = [f64; 3];
pub(crate) type Vec2 = [f64; 2];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Some unit vector orthogonal to the unit vector `n`.
pub(crate) fn orthogonal(n: Vec3) -> Vec3 {
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let v = sub(pick, scale(n, dot(n, pick)));
    scale(v, 1.0 / norm(v))
}

/// A face lying in `normal · x = offset` with `normal` the unit outward normal.
/// Vertices run counter-clockwise seen from outside.
#[derive(Debug, Clone)]
pub(crate) struct Face {
    pub normal: Vec3,
    pub offset: f64,
    pub vertices: Vec<Vec3>,
    pub tag: Option<usize>,
}

impl Face {
    pub fn area(&self) -> f64 {
        let mut acc = [0.0; 3];
        let v = &self.vertices;
        for i in 1..v.len().saturating_sub(1) {
            acc = add(acc, cross(sub(v[i], v[0]), sub(v[i + 1], v[0])));
        }
        0.5 * dot(acc, self.normal)
    }
}

/// Bounded convex polytope given by its faces.
#[derive(Debug, Clone)]
pub(crate) struct Polytope {
    pub faces: Vec<Face>,
    tol: f64,
}

fn order_ccw(points: &mut [Vec3], normal: Vec3) {
    let n = points.len() as f64;
    let c = points.iter().fold([0.0; 3], |acc, p| add(acc, *p));
    let c = scale(c, 1.0 / n);
    let e1 = orthogonal(normal);
    let e2 = cross(normal, e1);
    points.sort_by(|a, b| {
        let da = sub(*a, c);
        let db = sub(*b, c);
        let ta = dot(da, e2).atan2(dot(da, e1));
        let tb = dot(db, e2).atan2(dot(db, e1));
        ta.total_cmp(&tb)
    });
}

fn dedup(points: &mut Vec<Vec3>, tol: f64) {
    let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if !out.iter().any(|q| norm(sub(p, *q)) <= tol) {
            out.push(p);
        }
    }
    *points = out;
}

impl Polytope {
    /// Axis-aligned cube `[-h, h]³`.
    pub fn cube(h: f64) -> Self {
        let mut faces = Vec::with_capacity(6);
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut normal = [0.0; 3];
                normal[axis] = sign;
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut vertices = Vec::with_capacity(4);
                for (sa, sb) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                    let mut p = [0.0; 3];
                    p[axis] = sign * h;
                    p[a] = sa * h;
                    p[b] = sb * h;
                    vertices.push(p);
                }
                order_ccw(&mut vertices, normal);
                faces.push(Face {
                    normal,
                    offset: h,
                    vertices,
                    tag: None,
                });
            }
        }
        Polytope {
            faces,
            tol: 1e-12 * h.max(1e-300),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Intersect with `normal · x ≤ offset`; `normal` must be a unit vector.
    pub fn clip(&mut self, normal: Vec3, offset: f64, tag: Option<usize>) {
        let tol = self.tol;
        let mut cap: Vec<Vec3> = Vec::new();
        let mut kept = Vec::with_capacity(self.faces.len() + 1);
        for face in self.faces.drain(..) {
            let v = &face.vertices;
            let s: Vec<f64> = v.iter().map(|p| dot(normal, *p) - offset).collect();
            if s.iter().all(|&x| x <= tol) {
                for (p, &x) in v.iter().zip(&s) {
                    if x.abs() <= tol {
                        cap.push(*p);
                    }
                }
                kept.push(face);
                continue;
            }
            let mut out = Vec::with_capacity(v.len() + 1);
            for i in 0..v.len() {
                let j = (i + 1) % v.len();
                let (p, q, sp, sq) = (v[i], v[j], s[i], s[j]);
                if sp <= tol {
                    out.push(p);
                    if sp.abs() <= tol {
                        cap.push(p);
                    }
                }
                if (sp < -tol && sq > tol) || (sp > tol && sq < -tol) {
                    let t = sp / (sp - sq);
                    let x = add(p, scale(sub(q, p), t));
                    out.push(x);
                    cap.push(x);
                }
            }
            dedup(&mut out, tol);
            if out.len() >= 3 {
                let f = Face {
                    vertices: out,
                    ..face
                };
                if f.area() > tol * tol {
                    kept.push(f);
                }
            }
        }
        dedup(&mut cap, tol);
        if cap.len() >= 3 {
            order_ccw(&mut cap, normal);
            let f = Face {
                normal,
                offset,
                vertices: cap,
                tag,
            };
            if f.area() > tol * tol {
                kept.push(f);
            }
        }
        // Fewer than four faces cannot bound a solid: the cut removed everything.
        if kept.len() < 4 {
            kept.clear();
        }
        self.faces = kept;
    }

    /// Drop faces whose area is below `min_area`.
    pub fn prune(&mut self, min_area: f64) {
        self.faces.retain(|f| f.area() > min_area);
    }

    pub fn volume(&self) -> f64 {
        self.faces.iter().map(|f| f.offset * f.area() / 3.0).sum()
    }

    /// Exact `vol(B_r ∩ P)` for the ball of radius `r` centered at the origin.
    pub fn ball_intersection_volume(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for f in &self.faces {
            let d = f.offset;
            if d.abs() <= 1e-300 {
                continue;
            }
            let foot = scale(f.normal, d);
            let e1 = orthogonal(f.normal);
            let e2 = cross(f.normal, e1);
            let poly: Vec<Vec2> = f
                .vertices
                .iter()
                .map(|p| {
                    let q = sub(*p, foot);
                    [dot(q, e1), dot(q, e2)]
                })
                .collect();
            let integral = polygon_integral(&poly, |h, t| cone_kernel(r, d, h, t));
            total += d / 3.0 * integral;
        }
        total.max(0.0)
    }
}

/// Signed area of a 2D polygon.
pub(crate) fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
        / 2.0
}

/// `∫_poly g(|y|) dA` for a radial weight `g`, given `phi(h, θ)`, the integral
/// of `g` over the sector-like triangle spanned by the foot of a line at
/// distance `h` and the point at angle `θ` along it. `phi` must be odd in `θ`.
/// Orientation of `poly` does not matter.
pub(crate) fn polygon_integral<K>(poly: &[Vec2], phi: K) -> f64
where
    K: Fn(f64, f64) -> f64,
{
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let e = [q[0] - p[0], q[1] - p[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        if len2 == 0.0 {
            continue;
        }
        let t = -(p[0] * e[0] + p[1] * e[1]) / len2;
        let foot = [p[0] + t * e[0], p[1] + t * e[1]];
        let h = foot[0].hypot(foot[1]);
        // Triangle (0, p, q) is degenerate when its base line passes through 0.
        if h <= 1e-15 * len2.sqrt() {
            continue;
        }
        let f = [foot[0] / h, foot[1] / h];
        let angle = |x: Vec2| (f[0] * x[1] - f[1] * x[0]).atan2(f[0] * x[0] + f[1] * x[1]);
        sum += phi(h, angle(q)) - phi(h, angle(p));
    }
    if signed_area(poly) < 0.0 {
        -sum
    } else {
        sum
    }
}

/// Triangle integral of `min(1, r³/(d² + ρ²)^{3/2})` for a face at offset `d`.
pub(crate) fn cone_kernel(r: f64, d: f64, h: f64, theta: f64) -> f64 {
    let d2 = d * d;
    let a2 = (r * r - d2).max(0.0);
    let a = a2.sqrt();
    let c = r.max(d.abs());
    let k = a2 / 2.0 + r * r * r / c;
    // asin(d·sin t/√(d² + h²)) / d, written with atan2 to stay accurate near ±1.
    let l = |t: f64| (d * t.sin()).atan2((h * h + d2 * t.cos().powi(2)).sqrt()) / d;
    let sign = theta.signum();
    let t = theta.abs();
    let value = if h >= a {
        k * t - r * r * r * l(t)
    } else {
        let ta = (h / a).acos();
        if t <= ta {
            h * h * t.tan() / 2.0
        } else {
            h * h * ta.tan() / 2.0 + k * (t - ta) - r * r * r * (l(t) - l(ta))
        }
    };
    sign * value
}

/// Triangle integral of the disk indicator `ρ < r`.
#[cfg(test)]
pub(crate) fn disk_area_kernel(r: f64, h: f64, theta: f64) -> f64 {
    let sign = theta.signum();
    let t = theta.abs();
    let value = if h >= r {
        r * r * t / 2.0
    } else {
        let p0 = (h / r).acos();
        if t <= p0 {
            h * h * t.tan() / 2.0
        } else {
            h * h * p0.tan() / 2.0 + r * r * (t - p0) / 2.0
        }
    };
    sign * value
}

/// Triangle integral of the chord length `2√(r² − ρ²)` of the ball.
pub(crate) fn chord_kernel(r: f64, h: f64, theta: f64) -> f64 {
    let sign = theta.signum();
    let t = theta.abs();
    let r3 = r * r * r;
    let value = if h >= r {
        2.0 / 3.0 * r3 * t
    } else {
        let p0 = (h / r).acos();
        2.0 / 3.0 * (r3 * t - chord_deficit(r, h, t.min(p0)))
    };
    sign * value
}

// ∫₀^φ (r² − h² sec² t)^{3/2} dt for 0 ≤ φ ≤ arccos(h/r), h < r.
fn chord_deficit(r: f64, h: f64, phi: f64) -> f64 {
    let a2 = r * r - h * h;
    let tt = phi.tan();
    let s = (a2 - h * h * tt * tt).max(0.0).sqrt();
    r * r * r * (r * tt).atan2(s) - h * (r * r + a2 / 2.0) * (h * tt).atan2(s) - h * h * tt * s / 2.0
}

/// Clip a convex 2D polygon to `n · y ≥ d`.
pub(crate) fn clip_halfplane(poly: &[Vec2], n: Vec2, d: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        let sp = n[0] * p[0] + n[1] * p[1] - d;
        let sq = n[0] * q[0] + n[1] * q[1] - d;
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

pub(crate) fn square(h: f64) -> Vec<Vec2> {
    vec![[-h, -h], [h, -h], [h, h], [-h, h]]
}
