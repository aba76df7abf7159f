//! Pixel-centre rasterization of texel shapes (no anti-aliasing, so every
//! covered pixel carries the exact class color).

use std::f64::consts::PI;

use super::PolygonKind;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Primitive {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Convex polygon, counter-clockwise in pixel coordinates.
    Convex {
        vertices: [[f64; 2]; 4],
        len: usize,
    },
    /// Infinite stripe `|normal . (q - origin)| <= half_width`.
    Stripe {
        origin: [f64; 2],
        normal: [f64; 2],
        half_width: f64,
    },
}

impl Primitive {
    pub(crate) fn polygon(kind: PolygonKind, center: [f64; 2], diameter: f64, angle_deg: f64) -> Self {
        let r = diameter / 2.0;
        let theta = angle_deg.to_radians();
        let at = |phi: f64, rad: f64| [center[0] + rad * phi.cos(), center[1] + rad * phi.sin()];
        match kind {
            PolygonKind::Square => {
                let v = [0, 1, 2, 3].map(|k| at(theta + PI / 4.0 + k as f64 * PI / 2.0, r));
                Primitive::Convex { vertices: v, len: 4 }
            }
            PolygonKind::Triangle => {
                let mut v = [[0.0; 2]; 4];
                for k in 0..3 {
                    v[k] = at(theta - PI / 2.0 + k as f64 * 2.0 * PI / 3.0, r);
                }
                Primitive::Convex { vertices: v, len: 3 }
            }
            PolygonKind::Rectangle => {
                // 2:1 aspect with the long side along `theta`
                let phi = 0.5f64.atan();
                let v = [phi, PI - phi, PI + phi, 2.0 * PI - phi].map(|a| at(theta + a, r));
                Primitive::Convex { vertices: v, len: 4 }
            }
        }
    }

    /// Analytic area; for stripes, the area per unit length.
    pub(crate) fn nominal_area(&self) -> f64 {
        match *self {
            Primitive::Disk { radius, .. } => PI * radius * radius,
            Primitive::Convex { vertices, len } => {
                let mut a = 0.0;
                for k in 0..len {
                    let p = vertices[k];
                    let q = vertices[(k + 1) % len];
                    a += p[0] * q[1] - q[0] * p[1];
                }
                a.abs() / 2.0
            }
            Primitive::Stripe { half_width, .. } => 2.0 * half_width,
        }
    }

    fn contains(&self, q: [f64; 2]) -> bool {
        match *self {
            Primitive::Disk { center, radius } => {
                let dx = q[0] - center[0];
                let dy = q[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Primitive::Convex { vertices, len } => {
                let mut sign = 0.0f64;
                for k in 0..len {
                    let p = vertices[k];
                    let r = vertices[(k + 1) % len];
                    let c = (r[0] - p[0]) * (q[1] - p[1]) - (r[1] - p[1]) * (q[0] - p[0]);
                    if c.abs() < 1e-12 {
                        continue;
                    }
                    if sign == 0.0 {
                        sign = c.signum();
                    } else if c.signum() != sign {
                        return false;
                    }
                }
                true
            }
            Primitive::Stripe {
                origin,
                normal,
                half_width,
            } => (normal[0] * (q[0] - origin[0]) + normal[1] * (q[1] - origin[1])).abs() <= half_width,
        }
    }

    /// Pixels of a `size x size` canvas whose centres fall inside the shape.
    pub(crate) fn rasterize(&self, size: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        match *self {
            Primitive::Stripe {
                origin,
                normal,
                half_width,
            } => {
                // per row, the covered x range is an interval
                for y in 0..size {
                    let cy = y as f64 + 0.5;
                    let base = normal[1] * (cy - origin[1]) - normal[0] * origin[0];
                    let (x0, x1) = if normal[0].abs() < 1e-12 {
                        if base.abs() <= half_width {
                            (0, size as i64 - 1)
                        } else {
                            continue;
                        }
                    } else {
                        // normal[0] * cx + base in [-hw, hw]
                        let a = (-half_width - base) / normal[0];
                        let b = (half_width - base) / normal[0];
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        ((lo - 0.5).ceil() as i64, (hi - 0.5).floor() as i64)
                    };
                    let x0 = x0.max(0);
                    let x1 = x1.min(size as i64 - 1);
                    for x in x0..=x1 {
                        if self.contains([x as f64 + 0.5, cy]) {
                            out.push((x as u32, y));
                        }
                    }
                }
            }
            _ => {
                let (lo, hi) = self.extent();
                let clamp = |v: f64| v.clamp(0.0, size as f64) as u32;
                let (x0, x1) = (clamp(lo[0].floor()), clamp(hi[0].ceil()));
                let (y0, y1) = (clamp(lo[1].floor()), clamp(hi[1].ceil()));
                for y in y0..y1 {
                    for x in x0..x1 {
                        if self.contains([x as f64 + 0.5, y as f64 + 0.5]) {
                            out.push((x, y));
                        }
                    }
                }
            }
        }
        out
    }

    fn extent(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Primitive::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Primitive::Convex { vertices, len } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in &vertices[..len] {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
            Primitive::Stripe { .. } => ([f64::NEG_INFINITY; 2], [f64::INFINITY; 2]),
        }
    }
}

/// Length of the segment a line through `origin` along `dir` cuts from the
/// square `[0, size]^2`.
pub(crate) fn chord_length(origin: [f64; 2], dir: [f64; 2], size: f64) -> f64 {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for d in 0..2 {
        if dir[d].abs() < 1e-12 {
            if origin[d] < 0.0 || origin[d] > size {
                return 0.0;
            }
        } else {
            let a = (0.0 - origin[d]) / dir[d];
            let b = (size - origin[d]) / dir[d];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t1 - t0).max(0.0) * dir[0].hypot(dir[1])
}
