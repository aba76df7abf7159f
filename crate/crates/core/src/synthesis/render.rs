use std::f64::consts::PI;

use image::{Rgb as Pixel, RgbImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::raster::{chord_length, Primitive};
use super::{norm, ElementClassSpec, GroundTruth, Shading, ShapeClass, TexelAnnotation, TextureSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::texel::TexelMask;

/// A texel is annotated when at least this fraction of its nominal area lies
/// inside the canvas.
pub const MIN_VISIBLE_FRACTION: f64 = 0.5;

/// Specs whose classes collide on more than this fraction of texels are
/// rejected as infeasible.
pub const MAX_COLLISION_FRACTION: f64 = 0.2;

const STREAM_CLASS: u64 = 0x100;
const STREAM_SHADING: u64 = 0x200;

struct Placed {
    anchor: [f64; 2],
    primitive: Primitive,
    nominal: f64,
}

/// Rasterizes `spec`, returning the image and its ground truth.
pub fn render(spec: &TextureSpec) -> Result<(RgbImage, GroundTruth)> {
    spec.validate()?;
    let size = spec.canvas_px;
    let n_px = (size as usize) * (size as usize);

    // class index + 1 of the last class drawn at each pixel
    let mut owner = vec![0u8; n_px];
    let mut covered_by = vec![[false; 2]; n_px];
    let mut per_class: Vec<Vec<(Placed, Vec<(u32, u32)>)>> = Vec::new();

    for (ci, class) in spec.classes.iter().enumerate() {
        let mut rng = rng::stream(spec.seed, STREAM_CLASS + ci as u64);
        let placed = place_class(class, size, &mut rng);
        let mut texels = Vec::with_capacity(placed.len());
        for p in placed {
            let pixels = p.primitive.rasterize(size);
            if pixels.is_empty() {
                continue;
            }
            for &(x, y) in &pixels {
                let i = y as usize * size as usize + x as usize;
                owner[i] = ci as u8 + 1;
                covered_by[i][ci] = true;
            }
            texels.push((p, pixels));
        }
        per_class.push(texels);
    }

    let mut texels = Vec::new();
    let mut colliding = 0usize;
    for (ci, placed) in per_class.iter().enumerate() {
        let class = &spec.classes[ci];
        for (p, pixels) in placed {
            if p.nominal <= 0.0 || (pixels.len() as f64) < MIN_VISIBLE_FRACTION * p.nominal {
                continue;
            }
            let mut collides = false;
            let visible: Vec<(u32, u32)> = pixels
                .iter()
                .copied()
                .filter(|&(x, y)| {
                    let i = y as usize * size as usize + x as usize;
                    if covered_by[i].iter().enumerate().any(|(k, &c)| c && k != ci) {
                        collides = true;
                    }
                    owner[i] == ci as u8 + 1
                })
                .collect();
            colliding += collides as usize;
            let Some(mask) = TexelMask::from_pixels(&visible) else {
                continue;
            };
            texels.push(TexelAnnotation {
                id: texels.len(),
                class_index: ci,
                shape: class.shape.kind(),
                polygon_kind: match class.shape {
                    ShapeClass::Polygon { subkind } => Some(subkind),
                    _ => None,
                },
                color: class.color,
                centroid: mask.centroid(),
                anchor: p.anchor,
                mask,
            });
        }
    }
    if spec.classes.len() > 1 && colliding as f64 > MAX_COLLISION_FRACTION * texels.len() as f64 {
        return Err(Error::InfeasibleSpec {
            colliding,
            total: texels.len(),
        });
    }

    let mut image = RgbImage::from_pixel(size, size, Pixel(spec.background_color));
    for (i, &o) in owner.iter().enumerate() {
        if o > 0 {
            let (x, y) = ((i % size as usize) as u32, (i / size as usize) as u32);
            image.put_pixel(x, y, Pixel(spec.classes[o as usize - 1].color));
        }
    }
    if spec.shading == Shading::Perturbed {
        perturb_shading(&mut image, spec.seed);
    }

    Ok((
        image,
        GroundTruth {
            canvas_px: size,
            texels,
            per_class_layout: spec.classes.iter().map(|c| c.layout).collect(),
        },
    ))
}

/// Lattice placements for one class, in row-major lattice order. Random
/// draws happen for every enumerated site so results do not depend on
/// clipping.
fn place_class(class: &ElementClassSpec, size: u32, rng: &mut ChaCha8Rng) -> Vec<Placed> {
    let layout = &class.layout;
    let (smin, smax) = class.size_px;
    let (amin, amax) = class.orientation_deg;
    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if hi > lo {
            rng.gen_range(lo..=hi)
        } else {
            lo
        }
    };
    let radius = layout.jitter * layout.min_basis_len();
    let mut out = Vec::new();

    match class.shape {
        ShapeClass::Line => {
            let u = layout.basis_u;
            let spacing = norm(u);
            let n = [u[0] / spacing, u[1] / spacing];
            let dir = [-n[1], n[0]];
            let margin = smax + radius + 1.0;
            let (lo, hi) = projection_range(size, n, layout.phase, margin);
            let (i0, i1) = ((lo / spacing).floor() as i64 - 1, (hi / spacing).ceil() as i64 + 1);
            for i in i0..=i1 {
                let offset = if radius > 0.0 {
                    rng.gen_range(-radius..=radius)
                } else {
                    0.0
                };
                let thickness = draw(rng, smin, smax);
                let s = i as f64 * spacing + offset;
                let anchor = [layout.phase[0] + s * n[0], layout.phase[1] + s * n[1]];
                let chord = chord_length(anchor, dir, size as f64);
                out.push(Placed {
                    anchor,
                    primitive: Primitive::Stripe {
                        origin: anchor,
                        normal: n,
                        half_width: thickness / 2.0,
                    },
                    nominal: thickness * chord,
                });
            }
        }
        shape => {
            let u = layout.basis_u;
            let v = layout.basis_v.expect("validated grid layout");
            let margin = smax / 2.0 + radius + 1.0;
            for (i, j) in lattice_indices(size, u, v, layout.phase, margin) {
                let base = [
                    layout.phase[0] + i as f64 * u[0] + j as f64 * v[0],
                    layout.phase[1] + i as f64 * u[1] + j as f64 * v[1],
                ];
                let (dx, dy) = if radius > 0.0 {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let a = 2.0 * PI * rng.gen::<f64>();
                    (r * a.cos(), r * a.sin())
                } else {
                    (0.0, 0.0)
                };
                let diameter = draw(rng, smin, smax);
                let angle = draw(rng, amin, amax);
                let anchor = [base[0] + dx, base[1] + dy];
                let m = size as f64 + margin;
                if anchor[0] < -margin || anchor[1] < -margin || anchor[0] > m || anchor[1] > m {
                    continue;
                }
                let primitive = match shape {
                    ShapeClass::Circle => Primitive::Disk {
                        center: anchor,
                        radius: diameter / 2.0,
                    },
                    ShapeClass::Polygon { subkind } => Primitive::polygon(subkind, anchor, diameter, angle),
                    ShapeClass::Line => unreachable!(),
                };
                out.push(Placed {
                    anchor,
                    nominal: primitive.nominal_area(),
                    primitive,
                });
            }
        }
    }
    out
}

/// Range of `n . (q - phase)` over the canvas grown by `margin`.
fn projection_range(size: u32, n: [f64; 2], phase: [f64; 2], margin: f64) -> (f64, f64) {
    let s = size as f64;
    let corners = [[-margin, -margin], [s + margin, -margin], [-margin, s + margin], [s + margin, s + margin]];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let p = n[0] * (c[0] - phase[0]) + n[1] * (c[1] - phase[1]);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// Lattice indices `(i, j)` whose points may land within `margin` of the
/// canvas, ordered by `j` then `i`.
pub(crate) fn lattice_indices(
    size: u32,
    u: [f64; 2],
    v: [f64; 2],
    phase: [f64; 2],
    margin: f64,
) -> Vec<(i64, i64)> {
    let det = u[0] * v[1] - u[1] * v[0];
    let s = size as f64;
    let corners = [[-margin, -margin], [s + margin, -margin], [-margin, s + margin], [s + margin, s + margin]];
    let (mut imin, mut imax, mut jmin, mut jmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in corners {
        let dx = c[0] - phase[0];
        let dy = c[1] - phase[1];
        let i = (v[1] * dx - v[0] * dy) / det;
        let j = (-u[1] * dx + u[0] * dy) / det;
        imin = imin.min(i);
        imax = imax.max(i);
        jmin = jmin.min(j);
        jmax = jmax.max(j);
    }
    let mut out = Vec::new();
    for j in (jmin.floor() as i64 - 1)..=(jmax.ceil() as i64 + 1) {
        for i in (imin.floor() as i64 - 1)..=(imax.ceil() as i64 + 1) {
            out.push((i, j));
        }
    }
    out
}

/// Smooth multiplicative gain in [0.9, 1.1] plus integer noise of at most
/// two levels.
fn perturb_shading(image: &mut RgbImage, seed: u64) {
    let mut rng = rng::stream(seed, STREAM_SHADING);
    let size = image.width() as f64;
    let waves: Vec<([f64; 2], f64)> = (0..3)
        .map(|_| {
            let mut f = [0.0; 2];
            while f == [0.0, 0.0] {
                f = [rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64];
            }
            (f, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    for (x, y, px) in image.enumerate_pixels_mut() {
        let (fx, fy) = ((x as f64 + 0.5) / size, (y as f64 + 0.5) / size);
        let wave: f64 = waves
            .iter()
            .map(|(f, phase)| (2.0 * PI * (f[0] * fx + f[1] * fy) + phase).cos())
            .sum::<f64>()
            / waves.len() as f64;
        let gain = 1.0 + 0.1 * wave;
        for c in px.0.iter_mut() {
            let noise = rng.gen_range(-2i32..=2) as f64;
            *c = (*c as f64 * gain + noise).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Number of grid sites whose texel would be annotated, found by
/// enumerating the lattice independently of rendering. Used as a test oracle
/// for jitter-free layouts.
#[cfg(test)]
pub(crate) fn count_visible_sites(layout: &super::LayoutSpec, size: u32, diameter: f64) -> usize {
    let u = layout.basis_u;
    let v = layout.basis_v.unwrap();
    let mut n = 0;
    for (i, j) in lattice_indices(size, u, v, layout.phase, diameter) {
        let c = [
            layout.phase[0] + i as f64 * u[0] + j as f64 * v[0],
            layout.phase[1] + i as f64 * u[1] + j as f64 * v[1],
        ];
        let r = diameter / 2.0;
        let mut inside = 0usize;
        let lo = |a: f64| (a - r).floor().max(0.0) as i64;
        let hi = |a: f64| (a + r).ceil().min(size as f64) as i64;
        for y in lo(c[1])..hi(c[1]) {
            for x in lo(c[0])..hi(c[0]) {
                let dx = x as f64 + 0.5 - c[0];
                let dy = y as f64 + 0.5 - c[1];
                if dx * dx + dy * dy <= r * r {
                    inside += 1;
                }
            }
        }
        if inside > 0 && inside as f64 >= MIN_VISIBLE_FRACTION * PI * r * r {
            n += 1;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::super::{LayoutSpec, PolygonKind};
    use super::*;
    use crate::color::Rgb;

    const RED: Rgb = [220, 20, 20];
    const WHITE: Rgb = [250, 250, 250];
    const BLUE: Rgb = [20, 40, 200];

    fn circle_spec(layout: LayoutSpec, diameter: f64) -> TextureSpec {
        TextureSpec {
            canvas_px: 1024,
            background_color: WHITE,
            classes: vec![ElementClassSpec {
                shape: ShapeClass::Circle,
                size_px: (diameter, diameter),
                orientation_deg: (0.0, 0.0),
                color: RED,
                layout,
            }],
            shading: Shading::Flat,
            seed: 1,
        }
    }

    #[test]
    fn aligned_grid_has_1024_texels_on_lattice_points() {
        let layout = LayoutSpec::grid([32.0, 0.0], [0.0, 32.0], 0.0, [16.0, 16.0]);
        let (_, gt) = render(&circle_spec(layout, 16.0)).unwrap();
        assert_eq!(gt.texels.len(), 1024);
        for t in &gt.texels {
            let i = ((t.centroid[0] - 16.0) / 32.0).round();
            let j = ((t.centroid[1] - 16.0) / 32.0).round();
            assert!((t.centroid[0] - (16.0 + 32.0 * i)).abs() <= 0.5);
            assert!((t.centroid[1] - (16.0 + 32.0 * j)).abs() <= 0.5);
            assert!(t.bbox().contains_point(t.centroid));
        }
    }

    #[test]
    fn annotation_count_matches_lattice_enumeration() {
        for (phase, basis_v) in [([3.0, 7.5], [0.0, 40.0]), ([20.0, 0.0], [12.0, 38.0]), ([-5.0, 11.0], [-20.0, 35.0])] {
            let layout = LayoutSpec::grid([41.0, 3.0], basis_v, 0.0, phase);
            let (_, gt) = render(&circle_spec(layout, 22.0)).unwrap();
            assert_eq!(gt.texels.len(), count_visible_sites(&layout, 1024, 22.0), "phase {phase:?}");
        }
    }

    #[test]
    fn horizontal_stripes() {
        let spec = TextureSpec {
            canvas_px: 1024,
            background_color: WHITE,
            classes: vec![ElementClassSpec {
                shape: ShapeClass::Line,
                size_px: (8.0, 8.0),
                orientation_deg: (0.0, 0.0),
                color: BLUE,
                layout: LayoutSpec::linear([0.0, 24.0], 0.0, [0.0, 12.0]),
            }],
            shading: Shading::Flat,
            seed: 3,
        };
        let (_, gt) = render(&spec).unwrap();
        // centres at 12 + 24 i for i = 0..=42, all fully inside
        assert_eq!(gt.texels.len(), 43);
        assert!(gt.texels.iter().all(|t| t.mask.area() == 8 * 1024));
        let spec_far = TextureSpec {
            classes: vec![ElementClassSpec {
                layout: LayoutSpec::linear([0.0, 24.0], 0.0, [0.0, 0.0]),
                ..spec.classes[0].clone()
            }],
            ..spec.clone()
        };
        // stripe at y = 0 is half clipped (4 of 8 rows): exactly at the visibility limit
        let (_, gt) = render(&spec_far).unwrap();
        assert_eq!(gt.texels.len(), 43);
        assert!((floor_stripes(1024, 24) as i64 - gt.texels.len() as i64).abs() <= 1);
    }

    fn floor_stripes(canvas: u32, spacing: u32) -> u32 {
        canvas / spacing
    }

    #[test]
    fn masks_carry_class_color() {
        let spec = TextureSpec {
            canvas_px: 256,
            background_color: WHITE,
            classes: vec![
                ElementClassSpec {
                    shape: ShapeClass::Polygon {
                        subkind: PolygonKind::Triangle,
                    },
                    size_px: (14.0, 18.0),
                    orientation_deg: (10.0, 50.0),
                    color: RED,
                    layout: LayoutSpec::grid([30.0, 0.0], [8.0, 28.0], 0.1, [5.0, 5.0]),
                },
                ElementClassSpec {
                    shape: ShapeClass::Circle,
                    size_px: (8.0, 10.0),
                    orientation_deg: (0.0, 0.0),
                    color: BLUE,
                    layout: LayoutSpec::grid([30.0, 0.0], [8.0, 28.0], 0.05, [20.0, 19.0]),
                },
            ],
            shading: Shading::Flat,
            seed: 11,
        };
        let (img, gt) = render(&spec).unwrap();
        assert!(gt.texels.iter().any(|t| t.class_index == 1));
        for t in &gt.texels {
            for (x, y) in t.mask.pixels() {
                assert_eq!(img.get_pixel(x, y).0, t.color);
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let layout = LayoutSpec::grid([32.0, 0.0], [0.0, 32.0], 0.3, [16.0, 16.0]);
        let mut spec = circle_spec(layout, 12.0);
        spec.shading = Shading::Perturbed;
        let a = render(&spec).unwrap();
        let b = render(&spec).unwrap();
        assert_eq!(a.0.as_raw(), b.0.as_raw());
        assert_eq!(a.1, b.1);
        spec.seed = 2;
        let c = render(&spec).unwrap();
        assert_ne!(a.0.as_raw(), c.0.as_raw());
    }

    #[test]
    fn perturbed_shading_stays_within_band() {
        let layout = LayoutSpec::grid([64.0, 0.0], [0.0, 64.0], 0.0, [32.0, 32.0]);
        let mut spec = circle_spec(layout, 20.0);
        spec.background_color = [128, 128, 128];
        spec.shading = Shading::Perturbed;
        let (img, _) = render(&spec).unwrap();
        spec.shading = Shading::Flat;
        let (flat, _) = render(&spec).unwrap();
        let mut changed = 0;
        for (p, q) in img.pixels().zip(flat.pixels()) {
            for (&c, &base) in p.0.iter().zip(&q.0) {
                changed += (c != base) as usize;
                let (c, base) = (c as f64, base as f64);
                assert!(c >= (base * 0.9 - 2.5).max(0.0) && c <= (base * 1.1 + 2.5).min(255.0));
            }
        }
        assert!(changed > img.len() / 2);
    }

    #[test]
    fn colliding_classes_are_infeasible() {
        let big = |color, phase| ElementClassSpec {
            shape: ShapeClass::Circle,
            size_px: (30.0, 30.0),
            orientation_deg: (0.0, 0.0),
            color,
            layout: LayoutSpec::grid([32.0, 0.0], [0.0, 32.0], 0.0, phase),
        };
        let spec = TextureSpec {
            canvas_px: 256,
            background_color: WHITE,
            classes: vec![big(RED, [16.0, 16.0]), big(BLUE, [20.0, 20.0])],
            shading: Shading::Flat,
            seed: 0,
        };
        assert!(matches!(render(&spec), Err(Error::InfeasibleSpec { .. })));
    }

    #[test]
    fn invalid_specs_rejected() {
        let layout = LayoutSpec::grid([32.0, 0.0], [64.0, 0.0], 0.0, [0.0, 0.0]);
        assert!(render(&circle_spec(layout, 10.0)).is_err());
        let layout = LayoutSpec::grid([32.0, 0.0], [0.0, 32.0], 0.6, [0.0, 0.0]);
        assert!(render(&circle_spec(layout, 10.0)).is_err());
        let layout = LayoutSpec::grid([32.0, 0.0], [0.0, 32.0], 0.0, [0.0, 0.0]);
        let mut spec = circle_spec(layout, 10.0);
        spec.background_color = [230, 10, 10];
        assert!(render(&spec).is_err());
    }
}
