use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{norm, ElementClassSpec, LayoutSpec, PolygonKind, Shading, ShapeClass, TextureSpec, DEFAULT_CANVAS_PX};
use crate::color::{name_color, Rgb};
use crate::error::{Error, Result};

/// Lower bound on the expected number of texels per class in sampled specs.
pub const MIN_EXPECTED_TEXELS: f64 = 30.0;

/// Two shades for each basic color term.
pub fn default_palette() -> Vec<Rgb> {
    vec![
        [15, 15, 15],
        [45, 40, 50],
        [25, 60, 200],
        [40, 90, 230],
        [120, 70, 30],
        [140, 80, 40],
        [128, 128, 128],
        [150, 150, 145],
        [30, 150, 40],
        [60, 170, 60],
        [250, 140, 20],
        [240, 130, 30],
        [250, 165, 200],
        [240, 150, 190],
        [120, 30, 140],
        [130, 40, 130],
        [220, 20, 30],
        [200, 10, 10],
        [250, 250, 250],
        [240, 240, 235],
        [250, 240, 40],
        [245, 230, 20],
    ]
}

/// Draws a random two-dimensional or linear texture recipe.
pub fn sample_spec(rng_seed: u64, palette: &[Rgb]) -> Result<TextureSpec> {
    let mut by_name: BTreeMap<usize, Vec<Rgb>> = BTreeMap::new();
    for &c in palette {
        by_name.entry(name_color(c)).or_default().push(c);
    }
    if by_name.len() < 3 {
        return Err(Error::InvalidPalette(format!(
            "need at least 3 colors with distinct names, got {}",
            by_name.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let canvas = DEFAULT_CANVAS_PX;
    let n_classes = if rng.gen_bool(0.35) { 2 } else { 1 };

    let mut names: Vec<usize> = by_name.keys().copied().collect();
    names.shuffle(&mut rng);
    let pick = |name: usize, rng: &mut ChaCha8Rng| *by_name[&name].choose(rng).unwrap();
    let background = pick(names[0], &mut rng);
    let colors: Vec<Rgb> = names[1..=n_classes].iter().map(|&n| pick(n, &mut rng)).collect();

    let shape_of = |kind: usize, rng: &mut ChaCha8Rng| match kind {
        0 => ShapeClass::Circle,
        1 => ShapeClass::Line,
        _ => ShapeClass::Polygon {
            subkind: *[PolygonKind::Square, PolygonKind::Triangle, PolygonKind::Rectangle]
                .choose(rng)
                .unwrap(),
        },
    };
    let mut kinds = [0usize, 1, 2];
    kinds.shuffle(&mut rng);
    if n_classes == 2 && kinds[1] == 1 {
        // lines are always the first class so points sit between stripes
        kinds.swap(0, 1);
    }
    let shapes: Vec<ShapeClass> = kinds[..n_classes].iter().map(|&k| shape_of(k, &mut rng)).collect();

    let mut classes = Vec::with_capacity(n_classes);
    let first = match shapes[0] {
        ShapeClass::Line => sample_lines(&mut rng, canvas, colors[0], n_classes == 2),
        s => sample_points(&mut rng, canvas, s, colors[0], n_classes == 2),
    };
    classes.push(first);
    if n_classes == 2 {
        classes.push(sample_companion(&mut rng, &classes[0], shapes[1], colors[1]));
    }

    let spec = TextureSpec {
        canvas_px: canvas,
        background_color: background,
        classes,
        shading: if rng.gen_bool(0.5) {
            Shading::Perturbed
        } else {
            Shading::Flat
        },
        seed: rng.gen(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Expected texels per class ignoring boundary effects: lattice cells per
/// canvas for grids, stripes crossing the canvas for lines.
pub fn expected_texel_count(class: &ElementClassSpec, canvas: u32) -> f64 {
    let s = canvas as f64;
    let u = class.layout.basis_u;
    match class.layout.basis_v {
        Some(v) => s * s / (u[0] * v[1] - u[1] * v[0]).abs(),
        None => {
            let n = [u[0] / norm(u), u[1] / norm(u)];
            s * (n[0].abs() + n[1].abs()) / norm(u)
        }
    }
}

fn orientation_range(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let spread = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..30.0) };
    let base = rng.gen_range(0.0..180.0 - spread);
    (base, base + spread)
}

fn unit(deg: f64) -> [f64; 2] {
    let r = deg.to_radians();
    [r.cos(), r.sin()]
}

fn scale(v: [f64; 2], k: f64) -> [f64; 2] {
    [v[0] * k, v[1] * k]
}

fn sample_points(rng: &mut ChaCha8Rng, canvas: u32, shape: ShapeClass, color: Rgb, paired: bool) -> ElementClassSpec {
    let cell_max = (canvas as f64).powi(2) / MIN_EXPECTED_TEXELS;
    let (u, v) = loop {
        let alpha = rng.gen_range(0.0..180.0);
        let beta = rng.gen_range(60.0..120.0);
        let su = rng.gen_range(40.0..150.0);
        let sv = rng.gen_range(40.0..150.0);
        let u = scale(unit(alpha), su);
        let v = scale(unit(alpha + beta), sv);
        if (u[0] * v[1] - u[1] * v[0]).abs() <= cell_max {
            break (u, v);
        }
    };
    let jitter = if paired {
        rng.gen_range(0.0..0.1)
    } else {
        rng.gen_range(0.0..0.3)
    };
    let min_basis = norm(u).min(norm(v));
    // keep texels from touching their lattice neighbours
    let budget = if paired {
        0.5 * point_gap(u, v) - jitter * min_basis
    } else {
        (0.85 - 2.0 * jitter) * min_basis
    };
    let diameter = rng.gen_range(0.55..0.95) * budget;
    ElementClassSpec {
        shape,
        size_px: (0.9 * diameter, diameter),
        orientation_deg: orientation_range(rng),
        color,
        layout: LayoutSpec::grid(u, v, jitter, [rng.gen_range(0.0..norm(u)), rng.gen_range(0.0..norm(v))]),
    }
}

/// Distance from a cell centre to the nearest lattice point.
fn point_gap(u: [f64; 2], v: [f64; 2]) -> f64 {
    let plus = norm([u[0] + v[0], u[1] + v[1]]);
    let minus = norm([u[0] - v[0], u[1] - v[1]]);
    plus.min(minus) / 2.0
}

fn sample_lines(rng: &mut ChaCha8Rng, canvas: u32, color: Rgb, paired: bool) -> ElementClassSpec {
    let angle = rng.gen_range(0.0..180.0);
    let n = unit(angle + 90.0);
    let extent = canvas as f64 * (n[0].abs() + n[1].abs());
    let spacing = rng.gen_range(16.0..extent / MIN_EXPECTED_TEXELS);
    let jitter = if paired {
        rng.gen_range(0.0..0.05)
    } else {
        rng.gen_range(0.0..0.2)
    };
    let frac = if paired {
        rng.gen_range(0.15..0.3)
    } else {
        rng.gen_range(0.2..(0.9f64 - 2.0 * jitter).min(0.6))
    };
    let thickness = (frac * spacing).max(3.0);
    ElementClassSpec {
        shape: ShapeClass::Line,
        size_px: (thickness, thickness),
        orientation_deg: (angle, angle),
        color,
        layout: LayoutSpec::linear(scale(n, spacing), jitter, [rng.gen_range(0.0..canvas as f64), rng.gen_range(0.0..canvas as f64)]),
    }
}

/// Second class, placed in the gaps of the first so the two rarely overlap.
fn sample_companion(rng: &mut ChaCha8Rng, first: &ElementClassSpec, shape: ShapeClass, color: Rgb) -> ElementClassSpec {
    let l = &first.layout;
    let wide = rng.gen_bool(0.5);
    let jitter = rng.gen_range(0.0..0.08);
    let (u, v, phase, room) = match l.basis_v {
        None => {
            // between stripes: across-stripe stride plus an along-stripe period
            let spacing = norm(l.basis_u);
            let n = scale(l.basis_u, 1.0 / spacing);
            let dir = [-n[1], n[0]];
            let along = spacing * rng.gen_range(1.0..2.5);
            let stride = if wide && expected_cells(spacing * 2.0 * along, first) { 2.0 } else { 1.0 };
            let u = scale(n, spacing * stride);
            let v = scale(dir, along);
            let phase = [l.phase[0] + n[0] * spacing / 2.0, l.phase[1] + n[1] * spacing / 2.0];
            let stripe_reach = first.size_px.1 / 2.0 + l.jitter * spacing;
            (u, v, phase, spacing / 2.0 - stripe_reach)
        }
        Some(bv) => {
            let cell = (l.basis_u[0] * bv[1] - l.basis_u[1] * bv[0]).abs();
            let stride = if wide && expected_cells(4.0 * cell, first) { 2.0 } else { 1.0 };
            let u = scale(l.basis_u, stride);
            let v = scale(bv, stride);
            let phase = [
                l.phase[0] + (l.basis_u[0] + bv[0]) / 2.0,
                l.phase[1] + (l.basis_u[1] + bv[1]) / 2.0,
            ];
            let first_reach = first.size_px.1 / 2.0 + l.jitter * l.min_basis_len();
            (u, v, phase, point_gap(l.basis_u, bv) - first_reach)
        }
    };
    let min_basis = norm(u).min(norm(v));
    let radius_budget = (room - jitter * min_basis).max(2.0);
    let diameter = 2.0 * radius_budget * rng.gen_range(0.6..0.9);
    ElementClassSpec {
        shape,
        size_px: (0.9 * diameter, diameter),
        orientation_deg: orientation_range(rng),
        color,
        layout: LayoutSpec::grid(u, v, jitter, phase),
    }
}

/// Whether a lattice cell of the given area keeps the expected count at
/// the minimum on the first class's canvas.
fn expected_cells(cell_area: f64, _first: &ElementClassSpec) -> bool {
    (DEFAULT_CANVAS_PX as f64).powi(2) / cell_area >= MIN_EXPECTED_TEXELS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::render;

    #[test]
    fn palette_shades_name_distinctly() {
        let names: std::collections::BTreeSet<_> = default_palette().iter().map(|&c| name_color(c)).collect();
        assert_eq!(names.len(), 11);
        for pair in default_palette().chunks(2) {
            assert_eq!(name_color(pair[0]), name_color(pair[1]), "{pair:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = default_palette();
        assert_eq!(sample_spec(7, &p).unwrap(), sample_spec(7, &p).unwrap());
        assert_ne!(sample_spec(7, &p).unwrap(), sample_spec(8, &p).unwrap());
    }

    #[test]
    fn small_palette_rejected() {
        let err = sample_spec(7, &[[255, 0, 0], [0, 0, 0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidPalette(_)));
        // three colors but only two names
        let err = sample_spec(7, &[[255, 0, 0], [250, 5, 5], [0, 0, 0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidPalette(_)));
    }

    #[test]
    fn six_color_palette() {
        let p = [[0, 0, 0], [255, 255, 255], [255, 0, 0], [0, 0, 255], [255, 255, 0], [0, 160, 0]];
        let spec = sample_spec(7, &p).unwrap();
        assert!(spec.validate().is_ok());
        assert!(p.contains(&spec.background_color));
    }

    #[test]
    fn sampled_specs_are_valid_and_dense() {
        let p = default_palette();
        let mut two = 0;
        for seed in 0..200 {
            let spec = sample_spec(seed, &p).unwrap();
            two += (spec.classes.len() == 2) as usize;
            for c in &spec.classes {
                let n = expected_texel_count(c, spec.canvas_px);
                assert!(n >= MIN_EXPECTED_TEXELS, "seed {seed}: {n}");
            }
        }
        assert!(two > 40 && two < 110);
    }

    #[test]
    fn sampled_specs_mostly_render() {
        let p = default_palette();
        let mut infeasible = 0;
        for seed in 0..40 {
            let spec = sample_spec(seed, &p).unwrap();
            match render(&spec) {
                Ok((_, gt)) => assert!(gt.texels.len() >= 10, "seed {seed}"),
                Err(Error::InfeasibleSpec { .. }) => infeasible += 1,
                Err(e) => panic!("seed {seed}: {e}"),
            }
        }
        assert!(infeasible <= 4, "{infeasible}");
    }
}
