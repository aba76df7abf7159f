//! Spatial-layout statistics of texel groups.
//!
//! All measures operate on texel centroids. Line groups are reduced to one
//! dimension by projecting centroids onto the normal of the group's
//! principal orientation.

use serde::{Deserialize, Serialize};

use super::individual::{orientation_bin, texel_orientation, ORIENTATION_BINS};
use super::points::PointIndex;
use crate::color::NUM_COLOR_NAMES;
use crate::detection::DetectedTexel;
use crate::error::{Error, Result};
use crate::texel::ShapeKind;

/// Side of the reference canvas that densities are expressed against.
pub const REFERENCE_SIDE: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    /// Groups with fewer members are discarded.
    pub min_group_size: usize,
    /// Quadrats per side for 2D homogeneity.
    pub quadrats: usize,
    /// Bins for 1D (line) homogeneity.
    pub line_bins: usize,
    /// Neighbours per centroid for pair vectors.
    pub pair_neighbors: usize,
    /// Neighbourhood size for symmetry scores in 2D.
    pub symmetry_neighbors: usize,
    /// Neighbourhood size for symmetry scores on line projections.
    pub line_symmetry_neighbors: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            min_group_size: 10,
            quadrats: 4,
            line_bins: 8,
            pair_neighbors: 8,
            symmetry_neighbors: 4,
            line_symmetry_neighbors: 2,
        }
    }
}

/// Pixel extent of the image the texels were found in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Canvas {
    pub fn square(side: f64) -> Self {
        Canvas {
            width: side,
            height: side,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Factor mapping pixel lengths onto the reference canvas.
    fn to_reference(&self) -> f64 {
        REFERENCE_SIDE / self.area().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TexelGroup {
    pub shape: ShapeKind,
    /// Indices into the texel list the group was built from.
    pub members: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
    /// Circular mean of member orientations in degrees (line groups only).
    pub principal_orientation: Option<f64>,
}

impl TexelGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Unit vector perpendicular to the principal orientation.
    fn line_normal(&self) -> Option<[f64; 2]> {
        self.principal_orientation.map(|deg| {
            let (s, c) = deg.to_radians().sin_cos();
            [-s, c]
        })
    }

    /// Centroids projected on the line normal, in pixels.
    pub fn projections(&self) -> Option<Vec<f64>> {
        let n = self.line_normal()?;
        Some(self.centroids.iter().map(|c| n[0] * c[0] + n[1] * c[1]).collect())
    }

    /// Points used by the symmetry measures and their dimensionality: the
    /// centroids for 2D groups, `(projection, 0)` for line groups.
    fn pattern(&self) -> (Vec<[f64; 2]>, usize) {
        match self.projections() {
            Some(p) => (p.into_iter().map(|s| [s, 0.0]).collect(), 1),
            None => (self.centroids.clone(), 2),
        }
    }
}

/// Groups texels by shape label, dropping groups below the minimum size.
/// Groups come out in label order.
pub fn group_texels(texels: &[DetectedTexel], params: &LayoutParams) -> Vec<TexelGroup> {
    let mut groups = Vec::new();
    for shape in ShapeKind::ALL {
        let members: Vec<usize> = (0..texels.len()).filter(|&i| texels[i].shape == shape).collect();
        if members.len() < params.min_group_size {
            continue;
        }
        let principal_orientation = (shape == ShapeKind::Line).then(|| {
            let (mut s, mut c) = (0.0, 0.0);
            for &i in &members {
                let a = 2.0 * texel_orientation(&texels[i].mask).to_radians();
                s += a.sin();
                c += a.cos();
            }
            super::individual::fold_degrees(0.5 * s.atan2(c).to_degrees())
        });
        groups.push(TexelGroup {
            shape,
            centroids: members.iter().map(|&i| texels[i].centroid).collect(),
            members,
            principal_orientation,
        });
    }
    groups
}

/// Texels per reference canvas for 2D groups; stripes per reference length
/// across the stripes for line groups. The projected extent of `N` stripes
/// is their range widened by one mean spacing, `range * N / (N - 1)`.
pub fn density(group: &TexelGroup, canvas: Canvas) -> Result<f64> {
    let n = group.len() as f64;
    match group.projections() {
        None => Ok(n * REFERENCE_SIDE * REFERENCE_SIDE / (canvas.area() * canvas.to_reference().powi(2))),
        Some(p) => {
            let (lo, hi) = min_max(&p);
            let range = hi - lo;
            if !(range > 0.0) || group.len() < 2 {
                return Err(Error::DegenerateGeometry("line centroids have zero projected extent".into()));
            }
            let extent = range * n / (n - 1.0) * canvas.to_reference();
            Ok(n * REFERENCE_SIDE / extent)
        }
    }
}

/// Quadrat-count chi-square statistic divided by the number of points:
/// `sum (n_i - e)^2 / e / N` with `e = N / cells`.
pub fn homogeneity_chi2(group: &TexelGroup, canvas: Canvas, params: &LayoutParams) -> f64 {
    match (group.projections(), group.line_normal()) {
        (Some(p), Some(n)) => {
            let corners = [[0.0, 0.0], [canvas.width, 0.0], [0.0, canvas.height], [canvas.width, canvas.height]];
            let proj: Vec<f64> = corners.iter().map(|c| n[0] * c[0] + n[1] * c[1]).collect();
            let (lo, hi) = min_max(&proj);
            let bins = params.line_bins;
            let mut counts = vec![0usize; bins];
            for s in p {
                counts[bin_of(s - lo, (hi - lo) / bins as f64, bins)] += 1;
            }
            chi2_per_point(&counts)
        }
        _ => {
            let q = params.quadrats;
            let mut counts = vec![0usize; q * q];
            for c in &group.centroids {
                let ix = bin_of(c[0], canvas.width / q as f64, q);
                let iy = bin_of(c[1], canvas.height / q as f64, q);
                counts[iy * q + ix] += 1;
            }
            chi2_per_point(&counts)
        }
    }
}

fn bin_of(v: f64, width: f64, bins: usize) -> usize {
    if !(width > 0.0) {
        return 0;
    }
    ((v / width).floor().max(0.0) as usize).min(bins - 1)
}

fn chi2_per_point(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let e = n / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum::<f64>() / n
}

/// Histogram of the orientations of vectors from each centroid to its
/// nearest neighbours, folded to `[0, 180)`.
pub fn pair_orientation_hist(group: &TexelGroup, params: &LayoutParams) -> [f64; ORIENTATION_BINS] {
    pair_orientation_hist_points(&group.centroids, params.pair_neighbors)
}

pub fn pair_orientation_hist_points(points: &[[f64; 2]], k: usize) -> [f64; ORIENTATION_BINS] {
    let mut hist = [0.0; ORIENTATION_BINS];
    if points.len() < 2 {
        return hist;
    }
    let index = PointIndex::new(points);
    let k = k.min(points.len() - 1);
    let mut total = 0.0;
    for (i, &c) in points.iter().enumerate() {
        for (j, _) in index.knn(c, k, Some(i)) {
            let p = points[j];
            let angle = (p[1] - c[1]).atan2(p[0] - c[0]).to_degrees();
            hist[orientation_bin(angle)] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        for h in &mut hist {
            *h /= total;
        }
    }
    hist
}

/// Mean point-reflection residual of centroid neighbourhoods, normalized by
/// neighbourhood radius; 0 for a perfectly symmetric pattern. `None` when
/// the group has fewer than five members.
pub fn local_reflective_symmetry(group: &TexelGroup, params: &LayoutParams) -> Option<f64> {
    let (points, dims) = group.pattern();
    let k = if dims == 1 { params.line_symmetry_neighbors } else { params.symmetry_neighbors };
    reflective_symmetry_points(&points, k, dims)
}

/// Mean residual of centroid neighbourhoods translated by their own
/// neighbour vectors against the whole group, normalized by vector length;
/// 0 for a perfect tiling. `None` when the group has fewer than five members.
pub fn translational_symmetry(group: &TexelGroup, params: &LayoutParams) -> Option<f64> {
    let (points, dims) = group.pattern();
    let k = if dims == 1 { params.line_symmetry_neighbors } else { params.symmetry_neighbors };
    translational_symmetry_points(&points, k, dims)
}

/// Neighbourhoods evaluated by the symmetry measures: those whose `k`-NN
/// disk, widened by `margin`, stays inside the bounding box of the pattern
/// (along the first `dims` axes). Falls back to every point when none
/// qualifies.
fn neighbourhoods(points: &[[f64; 2]], index: &PointIndex, k: usize, dims: usize, margin: f64) -> Vec<(usize, Vec<usize>)> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let all: Vec<(usize, Vec<usize>, bool)> = points
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let nn = index.knn(c, k, Some(i));
            let r = margin * nn.last().map_or(0.0, |e| e.1);
            let tol = 1e-9 * (1.0 + r);
            let interior = (0..dims).all(|d| c[d] - r >= lo[d] - tol && c[d] + r <= hi[d] + tol);
            (i, nn.into_iter().map(|e| e.0).collect(), interior)
        })
        .collect();
    let any_interior = all.iter().any(|e| e.2);
    all.into_iter()
        .filter(|e| e.2 || !any_interior)
        .map(|(i, nn, _)| (i, nn))
        .collect()
}

pub fn reflective_symmetry_points(points: &[[f64; 2]], k: usize, dims: usize) -> Option<f64> {
    if points.len() < 5 {
        return None;
    }
    let index = PointIndex::new(points);
    let k = k.min(points.len() - 1);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, nn) in neighbourhoods(points, &index, k, dims, 1.0) {
        let c = points[i];
        let radius = nn.iter().map(|&j| dist(points[j], c)).sum::<f64>() / nn.len() as f64;
        if radius <= 0.0 {
            count += 1;
            continue;
        }
        let residual = nn
            .iter()
            .map(|&j| {
                let p = points[j];
                let r = [2.0 * c[0] - p[0], 2.0 * c[1] - p[1]];
                nn.iter().map(|&m| dist(points[m], r)).fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / nn.len() as f64;
        sum += residual / radius;
        count += 1;
    }
    Some(if count > 0 { sum / count as f64 } else { 0.0 })
}

pub fn translational_symmetry_points(points: &[[f64; 2]], k: usize, dims: usize) -> Option<f64> {
    if points.len() < 5 {
        return None;
    }
    let index = PointIndex::new(points);
    let k = k.min(points.len() - 1);
    let mut sum = 0.0;
    let mut count = 0usize;
    // Translated neighbourhoods reach up to twice the radius away.
    for (i, nn) in neighbourhoods(points, &index, k, dims, 2.0) {
        let c = points[i];
        for &j in &nn {
            let t = [points[j][0] - c[0], points[j][1] - c[1]];
            let len = t[0].hypot(t[1]);
            if len <= 0.0 {
                count += 1;
                continue;
            }
            let residual = std::iter::once(i)
                .chain(nn.iter().copied())
                .map(|m| index.nearest_distance([points[m][0] + t[0], points[m][1] + t[1]]))
                .sum::<f64>()
                / (nn.len() + 1) as f64;
            sum += residual / len;
            count += 1;
        }
    }
    Some(if count > 0 { sum / count as f64 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutAttributes {
    pub density: f64,
    pub homogeneity: f64,
    pub pair_orientation_hist: [f64; ORIENTATION_BINS],
    pub local_symmetry: f64,
    pub translational_symmetry: f64,
    pub background_color_hist: [f64; NUM_COLOR_NAMES],
}

/// Layout measures of one group; `NaN` marks an undefined value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLayout {
    pub weight: f64,
    pub density: f64,
    pub homogeneity: f64,
    pub pair_orientation_hist: [f64; ORIENTATION_BINS],
    pub local_symmetry: f64,
    pub translational_symmetry: f64,
}

pub fn group_layout(group: &TexelGroup, canvas: Canvas, params: &LayoutParams) -> GroupLayout {
    GroupLayout {
        weight: group.len() as f64,
        density: density(group, canvas).unwrap_or(f64::NAN),
        homogeneity: homogeneity_chi2(group, canvas, params),
        pair_orientation_hist: pair_orientation_hist(group, params),
        local_symmetry: local_reflective_symmetry(group, params).unwrap_or(f64::NAN),
        translational_symmetry: translational_symmetry(group, params).unwrap_or(f64::NAN),
    }
}

/// Member-count-weighted mean of per-group measures. Undefined group values
/// are skipped; a measure undefined in every group stays `NaN`. Without
/// groups all layout scalars and the pair histogram are zero.
pub fn aggregate_layout(groups: &[GroupLayout], background_color_hist: [f64; NUM_COLOR_NAMES]) -> LayoutAttributes {
    let weighted = |f: &dyn Fn(&GroupLayout) -> f64| {
        if groups.is_empty() {
            return 0.0;
        }
        let (mut s, mut w) = (0.0, 0.0);
        for g in groups {
            let v = f(g);
            if v.is_finite() {
                s += g.weight * v;
                w += g.weight;
            }
        }
        if w > 0.0 {
            s / w
        } else {
            f64::NAN
        }
    };
    let mut pair = [0.0; ORIENTATION_BINS];
    for (b, slot) in pair.iter_mut().enumerate() {
        *slot = weighted(&|g| g.pair_orientation_hist[b]);
    }
    let total: f64 = pair.iter().sum();
    if total > 0.0 {
        for p in &mut pair {
            *p /= total;
        }
    }
    LayoutAttributes {
        density: weighted(&|g| g.density),
        homogeneity: weighted(&|g| g.homogeneity),
        pair_orientation_hist: pair,
        local_symmetry: weighted(&|g| g.local_symmetry),
        translational_symmetry: weighted(&|g| g.translational_symmetry),
        background_color_hist,
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::texel::TexelMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn group(shape: ShapeKind, centroids: Vec<[f64; 2]>, orientation: Option<f64>) -> TexelGroup {
        TexelGroup {
            shape,
            members: (0..centroids.len()).collect(),
            centroids,
            principal_orientation: orientation,
        }
    }

    fn lattice(n: usize, spacing: f64, offset: f64) -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                pts.push([offset + i as f64 * spacing, offset + j as f64 * spacing]);
            }
        }
        pts
    }

    fn jittered(n: usize, spacing: f64, jitter: f64, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        lattice(n, spacing, spacing)
            .into_iter()
            .map(|p| {
                let a = rng.gen::<f64>() * std::f64::consts::TAU;
                let r = jitter * spacing * rng.gen::<f64>().sqrt();
                [p[0] + r * a.cos(), p[1] + r * a.sin()]
            })
            .collect()
    }

    fn square_mask(cx: u32, cy: u32, half: u32) -> TexelMask {
        let mut px = Vec::new();
        for y in cy - half..=cy + half {
            for x in cx - half..=cx + half {
                px.push((x, y));
            }
        }
        TexelMask::from_pixels(&px).unwrap()
    }

    fn texel(shape: ShapeKind, mask: TexelMask) -> DetectedTexel {
        DetectedTexel {
            shape,
            centroid: mask.centroid(),
            mask,
            mean_color: [0, 0, 0],
            confidence: 1.0,
        }
    }

    fn diagonal_stripe(offset: u32) -> TexelMask {
        let px: Vec<(u32, u32)> = (0..200u32)
            .flat_map(|t| (0..3u32).map(move |w| (t + w + offset, t)))
            .collect();
        TexelMask::from_pixels(&px).unwrap()
    }

    #[test]
    fn grouping_drops_small_groups() {
        let mut texels: Vec<DetectedTexel> = (0..9).map(|i| texel(ShapeKind::Circle, square_mask(10 + 20 * i, 10, 3))).collect();
        texels.extend((0..100).map(|i| texel(ShapeKind::Polygon, square_mask(10 + 9 * (i % 10), 50 + 9 * (i / 10), 2))));
        let groups = group_texels(&texels, &LayoutParams::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].shape, ShapeKind::Polygon);
        assert_eq!(groups[0].len(), 100);
        assert_eq!(groups[0].members[0], 9);
        assert_eq!(groups[0].principal_orientation, None);
    }

    #[test]
    fn grouping_keeps_circles_and_lines() {
        let mut texels: Vec<DetectedTexel> = (0..20).map(|i| texel(ShapeKind::Circle, square_mask(10 + 20 * i, 500, 3))).collect();
        texels.extend((0..15).map(|i| texel(ShapeKind::Line, diagonal_stripe(12 * i))));
        let groups = group_texels(&texels, &LayoutParams::default());
        assert_eq!(groups.iter().map(|g| (g.shape, g.len())).collect::<Vec<_>>(), vec![(ShapeKind::Circle, 20), (ShapeKind::Line, 15)]);
        let o = groups[1].principal_orientation.unwrap();
        assert!((o - 45.0).abs() < 1.0, "{o}");
    }

    #[test]
    fn point_density_is_count_per_reference_canvas() {
        let canvas = Canvas::square(1024.0);
        let g = group(ShapeKind::Circle, lattice(32, 32.0, 16.0), None);
        assert!((density(&g, canvas).unwrap() - 1024.0).abs() < 1e-9);
        let mut doubled = g.centroids.clone();
        doubled.extend(lattice(32, 32.0, 0.0));
        let g2 = group(ShapeKind::Circle, doubled, None);
        assert!((density(&g2, canvas).unwrap() - 2048.0).abs() < 1e-9);
        // Same count on a smaller canvas is the same texture scaled down.
        let small = group(ShapeKind::Circle, lattice(32, 16.0, 8.0), None);
        assert!((density(&small, Canvas::square(512.0)).unwrap() - 1024.0).abs() < 1e-9);
    }

    #[test]
    fn stripe_density() {
        let centroids: Vec<[f64; 2]> = (0..42).map(|i| [512.0, 12.0 + 24.0 * i as f64]).collect();
        let g = group(ShapeKind::Line, centroids, Some(0.0));
        let d = density(&g, Canvas::square(1024.0)).unwrap();
        assert!((d - 42.0 / 1008.0 * 1024.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn stripe_density_degenerate() {
        let g = group(ShapeKind::Line, vec![[100.0, 50.0]; 12], Some(0.0));
        assert!(matches!(density(&g, Canvas::square(1024.0)), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn homogeneity_examples() {
        let canvas = Canvas::square(1024.0);
        let p = LayoutParams::default();
        let g = group(ShapeKind::Circle, lattice(32, 32.0, 16.0), None);
        assert_eq!(homogeneity_chi2(&g, canvas, &p), 0.0);
        let n = 100.0f64;
        let clustered = group(ShapeKind::Circle, vec![[10.0, 10.0]; 100], None);
        let e = n / 16.0;
        let expected = ((n - e).powi(2) / e + 15.0 * e) / n;
        assert!((homogeneity_chi2(&clustered, canvas, &p) - expected).abs() < 1e-9);
        assert!((expected - 15.0).abs() < 1e-9);
    }

    #[test]
    fn homogeneity_lines_use_projection_bins() {
        let canvas = Canvas::square(1024.0);
        let p = LayoutParams::default();
        let even: Vec<[f64; 2]> = (0..64).map(|i| [300.0, 8.0 + 16.0 * i as f64]).collect();
        assert_eq!(homogeneity_chi2(&group(ShapeKind::Line, even, Some(0.0)), canvas, &p), 0.0);
        let packed: Vec<[f64; 2]> = (0..64).map(|i| [300.0, 8.0 + i as f64]).collect();
        assert!((homogeneity_chi2(&group(ShapeKind::Line, packed, Some(0.0)), canvas, &p) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn jitter_does_not_lower_homogeneity() {
        let canvas = Canvas::square(1024.0);
        let p = LayoutParams::default();
        let (mut flat, mut noisy) = (0.0, 0.0);
        for seed in 0..20 {
            flat += homogeneity_chi2(&group(ShapeKind::Circle, jittered(35, 28.0, 0.0, seed), None), canvas, &p);
            noisy += homogeneity_chi2(&group(ShapeKind::Circle, jittered(35, 28.0, 0.45, seed), None), canvas, &p);
        }
        assert!(noisy >= flat, "{noisy} < {flat}");
    }

    #[test]
    fn pair_histogram_on_square_grid() {
        let pts = lattice(20, 10.0, 5.0);
        let h8 = pair_orientation_hist_points(&pts, 8);
        let h4 = pair_orientation_hist_points(&pts, 4);
        for (got, want) in h8.iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() < 0.05, "{h8:?}");
        }
        for (got, want) in h4.iter().zip([0.5, 0.5, 0.0]) {
            assert!((got - want).abs() < 0.05, "{h4:?}");
        }
        assert!((h8.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_histogram_single_vector() {
        let a = 30f64.to_radians();
        let h = pair_orientation_hist_points(&[[0.0, 0.0], [10.0 * a.cos(), 10.0 * a.sin()]], 8);
        assert_eq!(h, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn pair_histogram_rotation_permutes_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 2]> = (0..200).map(|_| [rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0)]).collect();
        let (s, c) = 60f64.to_radians().sin_cos();
        let rotated: Vec<[f64; 2]> = pts.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
        let h = pair_orientation_hist_points(&pts, 8);
        let r = pair_orientation_hist_points(&rotated, 8);
        for b in 0..3 {
            assert!((r[(b + 1) % 3] - h[b]).abs() < 1e-12, "{h:?} {r:?}");
        }
    }

    #[test]
    fn exact_lattices_are_symmetric() {
        let pts = lattice(32, 32.0, 16.0);
        assert_eq!(reflective_symmetry_points(&pts, 4, 2), Some(0.0));
        assert_eq!(translational_symmetry_points(&pts, 4, 2), Some(0.0));
        let skew: Vec<[f64; 2]> = lattice(60, 1.0, -20.0)
            .iter()
            .map(|p| [30.0 * p[0] + 12.0 * p[1], 25.0 * p[1]])
            .filter(|p| (0.0..600.0).contains(&p[0]) && (0.0..600.0).contains(&p[1]))
            .collect();
        assert!(reflective_symmetry_points(&skew, 4, 2).unwrap() < 1e-9);
        assert!(translational_symmetry_points(&skew, 4, 2).unwrap() < 1e-9);
        let stripes: Vec<[f64; 2]> = (0..30).map(|i| [17.0 * i as f64, 0.0]).collect();
        assert_eq!(reflective_symmetry_points(&stripes, 2, 1), Some(0.0));
        assert_eq!(translational_symmetry_points(&stripes, 2, 1), Some(0.0));
    }

    #[test]
    fn symmetry_needs_five_points() {
        let pts = lattice(2, 10.0, 0.0);
        assert_eq!(reflective_symmetry_points(&pts, 4, 2), None);
        assert_eq!(translational_symmetry_points(&pts, 4, 2), None);
    }

    #[test]
    fn jitter_breaks_symmetry() {
        for seed in 0..20 {
            let pts = jittered(20, 30.0, 0.05, seed);
            assert!(reflective_symmetry_points(&pts, 4, 2).unwrap() > 0.0);
            assert!(translational_symmetry_points(&pts, 4, 2).unwrap() > 0.0);
        }
        let (mut a, mut b) = (0.0, 0.0);
        for seed in 0..20 {
            a += reflective_symmetry_points(&jittered(20, 30.0, 0.0, seed), 4, 2).unwrap();
            b += reflective_symmetry_points(&jittered(20, 30.0, 0.3, seed), 4, 2).unwrap();
        }
        assert!(b > a);
    }

    #[test]
    fn random_points_less_symmetric_than_mild_jitter() {
        let (mut random, mut grid) = (0.0, 0.0);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let pts: Vec<[f64; 2]> = (0..400).map(|_| [rng.gen_range(0.0..600.0), rng.gen_range(0.0..600.0)]).collect();
            random += reflective_symmetry_points(&pts, 4, 2).unwrap();
            grid += reflective_symmetry_points(&jittered(20, 30.0, 0.1, seed), 4, 2).unwrap();
        }
        assert!(random > grid, "{random} <= {grid}");
    }

    #[test]
    fn translational_symmetry_grows_with_jitter() {
        let means: Vec<f64> = [0.0, 0.1, 0.2, 0.3]
            .iter()
            .map(|&j| (0..20).map(|s| translational_symmetry_points(&jittered(20, 30.0, j, s), 4, 2).unwrap()).sum::<f64>() / 20.0)
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
    }

    #[test]
    fn translation_invariance() {
        let p = LayoutParams::default();
        let canvas = Canvas::square(2048.0);
        let pts = jittered(20, 30.0, 0.2, 3);
        let shifted: Vec<[f64; 2]> = pts.iter().map(|q| [q[0] + 311.25, q[1] + 97.5]).collect();
        let a = group_layout(&group(ShapeKind::Circle, pts, None), canvas, &p);
        let b = group_layout(&group(ShapeKind::Circle, shifted, None), canvas, &p);
        assert_eq!(a.pair_orientation_hist, b.pair_orientation_hist);
        assert!((a.density - b.density).abs() < 1e-6);
        assert!((a.local_symmetry - b.local_symmetry).abs() < 1e-6);
        assert!((a.translational_symmetry - b.translational_symmetry).abs() < 1e-6);
    }

    fn layout_with(weight: f64, density: f64) -> GroupLayout {
        GroupLayout {
            weight,
            density,
            homogeneity: 0.5,
            pair_orientation_hist: [1.0, 0.0, 0.0],
            local_symmetry: f64::NAN,
            translational_symmetry: 0.25,
        }
    }

    #[test]
    fn aggregation() {
        let bg = [0.0; NUM_COLOR_NAMES];
        let single = aggregate_layout(&[layout_with(12.0, 10.0)], bg);
        assert_eq!(single.density, 10.0);
        assert_eq!(single.homogeneity, 0.5);
        assert_eq!(single.translational_symmetry, 0.25);
        assert!(single.local_symmetry.is_nan());
        let mut other = layout_with(12.0, 30.0);
        other.pair_orientation_hist = [0.0, 0.0, 1.0];
        other.local_symmetry = 0.2;
        let both = aggregate_layout(&[layout_with(12.0, 10.0), other], bg);
        assert_eq!(both.density, 20.0);
        assert_eq!(both.pair_orientation_hist, [0.5, 0.0, 0.5]);
        assert!((both.local_symmetry - 0.2).abs() < 1e-12);
        let none = aggregate_layout(&[], bg);
        assert_eq!((none.density, none.homogeneity, none.local_symmetry, none.translational_symmetry), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(none.pair_orientation_hist, [0.0; 3]);
    }
}
