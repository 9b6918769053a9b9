//! Exact Euclidean distance transforms.
//!
//! Separable two-pass algorithm: a per-column scan gives the squared vertical distance
//! to the nearest site, then a per-row lower envelope of parabolas combines the
//! columns. All arithmetic stays in integers, so squared distances are exact and the
//! final square root is the correctly rounded distance.

use crate::mask::{boundary_mask, BinaryMask, MaskError, PixelPoint};

/// Per-pixel distances in Euclidean pixel units, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn at(&self, p: PixelPoint) -> f64 {
        self.get(p.x, p.y)
    }
}

/// Squared distance from every pixel to the nearest set pixel of `sites`.
///
/// Returns `None` entries when `sites` is empty.
pub fn squared_distance_to_sites(sites: &BinaryMask) -> Vec<Option<u64>> {
    let (w, h) = (sites.width(), sites.height());

    // Column pass: vertical distance to the nearest site in the same column.
    let mut col: Vec<Option<u64>> = vec![None; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if sites.get(x, y) {
                last = Some(y);
            }
            col[y * w + x] = last.map(|s| (y - s) as u64);
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if sites.get(x, y) {
                next = Some(y);
            }
            if let Some(s) = next {
                let d = (s - y) as u64;
                let slot = &mut col[y * w + x];
                *slot = Some(slot.map_or(d, |v| v.min(d)));
            }
        }
    }
    for v in col.iter_mut().flatten() {
        *v *= *v;
    }

    // Row pass: lower envelope of parabolas (q - x)^2 + col[x].
    let mut out = vec![None; w * h];
    let mut sites_x: Vec<i64> = Vec::with_capacity(w);
    let mut sites_f: Vec<i64> = Vec::with_capacity(w);
    // Envelope boundaries z[i] = num / den, den > 0; parabola i owns (z[i], z[i+1]].
    let mut bounds: Vec<(i64, i64)> = Vec::with_capacity(w + 1);
    for y in 0..h {
        sites_x.clear();
        sites_f.clear();
        bounds.clear();
        let row = &col[y * w..(y + 1) * w];
        for (x, f) in row.iter().enumerate() {
            let Some(f) = *f else { continue };
            let (q, fq) = (x as i64, f as i64);
            loop {
                let Some(&v) = sites_x.last() else {
                    sites_x.push(q);
                    sites_f.push(fq);
                    bounds.push((i64::MIN, 1));
                    break;
                };
                let fv = *sites_f.last().unwrap();
                // Intersection of parabolas v and q: s = ((fq + q^2) - (fv + v^2)) / (2(q - v)).
                let num = (fq + q * q) - (fv + v * v);
                let den = 2 * (q - v);
                let &(zn, zd) = bounds.last().unwrap();
                // s <= z_last ?  (zn == MIN encodes -infinity)
                let dominated = zn != i64::MIN && (num as i128) * (zd as i128) <= (zn as i128) * (den as i128);
                if dominated {
                    sites_x.pop();
                    sites_f.pop();
                    bounds.pop();
                    continue;
                }
                sites_x.push(q);
                sites_f.push(fq);
                bounds.push((num, den));
                break;
            }
        }
        if sites_x.is_empty() {
            continue;
        }
        let mut k = 0;
        for p in 0..w as i64 {
            // Advance while the next parabola's left boundary is < p.
            while k + 1 < sites_x.len() {
                let (zn, zd) = bounds[k + 1];
                if (zn as i128) < (p as i128) * (zd as i128) {
                    k += 1;
                } else {
                    break;
                }
            }
            let dx = p - sites_x[k];
            out[y * w + p as usize] = Some((dx * dx + sites_f[k]) as u64);
        }
    }
    out
}

/// Exact Euclidean distance from each mask pixel to the nearest boundary pixel of the
/// mask. Pixels outside the mask carry 0; boundary pixels are 0 by construction.
pub fn distance_to_boundary(m: &BinaryMask) -> Result<DistanceField, MaskError> {
    if m.is_empty() {
        return Err(MaskError::EmptyMask);
    }
    let edge = boundary_mask(m);
    let sq = squared_distance_to_sites(&edge);
    let values = sq
        .iter()
        .enumerate()
        .map(|(i, d)| {
            if m.get_index(i) {
                (d.expect("nonempty mask has a boundary") as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(DistanceField {
        width: m.width(),
        height: m.height(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::boundary;
    use proptest::prelude::*;

    /// All-pairs nearest-boundary distance, independent of the envelope code.
    fn brute_force(m: &BinaryMask) -> Vec<f64> {
        let b = boundary(m);
        let mut out = vec![0.0; m.pixel_count()];
        for p in m.pixels() {
            let best = b
                .iter()
                .map(|q| {
                    let dx = p.x as f64 - q.x as f64;
                    let dy = p.y as f64 - q.y as f64;
                    (dx * dx + dy * dy).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            out[p.y * m.width() + p.x] = best;
        }
        out
    }

    #[test]
    fn three_by_three_block() {
        let m = BinaryMask::full(3, 3).unwrap();
        let d = distance_to_boundary(&m).unwrap();
        assert_eq!(d.get(1, 1), 1.0);
        for (x, y) in [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)] {
            assert_eq!(d.get(x, y), 0.0);
        }
    }

    #[test]
    fn single_pixel() {
        let m = BinaryMask::full(1, 1).unwrap();
        assert_eq!(distance_to_boundary(&m).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn five_by_five_block_matches_brute_force() {
        let m = BinaryMask::full(5, 5).unwrap();
        let d = distance_to_boundary(&m).unwrap();
        assert_eq!(d.values(), brute_force(&m).as_slice());
        // Outer ring 0, inner ring 1, centre 2.
        assert_eq!(d.get(2, 2), 2.0);
        assert_eq!(d.get(1, 1), 1.0);
        assert_eq!(d.get(0, 3), 0.0);
    }

    #[test]
    fn empty_mask_rejected() {
        let m = BinaryMask::empty(4, 4).unwrap();
        assert_eq!(distance_to_boundary(&m), Err(MaskError::EmptyMask));
    }

    #[test]
    fn outside_pixels_are_zero() {
        let m = BinaryMask::from_fn(9, 7, |x, y| (2..8).contains(&x) && (1..6).contains(&y)).unwrap();
        let d = distance_to_boundary(&m).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(8, 6), 0.0);
        assert_eq!(d.values(), brute_force(&m).as_slice());
    }

    #[test]
    fn sites_distance_without_sites_is_none() {
        let m = BinaryMask::empty(3, 2).unwrap();
        assert!(squared_distance_to_sites(&m).iter().all(Option::is_none));
    }

    #[test]
    fn sparse_sites_against_enumeration() {
        let sites = BinaryMask::from_points(
            11,
            6,
            &[PixelPoint::new(0, 5), PixelPoint::new(10, 0), PixelPoint::new(4, 2)],
        )
        .unwrap();
        let sq = squared_distance_to_sites(&sites);
        for y in 0..6 {
            for x in 0..11 {
                let want = sites
                    .pixels()
                    .map(|s| {
                        let dx = x as i64 - s.x as i64;
                        let dy = y as i64 - s.y as i64;
                        (dx * dx + dy * dy) as u64
                    })
                    .min();
                assert_eq!(sq[y * 11 + x], want, "at ({x},{y})");
            }
        }
    }

    proptest! {
        #[test]
        fn matches_all_pairs_oracle(w in 1usize..18, h in 1usize..18, bits in prop::collection::vec(any::<bool>(), 324)) {
            let m = BinaryMask::from_fn(w, h, |x, y| bits[y * 18 + x]).unwrap();
            prop_assume!(!m.is_empty());
            let d = distance_to_boundary(&m).unwrap();
            let expect = brute_force(&m);
            prop_assert_eq!(d.values(), expect.as_slice());
            prop_assert!(d.values().iter().all(|&v| v >= 0.0));
        }
    }
}
