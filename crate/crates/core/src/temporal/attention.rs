use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;

use super::{check_finite, softmax_in_place, TemporalError};

/// Multi-head cross-attention weights. Row-vector convention: `q = x Wq + bq`,
/// `k = c Wk`, `v = c Wv + bv`, output `o Wo + bo`. A key bias is omitted since it
/// shifts every logit of a row equally and cancels in the softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct MhcaParams {
    pub heads: usize,
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bq: Array1<f64>,
    pub bv: Array1<f64>,
    pub bo: Array1<f64>,
}

fn check_heads(dim: usize, heads: usize) -> Result<(), TemporalError> {
    if heads == 0 || dim == 0 || !dim.is_multiple_of(heads) {
        return Err(TemporalError::Shape(format!(
            "dimension {dim} is not divisible into {heads} heads"
        )));
    }
    Ok(())
}

pub(crate) fn xavier<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl MhcaParams {
    pub fn zeros(dim: usize, heads: usize) -> Result<Self, TemporalError> {
        check_heads(dim, heads)?;
        let m = || Array2::zeros((dim, dim));
        let b = || Array1::zeros(dim);
        Ok(Self {
            heads,
            wq: m(),
            wk: m(),
            wv: m(),
            wo: m(),
            bq: b(),
            bv: b(),
            bo: b(),
        })
    }

    /// Xavier-uniform projections, zero biases, zero output projection.
    pub fn init<R: Rng + ?Sized>(dim: usize, heads: usize, rng: &mut R) -> Result<Self, TemporalError> {
        let mut p = Self::zeros(dim, heads)?;
        p.wq = xavier(dim, dim, rng);
        p.wk = xavier(dim, dim, rng);
        p.wv = xavier(dim, dim, rng);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.wq.nrows()
    }

    pub fn head_dim(&self) -> usize {
        self.dim() / self.heads
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        let d = self.dim();
        check_heads(d, self.heads)?;
        for m in [&self.wq, &self.wk, &self.wv, &self.wo] {
            if m.dim() != (d, d) {
                return Err(TemporalError::Shape(format!("projection {:?}, expected ({d}, {d})", m.dim())));
            }
            check_finite(m.iter())?;
        }
        for b in [&self.bq, &self.bv, &self.bo] {
            if b.len() != d {
                return Err(TemporalError::Shape(format!("bias of length {}, expected {d}", b.len())));
            }
            check_finite(b.iter())?;
        }
        Ok(())
    }
}

/// Intermediate values of one window, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct WindowTrace {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Per head, rows are query slots and columns key slots.
    pub attn: Vec<Array2<f64>>,
    pub o: Array2<f64>,
}

pub(crate) fn mhca_window(xq: ArrayView2<f64>, xkv: ArrayView2<f64>, p: &MhcaParams) -> (Array2<f64>, WindowTrace) {
    let q = xq.dot(&p.wq) + &p.bq;
    let k = xkv.dot(&p.wk);
    let v = xkv.dot(&p.wv) + &p.bv;
    let dh = p.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut o = Array2::zeros(q.dim());
    let mut attn = Vec::with_capacity(p.heads);
    for h in 0..p.heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let mut a = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        for mut row in a.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        o.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        attn.push(a);
    }
    let y = o.dot(&p.wo) + &p.bo;
    (y, WindowTrace { q, k, v, attn, o })
}

pub(crate) fn check_windows(fq: &Array3<f64>, fkv: &Array3<f64>, dim: usize) -> Result<(), TemporalError> {
    if fq.dim() != fkv.dim() {
        return Err(TemporalError::Shape(format!("query {:?} vs context {:?}", fq.dim(), fkv.dim())));
    }
    let (_, slots, d) = fq.dim();
    if slots != 4 || d != dim {
        return Err(TemporalError::Shape(format!(
            "windows {:?} do not match [_, 4, {dim}]",
            fq.dim()
        )));
    }
    check_finite(fq.iter())?;
    check_finite(fkv.iter())
}

/// Cross-attention within each window: queries from `fq`, keys and values from the
/// same window of `fkv`. Windows never see each other.
pub fn mhca(fq: &Array3<f64>, fkv: &Array3<f64>, p: &MhcaParams) -> Result<Array3<f64>, TemporalError> {
    p.validate()?;
    check_windows(fq, fkv, p.dim())?;
    let mut out = Array3::zeros(fq.dim());
    for (w, mut dst) in out.axis_iter_mut(Axis(0)).enumerate() {
        let (y, _) = mhca_window(fq.index_axis(Axis(0), w), fkv.index_axis(Axis(0), w), p);
        dst.assign(&y);
    }
    Ok(out)
}

/// Attention weights per window and head.
pub fn attention_weights(
    fq: &Array3<f64>,
    fkv: &Array3<f64>,
    p: &MhcaParams,
) -> Result<Vec<Vec<Array2<f64>>>, TemporalError> {
    p.validate()?;
    check_windows(fq, fkv, p.dim())?;
    Ok((0..fq.dim().0)
        .map(|w| mhca_window(fq.index_axis(Axis(0), w), fkv.index_axis(Axis(0), w), p).1.attn)
        .collect())
}

/// Residual enrichment `f + mhca(f, context)`.
pub fn temporal_enrich(f: &Array3<f64>, fctx: &Array3<f64>, p: &MhcaParams) -> Result<Array3<f64>, TemporalError> {
    Ok(f + &mhca(f, fctx, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;

    fn random_windows(w: usize, d: usize, seed: u64) -> Array3<f64> {
        let mut rng = seed::rng(seed);
        Array3::from_shape_simple_fn((w, 4, d), || rng.random_range(-1.0..1.0))
    }

    fn random_params(d: usize, heads: usize, seed: u64) -> MhcaParams {
        let mut rng = seed::rng(seed);
        let mut p = MhcaParams::init(d, heads, &mut rng).unwrap();
        p.wo = xavier(d, d, &mut rng);
        p.bq = Array1::from_shape_simple_fn(d, || rng.random_range(-0.5..0.5));
        p.bv = Array1::from_shape_simple_fn(d, || rng.random_range(-0.5..0.5));
        p.bo = Array1::from_shape_simple_fn(d, || rng.random_range(-0.5..0.5));
        p
    }

    #[test]
    fn identical_context_slots_pass_through() {
        let d = 4;
        let mut p = random_params(d, 2, 1);
        p.wv = Array2::eye(d);
        p.wo = Array2::eye(d);
        p.bv.fill(0.0);
        p.bo.fill(0.0);
        let v = array![0.3, -1.2, 2.0, 0.5];
        let mut ctx = Array3::zeros((3, 4, d));
        for mut row in ctx.lanes_mut(Axis(2)) {
            row.assign(&v);
        }
        let out = mhca(&random_windows(3, d, 2), &ctx, &p).unwrap();
        for row in out.lanes(Axis(2)) {
            for (a, b) in row.iter().zip(&v) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_output_projection_gives_zero() {
        let mut p = random_params(4, 2, 3);
        p.wo.fill(0.0);
        p.bo.fill(0.0);
        let f = random_windows(2, 4, 4);
        assert!(mhca(&f, &random_windows(2, 4, 5), &p).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(temporal_enrich(&f, &random_windows(2, 4, 5), &p).unwrap(), f);
    }

    /// Scalar single-head evaluation written out by hand.
    fn scalar_attention(xq: &[[f64; 2]; 4], xkv: &[[f64; 2]; 4], p: &MhcaParams) -> [[f64; 2]; 4] {
        let lin = |x: &[f64; 2], m: &Array2<f64>, b: Option<&Array1<f64>>| -> [f64; 2] {
            let mut y = [0.0; 2];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = x[0] * m[[0, j]] + x[1] * m[[1, j]] + b.map_or(0.0, |b| b[j]);
            }
            y
        };
        let mut out = [[0.0; 2]; 4];
        for i in 0..4 {
            let q = lin(&xq[i], &p.wq, Some(&p.bq));
            let logits: Vec<f64> = (0..4)
                .map(|j| {
                    let k = lin(&xkv[j], &p.wk, None);
                    (q[0] * k[0] + q[1] * k[1]) / 2f64.sqrt()
                })
                .collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let mut o = [0.0; 2];
            for (j, l) in logits.iter().enumerate() {
                let v = lin(&xkv[j], &p.wv, Some(&p.bv));
                o[0] += l.exp() / z * v[0];
                o[1] += l.exp() / z * v[1];
            }
            out[i] = lin(&o, &p.wo, Some(&p.bo));
        }
        out
    }

    #[test]
    fn single_head_matches_scalar_oracle() {
        let p = MhcaParams {
            heads: 1,
            wq: array![[0.5, -0.2], [0.1, 0.9]],
            wk: array![[1.0, 0.3], [-0.4, 0.7]],
            wv: array![[0.2, 0.0], [0.6, -1.1]],
            wo: array![[1.5, 0.25], [-0.5, 0.8]],
            bq: array![0.1, -0.3],
            bv: array![0.05, 0.2],
            bo: array![-0.1, 0.4],
        };
        let xq = [[1.0, 0.0], [0.0, 1.0], [0.5, -0.5], [2.0, 1.0]];
        let xkv = [[0.3, 0.3], [-1.0, 0.2], [0.7, -0.8], [0.0, 1.5]];
        let to3 = |a: &[[f64; 2]; 4]| Array3::from_shape_fn((1, 4, 2), |(_, i, j)| a[i][j]);
        let out = mhca(&to3(&xq), &to3(&xkv), &p).unwrap();
        let want = scalar_attention(&xq, &xkv, &p);
        for i in 0..4 {
            for j in 0..2 {
                assert!((out[[0, i, j]] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_context_attends_uniformly() {
        let d = 4;
        let mut p = random_params(d, 2, 7);
        p.bv.fill(0.0);
        let f = random_windows(2, d, 8);
        let ctx = Array3::zeros((2, 4, d));
        for heads in attention_weights(&f, &ctx, &p).unwrap() {
            for a in heads {
                assert!(a.iter().all(|&x| x == 0.25));
            }
        }
        // Uniform mix of zero values leaves only the output bias.
        let out = temporal_enrich(&f, &ctx, &p).unwrap();
        for (w, s, c) in indices(2, 4, d) {
            assert!((out[[w, s, c]] - f[[w, s, c]] - p.bo[c]).abs() < 1e-12);
        }
    }

    fn indices(w: usize, s: usize, d: usize) -> impl Iterator<Item = (usize, usize, usize)> {
        (0..w).flat_map(move |a| (0..s).flat_map(move |b| (0..d).map(move |c| (a, b, c))))
    }

    #[test]
    fn rows_sum_to_one_and_windows_are_independent() {
        let p = random_params(6, 3, 11);
        let f = random_windows(5, 6, 12);
        let c = random_windows(5, 6, 13);
        for heads in attention_weights(&f, &c, &p).unwrap() {
            for a in heads {
                for row in a.rows() {
                    assert!((row.sum() - 1.0).abs() < 1e-9);
                }
            }
        }
        let out = mhca(&f, &c, &p).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let fp = f.select(Axis(0), &perm);
        let cp = c.select(Axis(0), &perm);
        assert_eq!(mhca(&fp, &cp, &p).unwrap(), out.select(Axis(0), &perm));
    }

    #[test]
    fn enrich_minus_input_is_mhca() {
        let p = random_params(4, 2, 21);
        let f = random_windows(3, 4, 22);
        let c = random_windows(3, 4, 23);
        let m = mhca(&f, &c, &p).unwrap();
        let delta = temporal_enrich(&f, &c, &p).unwrap() - &f;
        // Equal up to the rounding of one addition and one subtraction.
        for ((d, m), x) in delta.iter().zip(&m).zip(&f) {
            assert!((d - m).abs() <= 2.0 * f64::EPSILON * (x.abs() + m.abs()));
        }
    }

    #[test]
    fn shape_errors() {
        assert!(MhcaParams::zeros(6, 4).is_err());
        let p = random_params(4, 2, 1);
        assert!(mhca(&random_windows(2, 4, 1), &random_windows(3, 4, 1), &p).is_err());
        assert!(mhca(&Array3::zeros((1, 3, 4)), &Array3::zeros((1, 3, 4)), &p).is_err());
        let mut bad = random_windows(1, 4, 1);
        bad[[0, 0, 0]] = f64::INFINITY;
        assert_eq!(mhca(&bad, &bad, &p), Err(TemporalError::NonFinite));
    }
}
