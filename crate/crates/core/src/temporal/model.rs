use ndarray::{Array1, Array2, Array3, ArrayView1, Axis};
use rand::Rng;

use super::attention::{check_windows, mhca_window, xavier, MhcaParams};
use super::context::ContextBuffer;
use super::loss::{cross_entropy, cross_entropy_grad};
use super::pool::{attn_pool, window_weights, PoolParams};
use super::project::{project, Projection};
use super::snapshot::{decode_tensors, encode_tensors, NamedTensor};
use super::{temporal_enrich, TemporalError};
use crate::seed;

/// Query windows, their context windows, and one target class per window.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub query: Array3<f64>,
    pub context: Array3<f64>,
    pub targets: Vec<usize>,
}

impl Batch {
    /// Uniform features in `[-1, 1)` and uniform targets.
    pub fn random(windows: usize, dim: usize, classes: usize, seed: u64) -> Self {
        let mut rng = seed::task_rng(seed, &[0xBA7C]);
        let query = Array3::from_shape_simple_fn((windows, 4, dim), || rng.random_range(-1.0..1.0));
        let context = Array3::from_shape_simple_fn((windows, 4, dim), || rng.random_range(-1.0..1.0));
        let targets = (0..windows).map(|_| rng.random_range(0..classes.max(1))).collect();
        Self { query, context, targets }
    }
}

/// Enrichment, pooling and projection to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalModel {
    pub mhca: MhcaParams,
    pub pool: PoolParams,
    pub proj: Projection,
}

const NAMES: [&str; 10] = [
    "mhca.wq",
    "mhca.wk",
    "mhca.wv",
    "mhca.wo",
    "mhca.bq",
    "mhca.bv",
    "mhca.bo",
    "pool.query",
    "proj.weight",
    "proj.bias",
];

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    a.insert_axis(Axis(1)).dot(&b.insert_axis(Axis(0)))
}

impl TemporalModel {
    /// Training-style start: Xavier-uniform matrices, zero biases, zero pooling query
    /// and a zero output projection so enrichment starts as the identity.
    pub fn init(dim: usize, heads: usize, classes: usize, seed: u64) -> Result<Self, TemporalError> {
        let mut rng = seed::task_rng(seed, &[0x1417]);
        let mhca = MhcaParams::init(dim, heads, &mut rng)?;
        let proj = Projection {
            weight: xavier(dim, classes, &mut rng),
            bias: Array1::zeros(classes),
        };
        Self::new(mhca, PoolParams::zeros(dim), proj)
    }

    /// Every parameter drawn at random, biases and output projection included, so
    /// that no gradient vanishes by construction.
    pub fn random(dim: usize, heads: usize, classes: usize, seed: u64) -> Result<Self, TemporalError> {
        let mut rng = seed::task_rng(seed, &[0x7A9D]);
        let mut m = Self::init(dim, heads, classes, seed)?;
        m.mhca.wo = xavier(dim, dim, &mut rng);
        let mut vec = |n: usize| Array1::from_shape_simple_fn(n, || rng.random_range(-0.5..0.5));
        m.mhca.bq = vec(dim);
        m.mhca.bv = vec(dim);
        m.mhca.bo = vec(dim);
        m.pool.query = vec(dim);
        m.proj.bias = vec(classes);
        Ok(m)
    }

    pub fn new(mhca: MhcaParams, pool: PoolParams, proj: Projection) -> Result<Self, TemporalError> {
        let m = Self { mhca, pool, proj };
        m.validate()?;
        // Row-major storage lets parameters be viewed as flat slices.
        let std2 = |a: &Array2<f64>| a.as_standard_layout().into_owned();
        let std1 = |a: &Array1<f64>| a.as_standard_layout().into_owned();
        Ok(Self {
            mhca: MhcaParams {
                heads: m.mhca.heads,
                wq: std2(&m.mhca.wq),
                wk: std2(&m.mhca.wk),
                wv: std2(&m.mhca.wv),
                wo: std2(&m.mhca.wo),
                bq: std1(&m.mhca.bq),
                bv: std1(&m.mhca.bv),
                bo: std1(&m.mhca.bo),
            },
            pool: PoolParams { query: std1(&m.pool.query) },
            proj: Projection {
                weight: std2(&m.proj.weight),
                bias: std1(&m.proj.bias),
            },
        })
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        self.mhca.validate()?;
        let d = self.mhca.dim();
        if self.pool.query.len() != d || self.proj.weight.nrows() != d || self.proj.bias.len() != self.proj.weight.ncols() {
            return Err(TemporalError::Shape(format!(
                "pool query {}, projection {:?} + {} for dimension {d}",
                self.pool.query.len(),
                self.proj.weight.dim(),
                self.proj.bias.len()
            )));
        }
        super::check_finite(self.pool.query.iter().chain(&self.proj.weight).chain(&self.proj.bias))
    }

    pub fn dim(&self) -> usize {
        self.mhca.dim()
    }

    pub fn classes(&self) -> usize {
        self.proj.bias.len()
    }

    fn zeros_like(&self) -> Self {
        let mut m = self.clone();
        for (_, t) in m.tensors_mut() {
            t.fill(0.0);
        }
        m
    }

    /// Parameter tensors in a fixed order: name, shape, row-major values.
    pub fn tensors(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        let m = &self.mhca;
        let two = |a: &Array2<f64>| vec![a.nrows(), a.ncols()];
        let slices: [(Vec<usize>, &[f64]); 10] = [
            (two(&m.wq), m.wq.as_slice().expect("standard layout")),
            (two(&m.wk), m.wk.as_slice().expect("standard layout")),
            (two(&m.wv), m.wv.as_slice().expect("standard layout")),
            (two(&m.wo), m.wo.as_slice().expect("standard layout")),
            (vec![m.bq.len()], m.bq.as_slice().expect("standard layout")),
            (vec![m.bv.len()], m.bv.as_slice().expect("standard layout")),
            (vec![m.bo.len()], m.bo.as_slice().expect("standard layout")),
            (vec![self.pool.query.len()], self.pool.query.as_slice().expect("standard layout")),
            (two(&self.proj.weight), self.proj.weight.as_slice().expect("standard layout")),
            (vec![self.proj.bias.len()], self.proj.bias.as_slice().expect("standard layout")),
        ];
        NAMES.iter().zip(slices).map(|(n, (s, d))| (*n, s, d)).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let m = &mut self.mhca;
        let slices: [&mut [f64]; 10] = [
            m.wq.as_slice_mut().expect("standard layout"),
            m.wk.as_slice_mut().expect("standard layout"),
            m.wv.as_slice_mut().expect("standard layout"),
            m.wo.as_slice_mut().expect("standard layout"),
            m.bq.as_slice_mut().expect("standard layout"),
            m.bv.as_slice_mut().expect("standard layout"),
            m.bo.as_slice_mut().expect("standard layout"),
            self.pool.query.as_slice_mut().expect("standard layout"),
            self.proj.weight.as_slice_mut().expect("standard layout"),
            self.proj.bias.as_slice_mut().expect("standard layout"),
        ];
        NAMES.iter().copied().zip(slices).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|(_, _, d)| d.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, theta: &[f64]) -> Result<(), TemporalError> {
        let total: usize = self.tensors().iter().map(|(_, _, d)| d.len()).sum();
        if theta.len() != total {
            return Err(TemporalError::Shape(format!("{} values for {total} parameters", theta.len())));
        }
        let mut rest = theta;
        for (_, t) in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_batch(&self, b: &Batch) -> Result<(), TemporalError> {
        check_windows(&b.query, &b.context, self.dim())?;
        if b.targets.len() != b.query.dim().0 || b.targets.is_empty() {
            return Err(TemporalError::Shape(format!(
                "{} targets for {} windows",
                b.targets.len(),
                b.query.dim().0
            )));
        }
        Ok(())
    }

    /// Class logits per window.
    pub fn logits(&self, b: &Batch) -> Result<Array2<f64>, TemporalError> {
        self.validate()?;
        self.check_batch(b)?;
        let enriched = temporal_enrich(&b.query, &b.context, &self.mhca)?;
        project(&attn_pool(&enriched, &self.pool)?, &self.proj)
    }

    /// Mean cross-entropy over windows.
    pub fn loss(&self, b: &Batch) -> Result<f64, TemporalError> {
        let z = self.logits(b)?;
        let mut total = 0.0;
        for (row, &t) in z.rows().into_iter().zip(&b.targets) {
            total += cross_entropy(row.as_slice().expect("standard layout"), t)?;
        }
        let loss = total / b.targets.len() as f64;
        if !loss.is_finite() {
            return Err(TemporalError::NonFinite);
        }
        Ok(loss)
    }

    /// Loss and its gradient with respect to every parameter, by reverse-mode
    /// differentiation through the layers. Windows are accumulated in order.
    pub fn loss_and_gradient(&self, b: &Batch) -> Result<(f64, TemporalModel), TemporalError> {
        let loss = self.loss(b)?;
        let n = b.targets.len() as f64;
        let d = self.dim();
        let dh = self.mhca.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let pool_scale = 1.0 / (d as f64).sqrt();
        let mut g = self.zeros_like();
        for (w, &target) in b.targets.iter().enumerate() {
            let xq = b.query.index_axis(Axis(0), w);
            let xkv = b.context.index_axis(Axis(0), w);
            let (y, tr) = mhca_window(xq, xkv, &self.mhca);
            let e = &xq + &y;
            let a = window_weights(e.view(), &self.pool.query);
            let pooled = a.dot(&e);
            let z = pooled.dot(&self.proj.weight) + &self.proj.bias;
            if target >= z.len() {
                return Err(TemporalError::Target { target, classes: z.len() });
            }
            let dz = Array1::from(cross_entropy_grad(z.as_slice().expect("standard layout"), target)) / n;

            g.proj.weight += &outer(pooled.view(), dz.view());
            g.proj.bias += &dz;
            let dp = self.proj.weight.dot(&dz);

            // Pooling: out = sum_j a_j e_j with a = softmax(e q / sqrt(D)).
            let da = e.dot(&dp);
            let ds = &a * &(&da - a.dot(&da));
            g.pool.query += &(ds.dot(&e) * pool_scale);
            let de = outer(a.view(), dp.view()) + outer(ds.view(), self.pool.query.view()) * pool_scale;

            // Residual: the enrichment output gradient flows into the attention output.
            g.mhca.wo += &tr.o.t().dot(&de);
            g.mhca.bo += &de.sum_axis(Axis(0));
            let d_o = de.dot(&self.mhca.wo.t());

            let mut dq = Array2::zeros((4, d));
            let mut dk = Array2::zeros((4, d));
            let mut dv = Array2::zeros((4, d));
            for (h, attn) in tr.attn.iter().enumerate() {
                let cols = ndarray::s![.., h * dh..(h + 1) * dh];
                let do_h = d_o.slice(cols);
                let d_attn = do_h.dot(&tr.v.slice(cols).t());
                dv.slice_mut(cols).assign(&attn.t().dot(&do_h));
                let row_dot = (attn * &d_attn).sum_axis(Axis(1)).insert_axis(Axis(1));
                let d_logits = attn * &(&d_attn - &row_dot);
                dq.slice_mut(cols).assign(&(d_logits.dot(&tr.k.slice(cols)) * scale));
                dk.slice_mut(cols).assign(&(d_logits.t().dot(&tr.q.slice(cols)) * scale));
            }
            g.mhca.wq += &xq.t().dot(&dq);
            g.mhca.bq += &dq.sum_axis(Axis(0));
            g.mhca.wk += &xkv.t().dot(&dk);
            g.mhca.wv += &xkv.t().dot(&dv);
            g.mhca.bv += &dv.sum_axis(Axis(0));
        }
        Ok((loss, g))
    }

    /// Serialises every parameter plus the head count.
    pub fn to_snapshot(&self) -> Vec<u8> {
        let mut tensors = vec![NamedTensor {
            name: "mhca.heads".into(),
            shape: vec![1],
            data: vec![self.mhca.heads as f64],
        }];
        tensors.extend(self.tensors().into_iter().map(|(name, shape, data)| NamedTensor {
            name: name.into(),
            shape,
            data: data.to_vec(),
        }));
        encode_tensors(&tensors)
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self, TemporalError> {
        let tensors = decode_tensors(bytes)?;
        let find = |name: &str| {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| TemporalError::Snapshot(format!("missing tensor {name}")))
        };
        let heads = find("mhca.heads")?.data.first().copied().unwrap_or(0.0);
        if heads < 1.0 || heads.fract() != 0.0 {
            return Err(TemporalError::Snapshot(format!("bad head count {heads}")));
        }
        let mat = |name: &str| -> Result<Array2<f64>, TemporalError> {
            let t = find(name)?;
            match t.shape[..] {
                [r, c] => Array2::from_shape_vec((r, c), t.data.clone()).map_err(|e| TemporalError::Snapshot(e.to_string())),
                _ => Err(TemporalError::Snapshot(format!("{name} must be a matrix"))),
            }
        };
        let vector = |name: &str| -> Result<Array1<f64>, TemporalError> {
            let t = find(name)?;
            match t.shape[..] {
                [_] => Ok(Array1::from(t.data.clone())),
                _ => Err(TemporalError::Snapshot(format!("{name} must be a vector"))),
            }
        };
        Self::new(
            MhcaParams {
                heads: heads as usize,
                wq: mat("mhca.wq")?,
                wk: mat("mhca.wk")?,
                wv: mat("mhca.wv")?,
                wo: mat("mhca.wo")?,
                bq: vector("mhca.bq")?,
                bv: vector("mhca.bv")?,
                bo: vector("mhca.bo")?,
            },
            PoolParams { query: vector("pool.query")? },
            Projection {
                weight: mat("proj.weight")?,
                bias: vector("proj.bias")?,
            },
        )
    }
}

/// Enriches a frame sequence, each frame attending to the mean of up to
/// `context_len` preceding raw frames (the first frame attends to itself).
pub fn enrich_sequence(
    frames: &[Array3<f64>],
    params: &MhcaParams,
    context_len: usize,
) -> Result<Vec<Array3<f64>>, TemporalError> {
    let mut buffer = ContextBuffer::new(context_len)?;
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let ctx = buffer.context_for(f)?;
        out.push(temporal_enrich(f, &ctx, params)?);
        buffer.push(f.clone())?;
    }
    Ok(out)
}
