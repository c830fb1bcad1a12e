use super::{LstmBlock, Model, ModelError};
use crate::paths::{PathSample, PAD};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `y += M x` for row-major `M` of shape `y.len() × x.len()`.
fn matvec_add(m: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for (j, yj) in y.iter_mut().enumerate() {
        let row = &m[j * n..(j + 1) * n];
        *yj += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `x += Mᵀ y`.
fn matvec_t_add(m: &[f64], y: &[f64], x: &mut [f64]) {
    let n = x.len();
    for (j, &yj) in y.iter().enumerate() {
        if yj == 0.0 {
            continue;
        }
        let row = &m[j * n..(j + 1) * n];
        x.iter_mut().zip(row).for_each(|(xi, a)| *xi += a * yj);
    }
}

/// `G += y xᵀ`.
fn outer_add(g: &mut [f64], y: &[f64], x: &[f64]) {
    let n = x.len();
    for (j, &yj) in y.iter().enumerate() {
        if yj == 0.0 {
            continue;
        }
        let row = &mut g[j * n..(j + 1) * n];
        row.iter_mut().zip(x).for_each(|(gi, a)| *gi += a * yj);
    }
}

#[derive(Debug, Clone)]
struct DirCache {
    /// Post-activation gates per time step, `4h` each.
    gates: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// `T × input_dim`.
    input: Vec<f64>,
    dirs: [DirCache; 2],
}

#[derive(Debug, Clone)]
struct PathCache {
    tokens: Vec<u32>,
    layers: Vec<LayerCache>,
    /// Time step of the maximum per pooled feature.
    argmax: Vec<usize>,
}

/// Activations of one forward pass, enough for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    paths: Vec<PathCache>,
    /// Concatenated pooled features.
    pooled: Vec<f64>,
    /// Fused path representation.
    p: Vec<f64>,
    relation: usize,
    /// Cosine of `p` and the relation embedding.
    pub cosine: f64,
    pub probability: f64,
}

impl Model {
    pub(super) fn check(&self, paths: &[Vec<u32>], relation: u32) -> Result<(), ModelError> {
        if paths.len() != self.cfg.num_paths {
            return Err(ModelError::PathCount {
                found: paths.len(),
                expected: self.cfg.num_paths,
            });
        }
        if relation as usize >= self.cfg.relations {
            return Err(ModelError::RelationOutOfRange {
                relation,
                relations: self.cfg.relations,
            });
        }
        for &t in paths.iter().flatten() {
            if t as usize >= self.cfg.vocab_size {
                return Err(ModelError::TokenOutOfRange {
                    token: t,
                    vocab: self.cfg.vocab_size,
                });
            }
        }
        Ok(())
    }

    fn run_direction(
        &self,
        params: &[f64],
        blk: &LstmBlock,
        input: &[f64],
        len: usize,
        reverse: bool,
    ) -> DirCache {
        let h = self.cfg.hidden_dim;
        let n = blk.input_dim;
        let w = &params[blk.w..blk.w + 4 * h * n];
        let u = &params[blk.u..blk.u + 4 * h * h];
        let b = &params[blk.b..blk.b + 4 * h];
        let mut cache = DirCache {
            gates: vec![0.0; len * 4 * h],
            c: vec![0.0; len * h],
            h: vec![0.0; len * h],
        };
        let zeros = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        for step in 0..len {
            let t = if reverse { len - 1 - step } else { step };
            let prev = (step > 0).then(|| if reverse { t + 1 } else { t - 1 });
            z.copy_from_slice(b);
            matvec_add(w, &input[t * n..(t + 1) * n], &mut z);
            let (h_prev, c_prev) = match prev {
                Some(p) => (
                    cache.h[p * h..(p + 1) * h].to_vec(),
                    cache.c[p * h..(p + 1) * h].to_vec(),
                ),
                None => (zeros.clone(), zeros.clone()),
            };
            matvec_add(u, &h_prev, &mut z);
            let g = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[h + k]);
                let gg = z[2 * h + k].tanh();
                let o = sigmoid(z[3 * h + k]);
                g[k] = i;
                g[h + k] = f;
                g[2 * h + k] = gg;
                g[3 * h + k] = o;
                let c = f * c_prev[k] + i * gg;
                cache.c[t * h + k] = c;
                cache.h[t * h + k] = o * c.tanh();
            }
        }
        cache
    }

    fn encode_path(&self, params: &[f64], path: &[u32]) -> PathCache {
        let h = self.cfg.hidden_dim;
        let de = self.cfg.embed_dim;
        let tokens: Vec<u32> = path.iter().copied().take_while(|&t| t != PAD).collect();
        let len = tokens.len();
        let mut input = Vec::with_capacity(len * de);
        for &t in &tokens {
            let at = self.layout.embedding + t as usize * de;
            input.extend_from_slice(&params[at..at + de]);
        }
        let mut layers = Vec::with_capacity(self.cfg.layers);
        for blocks in &self.layout.lstm {
            let fwd = self.run_direction(params, &blocks[0], &input, len, false);
            let bwd = self.run_direction(params, &blocks[1], &input, len, true);
            let mut output = Vec::with_capacity(len * 2 * h);
            for t in 0..len {
                output.extend_from_slice(&fwd.h[t * h..(t + 1) * h]);
                output.extend_from_slice(&bwd.h[t * h..(t + 1) * h]);
            }
            layers.push(LayerCache {
                input,
                dirs: [fwd, bwd],
            });
            input = output;
        }
        // `input` now holds the top layer's output.
        let mut argmax = vec![0; 2 * h];
        for (k, a) in argmax.iter_mut().enumerate() {
            for t in 1..len {
                if input[t * 2 * h + k] > input[*a * 2 * h + k] {
                    *a = t;
                }
            }
        }
        PathCache {
            tokens,
            layers,
            argmax,
        }
    }

    fn top_output(&self, pc: &PathCache, t: usize, k: usize) -> f64 {
        let h = self.cfg.hidden_dim;
        let top = pc.layers.last().expect("at least one layer");
        if k < h {
            top.dirs[0].h[t * h + k]
        } else {
            top.dirs[1].h[t * h + k - h]
        }
    }

    pub(super) fn forward_with(
        &self,
        params: &[f64],
        paths: &[Vec<u32>],
        relation: u32,
    ) -> Result<ForwardCache, ModelError> {
        self.check(paths, relation)?;
        let h = self.cfg.hidden_dim;
        let df = self.cfg.fusion_dim;
        let mut caches = Vec::with_capacity(paths.len());
        let mut pooled = Vec::with_capacity(paths.len() * 2 * h);
        for path in paths {
            let pc = self.encode_path(params, path);
            for k in 0..2 * h {
                // An empty path pools to zero.
                pooled.push(if pc.tokens.is_empty() {
                    0.0
                } else {
                    self.top_output(&pc, pc.argmax[k], k)
                });
            }
            caches.push(pc);
        }
        let mut p = params[self.layout.fusion_b..self.layout.fusion_b + df].to_vec();
        let n = pooled.len();
        matvec_add(
            &params[self.layout.fusion_w..self.layout.fusion_w + df * n],
            &pooled,
            &mut p,
        );
        p.iter_mut().for_each(|x| *x = x.tanh());
        let r = relation as usize;
        let rv = &params[self.layout.relation + r * df..self.layout.relation + (r + 1) * df];
        let cosine = cosine(&p, rv);
        Ok(ForwardCache {
            paths: caches,
            pooled,
            p,
            relation: r,
            cosine,
            probability: sigmoid(cosine),
        })
    }

    /// Probability that the paths support `relation`, with the activations
    /// needed by [`Model::backward`].
    pub fn forward(&self, paths: &[Vec<u32>], relation: u32) -> Result<ForwardCache, ModelError> {
        self.forward_with(&self.params, paths, relation)
    }

    pub fn score(&self, sample: &PathSample) -> Result<f64, ModelError> {
        Ok(self.forward(&sample.paths, sample.relation)?.probability)
    }

    /// Gradient of the binary cross-entropy for `label`, laid out like the
    /// parameters.
    pub fn backward(&self, cache: &ForwardCache, label: u8) -> Vec<f64> {
        let mut grad = vec![0.0; self.layout.total];
        self.backward_into(&self.params, cache, label, &mut grad);
        grad
    }

    pub(super) fn backward_into(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        label: u8,
        grad: &mut [f64],
    ) {
        let h = self.cfg.hidden_dim;
        let df = self.cfg.fusion_dim;
        let dl_ds = cache.probability - label as f64;
        let r_at = self.layout.relation + cache.relation * df;
        let rv = &params[r_at..r_at + df];
        let (pn, rn) = (norm(&cache.p), norm(rv));
        if pn == 0.0 || rn == 0.0 {
            return;
        }
        let s = cache.cosine;
        // d cos / dp = (r̂ - s p̂)/|p|, d cos / dr = (p̂ - s r̂)/|r|.
        let mut da = vec![0.0; df];
        for k in 0..df {
            let (ph, rh) = (cache.p[k] / pn, rv[k] / rn);
            let dp = dl_ds * (rh - s * ph) / pn;
            grad[r_at + k] += dl_ds * (ph - s * rh) / rn;
            da[k] = dp * (1.0 - cache.p[k] * cache.p[k]);
        }
        let n = cache.pooled.len();
        let fw = self.layout.fusion_w;
        outer_add(&mut grad[fw..fw + df * n], &da, &cache.pooled);
        let fb = self.layout.fusion_b;
        grad[fb..fb + df]
            .iter_mut()
            .zip(&da)
            .for_each(|(g, d)| *g += d);
        let mut dpooled = vec![0.0; n];
        matvec_t_add(&params[fw..fw + df * n], &da, &mut dpooled);

        for (pi, pc) in cache.paths.iter().enumerate() {
            let len = pc.tokens.len();
            if len == 0 {
                continue;
            }
            let mut dout = vec![0.0; len * 2 * h];
            for k in 0..2 * h {
                dout[pc.argmax[k] * 2 * h + k] += dpooled[pi * 2 * h + k];
            }
            for (l, lc) in pc.layers.iter().enumerate().rev() {
                let blocks = &self.layout.lstm[l];
                let n_in = blocks[0].input_dim;
                let mut dx = vec![0.0; len * n_in];
                for dir in 0..2 {
                    let dh_out: Vec<f64> = (0..len)
                        .flat_map(|t| dout[t * 2 * h + dir * h..t * 2 * h + (dir + 1) * h].to_vec())
                        .collect();
                    self.back_direction(
                        params,
                        &blocks[dir],
                        &lc.input,
                        &lc.dirs[dir],
                        len,
                        dir == 1,
                        &dh_out,
                        &mut dx,
                        grad,
                    );
                }
                dout = dx;
            }
            let de = self.cfg.embed_dim;
            for (t, &tok) in pc.tokens.iter().enumerate() {
                let at = self.layout.embedding + tok as usize * de;
                grad[at..at + de]
                    .iter_mut()
                    .zip(&dout[t * de..(t + 1) * de])
                    .for_each(|(g, d)| *g += d);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn back_direction(
        &self,
        params: &[f64],
        blk: &LstmBlock,
        input: &[f64],
        dc: &DirCache,
        len: usize,
        reverse: bool,
        dh_out: &[f64],
        dx: &mut [f64],
        grad: &mut [f64],
    ) {
        let h = self.cfg.hidden_dim;
        let n = blk.input_dim;
        let w = &params[blk.w..blk.w + 4 * h * n];
        let u = &params[blk.u..blk.u + 4 * h * h];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for step in (0..len).rev() {
            let t = if reverse { len - 1 - step } else { step };
            let prev = (step > 0).then(|| if reverse { t + 1 } else { t - 1 });
            let g = &dc.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let c = dc.c[t * h + k];
                let tc = c.tanh();
                let dh = dh_out[t * h + k] + dh_next[k];
                let d_o = dh * tc;
                let dcell = dh * o * (1.0 - tc * tc) + dc_next[k];
                let c_prev = prev.map_or(0.0, |p| dc.c[p * h + k]);
                dz[k] = dcell * gg * i * (1.0 - i);
                dz[h + k] = dcell * c_prev * f * (1.0 - f);
                dz[2 * h + k] = dcell * i * (1.0 - gg * gg);
                dz[3 * h + k] = d_o * o * (1.0 - o);
                dc_next[k] = dcell * f;
            }
            grad[blk.b..blk.b + 4 * h]
                .iter_mut()
                .zip(&dz)
                .for_each(|(gb, d)| *gb += d);
            outer_add(
                &mut grad[blk.w..blk.w + 4 * h * n],
                &dz,
                &input[t * n..(t + 1) * n],
            );
            matvec_t_add(w, &dz, &mut dx[t * n..(t + 1) * n]);
            dh_next.iter_mut().for_each(|x| *x = 0.0);
            if let Some(p) = prev {
                outer_add(
                    &mut grad[blk.u..blk.u + 4 * h * h],
                    &dz,
                    &dc.h[p * h..(p + 1) * h],
                );
                matvec_t_add(u, &dz, &mut dh_next);
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity, 0 when either vector is zero.
pub(super) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Binary cross-entropy of probability `y` for `label`.
pub(super) fn bce(y: f64, label: u8) -> f64 {
    if label == 1 {
        -y.ln()
    } else {
        -(1.0 - y).ln()
    }
}
