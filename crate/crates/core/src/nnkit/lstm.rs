//! A gated recurrent cell and (bi)directional sequence layer with
//! backpropagation through time.

use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::tensor::Tensor;
use super::NnError;

/// Gate order inside the packed weight matrices: input, forget, cell
/// candidate, output.
const GATES: usize = 4;

/// One recurrent cell: `z = W·x + U·h + b` split into four gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    /// `[4·units, inputs]`.
    pub w: Tensor,
    /// `[4·units, units]`.
    pub u: Tensor,
    /// `[4·units]`.
    pub b: Vec<f64>,
}

/// Per-step intermediates kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmDirectionCache {
    steps: Vec<StepCache>,
}

impl LstmCell {
    pub fn units(&self) -> usize {
        self.u.shape[1]
    }

    pub fn inputs(&self) -> usize {
        self.w.shape[1]
    }

    pub fn zeros(inputs: usize, units: usize) -> LstmCell {
        LstmCell {
            w: Tensor::zeros(&[GATES * units, inputs]),
            u: Tensor::zeros(&[GATES * units, units]),
            b: vec![0.0; GATES * units],
        }
    }

    /// One gated update. Returns the new hidden and cell states.
    pub fn step(
        &self,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        let (h, c, _) = self.step_cached(x, h_prev, c_prev)?;
        Ok((h, c))
    }

    fn step_cached(
        &self,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, StepCache), NnError> {
        let units = self.units();
        let inputs = self.inputs();
        if x.len() != inputs || h_prev.len() != units || c_prev.len() != units {
            return Err(NnError::ShapeMismatch(format!(
                "lstm step x={} h={} c={} against inputs={inputs} units={units}",
                x.len(),
                h_prev.len(),
                c_prev.len()
            )));
        }
        let mut z = self.b.clone();
        for row in 0..GATES * units {
            let wrow = &self.w.data[row * inputs..(row + 1) * inputs];
            let urow = &self.u.data[row * units..(row + 1) * units];
            let mut acc = 0.0;
            for (w, xv) in wrow.iter().zip(x) {
                acc += w * xv;
            }
            for (u, hv) in urow.iter().zip(h_prev) {
                acc += u * hv;
            }
            z[row] += acc;
        }
        let mut i = vec![0.0; units];
        let mut f = vec![0.0; units];
        let mut g = vec![0.0; units];
        let mut o = vec![0.0; units];
        for k in 0..units {
            i[k] = sigmoid(z[k]);
            f[k] = sigmoid(z[units + k]);
            g[k] = z[2 * units + k].tanh();
            o[k] = sigmoid(z[3 * units + k]);
        }
        let mut c = vec![0.0; units];
        let mut h = vec![0.0; units];
        for k in 0..units {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            h[k] = o[k] * c[k].tanh();
        }
        let cache = StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            c: c.clone(),
        };
        Ok((h, c, cache))
    }

    /// Runs the whole sequence, returning every hidden state.
    fn run(&self, input: &Tensor) -> Result<(Tensor, LstmDirectionCache), NnError> {
        let t_len = input.shape[0];
        let units = self.units();
        let mut h = vec![0.0; units];
        let mut c = vec![0.0; units];
        let mut outputs = Vec::with_capacity(t_len * units);
        let mut steps = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let x = &input.data[t * self.inputs()..(t + 1) * self.inputs()];
            let (h_new, c_new, cache) = self.step_cached(x, &h, &c)?;
            outputs.extend_from_slice(&h_new);
            steps.push(cache);
            h = h_new;
            c = c_new;
        }
        Ok((Tensor::from_vec(&[t_len, units], outputs)?, LstmDirectionCache { steps }))
    }

    /// Backpropagation through time. `grad_h` holds ∂L/∂h_t for every step.
    fn run_backward(
        &self,
        cache: &LstmDirectionCache,
        grad_h_seq: &Tensor,
    ) -> Result<(Tensor, LstmCell), NnError> {
        let units = self.units();
        let inputs = self.inputs();
        let t_len = cache.steps.len();
        let mut grads = LstmCell::zeros(inputs, units);
        let mut grad_x = Tensor::zeros(&[t_len, inputs]);
        let mut dh_next = vec![0.0; units];
        let mut dc_next = vec![0.0; units];
        for t in (0..t_len).rev() {
            let s = &cache.steps[t];
            let mut dz = vec![0.0; GATES * units];
            let mut dh_prev = vec![0.0; units];
            let mut dc_prev = vec![0.0; units];
            for k in 0..units {
                let dh = grad_h_seq.data[t * units + k] + dh_next[k];
                let tanh_c = s.c[k].tanh();
                let d_o = dh * tanh_c;
                let dc = dh * s.o[k] * (1.0 - tanh_c * tanh_c) + dc_next[k];
                let di = dc * s.g[k];
                let df = dc * s.c_prev[k];
                let dg = dc * s.i[k];
                dz[k] = di * s.i[k] * (1.0 - s.i[k]);
                dz[units + k] = df * s.f[k] * (1.0 - s.f[k]);
                dz[2 * units + k] = dg * (1.0 - s.g[k] * s.g[k]);
                dz[3 * units + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                dc_prev[k] = dc * s.f[k];
            }
            for row in 0..GATES * units {
                let g = dz[row];
                if g == 0.0 {
                    continue;
                }
                grads.b[row] += g;
                for (w_idx, xv) in s.x.iter().enumerate() {
                    grads.w.data[row * inputs + w_idx] += g * xv;
                    grad_x.data[t * inputs + w_idx] += g * self.w.data[row * inputs + w_idx];
                }
                for (u_idx, hv) in s.h_prev.iter().enumerate() {
                    grads.u.data[row * units + u_idx] += g * hv;
                    dh_prev[u_idx] += g * self.u.data[row * units + u_idx];
                }
            }
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        Ok((grad_x, grads))
    }
}

/// A recurrent layer over `[time, features]`, optionally bidirectional
/// (concatenating the reversed pass) and optionally returning the full
/// sequence of internal states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub cell: LstmCell,
    pub backward_cell: Option<LstmCell>,
    pub return_sequences: bool,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    forward: LstmDirectionCache,
    backward: Option<LstmDirectionCache>,
    t_len: usize,
}

fn reverse_time(t: &Tensor) -> Tensor {
    let (rows, cols) = (t.shape[0], t.shape[1]);
    let mut data = Vec::with_capacity(t.data.len());
    for r in (0..rows).rev() {
        data.extend_from_slice(&t.data[r * cols..(r + 1) * cols]);
    }
    Tensor::from_vec(&[rows, cols], data).expect("same size")
}

impl Lstm {
    pub fn units(&self) -> usize {
        self.cell.units()
    }

    /// Output feature width: doubled when bidirectional.
    pub fn output_width(&self) -> usize {
        self.units() * if self.backward_cell.is_some() { 2 } else { 1 }
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, LstmCache), NnError> {
        if input.rank() != 2 {
            return Err(NnError::ShapeMismatch(format!("lstm over {:?}", input.shape)));
        }
        let t_len = input.shape[0];
        let (fwd, fwd_cache) = self.cell.run(input)?;
        let (seq, bwd_cache) = match &self.backward_cell {
            None => (fwd, None),
            Some(cell) => {
                let (bwd_rev, bwd_cache) = cell.run(&reverse_time(input))?;
                let bwd = reverse_time(&bwd_rev);
                let units = self.units();
                let mut data = Vec::with_capacity(t_len * 2 * units);
                for t in 0..t_len {
                    data.extend_from_slice(&fwd.data[t * units..(t + 1) * units]);
                    data.extend_from_slice(&bwd.data[t * units..(t + 1) * units]);
                }
                (Tensor::from_vec(&[t_len, 2 * units], data)?, Some(bwd_cache))
            }
        };
        let cache = LstmCache { forward: fwd_cache, backward: bwd_cache, t_len };
        let out = if self.return_sequences {
            seq
        } else {
            let width = self.output_width();
            // Final state of each direction: the forward pass's last step
            // and the backward pass's step at the sequence start.
            let mut data = Vec::with_capacity(width);
            let units = self.units();
            data.extend_from_slice(&seq.data[(t_len - 1) * width..(t_len - 1) * width + units]);
            if width > units {
                data.extend_from_slice(&seq.data[units..2 * units]);
            }
            Tensor::from_vec(&[width], data)?
        };
        Ok((out, cache))
    }

    /// Gradients of input and of both cells' parameters. The parameter
    /// gradients come back as an `Lstm` of matching shape.
    pub fn backward(&self, cache: &LstmCache, grad_out: &Tensor) -> Result<(Tensor, Lstm), NnError> {
        let units = self.units();
        let width = self.output_width();
        let t_len = cache.t_len;
        // Expand a last-state gradient into a full-sequence gradient.
        let grad_seq = if self.return_sequences {
            grad_out.clone()
        } else {
            let mut g = Tensor::zeros(&[t_len, width]);
            for k in 0..units {
                g.data[(t_len - 1) * width + k] = grad_out.data[k];
            }
            if width > units {
                for k in 0..units {
                    g.data[units + k] = grad_out.data[units + k];
                }
            }
            g
        };
        let fwd_grad = if width > units {
            let mut g = Tensor::zeros(&[t_len, units]);
            for t in 0..t_len {
                for k in 0..units {
                    g.data[t * units + k] = grad_seq.data[t * width + k];
                }
            }
            g
        } else {
            grad_seq.clone()
        };
        let (mut grad_x, grad_fwd_cell) = self.cell.run_backward(&cache.forward, &fwd_grad)?;
        let grad_bwd_cell = match (&self.backward_cell, &cache.backward) {
            (Some(cell), Some(bwd_cache)) => {
                let mut g = Tensor::zeros(&[t_len, units]);
                for t in 0..t_len {
                    for k in 0..units {
                        g.data[t * units + k] = grad_seq.data[t * width + units + k];
                    }
                }
                let (gx_rev, gcell) = cell.run_backward(bwd_cache, &reverse_time(&g))?;
                let gx = reverse_time(&gx_rev);
                grad_x = grad_x.add(&gx)?;
                Some(gcell)
            }
            _ => None,
        };
        Ok((
            grad_x,
            Lstm {
                cell: grad_fwd_cell,
                backward_cell: grad_bwd_cell,
                return_sequences: self.return_sequences,
            },
        ))
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.cell.w.data.clone();
        out.extend(&self.cell.u.data);
        out.extend(&self.cell.b);
        if let Some(cell) = &self.backward_cell {
            out.extend(&cell.w.data);
            out.extend(&cell.u.data);
            out.extend(&cell.b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&params[offset..offset + dst.len()]);
            offset += dst.len();
        };
        take(&mut self.cell.w.data);
        take(&mut self.cell.u.data);
        take(&mut self.cell.b);
        if let Some(cell) = &mut self.backward_cell {
            take(&mut cell.w.data);
            take(&mut cell.u.data);
            take(&mut cell.b);
        }
    }

    pub fn param_count(&self) -> usize {
        let one = self.cell.w.size() + self.cell.u.size() + self.cell.b.len();
        one * if self.backward_cell.is_some() { 2 } else { 1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_everything_gives_zero_output() {
        let cell = LstmCell::zeros(2, 3);
        let (h, c) = cell.step(&[0.0, 0.0], &[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(c, vec![0.0; 3]);
    }

    #[test]
    fn single_unit_cell_matches_a_scalar_hand_trace() {
        // One unit, one input; every weight hand-set.
        let mut cell = LstmCell::zeros(1, 1);
        cell.w.data = vec![0.5, -0.3, 0.8, 1.1]; // i, f, g, o input weights
        cell.u.data = vec![0.2, 0.4, -0.6, 0.1];
        cell.b = vec![0.05, -0.1, 0.0, 0.2];
        let xs = [1.0, -0.5, 0.25];

        // Independent scalar re-computation.
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut h = 0.0;
        let mut c = 0.0;
        let mut expect = Vec::new();
        for &x in &xs {
            let i = sig(0.5 * x + 0.2 * h + 0.05);
            let f = sig(-0.3 * x + 0.4 * h - 0.1);
            let g = (0.8 * x - 0.6 * h).tanh();
            let o = sig(1.1 * x + 0.1 * h + 0.2);
            c = f * c + i * g;
            h = o * c.tanh();
            expect.push(h);
        }

        let lstm = Lstm { cell, backward_cell: None, return_sequences: true };
        let input = Tensor::from_vec(&[3, 1], xs.to_vec()).unwrap();
        let out = lstm.forward(&input).unwrap();
        for (a, b) in out.data.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn bidirectional_concatenates_both_passes() {
        let mut fwd = LstmCell::zeros(1, 1);
        fwd.w.data = vec![1.0; 4];
        fwd.b = vec![0.0; 4];
        let mut bwd = LstmCell::zeros(1, 1);
        bwd.w.data = vec![-1.0; 4];
        let lstm =
            Lstm { cell: fwd, backward_cell: Some(bwd), return_sequences: true };
        let input = Tensor::from_vec(&[4, 1], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = lstm.forward(&input).unwrap();
        assert_eq!(out.shape, vec![4, 2]);
        // The reversed pass on a palindromic input mirrors itself.
        let palindrome = Tensor::from_vec(&[3, 1], vec![0.2, 0.5, 0.2]).unwrap();
        let out = lstm.forward(&palindrome).unwrap();
        assert_eq!(out.shape, vec![3, 2]);
    }

    #[test]
    fn last_state_output_matches_the_sequence_tail() {
        let mut cell = LstmCell::zeros(2, 3);
        for (k, v) in cell.w.data.iter_mut().enumerate() {
            *v = ((k % 7) as f64 - 3.0) * 0.1;
        }
        let seq_layer = Lstm { cell: cell.clone(), backward_cell: None, return_sequences: true };
        let last_layer = Lstm { cell, backward_cell: None, return_sequences: false };
        let input =
            Tensor::from_vec(&[5, 2], (0..10).map(|v| v as f64 * 0.1).collect()).unwrap();
        let seq = seq_layer.forward(&input).unwrap();
        let last = last_layer.forward(&input).unwrap();
        assert_eq!(&seq.data[4 * 3..], &last.data[..]);
    }
}
