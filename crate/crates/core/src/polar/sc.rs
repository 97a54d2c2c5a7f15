//! Successive-cancellation engine shared by channel decoding, BSC decoding,
//! code construction and source coding.
//!
//! The caller supplies a decision rule per synthetic channel; the engine
//! handles the LLR recursion and the partial sums. Buffers use the usual
//! "one active node per size" layout: a node of size `s` keeps its LLRs in
//! `llr[s..2s]` and its re-encoded bits in `bits[s..2s]`.

/// Magnitude at which channel LLRs are clipped.
pub const LLR_MAX: f64 = 40.0;

/// Exact check-node update `2 atanh(tanh(a/2) tanh(b/2))` in a stable form.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let t = (0.5 * a).tanh() * (0.5 * b).tanh();
    if t.abs() < 0.9 {
        // small outputs: the min-plus form below would cancel catastrophically
        return 2.0 * t.atanh();
    }
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let m = a.abs().min(b.abs());
    sign * m + correction((a + b).abs()) - correction((a - b).abs())
}

#[inline]
fn correction(x: f64) -> f64 {
    if x > 30.0 {
        0.0
    } else {
        (-x).exp().ln_1p()
    }
}

/// Reusable scratch space for one code length.
pub struct ScEngine {
    n: usize,
    llr: Vec<f64>,
    bits: Vec<u8>,
    u: Vec<u8>,
}

impl ScEngine {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        ScEngine {
            n,
            llr: vec![0.0; 2 * n],
            bits: vec![0; 2 * n],
            u: vec![0; n],
        }
    }

    /// Runs SC over `channel_llrs`. `decide(i, llr)` returns the value taken
    /// for `u[i]` given the synthetic-channel LLR.
    ///
    /// Afterwards `u()` holds the decided input vector and `codeword()` its
    /// polar transform.
    pub fn run<F: FnMut(usize, f64) -> u8>(&mut self, channel_llrs: &[f64], decide: &mut F) {
        assert_eq!(channel_llrs.len(), self.n);
        let n = self.n;
        for (dst, &l) in self.llr[n..].iter_mut().zip(channel_llrs) {
            *dst = l.clamp(-LLR_MAX, LLR_MAX);
        }
        self.node(n, 0, decide);
    }

    fn node<F: FnMut(usize, f64) -> u8>(&mut self, s: usize, u_off: usize, decide: &mut F) {
        if s == 1 {
            let b = decide(u_off, self.llr[1]) & 1;
            self.u[u_off] = b;
            self.bits[1] = b;
            return;
        }
        let h = s / 2;
        {
            let (lo, hi) = self.llr.split_at_mut(s);
            let parent = &hi[..s];
            for i in 0..h {
                lo[h + i] = boxplus(parent[i], parent[h + i]);
            }
        }
        self.node(h, u_off, decide);
        // park the left result in the first half of this node's bit slot
        self.bits.copy_within(h..s, s);
        {
            let (lo, hi) = self.llr.split_at_mut(s);
            let parent = &hi[..s];
            let left = &self.bits[s..s + h];
            for i in 0..h {
                let a = parent[i];
                lo[h + i] = parent[h + i] + if left[i] == 0 { a } else { -a };
            }
        }
        self.node(h, u_off + h, decide);
        for i in 0..h {
            let right = self.bits[h + i];
            self.bits[s + i] ^= right;
            self.bits[s + h + i] = right;
        }
    }

    pub fn u(&self) -> &[u8] {
        &self.u
    }

    pub fn codeword(&self) -> &[u8] {
        &self.bits[self.n..]
    }
}
