use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arithmetic {
    /// Real network on the in-phase samples only.
    #[serde(rename = "real-1ch")]
    Real1ch,
    /// Real network with I and Q as two independent input channels.
    #[serde(rename = "iq-2ch")]
    Iq2ch,
    #[serde(rename = "complex")]
    Complex,
}

impl Arithmetic {
    pub const ALL: [Arithmetic; 3] = [Arithmetic::Real1ch, Arithmetic::Iq2ch, Arithmetic::Complex];

    pub fn name(self) -> &'static str {
        match self {
            Arithmetic::Real1ch => "real-1ch",
            Arithmetic::Iq2ch => "iq-2ch",
            Arithmetic::Complex => "complex",
        }
    }

    pub(crate) fn planes(self) -> usize {
        match self {
            Arithmetic::Complex => 2,
            _ => 1,
        }
    }

    pub(crate) fn input_channels(self) -> usize {
        match self {
            Arithmetic::Iq2ch => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    #[serde(rename = "softmax-ce")]
    SoftmaxCe,
    #[serde(rename = "sigmoid-bce")]
    SigmoidBce,
}

pub const SUPPORTED_DEPTHS: [usize; 5] = [22, 26, 30, 34, 38];

/// Basic blocks in each of the four stages.
pub fn blocks_per_stage(depth: usize) -> Result<[usize; 4]> {
    Ok(match depth {
        22 => [2, 2, 3, 3],
        26 => [3, 3, 3, 3],
        30 => [3, 4, 4, 3],
        34 => [4, 4, 4, 4],
        38 => [4, 5, 5, 4],
        _ => {
            return Err(Error::invalid(format!("unsupported depth {depth}; supported depths are {SUPPORTED_DEPTHS:?}")))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arithmetic: Arithmetic,
    /// Weighted layers on the main path: stem, two per basic block, head.
    pub depth: usize,
    /// Stage-1 channels (complex channels for a complex model).
    pub base_width: usize,
    pub first_kernel: usize,
    pub input_length: usize,
    pub num_classes: usize,
    pub head: Head,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arithmetic: Arithmetic::Complex,
            depth: 30,
            base_width: 8,
            first_kernel: 9,
            input_length: 1024,
            num_classes: 17,
            head: Head::SoftmaxCe,
        }
    }
}

/// Total downsampling of the stem and the three strided stage transitions.
pub const TOTAL_STRIDE: usize = 32;

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        blocks_per_stage(self.depth)?;
        if self.base_width == 0 {
            return Err(Error::invalid("base_width must be at least 1"));
        }
        if self.first_kernel == 0 {
            return Err(Error::invalid("first_kernel must be at least 1"));
        }
        if self.num_classes == 0 {
            return Err(Error::invalid("num_classes must be at least 1"));
        }
        if self.input_length < TOTAL_STRIDE {
            return Err(Error::invalid(format!(
                "input_length {} is shorter than the network's total stride {TOTAL_STRIDE}",
                self.input_length
            )));
        }
        Ok(())
    }

    pub fn stage_widths(&self) -> [usize; 4] {
        let w = self.base_width;
        [w, 2 * w, 4 * w, 8 * w]
    }

    /// Real trainable scalars, summed layer by layer from the configuration
    /// alone.
    pub fn closed_form_parameter_count(&self) -> Result<usize> {
        let blocks = blocks_per_stage(self.depth)?;
        let p = self.arithmetic.planes();
        let conv = |cin: usize, cout: usize, m: usize| p * cin * cout * m;
        let bn = |c: usize| 2 * p * c;
        let widths = self.stage_widths();
        let mut total = conv(self.arithmetic.input_channels(), widths[0], self.first_kernel) + bn(widths[0]);
        let mut cin = widths[0];
        for (s, (&n, &w)) in blocks.iter().zip(&widths).enumerate() {
            for b in 0..n {
                total += conv(cin, w, 3) + bn(w) + conv(w, w, 3) + bn(w);
                if s > 0 && b == 0 {
                    total += conv(cin, w, 1) + bn(w);
                }
                cin = w;
            }
        }
        let features = p * widths[3];
        Ok(total + features * self.num_classes + self.num_classes)
    }
}
