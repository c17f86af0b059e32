use std::fmt;
use std::str::FromStr;

/// Layer sizes and optimizer constants of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub word_dim: usize,
    pub tag_dim: usize,
    pub filters: usize,
    pub filter_len: usize,
    pub pool_size: usize,
    pub recurrent_units: usize,
    /// Hidden width of the MLP ablation.
    pub mlp_hidden: usize,
    pub gamma: f64,
    pub eta: f64,
    pub dropout_rate: f64,
}

impl Hyperparams {
    pub fn lexical() -> Self {
        Hyperparams {
            word_dim: 50,
            tag_dim: 10,
            filters: 100,
            filter_len: 7,
            pool_size: 3,
            recurrent_units: 100,
            mlp_hidden: 100,
            gamma: 0.9,
            eta: 0.001,
            dropout_rate: 0.5,
        }
    }

    pub fn prosodic() -> Self {
        Hyperparams {
            word_dim: 0,
            tag_dim: 0,
            filters: 8,
            filter_len: 5,
            ..Hyperparams::lexical()
        }
    }

    pub fn with_sizes(mut self, filters: usize, recurrent_units: usize) -> Self {
        self.filters = filters;
        self.recurrent_units = recurrent_units;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        let sizes = [self.filters, self.filter_len, self.pool_size, self.recurrent_units, self.mlp_hidden];
        if sizes.contains(&0) {
            return Err(crate::Error::contract("layer sizes must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) || !(self.eta > 0.0) {
            return Err(crate::Error::contract("need 0 < gamma < 1 and eta > 0"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(crate::Error::contract("dropout rate must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Layer stack of a network: the full model or one of its ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// convolution → max-pool → bidirectional LSTM → dropout → softmax
    Rcnn,
    /// per-timestep sigmoid hidden layer → softmax
    Mlp,
    /// convolution → max-pool → dropout → softmax
    Cnn,
    /// bidirectional LSTM → dropout → softmax
    Rnn,
}

impl Variant {
    pub fn code(self) -> u8 {
        match self {
            Variant::Rcnn => 0,
            Variant::Mlp => 1,
            Variant::Cnn => 2,
            Variant::Rnn => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Variant::Rcnn, Variant::Mlp, Variant::Cnn, Variant::Rnn].get(c as usize).copied()
    }

    pub fn has_conv(self) -> bool {
        matches!(self, Variant::Rcnn | Variant::Cnn)
    }

    pub fn has_recurrence(self) -> bool {
        matches!(self, Variant::Rcnn | Variant::Rnn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Rcnn => "rcnn",
            Variant::Mlp => "mlp",
            Variant::Cnn => "cnn",
            Variant::Rnn => "rnn",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rcnn" => Ok(Variant::Rcnn),
            "mlp" => Ok(Variant::Mlp),
            "cnn" => Ok(Variant::Cnn),
            "rnn" => Ok(Variant::Rnn),
            other => Err(format!("unknown variant {other:?} (expected rcnn, mlp, cnn or rnn)")),
        }
    }
}

/// Which inputs feed the models: word embeddings and PoS tags go to the lexical
/// network, prosody to the prosodic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSet {
    pub embeddings: bool,
    pub pos: bool,
    pub prosody: bool,
}

impl FeatureSet {
    pub const ALL: FeatureSet = FeatureSet {
        embeddings: true,
        pos: true,
        prosody: true,
    };
    pub const EMBEDDINGS: FeatureSet = FeatureSet {
        embeddings: true,
        pos: false,
        prosody: false,
    };
    pub const LEXICAL: FeatureSet = FeatureSet {
        embeddings: true,
        pos: true,
        prosody: false,
    };
    pub const PROSODY: FeatureSet = FeatureSet {
        embeddings: false,
        pos: false,
        prosody: true,
    };

    pub fn lexical(self) -> bool {
        self.embeddings || self.pos
    }

    pub fn bits(self) -> u8 {
        self.embeddings as u8 | (self.pos as u8) << 1 | (self.prosody as u8) << 2
    }

    pub fn from_bits(b: u8) -> Option<Self> {
        let f = FeatureSet {
            embeddings: b & 1 != 0,
            pos: b & 2 != 0,
            prosody: b & 4 != 0,
        };
        (b < 8 && b != 0).then_some(f)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == FeatureSet::ALL {
            return f.write_str("all");
        }
        let mut parts = Vec::new();
        if self.embeddings {
            parts.push("embeddings");
        }
        if self.pos {
            parts.push("pos");
        }
        if self.prosody {
            parts.push("prosody");
        }
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    /// `all`, or `+`-joined names from `embeddings`, `pos`, `prosody`.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(FeatureSet::ALL);
        }
        let mut f = FeatureSet {
            embeddings: false,
            pos: false,
            prosody: false,
        };
        for part in s.split('+') {
            match part.trim() {
                "embeddings" | "emb" => f.embeddings = true,
                "pos" => f.pos = true,
                "prosody" => f.prosody = true,
                other => return Err(format!("unknown feature {other:?} (expected embeddings, pos, prosody or all)")),
            }
        }
        Ok(f)
    }
}
