//! Lexical and prosodic networks, their ablation variants, probability fusion,
//! and the model file.

mod fusion;
mod hyper;
mod network;
mod persist;
mod segmenter;

pub use fusion::{decide, fuse, Fused};
pub use hyper::{FeatureSet, Hyperparams, Variant};
pub use network::{one_hot, ForwardTrace, InputLayer, LayerGradients, Network, SequenceInput};
pub use persist::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use segmenter::{LexicalModel, ModelOutputs, ProsodicModel, TrainedSegmenter};
