//! Dense kernels, layers with hand-derived gradients, and the RMSProp optimizer.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod init;
pub mod loss;
pub mod lstm;
pub mod matrix;
pub mod optim;

pub use activation::{sigmoid, Activation};
pub use conv::{conv1d_same_forward, maxpool1d_backward, maxpool1d_same, Conv1d, Pooled};
pub use dense::{dense_forward, Dense};
pub use dropout::{dropout_apply, dropout_backward, Mode};
pub use init::glorot_init;
pub use loss::{softmax, softmax_rows, weighted_cross_entropy, LOG_CLAMP};
pub use lstm::{bilstm_forward, lstm_cell_step, BiLstm, BiLstmTrace, Lstm, LstmTrace};
pub use matrix::Matrix;
pub use optim::{rmsprop_update, RmsPropState, RMSPROP_EPSILON};
