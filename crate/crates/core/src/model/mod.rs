//! Neural classifier: LSTM encoder (optionally bi-directional), dense
//! softmax head, sparse categorical cross-entropy, backpropagation through
//! time, Adam and a finite-difference gradient checker.
//!
//! All arithmetic is `f64`.

mod adam;
mod classifier;
mod gradcheck;
mod lstm;

pub use adam::{adam_step, AdamState};
pub use classifier::{
    backward, dense_softmax, encode_sequence, forward_batch, init_params, mean_loss, sparse_cce,
    Batch, BatchOutput, ClassifierParams, ClassifierShape, ForwardCache, NUM_CLASSES,
};
pub use gradcheck::{compare_gradients, grad_check, REL_ERROR_FLOOR};
pub use lstm::{lstm_cell_forward, CellCache, Gate, LstmParams};

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
