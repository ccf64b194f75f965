//! Peephole LSTM classifier with hand-derived backpropagation through time.

mod activation;
mod gradcheck;
mod layers;
mod lstm;
mod model;

pub use activation::{sigmoid, tanh_act};
pub use gradcheck::{comparison_error, gradient_check, CoordinateCheck, GradCheckOptions, GradCheckReport};
pub use layers::{
    average_pool, cross_entropy, dense_forward, logits, nll_from_logits, softmax, softmax_hypothesis, DenseParams,
    SoftmaxParams, PROBABILITY_FLOOR,
};
pub use lstm::{lstm_forward, lstm_step, LstmForward, LstmParams, LstmStepCache};
pub use model::{
    argmax, forward_segments, loss_and_gradient, model_backward, model_forward, predict, ForwardTrace, ModelDims,
    ModelParams, NUM_TENSORS, TENSOR_NAMES,
};
